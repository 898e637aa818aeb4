"""Coherent 16-QAM link simulator around the CDC filters."""

from .channel import awgn, cd_channel, cd_inverse
from .pulse import matched_decimate, pulse_shape, rational_resample, rrc_taps
from .qam import qam16_demap, qam16_map, theoretical_ber_16qam
from .simulate import (
    AlignmentError,
    BerPoint,
    CdcConfig,
    LinkConfig,
    LinkConfigError,
    SweepPoint,
    ber_sweep,
    run_link,
    sweep_csv,
)

__all__ = [
    "AlignmentError", "BerPoint", "CdcConfig", "LinkConfig", "LinkConfigError", "SweepPoint",
    "awgn", "ber_sweep", "cd_channel", "cd_inverse", "matched_decimate", "pulse_shape",
    "qam16_demap", "qam16_map", "rational_resample", "rrc_taps", "run_link", "sweep_csv",
    "theoretical_ber_16qam",
]
