"""Least-squares CDC FIR filter design for overlap-save realizations."""

from .design import (
    DesignError,
    DesignSpec,
    FiberParams,
    Method,
    TapVector,
    cyclic_shift,
    design_filter,
    dispersion_constant,
    estimate_length,
    frequency_response,
    gram_matrix,
    ideal_tap,
    overlap_save_design,
    rhs_vector,
    time_domain_design,
    total_ls_error,
)
from .ola import OlaConfig, OverlapSave, ola_filter_stream
from .specfun import erf_complex

__version__ = "0.1.0"
