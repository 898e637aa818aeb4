"""Gray-labelled square 16-QAM with unit average symbol energy."""

import math

import numpy as np
from scipy import special

BITS_PER_SYMBOL = 4
_SCALE = 1 / math.sqrt(10)
# Gray labels per rail: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
_LEVEL = np.array([-3, -1, 3, 1], dtype=float)


def qam16_map(bits) -> np.ndarray:
    """Map groups of 4 bits (I MSB, I LSB, Q MSB, Q LSB) to symbols."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % BITS_PER_SYMBOL:
        raise ValueError("bit count must be a multiple of 4")
    b = bits.reshape(-1, 4)
    i = _LEVEL[2 * b[:, 0] + b[:, 1]]
    q = _LEVEL[2 * b[:, 2] + b[:, 3]]
    return _SCALE * (i + 1j * q)


def _rail_bits(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # thresholds at 0 and +-2 (in units of the rail spacing) give the
    # minimum-distance decision for each Gray-labelled rail
    msb = (v > 0).astype(np.uint8)
    lsb = (np.abs(v) < 2).astype(np.uint8)
    return msb, lsb


def qam16_demap(symbols) -> np.ndarray:
    """Hard minimum-distance decisions back to bits."""
    s = np.asarray(symbols, dtype=complex).ravel() / _SCALE
    i_msb, i_lsb = _rail_bits(s.real)
    q_msb, q_lsb = _rail_bits(s.imag)
    return np.stack([i_msb, i_lsb, q_msb, q_lsb], axis=1).ravel()


def constellation() -> np.ndarray:
    """The 16 points, indexed by the integer label b0 b1 b2 b3 (b0 = MSB)."""
    labels = (np.arange(16)[:, None] >> np.arange(3, -1, -1)) & 1
    return qam16_map(labels.ravel())


def theoretical_ber_16qam(ebn0_db):
    """
    Exact Gray-coded 16-QAM bit error rate in AWGN.

    Per rail the sign bit errs with ``(Q(a) + Q(3a))/2`` and the inner/outer
    bit with ``(2Q(a) + Q(3a) - Q(5a))/2``, where ``a = sqrt(0.8 Eb/N0)``.
    """
    ebn0 = 10 ** (np.asarray(ebn0_db, dtype=float) / 10)
    a = np.sqrt(0.8 * ebn0)

    def qfunc(x):
        return 0.5 * special.erfc(x / math.sqrt(2))

    ber = (3 * qfunc(a) + 2 * qfunc(3 * a) - qfunc(5 * a)) / 4
    return float(ber) if ber.ndim == 0 else ber
