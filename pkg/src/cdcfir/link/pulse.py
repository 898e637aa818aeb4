"""Root-raised-cosine pulse shaping and rational-rate polyphase resampling."""

import math
from math import gcd

import numpy as np
from scipy import signal


def rrc_taps(rolloff: float, span: int, sps: int) -> np.ndarray:
    """
    Unit-energy root-raised-cosine filter.

    ``span`` symbols long at ``sps`` samples per symbol, ``span * sps + 1``
    taps, even-symmetric about the centre tap. For a rational rate ``p/q``
    design at ``sps = p`` and decimate by ``q`` (see :func:`pulse_shape`).
    """
    if not 0 < rolloff <= 1:
        raise ValueError("rolloff must lie in (0, 1]")
    if span < 1 or sps < 1:
        raise ValueError("span and sps must be positive")
    half = span * sps // 2
    t = np.arange(-half, span * sps - half + 1) / sps
    b = rolloff
    h = np.empty_like(t)
    centre = t == 0
    singular = np.isclose(np.abs(4 * b * t), 1.0)
    regular = ~(centre | singular)
    tr = t[regular]
    h[regular] = (np.sin(math.pi * tr * (1 - b)) + 4 * b * tr * np.cos(math.pi * tr * (1 + b))) / (
        math.pi * tr * (1 - (4 * b * tr) ** 2)
    )
    h[centre] = 1 - b + 4 * b / math.pi
    h[singular] = b / math.sqrt(2) * (
        (1 + 2 / math.pi) * math.sin(math.pi / (4 * b)) + (1 - 2 / math.pi) * math.cos(math.pi / (4 * b))
    )
    return h / np.linalg.norm(h)


def pulse_shape(symbols, rolloff: float, span: int, p: int, q: int) -> np.ndarray:
    """
    RRC pulse shaping straight to ``p/q`` samples per symbol.

    Polyphase: upsample by ``p`` against an RRC designed at ``p`` samples
    per symbol, keep every ``q``-th sample. Symbol ``k`` peaks at fine-grid
    index ``p*k + span*p/2``.
    """
    return signal.upfirdn(rrc_taps(rolloff, span, p), np.asarray(symbols, dtype=complex), up=p, down=q)


def matched_decimate(x, rolloff: float, span: int, p: int, q: int) -> np.ndarray:
    """
    Matched RRC filter and decimation from ``p/q`` to one sample per symbol.

    Interpolates by ``q`` through the same RRC (which also rejects the
    images, as ``p/q > 1 + rolloff`` leaves a guard band) and keeps every
    ``p``-th sample. After :func:`pulse_shape`, symbol ``k`` lands at output
    index ``k + span``.
    """
    h = q * rrc_taps(rolloff, span, p)
    return signal.upfirdn(h, np.asarray(x, dtype=complex), up=q, down=p)


def antialias_prototype(p: int, q: int, attenuation_db: float = 80.0, transition: float = 0.1) -> np.ndarray:
    """
    Kaiser lowpass prototype for :func:`rational_resample`.

    Cut-off at half the slower of the two rates, with a transition band of
    ``transition`` times that rate centred on the cut-off.
    """
    slow = min(1.0, p / q)  # slower rate, in units of the input rate
    nyq_up = p / 2          # Nyquist of the upsampled grid
    numtaps, beta = signal.kaiserord(attenuation_db, transition * slow / nyq_up)
    numtaps |= 1
    return signal.firwin(numtaps, (slow / 2) / nyq_up, window=("kaiser", beta))


def rational_resample(x, p: int, q: int, taps=None) -> np.ndarray:
    """
    Resample ``x`` by ``p/q`` with a polyphase FIR, delay-compensated.

    ``taps`` defaults to :func:`antialias_prototype`. ``p == q == 1``
    returns a copy of the input.
    """
    if p < 1 or q < 1 or gcd(p, q) != 1:
        raise ValueError("p and q must be coprime positive integers")
    x = np.asarray(x)
    if p == q == 1:
        return x.copy()
    if taps is None:
        taps = antialias_prototype(p, q)
    return signal.resample_poly(x, p, q, window=np.asarray(taps, dtype=float))
