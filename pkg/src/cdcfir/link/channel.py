"""Chromatic dispersion channel and AWGN loading."""

import math

import numpy as np


def dft_frequencies(n: int) -> np.ndarray:
    """Digital frequencies ``omega*T`` of an ``n``-point DFT, in ``[-pi, pi)``."""
    return 2 * math.pi * np.fft.fftfreq(n)


def cd_channel(x, k: float) -> np.ndarray:
    """
    Apply ``exp(-j K (omega T)^2)`` by one full-length DFT.

    The product is circular, so the first and last few ``2 pi K`` samples
    are contaminated by wrap-around and must be discarded downstream.
    """
    x = np.asarray(x, dtype=complex)
    if x.size < 2:
        raise ValueError("cd_channel needs at least 2 samples")
    if k == 0:
        return x.copy()
    w = dft_frequencies(x.size)
    return np.fft.ifft(np.fft.fft(x) * np.exp(-1j * k * w**2))


def cd_inverse(x, k: float) -> np.ndarray:
    """Exact inverse of :func:`cd_channel` on the same DFT grid."""
    return cd_channel(x, -k)


def awgn(x, ebn0_db, samples_per_symbol: float, rng, bits_per_symbol: int = 4) -> np.ndarray:
    """
    Add circular complex Gaussian noise for a target Eb/N0.

    The noise variance per sample is ``P * sps / (bits_per_symbol * Eb/N0)``
    with ``P`` the measured mean power of ``x``; after a unit-energy matched
    filter at one sample per symbol this gives exactly the requested Eb/N0.
    ``ebn0_db`` of ``None`` or ``+inf`` returns the signal unchanged.
    """
    x = np.asarray(x, dtype=complex)
    if ebn0_db is None or ebn0_db == math.inf:
        return x.copy()
    power = float(np.mean(np.abs(x) ** 2))
    if not (math.isfinite(power) and power > 0):
        raise ValueError("signal power must be finite and positive")
    esn0 = bits_per_symbol * 10 ** (ebn0_db / 10)
    sigma = math.sqrt(power * samples_per_symbol / esn0 / 2)
    rng = np.random.default_rng(rng)
    noise = rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
    return x + sigma * noise
