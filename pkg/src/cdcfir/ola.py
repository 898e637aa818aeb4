"""
Overlap-save block convolution with full-length (time-varying) responses.

Each block forms an ``N``-sample window from the previous ``N - M`` inputs
and ``M`` new ones, multiplies its DFT by the DFT of the (zero-extended)
length-``N`` tap vector ``h``, and keeps the last ``M`` samples of the
inverse DFT.

Output indexing: if the newest sample of a block is at time ``t``, the
output at time ``t - m`` (``m = 0..M-1``) is produced by the circularly
shifted response ``roll(h, m)``::

    y(t - m) = sum_i roll(h, m)[i] * x(t - i),    i = 0..N-1

When ``h`` has at most ``N - M + 1`` non-zero leading taps every shift
gives the same linear FIR, and the engine is exact linear convolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .design import TapVector


class OlaConfigError(ValueError):
    pass


def _check_length(n: int):
    if n < 1:
        raise OlaConfigError(f"unsupported DFT length {n}")


def dft_forward(x) -> np.ndarray:
    """Unnormalized forward DFT (numpy/pocketfft; any length >= 1)."""
    x = np.asarray(x, dtype=complex)
    _check_length(x.shape[-1])
    return np.fft.fft(x)


def dft_inverse(x) -> np.ndarray:
    """Inverse of :func:`dft_forward` (carries the ``1/N`` factor)."""
    x = np.asarray(x, dtype=complex)
    _check_length(x.shape[-1])
    return np.fft.ifft(x)


@dataclass(frozen=True)
class OlaConfig:
    fft_size: int
    block_size: int

    def __post_init__(self):
        _check_length(self.fft_size)
        if not (1 <= self.block_size <= self.fft_size):
            raise OlaConfigError(
                f"need 1 <= M <= N, got N={self.fft_size}, M={self.block_size}"
            )

    @property
    def history(self) -> int:
        return self.fft_size - self.block_size

    @property
    def warmup(self) -> int:
        """Leading outputs that depend on the zero-seeded history."""
        return self.fft_size - self.block_size


def _tap_array(taps, n: int) -> np.ndarray:
    arr = taps.taps if isinstance(taps, TapVector) else np.asarray(taps, dtype=complex).ravel()
    if arr.size > n:
        raise OlaConfigError(f"{arr.size} taps do not fit a {n}-point DFT")
    full = np.zeros(n, dtype=complex)
    full[: arr.size] = arr
    return full


class OverlapSave:
    """
    Streaming overlap-save filter.

    Single-owner state: the history buffer and the sample counter advance by
    exactly ``M`` per :meth:`process_block` call.
    """

    def __init__(self, taps, config: OlaConfig):
        self.config = config
        self.h_dft = dft_forward(_tap_array(taps, config.fft_size))
        self.reset()

    def reset(self):
        self.history = np.zeros(self.config.history, dtype=complex)
        self.count = 0

    def process_block(self, x_block) -> np.ndarray:
        x_block = np.asarray(x_block, dtype=complex)
        m_blk = self.config.block_size
        if x_block.shape != (m_blk,):
            raise ValueError(f"expected a block of {m_blk} samples, got shape {x_block.shape}")
        window = np.concatenate([self.history, x_block])
        out = dft_inverse(dft_forward(window) * self.h_dft)[-m_blk:]
        if self.config.history:
            self.history = window[-self.config.history :]
        self.count += m_blk
        return out

    def process(self, x) -> np.ndarray:
        """Filter any multiple of ``M`` samples, continuing from the current state."""
        x = np.asarray(x, dtype=complex)
        m_blk = self.config.block_size
        if x.size % m_blk:
            raise ValueError(f"signal length {x.size} is not a multiple of M={m_blk}")
        if x.size == 0:
            return x.copy()
        y = _filter_blocks(self.h_dft, np.concatenate([self.history, x]), self.config)
        if self.config.history:
            self.history = np.concatenate([self.history, x])[-self.config.history :]
        self.count += x.size
        return y


# blocks transformed per FFT batch; keeps the window copy bounded
_BATCH_SAMPLES = 1 << 21


def _filter_blocks(h_dft: np.ndarray, xp: np.ndarray, config: OlaConfig) -> np.ndarray:
    n, m_blk = config.fft_size, config.block_size
    windows = sliding_window_view(xp, n)[::m_blk]
    per_batch = max(1, _BATCH_SAMPLES // n)
    out = []
    for start in range(0, windows.shape[0], per_batch):
        spec = dft_forward(windows[start : start + per_batch])
        out.append(dft_inverse(spec * h_dft)[:, n - m_blk :])
    return np.concatenate(out).ravel()


def ola_filter_stream(taps, config: OlaConfig, x) -> np.ndarray:
    """
    Overlap-save filter a whole signal starting from zero history.

    ``len(x)`` must be a multiple of ``M``; pad with :func:`pad_to_block`
    first. ``y[k]`` is aligned with ``x[k]`` (any filter delay is carried by
    the taps). The first ``N - M`` outputs see the zero-seeded history; with
    full-length taps they differ from the steady-state response.
    """
    return OverlapSave(taps, config).process(x)


def pad_to_block(x, block_size: int, extra: int = 0) -> np.ndarray:
    """Append zeros so ``len(x) + extra`` is rounded up to a multiple of ``block_size``."""
    x = np.asarray(x, dtype=complex)
    total = -(-(x.size + extra) // block_size) * block_size
    return np.concatenate([x, np.zeros(total - x.size, dtype=complex)])
