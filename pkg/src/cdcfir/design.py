"""
Chromatic dispersion model and CDC FIR filter design.

Two least-squares designs are provided:

* :func:`time_domain_design` -- the classic length-``L`` LS filter, which an
  overlap-save realization zero-extends to the DFT length ``N = L + M - 1``.
* :func:`overlap_save_design` -- a length-``N`` filter whose ``M - 1`` tail
  taps (zero in the classic realization) are chosen to minimize the summed
  LS error of the ``M`` circularly shifted impulse responses that the
  overlap-save engine actually applies to its outputs.

Both realize with the same ``N``-point DFTs, so their complexity is equal.

Conventions
-----------
Digital frequency ``x = omega*T`` in ``[-pi, pi]``. The filter response is
``H(x) = sum_l h_l exp(-j l x)`` and the target for a filter with centre
index ``c = (L - 1)/2`` is ``exp(j K x**2) exp(-j c x)`` over the symmetric
band ``|x| <= omega``. The LS-optimal tap at lag ``d`` from the centre is the
band integral ``D(d) = 1/(2 pi) int_{-omega}^{omega} exp(j K x**2 + j d x) dx``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.constants
import scipy.linalg
from numpy.typing import ArrayLike

from .specfun import erf_complex

SPEED_OF_LIGHT = scipy.constants.c

# Defaults reproducing the 60 GBd, 8/7-oversampled operating point.
DEFAULT_DISPERSION_PS_NM_KM = 17.0
DEFAULT_WAVELENGTH_M = 1550e-9
DEFAULT_BAUD_RATE = 60e9
DEFAULT_OVERSAMPLING = (8, 7)
DEFAULT_SAMPLE_PERIOD = DEFAULT_OVERSAMPLING[1] / (DEFAULT_OVERSAMPLING[0] * DEFAULT_BAUD_RATE)

# Relative normal-equation residual above which a solve is reported as failed.
_SOLVE_RTOL = 1e-6


class DesignError(RuntimeError):
    """A least-squares design could not be solved to the required accuracy."""

    def __init__(self, message: str, condition: float | None = None):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class Method(str, enum.Enum):
    TIME_DOMAIN = "time-domain"
    OVERLAP_SAVE = "overlap-save"

    @classmethod
    def parse(cls, name: str | Method) -> Method:
        if isinstance(name, Method):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "time-domain": cls.TIME_DOMAIN,
            "td": cls.TIME_DOMAIN,
            "timedomainls": cls.TIME_DOMAIN,
            "overlap-save": cls.OVERLAP_SAVE,
            "proposed": cls.OVERLAP_SAVE,
            "ols": cls.OVERLAP_SAVE,
            "overlapsavels": cls.OVERLAP_SAVE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown design method {name!r}") from None


@dataclass(frozen=True)
class FiberParams:
    """
    Fiber and sampling constants, in SI units.

    ``dispersion`` is in s/m**2 (17 ps/(nm km) == 17e-6 s/m**2). Use
    :meth:`from_engineering` to build from the usual engineering units.
    """

    dispersion: float = DEFAULT_DISPERSION_PS_NM_KM * 1e-6
    wavelength: float = DEFAULT_WAVELENGTH_M
    length: float = 0.0
    sample_period: float = DEFAULT_SAMPLE_PERIOD

    def __post_init__(self):
        for name in ("dispersion", "wavelength", "sample_period"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"FiberParams.{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.length) and self.length >= 0):
            raise ValueError(f"FiberParams.length must be finite and >= 0, got {self.length!r}")

    @classmethod
    def from_engineering(
        cls,
        dispersion_ps_nm_km: float = DEFAULT_DISPERSION_PS_NM_KM,
        wavelength_nm: float = DEFAULT_WAVELENGTH_M * 1e9,
        length_km: float = 0.0,
        sample_rate_hz: float = 1.0 / DEFAULT_SAMPLE_PERIOD,
    ) -> FiberParams:
        return cls(
            dispersion=dispersion_ps_nm_km * 1e-6,
            wavelength=wavelength_nm * 1e-9,
            length=length_km * 1e3,
            sample_period=1.0 / sample_rate_hz,
        )

    def with_length(self, length: float) -> FiberParams:
        return replace(self, length=length)


def dispersion_constant(p: FiberParams) -> float:
    """Dimensionless dispersion constant ``K = D lambda^2 z / (4 pi c T^2)``."""
    k = p.dispersion * p.wavelength**2 * p.length / (4 * math.pi * SPEED_OF_LIGHT * p.sample_period**2)
    if not math.isfinite(k):
        raise ValueError("dispersion constant is not finite for the given parameters")
    return k


def estimate_length(k: float) -> int:
    """Estimated CDC filter length ``2 floor(2 pi K) + 1`` (always odd)."""
    if not k >= 0:
        raise ValueError(f"K must be >= 0, got {k!r}")
    return 2 * math.floor(2 * math.pi * k) + 1


def length_limit(taps: int, p: FiberParams) -> float:
    """
    Fiber length in metres at which :func:`estimate_length` reaches ``taps``.

    This inverts ``L = 4 pi K + 1`` (the estimate without the floor), i.e.
    the longest fiber a length-``taps`` filter is nominally rated for.
    """
    if taps < 1 or taps % 2 == 0:
        raise ValueError("taps must be a positive odd integer")
    k = (taps - 1) / (4 * math.pi)
    return k * 4 * math.pi * SPEED_OF_LIGHT * p.sample_period**2 / (p.dispersion * p.wavelength**2)


def _check_omega(omega: float) -> float:
    omega = float(omega)
    if not (0 < omega <= math.pi * (1 + 1e-15)):
        raise ValueError(f"bandwidth omega must lie in (0, pi], got {omega!r}")
    return min(omega, math.pi)


def ideal_tap(d: ArrayLike, k: float, omega: float = math.pi) -> np.ndarray | complex:
    """
    Least-squares optimal tap at lag ``d`` for the target ``exp(j K x^2)``.

    Closed form of ``1/(2 pi) int_{-omega}^{omega} exp(j K x^2 + j d x) dx``::

        exp(-j(d^2/4K + 3pi/4)) / (4 sqrt(pi K))
            * [erf(e^{j3pi/4} (2K omega - d) / (2 sqrt K))
               + erf(e^{j3pi/4} (2K omega + d) / (2 sqrt K))]

    ``D`` is even in ``d``. The expression is singular at ``K = 0``; callers
    wanting the ``K -> 0`` limit (a unit impulse) must special-case it.
    """
    if not k > 0:
        raise ValueError(f"ideal_tap requires K > 0, got {k!r}")
    omega = _check_omega(omega)
    d = np.asarray(d, dtype=float)
    rot = np.exp(0.75j * math.pi)
    scale = 2 * math.sqrt(k)
    prefactor = np.exp(-1j * (d**2 / (4 * k) + 0.75 * math.pi)) / (4 * math.sqrt(math.pi * k))
    edge = 2 * k * omega
    value = prefactor * (erf_complex(rot * (edge - d) / scale) + erf_complex(rot * (edge + d) / scale))
    if value.ndim == 0:
        return complex(value)
    return value


def gram_row(n: int, omega: float = math.pi) -> np.ndarray:
    """First row of the band Gram matrix: ``sin(omega p)/(pi p)``, ``omega/pi`` at ``p = 0``."""
    omega = _check_omega(omega)
    if n < 1:
        raise ValueError("Gram matrix size must be >= 1")
    return _gram_entry(np.arange(n), omega)


def _gram_entry(p: np.ndarray, omega: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.empty_like(p)
    zero = p == 0
    out[zero] = omega / math.pi
    pz = p[~zero]
    out[~zero] = np.sin(omega * pz) / (math.pi * pz)
    if omega == math.pi:
        # sin(pi p) is exactly zero for integer p
        out[~zero] = 0.0
    return out


def gram_matrix(n: int, omega: float = math.pi) -> np.ndarray:
    """Symmetric Toeplitz ``n x n`` Gram matrix of ``exp(-j l x)`` over ``|x| <= omega``."""
    return scipy.linalg.toeplitz(gram_row(n, omega))


@dataclass(frozen=True)
class DesignSpec:
    """
    Overlap-save block geometry and design options.

    The nominal (zero-padding) filter length is ``L = N - M + 1`` and must be
    odd so the filter has an integer centre ``(L - 1)/2``.
    """

    fft_size: int
    block_size: int
    omega: float = math.pi
    method: Method = Method.OVERLAP_SAVE

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        object.__setattr__(self, "omega", _check_omega(self.omega))
        if not (1 <= self.block_size <= self.fft_size):
            raise ValueError(f"need 1 <= M <= N, got N={self.fft_size}, M={self.block_size}")
        if self.length % 2 == 0:
            raise ValueError(f"N - M + 1 = {self.length} must be odd")

    @property
    def length(self) -> int:
        return self.fft_size - self.block_size + 1

    @property
    def center(self) -> int:
        return (self.length - 1) // 2


@dataclass
class TapVector:
    """
    Complex FIR impulse response plus the metadata needed to interpret it.

    ``center`` is the index of the tap aligned with lag 0 of the target, so
    the filter delay is ``center`` samples.
    """

    taps: np.ndarray
    center: int
    method: str | None = None
    k: float | None = None
    omega: float = math.pi
    fft_size: int | None = None
    block_size: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=complex).ravel()
        if self.taps.size < 1:
            raise ValueError("TapVector needs at least one tap")
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("TapVector entries must be finite")

    def __len__(self):
        return self.taps.size

    @property
    def nominal_length(self) -> int:
        if self.fft_size is not None and self.block_size is not None:
            return self.fft_size - self.block_size + 1
        return self.taps.size

    def zero_padded(self, n: int) -> TapVector:
        if n < self.taps.size:
            raise ValueError(f"cannot zero-pad {self.taps.size} taps to {n}")
        taps = np.zeros(n, dtype=complex)
        taps[: self.taps.size] = self.taps
        return replace(self, taps=taps)


def identity_filter(length: int = 1, center: int | None = None) -> TapVector:
    """Unit impulse at ``center``; the exact CDC filter when ``K = 0``."""
    if center is None:
        center = (length - 1) // 2
    taps = np.zeros(length, dtype=complex)
    taps[center] = 1.0
    return TapVector(taps, center, method="identity", k=0.0)


def cyclic_shift(h, m: int):
    """Rotate ``h`` by ``m`` places: output ``i`` holds input ``(i - m) mod N``."""
    if isinstance(h, TapVector):
        return replace(h, taps=np.roll(h.taps, m))
    return np.roll(np.asarray(h), m)


def rhs_vector(m: int, spec: DesignSpec, k: float) -> np.ndarray:
    """Target taps ``D(i - (L-1)/2 - m)``, ``i = 0..N-1``, for output shift ``m``."""
    if not (0 <= m < spec.block_size):
        raise ValueError(f"shift index must lie in [0, {spec.block_size - 1}]")
    lags = np.arange(spec.fft_size) - spec.center - m
    return ideal_tap(lags, k, spec.omega)


def _ls_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # SVD-based least squares; avoids forming an explicit inverse of a
    # matrix that is nearly singular for narrow bands.
    x, _, rank, sv = scipy.linalg.lstsq(a, b, lapack_driver="gelsd")
    residual = np.linalg.norm(a @ x - b) / max(np.linalg.norm(b), np.finfo(float).tiny)
    if not np.all(np.isfinite(x)) or residual > _SOLVE_RTOL:
        cond = sv[0] / sv[-1] if sv[-1] > 0 else math.inf
        raise DesignError(f"least-squares solve failed, relative residual {residual:.3e}", cond)
    return x


def _reflect(h: np.ndarray, length: int) -> np.ndarray:
    # i -> (L - 1 - i) mod N leaves both R and e invariant, so the optimum
    # is a fixed point; averaging removes round-off in near-null directions.
    idx = (length - 1 - np.arange(h.size)) % h.size
    return 0.5 * (h + h[idx])


def time_domain_design(length: int, k: float, omega: float = math.pi) -> TapVector:
    """
    Classic length-``L`` least-squares CDC filter.

    Solves ``Q h = d`` with ``d_i = D(i - (L-1)/2)``; at full band ``Q = I`` and
    the taps are the ideal values themselves.
    """
    if length < 1 or length % 2 == 0:
        raise ValueError(f"filter length must be a positive odd integer, got {length}")
    omega = _check_omega(omega)
    center = (length - 1) // 2
    d = ideal_tap(np.arange(length) - center, k, omega)
    d = np.atleast_1d(d)
    if omega == math.pi:
        taps = d
    else:
        taps = _reflect(_ls_solve(gram_matrix(length, omega), d), length)
    return TapVector(taps, center, method=Method.TIME_DOMAIN.value, k=k, omega=omega)


def normal_equations(spec: DesignSpec, k: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Joint normal equations ``R h = e`` over all ``M`` output shifts.

    ``R = sum_m S_m^T Q S_m`` and ``e = sum_m S_m^T d_m`` are assembled in
    ``O(N^2)`` from the count of shifts for which each index wraps around:
    index ``a`` wraps for the last ``w_a = max(0, a - (N - M))`` shifts.
    """
    n, m_blk, c = spec.fft_size, spec.block_size, spec.center
    a = np.arange(n)
    wraps = np.maximum(0, a - (n - m_blk))
    dw = wraps[:, None] - wraps[None, :]
    diff = a[:, None] - a[None, :]
    q = lambda p: _gram_entry(p, spec.omega)  # noqa: E731
    r = (
        q(diff) * (m_blk - np.abs(dw))
        + q(diff - n) * np.maximum(dw, 0)
        + q(diff + n) * np.maximum(-dw, 0)
    )
    e = (m_blk - wraps) * ideal_tap(a - c, k, spec.omega) + wraps * ideal_tap(a - n - c, k, spec.omega)
    return r, e


def overlap_save_design(spec: DesignSpec, k: float) -> TapVector:
    """
    Length-``N`` CDC filter optimal jointly over all overlap-save outputs.

    At full band the solution is closed form, ``h = [f; g]`` with
    ``f_i = D(i - (L-1)/2)`` (the time-domain taps) and, for ``k = 1..M-1``::

        g_k = ((M - k) D((L-1)/2 + k) + k D(-(L-1)/2 - M + k)) / M

    For ``omega < pi`` the normal equations are solved by SVD least squares.
    """
    n, m_blk, c, length = spec.fft_size, spec.block_size, spec.center, spec.length
    meta = dict(
        method=Method.OVERLAP_SAVE.value, k=k, omega=spec.omega, fft_size=n, block_size=m_blk
    )
    if spec.omega == math.pi:
        f = np.atleast_1d(ideal_tap(np.arange(length) - c, k))
        j = np.arange(1, m_blk)
        g = ((m_blk - j) * ideal_tap(c + j, k) + j * ideal_tap(-c - m_blk + j, k)) / m_blk
        return TapVector(np.concatenate([f, np.atleast_1d(g)]), c, **meta)
    r, e = normal_equations(spec, k)
    return TapVector(_reflect(_ls_solve(r, e), length), c, **meta)


def design_filter(spec: DesignSpec, k: float) -> TapVector:
    """
    Design by ``spec.method``; the result always has ``spec.fft_size`` taps.

    ``K = 0`` returns the identity filter (unit tap at the centre) for either
    method, since the closed-form taps are undefined there.
    """
    if k == 0:
        tv = identity_filter(spec.length).zero_padded(spec.fft_size)
        return replace(tv, method=spec.method.value, fft_size=spec.fft_size, block_size=spec.block_size)
    if spec.method is Method.TIME_DOMAIN:
        tv = time_domain_design(spec.length, k, spec.omega).zero_padded(spec.fft_size)
        return replace(tv, fft_size=spec.fft_size, block_size=spec.block_size)
    return overlap_save_design(spec, k)


def frequency_response(h, grid: ArrayLike) -> np.ndarray:
    """``H(x) = sum_l h_l exp(-j l x)`` evaluated at each frequency in ``grid``."""
    taps = h.taps if isinstance(h, TapVector) else np.asarray(h, dtype=complex)
    x = np.asarray(grid, dtype=float)
    return np.exp(-1j * np.multiply.outer(x, np.arange(taps.size))) @ taps


_PANEL_ORDER = 32


def quadrature_nodes(k: float, n_taps: int, omega: float) -> int:
    """Node count used by :func:`total_ls_error` (at least ``16 N``)."""
    return max(16 * n_taps, int(4 * (n_taps + 2 * k * omega)) + 64)


@functools.lru_cache(maxsize=32)
def _composite_gauss(nodes: int, omega: float) -> tuple[np.ndarray, np.ndarray]:
    # composite 32-point Gauss-Legendre over [-omega, omega]
    panels = max(1, -(-nodes // _PANEL_ORDER))
    x0, w0 = np.polynomial.legendre.leggauss(_PANEL_ORDER)
    edges = np.linspace(-omega, omega, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


def total_ls_error(h, spec: DesignSpec, k: float, nodes: int | None = None) -> float:
    """
    Summed LS approximation error over the ``M`` overlap-save outputs.

    ``sum_m 1/(2 pi) int_{-omega}^{omega} |H_m(x) - exp(j K x^2) exp(-j (c + m) x)|^2 dx``
    where ``H_m`` is the response of ``cyclic_shift(h, m)``. The integral is
    evaluated with composite 32-point Gauss-Legendre quadrature on at least
    ``nodes`` points (default :func:`quadrature_nodes`, ``>= 16 N``); the
    integrand is entire and each panel spans at most a couple of its
    oscillations, so the rule is accurate to rounding.
    """
    taps = h.taps if isinstance(h, TapVector) else np.asarray(h, dtype=complex)
    n, m_blk, c = spec.fft_size, spec.block_size, spec.center
    if taps.size != n:
        raise ValueError(f"expected {n} taps, got {taps.size}")
    omega = spec.omega
    if nodes is None:
        nodes = quadrature_nodes(k, n, omega)
    x, w = _composite_gauss(nodes, omega)
    basis = np.exp(-1j * np.outer(x, np.arange(n)))
    target = np.exp(1j * k * x**2)
    total = 0.0
    # chunk the shifts to bound memory at large N*M
    step = max(1, 4_000_000 // (nodes + n))
    for start in range(0, m_blk, step):
        shifts = np.arange(start, min(m_blk, start + step))
        idx = (np.arange(n)[:, None] - shifts[None, :]) % n
        resp = basis @ taps[idx]
        want = target[:, None] * np.exp(-1j * np.outer(x, c + shifts))
        total += float(w @ np.sum(np.abs(resp - want) ** 2, axis=1))
    return total / (2 * math.pi)
