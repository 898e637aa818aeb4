"""
Monte-Carlo single-polarization coherent link.

bits -> Gray 16-QAM -> RRC shaping at p/q samples per symbol -> CD channel
-> AWGN -> CDC filter -> matched RRC and decimation -> static gain/phase
-> hard decisions -> BER.

Every run is a pure function of its :class:`LinkConfig`, seed included.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .. import design
from ..design import DesignSpec, FiberParams, Method
from ..ola import OlaConfig, ola_filter_stream, pad_to_block
from .channel import awgn, cd_channel, cd_inverse
from .pulse import matched_decimate, pulse_shape
from .qam import BITS_PER_SYMBOL, qam16_demap, qam16_map

log = logging.getLogger(__name__)

CDC_METHODS = ("time-domain", "overlap-save", "exact", "none")
REALIZATIONS = ("direct", "overlap-save")
SWEEP_AXES = ("length_km", "ebn0_db", "fft_size")
CSV_COLUMNS = ("axis_value", "method", "N", "M", "L", "z_km", "ebn0_db", "bits", "errors", "ber", "ci95", "error")

# cross-correlation lags checked around the analytic delay
_ALIGN_SEARCH = 4


class LinkConfigError(ValueError):
    pass


class AlignmentError(RuntimeError):
    pass


@dataclass(frozen=True)
class CdcConfig:
    """
    CDC filter choice.

    ``method``: ``time-domain`` (length ``length``; defaults to ``N - M + 1``
    or, without a block geometry, to the estimated length), ``overlap-save``
    (length ``N``, nominal ``N - M + 1``), ``exact`` (ideal full-length
    inverse on the channel's DFT grid) or ``none``.
    """

    method: str = "overlap-save"
    fft_size: int | None = 256
    block_size: int | None = 128
    length: int | None = None
    realization: str = "overlap-save"
    omega: float = math.pi

    def __post_init__(self):
        method = self.method
        if method in ("proposed", "time-domain", "overlap-save", "td", "ols"):
            method = Method.parse(method).value
        if method not in CDC_METHODS:
            raise LinkConfigError(f"cdc.method must be one of {CDC_METHODS}, got {self.method!r}")
        object.__setattr__(self, "method", method)
        if self.realization not in REALIZATIONS:
            raise LinkConfigError(f"cdc.realization must be one of {REALIZATIONS}, got {self.realization!r}")

    @property
    def uses_ola(self) -> bool:
        return self.method in ("time-domain", "overlap-save") and self.realization == "overlap-save"


@dataclass(frozen=True)
class LinkConfig:
    """
    One Monte-Carlo run. ``ebn0_db = None`` (or ``inf``) disables noise.

    The CD channel and the CDC filter both operate at the receiver sample
    period ``T = q / (p * baud_rate)``.
    """

    length_km: float = 0.0
    ebn0_db: float | None = 8.0
    num_bits: int = 400_000
    seed: int = 1
    cdc: CdcConfig = field(default_factory=CdcConfig)
    baud_rate: float = 60e9
    oversampling: tuple[int, int] = (8, 7)
    rolloff: float = 0.1
    span: int = 64
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        p, q = self.oversampling
        ratio = Fraction(int(p), int(q))
        if ratio <= 1:
            raise LinkConfigError("oversampling p/q must exceed 1")
        object.__setattr__(self, "oversampling", (ratio.numerator, ratio.denominator))
        if self.num_bits <= 0 or self.num_bits % BITS_PER_SYMBOL:
            raise LinkConfigError("num_bits must be a positive multiple of 4")
        if not 0 < self.rolloff <= 1:
            raise LinkConfigError("rolloff must lie in (0, 1]")
        if self.span < 2 or self.span % 2:
            raise LinkConfigError("span must be a positive even number of symbols")
        if self.length_km < 0:
            raise LinkConfigError("length_km must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise LinkConfigError("seed must be a 64-bit unsigned integer")
        if isinstance(self.cdc, dict):
            object.__setattr__(self, "cdc", CdcConfig(**self.cdc))

    @property
    def samples_per_symbol(self) -> float:
        p, q = self.oversampling
        return p / q

    @property
    def fiber(self) -> FiberParams:
        return FiberParams.from_engineering(
            self.dispersion_ps_nm_km,
            self.wavelength_nm,
            self.length_km,
            self.baud_rate * self.samples_per_symbol,
        )

    @property
    def k(self) -> float:
        return design.dispersion_constant(self.fiber)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["oversampling"] = list(self.oversampling)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> LinkConfig:
        d = dict(d)
        if "cdc" in d:
            d["cdc"] = CdcConfig(**d["cdc"])
        if "oversampling" in d:
            d["oversampling"] = tuple(d["oversampling"])
        return cls(**d)


@dataclass(frozen=True)
class BerPoint:
    """
    Error counts and BER with a 95% normal-approximation interval
    ``1.96 sqrt(ber (1 - ber) / bits)``.
    """

    bits_total: int
    bits_error: int
    ber: float
    ci95_halfwidth: float

    @classmethod
    def from_counts(cls, bits_total: int, bits_error: int) -> BerPoint:
        ber = bits_error / bits_total
        return cls(bits_total, bits_error, ber, 1.96 * math.sqrt(ber * (1 - ber) / bits_total))

    @property
    def sigma(self) -> float:
        return self.ci95_halfwidth / 1.96


@dataclass
class Compensator:
    """A CDC stage: ``apply(x)`` returns ``len(x)`` samples with the filter delay removed."""

    apply: object
    taps: design.TapVector | None
    span: int


def build_compensator(cdc: CdcConfig, k: float) -> Compensator:
    """Design the taps for ``cdc`` at dispersion ``k`` and wrap the realization."""
    if cdc.method == "none":
        return Compensator(lambda x: np.asarray(x, dtype=complex).copy(), None, 1)
    if cdc.method == "exact":
        return Compensator(lambda x: cd_inverse(x, k), None, design.estimate_length(k))

    n, m_blk = cdc.fft_size, cdc.block_size
    has_blocks = n is not None and m_blk is not None
    if cdc.uses_ola and not has_blocks:
        raise LinkConfigError("overlap-save realization needs cdc.fft_size and cdc.block_size")
    if cdc.method == "overlap-save":
        if not has_blocks:
            raise LinkConfigError("overlap-save design needs cdc.fft_size and cdc.block_size")
        if cdc.realization != "overlap-save":
            raise LinkConfigError("the overlap-save design is time-varying; it needs the overlap-save realization")
        spec = DesignSpec(n, m_blk, cdc.omega, Method.OVERLAP_SAVE)
        if cdc.length is not None and cdc.length != spec.length:
            raise LinkConfigError(f"cdc.length={cdc.length} conflicts with N - M + 1 = {spec.length}")
        taps = design.design_filter(spec, k)
    else:
        length = cdc.length
        if length is None:
            length = n - m_blk + 1 if has_blocks else design.estimate_length(k)
        if length < 1 or length % 2 == 0:
            raise LinkConfigError(f"time-domain filter length must be odd and positive, got {length}")
        if cdc.uses_ola and length > n - m_blk + 1:
            raise LinkConfigError(f"L={length} exceeds N - M + 1 = {n - m_blk + 1} for overlap-save realization")
        if k == 0:
            taps = design.identity_filter(length)
        else:
            taps = design.time_domain_design(length, k, cdc.omega)

    c = taps.center
    if cdc.uses_ola:
        ola = OlaConfig(n, m_blk)

        def apply(x):
            x = np.asarray(x, dtype=complex)
            return ola_filter_stream(taps, ola, pad_to_block(x, m_blk, extra=c))[c : c + x.size]
    else:
        def apply(x):
            x = np.asarray(x, dtype=complex)
            return np.convolve(x, taps.taps)[c : c + x.size]

    return Compensator(apply, taps, len(taps))


def _check_alignment(rx: np.ndarray, tx: np.ndarray, lo: int, hi: int):
    seg = tx[lo:hi]
    scores = [abs(np.vdot(seg, rx[lo + lag : hi + lag])) for lag in range(-_ALIGN_SEARCH, _ALIGN_SEARCH + 1)]
    best = int(np.argmax(scores)) - _ALIGN_SEARCH
    if best != 0:
        raise AlignmentError(f"cross-correlation peak {best:+d} symbols from the analytic delay")


def link_decisions(cfg: LinkConfig) -> tuple[np.ndarray, np.ndarray]:
    """Transmitted and decided bits over the ``cfg.num_bits`` counted positions."""
    p, q = cfg.oversampling
    k = cfg.k
    comp = build_compensator(cfg.cdc, k)

    # guard symbols at each end absorb the circular channel's wrap-around,
    # filter transients and the overlap-save warm-up
    memory = max(design.estimate_length(k), comp.span)
    guard = math.ceil(4 * memory * q / p) + 2 * cfg.span + _ALIGN_SEARCH
    n_data = cfg.num_bits // BITS_PER_SYMBOL
    n_sym = n_data + 2 * guard

    bit_seed, noise_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    bits = np.random.default_rng(bit_seed).integers(0, 2, BITS_PER_SYMBOL * n_sym, dtype=np.uint8)
    tx = qam16_map(bits)

    x = pulse_shape(tx, cfg.rolloff, cfg.span, p, q)
    x = cd_channel(x, k)
    x = awgn(x, cfg.ebn0_db, cfg.samples_per_symbol, np.random.default_rng(noise_seed))
    y = comp.apply(x)
    r = matched_decimate(y, cfg.rolloff, cfg.span, p, q)
    rx = r[cfg.span : cfg.span + n_sym]
    if rx.size < n_sym:
        raise AlignmentError("receiver produced fewer symbols than transmitted")

    lo, hi = guard, guard + n_data
    if cfg.cdc.method != "none":
        # uncompensated dispersion smears the correlation peak; nothing to verify
        _check_alignment(rx, tx, lo, hi)
    gain = np.vdot(tx[lo:hi], rx[lo:hi]) / np.vdot(tx[lo:hi], tx[lo:hi])
    decided = qam16_demap(rx[lo:hi] / gain)
    return bits[BITS_PER_SYMBOL * lo : BITS_PER_SYMBOL * hi], decided


def run_link(cfg: LinkConfig) -> BerPoint:
    """Simulate one link configuration and count bit errors over exactly ``cfg.num_bits`` bits."""
    sent, decided = link_decisions(cfg)
    return BerPoint.from_counts(cfg.num_bits, int(np.count_nonzero(sent != decided)))


@dataclass
class SweepPoint:
    axis_value: float
    config: LinkConfig
    result: BerPoint | None = None
    error: str | None = None


def sweep_configs(base: LinkConfig, axis: str, values) -> list[LinkConfig]:
    """
    Per-point configurations. Point ``i`` runs with seed ``base.seed + i``,
    which the seed-sequence hashing decorrelates; the same index gets the
    same noise whichever CDC method is swept.

    The ``fft_size`` axis keeps the nominal length ``L`` and sets
    ``M = N - L + 1``.
    """
    if axis not in SWEEP_AXES:
        raise LinkConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    values = list(values)
    if not values:
        raise LinkConfigError("sweep needs at least one axis value")
    out = []
    for i, v in enumerate(values):
        seed = (base.seed + i) % 2**64
        if axis == "length_km":
            cfg = replace(base, length_km=float(v), seed=seed)
        elif axis == "ebn0_db":
            cfg = replace(base, ebn0_db=float(v), seed=seed)
        else:
            cdc = base.cdc
            if cdc.fft_size is None or cdc.block_size is None:
                raise LinkConfigError("fft_size sweep needs a block geometry in the base config")
            length = cdc.length or cdc.fft_size - cdc.block_size + 1
            n = int(v)
            cfg = replace(base, seed=seed, cdc=replace(cdc, fft_size=n, block_size=n - length + 1))
        out.append(cfg)
    return out


def _run_point(cfg: LinkConfig) -> tuple[BerPoint | None, str | None]:
    try:
        return run_link(cfg), None
    except (ValueError, RuntimeError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def ber_sweep(base: LinkConfig, axis: str, values, jobs: int = 1) -> list[SweepPoint]:
    """
    Run one :func:`run_link` per axis value. A failing point records its
    error and the sweep carries on. Results do not depend on ``jobs``.
    """
    values = list(values)
    configs = sweep_configs(base, axis, values)
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_point, configs))
    else:
        outcomes = [_run_point(c) for c in configs]
    points = []
    for v, cfg, (res, err) in zip(values, configs, outcomes):
        if err:
            log.warning("sweep point %s=%s failed: %s", axis, v, err)
        points.append(SweepPoint(float(v), cfg, res, err))
    return points


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_rows(points: list[SweepPoint]) -> list[dict]:
    rows = []
    for pt in points:
        cfg, cdc, res = pt.config, pt.config.cdc, pt.result
        nominal = cdc.length
        if nominal is None and cdc.fft_size is not None and cdc.block_size is not None:
            nominal = cdc.fft_size - cdc.block_size + 1
        ola = cdc.uses_ola
        rows.append({
            "axis_value": pt.axis_value,
            "method": cdc.method,
            "N": cdc.fft_size if ola else None,
            "M": cdc.block_size if ola else None,
            "L": nominal if cdc.method in ("time-domain", "overlap-save") else None,
            "z_km": float(cfg.length_km),
            "ebn0_db": None if cfg.ebn0_db is None else float(cfg.ebn0_db),
            "bits": res.bits_total if res else None,
            "errors": res.bits_error if res else None,
            "ber": res.ber if res else None,
            "ci95": res.ci95_halfwidth if res else None,
            "error": pt.error,
        })
    return rows


def sweep_csv(points: list[SweepPoint]) -> str:
    """CSV text with columns :data:`CSV_COLUMNS`; floats at full ``repr`` precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in sweep_rows(points):
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()
