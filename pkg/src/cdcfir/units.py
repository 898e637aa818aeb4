"""Parsing of quantities with unit suffixes, normalized to the units the library uses."""

import math
import re
from fractions import Fraction

_NUM = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
_SI = {"": 1.0, "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12}


def _split(text) -> tuple[float, str]:
    if isinstance(text, (int, float)):
        return float(text), ""
    m = re.fullmatch(_NUM + r"\s*(.*)", str(text).strip())
    if not m:
        raise ValueError(f"cannot parse quantity {text!r}")
    return float(m.group(1)), m.group(2).strip()


def parse_length_km(text) -> float:
    """``250km``, ``250 km``, ``2.5e5m`` or a bare number in km."""
    value, unit = _split(text)
    scale = {"": 1.0, "km": 1.0, "m": 1e-3}.get(unit)
    if scale is None:
        raise ValueError(f"unknown length unit {unit!r}")
    return value * scale


def parse_rate(text) -> float:
    """Symbol or sample rate in Hz: ``60GBd``, ``68.5GHz``, ``6e10`` (bare = Hz)."""
    value, unit = _split(text)
    m = re.fullmatch(r"([kMGT]?)(Hz|Bd|baud|)", unit)
    if not m:
        raise ValueError(f"unknown rate unit {unit!r}")
    return value * _SI[m.group(1)]


def parse_db(text) -> float | None:
    """``8dB`` or ``8``; ``inf``/``none`` mean no noise (returns ``None``)."""
    if text is None or str(text).strip().lower() in ("inf", "+inf", "none", "off"):
        return None
    value, unit = _split(text)
    if unit not in ("", "dB", "db"):
        raise ValueError(f"unknown level unit {unit!r}")
    return value


def parse_wavelength_nm(text) -> float:
    """``1550nm``, ``1.55um`` or a bare number in nm."""
    value, unit = _split(text)
    scale = {"": 1.0, "nm": 1.0, "um": 1e3, "m": 1e9}.get(unit)
    if scale is None:
        raise ValueError(f"unknown wavelength unit {unit!r}")
    return value * scale


def parse_dispersion(text) -> float:
    """``17ps/nm/km``, ``17ps/(nm km)`` or a bare number in ps/(nm km)."""
    value, unit = _split(text)
    if unit.replace(" ", "").replace("*", "") not in ("", "ps/nm/km", "ps/(nmkm)", "ps/(nm.km)"):
        raise ValueError(f"unknown dispersion unit {unit!r}")
    return value


def parse_omega(text) -> float:
    """Bandwidth in rad/sample: ``pi``, ``0.8pi``, ``2.5``."""
    s = str(text).strip().lower().replace("*", "")
    if s.endswith("pi"):
        head = s[:-2].strip()
        return (float(head) if head else 1.0) * math.pi
    return float(s)


def parse_ratio(text) -> tuple[int, int]:
    """Oversampling ratio ``8/7`` (or a list/tuple ``[8, 7]``) as a reduced pair."""
    if isinstance(text, (list, tuple)):
        frac = Fraction(int(text[0]), int(text[1]))
    else:
        frac = Fraction(str(text).strip())
    return frac.numerator, frac.denominator
