"""
Command-line front end.

Subcommands: ``info``, ``design``, ``simulate``, ``sweep``, ``filter`` and
``replay``. Every file written is accompanied by ``<file>.manifest.json``
holding the fully resolved configuration; ``cdcfir replay`` re-executes a
manifest and reproduces the artifact byte for byte.

Settings are resolved as built-in defaults, then the ``--config`` JSON file,
then command-line flags (flags win). Quantities accept unit suffixes
(``250km``, ``60GBd``, ``8dB``, ``17ps/nm/km``, ``1550nm``, ``0.8pi``).

Exit codes: 0 success, 2 usage, 3 configuration, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__, fileio, units
from .design import (
    DesignError,
    DesignSpec,
    FiberParams,
    Method,
    design_filter,
    dispersion_constant,
    estimate_length,
    identity_filter,
    length_limit,
    overlap_save_design,
    time_domain_design,
    total_ls_error,
)
from .link.simulate import (
    CDC_METHODS,
    REALIZATIONS,
    AlignmentError,
    CdcConfig,
    LinkConfig,
    LinkConfigError,
    ber_sweep,
    run_link,
    sweep_csv,
)
from .ola import OlaConfig, OlaConfigError, ola_filter_stream, pad_to_block

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4
OUTPUT_DIR_ENV = "CDCFIR_OUTPUT_DIR"
CONFIG_SCHEMA_VERSION = 1

log = logging.getLogger("cdcfir")

_QUANTITY = {"type": ["number", "string"]}
_OPT_INT = {"type": ["integer", "null"], "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": CONFIG_SCHEMA_VERSION},
        "length_km": _QUANTITY,
        "ebn0_db": {"type": ["number", "string", "null"]},
        "num_bits": {"type": "integer", "minimum": 4, "multipleOf": 4},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "baud_rate": _QUANTITY,
        "oversampling": {"type": ["string", "array"]},
        "rolloff": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "span": {"type": "integer", "minimum": 2, "multipleOf": 2},
        "dispersion_ps_nm_km": _QUANTITY,
        "wavelength_nm": _QUANTITY,
        "cdc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": list(CDC_METHODS) + ["proposed"]},
                "fft_size": _OPT_INT,
                "block_size": _OPT_INT,
                "length": _OPT_INT,
                "realization": {"enum": list(REALIZATIONS)},
                "omega": _QUANTITY,
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis", "values"],
            "properties": {
                "axis": {"enum": ["z", "length_km", "snr", "ebn0_db", "N", "fft_size"]},
                "values": {"type": "array", "minItems": 1},
            },
        },
    },
}

_AXIS_ALIASES = {"z": "length_km", "snr": "ebn0_db", "N": "fft_size"}


class ConfigError(Exception):
    """Configuration problems, one message per offending field."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# -- helpers -----------------------------------------------------------------


def _output_path(given: str | None, default_name: str) -> Path:
    if given:
        return Path(given)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _dump_json(doc, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _write_manifest(out: Path, command: str, config: dict, outputs: list[Path], started: float) -> Path:
    manifest = {
        "tool": "cdcfir",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed", config.get("base", {}).get("seed")),
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.perf_counter() - started, 3),
    }
    path = out.with_name(out.name + ".manifest.json")
    _dump_json(manifest, path)
    return path


def _parse(fn, value, field):
    try:
        return fn(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"{field}: {exc}") from None


def _fiber(args) -> FiberParams:
    p, q = _parse(units.parse_ratio, args.oversampling, "oversampling")
    baud = _parse(units.parse_rate, args.baud, "baud")
    try:
        return FiberParams.from_engineering(
            _parse(units.parse_dispersion, args.dispersion, "dispersion"),
            _parse(units.parse_wavelength_nm, args.wavelength, "wavelength"),
            _parse(units.parse_length_km, args.z if args.z is not None else 0, "z"),
            baud * p / q,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- info --------------------------------------------------------------------


def cmd_info(args) -> int:
    fiber = _fiber(args)
    k = dispersion_constant(fiber)
    report = {
        "dispersion_ps_nm_km": fiber.dispersion * 1e6,
        "wavelength_nm": fiber.wavelength * 1e9,
        "sample_rate_hz": 1 / fiber.sample_period,
        "length_km": fiber.length / 1e3,
        "K": k,
        "estimated_L": estimate_length(k),
    }
    if args.L is not None:
        report["L"] = args.L
        report["max_length_km_for_L"] = _parse(lambda v: length_limit(v, fiber), args.L, "L") / 1e3
    if args.json:
        print(json.dumps(report, indent=1))
    else:
        for key, val in report.items():
            print(f"{key:>22}: {val:.6g}" if isinstance(val, float) else f"{key:>22}: {val}")
    return EXIT_OK


# -- design ------------------------------------------------------------------


def _resolve_design(args) -> dict:
    method = _parse(Method.parse, args.method, "method")
    if args.K is not None:
        k = float(args.K)
        if not k >= 0:
            raise ConfigError("K: must be >= 0")
    elif args.z is not None:
        k = dispersion_constant(_fiber(args))
    else:
        raise ConfigError("give either --z (fibre length) or --K (dispersion constant)")
    n, m, length = args.N, args.M, args.L
    if n is not None and m is None and length is not None:
        m = n - length + 1
    if n is not None and m is not None:
        nominal = n - m + 1
        if length is not None and length != nominal and method is Method.OVERLAP_SAVE:
            raise ConfigError(f"L: {length} conflicts with N - M + 1 = {nominal}")
        if length is None:
            length = nominal
    if method is Method.OVERLAP_SAVE and (n is None or m is None):
        raise ConfigError("N, M: the overlap-save design needs the block geometry (--N with --M or --L)")
    if length is None:
        length = estimate_length(k)
    if args.compare and (n is None or m is None):
        raise ConfigError("compare: needs --N and --M")
    return {
        "method": method.value,
        "N": n,
        "M": m,
        "L": length,
        "K": k,
        "omega": _parse(units.parse_omega, args.omega, "omega"),
        "format": args.format,
        "compare": bool(args.compare),
    }


def _execute_design(cfg: dict, out: Path) -> list[Path]:
    method, k, omega = Method(cfg["method"]), cfg["K"], cfg["omega"]
    n, m, length = cfg["N"], cfg["M"], cfg["L"]
    if method is Method.OVERLAP_SAVE:
        tv = design_filter(DesignSpec(n, m, omega, method), k)
    else:
        tv = identity_filter(length) if k == 0 else time_domain_design(length, k, omega)
        tv = replace(tv, method=method.value, k=k, fft_size=n, block_size=m)
    out.parent.mkdir(parents=True, exist_ok=True)
    if cfg["format"] == "text":
        fileio.write_taps_text(tv, out)
    else:
        fileio.write_taps_json(tv, out)
    outputs = [out]
    if cfg["compare"]:
        spec = DesignSpec(n, m, omega)
        if k == 0:
            td = ols = design_filter(spec, 0.0)
        else:
            td = time_domain_design(spec.length, k, omega).zero_padded(n)
            ols = overlap_save_design(spec, k)
        e_td, e_ols = total_ls_error(td, spec, k), total_ls_error(ols, spec, k)
        report = {
            "N": n, "M": m, "L": spec.length, "K": k, "omega": omega,
            "total_ls_error": {"time-domain": e_td, "overlap-save": e_ols},
            "relative_improvement": (e_td - e_ols) / e_td if e_td > 0 else 0.0,
        }
        cmp_path = out.with_name(out.stem + ".compare.json")
        _dump_json(report, cmp_path)
        print(f"total LS error: time-domain {e_td:.6e}, overlap-save {e_ols:.6e}")
        outputs.append(cmp_path)
    print(f"wrote {len(tv)} taps ({tv.method}, centre {tv.center}) to {out}")
    return outputs


def cmd_design(args) -> int:
    started = time.perf_counter()
    cfg = _resolve_design(args)
    suffix = "txt" if cfg["format"] == "text" else "json"
    out = _output_path(args.out, f"taps.{suffix}")
    outputs = _execute_design(cfg, out)
    _write_manifest(out, "design", cfg, outputs, started)
    return EXIT_OK


# -- simulate / sweep --------------------------------------------------------


def load_config(path) -> dict:
    """Read and validate a link config file; all schema violations are reported together."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    errors = sorted(jsonschema.Draft7Validator(CONFIG_SCHEMA).iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        raise ConfigError(
            [f"{'.'.join(str(p) for p in e.path) or '<root>'}: {e.message}" for e in errors]
        )
    return doc


def _normalize_link(doc: dict) -> dict:
    """Config-file style values (possibly with unit suffixes) to LinkConfig kwargs."""
    out = {}
    parsers = {
        "length_km": units.parse_length_km,
        "ebn0_db": units.parse_db,
        "baud_rate": units.parse_rate,
        "oversampling": units.parse_ratio,
        "dispersion_ps_nm_km": units.parse_dispersion,
        "wavelength_nm": units.parse_wavelength_nm,
    }
    for key, val in doc.items():
        if key in ("schema_version", "sweep"):
            continue
        if key == "cdc":
            cdc = dict(val)
            if "omega" in cdc:
                cdc["omega"] = _parse(units.parse_omega, cdc["omega"], "cdc.omega")
            out["cdc"] = cdc
        elif key in parsers:
            out[key] = _parse(parsers[key], val, key)
        else:
            out[key] = val
    return out


def _resolve_link(args) -> tuple[LinkConfig, dict]:
    doc = load_config(args.config) if args.config else {}
    kw = _normalize_link(doc)
    cdc = dict(kw.pop("cdc", {}))
    flag_map = {
        "z": ("length_km", units.parse_length_km),
        "snr": ("ebn0_db", units.parse_db),
        "bits": ("num_bits", int),
        "seed": ("seed", int),
        "baud": ("baud_rate", units.parse_rate),
        "oversampling": ("oversampling", units.parse_ratio),
        "rolloff": ("rolloff", float),
        "span": ("span", int),
        "dispersion": ("dispersion_ps_nm_km", units.parse_dispersion),
        "wavelength": ("wavelength_nm", units.parse_wavelength_nm),
    }
    for flag, (key, fn) in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            kw[key] = _parse(fn, val, flag)
    cdc_flags = {"method": "method", "N": "fft_size", "M": "block_size", "L": "length", "realization": "realization"}
    for flag, key in cdc_flags.items():
        val = getattr(args, flag, None)
        if val is not None:
            cdc[key] = val
    if getattr(args, "omega", None) is not None:
        cdc["omega"] = _parse(units.parse_omega, args.omega, "omega")
    # a lone L for an overlap-save realization picks M = N - L + 1
    if "length" in cdc and "fft_size" in cdc and "block_size" not in cdc and cdc.get("method") != "none":
        cdc["block_size"] = cdc["fft_size"] - cdc["length"] + 1
    if cdc.get("realization") == "direct" and "fft_size" not in cdc:
        cdc.setdefault("fft_size", None)
        cdc.setdefault("block_size", None)
    try:
        kw["cdc"] = CdcConfig(**cdc)
        cfg = LinkConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg, doc


def _result_doc(res) -> dict:
    return {
        "bits": res.bits_total,
        "errors": res.bits_error,
        "ber": res.ber,
        "ci95": res.ci95_halfwidth,
    }


def _execute_simulate(cfg_dict: dict, out: Path) -> list[Path]:
    cfg = LinkConfig.from_dict(cfg_dict)
    res = run_link(cfg)
    _dump_json({"config": cfg.to_dict(), "result": _result_doc(res)}, out)
    print(f"BER {res.ber:.6e} ({res.bits_error}/{res.bits_total}, +-{res.ci95_halfwidth:.2e}) -> {out}")
    return [out]


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg, _ = _resolve_link(args)
    out = _output_path(args.out, "simulate.json")
    resolved = cfg.to_dict()
    outputs = _execute_simulate(resolved, out)
    _write_manifest(out, "simulate", resolved, outputs, started)
    return EXIT_OK


def _axis_values(axis: str, raw) -> list:
    parser = {"length_km": units.parse_length_km, "ebn0_db": units.parse_db, "fft_size": int}[axis]
    return [_parse(parser, v, "values") for v in raw]


def _execute_sweep(cfg: dict, out: Path) -> list[Path]:
    base = LinkConfig.from_dict(cfg["base"])
    points = ber_sweep(base, cfg["axis"], cfg["values"], jobs=cfg.get("jobs", 1))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(sweep_csv(points))
    failed = sum(p.error is not None for p in points)
    print(f"{len(points)} points ({failed} failed) -> {out}")
    return [out]


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    base, doc = _resolve_link(args)
    sweep_doc = doc.get("sweep", {})
    axis = args.axis or sweep_doc.get("axis")
    raw = args.values.split(",") if args.values else sweep_doc.get("values")
    if not axis or not raw:
        raise ConfigError("sweep: needs --axis and --values (or a 'sweep' block in the config)")
    axis = _AXIS_ALIASES.get(axis, axis)
    resolved = {
        "base": base.to_dict(),
        "axis": axis,
        "values": _axis_values(axis, raw),
        "jobs": args.jobs,
    }
    out = _output_path(args.out, f"sweep_{axis}.csv")
    outputs = _execute_sweep(resolved, out)
    _write_manifest(out, "sweep", resolved, outputs, started)
    return EXIT_OK


# -- filter ------------------------------------------------------------------


def _execute_filter(cfg: dict, out: Path) -> list[Path]:
    tv = fileio.read_taps_json(cfg["taps"])
    x = fileio.read_signal(cfg["input"])
    ola = OlaConfig(cfg["N"], cfg["M"])
    y = ola_filter_stream(tv, ola, pad_to_block(x, ola.block_size))[: x.size]
    out.parent.mkdir(parents=True, exist_ok=True)
    fileio.write_signal(y, out)
    print(f"filtered {x.size} samples (N={ola.fft_size}, M={ola.block_size}) -> {out}")
    return [out]


def cmd_filter(args) -> int:
    started = time.perf_counter()
    try:
        tv = fileio.read_taps_json(args.taps)
    except (OSError, ValueError, jsonschema.ValidationError) as exc:
        raise ConfigError(f"taps: {exc}") from None
    n = args.N or tv.fft_size or len(tv)
    m = args.M or tv.block_size
    if m is None:
        raise ConfigError("M: not in the tap file; pass --M")
    cfg = {"taps": str(Path(args.taps)), "input": str(Path(args.input)), "N": n, "M": m}
    out = Path(args.output)
    outputs = _execute_filter(cfg, out)
    _write_manifest(out, "filter", cfg, outputs, started)
    return EXIT_OK


# -- replay ------------------------------------------------------------------

_EXECUTORS = {
    "design": _execute_design,
    "simulate": _execute_simulate,
    "sweep": _execute_sweep,
    "filter": _execute_filter,
}


def cmd_replay(args) -> int:
    started = time.perf_counter()
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        command, cfg = manifest["command"], manifest["config"]
        execute = _EXECUTORS[command]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"manifest: {exc}") from None
    out = Path(args.out) if args.out else Path(manifest["outputs"][0])
    outputs = execute(cfg, out)
    _write_manifest(out, command, cfg, outputs, started)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _add_fiber_flags(p, z_help="fibre length (km by default)"):
    p.add_argument("--z", help=z_help)
    p.add_argument("--dispersion", default=None, help="dispersion, e.g. 17ps/nm/km")
    p.add_argument("--wavelength", default=None, help="wavelength, e.g. 1550nm")
    p.add_argument("--baud", default=None, help="symbol rate, e.g. 60GBd")
    p.add_argument("--oversampling", default=None, help="receiver oversampling p/q, e.g. 8/7")


def _fill_fiber_defaults(args):
    defaults = {"dispersion": "17", "wavelength": "1550", "baud": "60e9", "oversampling": "8/7"}
    for key, val in defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, val)


def _add_link_flags(p):
    p.add_argument("--config", help="JSON config file (schema version 1)")
    _add_fiber_flags(p)
    p.add_argument("--snr", help="Eb/N0, e.g. 8dB ('inf' for noiseless)")
    p.add_argument("--bits", type=int, help="counted bits per point (multiple of 4)")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=list(CDC_METHODS) + ["proposed"])
    p.add_argument("--N", type=int, help="DFT size")
    p.add_argument("--M", type=int, help="new samples per block")
    p.add_argument("--L", type=int, help="time-domain filter length")
    p.add_argument("--realization", choices=REALIZATIONS)
    p.add_argument("--omega", help="design bandwidth, e.g. pi or 0.8pi")
    p.add_argument("--rolloff", type=float)
    p.add_argument("--span", type=int, help="RRC span in symbols")
    p.add_argument("--out", help=f"output file (default directory: ${OUTPUT_DIR_ENV} or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdcfir", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"cdcfir {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", help="dispersion constant and filter-length estimate")
    _add_fiber_flags(p)
    p.add_argument("--L", type=int, help="also report the fibre length this filter length is rated for")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info, fiber_defaults=True)

    p = sub.add_parser("design", help="design a CDC filter and write its taps")
    p.add_argument("--method", default="overlap-save", help="overlap-save (alias: proposed) or time-domain")
    _add_fiber_flags(p)
    p.add_argument("--K", type=float, help="dispersion constant (overrides --z)")
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--omega", default="pi")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--compare", action="store_true", help="also write the total LS error of both designs")
    p.add_argument("--out")
    p.set_defaults(func=cmd_design, fiber_defaults=True)

    p = sub.add_parser("simulate", help="one Monte-Carlo BER point")
    _add_link_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="BER over fibre length, Eb/N0 or DFT size")
    _add_link_flags(p)
    p.add_argument("--axis", choices=sorted(set(_AXIS_ALIASES) | set(_AXIS_ALIASES.values())))
    p.add_argument("--values", help="comma-separated axis values, e.g. 150km,200km,250km")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("filter", help="overlap-save filter a raw signal file with a tap file")
    p.add_argument("--taps", required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("replay", help="re-execute a run manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write the artifact here instead of the recorded path")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "fiber_defaults", False):
        _fill_fiber_defaults(args)
    try:
        return args.func(args)
    except (DesignError, AlignmentError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"cdcfir: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"cdcfir: config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (LinkConfigError, OlaConfigError, ValueError) as exc:
        print(f"cdcfir: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
