"""Command-line front end: ``kicked-mzi <command> [flags] [--config file.json] [--out path]``.

Each run writes ``<out>.csv`` (data) and ``<out>.json`` (run metadata).  Exit
codes: 0 success, 1 numerical failure (instability, non-convergence,
calibration), 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .dynamics import (
    KickParams,
    closed_form_S_t,
    critical_phase,
    is_stable_with_loss,
    spectral_data,
    step_matrix,
)
from .errors import KickedMZIError, UnstableDynamicsError
from .experiments import (
    TimeConfig,
    calibrate_phase,
    gain_map,
    sweep_plateau,
    sweep_qfi_vs_nmax_by_input,
    sweep_qfi_vs_nmax_by_phase,
    sweep_qfi_vs_time,
)
from .gaussian import make_coherent
from .qfi import (
    coherent_reference,
    qfi_coherent_benchmark,
    qfi_finite_difference,
    qfi_noon_benchmark,
    qfi_vs_time,
)

COMMANDS = (
    "qfi-vs-time", "qfi-vs-nmax-input", "qfi-vs-nmax-phase",
    "calibrate", "plateau", "gain-map", "benchmark", "selfcheck",
)

# flag name -> (RunConfig field, kind)
FLAGS = {
    "phi": ("phi", "angle"),
    "r": ("r", "float"),
    "chi": ("chi", "angle"),
    "gamma-tau": ("gamma_tau", "float"),
    "alpha": ("alpha", "complex"),
    "t-max": ("t_max", "int"),
    "t-plateau": ("t_plateau", "int"),
    "t-horizon": ("t_horizon", "int"),
    "probe-steps": ("probe_steps", "int"),
    "n-cap": ("n_cap", "float"),
    "n-photons": ("n_photons", "float"),
    "conv-tol": ("conv_tol", "float"),
    "phi-grid": ("phi_grid", "angle-grid"),
    "alpha-grid": ("alpha_grid", "complex-grid"),
    "gamma-grid": ("gamma_grid", "float-grid"),
    "nmax-grid": ("nmax_grid", "float-grid"),
    "out": ("output_path", "str"),
    "threads": ("threads", "int"),
}

REQUIRED = {
    "qfi-vs-time": ("r", "t_max"),
    "qfi-vs-nmax-input": ("r", "phi", "t_max", "alpha_grid"),
    "qfi-vs-nmax-phase": ("r", "t_max", "phi_grid"),
    "calibrate": ("r", "n_cap"),
    "plateau": ("r", "gamma_tau"),
    "gain-map": ("r", "gamma_grid", "nmax_grid"),
    "benchmark": ("n_photons", "t_max"),
    "selfcheck": (),
}

COLUMNS = {
    "qfi-vs-time": ("t", "qfi", "rescaled", "nmax", "purity", "benchmark_cs", "benchmark_noon", "reference"),
    "qfi-vs-nmax-input": ("nmax", "input_photons", "phi", "qfi", "rescaled", "purity", "benchmark_cs", "benchmark_noon"),
    "qfi-vs-nmax-phase": ("nmax", "input_photons", "phi", "qfi", "rescaled", "purity", "benchmark_cs", "benchmark_noon"),
    "calibrate": ("r", "alpha_re", "alpha_im", "n_cap", "phi", "achieved_nmax", "iterations", "method"),
    "plateau": ("phi", "input_photons", "nmax", "plateau", "benchmark_cs", "benchmark_noon"),
    "gain-map": ("gamma", "n_cap", "nmax", "phi", "gain", "t_opt", "g_kicked", "t_opt_reference", "g_reference", "status"),
    "benchmark": ("N", "t", "benchmark_cs", "benchmark_noon"),
    "selfcheck": ("check", "value", "tolerance", "passed"),
}


class UsageError(Exception):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    command: str
    phi: float | None = None
    r: float | None = None
    chi: float | None = None
    gamma_tau: float | None = None
    alpha: complex | None = None
    t_max: int | None = None
    t_plateau: int | None = None
    t_horizon: int | None = None
    probe_steps: int | None = None
    n_cap: float | None = None
    n_photons: float | None = None
    conv_tol: float | None = None
    phi_grid: tuple[float, ...] | None = None
    alpha_grid: tuple[complex, ...] | None = None
    gamma_grid: tuple[float, ...] | None = None
    nmax_grid: tuple[float, ...] | None = None
    output_path: str | None = None
    threads: int | None = None


_PI_RE = re.compile(r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(text) -> float:
    """Radians, or an exact multiple of pi such as '31778pi/1000000', 'pi/2', '-3*pi'."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    m = _PI_RE.match(str(text))
    if m:
        num, den = m.groups()
        coef = {"": 1.0, "+": 1.0, "-": -1.0}.get(num)
        if coef is None:
            coef = float(num)
        value = coef * math.pi
        return value / float(den) if den else value
    return float(text)


def _parse_complex(text) -> complex:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return complex(text)
    return complex(str(text).replace(" ", ""))


def _parse_grid(text, item) -> tuple:
    """Comma list, JSON list, or 'start:stop:num' (inclusive linspace)."""
    if isinstance(text, (list, tuple)):
        return tuple(item(x) for x in text)
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range must be start:stop:num")
        start, stop, num = item(parts[0]), item(parts[1]), int(parts[2])
        if num < 1:
            raise ValueError("range needs num >= 1")
        return tuple(complex(x) if isinstance(start, complex) else float(x)
                     for x in np.linspace(start, stop, num))
    return tuple(item(x) for x in text.split(",") if x.strip())


_CONVERT = {
    "float": float,
    "int": None,
    "angle": parse_angle,
    "complex": _parse_complex,
    "str": str,
    "angle-grid": lambda v: _parse_grid(v, parse_angle),
    "complex-grid": lambda v: _parse_grid(v, _parse_complex),
    "float-grid": lambda v: _parse_grid(v, float),
}


def _to_int(v) -> int:
    if isinstance(v, bool):
        raise ValueError("expected an integer")
    if isinstance(v, float):
        if not v.is_integer():
            raise ValueError("expected an integer")
        return int(v)
    return int(str(v))


def _convert(flag: str, value):
    kind = FLAGS[flag][1]
    try:
        return _to_int(value) if kind == "int" else _CONVERT[kind](value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--{flag}", f"cannot parse {value!r} ({exc})") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kicked-mzi", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON file with flat keys named like the flags")
    for flag in FLAGS:
        parser.add_argument(f"--{flag}", dest=flag, default=argparse.SUPPRESS)
    return parser


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    """Flags override config-file values; unknown config keys are rejected."""
    args = vars(_build_parser().parse_args(argv))
    command = args.pop("command")
    merged: dict[str, Any] = {}
    cfg_path = args.pop("config", None)
    if cfg_path:
        try:
            data = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError("--config", str(exc)) from None
        if not isinstance(data, dict):
            raise UsageError("--config", "top level must be a JSON object")
        for key, value in data.items():
            if key == "command":
                if value != command:
                    raise UsageError("command", f"config is for {value!r}, not {command!r}")
                continue
            if key not in FLAGS:
                raise UsageError(key, "unknown config key")
            if value is not None:
                merged[key] = value
    merged.update(args)

    fields = {}
    for flag, value in merged.items():
        fields[FLAGS[flag][0]] = _convert(flag, value)
    cfg = RunConfig(command=command, **fields)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    flag_of = {v[0]: k for k, v in FLAGS.items()}
    for name in REQUIRED[cfg.command]:
        if getattr(cfg, name) is None:
            raise UsageError(f"--{flag_of[name]}", f"required for {cfg.command}")
    if cfg.command == "qfi-vs-time" and cfg.phi is None and cfg.n_cap is None:
        raise UsageError("--phi", "qfi-vs-time needs --phi or --n-cap")

    def check(name, ok, what):
        v = getattr(cfg, name)
        if v is not None and not ok(v):
            raise UsageError(f"--{flag_of[name]}", f"must be {what}, got {v!r}")

    finite = lambda v: math.isfinite(v)  # noqa: E731
    check("r", lambda v: finite(v) and v >= 0, "a finite number >= 0")
    check("gamma_tau", lambda v: finite(v) and v >= 0, "a finite number >= 0")
    check("phi", finite, "finite")
    check("chi", finite, "finite")
    check("alpha", lambda v: math.isfinite(v.real) and math.isfinite(v.imag), "finite")
    for name in ("t_max", "t_plateau", "t_horizon", "probe_steps"):
        check(name, lambda v: v >= 1, ">= 1")
    check("threads", lambda v: v >= 0, ">= 0")
    check("n_cap", lambda v: finite(v) and v > 0, "> 0")
    check("n_photons", lambda v: finite(v) and v >= 0, ">= 0")
    check("conv_tol", lambda v: finite(v) and v > 0, "> 0")
    for name in ("phi_grid", "alpha_grid", "gamma_grid", "nmax_grid"):
        check(name, lambda v: len(v) > 0, "nonempty")
    check("gamma_grid", lambda v: all(finite(x) and x > 0 for x in v), "positive")
    check("nmax_grid", lambda v: all(finite(x) and x > 0 for x in v), "positive")
    if cfg.command in ("calibrate", "gain-map") and cfg.r is not None and cfg.r <= 0:
        raise UsageError("--r", "calibration needs r > 0")
    if cfg.command == "plateau" and cfg.gamma_tau is not None and cfg.gamma_tau <= 0:
        raise UsageError("--gamma-tau", "a plateau needs gamma_tau > 0")


def _plain(value):
    if isinstance(value, complex):
        return value.real if value.imag == 0 else str(value)
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: RunConfig) -> dict:
    """Flat, JSON-ready mapping keyed by flag names (only fields that are set)."""
    out: dict[str, Any] = {"command": cfg.command}
    for flag, (name, _) in FLAGS.items():
        value = getattr(cfg, name)
        if value is not None:
            out[flag] = _plain(value)
    return out


def config_to_argv(cfg: RunConfig) -> list[str]:
    argv = [cfg.command]
    for flag, value in config_to_dict(cfg).items():
        if flag == "command":
            continue
        if isinstance(value, list):
            value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        argv.append(f"--{flag}={value}")
    return argv


def resolve_threads(cfg: RunConfig) -> int:
    threads = cfg.threads
    if threads is None:
        env = os.environ.get("KICKED_MZI_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise UsageError("KICKED_MZI_THREADS", f"not an integer: {env!r}") from None
        else:
            threads = 1
    if threads < 0:
        raise UsageError("--threads", "must be >= 0")
    return threads or (os.cpu_count() or 1)


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_, str)):
        return str(bool(x)) if not isinstance(x, str) else x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _derived(cfg: RunConfig) -> dict:
    out: dict[str, Any] = {}
    r = cfg.r
    if r is not None and r > 0:
        out["phi_crit"] = critical_phase(r)
        if cfg.phi is not None:
            sd = spectral_data(cfg.phi, r)
            out["stable"] = sd.stable
            if sd.stable:
                out["theta1"] = sd.theta1
                out["theta2"] = sd.theta2
                out["c_factor"] = sd.c_factor
    return out


def _alpha(cfg: RunConfig) -> complex:
    return cfg.alpha if cfg.alpha is not None else 0j


def _execute(cfg: RunConfig, workers: int) -> tuple[list[tuple], dict]:
    """Run one command; returns CSV rows (without header) and extra metadata."""
    cmd = cfg.command
    meta: dict[str, Any] = {}
    if cmd == "benchmark":
        N, t = cfg.n_photons, cfg.t_max
        return [(N, t, qfi_coherent_benchmark(N, t), qfi_noon_benchmark(N, t))], meta

    if cmd == "qfi-vs-time":
        tc = TimeConfig(cfg.r, _alpha(cfg), cfg.t_max, cfg.phi, cfg.n_cap, cfg.chi or 0.0, cfg.gamma_tau or 0.0)
        (res,) = sweep_qfi_vs_time([tc], workers)
        meta["phi_used"] = res.params.phi
        meta["nmax"] = res.nmax
        meta.update({f"{k}_used": v for k, v in _derived(dataclasses.replace(cfg, phi=res.params.phi)).items()})
        rows = [(rec.x, rec.qfi, rec.rescaled, rec.nmax, rec.purity, rec.benchmark_cs,
                 rec.benchmark_noon, rec.reference) for rec in res.records()]
        return rows, meta

    if cmd in ("qfi-vs-nmax-input", "qfi-vs-nmax-phase"):
        if cmd == "qfi-vs-nmax-input":
            recs = sweep_qfi_vs_nmax_by_input(cfg.r, cfg.phi, cfg.t_max, cfg.alpha_grid, workers)
            meta["x_axis"] = "achieved N_max (input photon number recorded alongside)"
        else:
            recs = sweep_qfi_vs_nmax_by_phase(cfg.r, cfg.t_max, _alpha(cfg), cfg.phi_grid, workers)
        rows = [(rec.nmax, rec.input_photons, rec.phi, rec.qfi, rec.rescaled, rec.purity,
                 rec.benchmark_cs, rec.benchmark_noon) for rec in recs]
        return rows, meta

    if cmd == "calibrate":
        a = _alpha(cfg)
        res = calibrate_phase(cfg.r, a, cfg.n_cap, cfg.probe_steps)
        meta["phi_below"] = res.phi_below
        return [(cfg.r, a.real, a.imag, cfg.n_cap, res.phi, res.achieved_nmax, res.iterations_used, res.method)], meta

    if cmd == "plateau":
        phis = cfg.phi_grid or ((cfg.phi,) if cfg.phi is not None else None)
        if phis is None:
            raise UsageError("--phi", "plateau needs --phi or --phi-grid")
        alphas = cfg.alpha_grid or (_alpha(cfg),)
        recs = sweep_plateau(cfg.r, cfg.gamma_tau, phis, alphas, cfg.t_plateau or 4000,
                             cfg.conv_tol or 1e-3, workers)
        return [(rec.phi, rec.input_photons, rec.nmax, rec.qfi, rec.benchmark_cs, rec.benchmark_noon)
                for rec in recs], meta

    if cmd == "gain-map":
        cells = gain_map(cfg.r, _alpha(cfg), cfg.gamma_grid, cfg.nmax_grid, cfg.t_horizon, workers)
        meta["cell_status"] = [
            {"gamma": c.gamma, "n_cap": c.n_cap, "status": c.status} for c in cells
        ]
        meta["nmax_axis"] = "N_max set by calibrating phi at zero loss for fixed alpha (alpha is not varied)"
        meta["reference"] = "non-kicked coherent input with N = 2 N_max photons, same gamma"
        rows = [(c.gamma, c.n_cap, c.nmax, c.phi, c.gain, c.t_opt, c.g_kicked, c.t_opt_reference,
                 c.g_reference, c.status) for c in cells]
        return rows, meta

    if cmd == "selfcheck":
        rows = selfcheck_rows()
        meta["all_passed"] = all(row[3] for row in rows)
        return rows, meta

    raise UsageError("command", f"unknown command {cmd!r}")


def selfcheck_rows(seed: int = 12345) -> list[tuple]:
    """Closed form vs iterated product, and analytic vs finite-difference QFI, on seeded random points."""
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for _ in range(10):
        r = float(rng.uniform(0.05, 0.5))
        phi = float(rng.uniform(critical_phase(r) + 0.02, math.pi / 2))
        S = step_matrix(KickParams(phi, r))
        M = np.eye(2)
        for t in range(201):
            F = closed_form_S_t(phi, r, t)
            worst = max(worst, float(np.max(np.abs(F - M)) / np.max(np.abs(M))))
            M = S @ M
    rows.append(("closed_form_vs_product", worst, 1e-9, worst < 1e-9))

    worst = 0.0
    for _ in range(4):
        r = float(rng.uniform(0.05, 0.5))
        phi = float(rng.uniform(critical_phase(r) + 0.02, math.pi / 2))
        for gamma in (0.0, 0.01):
            p = KickParams(phi, r, 0.0, gamma)
            s0 = make_coherent(1.0)
            series = qfi_vs_time(s0, p, 100)
            for t in (10, 100):
                fd = qfi_finite_difference(s0, p, t)
                worst = max(worst, abs(fd - series.qfi[t - 1]) / series.qfi[t - 1])
    rows.append(("qfi_tangent_vs_finite_difference", float(worst), 1e-5, bool(worst < 1e-5)))

    worst = 0.0
    for N in (1.0, 4.0, 25.0):
        series = coherent_reference(N, 0.0, 1000)
        for t in (10, 100, 1000):
            b = qfi_coherent_benchmark(N, t)
            worst = max(worst, abs(series.qfi[t - 1] - b) / b)
    rows.append(("coherent_benchmark_closure", float(worst), 1e-9, bool(worst < 1e-9)))
    return rows


def _out_paths(cfg: RunConfig) -> tuple[Path, Path]:
    base = cfg.output_path or f"kicked_mzi_{cfg.command.replace('-', '_')}"
    if base.endswith(".csv"):
        base = base[:-4]
    return Path(base + ".csv"), Path(base + ".json")


def write_csv(path: Path, header: Sequence[str], rows: Sequence[tuple]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)  # RFC 4180: CRLF line endings, minimal quoting
        writer.writerow(header)
        for row in rows:
            writer.writerow([_num(x) for x in row])


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def run(cfg: RunConfig) -> int:
    try:
        validate(cfg)
        workers = resolve_threads(cfg)
        if cfg.command == "qfi-vs-time" and cfg.phi is not None and cfg.r is not None:
            p = KickParams(cfg.phi, cfg.r, cfg.chi or 0.0, cfg.gamma_tau or 0.0)
            if not is_stable_with_loss(p):
                raise UnstableDynamicsError(
                    f"(phi={cfg.phi!r}, r={cfg.r!r}) violates the stability condition "
                    "4e^(2r) > (1+e^(2r))^2 cos^2(phi)"
                    + ("" if p.gamma_tau == 0 else " even with loss (spectral radius >= e^(gamma_tau/2))")
                )
        rows, extra = _execute(cfg, workers)
    except (UsageError, ValueError) as exc:
        # library ValueErrors flag argument combinations the parser cannot see
        print(f"kicked-mzi: error: {exc}", file=sys.stderr)
        return 2
    except KickedMZIError as exc:
        print(f"kicked-mzi: numerical failure: {exc}", file=sys.stderr)
        return 1

    csv_path, json_path = _out_paths(cfg)
    write_csv(csv_path, COLUMNS[cfg.command], rows)
    meta = {
        "config": config_to_dict(cfg),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "columns": list(COLUMNS[cfg.command]),
        "derived": _derived(cfg),
        "status": "ok",
        **extra,
    }
    json_path.write_text(json.dumps(_jsonable(meta), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if cfg.command == "selfcheck" and not extra.get("all_passed"):
        print("kicked-mzi: selfcheck failed", file=sys.stderr)
        return 1
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"kicked-mzi: error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
