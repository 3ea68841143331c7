"""Experiment drivers: photon-cap calibration, QFI sweeps, plateaus and the gain map.

Every sweep point is an independent pure computation.  ``workers > 1`` farms
points out to a process pool; results always come back in input order, so the
output does not depend on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .dynamics import (
    KickParams,
    critical_phase,
    default_probe_steps,
    is_stable,
    is_stable_with_loss,
    max_photon_number,
)
from .errors import CalibrationError, KickedMZIError, NotConvergedError, UnstableDynamicsError
from .gaussian import GaussianState, make_coherent, photon_number
from .qfi import (
    QfiSeries,
    coherent_reference,
    max_rescaled_qfi,
    qfi_coherent_benchmark,
    qfi_noon_benchmark,
    qfi_vs_time,
)

MAX_HORIZON = 100_000
CAL_REL_TOL = 1e-3
MONOTONE_SAMPLES = 50
SCAN_STEPS = 2000


@dataclass(frozen=True)
class CalibrationResult:
    phi: float
    achieved_nmax: float
    iterations_used: int
    phi_below: float = math.nan  # largest probed phi whose photon maximum exceeds the cap
    method: str = "bisection"


@dataclass(frozen=True)
class SweepRecord:
    x: float
    qfi: float
    rescaled: float
    nmax: float
    purity: float
    benchmark_cs: float
    benchmark_noon: float
    reference: float = math.nan
    phi: float = math.nan
    input_photons: float = math.nan


@dataclass(frozen=True)
class GainCell:
    gamma: float
    nmax: float
    gain: float
    n_cap: float = math.nan
    phi: float = math.nan
    t_opt: int = 0
    g_kicked: float = math.nan
    t_opt_reference: int = 0
    g_reference: float = math.nan
    status: str = "ok"


class ScalingFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


@dataclass(frozen=True)
class TimeConfig:
    """One QFI-vs-time run; phi=None means calibrate phi to n_cap first (at zero loss)."""

    r: float
    alpha: complex
    t_max: int
    phi: float | None = None
    n_cap: float | None = None
    chi: float = 0.0
    gamma_tau: float = 0.0


@dataclass(frozen=True)
class TimeSweepResult:
    params: KickParams
    alpha: complex
    nmax: float
    series: QfiSeries
    reference: QfiSeries | None = field(default=None, repr=False)

    def records(self) -> list[SweepRecord]:
        n = 2.0 * self.nmax
        out = []
        for i, t in enumerate(self.series.t):
            t = int(t)
            cs = qfi_coherent_benchmark(n, t)
            out.append(SweepRecord(
                x=t,
                qfi=float(self.series.qfi[i]),
                rescaled=float(self.series.rescaled[i]),
                nmax=self.nmax,
                purity=float(self.series.purity[i]),
                benchmark_cs=cs,
                benchmark_noon=qfi_noon_benchmark(n, t),
                reference=cs if self.reference is None else float(self.reference.qfi[i]),
                phi=self.params.phi,
            ))
        return out


def parallel_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _nmax_or_inf(s0: GaussianState, p: KickParams, probe_steps: int | None) -> float:
    steps = default_probe_steps(p)
    if probe_steps is not None:
        steps = max(steps, probe_steps)
    try:
        return max_photon_number(s0, p, steps)
    except UnstableDynamicsError:
        return math.inf


def run_nmax(s0: GaussianState, p: KickParams, t: int = 0) -> float:
    """Photon maximum along the run's own dynamics (loss included) over max(t, default window)."""
    return max_photon_number(s0, p, max(t, default_probe_steps(p)))


def calibrate_phase(r: float, alpha: complex, n_cap: float, probe_steps: int | None = None,
                    rel_tol: float = CAL_REL_TOL) -> CalibrationResult:
    """Smallest phi above the critical phase whose lossless photon maximum stays under n_cap.

    Bisection on (critical_phase(r), pi/2]; falls back to the step-by-step scan
    from the critical phase when the photon maximum is not monotone in phi.
    """
    if not r > 0:
        raise ValueError(f"calibration needs r > 0, got {r}")
    s0 = make_coherent(alpha)
    n0 = photon_number(s0)
    if not n_cap > n0:
        raise CalibrationError(f"cap {n_cap} is not above the input photon number {n0}")
    phic = critical_phase(r)

    def nmax(phi):
        return _nmax_or_inf(s0, KickParams(phi, r), probe_steps)

    top = math.pi / 2
    n_top = nmax(top)
    if n_top > n_cap:
        raise CalibrationError(f"cap {n_cap} unreachable: even phi = pi/2 reaches {n_top:.6g} photons")

    grid = phic + (top - phic) * np.arange(1, MONOTONE_SAMPLES + 1) / MONOTONE_SAMPLES
    samples = [nmax(float(phi)) for phi in grid]
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(samples, samples[1:]))

    iterations = 0
    method = "bisection"
    lo, hi, n_hi = phic, top, n_top
    if not monotone:
        method = "scan"
        step = (top - phic) / SCAN_STEPS
        phi = phic
        while True:
            iterations += 1
            phi = min(phi + step, top)
            n = nmax(phi)
            if n <= n_cap:
                hi, n_hi = phi, n
                break
            lo = phi
        # refine inside the last step; the bracket is monotone at this resolution
    while iterations < 200:
        if n_hi >= n_cap * (1 - rel_tol) or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        iterations += 1
        mid = 0.5 * (lo + hi)
        n = nmax(mid)
        if n > n_cap:
            lo = mid
        else:
            hi, n_hi = mid, n
    if not is_stable(hi, r):
        raise CalibrationError(f"calibrated phi = {hi!r} is not stable")
    return CalibrationResult(hi, n_hi, iterations, lo, method)


def _resolve(cfg: TimeConfig) -> KickParams:
    phi = cfg.phi
    if phi is None:
        if cfg.n_cap is None:
            raise ValueError("either phi or n_cap is required")
        phi = calibrate_phase(cfg.r, cfg.alpha, cfg.n_cap).phi
    return KickParams(phi, cfg.r, cfg.chi, cfg.gamma_tau)


def _check_stable(p: KickParams):
    if not is_stable_with_loss(p):
        raise UnstableDynamicsError(
            f"(phi={p.phi!r}, r={p.r!r}, gamma_tau={p.gamma_tau!r}) is unstable: "
            "requires 4e^(2r) > (1+e^(2r))^2 cos^2(phi) (or spectral radius < e^(gamma tau/2) with loss)"
        )


def _time_run(cfg: TimeConfig) -> TimeSweepResult:
    p = _resolve(cfg)
    _check_stable(p)
    s0 = make_coherent(cfg.alpha)
    nmax = run_nmax(s0, p, cfg.t_max)
    series = qfi_vs_time(s0, p, cfg.t_max)
    ref = None
    if p.gamma_tau > 0:
        ref = coherent_reference(2.0 * nmax, p.gamma_tau, cfg.t_max, phi=p.phi)
    return TimeSweepResult(p, cfg.alpha, nmax, series, ref)


def sweep_qfi_vs_time(configs: Iterable[TimeConfig], workers: int = 1) -> list[TimeSweepResult]:
    return parallel_map(_time_run, list(configs), workers)


def _point(s0: GaussianState, p: KickParams, t: int, **extra) -> SweepRecord:
    _check_stable(p)
    nmax = run_nmax(s0, p, t)
    series = qfi_vs_time(s0, p, t)
    q = float(series.qfi[-1])
    n = 2.0 * nmax
    return SweepRecord(
        x=nmax, qfi=q, rescaled=q / t, nmax=nmax, purity=float(series.purity[-1]),
        benchmark_cs=qfi_coherent_benchmark(n, t), benchmark_noon=qfi_noon_benchmark(n, t),
        phi=p.phi, **extra,
    )


def _input_point(args) -> SweepRecord:
    r, phi, t, alpha = args
    s0 = make_coherent(alpha)
    return _point(s0, KickParams(phi, r), t, input_photons=abs(alpha) ** 2)


def sweep_qfi_vs_nmax_by_input(r: float, phi: float, t: int, alphas: Sequence[complex],
                               workers: int = 1) -> list[SweepRecord]:
    """QFI at fixed t and phi while the coherent input amplitude varies; x = achieved N_max."""
    return parallel_map(_input_point, [(r, phi, t, a) for a in alphas], workers)


def _phase_point(args) -> SweepRecord:
    r, t, alpha, phi = args
    s0 = make_coherent(alpha)
    return _point(s0, KickParams(phi, r), t, input_photons=abs(alpha) ** 2)


def sweep_qfi_vs_nmax_by_phase(r: float, t: int, alpha: complex, phis: Sequence[float],
                               workers: int = 1) -> list[SweepRecord]:
    """QFI at fixed t and input while phi varies; x = achieved N_max."""
    return parallel_map(_phase_point, [(r, t, alpha, phi) for phi in phis], workers)


def plateau_value(p: KickParams, s0: GaussianState, t_plateau: int = 4000, conv_tol: float = 1e-3) -> float:
    """Long-time QFI of the dissipative kicked map.

    Accepted when QFI(T) and QFI(T - T/40) agree to conv_tol relative (QFI values
    below 1 are compared absolutely, so a decay to zero also counts as converged).
    """
    if not p.gamma_tau > 0:
        raise ValueError("a plateau needs gamma_tau > 0")
    _check_stable(p)
    window = max(1, t_plateau // 40)
    if t_plateau <= window:
        raise ValueError(f"t_plateau={t_plateau} too short")
    series = qfi_vs_time(s0, p, t_plateau)
    end, before = float(series.qfi[-1]), float(series.qfi[-1 - window])
    if abs(end - before) > conv_tol * max(abs(end), 1.0):
        raise NotConvergedError(
            f"QFI changed by {abs(end - before) / max(abs(end), 1.0):.3g} (relative) over the "
            f"last {window} of {t_plateau} steps; tolerance {conv_tol}"
        )
    return end


def _plateau_point(args) -> SweepRecord:
    p, alpha, t_plateau, conv_tol = args
    s0 = make_coherent(alpha)
    value = plateau_value(p, s0, t_plateau, conv_tol)
    nmax = run_nmax(s0, p, t_plateau)
    n = 2.0 * nmax
    return SweepRecord(
        x=nmax, qfi=value, rescaled=value / t_plateau, nmax=nmax, purity=math.nan,
        benchmark_cs=qfi_coherent_benchmark(n, t_plateau),
        benchmark_noon=qfi_noon_benchmark(n, t_plateau),
        phi=p.phi, input_photons=abs(alpha) ** 2,
    )


def sweep_plateau(r: float, gamma_tau: float, phis: Sequence[float], alphas: Sequence[complex],
                  t_plateau: int = 4000, conv_tol: float = 1e-3, workers: int = 1) -> list[SweepRecord]:
    """Plateau QFI over every (phi, alpha) pair, phi-major order."""
    items = [(KickParams(phi, r, 0.0, gamma_tau), a, t_plateau, conv_tol) for phi in phis for a in alphas]
    return parallel_map(_plateau_point, items, workers)


def default_horizon(gamma_tau: float) -> int:
    if not gamma_tau > 0:
        raise ValueError("a default horizon needs gamma_tau > 0; pass t_horizon explicitly")
    return min(math.ceil(10.0 / gamma_tau), MAX_HORIZON)


def _gain_cell(args) -> GainCell:
    r, alpha, gamma, cap, phi, nmax, t_horizon = args
    horizon = t_horizon or default_horizon(gamma)
    try:
        p = KickParams(phi, r, 0.0, gamma)
        kicked = max_rescaled_qfi(qfi_vs_time(make_coherent(alpha), p, horizon))
        ref = max_rescaled_qfi(coherent_reference(2.0 * nmax, gamma, horizon, phi=phi))
    except KickedMZIError as exc:
        return GainCell(gamma, nmax, math.nan, cap, phi, status=f"error: {exc}")
    return GainCell(gamma, nmax, kicked.g_max / ref.g_max, cap, phi,
                    kicked.t_opt, kicked.g_max, ref.t_opt, ref.g_max)


def gain_map(r: float, alpha: complex, gamma_grid: Sequence[float], nmax_grid: Sequence[float],
             t_horizon: int | None = None, workers: int = 1) -> list[GainCell]:
    """Max rescaled QFI of the kicked map over the non-kicked coherent reference, per (gamma, N_max).

    N_max is set by calibrating phi at zero loss for the fixed input alpha; the
    reference gets N = 2 N_max photons and the same loss.  Cells are ordered
    N_max-major, then gamma; a failing cell carries its error in ``status``.
    """
    calibrations = parallel_map(_calibrate_cell, [(r, alpha, cap) for cap in nmax_grid], workers)
    items, failed = [], {}
    for cap, cal in zip(nmax_grid, calibrations):
        for gamma in gamma_grid:
            if isinstance(cal, str):
                failed[len(items)] = GainCell(gamma, math.nan, math.nan, cap, status=cal)
                items.append(None)
            else:
                items.append((r, alpha, gamma, cap, cal.phi, cal.achieved_nmax, t_horizon))
    todo = [x for x in items if x is not None]
    done = iter(parallel_map(_gain_cell, todo, workers))
    return [failed[i] if x is None else next(done) for i, x in enumerate(items)]


def _calibrate_cell(args):
    r, alpha, cap = args
    try:
        return calibrate_phase(r, alpha, cap)
    except KickedMZIError as exc:
        return f"error: {exc}"


def scaling_fit(records: Sequence[SweepRecord]) -> ScalingFit:
    """Least-squares line through (log x, log qfi)."""
    x = np.array([rec.x for rec in records], dtype=float)
    y = np.array([rec.qfi for rec in records], dtype=float)
    if len(x) < 3:
        raise ValueError("need at least 3 records")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive x and qfi")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) < 1e-12:
        raise ValueError("degenerate x range")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), r2)
