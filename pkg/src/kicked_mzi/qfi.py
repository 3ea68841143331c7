"""Quantum Fisher information of single-mode Gaussian states with respect to the phase.

    I = 1/2 Tr[(sigma^-1 dsigma)^2] / (1 + P^2) + 2 (dP)^2 / (1 - P^4) + dd^T sigma^-1 dd

with P = det(sigma)^(-1/2).  The derivatives come either from the tangent
co-propagated by ``dynamics.iterate`` or, for the oracle, from central finite
differences of the propagated state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import (
    PHOTON_GUARD,
    KickParams,
    TangentState,
    is_stable_with_loss,
    iterate,
    precision_exhausted,
    propagate,
    raw_photon_number,
)
from .errors import InconsistentTangentError, UnstableDynamicsError
from .gaussian import DET_GUARD, GaussianState, make_coherent

PURE_TOL = 1e-10
PURE_DP_TOL = 1e-8
CLIP_TOL = 1e-9


@dataclass(frozen=True)
class QfiSeries:
    t: np.ndarray
    qfi: np.ndarray
    rescaled: np.ndarray
    photon_number: np.ndarray
    purity: np.ndarray

    def __len__(self):
        return len(self.t)


class RescaledOptimum(NamedTuple):
    t_opt: int
    g_max: float


def _qfi_terms(x, dq, dp, dqq, dqp, dpp, dP=None):
    """Three-term Gaussian QFI from raw moments; dP=None derives it from the tangent.

    x is (q, p, qq, qp, pp) with an optional propagated det as a sixth entry.
    """
    qq, qp, pp = x[2:5]
    det = x[5] if len(x) > 5 else qq * pp - qp * qp
    if not det >= 1.0 - DET_GUARD:
        raise ValueError(f"covariance is singular or unphysical (det = {det!r})")
    # sigma^-1 dsigma via the adjugate
    a00 = (pp * dqq - qp * dqp) / det
    a01 = (pp * dqp - qp * dpp) / det
    a10 = (qq * dqp - qp * dqq) / det
    a11 = (qq * dpp - qp * dqp) / det
    P = det ** -0.5
    term1 = 0.5 * (a00 * a00 + 2.0 * a01 * a10 + a11 * a11) / (1.0 + P * P)
    term3 = (pp * dq * dq - 2.0 * qp * dq * dp + qq * dp * dp) / det

    derived = dP is None
    if derived:
        dP = -0.5 * P * (a00 + a11)
    if 1.0 - P < PURE_TOL:
        # unitary dynamics: dP vanishes identically, only rounding is left
        if derived:
            scale = (abs(pp * dqq) + abs(qq * dpp) + 2.0 * abs(qp * dqp)) / det
            if abs(dP) > PURE_DP_TOL * max(1.0, 0.5 * P * scale):
                raise InconsistentTangentError(
                    f"pure state (P = {P!r}) with purity derivative {dP!r}"
                )
        term2 = 0.0
    else:
        term2 = 2.0 * dP * dP / (1.0 - P ** 4)

    total = term1 + term2 + term3
    if total < 0:
        if total < -CLIP_TOL * max(1.0, abs(term1) + abs(term3)):
            raise InconsistentTangentError(f"negative QFI {total!r}")
        total = 0.0
    return total


def qfi_gaussian(s: GaussianState, tg: TangentState) -> float:
    return _qfi_terms(
        (s.q, s.p, s.cov.qq, s.cov.qp, s.cov.pp), tg.dq, tg.dp, tg.dqq, tg.dqp, tg.dpp
    )


def purity_derivative(s: GaussianState, tg: TangentState) -> float:
    """dP = -1/2 P Tr(sigma^-1 dsigma)."""
    c = s.cov
    tr = (c.pp * tg.dqq + c.qq * tg.dpp - 2.0 * c.qp * tg.dqp) / c.det
    return -0.5 * c.det ** -0.5 * tr


def qfi_vs_time(s0: GaussianState, p: KickParams, t_max: int) -> QfiSeries:
    """QFI, rescaled QFI, photon number and purity at every step 1..t_max."""
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    qfi = np.empty(t_max)
    nbar = np.empty(t_max)
    pur = np.empty(t_max)
    for k, x, tg in iterate(s0, p, t_max, tangent=True):
        if k == 0:
            continue
        n = raw_photon_number(x)
        if not n <= PHOTON_GUARD:
            raise UnstableDynamicsError(
                f"photon number {n:.3g} exceeded guard {PHOTON_GUARD:g} at step {k}; "
                f"(phi={p.phi}, r={p.r}) violates 4e^(2r) > (1+e^(2r))^2 cos^2(phi)"
            )
        try:
            qfi[k - 1] = _qfi_terms(x, *tg)
        except (ValueError, InconsistentTangentError) as exc:
            if precision_exhausted(x[2], x[4]):
                raise UnstableDynamicsError(f"precision exhausted at step {k} (photon number {n:.3g})") from exc
            raise
        nbar[k - 1] = n
        pur[k - 1] = x[5] ** -0.5
    t = np.arange(1, t_max + 1)
    return QfiSeries(t=t, qfi=qfi, rescaled=qfi / t, photon_number=nbar, purity=pur)


def qfi_coherent_benchmark(N: float, t: int) -> float:
    """Non-kicked interferometer, coherent input with N photons in total: 2 N t^2."""
    if N < 0 or t < 0:
        raise ValueError("benchmark needs N >= 0 and t >= 0")
    return 2.0 * N * t * t


def qfi_noon_benchmark(N: float, t: int) -> float:
    """Non-kicked interferometer, N00N input: N^2 t^2."""
    if N < 0 or t < 0:
        raise ValueError("benchmark needs N >= 0 and t >= 0")
    return float(N) * N * t * t


def benchmark_state(N: float) -> GaussianState:
    """Active-arm state of the coherent benchmark with N photons in total, mean (sqrt(2N), 0)."""
    return make_coherent(math.sqrt(0.5 * N))


def coherent_reference(N: float, gamma_tau: float, t_max: int, phi: float = 0.1) -> QfiSeries:
    """QFI series of the non-kicked (r = 0) interferometer fed with the coherent benchmark state."""
    return qfi_vs_time(benchmark_state(N), KickParams(phi=phi, r=0.0, gamma_tau=gamma_tau), t_max)


def qfi_finite_difference(s0: GaussianState, p: KickParams, t: int, h: float | None = None) -> float:
    """Independent QFI estimate from states propagated at phi - h, phi, phi + h."""
    if h is None:
        h = 1e-6 * max(1.0, abs(p.phi))
    if not h > 0:
        raise ValueError(f"step h must be > 0, got {h}")
    lo = KickParams(p.phi - h, p.r, p.chi, p.gamma_tau)
    hi = KickParams(p.phi + h, p.r, p.chi, p.gamma_tau)
    for side in (lo, hi):
        if not is_stable_with_loss(side):
            raise UnstableDynamicsError(f"phi = {side.phi!r} is outside the stable region (r = {p.r})")
    sm, s0_, sp = propagate(s0, lo, t), propagate(s0, p, t), propagate(s0, hi, t)

    def diff(a, b):
        return (b - a) / (2.0 * h)

    dP = diff(sm.cov.det ** -0.5, sp.cov.det ** -0.5)
    return _qfi_terms(
        (s0_.q, s0_.p, s0_.cov.qq, s0_.cov.qp, s0_.cov.pp),
        diff(sm.q, sp.q),
        diff(sm.p, sp.p),
        diff(sm.cov.qq, sp.cov.qq),
        diff(sm.cov.qp, sp.cov.qp),
        diff(sm.cov.pp, sp.cov.pp),
        dP=dP,
    )


def max_rescaled_qfi(series: QfiSeries) -> RescaledOptimum:
    """Optimal working point: argmax over t of QFI / t (earliest t on ties)."""
    if len(series) == 0:
        raise ValueError("empty series")
    i = int(np.argmax(series.rescaled))
    return RescaledOptimum(int(series.t[i]), float(series.rescaled[i]))
