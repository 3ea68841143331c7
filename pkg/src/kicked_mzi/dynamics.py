"""The kicked map: squeeze kick, phase rotation, photon loss, once per period.

The phase-derivative of the state is co-propagated analytically alongside the
state (product rule through each period), so the QFI never needs finite
differences.  Inner loops work on raw floats; dataclasses are only built for
what is handed back to the caller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import UnstableDynamicsError
from .gaussian import DET_GUARD, Covariance, GaussianState, congruence, rotation_matrix, squeeze_matrix

PHOTON_GUARD = 1e9
MIN_PROBE_STEPS = 1000


@dataclass(frozen=True)
class KickParams:
    """Per-period parameters: phase phi, kick strength r, squeeze phase chi, loss exponent gamma*tau."""

    phi: float
    r: float
    chi: float = 0.0
    gamma_tau: float = 0.0

    def __post_init__(self):
        for name in ("phi", "r", "chi", "gamma_tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.r < 0:
            raise ValueError(f"kick strength r must be >= 0, got {self.r}")
        if self.gamma_tau < 0:
            raise ValueError(f"gamma_tau must be >= 0, got {self.gamma_tau}")


@dataclass(frozen=True)
class TangentState:
    """d/dphi of the mean and covariance."""

    dq: float = 0.0
    dp: float = 0.0
    dqq: float = 0.0
    dqp: float = 0.0
    dpp: float = 0.0

    @property
    def d_mean(self) -> np.ndarray:
        return np.array([self.dq, self.dp])

    @property
    def d_cov(self) -> np.ndarray:
        return np.array([[self.dqq, self.dqp], [self.dqp, self.dpp]])


class TrajectoryPoint(NamedTuple):
    t: int
    state: GaussianState
    tangent: TangentState | None = None


@dataclass(frozen=True)
class SpectralData:
    theta1: float
    theta2: float
    c_factor: float
    stable: bool
    eigenvalues: tuple[complex, complex]


def step_matrix(p: KickParams) -> np.ndarray:
    return rotation_matrix(p.phi) @ squeeze_matrix(p.r, p.chi)


def step_matrix_dphi(p: KickParams) -> np.ndarray:
    c, s = math.cos(p.phi), math.sin(p.phi)
    return np.array([[-s, c], [-c, -s]]) @ squeeze_matrix(p.r, p.chi)


def _flat(m: np.ndarray) -> tuple[float, float, float, float]:
    return float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1])


def _raw(s: GaussianState) -> tuple[float, float, float, float, float]:
    return s.q, s.p, s.cov.qq, s.cov.qp, s.cov.pp


def precision_exhausted(qq: float, pp: float) -> bool:
    """True when det = qq*pp - qp^2 is dominated by round-off (~ eps*qq*pp)."""
    scale = abs(qq * pp)
    return not math.isfinite(scale) or scale * np.finfo(float).eps > 0.1 * DET_GUARD


def _state(x) -> GaussianState:
    try:
        return GaussianState(x[0], x[1], Covariance(x[2], x[3], x[4]))
    except ValueError as exc:
        # past this point the physicality check says nothing about physics,
        # only that the run has blown up
        if precision_exhausted(x[2], x[4]):
            raise UnstableDynamicsError(
                f"precision exhausted: covariance entries reached {max(x[2], x[4]):.3g}"
            ) from exc
        raise


def raw_photon_number(x) -> float:
    q, p, qq, _, pp = x[:5]
    return 0.25 * (qq + pp + q * q + p * p - 2.0)


def iterate(s0: GaussianState, p: KickParams, t: int, tangent: bool = False) -> Iterator[tuple]:
    """Yield (step, state_entries, tangent_entries) for steps 0..t.

    state_entries is (q, p, qq, qp, pp, det); tangent_entries is (dq, dp, dqq,
    dqp, dpp) for the phi-derivative, or None when tangent is False.

    det is carried by its own recursion rather than recomputed as qq*pp - qp^2,
    whose round-off (~ eps*qq*pp) swamps the purity of strongly squeezed states.
    """
    if t < 0:
        raise ValueError(f"number of steps must be >= 0, got {t}")
    S = _flat(step_matrix(p))
    Sd = _flat(step_matrix_dphi(p))
    amp = math.exp(-0.5 * p.gamma_tau)
    keep = math.exp(-p.gamma_tau)
    refill = 1.0 - keep
    s0_, s1, s2, s3 = S
    e0, e1, e2, e3 = Sd

    q, pq, qq, qp, pp = _raw(s0)
    det = s0.cov.det
    dq = dp = dqq = dqp = dpp = 0.0
    yield 0, (q, pq, qq, qp, pp, det), ((dq, dp, dqq, dqp, dpp) if tangent else None)
    for k in range(1, t + 1):
        if tangent:
            # product rule through the unitary part, then the (phi-independent) loss
            ndq = amp * (e0 * q + e1 * pq + s0_ * dq + s1 * dp)
            ndp = amp * (e2 * q + e3 * pq + s2 * dq + s3 * dp)
            x00, x01, x10, x11 = congruence(Sd, S, qq, qp, pp)
            y00, y01, _, y11 = congruence(S, S, dqq, dqp, dpp)
            dqq = keep * (2.0 * x00 + y00)
            dqp = keep * (x01 + x10 + y01)
            dpp = keep * (2.0 * x11 + y11)
            dq, dp = ndq, ndp
        nq = amp * (s0_ * q + s1 * pq)
        pq = amp * (s2 * q + s3 * pq)
        q = nq
        c00, c01, _, c11 = congruence(S, S, qq, qp, pp)
        # det(k X + (1-k) I) = k^2 det X + k (1-k) tr X + (1-k)^2, and det X = det sigma
        det = keep * keep * det + keep * refill * (c00 + c11) + refill * refill
        qq = keep * c00 + refill
        qp = keep * c01
        pp = keep * c11 + refill
        yield k, (q, pq, qq, qp, pp, det), ((dq, dp, dqq, dqp, dpp) if tangent else None)


def propagate(s0: GaussianState, p: KickParams, t: int, record: bool = False):
    """Apply t periods (squeeze -> rotate -> loss each).

    Returns the final state, or with record=True the list of TrajectoryPoint
    for steps 0..t.
    """
    if record:
        return [TrajectoryPoint(k, _state(x)) for k, x, _ in iterate(s0, p, t)]
    x = None
    for _, x, _ in iterate(s0, p, t):
        pass
    return _state(x)


def propagate_with_tangent(s0: GaussianState, p: KickParams, t: int) -> list[TrajectoryPoint]:
    """Trajectory for steps 0..t with the exact phi-derivative attached to each state."""
    return [
        TrajectoryPoint(k, _state(x), TangentState(*tg))
        for k, x, tg in iterate(s0, p, t, tangent=True)
    ]


def critical_phase(r: float) -> float:
    """Smallest phi > 0 on the stability boundary, arccos(sech r)."""
    if not r > 0:
        raise ValueError(f"critical phase needs r > 0 (degenerate at r = 0), got {r}")
    return math.acos(1.0 / math.cosh(r))


def is_stable(phi: float, r: float) -> bool:
    """Lossless stability: 4 e^{2r} > (1 + e^{2r})^2 cos^2 phi, i.e. |cos phi| < sech r."""
    return abs(math.cos(phi)) < 1.0 / math.cosh(r)


def _trace(phi: float, r: float) -> float:
    # trace of the one-period matrix; independent of chi
    return 2.0 * math.cosh(r) * math.cos(phi)


def spectral_radius(phi: float, r: float) -> float:
    tr = abs(_trace(phi, r))
    if tr < 2.0:
        return 1.0
    return 0.5 * (tr + math.sqrt(tr * tr - 4.0))


def is_stable_with_loss(p: KickParams) -> bool:
    """Bounded dynamics including loss: spectral radius of the step matrix below e^{gamma tau / 2}.

    Reduces to is_stable for gamma_tau = 0.  Loss widens the stable region.
    """
    if p.gamma_tau == 0:
        return is_stable(p.phi, p.r)
    return spectral_radius(p.phi, p.r) < math.exp(0.5 * p.gamma_tau)


def spectral_data(phi: float, r: float) -> SpectralData:
    """Eigenvalues, rotation angle theta1, orientation theta2 and amplitude C of the chi = 0 step matrix."""
    e2r = math.exp(2.0 * r)
    cphi = math.cos(phi)
    disc = 4.0 * e2r - (1.0 + e2r) ** 2 * cphi * cphi
    root = complex(0.0, math.sqrt(disc)) if disc > 0 else complex(math.sqrt(-disc), 0.0)
    pref = 0.5 * math.exp(-r)
    lam1 = pref * (cphi * (1.0 + e2r) + root)
    lam2 = pref * (cphi * (1.0 + e2r) - root)
    if not is_stable(phi, r):
        nan = float("nan")
        return SpectralData(nan, nan, nan, False, (lam1, lam2))
    sq = math.sqrt(disc)
    return SpectralData(
        theta1=math.atan2(sq, cphi * (1.0 + e2r)),
        theta2=math.atan2(sq, cphi * (e2r - 1.0)),
        c_factor=math.sin(phi) / sq,
        stable=True,
        eigenvalues=(lam1, lam2),
    )


def closed_form_S_t(phi: float, r: float, t: int) -> np.ndarray:
    """t-fold power of the chi = 0 step matrix from its spectral data."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    sd = spectral_data(phi, r)
    if not sd.stable:
        raise UnstableDynamicsError(
            f"(phi={phi}, r={r}) violates 4e^(2r) > (1+e^(2r))^2 cos^2(phi); no closed form"
        )
    C, th1, th2 = sd.c_factor, sd.theta1, sd.theta2
    er = math.exp(r)
    return np.array([
        [2 * er * C * math.sin(t * th1 + th2), 2 * C * math.sin(t * th1)],
        [-2 * er * er * C * math.sin(t * th1), 2 * er * C * math.sin(-t * th1 + th2)],
    ])


def default_probe_steps(p: KickParams) -> int:
    """Steps needed to see the photon-number maximum: several phase-space revolutions."""
    if is_stable(p.phi, p.r):
        th1 = spectral_data(p.phi, p.r).theta1
        return max(4 * math.ceil(2 * math.pi / th1), MIN_PROBE_STEPS)
    if p.gamma_tau > 0 and is_stable_with_loss(p):
        # no closed rotation angle; let the transient relax over ~10 loss times
        return max(math.ceil(10.0 / p.gamma_tau), MIN_PROBE_STEPS)
    return MIN_PROBE_STEPS


def max_photon_number(s0: GaussianState, p: KickParams, probe_steps: int | None = None) -> float:
    """Largest mean photon number over steps 0..probe_steps.

    Raises UnstableDynamicsError as soon as the photon number passes PHOTON_GUARD.
    """
    window = default_probe_steps(p)
    if probe_steps is None:
        probe_steps = window
    elif probe_steps < window:
        raise ValueError(f"probe_steps={probe_steps} is shorter than the minimum window {window}")
    best = 0.0
    for k, x, _ in iterate(s0, p, probe_steps):
        n = raw_photon_number(x)
        if n > PHOTON_GUARD:
            raise UnstableDynamicsError(
                f"photon number {n:.3g} exceeded guard {PHOTON_GUARD:g} at step {k} "
                f"(phi={p.phi}, r={p.r}, gamma_tau={p.gamma_tau})"
            )
        best = max(best, n)
    return best


def max_photon_grid(s0: GaussianState, phis, rs, steps: int, chi: float = 0.0, gamma_tau: float = 0.0) -> np.ndarray:
    """Vectorised max_photon_number over broadcast arrays of phi and r.

    Entries whose photon number passes PHOTON_GUARD come back as inf.  Uses a
    fixed number of steps for every entry.
    """
    phis, rs = np.broadcast_arrays(np.asarray(phis, float), np.asarray(rs, float))
    ch, sh = np.cosh(rs), np.sinh(rs)
    sq = (ch + sh * math.cos(chi), sh * math.sin(chi), sh * math.sin(chi), ch - sh * math.cos(chi))
    c, s = np.cos(phis), np.sin(phis)
    S = (c * sq[0] + s * sq[2], c * sq[1] + s * sq[3], -s * sq[0] + c * sq[2], -s * sq[1] + c * sq[3])
    amp, keep = math.exp(-0.5 * gamma_tau), math.exp(-gamma_tau)

    q = np.full(phis.shape, s0.q)
    pq = np.full(phis.shape, s0.p)
    qq = np.full(phis.shape, s0.cov.qq)
    qp = np.full(phis.shape, s0.cov.qp)
    pp = np.full(phis.shape, s0.cov.pp)
    best = raw_photon_number((q, pq, qq, qp, pp))
    blown = np.zeros(phis.shape, dtype=bool)
    for _ in range(steps):
        q, pq = amp * (S[0] * q + S[1] * pq), amp * (S[2] * q + S[3] * pq)
        c00, c01, _, c11 = congruence(S, S, qq, qp, pp)
        qq, qp, pp = keep * c00 + (1 - keep), keep * c01, keep * c11 + (1 - keep)
        n = raw_photon_number((q, pq, qq, qp, pp))
        best = np.maximum(best, n)
        over = n > PHOTON_GUARD
        if over.any():
            blown |= over
            # park blown entries at the vacuum so they cannot overflow
            q, pq, qp = np.where(over, 0.0, q), np.where(over, 0.0, pq), np.where(over, 0.0, qp)
            qq, pp = np.where(over, 1.0, qq), np.where(over, 1.0, pp)
    return np.where(blown, np.inf, best)
