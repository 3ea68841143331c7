"""Single-mode Gaussian states and the primitive maps acting on them.

Quadratures follow q = a + a^dag, p = i(a^dag - a), so the vacuum covariance
matrix is the identity and [x_j, x_k] = 2i omega_jk.  The covariance is kept
as its three independent entries so that it is symmetric by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# det(sigma) >= 1 - PHYSICALITY_TOL holds wherever float64 resolves it.  Long
# lossless runs through strongly squeezed states drift by ~1e-14 of the peak
# qq*pp, so constructors only reject states below 1 - DET_GUARD.
PHYSICALITY_TOL = 1e-9
DET_GUARD = 1e-5
SYMPLECTIC_TOL = 1e-6

OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class Covariance:
    qq: float
    qp: float
    pp: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.qq, self.qp, self.pp)):
            raise ValueError(f"non-finite covariance entries {self}")
        if self.qq <= 0 or self.pp <= 0 or self.det <= 0:
            raise ValueError(f"covariance is not positive definite: {self}")
        if self.det < 1.0 - DET_GUARD:
            raise ValueError(
                f"covariance violates the uncertainty bound (det = {self.det!r}); "
                "unphysical input or precision exhausted"
            )

    @property
    def det(self) -> float:
        return self.qq * self.pp - self.qp * self.qp

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.qq, self.qp], [self.qp, self.pp]])

    def inverse(self) -> np.ndarray:
        # 2x2 adjugate; exact up to rounding
        d = self.det
        return np.array([[self.pp, -self.qp], [-self.qp, self.qq]]) / d

    @classmethod
    def from_matrix(cls, m) -> "Covariance":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError("covariance matrix must be symmetric")
        return cls(float(m[0, 0]), 0.5 * float(m[0, 1] + m[1, 0]), float(m[1, 1]))


@dataclass(frozen=True)
class GaussianState:
    """Mean quadratures (q, p) and covariance of one bosonic mode."""

    q: float
    p: float
    cov: Covariance

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValueError(f"non-finite mean ({self.q}, {self.p})")

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.q, self.p])


def make_vacuum() -> GaussianState:
    return GaussianState(0.0, 0.0, Covariance(1.0, 0.0, 1.0))


def make_coherent(alpha: complex) -> GaussianState:
    """Coherent state |alpha>: mean (alpha + alpha*, i(alpha* - alpha)) = 2 (Re alpha, Im alpha)."""
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise ValueError(f"non-finite amplitude {alpha}")
    return GaussianState(2.0 * alpha.real, 2.0 * alpha.imag, Covariance(1.0, 0.0, 1.0))


def rotation_matrix(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, s], [-s, c]])


def squeeze_matrix(r: float, chi: float = 0.0) -> np.ndarray:
    if r < 0:
        raise ValueError(f"squeeze strength must be >= 0, got {r}")
    ch, sh = math.cosh(r), math.sinh(r)
    c, s = math.cos(chi), math.sin(chi)
    return np.array([[ch + sh * c, sh * s], [sh * s, ch - sh * c]])


def congruence(a, b, qq, qp, pp):
    """Entries (qq, qp, pq, pp) of A sigma B^T for 2x2 A, B given row-major as 4-tuples.

    Plain arithmetic, so the covariance entries may be floats or numpy arrays.
    """
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    # rows of sigma B^T
    x00 = qq * b0 + qp * b1
    x01 = qq * b2 + qp * b3
    x10 = qp * b0 + pp * b1
    x11 = qp * b2 + pp * b3
    return (
        a0 * x00 + a1 * x10,
        a0 * x01 + a1 * x11,
        a2 * x00 + a3 * x10,
        a2 * x01 + a3 * x11,
    )


def _entries(S) -> tuple[float, float, float, float]:
    S = np.asarray(S, dtype=float)
    return float(S[0, 0]), float(S[0, 1]), float(S[1, 0]), float(S[1, 1])


def apply_symplectic(S, s: GaussianState) -> GaussianState:
    """Gaussian unitary on the moments: d -> S d, sigma -> S sigma S^T."""
    a = _entries(S)
    det = a[0] * a[3] - a[1] * a[2]
    if abs(det - 1.0) > SYMPLECTIC_TOL:
        raise ValueError(f"matrix is not symplectic (det = {det!r})")
    c = s.cov
    qq, qp, _, pp = congruence(a, a, c.qq, c.qp, c.pp)
    return GaussianState(
        a[0] * s.q + a[1] * s.p,
        a[2] * s.q + a[3] * s.p,
        Covariance(qq, qp, pp),
    )


def apply_loss(s: GaussianState, gamma_tau: float) -> GaussianState:
    """Zero-temperature photon loss over one period: contract toward the vacuum."""
    if not gamma_tau >= 0:
        raise ValueError(f"loss exponent must be >= 0, got {gamma_tau}")
    if gamma_tau == 0:
        return s
    amp = math.exp(-0.5 * gamma_tau)
    keep = math.exp(-gamma_tau)
    c = s.cov
    return GaussianState(
        amp * s.q,
        amp * s.p,
        Covariance(keep * c.qq + (1 - keep), keep * c.qp, keep * c.pp + (1 - keep)),
    )


def photon_number(s: GaussianState) -> float:
    """<a^dag a> = (sigma_qq + sigma_pp + q^2 + p^2 - 2) / 4."""
    c = s.cov
    return 0.25 * (c.qq + c.pp + s.q * s.q + s.p * s.p - 2.0)


def purity(s: GaussianState) -> float:
    return s.cov.det ** -0.5
