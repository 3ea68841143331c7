import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kicked_mzi.dynamics import KickParams, TangentState, critical_phase, propagate, propagate_with_tangent
from kicked_mzi.errors import InconsistentTangentError, UnstableDynamicsError
from kicked_mzi.gaussian import Covariance, GaussianState, make_coherent, make_vacuum, purity
from kicked_mzi.qfi import (
    QfiSeries,
    benchmark_state,
    coherent_reference,
    max_rescaled_qfi,
    purity_derivative,
    qfi_coherent_benchmark,
    qfi_finite_difference,
    qfi_gaussian,
    qfi_noon_benchmark,
    qfi_vs_time,
)

from . import fock


def test_vacuum_rotation_carries_no_information():
    s = qfi_vs_time(make_vacuum(), KickParams(0.4, 0.0), 50)
    np.testing.assert_array_equal(s.qfi, 0.0)
    np.testing.assert_array_equal(s.photon_number, 0.0)


@pytest.mark.parametrize("alpha", [1.0, 0.3 - 2.0j])
def test_coherent_rotation(alpha):
    s = qfi_vs_time(make_coherent(alpha), KickParams(0.7, 0.0), 300)
    np.testing.assert_allclose(s.qfi, 4 * abs(alpha) ** 2 * s.t ** 2, rtol=1e-12)
    np.testing.assert_allclose(s.rescaled, s.qfi / s.t)


def test_coherent_rotation_with_loss():
    g = 0.01
    s = qfi_vs_time(make_coherent(2.0), KickParams(0.7, 0.0, 0.0, g), 500)
    np.testing.assert_allclose(s.qfi, 16.0 * s.t ** 2 * np.exp(-g * s.t), rtol=1e-11)
    np.testing.assert_allclose(s.purity, 1.0, atol=1e-15)


def test_series_shape_and_validation():
    s = qfi_vs_time(make_coherent(1.0), KickParams(0.3, 0.1), 17)
    assert isinstance(s, QfiSeries) and len(s) == 17
    np.testing.assert_array_equal(s.t, np.arange(1, 18))
    with pytest.raises(ValueError):
        qfi_vs_time(make_vacuum(), KickParams(0.3, 0.1), 0)


def test_unstable_series_hits_guard():
    with pytest.raises(UnstableDynamicsError):
        qfi_vs_time(make_vacuum(), KickParams(0.05, 0.1), 5000)


@pytest.mark.parametrize("phi, r, chi, alpha, t", [
    (0.5, 0.1, 0.0, 1.0, 5),
    (1.1, 0.2, 0.7, 0.5 + 0.5j, 4),
    (0.3, 0.15, 0.0, 0.0, 6),
])
def test_qfi_against_fock_basis(phi, r, chi, alpha, t):
    """Pure-state QFI of the kicked state in a truncated Fock basis."""
    dim = 90
    f_qfi, psi = fock.kicked_qfi(alpha, phi, r, -chi, t, dim)
    assert np.sum(np.abs(psi[-10:]) ** 2) < 1e-20  # truncation is harmless
    g_qfi = qfi_vs_time(make_coherent(alpha), KickParams(phi, r, chi), t).qfi[-1]
    assert g_qfi == pytest.approx(f_qfi, rel=1e-8)


def test_purity_derivative_matches_finite_difference():
    p = KickParams(0.6, 0.3, 0.2, 0.02)
    s0 = make_coherent(1.0 + 0.5j)
    t, h = 150, 1e-6
    pt = propagate_with_tangent(s0, p, t)[-1]
    hi = purity(propagate(s0, KickParams(p.phi + h, p.r, p.chi, p.gamma_tau), t))
    lo = purity(propagate(s0, KickParams(p.phi - h, p.r, p.chi, p.gamma_tau), t))
    assert purity_derivative(pt.state, pt.tangent) == pytest.approx((hi - lo) / (2 * h), rel=1e-5)


def test_lossless_purity_derivative_vanishes():
    pt = propagate_with_tangent(make_coherent(1.0), KickParams(0.4, 0.3), 300)[-1]
    scale = np.abs(pt.tangent.d_cov).max()
    assert abs(purity_derivative(pt.state, pt.tangent)) < 1e-10 * max(1.0, scale)


def test_pure_state_with_purity_change_is_rejected():
    with pytest.raises(InconsistentTangentError):
        qfi_gaussian(make_vacuum(), TangentState(0.0, 0.0, 1.0, 0.0, 1.0))


def test_traceless_tangent_on_pure_state():
    # rotation generator acting on a squeezed vacuum: dsigma = [[0, x], [x, 0]]
    s = GaussianState(0.0, 0.0, Covariance(math.e, 0.0, 1 / math.e))
    x = 1 / math.e - math.e
    val = qfi_gaussian(s, TangentState(0.0, 0.0, 0.0, x, 0.0))
    # known phase QFI of squeezed vacuum with e^{2r} = e: 2 sinh^2(2r)
    assert val == pytest.approx(0.5 * x * x, rel=1e-14)
    assert val == pytest.approx(2 * math.sinh(1.0) ** 2, rel=1e-14)


def test_unphysical_state_rejected():
    from kicked_mzi.qfi import _qfi_terms

    with pytest.raises(ValueError):
        _qfi_terms((0, 0, 0.5, 0.0, 0.5), 0, 0, 0, 0, 0)


def test_benchmark_examples():
    assert qfi_coherent_benchmark(400, 1000) == 8e8
    assert qfi_noon_benchmark(400, 1000) == 1.6e11
    assert qfi_noon_benchmark(0, 10) == 0.0
    with pytest.raises(ValueError):
        qfi_coherent_benchmark(-1, 10)
    with pytest.raises(ValueError):
        qfi_noon_benchmark(1, -10)


@given(st.floats(0, 1e4), st.integers(0, 10 ** 4))
def test_noon_over_coherent_is_half_n(N, t):
    cs = qfi_coherent_benchmark(N, t)
    if cs > 0:
        assert qfi_noon_benchmark(N, t) / cs == pytest.approx(N / 2, rel=1e-12)


@pytest.mark.parametrize("N", [1, 4, 25])
def test_benchmark_state_reproduces_coherent_benchmark(N):
    s = qfi_vs_time(benchmark_state(N), KickParams(0.1, 0.0), 1000)
    np.testing.assert_allclose(s.qfi, [qfi_coherent_benchmark(N, t) for t in s.t], rtol=1e-9)


def test_coherent_reference_decays():
    ref = coherent_reference(400, 0.01, 2000)
    assert ref.qfi[-1] < 0.01 * ref.qfi.max()
    assert int(ref.t[np.argmax(ref.qfi)]) == 200  # t^2 e^{-gamma t} peaks at 2 / gamma


@st.composite
def oracle_points(draw):
    r = draw(st.floats(0.05, 0.5))
    phi = draw(st.floats(critical_phase(r) + 0.02, math.pi / 2))
    chi = draw(st.sampled_from([0.0, 0.9]))
    alpha = complex(draw(st.floats(-2, 2)), draw(st.floats(-2, 2)))
    return KickParams(phi, r, chi, draw(st.sampled_from([0.0, 0.01]))), make_coherent(alpha)


@settings(max_examples=25, deadline=None)
@given(oracle_points(), st.sampled_from([10, 100, 300]))
def test_tangent_qfi_matches_finite_difference(point, t):
    p, s0 = point
    analytic = qfi_vs_time(s0, p, t).qfi[-1]
    assert qfi_finite_difference(s0, p, t) == pytest.approx(analytic, rel=1e-5)


def test_finite_difference_error_shrinks_quadratically():
    p, s0 = KickParams(0.8, 0.3, 0.0, 0.01), make_coherent(1.0)
    exact = qfi_vs_time(s0, p, 100).qfi[-1]
    errs = [abs(qfi_finite_difference(s0, p, 100, h) / exact - 1) for h in (1e-2, 5e-3)]
    assert errs[1] < errs[0] / 3  # second order: ratio ~ 4


def test_finite_difference_rejects_unstable_neighbourhood():
    r = 0.1
    p = KickParams(critical_phase(r) + 1e-7, r)
    with pytest.raises(UnstableDynamicsError):
        qfi_finite_difference(make_vacuum(), p, 10, h=1e-6)
    with pytest.raises(ValueError):
        qfi_finite_difference(make_vacuum(), KickParams(0.5, r), 10, h=0.0)


def test_max_rescaled_qfi():
    s = QfiSeries(
        t=np.arange(1, 6),
        qfi=np.array([1.0, 4.0, 6.0, 8.0, 5.0]),
        rescaled=np.array([1.0, 2.0, 2.0, 2.0, 1.0]),
        photon_number=np.zeros(5),
        purity=np.ones(5),
    )
    assert max_rescaled_qfi(s) == (2, 2.0)
    ref = coherent_reference(400, 0.01, 1000)
    t_opt, g = max_rescaled_qfi(ref)
    assert t_opt == 100  # t e^{-gamma t} peaks at 1 / gamma
    assert g == pytest.approx(2 * 400 * 100 * math.exp(-1), rel=1e-9)
