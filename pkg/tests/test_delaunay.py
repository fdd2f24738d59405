import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import periods_oracle

from cmcglue.delaunay import (DelaunayParameterError, DelaunaySurface, _quad_T, check_tau,
                              classify, half_period, period_derivative, physical_period,
                              rotation_to, solve_profile, surface_point, turning_point)


# mpmath values at 30 digits, frozen
FROZEN = {
    0.5: (4.3130312949992856941, 1.2110560275684591364),
    -0.5: (4.0378116399568460829, 0.81286533580320906814),
    0.2: (6.0322249849552942065, 1.0505022269844496594),
    -1.0: (2.622057554292119512, 0.59907011736779595449),
}


@pytest.mark.parametrize("tau", sorted(FROZEN))
def test_periods_against_frozen_oracle(tau):
    s_ref, T_ref = FROZEN[tau]
    assert half_period(tau) == pytest.approx(s_ref, rel=1e-12)
    assert _quad_T(tau) == pytest.approx(T_ref, rel=1e-12)


@pytest.mark.parametrize("tau", [0.9, 0.05, -0.1, -3.0])
def test_periods_against_live_oracle(tau):
    s_ref, T_ref = periods_oracle(tau)
    assert half_period(tau) == pytest.approx(s_ref, rel=1e-10)
    assert physical_period(tau) == pytest.approx(T_ref, rel=1e-10)


def test_cylinder_limits():
    assert _quad_T(1.0) == pytest.approx(math.pi / 2, abs=1e-14)
    prof = solve_profile(1.0)
    assert prof.degenerate and prof.s_half == math.pi
    # half-period approaches pi from the unduloid side
    assert abs(half_period(1 - 1e-6) - math.pi) < 1e-4


@pytest.mark.parametrize("bad", [0.0, 1.5, float("nan"), float("inf")])
def test_invalid_tau(bad):
    with pytest.raises(DelaunayParameterError):
        check_tau(bad)
    with pytest.raises(DelaunayParameterError):
        solve_profile(bad)


def test_classify():
    assert classify(0.3) == "unduloid"
    assert classify(-0.3) == "nodoid"
    assert classify(1.0) == "cylinder"


@settings(max_examples=25, deadline=None)
@given(st.one_of(st.floats(0.02, 0.999), st.floats(-5.0, -0.02)))
def test_turning_point_is_energy_zero(tau):
    c = math.cosh if tau > 0 else math.sinh
    assert tau ** 2 * c(turning_point(tau)) ** 2 == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=8, deadline=None)
@given(st.one_of(st.floats(0.05, 0.95), st.floats(-2.0, -0.05)))
def test_energy_identity_and_symmetries(tau):
    prof = solve_profile(tau, n_periods=2, nodes_per_period=256)
    assert np.abs(prof.energy_residual()).max() < 1e-8
    s = np.linspace(-3.0, 3.0, 41)
    sg, dsg, kp = prof.evaluate(s)
    sg_m, dsg_m, kp_m = prof.evaluate(-s)
    np.testing.assert_allclose(sg, sg_m, atol=1e-12)
    np.testing.assert_allclose(dsg, -dsg_m, atol=1e-12)
    np.testing.assert_allclose(kp, -kp_m, atol=1e-12)
    P = 2 * prof.s_half
    sg_p, _, kp_p = prof.evaluate(s + P)
    np.testing.assert_allclose(sg_p, sg, atol=1e-9)
    np.testing.assert_allclose(kp_p - kp, prof.kappa_period, atol=1e-9)


def test_kappa_period_is_four_T():
    for tau in (0.3, -0.7):
        prof = solve_profile(tau)
        assert prof.kappa_period / 4 == pytest.approx(_quad_T(tau), rel=1e-10)


def test_period_derivative_positive_and_consistent():
    for tau in (0.3, 0.7, -0.4, -1.5):
        d = period_derivative(tau)
        assert d > 0
        h = 1e-3
        assert d == pytest.approx((_quad_T(tau + h) - _quad_T(tau - h)) / (2 * h), rel=1e-5)
    with pytest.raises(DelaunayParameterError):
        period_derivative(1e-5, h=1e-4)


def test_surface_geometry():
    prof = solve_profile(0.5, n_periods=2)
    surf = DelaunaySurface(prof)
    s, th = np.array([0.0, 1.3, 2.9]), np.array([0.0, 1.0, 4.0])
    X, N = surf.canonical(s, th)
    sg, dsg, kp = prof.evaluate(s)
    np.testing.assert_allclose(np.hypot(X[:, 0], X[:, 1]), 0.25 * np.exp(sg), rtol=1e-12)
    np.testing.assert_allclose(X[:, 2], kp / 2, atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(N, axis=1), 1.0, atol=1e-10)
    # neck at the origin plane with radius tau e^{-sigma_*} / 2
    assert X[0, 2] == 0.0
    assert X[0, 0] == pytest.approx(0.25 * math.exp(-turning_point(0.5)), rel=1e-12)


def test_rotated_surface_point():
    prof = solve_profile(-0.5, n_periods=2)
    axis = np.array([1.0, 0.0, 0.0])
    surf = DelaunaySurface(prof, axis, 2.0 * axis)
    R = rotation_to(axis)
    assert np.allclose(R @ [0, 0, 1], axis)
    X0, _ = DelaunaySurface(prof).canonical(0.7, 0.3)
    X1, N1 = surface_point(surf, 0.7, 0.3)
    np.testing.assert_allclose(X1, R @ X0 + 2.0 * axis, atol=1e-13)
    with pytest.raises(ValueError):
        rotation_to([1.0, 1.0, 0.0])


def test_cylinder_radius():
    surf = DelaunaySurface(solve_profile(1.0))
    X, _ = surf.canonical(np.array([0.0, 1.0, 5.0]), np.array([0.0, 2.0, 3.0]))
    np.testing.assert_allclose(np.hypot(X[:, 0], X[:, 1]), 0.5, atol=1e-15)
