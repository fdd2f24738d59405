import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmcglue.delaunay import solve_profile
from cmcglue.jacobi import (compare_variation_routes, conformal_factor, delaunay_grid,
                            delaunay_patch, delaunay_variation_field, jacobi_apply,
                            linearization_check, orthonormal_frame, random_smooth_field,
                            rotation_field, translation_field)
from cmcglue.geometry import Grid, surface_jacobi


@pytest.fixture(scope="module")
def prof():
    return solve_profile(0.5, n_periods=2)


def test_conformal_metric(prof):
    grid = delaunay_grid(prof, 0.5, 512, 16)
    patch = delaunay_patch(prof, grid, s_order=4)
    lam = conformal_factor(prof, grid.s)[:, None]
    np.testing.assert_allclose(patch.E, np.broadcast_to(lam, patch.E.shape), rtol=1e-7)  # h^4 at one-sided ends
    np.testing.assert_allclose(patch.G, np.broadcast_to(lam, patch.G.shape), rtol=1e-10)
    assert np.abs(patch.F).max() < 1e-8


def test_closed_form_matches_general_operator(prof):
    # the isothermal formula and Delta + |A|^2 from the fundamental forms agree
    grid = delaunay_grid(prof, 0.5, 1024, 16)
    rng = np.random.default_rng(3)
    w = random_smooth_field(grid, rng)
    general = surface_jacobi(delaunay_patch(prof, grid, s_order=4), w)
    closed = jacobi_apply(0.5, w, grid, prof)
    inner = slice(8, -8)
    scale = np.abs(closed).max()
    assert np.abs(general[inner] - closed[inner]).max() < 1e-5 * scale


@settings(max_examples=6, deadline=None)
@given(st.sampled_from([0.3, 0.7, -0.4, -1.2]), st.floats(-1, 1), st.floats(-1, 1))
def test_kernel_fields_any_direction(tau, a, b):
    p = solve_profile(tau, n_periods=2)
    e = np.array([a, b, 1.0])
    e /= np.linalg.norm(e)
    grid = delaunay_grid(p, 0.5, 1024, 16)
    for fld in (translation_field(tau, e, grid, p), rotation_field(tau, e, grid, p)):
        scale = max(1.0, np.abs(fld.values).max())
        assert np.abs(jacobi_apply(tau, fld.values, grid, p)).max() < 1e-4 * scale


def test_rotation_about_axis_vanishes(prof):
    grid = delaunay_grid(prof, 0.5, 256, 16)
    assert np.abs(rotation_field(0.5, [0, 0, 1], grid, prof).values).max() < 1e-13


def test_orthonormal_frame():
    e, e1, e2 = orthonormal_frame([0.0, 0.6, 0.8])
    M = np.array([e, e1, e2])
    np.testing.assert_allclose(M @ M.T, np.eye(3), atol=1e-14)
    assert np.linalg.det(M) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        orthonormal_frame([1.0, 1.0, 0.0])


def test_variation_field_properties():
    var = delaunay_variation_field(0.5, nodes_per_period=512)
    assert var.shift_residual < 1e-8
    assert abs(var.p_tau) > 1
    s = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(var(s), var(-s))
    with pytest.raises(ValueError):
        var(np.array([1e3]))
    # Phi^D solves the rotationally invariant Jacobi equation
    grid = Grid(np.linspace(-4, 4, 1601), np.linspace(0, 2 * np.pi, 8, endpoint=False))
    u = np.repeat(var(grid.s)[:, None], 8, axis=1)
    p = solve_profile(0.5, n_periods=2)
    res = jacobi_apply(0.5, u, grid, p)[4:-4]
    assert np.abs(res).max() < 1e-6


def test_variation_routes_converge_linearly():
    # the family difference quotient has an O(h) error against the ODE field
    d1 = compare_variation_routes(0.5, 1e-2)
    d2 = compare_variation_routes(0.5, 5e-3)
    assert d1 < 0.05
    assert d1 / d2 == pytest.approx(2.0, rel=0.1)


def test_linearization_richardson(prof):
    grid = delaunay_grid(prof, 1.0, 512, 32)
    w = random_smooth_field(grid, np.random.default_rng(11))
    r = linearization_check(0.5, w, 0.004, grid, prof) / linearization_check(0.5, w, 0.002, grid, prof)
    assert 3.5 <= r <= 4.5


def test_apply_checks_grid(prof):
    grid = delaunay_grid(prof, 0.5, 64, 4)
    with pytest.raises(ValueError):
        jacobi_apply(0.5, np.zeros(grid.shape), grid, prof)
    grid = delaunay_grid(prof, 0.5, 64, 8)
    with pytest.raises(ValueError):
        jacobi_apply(0.5, np.zeros((3, 3)), grid, prof)
    with pytest.raises(ValueError):
        jacobi_apply(-0.5, np.zeros(grid.shape), grid, prof)


@pytest.mark.parametrize("s_order", [2, 4])
def test_kernel_residual_converges(prof, s_order):
    errs = []
    for npp in (256, 512):
        grid = delaunay_grid(prof, 1.0, npp, 16)
        u = translation_field(0.5, [1.0, 0.0, 0.0], grid, prof).values
        errs.append(np.abs(jacobi_apply(0.5, u, grid, prof, s_order=s_order)).max())
    assert np.log2(errs[0] / errs[1]) >= 1.8


def test_cylinder_constant_field():
    # tau = 1: tau^2 e^{2 sigma} = 1 and cosh(2 sigma) = 1, so L 1 = 4
    cyl = solve_profile(1.0)
    grid = delaunay_grid(cyl, 0.5, 64, 8)
    np.testing.assert_allclose(jacobi_apply(1.0, np.ones(grid.shape), grid, cyl), 4.0, atol=1e-12)
