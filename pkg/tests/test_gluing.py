import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import periods_oracle

from cmcglue.blocks import DFunctions, GraphModel, alpha_k, make_type1, make_type2, solve_balancing
from cmcglue.delaunay import _quad_T, half_period
from cmcglue.gluing import (DiscretizationError, MatchingError, NeckRecord, assemble,
                            curvature_deviation, cutoff_xi, delta_offset, extend_jacobi_field,
                            genus, glue_neck, lambda_gamma, log_linear_fit, minimal_n,
                            solve_matching, y_neck)


@settings(max_examples=200)
@given(st.floats(-3, 3))
def test_cutoff_partition(s):
    xi = cutoff_xi()
    a, b = float(xi(s)), float(xi.complement(s))
    assert 0 <= a <= 1
    assert a + b == pytest.approx(1.0, abs=1e-15)
    assert float(xi(-s)) == pytest.approx(b, abs=1e-15)


def test_cutoff_support_and_monotone():
    xi = cutoff_xi()
    s = np.linspace(-2, 2, 801)
    v = xi(s)
    assert np.all(v[s <= -1] == 1) and np.all(v[s >= 1] == 0)
    assert np.all(np.diff(v) <= 0)
    assert float(xi(0.0)) == 0.5


def test_matching_count_matches_oracle():
    # Lambda + n Gamma from mpmath periods at the interval ends counts the integers hit
    n, k, d = 20, 3, DFunctions()
    sk = math.sin(math.pi / k)

    def f(tau):
        tb = solve_balancing(tau, alpha_k(k))
        T, Tb = periods_oracle(tau)[1], periods_oracle(tb)[1]
        return (sk * (d.d0(tau) + d.d0bar(tau) + 2 * n * T) - d.d1(tau)) / Tb

    lo, hi = f(0.2), f(0.8)
    expected = math.floor(max(lo, hi)) - math.ceil(min(lo, hi)) + 1
    sols, monotone = solve_matching(n, k)
    assert monotone
    assert len(sols) == expected == 28
    for s in sols:
        assert 0.2 <= s.tau <= 0.8
        assert s.tau_bar == solve_balancing(s.tau, alpha_k(k))
        lam, gam = lambda_gamma(s.tau, k, d)
        assert abs(lam + n * gam - s.m) <= 1e-10


def test_matching_errors_and_minimal_n():
    with pytest.raises(ValueError):
        solve_matching(5, 3, interval=(0.8, 0.2))
    with pytest.raises(ValueError):
        solve_matching(5, 3, interval=(-0.5, 0.5))
    assert minimal_n(3) == 1
    assert solve_matching(1, 3)[0]


def test_delta_offset():
    d = DFunctions()
    assert delta_offset(4, 0.5, d) == pytest.approx(2.0 + 8 * _quad_T(0.5))
    with pytest.raises(ValueError):
        delta_offset(0, 0.5, d)


def test_glue_neck_validation():
    t1, t2 = make_type1(0.5, 3), make_type2(0.4, 3)
    with pytest.raises(ValueError):
        glue_neck(t2.end("E0"), t1.end("E0"), 3)
    e1 = t1.end("E1")
    with pytest.raises(MatchingError):
        glue_neck(e1, e1, 3, kind="Z", mirror_residual=1e-3)
    with pytest.raises(ValueError):
        glue_neck(e1, e1, 0, kind="Z")


def test_blended_graph_sides():
    neck = y_neck(0.5, 3, 4)
    th = np.linspace(0, 2 * np.pi, 9)
    for s in (-1.5, -1.0):
        np.testing.assert_allclose(neck.blended_graph(s, th), neck.side_a(s, th))
    for s in (1.0, 2.0):
        np.testing.assert_allclose(neck.blended_graph(s, th), neck.side_b(s, th))


def test_curvature_deviation_linear_and_decaying():
    a = curvature_deviation(y_neck(0.5, 3, 5))[0]
    b = curvature_deviation(y_neck(0.5, 3, 5).scaled(3.0))[0]
    assert b == pytest.approx(3 * a, rel=1e-6)
    # same parity two periods apart: ratio e^{-2 gamma s_tau}
    c = curvature_deviation(y_neck(0.5, 3, 7))[0]
    from cmcglue.floquet import indicial_root
    assert math.log(c / a) / 2 == pytest.approx(-indicial_root(0.5, 2) * half_period(0.5), rel=0.05)


def test_curvature_deviation_band_profile():
    # Floquet end graphs solve the linearized problem, so in the linear regime
    # (small graphs) H - 1 away from the blend is only discretization error
    neck = y_neck(0.5, 3, 2, graph_model=GraphModel(floquet=True)).scaled(1e-5)
    sup, bands = curvature_deviation(neck, bands=True)
    assert bands.shape[1] == 2
    inner = bands[np.isin(bands[:, 0], [-1, 0]), 1]
    # graphs grow toward the window ends and the discretization error with them;
    # compare with the bands up to four units from the neck
    mid = (np.abs(bands[:, 0] + 0.5) <= 3.5) & ~np.isin(bands[:, 0], [-1, 0])
    assert inner.max() > 100 * bands[mid, 1].max()


def test_coarse_grid_refinement_check():
    with pytest.raises(DiscretizationError):
        curvature_deviation(y_neck(0.5, 3, 5), nodes_per_period=16, max_disagreement=1e-6)


@pytest.fixture(scope="module")
def assembly():
    sols, _ = solve_matching(6, 3)
    return assemble(3, sols[0])


def test_assembly_topology(assembly):
    assert genus(assembly) == 3
    assert assembly.euler_characteristic() == -4
    assert assembly.is_gk_invariant()
    nodes, edges = assembly.gluing_graph
    assert len(nodes) == 4 and len(edges) == 6
    assert assembly.partition_sum_error(np.random.default_rng(0)) <= 1e-12


def test_assembly_boundary_check(assembly):
    from dataclasses import replace
    dup = replace(assembly, necks=assembly.necks + (NeckRecord("extra", "Y", (("core", "E0"), ("copy0", "E0")), 0),))
    with pytest.raises(ValueError):
        genus(dup)


def test_assemble_validation():
    sols, _ = solve_matching(6, 3)
    with pytest.raises(ValueError):
        assemble(4, sols[0])


def test_z_neck_fields(assembly):
    # a_perp is consistent across the mirror; the axial field flips sign and
    # leaves an O(1) blend mismatch that is reported, not hidden
    perp = extend_jacobi_field(assembly, "T_aperp", nodes_per_period=128)
    axial = extend_jacobi_field(assembly, "T_a", nodes_per_period=128)
    assert perp.annulus_residual < 1e-6
    assert axial.annulus_residual > 0.1
    with pytest.raises(ValueError):
        extend_jacobi_field(y_neck(0.5, 3, 3), "T_a")


def test_log_linear_fit():
    x = np.arange(5.0)
    fit = log_linear_fit(x, np.exp(0.5 - 2 * x))
    assert fit.slope == pytest.approx(-2) and fit.intercept == pytest.approx(0.5)
    assert fit.r2 == pytest.approx(1.0)
