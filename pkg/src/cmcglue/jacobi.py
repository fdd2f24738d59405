"""Jacobi operator of Delaunay surfaces and its explicit kernel elements."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly

from .delaunay import DelaunayProfile, DelaunaySurface, check_tau, solve_profile
from .geometry import Grid, Patch, diff_s, diff_theta, mean_curvature, normal_graph

# nodes per profile period for curvature validation and operator checks
PATCH_NODES_PER_PERIOD = 4096
JACOBI_NODES_PER_PERIOD = 2048
DEFAULT_N_THETA = 32


def _profile(tau, profile, n_periods=2):
    if profile is not None:
        if profile.tau != tau:
            raise ValueError("profile tau does not match")
        return profile
    return solve_profile(tau, n_periods=n_periods)


def delaunay_grid(profile: DelaunayProfile, periods: float = 1.0,
                  nodes_per_period: int = JACOBI_NODES_PER_PERIOD,
                  n_theta: int = DEFAULT_N_THETA, center: float = 0.0) -> Grid:
    """Grid on [center - periods*s_tau, center + periods*s_tau]."""
    half = periods * profile.s_half
    n_s = int(round(periods * nodes_per_period)) + 1
    return Grid.uniform(center - half, center + half, n_s, n_theta)


def delaunay_patch(profile: DelaunayProfile, grid: Grid, s_order: int = 2) -> Patch:
    X, _ = DelaunaySurface(profile).canonical(*grid.mesh())
    return Patch.from_positions(grid, X, orientation=1, s_order=s_order)


def conformal_factor(profile: DelaunayProfile, s) -> np.ndarray:
    """E = G = tau^2 e^{2 sigma} / 4 of the isothermal parameterization."""
    sg, _, _ = profile.evaluate(s)
    return 0.25 * profile.tau ** 2 * np.exp(2 * sg)


def jacobi_apply(tau: float, u: np.ndarray, grid: Grid, profile: DelaunayProfile | None = None,
                 s_order: int = 4) -> np.ndarray:
    """L u = 4/(tau^2 e^{2 sigma}) (u_ss + u_thetatheta + tau^2 cosh(2 sigma) u)."""
    tau = check_tau(tau)
    if len(grid.theta) < 8:
        raise ValueError("grid too coarse: need at least 8 theta nodes")
    u = np.asarray(u, dtype=float)
    if u.shape != grid.shape:
        raise ValueError("u must live on the grid")
    prof = _profile(tau, profile)
    sg, _, _ = prof.evaluate(grid.s)
    sg = sg[:, None]
    lap = diff_s(u, grid.hs, 2, s_order) + diff_theta(u, 2)
    return 4.0 / (tau * tau * np.exp(2 * sg)) * (lap + tau * tau * np.cosh(2 * sg) * u)


@dataclass(frozen=True, eq=False)
class JacobiField:
    kind: str  # "translation", "rotation" or "delaunay_variation"
    grid: Grid
    values: np.ndarray
    direction: np.ndarray | None = None
    normalization: float = 1.0

    def growth_fit(self) -> tuple[float, float, float]:
        """Least-squares fit sup_theta |values| ~ a + b |s|; returns (a, b, rms residual)."""
        m = np.abs(self.values).max(axis=1)
        A = np.column_stack([np.ones_like(self.grid.s), np.abs(self.grid.s)])
        coef, *_ = np.linalg.lstsq(A, m, rcond=None)
        res = m - A @ coef
        return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2)))


def _unit(e):
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    return e


def translation_field(tau: float, e, grid: Grid, profile: DelaunayProfile | None = None) -> JacobiField:
    """e . N on D_tau with axis e3."""
    e = _unit(e)
    prof = _profile(tau, profile)
    _, N = DelaunaySurface(prof).canonical(*grid.mesh())
    return JacobiField("translation", grid, N @ e, e)


def orthonormal_frame(e) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A direct orthonormal frame (e, e', e'')."""
    e = _unit(e)
    helper = np.array([1.0, 0.0, 0.0]) if abs(e[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - (helper @ e) * e
    e1 /= np.linalg.norm(e1)
    return e, e1, np.cross(e, e1)


def rotation_field(tau: float, e, grid: Grid, profile: DelaunayProfile | None = None) -> JacobiField:
    """(x.e')(e''.N) - (x.e'')(e'.N): normal speed of the rotation about e."""
    e, e1, e2 = orthonormal_frame(e)
    prof = _profile(tau, profile)
    X, N = DelaunaySurface(prof).canonical(*grid.mesh())
    vals = (X @ e1) * (N @ e2) - (X @ e2) * (N @ e1)
    return JacobiField("rotation", grid, vals, e)


@dataclass(frozen=True, eq=False)
class DelaunayVariation:
    tau: float
    s: np.ndarray
    values: np.ndarray
    dvalues: np.ndarray
    sigma: np.ndarray
    p_tau: float
    shift_residual: float

    def __post_init__(self):
        d2 = -self.tau ** 2 * np.cosh(2 * self.sigma) * self.values
        object.__setattr__(self, "_interp", BPoly.from_derivatives(
            self.s, np.column_stack([self.values, self.dvalues, d2])))

    def __call__(self, s):
        """Phi^D at arbitrary s inside the sampled window (even in s)."""
        a = np.abs(np.asarray(s, dtype=float))
        if np.any(a > self.s[-1] + 1e-9):
            raise ValueError("s outside the sampled window of the variation field")
        return self._interp(a)


def _variation_ode(tau, s_end, tol=1e-13):
    from .delaunay import turning_point
    t2 = tau * tau
    sstar = turning_point(tau)
    d2sg0 = -t2 * math.cosh(sstar) * math.sinh(-sstar)

    def rhs(s, y):
        sg, dsg, u, du = y
        return [dsg, -t2 * math.cosh(sg) * math.sinh(sg), du, -t2 * math.cosh(2 * sg) * u]

    return rhs, [-sstar, 0.0, 1.0 / d2sg0, 0.0]


def delaunay_variation_field(tau: float, n_periods: int = 3, nodes_per_period: int = JACOBI_NODES_PER_PERIOD,
                             tol: float = 1e-13) -> DelaunayVariation:
    """Even rotationally invariant Jacobi field with W(Phi^D, Phi^T)(0) = 1.

    Phi^T here is the axial translation field sigma'.  p_tau is the least-squares
    coefficient in Phi^D(s + 2 s_tau) - Phi^D(s) = p_tau sigma'(s) over one period.
    """
    tau = check_tau(tau, allow_cylinder=False)
    from .delaunay import half_period
    sh = half_period(tau)
    P = 2 * sh
    n_s = n_periods * nodes_per_period + 1
    s = np.linspace(0.0, n_periods * P, n_s)
    rhs, y0 = _variation_ode(tau, s[-1])
    sol = solve_ivp(rhs, (0.0, s[-1]), y0, method="DOP853", t_eval=s, rtol=tol, atol=tol,
                    max_step=s[1] - s[0])
    if not sol.success:
        raise RuntimeError(sol.message)
    sg, dsg, u, du = sol.y
    m = nodes_per_period
    diff = u[m:2 * m + 1] - u[:m + 1]
    phiT = dsg[:m + 1]
    p = float(phiT @ diff / (phiT @ phiT))
    resid = float(np.max(np.abs(diff - p * phiT)))
    if abs(p) < 1e-10:
        raise RuntimeError(f"degenerate shift coefficient p = {p} at tau = {tau}")
    return DelaunayVariation(tau, s, u, du, sg, p, resid)


def family_difference_field(tau: float, h: float, s: np.ndarray) -> np.ndarray:
    """(D_{tau+h} as a normal graph over D_tau) / h, sampled on the meridian theta = 0.

    For each s, solve (X_{tau+h}(s') - X_tau(s)) . X_s(s) = 0 by Newton on s'.
    """
    tau = check_tau(tau, allow_cylinder=False)
    t1 = check_tau(tau + h, allow_cylinder=False)
    if (t1 > 0) != (tau > 0):
        raise ValueError("tau and tau + h must share a branch")
    s = np.asarray(s, dtype=float)
    reach = float(np.max(np.abs(s))) + 1.0
    a = solve_profile(tau, n_periods=int(reach / (2 * solve_profile(tau).s_half)) + 2)
    b = solve_profile(t1, n_periods=int(reach / (2 * a.s_half)) + 3)
    Sa, Sb = DelaunaySurface(a), DelaunaySurface(b)
    zero = np.zeros_like(s)
    X0, N0 = Sa.canonical(s, zero)
    Xs = _meridian_tangent(a, s)
    sp = s.copy()
    for _ in range(30):
        X1, _ = Sb.canonical(sp, zero)
        T1 = _meridian_tangent(b, sp)
        r = np.einsum("ij,ij->i", X1 - X0, Xs)
        dr = np.einsum("ij,ij->i", T1, Xs)
        step = r / dr
        sp = sp - step
        if np.max(np.abs(step)) < 1e-14:
            break
    X1, _ = Sb.canonical(sp, zero)
    return np.einsum("ij,ij->i", X1 - X0, N0) / h


def _meridian_tangent(profile, s):
    sg, dsg, _ = profile.evaluate(s)
    tau = profile.tau
    c = np.cosh(sg) if tau > 0 else np.sinh(sg)
    # d/ds of (tau e^sigma / 2, 0, kappa / 2)
    return np.stack([0.5 * tau * np.exp(sg) * dsg, np.zeros_like(s), 0.5 * tau * tau * np.exp(sg) * c], axis=-1)


def compare_variation_routes(tau: float, h: float, periods: float = 1.0, n: int = 257) -> float:
    """Relative deviation between the ODE field and the finite-difference family field.

    The family field is fitted as c Phi^D + d Phi^T (both are rotationally
    invariant Jacobi fields); returns the relative sup residual of that fit.
    """
    from .delaunay import half_period
    var = delaunay_variation_field(tau, n_periods=int(math.ceil(periods)) + 1)
    sh = half_period(tau)
    s = np.linspace(-periods * sh, periods * sh, n)
    fam = family_difference_field(tau, h, s)
    prof = solve_profile(tau, n_periods=int(math.ceil(periods)) + 1)
    _, dsg, _ = prof.evaluate(s)
    A = np.column_stack([var(s), dsg])
    coef, *_ = np.linalg.lstsq(A, fam, rcond=None)
    return float(np.max(np.abs(fam - A @ coef)) / np.max(np.abs(fam)))


def two_mean_curvature(profile: DelaunayProfile, grid: Grid, w: np.ndarray | None = None,
                       s_order: int = 4) -> np.ndarray:
    base = delaunay_patch(profile, grid, s_order=s_order)
    if w is None:
        return 2 * mean_curvature(base)
    return 2 * mean_curvature(normal_graph(base, w))


def nonlinear_remainder(tau: float, w: np.ndarray, grid: Grid,
                        profile: DelaunayProfile | None = None) -> np.ndarray:
    """Q(w) = 2H(w) - 2H(0) - L w pointwise."""
    prof = _profile(tau, profile)
    w = np.asarray(w, dtype=float)
    base = delaunay_patch(prof, grid, s_order=4)
    H0 = 2 * mean_curvature(base)
    if not np.any(w):
        return np.zeros_like(H0)
    Hw = 2 * mean_curvature(normal_graph(base, w))
    return Hw - H0 - jacobi_apply(tau, w, grid, prof)


def linearization_check(tau: float, w: np.ndarray, eps: float, grid: Grid,
                        profile: DelaunayProfile | None = None) -> float:
    """sup |2H(eps w) - 2H(0) - eps L w|."""
    return float(np.max(np.abs(nonlinear_remainder(tau, eps * np.asarray(w), grid, profile))))


def random_smooth_field(grid: Grid, rng: np.random.Generator, modes: int = 3,
                        c1_bound: float = 1.0) -> np.ndarray:
    """A few theta modes times smooth bumps in s, scaled so the discrete C^1 norm is c1_bound."""
    s0, s1 = grid.s[0], grid.s[-1]
    x = (grid.s - s0) / (s1 - s0)
    S = x[:, None]
    T = grid.theta[None, :]
    w = np.zeros(grid.shape)
    for j in range(modes):
        a, ph, k = rng.normal(), rng.uniform(0, 2 * np.pi), rng.integers(1, 4)
        bump = np.sin(np.pi * k * S + rng.uniform(0, np.pi))
        w += a * bump * np.cos(j * T + ph)
    c1 = max(np.abs(w).max(), np.abs(diff_s(w, grid.hs, 1, 4)).max(), np.abs(diff_theta(w, 1)).max())
    return c1_bound * w / c1
