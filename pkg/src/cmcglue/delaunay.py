"""Delaunay surfaces in isothermal coordinates.

The profile functions sigma(s), kappa(s) of a Delaunay surface D_tau are
obtained by integrating the second-order form of the profile ODE from the
neck s = 0.  Periods come from quadrature on the trigonometrically
substituted (nonsingular) integrands and are cross-checked against the
integrated profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import BPoly

DEFAULT_TOL = 1e-10
NODES_PER_PERIOD = 512

_QUAD_OPTS = dict(epsabs=1e-14, epsrel=1e-13, limit=400)


class DelaunayParameterError(ValueError):
    """Raised for a Delaunay parameter outside (-inf, 0) U (0, 1]."""


class PeriodMismatchError(RuntimeError):
    """Quadrature and ODE routes to a period disagree beyond tolerance."""


def check_tau(tau: float, allow_cylinder: bool = True) -> float:
    tau = float(tau)
    if not math.isfinite(tau) or tau == 0.0:
        raise DelaunayParameterError(f"tau must be finite and nonzero, got {tau!r}")
    if tau > 1.0:
        raise DelaunayParameterError(f"tau must be <= 1, got {tau!r}")
    if tau == 1.0 and not allow_cylinder:
        raise DelaunayParameterError("tau = 1 (cylinder) has no profile period")
    return tau


def classify(tau: float) -> str:
    tau = check_tau(tau)
    if tau == 1.0:
        return "cylinder"
    return "unduloid" if tau > 0 else "nodoid"


def turning_point(tau: float) -> float:
    """Return sigma_* > 0 with tau^2 cosh^2 = 1 (tau > 0) or tau^2 sinh^2 = 1 (tau < 0)."""
    tau = check_tau(tau)
    if tau == 1.0:
        return 0.0
    if tau > 0:
        return math.acosh(1.0 / tau)
    return math.asinh(1.0 / abs(tau))


def _c(tau, sigma):
    # cosh for unduloids, sinh for nodoids; appears in kappa' and in the normal
    return np.cosh(sigma) if tau > 0 else np.sinh(sigma)


def _t_integrand(tau):
    if tau > 0:
        a = 1.0 - tau * tau
        return lambda x: math.sqrt(1.0 - a * math.cos(x) ** 2)
    t2 = tau * tau
    return lambda x: math.sin(x) ** 2 / math.sqrt(t2 + math.sin(x) ** 2)


def _s_integrand(tau):
    t2 = tau * tau
    if tau > 0:
        a = 1.0 - t2
        return lambda x: 1.0 / math.sqrt(t2 + a * math.sin(x) ** 2)
    return lambda x: 1.0 / math.sqrt(t2 + math.sin(x) ** 2)


@lru_cache(maxsize=4096)
def _quad_T(tau: float) -> float:
    # integrands are even in x; integrate the half range and double
    val, _ = quad(_t_integrand(tau), 0.0, math.pi / 2, **_QUAD_OPTS)
    return val  # 2T = 2 * val  =>  T = val


@lru_cache(maxsize=4096)
def _quad_s(tau: float) -> float:
    val, _ = quad(_s_integrand(tau), 0.0, math.pi / 2, points=[0.0], **_QUAD_OPTS)
    return 2.0 * val


def _rhs(tau):
    t2 = tau * tau
    c = np.cosh if tau > 0 else np.sinh

    def f(s, y):
        sg, dsg, _ = y
        ch, sh = np.cosh(sg), np.sinh(sg)
        return [dsg, -t2 * ch * sh, t2 * np.exp(sg) * c(sg)]

    return f


def _ode_half_period(tau: float, tol: float) -> float:
    """First return of sigma' to zero from above: the ODE-event route to s_tau."""
    sstar = turning_point(tau)

    def ev(s, y):
        return y[1]

    ev.direction = -1
    ev.terminal = True
    guess = _quad_s(tau)
    sol = solve_ivp(_rhs(tau), (0.0, 3.0 * guess), [-sstar, 0.0, 0.0], method="DOP853",
                    rtol=tol * 1e-2, atol=tol * 1e-2, events=ev)
    if not sol.t_events[0].size:
        raise PeriodMismatchError(f"no turning point found for tau={tau}")
    return float(sol.t_events[0][0])


def half_period(tau: float, tol: float = DEFAULT_TOL, cross_check: bool = True) -> float:
    """s_tau, half the least period of sigma.

    Computed by quadrature after the substitution that removes the endpoint
    singularity; the ODE event route is used as a cross-check.
    """
    tau = check_tau(tau, allow_cylinder=False)
    s = _quad_s(tau)
    if cross_check:
        s_ode = _ode_half_period(tau, tol)
        if abs(s_ode - s) > 10 * tol * max(1.0, s):
            raise PeriodMismatchError(
                f"half period mismatch at tau={tau}: quadrature {s!r}, ODE {s_ode!r}")
    return s


def physical_period(tau: float, tol: float = DEFAULT_TOL, cross_check: bool = True) -> float:
    """T_tau, half the least spatial period 2 T_tau of D_tau along its axis.

    Cross-checked against the integrated profile, for which
    kappa(2 s_tau) / 2 equals the spatial period 2 T_tau.
    """
    tau = check_tau(tau)
    T = _quad_T(tau)
    if cross_check and tau != 1.0:
        prof = solve_profile(tau, n_periods=1, tol=tol)
        T_ode = prof.kappa_period / 4.0
        if abs(T_ode - T) > 10 * tol * T:
            raise PeriodMismatchError(
                f"physical period mismatch at tau={tau}: quadrature {T!r}, ODE {T_ode!r}")
    return T


def period_derivative(tau: float, h: float = 1e-4) -> float:
    """Central difference (T_{tau+h} - T_{tau-h}) / 2h."""
    tau = check_tau(tau)
    if h <= 0:
        raise ValueError("h must be positive")
    lo, hi = tau - h, tau + h
    if tau > 0 and (lo <= 0 or hi > 1.0):
        raise DelaunayParameterError(f"[{lo}, {hi}] leaves the unduloid branch (0, 1]")
    if tau < 0 and hi >= 0:
        raise DelaunayParameterError(f"[{lo}, {hi}] leaves the nodoid branch (-inf, 0)")
    return (_quad_T(hi) - _quad_T(lo)) / (2 * h)


@dataclass(frozen=True, eq=False)
class DelaunayProfile:
    """Sampled (sigma, sigma', kappa) on s_grid = [0, 2 n s_tau].

    Evaluation at arbitrary real s uses the symmetries sigma(-s) = sigma(s),
    kappa(-s) = -kappa(s) and the period 2 s_tau, with quintic Hermite
    interpolation on the first period.
    """

    tau: float
    s_grid: np.ndarray
    sigma: np.ndarray
    dsigma: np.ndarray
    kappa: np.ndarray
    sigma_star: float
    s_half: float
    T_phys: float
    n_periods: int
    degenerate: bool = False
    _interp: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for name in ("s_grid", "sigma", "dsigma", "kappa"):
            getattr(self, name).setflags(write=False)
        if self._interp is None:
            object.__setattr__(self, "_interp", self._build_interp())

    @property
    def period(self) -> float:
        return 2.0 * self.s_half

    @property
    def window(self) -> tuple[float, float]:
        return (-float(self.s_grid[-1]), float(self.s_grid[-1]))

    @property
    def kappa_period(self) -> float:
        """kappa(2 s_tau), the axial advance (times two) over one profile period."""
        if self.degenerate:
            return self.tau ** 2 * self.period
        return float(self.kappa[self._nodes_per_period])

    @property
    def _nodes_per_period(self) -> int:
        return (len(self.s_grid) - 1) // self.n_periods

    def _build_interp(self):
        if self.degenerate:
            return None
        m = self._nodes_per_period + 1
        s = self.s_grid[:m]
        sg, dsg, kp = self.sigma[:m], self.dsigma[:m], self.kappa[:m]
        t2 = self.tau ** 2
        d2sg = -t2 * np.cosh(sg) * np.sinh(sg)
        dkp = t2 * np.exp(sg) * _c(self.tau, sg)
        d2kp = t2 * dsg * np.exp(2 * sg)
        d3sg = -t2 * np.cosh(2 * sg) * dsg
        d4sg = -t2 * (2 * np.sinh(2 * sg) * dsg ** 2 + np.cosh(2 * sg) * d2sg)
        sig = BPoly.from_derivatives(s, np.column_stack([sg, dsg, d2sg, d3sg]))
        # sigma' gets its own interpolant: differentiating sig would amplify
        # rounding in its Bernstein coefficients by degree / spacing
        dsig = BPoly.from_derivatives(s, np.column_stack([dsg, d2sg, d3sg, d4sg]))
        kap = BPoly.from_derivatives(s, np.column_stack([kp, dkp, d2kp]))
        return sig, dsig, kap

    def evaluate(self, s, check_window: bool = False):
        """Return (sigma, dsigma, kappa) at s (array-like)."""
        s = np.asarray(s, dtype=float)
        if check_window:
            lo, hi = self.window
            if np.any(s < lo - 1e-12) or np.any(s > hi + 1e-12):
                raise ValueError(f"s outside sampled window [{lo}, {hi}]")
        if self.degenerate:
            z = np.zeros_like(s)
            return z, z.copy(), self.tau ** 2 * s
        P = self.period
        sign = np.where(s < 0, -1.0, 1.0)
        a = np.abs(s)
        q = np.floor(a / P)
        r = a - q * P
        sig, dsig, kap = self._interp
        sg = sig(r)
        dsg = dsig(r) * sign
        kp = sign * (kap(r) + q * self.kappa_period)
        return sg, dsg, kp

    def energy_residual(self) -> np.ndarray:
        t2 = self.tau ** 2
        c = np.cosh(self.sigma) if self.tau > 0 else np.sinh(self.sigma)
        return self.dsigma ** 2 + t2 * c ** 2 - 1.0


def solve_profile(tau: float, n_periods: int = 1, tol: float = DEFAULT_TOL,
                  nodes_per_period: int = NODES_PER_PERIOD) -> DelaunayProfile:
    """Integrate the Delaunay profile ODE over n_periods full periods of sigma."""
    tau = check_tau(tau)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    if tau == 1.0:
        s_half = math.pi  # limit of s_tau as tau -> 1
        s = np.linspace(0.0, 2 * s_half * n_periods, nodes_per_period * n_periods + 1)
        z = np.zeros_like(s)
        return DelaunayProfile(tau, s, z, z.copy(), s.copy(), 0.0, s_half, math.pi / 2,
                               n_periods, degenerate=True)
    sstar = turning_point(tau)
    s_half = half_period(tau, tol)
    T = _quad_T(tau)
    s = np.linspace(0.0, 2 * s_half * n_periods, nodes_per_period * n_periods + 1)
    rt = min(tol * 1e-2, 1e-12)
    # steps no longer than the node spacing keep dense-output error below the
    # step error, so node values carry no step-to-step noise into finite differences
    sol = solve_ivp(_rhs(tau), (0.0, s[-1]), [-sstar, 0.0, 0.0], method="DOP853",
                    t_eval=s, rtol=rt, atol=rt, max_step=s[1] - s[0])
    if not sol.success:
        raise RuntimeError(sol.message)
    sg, dsg, kp = sol.y
    return DelaunayProfile(tau, s, sg, dsg, kp, sstar, s_half, T, n_periods)


def rotation_to(axis) -> np.ndarray:
    """Rotation matrix sending e3 to the unit vector `axis`."""
    a = np.asarray(axis, dtype=float)
    n = np.linalg.norm(a)
    if abs(n - 1.0) > 1e-12:
        raise ValueError(f"axis must be a unit vector, |axis| = {n}")
    e3 = np.array([0.0, 0.0, 1.0])
    c = float(a @ e3)
    if c > 1 - 1e-15:
        return np.eye(3)
    if c < -1 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(e3, a)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


@dataclass(frozen=True, eq=False)
class DelaunaySurface:
    """The positioned surface D_tau^axis + offset."""

    profile: DelaunayProfile
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("axis must be a unit vector")
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=float))
        object.__setattr__(self, "rotation", rotation_to(axis))

    @property
    def tau(self) -> float:
        return self.profile.tau

    def canonical(self, s, theta):
        """Position and normal on D_tau^{e3}, broadcasting s against theta."""
        s, theta = np.broadcast_arrays(np.asarray(s, float), np.asarray(theta, float))
        tau = self.tau
        sg, dsg, kp = self.profile.evaluate(s)
        r = 0.5 * tau * np.exp(sg)
        ct, st = np.cos(theta), np.sin(theta)
        X = np.stack([r * ct, r * st, 0.5 * kp], axis=-1)
        c = _c(tau, sg) if not self.profile.degenerate else np.ones_like(sg)
        N = np.stack([-tau * c * ct, -tau * c * st, dsg], axis=-1)
        return X, N

    def point(self, s, theta, check_window: bool = True):
        """Return (X, N) of X_tau^axis(s, theta) + offset and its unit normal."""
        if check_window:
            lo, hi = self.profile.window
            sa = np.asarray(s, float)
            if np.any(sa < lo - 1e-12) or np.any(sa > hi + 1e-12):
                raise ValueError(f"s outside sampled window [{lo}, {hi}]")
        X, N = self.canonical(s, theta)
        R = self.rotation
        return X @ R.T + self.offset, N @ R.T


def surface_point(surface: DelaunaySurface, s: float, theta: float):
    X, N = surface.point(s, theta)
    return X, N
