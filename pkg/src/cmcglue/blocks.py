"""Building blocks described by their Delaunay-asymptotic ends and symmetries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .delaunay import DelaunaySurface, check_tau, solve_profile

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

S1 = np.diag([-1.0, 1.0, 1.0])
S3 = np.diag([1.0, 1.0, -1.0])


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def alpha_k(k: int) -> float:
    if int(k) != k or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k!r}")
    return math.pi / 2 - math.pi / k


def a_alpha(alpha: float) -> np.ndarray:
    """Direction of the end E^1 of a Type-1 block."""
    return np.array([-math.sin(alpha), -math.cos(alpha), 0.0])


def a_alpha_perp(alpha: float) -> np.ndarray:
    """Unit vector in the x1x2 plane orthogonal to a_alpha."""
    return np.array([math.cos(alpha), -math.sin(alpha), 0.0])


# ---------------------------------------------------------------- d-functions

def _make_callable(spec) -> Callable[[float], float]:
    if isinstance(spec, (int, float)):
        c = float(spec)
        return lambda tau: c
    if isinstance(spec, dict):
        if "poly" in spec:
            coeffs = [float(c) for c in spec["poly"]]
            return lambda tau: float(np.polyval(coeffs[::-1], tau))
        if "num" in spec and "den" in spec:
            num = [float(c) for c in spec["num"]]
            den = [float(c) for c in spec["den"]]

            def rat(tau):
                d = np.polyval(den[::-1], tau)
                if d == 0:
                    raise ZeroDivisionError(f"d-model denominator vanishes at tau={tau}")
                return float(np.polyval(num[::-1], tau) / d)
            return rat
    raise ValueError(f"unrecognized d-function spec {spec!r}")


@dataclass(frozen=True)
class DFunctions:
    """Axial offsets d0, d0bar, d1 as functions of tau.

    Each entry of the JSON spec is a number (constant), {"poly": [c0, c1, ...]}
    (ascending coefficients) or {"num": [...], "den": [...]}.
    """

    spec: dict = field(default_factory=lambda: {"d0": 1.0, "d0bar": 1.0, "d1": 0.5})

    def __post_init__(self):
        missing = {"d0", "d0bar", "d1"} - set(self.spec)
        if missing:
            raise ValueError(f"d-model missing {sorted(missing)}")
        for key in ("d0", "d0bar", "d1"):
            object.__setattr__(self, "_" + key, _make_callable(self.spec[key]))

    def d0(self, tau: float) -> float:
        return self._d0(tau)

    def d0bar(self, tau: float) -> float:
        return self._d0bar(tau)

    def d1(self, tau: float) -> float:
        return self._d1(tau)

    @classmethod
    def zero(cls) -> "DFunctions":
        return cls({"d0": 0.0, "d0bar": 0.0, "d1": 0.0})

    @classmethod
    def from_json(cls, text_or_path: str) -> "DFunctions":
        try:
            data = json.loads(text_or_path)
        except json.JSONDecodeError:
            with open(text_or_path) as fh:
                data = json.load(fh)
        return cls(data)

    def to_json(self) -> str:
        return json.dumps(self.spec, sort_keys=True)


# ------------------------------------------------------------------ end graphs

@dataclass(frozen=True)
class EndGraph:
    """amplitude * e^{-rate s} * sum_j (a_j cos j theta + b_j sin j theta), lowest mode >= 2.

    With floquet_mode set, the s-dependence is instead the decaying Floquet
    solution of that angular mode, which is an exact solution of the linearized
    problem (rate then equals gamma_{tau, j}).
    """

    amplitude: float
    rate: float
    angular_profile: tuple = ((2, 1.0, 0.0),)  # (j, a_j, b_j)
    tau: float | None = None
    floquet_mode: int | None = None

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("decay rate must be positive")
        if any(int(j) < 2 for j, _, _ in self.angular_profile):
            raise ValueError("end graphs carry no angular modes below 2")
        if self.floquet_mode is not None:
            if self.tau is None:
                raise ValueError("Floquet end graphs need tau")
            object.__setattr__(self, "_floquet", _floquet_table(self.tau, self.floquet_mode))

    def profile(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for j, a, b in self.angular_profile:
            out = out + a * np.cos(j * theta) + b * np.sin(j * theta)
        return out

    def radial(self, s):
        s = np.asarray(s, dtype=float)
        if self.floquet_mode is None:
            return np.exp(-self.rate * s)
        return self._floquet(s)

    def __call__(self, s, theta):
        return self.amplitude * self.radial(s) * self.profile(theta)

    def scaled(self, factor: float) -> "EndGraph":
        return EndGraph(self.amplitude * factor, self.rate, self.angular_profile,
                        self.tau, self.floquet_mode)

    def to_dict(self) -> dict:
        return {"amplitude": self.amplitude, "rate": self.rate,
                "angular_profile": [list(t) for t in self.angular_profile],
                "tau": self.tau, "floquet_mode": self.floquet_mode}


_FLOQUET_CACHE: dict = {}


def _floquet_table(tau: float, j: int):
    """Callable s -> decaying Floquet solution of mode j, normalized to max 1 on [0, 2 s_tau]."""
    key = (float(tau), int(j))
    if key in _FLOQUET_CACHE:
        return _FLOQUET_CACHE[key]
    from scipy.integrate import solve_ivp
    from .floquet import decaying_solution, monodromy

    data = monodromy(tau, j)
    y0, mult = decaying_solution(data)
    sh = data.s_half
    t2 = tau * tau
    from .delaunay import turning_point
    sstar = turning_point(tau)

    def rhs(s, y):
        sg, dsg, u, du = y
        return [dsg, -t2 * math.cosh(sg) * math.sinh(sg), du, -(t2 * math.cosh(2 * sg) - j * j) * u]

    s = np.linspace(0.0, sh, 2049)
    sol = solve_ivp(rhs, (0.0, sh), [-sstar, 0.0, y0[0], y0[1]], method="DOP853",
                    t_eval=s, rtol=1e-12, atol=1e-14)
    u = sol.y[2]
    gamma = data.zeta_real
    # periodic factor over one potential period: u(s) = e^{-gamma s} P(s) with P(s + s_tau) = sign * P(s)
    P = u * np.exp(gamma * s)
    sign = 1.0 if mult > 0 else -1.0
    scale = np.max(np.abs(P))
    from scipy.interpolate import CubicSpline
    Pf = CubicSpline(s, P / scale)

    def f(x):
        x = np.asarray(x, dtype=float)
        q = np.floor(x / sh)
        r = x - q * sh
        return np.exp(-gamma * x) * Pf(r) * sign ** q

    _FLOQUET_CACHE[key] = f
    return f


# ---------------------------------------------------------------- symmetry

@dataclass(frozen=True, eq=False)
class SymmetryGroup:
    generators: tuple
    elements: tuple = ()

    def __post_init__(self):
        gens = [np.asarray(g, dtype=float) for g in self.generators]
        for g in gens:
            if not np.allclose(g @ g.T, np.eye(3), atol=1e-12):
                raise ValueError("generators must be orthogonal")
        object.__setattr__(self, "elements", tuple(_closure(gens)))

    def __len__(self):
        return len(self.elements)

    @classmethod
    def type1(cls) -> "SymmetryGroup":
        return cls((S1, S3))

    @classmethod
    def cyclic(cls, k: int) -> "SymmetryGroup":
        return cls((rotation_z(2 * math.pi / k),))


def _key(M):
    return tuple(np.round(M, 9).ravel() + 0.0)


def _closure(gens, limit=1000):
    elems = {_key(np.eye(3)): np.eye(3)}
    frontier = [np.eye(3)]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = g @ a
                kb = _key(b)
                if kb not in elems:
                    elems[kb] = b
                    nxt.append(b)
        frontier = nxt
        if len(elems) > limit:
            raise ValueError("generated group is not finite")
    return sorted(elems.values(), key=_key)


# ---------------------------------------------------------------- ends and blocks

@dataclass(frozen=True, eq=False)
class EndDescriptor:
    label: str
    tau: float
    axis: np.ndarray
    axial_offset: float
    direction: np.ndarray
    graph: EndGraph
    decay_rate: float

    @property
    def offset(self) -> np.ndarray:
        return self.axial_offset * self.axis

    def model(self, n_periods: int = 2) -> DelaunaySurface:
        return DelaunaySurface(solve_profile(self.tau, n_periods=n_periods), self.axis, self.offset)

    def transformed(self, g: np.ndarray, label: str | None = None) -> "EndDescriptor":
        return EndDescriptor(label or self.label, self.tau, g @ self.axis, self.axial_offset,
                             g @ self.direction, self.graph, self.decay_rate)

    def canonical(self) -> tuple:
        r = lambda v: tuple(np.round(np.asarray(v, float), 10) + 0.0)
        return (round(self.tau, 12), r(self.direction), r(self.offset))


@dataclass(frozen=True, eq=False)
class BuildingBlock:
    kind: str  # "type1" or "type2"
    tau: float
    ends: tuple
    symmetry: SymmetryGroup
    k: int
    tau_bar: float | None = None
    alpha: float | None = None

    @property
    def n_boundaries(self) -> int:
        return len(self.ends)

    def balancing_residual(self) -> float:
        return float(np.linalg.norm(check_balancing([(e.tau, e.direction) for e in self.ends])))

    def end(self, label: str) -> EndDescriptor:
        for e in self.ends:
            if e.label == label:
                return e
        raise KeyError(label)

    def transformed(self, g: np.ndarray) -> tuple:
        return tuple(e.transformed(g) for e in self.ends)

    def is_invariant(self) -> bool:
        base = sorted(e.canonical() for e in self.ends)
        return all(sorted(e.canonical() for e in self.transformed(g)) == base
                   for g in self.symmetry.elements)


def solve_balancing(tau: float, alpha: float) -> float:
    """tau_bar with tau|tau| + 2 cos(alpha) tau_bar|tau_bar| = 0, opposite in sign to tau."""
    if tau == 0:
        raise ValueError("tau must be nonzero")
    c = math.cos(alpha)
    if not 0 < alpha < math.pi / 2 or c <= 0:
        raise ValueError(f"alpha must lie in (0, pi/2), got {alpha!r}")
    return -math.copysign(abs(tau) / math.sqrt(2 * c), tau)


def balancing_residual(tau: float, tau_bar: float, alpha: float) -> float:
    return tau * abs(tau) + 2 * math.cos(alpha) * tau_bar * abs(tau_bar)


def check_balancing(ends) -> np.ndarray:
    """Sum of tau_l |tau_l| a_l over (tau_l, a_l) pairs."""
    ends = list(ends)
    if not ends:
        raise ValueError("need at least one end")
    total = np.zeros(3)
    for tau, a in ends:
        a = np.asarray(a, dtype=float)
        if abs(np.linalg.norm(a) - 1) > 1e-12:
            raise ValueError("end directions must be unit vectors")
        total = total + tau * abs(tau) * a
    return total


@dataclass(frozen=True)
class GraphModel:
    """Recipe for the end graphs of a block: amplitude and angular profile shared by all ends."""

    amplitude: float = 0.05
    angular_profile: tuple = ((2, 1.0, 0.0),)
    floquet: bool = False

    def build(self, tau: float, rate: float) -> EndGraph:
        mode = min(int(j) for j, _, _ in self.angular_profile) if self.floquet else None
        return EndGraph(self.amplitude, rate, self.angular_profile, tau, mode)


def _rate(tau):
    from .floquet import indicial_root
    return indicial_root(tau, 2)


def make_type1(tau: float, k: int, d_model: DFunctions | None = None,
               graph_model: GraphModel | None = None) -> BuildingBlock:
    tau = check_tau(tau, allow_cylinder=False)
    d = d_model or DFunctions()
    gm = graph_model or GraphModel()
    alpha = alpha_k(k)
    tau_bar = solve_balancing(tau, alpha)
    check_tau(tau_bar, allow_cylinder=False)
    r0, r1 = _rate(tau), _rate(tau_bar)
    a = a_alpha(alpha)
    e0 = EndDescriptor("E0", tau, E2, -d.d0(tau), -E2, gm.build(tau, r0), r0)
    e1 = EndDescriptor("E1", tau_bar, a, d.d1(tau), a, gm.build(tau_bar, r1), r1)
    em1 = e1.transformed(S1, "E-1")
    return BuildingBlock("type1", tau, (em1, e0, e1), SymmetryGroup.type1(), k, tau_bar, alpha)


def make_type2(tau: float, k: int, d_model: DFunctions | None = None,
               graph_model: GraphModel | None = None) -> BuildingBlock:
    tau = check_tau(tau, allow_cylinder=False)
    alpha_k(k)
    d = d_model or DFunctions()
    gm = graph_model or GraphModel()
    r = _rate(tau)
    g = gm.build(tau, r)
    ends = []
    for l in range(k):
        R = rotation_z(2 * math.pi * l / k)
        ends.append(EndDescriptor(f"E{l}", tau, R @ E2, d.d0bar(tau), R @ E2, g, r))
    return BuildingBlock("type2", tau, tuple(ends), SymmetryGroup.cyclic(k), k)


@dataclass(frozen=True)
class TruncatedBlock:
    block: BuildingBlock
    cuts: tuple  # (end label, s_cut) per boundary circle

    @property
    def boundary_circles(self) -> tuple:
        return self.cuts

    @property
    def euler_characteristic(self) -> int:
        # genus-zero core with one disk removed per boundary circle
        return 2 - len(self.cuts)


def truncate(block: BuildingBlock, s0: float, s1: float | None = None) -> TruncatedBlock:
    if s1 is None:
        s1 = s0
    if s0 <= 0 or s1 <= 0:
        raise ValueError("cuts must be positive")
    if block.kind == "type2":
        cuts = tuple((e.label, float(s0)) for e in block.ends)
    else:
        cuts = tuple((e.label, float(s0 if e.label == "E0" else s1)) for e in block.ends)
    return TruncatedBlock(block, cuts)


# ---------------------------------------------------------------- weighted norms

def weighted_norm(values: np.ndarray, s: np.ndarray, mu: float, r: int = 0,
                  growth_tol: float = 1e-8) -> float:
    """sup over unit bands [b, b+1] of e^{-mu b} max_{k<=r} |D^k values| on samples over [0, S] x S^1.

    Returns inf when the weighted band profile is still growing at the end of
    the sampled range (the field is not in the weighted space).
    """
    from .geometry import diff_s, diff_theta

    if r not in (0, 1, 2):
        raise ValueError("r must be 0, 1 or 2")
    f = np.asarray(values, dtype=float)
    if f.ndim == 1:
        f = f[:, None]
    s = np.asarray(s, dtype=float)
    h = s[1] - s[0]
    derivs = [np.abs(f)]
    if r >= 1:
        derivs.append(np.abs(diff_s(f, h, 1, 4)))
        if f.shape[1] >= 8:
            derivs.append(np.abs(diff_theta(f, 1)))
    if r >= 2:
        derivs.append(np.abs(diff_s(f, h, 2, 4)))
        if f.shape[1] >= 8:
            derivs.append(np.abs(diff_theta(f, 2)))
            derivs.append(np.abs(diff_theta(diff_s(f, h, 1, 4), 1)))
    pointwise = np.max([d.max(axis=1) for d in derivs], axis=0)
    n_bands = int(math.floor(s[-1] - s[0]))
    if n_bands < 1:
        raise ValueError("need samples covering at least one unit band")
    bands = []
    for b in range(n_bands):
        lo = s[0] + b
        m = (s >= lo - 1e-12) & (s <= lo + 1 + 1e-12)
        bands.append(math.exp(-mu * (lo - s[0])) * pointwise[m].max())
    bands = np.array(bands)
    if n_bands >= 3:
        tail = bands[-max(3, n_bands // 3):]
        with np.errstate(divide="ignore"):
            slope = np.polyfit(np.arange(len(tail)), np.log(tail), 1)[0]
        if slope > growth_tol:
            return math.inf
    return float(bands.max())
