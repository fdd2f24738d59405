"""Cutoff gluing of Delaunay-asymptotic ends into a compact genus-k assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .blocks import (BuildingBlock, DFunctions, E2, GraphModel, TruncatedBlock, alpha_k, make_type1,
                     make_type2, rotation_z, solve_balancing, truncate)
from .delaunay import DelaunaySurface, _quad_T, check_tau, half_period, solve_profile
from .geometry import Grid, Patch, mean_curvature, normal_graph, surface_jacobi, theta_grid

NECK_NODES_PER_PERIOD = 256
NECK_N_THETA = 64
PROBE_AMPLITUDE = 1e-4


class DiscretizationError(RuntimeError):
    """Grid refinement changed a measured quantity by more than the allowed fraction."""


class MatchingError(ValueError):
    """The Z-neck mirror identification fails: matching residual too large."""


# --------------------------------------------------------------------- cutoff

def _phi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth step equal to 1 for s <= -1 and 0 for s >= 1 with xi(-s) = 1 - xi(s)."""

    width: tuple = (-1.0, 1.0)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        a, b = _phi(1 - s), _phi(1 + s)
        return a / (a + b)

    def complement(self, s):
        """1 - xi(s), evaluated as xi(-s) so the two sum to 1 to rounding."""
        return self(-np.asarray(s, dtype=float))


def cutoff_xi() -> CutoffProfile:
    return CutoffProfile()


def delta_offset(n: int, tau: float, d: DFunctions) -> float:
    """Translation applied to the Type-1 block along e2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return d.d0(tau) + d.d0bar(tau) + 2 * n * _quad_T(check_tau(tau))


# --------------------------------------------------------------------- matching

def _T(tau):
    return _quad_T(check_tau(tau))


def lambda_gamma(tau: float, k: int, d: DFunctions) -> tuple[float, float]:
    tb = solve_balancing(tau, alpha_k(k))
    sk = math.sin(math.pi / k)
    Tb = _T(tb)
    lam = (sk * (d.d0(tau) + d.d0bar(tau)) - d.d1(tau)) / Tb
    gam = 2 * sk * _T(tau) / Tb
    return lam, gam


def matching_residual(n: int, m: int, tau: float, k: int, d: DFunctions) -> float:
    """sin(pi/k)(d0 + d0bar + 2 n T_tau) - d1 - m T_taubar."""
    tb = solve_balancing(tau, alpha_k(k))
    return (math.sin(math.pi / k) * (d.d0(tau) + d.d0bar(tau) + 2 * n * _T(tau))
            - d.d1(tau) - m * _T(tb))


@dataclass(frozen=True)
class MatchingSolution:
    n: int
    m: int
    tau: float
    tau_bar: float
    residual: float
    k: int

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "tau": self.tau, "tau_bar": self.tau_bar,
                "residual": self.residual, "k": self.k}


def matching_function(n: int, k: int, d: DFunctions) -> Callable[[float], float]:
    def f(tau):
        lam, gam = lambda_gamma(tau, k, d)
        return lam + n * gam
    return f


def _bisect(f, lo, hi, target, tol, max_iter=200):
    flo = f(lo) - target
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid) - target
        if abs(fm) <= tol or hi - lo <= 1e-16 * max(1.0, abs(mid)):
            return mid, fm
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return mid, fm


def solve_matching(n: int, k: int, interval=(0.2, 0.8), d: DFunctions | None = None,
                   tol: float = 1e-12, samples: int = 64) -> tuple[list[MatchingSolution], bool]:
    """All (m, tau) with Lambda(tau) + n Gamma(tau) = m, tau in the interval.

    Returns (solutions, monotone) where monotone records the sampling check.
    """
    d = d or DFunctions()
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("empty tau interval")
    if lo * hi <= 0:
        raise ValueError("interval must lie inside one sign branch")
    alpha_k(k)
    f = matching_function(n, k, d)
    taus = np.linspace(lo, hi, samples)
    vals = np.array([f(t) for t in taus])
    dv = np.diff(vals)
    monotone = bool(np.all(dv > 0) or np.all(dv < 0))
    out = []
    brackets = [(taus[0], taus[-1], vals[0], vals[-1])] if monotone else \
        list(zip(taus[:-1], taus[1:], vals[:-1], vals[1:]))
    for a, b, fa, fb in brackets:
        m_lo = max(1, math.ceil(min(fa, fb)))
        m_hi = math.floor(max(fa, fb))
        for m in range(m_lo, m_hi + 1):
            if not monotone and m == max(fa, fb) and b != taus[-1]:
                continue  # root sits on a shared bracket end; counted once
            t, r = _bisect(f, a, b, m, tol)
            tb = solve_balancing(t, alpha_k(k))
            out.append(MatchingSolution(n, m, t, tb, matching_residual(n, m, t, k, d), k))
    out.sort(key=lambda s: (s.m, s.tau))
    return out, monotone


def minimal_n(k: int, interval=(0.2, 0.8), d: DFunctions | None = None, n_max: int = 1000) -> int:
    """Smallest n >= 1 for which the matching condition has a solution in the interval."""
    for n in range(1, n_max + 1):
        if solve_matching(n, k, interval, d)[0]:
            return n
    raise ValueError(f"no matching solution for n <= {n_max}")


# --------------------------------------------------------------------- necks

@dataclass(frozen=True, eq=False)
class GluedNeck:
    """Two end graphs over one Delaunay model, blended across s in (-1, 1).

    The neck parameter s runs over (-half_window, half_window); the model is
    evaluated at s + shift where shift = half_window (n s_tau or m s_taubar).
    graph_a is written in the coordinate of the end on the s < 0 side,
    graph_b in that of the end on the s > 0 side (reflected).
    """

    kind: str
    tau: float
    periods: int  # n for Y-necks, m for Z-necks
    graph_a: Callable
    graph_b: Callable
    xi: CutoffProfile
    mirror_b: bool = False  # Z-necks: side b is the mirror image of side a
    annulus: tuple = (-1.0, 1.0)

    @property
    def s_half(self) -> float:
        return half_period(self.tau)

    @property
    def half_window(self) -> float:
        return self.periods * self.s_half

    @property
    def model_shift(self) -> float:
        return self.half_window

    def side_a(self, s, theta):
        return self.graph_a(np.asarray(s) + self.half_window, theta)

    def side_b(self, s, theta):
        return self.graph_b(self.half_window - np.asarray(s), theta)

    def blended_graph(self, s, theta):
        s = np.asarray(s, dtype=float)
        return self.xi(s) * self.side_a(s, theta) + self.xi.complement(s) * self.side_b(s, theta)

    def scaled(self, factor: float) -> "GluedNeck":
        ga, gb = self.graph_a, self.graph_b
        return GluedNeck(self.kind, self.tau, self.periods, lambda s, t: factor * ga(s, t),
                         lambda s, t: factor * gb(s, t), self.xi, self.mirror_b, self.annulus)


def glue_neck(end_a, end_b, periods: int, xi: CutoffProfile | None = None, kind: str = "Y",
              mirror_residual: float = 0.0, tol: float = 1e-9) -> GluedNeck:
    """Connect two ends that are graphs over the same Delaunay model."""
    if end_a.tau != end_b.tau:
        raise ValueError(f"ends live over different Delaunay models: tau {end_a.tau} vs {end_b.tau}")
    if kind not in ("Y", "Z"):
        raise ValueError("kind must be 'Y' or 'Z'")
    if kind == "Z" and abs(mirror_residual) > tol:
        raise MatchingError(f"Z-neck mirror identification fails: residual {mirror_residual}")
    if periods < 1:
        raise ValueError("periods must be >= 1")
    return GluedNeck(kind, end_a.tau, int(periods), end_a.graph, end_b.graph, xi or cutoff_xi(),
                     mirror_b=(kind == "Z"))


def _neck_patch(neck: GluedNeck, s0: float, s1: float, nodes_per_period: int, n_theta: int,
                s_order: int, profile=None, inner=None):
    sh = neck.s_half
    h = 2 * sh / nodes_per_period
    if inner is not None:
        # put nodes exactly on the inner interval ends so sups over it do not
        # depend on where the lattice happens to fall
        a, b = inner
        n_in = max(int(math.ceil((b - a) / h)), 4)
        h = (b - a) / n_in
        lo = int(math.ceil((a - s0) / h - 1e-9))
        hi = int(math.ceil((s1 - b) / h - 1e-9))
        s = a + h * np.arange(-lo, n_in + hi + 1)
    else:
        n_s = max(int(math.ceil((s1 - s0) / h)) + 1, 8)
        s = np.linspace(s0, s1, n_s)
    grid = Grid(s, theta_grid(n_theta))
    prof = profile or solve_profile(neck.tau, n_periods=1)
    # shift the model parameter by whole periods (pure axial translations)
    # so positions stay O(1) regardless of the window length
    reduce = neck.model_shift % (2 * sh)
    S, T = grid.mesh()
    X, _ = DelaunaySurface(prof).canonical(S + reduce, T)
    return grid, Patch.from_positions(grid, X, orientation=1, s_order=s_order)


def _band_deviation(neck, s0, s1, nodes_per_period, n_theta, s_order, probe, prof,
                    inner=None):
    inner = inner or (s0, s1)
    grid, base = _neck_patch(neck, s0, s1, nodes_per_period, n_theta, s_order, prof, inner)
    S, T = grid.mesh()
    w = neck.blended_graph(S, T)
    mask = (grid.s >= inner[0] - 1e-12) & (grid.s <= inner[1] + 1e-12)
    amp = np.abs(w).max()
    if amp == 0:
        return 0.0
    lam = probe / amp if amp < probe else 1.0
    dev = (mean_curvature(normal_graph(base, lam * w)) - mean_curvature(base)) / lam
    return float(np.abs(dev[mask]).max())


def curvature_deviation(neck: GluedNeck, nodes_per_period: int = NECK_NODES_PER_PERIOD,
                        n_theta: int = NECK_N_THETA, s_order: int = 2, bands: bool = False,
                        refine_check: bool = True, probe: float = PROBE_AMPLITUDE,
                        max_disagreement: float = 0.2):
    """sup |H - 1| over the annulus, and optionally per unit band along the window.

    H - 1 is measured as H_h(graph) - H_h(model) on the same grid, which removes
    the model's own discretization error.  Graphs smaller than `probe` on a band
    are scaled up to `probe` and the deviation divided back: in that regime H
    responds linearly and direct evaluation would sit below float64 resolution.
    """
    prof = solve_profile(neck.tau, n_periods=1)
    pad = 1.0
    a0, a1 = neck.annulus
    sup = _band_deviation(neck, a0 - pad, a1 + pad, nodes_per_period, n_theta, s_order, probe,
                          prof, inner=(a0, a1))
    if refine_check and sup > 0:
        fine = _band_deviation(neck, a0 - pad, a1 + pad, 2 * nodes_per_period, n_theta, s_order,
                               probe, prof, inner=(a0, a1))
        if abs(fine - sup) > max_disagreement * abs(fine):
            raise DiscretizationError(
                f"annulus deviation changed from {sup:.3e} to {fine:.3e} under refinement")
        sup = fine
    profile = None
    if bands:
        L = neck.half_window
        edges = np.arange(-math.floor(L), math.floor(L))
        profile = np.array([_band_deviation(neck, b - pad, b + 1 + pad, nodes_per_period, n_theta,
                                            s_order, probe, prof, inner=(b, b + 1))
                            for b in edges])
        profile = np.column_stack([edges, profile])
    return sup, profile


# --------------------------------------------------------------------- assembly

@dataclass(frozen=True)
class Piece:
    name: str
    block: TruncatedBlock
    rotation: np.ndarray
    translation: np.ndarray

    @property
    def euler_characteristic(self) -> int:
        return self.block.euler_characteristic

    def center(self) -> np.ndarray:
        return self.rotation @ self.translation


@dataclass(frozen=True)
class NeckRecord:
    name: str
    kind: str
    ends: tuple  # ((piece name, end label), (piece name, end label))
    index: int
    euler_characteristic: int = 0


@dataclass(frozen=True, eq=False)
class GluedAssembly:
    k: int
    solution: MatchingSolution
    type1: BuildingBlock
    type2: BuildingBlock
    d: DFunctions
    pieces: tuple
    necks: tuple
    xi: CutoffProfile = field(default_factory=cutoff_xi)

    @property
    def gluing_graph(self) -> tuple[list, list]:
        nodes = [p.name for p in self.pieces]
        edges = [(nk.ends[0][0], nk.ends[1][0], nk.name) for nk in self.necks]
        return nodes, edges

    @property
    def delta(self) -> float:
        return delta_offset(self.solution.n, self.solution.tau, self.d)

    def euler_characteristic(self) -> int:
        return sum(p.euler_characteristic for p in self.pieces) + \
            sum(nk.euler_characteristic for nk in self.necks)

    def y_neck(self) -> GluedNeck:
        """The neck joining Type-2 end E0 with the Type-1 copy 0 end E0."""
        return glue_neck(self.type2.end("E0"), self.type1.end("E0"), self.solution.n, self.xi, "Y")

    def z_neck(self) -> GluedNeck:
        """The neck joining copy 0's E1 with copy 1's E-1 (mirror image of E1)."""
        e1 = self.type1.end("E1")
        return glue_neck(e1, e1, self.solution.m, self.xi, "Z",
                         mirror_residual=self.solution.residual)

    # partition of unity ------------------------------------------------
    def partition(self, component: tuple, s: float) -> dict:
        """Weights of chi_bar (core) and chi o R^{-l} (copies) at a point.

        component is ("core",), ("copy", l), ("Y", l) or ("Z", l); s is the
        neck parameter (ignored on pieces).
        """
        k = self.k
        kind = component[0]
        if kind == "core":
            return {"core": 1.0}
        l = int(component[1]) % k
        if kind == "copy":
            return {f"copy{l}": 1.0}
        if kind == "Y":
            return {"core": float(self.xi(s)), f"copy{l}": float(self.xi.complement(s))}
        if kind == "Z":
            return {f"copy{l}": float(self.xi(s)), f"copy{(l + 1) % k}": float(self.xi.complement(s))}
        raise ValueError(f"unknown component {component!r}")

    def partition_sum_error(self, rng: np.random.Generator, n_points: int = 100) -> float:
        worst = 0.0
        n = self.solution.n
        sh, shb = half_period(self.solution.tau), half_period(self.solution.tau_bar)
        for _ in range(n_points):
            kind = ["core", "copy", "Y", "Z"][rng.integers(4)]
            l = int(rng.integers(self.k))
            if kind == "Y":
                s = rng.uniform(-n * sh, n * sh)
            elif kind == "Z":
                s = rng.uniform(-self.solution.m * shb, self.solution.m * shb)
            else:
                s = 0.0
            comp = (kind,) if kind == "core" else (kind, l)
            worst = max(worst, abs(sum(self.partition(comp, s).values()) - 1.0))
        return worst

    def is_gk_invariant(self) -> bool:
        """Rotation by 2 pi / k permutes piece centers and neck endpoint pairs."""
        R = rotation_z(2 * math.pi / self.k)
        key = lambda v: tuple(np.round(v, 9) + 0.0)
        centers = {key(p.center()): p.name for p in self.pieces}
        rotated = {key(R @ p.center()) for p in self.pieces}
        if set(centers) != rotated:
            return False
        pos = {p.name: p.center() for p in self.pieces}
        edge_set = {frozenset((key(pos[a]), key(pos[b]))) for a, b, _ in self.gluing_graph[1]}
        rot_edges = {frozenset((key(R @ pos[a]), key(R @ pos[b]))) for a, b, _ in self.gluing_graph[1]}
        return edge_set == rot_edges


def assemble(k: int, solution: MatchingSolution, blocks: tuple | None = None,
             d: DFunctions | None = None, tol: float = 1e-9) -> GluedAssembly:
    d = d or DFunctions()
    alpha_k(k)
    if solution.k != k:
        raise ValueError("solution was computed for a different k")
    tb = solve_balancing(solution.tau, alpha_k(k))
    if abs(solution.residual) > tol * max(1.0, _T(tb)):
        raise MatchingError(f"matching residual {solution.residual} exceeds tolerance")
    if blocks is None:
        blocks = (make_type1(solution.tau, k, d), make_type2(solution.tau, k, d))
    t1, t2 = blocks
    if t1.kind != "type1" or t2.kind != "type2":
        raise ValueError("blocks must be (type1, type2)")
    if t1.tau != solution.tau or t2.tau != solution.tau or t1.k != k or t2.k != k:
        raise ValueError("blocks do not match the solution parameters")
    if abs(t1.tau_bar - solution.tau_bar) > 1e-14:
        raise ValueError("Type-1 block tau_bar does not match the solution")
    cut = 1.0
    tr1, tr2 = truncate(t1, cut, cut), truncate(t2, cut)
    delta = delta_offset(solution.n, solution.tau, d)
    pieces = [Piece("core", tr2, np.eye(3), np.zeros(3))]
    for l in range(k):
        pieces.append(Piece(f"copy{l}", tr1, rotation_z(2 * math.pi * l / k), delta * E2))
    necks = []
    for l in range(k):
        necks.append(NeckRecord(f"Y{l}", "Y", (("core", f"E{l}"), (f"copy{l}", "E0")), l))
    for l in range(k):
        necks.append(NeckRecord(f"Z{l}", "Z", ((f"copy{l}", "E1"), (f"copy{(l + 1) % k}", "E-1")), l))
    asm = GluedAssembly(k, solution, t1, t2, d, tuple(pieces), tuple(necks))
    _check_boundaries(asm)
    return asm


def _check_boundaries(asm: GluedAssembly) -> None:
    used = {}
    for nk in asm.necks:
        for piece, label in nk.ends:
            used[(piece, label)] = used.get((piece, label), 0) + 1
    for p in asm.pieces:
        for label, _ in p.block.boundary_circles:
            c = used.pop((p.name, label), 0)
            if c != 1:
                raise ValueError(f"boundary {p.name}:{label} matched {c} times")
    if used:
        raise ValueError(f"necks reference unknown boundaries {sorted(used)}")


def genus(assembly: GluedAssembly) -> int:
    _check_boundaries(assembly)
    chi = assembly.euler_characteristic()
    if chi % 2:
        raise ValueError(f"odd Euler characteristic {chi}")
    g = (2 - chi) // 2
    nodes, edges = assembly.gluing_graph
    # genus-zero pieces joined by annuli: genus equals the cycle rank of the graph
    if g != len(edges) - len(nodes) + 1:
        raise ValueError("Euler characteristic and gluing graph disagree")
    return g


# --------------------------------------------------------------------- Jacobi extensions

@dataclass(frozen=True)
class ExtensionReport:
    kind: str
    neck: str
    annulus_residual: float
    away_residual: float
    sup_field: float
    probe_scale: float


def _graph_patches(neck, base, grid, lam):
    S, T = grid.mesh()
    wa = lam * neck.side_a(S, T)
    wb = lam * neck.side_b(S, T)
    w = lam * neck.blended_graph(S, T)
    return normal_graph(base, wa), normal_graph(base, wb), normal_graph(base, w)


def extend_jacobi_field(target, kind: str, nodes_per_period: int = NECK_NODES_PER_PERIOD,
                        n_theta: int = 32, probe: float = PROBE_AMPLITUDE, s_order: int = 4,
                        variation=None) -> ExtensionReport:
    """Blend translation or Delaunay-variation Jacobi fields across a neck and measure L Psi.

    kind: "T_bar" (axial translation across the Y-neck annulus), "T_a" and
    "T_aperp" (translations along a and a_perp across the Z-neck annulus), "D"
    (variation field across the Y-neck with the shift correction t = n p).
    The residual is L_S Psi - L_D Psi_0, Psi_0 being the same field on the
    unperturbed model, so the model's discretization error cancels.
    target is a GluedAssembly or a single GluedNeck of the matching kind.
    """
    if kind not in ("T_bar", "D", "T_a", "T_aperp"):
        raise ValueError(f"unknown field kind {kind!r}")
    want = "Y" if kind in ("T_bar", "D") else "Z"
    if isinstance(target, GluedAssembly):
        neck = target.y_neck() if want == "Y" else target.z_neck()
    else:
        neck = target
        if neck.kind != want:
            raise ValueError(f"field {kind} lives on {want}-necks, got a {neck.kind}-neck")
    prof = solve_profile(neck.tau, n_periods=1)
    a0, a1 = neck.annulus
    grid, base = _neck_patch(neck, a0 - 1.0, a1 + 1.0, nodes_per_period, n_theta, s_order, prof,
                             (a0, a1))
    S, T = grid.mesh()
    amp = np.abs(neck.blended_graph(S, T)).max()
    lam = probe / amp if 0 < amp < probe else 1.0
    if kind == "T_a":
        lam = 1.0  # the blend mismatch is O(1) and does not scale with the graphs
    pa, pb, ps = _graph_patches(neck, base, grid, lam)
    xi, xc = neck.xi(S), neck.xi.complement(S)
    axis, perp = np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])

    if kind == "T_bar":
        psi = xi * (pa.normal @ axis) + xc * (pb.normal @ axis)
        psi0 = base.normal @ axis
    elif kind == "T_a":
        # the mirror across the gluing plane reverses the Z-neck axis
        psi = xi * (pa.normal @ axis) - xc * (pb.normal @ axis)
        psi0 = base.normal @ axis
    elif kind == "T_aperp":
        psi = xi * (pa.normal @ perp) + xc * (pb.normal @ perp)
        psi0 = base.normal @ perp
    else:
        n = neck.periods
        var = variation or _variation(neck.tau, 2 * n + 2)
        reduce = neck.model_shift % (2 * neck.s_half)
        u = S + neck.model_shift
        # core side: Phi^D(u); copy side: Phi^D(u - 2 n s_tau) + n p sigma'(u)
        _, dsg, _ = prof.evaluate(S + reduce)
        phi_a = var(u)
        phi_b = var(u - 2 * neck.half_window) + n * var.p_tau * dsg
        psi = xi * phi_a + xc * phi_b
        psi0 = psi
    res = (surface_jacobi(ps, psi) - surface_jacobi(base, psi0)) / lam
    inner = (grid.s >= a0) & (grid.s <= a1)
    away = ~((grid.s >= a0 - 0.05) & (grid.s <= a1 + 0.05))
    away &= (grid.s > grid.s[0] + 0.3) & (grid.s < grid.s[-1] - 0.3)
    sup_field = float(np.abs(psi).max())
    if kind == "D":
        sup_field = _variation_sup(neck, variation or _variation(neck.tau, 2 * neck.periods + 2))
    return ExtensionReport(kind, neck.kind, float(np.abs(res[inner]).max()),
                           float(np.abs(res[away]).max()) if away.any() else 0.0, sup_field, lam)


_VAR_CACHE: dict = {}


def _variation(tau, n_periods):
    from .jacobi import delaunay_variation_field
    key = (tau, n_periods)
    if key not in _VAR_CACHE:
        _VAR_CACHE[key] = delaunay_variation_field(tau, n_periods=n_periods, nodes_per_period=512)
    return _VAR_CACHE[key]


def _variation_sup(neck, var) -> float:
    """sup of the blended variation field over the whole Y-neck window."""
    s = np.linspace(-neck.half_window, neck.half_window, 64 * neck.periods + 1)
    return float(np.abs(var(s + neck.model_shift)).max())


# --------------------------------------------------------------------- decay sweeps

@dataclass(frozen=True)
class LogLinearFit:
    slope: float
    intercept: float
    r2: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2}


def log_linear_fit(x, y) -> LogLinearFit:
    """Least-squares line through (x, log y)."""
    x = np.asarray(x, dtype=float)
    ly = np.log(np.asarray(y, dtype=float))
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    fit = A @ np.array([slope, icpt])
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(((ly - fit) ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return LogLinearFit(float(slope), float(icpt), r2)


def y_neck(tau: float, k: int, n: int, d: DFunctions | None = None,
           graph_model: GraphModel | None = None) -> GluedNeck:
    """Y-neck between a Type-2 end and a Type-1 E0 end, n periods each side."""
    d = d or DFunctions()
    t1, t2 = make_type1(tau, k, d, graph_model), make_type2(tau, k, d, graph_model)
    return glue_neck(t2.end("E0"), t1.end("E0"), n)


def neck_sweep_row(tau: float, k: int, n: int, d: DFunctions | None = None,
                   nodes_per_period: int = NECK_NODES_PER_PERIOD, n_theta: int = NECK_N_THETA,
                   fields: bool = True) -> dict:
    """Annulus curvature deviation and, optionally, Jacobi extension residuals at one n."""
    neck = y_neck(tau, k, n, d)
    sup, _ = curvature_deviation(neck, nodes_per_period, n_theta)
    row = {"n": n, "sup_H_dev": sup}
    if fields:
        tb = extend_jacobi_field(neck, "T_bar", nodes_per_period, min(n_theta, 32))
        dv = extend_jacobi_field(neck, "D", nodes_per_period, min(n_theta, 32))
        row.update(T_bar_residual=tb.annulus_residual, D_residual=dv.annulus_residual,
                   D_sup=dv.sup_field)
    return row


def decay_summary(tau: float, rows: list[dict]) -> dict:
    """Slope fits of a neck sweep against the predicted rate -gamma_2 s_tau."""
    from .floquet import indicial_root
    target = -indicial_root(tau, 2) * half_period(tau)
    ns = [r["n"] for r in rows]
    out = {"target_slope": target, "H_dev": log_linear_fit(ns, [r["sup_H_dev"] for r in rows]).to_dict()}
    if rows and "T_bar_residual" in rows[0]:
        out["T_bar"] = log_linear_fit(ns, [r["T_bar_residual"] for r in rows]).to_dict()
        # power-law growth: log D_sup against log n
        g = log_linear_fit(np.log(ns), [r["D_sup"] for r in rows])
        out["D_growth_exponent"] = g.slope
    return out
