"""Parametric patches on an (s, theta) lattice: fundamental forms, mean curvature,
normal graphs and the surface Jacobi operator.

s is a bounded uniform coordinate differenced by finite differences (one-sided
stencils of the same order at the ends); theta is periodic and differenced
spectrally.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class DegenerateMetricError(ValueError):
    """EG - F^2 <= 0 somewhere: the patch is not an immersion."""


@lru_cache(maxsize=64)
def fd_weights(offsets: tuple, deriv: int) -> np.ndarray:
    """Finite-difference weights on integer offsets for the given derivative (unit spacing)."""
    x = np.asarray(offsets, dtype=float)
    n = len(x)
    V = np.vander(x, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[deriv] = float(np.prod(np.arange(1, deriv + 1)))
    return np.linalg.solve(V, rhs)


def diff_s(f: np.ndarray, h: float, deriv: int = 1, order: int = 2) -> np.ndarray:
    """Derivative along axis 0 of uniformly sampled data."""
    if deriv not in (1, 2) or order not in (2, 4):
        raise ValueError("deriv in {1,2}, order in {2,4}")
    f = np.asarray(f)
    n = f.shape[0]
    half = order // 2
    width = order + deriv  # one-sided stencil size
    if n < width + 1:
        raise ValueError(f"need at least {width + 1} s-nodes, got {n}")
    out = np.empty_like(f, dtype=float)
    w = fd_weights(tuple(range(-half, half + 1)), deriv)
    acc = np.zeros_like(f[half:n - half], dtype=float)
    for k, wk in zip(range(-half, half + 1), w):
        acc = acc + wk * f[half + k:n - half + k]
    out[half:n - half] = acc
    for i in range(half):
        offs = tuple(range(-i, width - i))
        wl = fd_weights(offs, deriv)
        out[i] = np.tensordot(wl, f[:width], axes=(0, 0))
        j = n - 1 - i
        offs_r = tuple(range(-(width - 1 - i), i + 1))
        wr = fd_weights(offs_r, deriv)
        out[j] = np.tensordot(wr, f[n - width:], axes=(0, 0))
    return out / h ** deriv


def diff_theta(f: np.ndarray, deriv: int = 1) -> np.ndarray:
    """Spectral derivative along axis 1 for data on theta_j = 2 pi j / n."""
    f = np.asarray(f, dtype=float)
    n = f.shape[1]
    F = np.fft.rfft(f, axis=1)
    k = np.fft.rfftfreq(n, d=1.0 / n)
    mult = (1j * k) ** deriv
    if deriv % 2 == 1 and n % 2 == 0:
        mult[-1] = 0.0
    shape = [1] * f.ndim
    shape[1] = -1
    return np.fft.irfft(F * mult.reshape(shape), n=n, axis=1)


def theta_grid(n_theta: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n_theta) / n_theta


@dataclass(frozen=True)
class Grid:
    s: np.ndarray
    theta: np.ndarray

    @classmethod
    def uniform(cls, s0: float, s1: float, n_s: int, n_theta: int) -> "Grid":
        return cls(np.linspace(s0, s1, n_s), theta_grid(n_theta))

    @property
    def hs(self) -> float:
        return float(self.s[1] - self.s[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.s), len(self.theta))

    def mesh(self):
        return np.meshgrid(self.s, self.theta, indexing="ij")


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


@dataclass(frozen=True, eq=False)
class Patch:
    """Sampled immersion X(s, theta) with first and second fundamental forms.

    orientation = +1 takes N along X_s x X_theta, -1 the opposite.
    """

    grid: Grid
    positions: np.ndarray
    normal: np.ndarray
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    e: np.ndarray
    f: np.ndarray
    g: np.ndarray
    orientation: int = 1
    s_order: int = 2

    @classmethod
    def from_positions(cls, grid: Grid, X: np.ndarray, orientation: int = 1,
                       s_order: int = 2) -> "Patch":
        X = np.asarray(X, dtype=float)
        if X.shape != grid.shape + (3,):
            raise ValueError(f"positions shape {X.shape} does not match grid {grid.shape}")
        if grid.shape[1] < 8:
            raise ValueError("need at least 8 theta nodes")
        h = grid.hs
        Xs = diff_s(X, h, 1, s_order)
        Xss = diff_s(X, h, 2, s_order)
        Xt = diff_theta(X, 1)
        Xtt = diff_theta(X, 2)
        Xst = diff_theta(Xs, 1)
        E, F, G = _dot(Xs, Xs), _dot(Xs, Xt), _dot(Xt, Xt)
        det = E * G - F * F
        if not np.all(det > 0) or not np.all(np.isfinite(det)):
            raise DegenerateMetricError("EG - F^2 <= 0: immersion lost")
        n = np.cross(Xs, Xt)
        N = orientation * n / np.linalg.norm(n, axis=-1, keepdims=True)
        return cls(grid, X, N, E, F, G, _dot(Xss, N), _dot(Xst, N), _dot(Xtt, N),
                   orientation, s_order)

    @property
    def det(self) -> np.ndarray:
        return self.E * self.G - self.F ** 2


def mean_curvature(patch: Patch) -> np.ndarray:
    """H = (eG - 2fF + gE) / (2 (EG - F^2)), positive for spheres with inward normal."""
    return (patch.e * patch.G - 2 * patch.f * patch.F + patch.g * patch.E) / (2 * patch.det)


def gauss_curvature(patch: Patch) -> np.ndarray:
    return (patch.e * patch.g - patch.f ** 2) / patch.det


def normal_graph(patch: Patch, w: np.ndarray) -> Patch:
    """The patch x + w(x) N(x), with forms recomputed and orientation kept."""
    w = np.asarray(w, dtype=float)
    if w.shape != patch.grid.shape:
        raise ValueError("w must live on the patch grid")
    X = patch.positions + w[..., None] * patch.normal
    return Patch.from_positions(patch.grid, X, patch.orientation, patch.s_order)


def laplace_beltrami(patch: Patch, u: np.ndarray) -> np.ndarray:
    h, o = patch.grid.hs, patch.s_order
    det = patch.det
    rg = np.sqrt(det)
    us, ut = diff_s(u, h, 1, o), diff_theta(u, 1)
    # inverse metric times sqrt(det): (G, -F, E)/sqrt(det)
    a = (patch.G * us - patch.F * ut) / rg
    b = (patch.E * ut - patch.F * us) / rg
    return (diff_s(a, h, 1, o) + diff_theta(b, 1)) / rg


def surface_jacobi(patch: Patch, u: np.ndarray) -> np.ndarray:
    """Delta u + |A|^2 u on a general patch, |A|^2 = 4H^2 - 2K."""
    H = mean_curvature(patch)
    K = gauss_curvature(patch)
    return laplace_beltrami(patch, u) + (4 * H * H - 2 * K) * u


def sphere_patch(n_s: int = 256, n_theta: int = 256, radius: float = 1.0,
                 margin: float = 0.3, s_order: int = 2) -> Patch:
    """Latitude-longitude patch of a round sphere avoiding the poles, inward normal.

    s is the polar angle in [margin, pi - margin].
    """
    grid = Grid.uniform(margin, np.pi - margin, n_s, n_theta)
    S, T = grid.mesh()
    X = radius * np.stack([np.sin(S) * np.cos(T), np.sin(S) * np.sin(T), np.cos(S)], axis=-1)
    # X_s x X_theta points outward for the polar-angle chart
    return Patch.from_positions(grid, X, orientation=-1, s_order=s_order)
