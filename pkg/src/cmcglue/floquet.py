"""Floquet analysis of the angular modes of the Delaunay Jacobi operator.

Mode j satisfies u'' + (tau^2 cosh(2 sigma) - j^2) u = 0, a Hill equation whose
potential has period s_tau.  The monodromy over one potential period is
integrated with fixed-step RK4 in extended precision: for j >= 2 the entries
grow like e^{gamma s_tau}, and float64 rounding of order eps |M|^2 would
otherwise break the det M = 1 check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delaunay import check_tau, half_period, turning_point

STEPS_PER_UNIT = 800
MIN_STEPS = 2048
PERIODIC_TOL = 1e-8


@dataclass(frozen=True)
class FloquetData:
    tau: float
    j: int
    monodromy: np.ndarray  # 2x2, columns are the solutions from (1,0) and (0,1)
    s_half: float
    zeta_real: float
    periodic_case: bool

    @property
    def trace(self) -> float:
        return float(np.trace(self.monodromy))

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.monodromy.astype(float)))

    @property
    def det_error(self) -> float:
        M = self.monodromy
        return float(abs(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0] - 1))


def _rk4_monodromy(tau: float, js: np.ndarray, s_end: float, steps: int) -> np.ndarray:
    ld = np.longdouble
    t2 = ld(tau) * ld(tau)
    j2 = np.asarray(js, dtype=ld) ** 2
    h = ld(s_end) / steps
    sstar = turning_point(tau)
    # y = [sigma, sigma', u1, u1', u2, u2'] with u's vectorized over modes
    one = np.ones_like(j2)
    y = [ld(-sstar), ld(0), one.copy(), 0 * one, 0 * one, one.copy()]

    def f(y):
        sg, dsg, a, da, b, db = y
        q = t2 * np.cosh(2 * sg) - j2
        return [dsg, -t2 * np.cosh(sg) * np.sinh(sg), da, -q * a, db, -q * b]

    def axpy(y, k, c):
        return [yi + c * ki for yi, ki in zip(y, k)]

    for _ in range(steps):
        k1 = f(y)
        k2 = f(axpy(y, k1, h / 2))
        k3 = f(axpy(y, k2, h / 2))
        k4 = f(axpy(y, k3, h))
        y = [yi + h / 6 * (a + 2 * b + 2 * c + d) for yi, a, b, c, d in zip(y, k1, k2, k3, k4)]
    _, _, a, da, b, db = y
    return np.stack([np.stack([a, b], -1), np.stack([da, db], -1)], -2)


def _root(tr: float, s_half: float, tol: float) -> tuple[float, bool]:
    periodic = abs(tr) <= 2 + tol
    if periodic:
        return 0.0, True
    return math.acosh(abs(tr) / 2) / s_half, False


def monodromy_batch(tau: float, js, tol: float = PERIODIC_TOL, steps: int | None = None) -> list[FloquetData]:
    tau = check_tau(tau, allow_cylinder=False)
    js = [int(j) for j in js]
    if any(j < 0 for j in js):
        raise ValueError("modes must be nonnegative")
    sh = half_period(tau)
    if steps is None:
        steps = max(MIN_STEPS, int(math.ceil(STEPS_PER_UNIT * sh)))
    Ms = _rk4_monodromy(tau, np.array(js), sh, steps)
    out = []
    for j, M in zip(js, Ms):
        g, per = _root(float(M[0, 0] + M[1, 1]), sh, tol)
        out.append(FloquetData(tau, j, M, sh, g, per))
    return out


def monodromy(tau: float, j: int, tol: float = PERIODIC_TOL, steps: int | None = None) -> FloquetData:
    """Monodromy of mode j over [0, s_tau] from the canonical initial data."""
    return monodromy_batch(tau, [j], tol, steps)[0]


def indicial_root(tau: float, j: int, tol: float = PERIODIC_TOL) -> float:
    """gamma_{tau,j}: real part of the Floquet exponent of mode j (0 in the bounded case)."""
    return monodromy(tau, j, tol).zeta_real


def decaying_solution(data: FloquetData) -> tuple[np.ndarray, float]:
    """Initial data (u, u') at s = 0 of the Floquet solution with multiplier of modulus < 1.

    Returns (initial data, multiplier).
    """
    if data.periodic_case:
        raise ValueError("no exponentially decaying solution in the bounded case")
    M = data.monodromy.astype(float)
    w, v = np.linalg.eig(M)
    i = int(np.argmin(np.abs(w)))
    vec = np.real(v[:, i])
    return vec / np.linalg.norm(vec), float(np.real(w[i]))
