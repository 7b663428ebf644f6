"""Representations of Lambda_2(3,3,n) with a unipotent commutator.

We look for X, Y in SU(2,1) (standard form) with

    tr X = tr Y = 0,   tr XY = 4 cos(pi/n)^2 - 1,   tr [X, Y] = 3.

X is fixed to diag(w, w^2, 1) (w = e^{2 pi i/3}); Y = w^k g X g^{-1} with
g = exp(J K), K anti-Hermitian, so Y is automatically an order-3 regular
elliptic of trace 0. The two complex trace equations are solved for g by
nonlinear least squares from seeded restarts; the free variable
t = tr(X Y^{-1}) is read off the solution. Conjugating every entry flips the
sign of Im t, and the branch with Im t > 0 is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

from .errors import NoConvergence
from .hermitian import CUBE_ROOTS, J, OMEGA, STANDARD, GroupElement
from .triangle import elliptic_trace

X0 = np.diag([OMEGA, OMEGA.conjugate(), 1.0]).astype(complex)
_IU = np.triu_indices(3, 1)


@dataclass(frozen=True)
class LagrangianSolution:
    n: int
    t: complex
    X: GroupElement
    Y: GroupElement
    residual: float  # |tr [X,Y] - 3|

    @property
    def commutator(self) -> GroupElement:
        X, Y = self.X, self.Y
        return X @ Y @ X.inverse() @ Y.inverse()


def _su21(p: np.ndarray) -> np.ndarray:
    K = np.zeros((3, 3), dtype=complex)
    K[_IU] = p[0:3] + 1j * p[3:6]
    K = K - K.conj().T
    K[np.diag_indices(3)] = 1j * np.array([p[6], p[7], -p[6] - p[7]])
    return expm(J @ K)


def _jinv(m: np.ndarray) -> np.ndarray:
    return J @ m.conj().T @ J


def _pair(p: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    g = _su21(p)
    return X0, CUBE_ROOTS[k] * (g @ X0 @ _jinv(g))


def _residuals(p, k, target_xy):
    X, Y = _pair(p, k)
    if not np.all(np.isfinite(Y)):
        return np.full(4, 1e6)
    t1 = np.trace(X @ Y) - target_xy
    t2 = np.trace(X @ Y @ _jinv(X) @ _jinv(Y)) - 3
    return np.array([t1.real, t1.imag, t2.real, t2.imag])


def lagrangian_solve(n: int, restarts: int = 60, seed: int = 0, tol: float = 1e-12) -> LagrangianSolution:
    if not (isinstance(n, (int, np.integer)) and n >= 4):
        raise ValueError(f"need an integer n >= 4, got {n!r}")
    target = elliptic_trace(n)
    rng = np.random.default_rng(seed)
    for attempt in range(restarts):
        k = attempt % 3
        p0 = 0.7 * rng.standard_normal(8)
        sol = least_squares(_residuals, p0, args=(k, target), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if not np.all(np.abs(sol.fun) < tol):
            continue
        X, Y = _pair(sol.x, k)
        comm = X @ Y @ _jinv(X) @ _jinv(Y)
        if min(np.abs(comm - w * np.eye(3)).max() for w in CUBE_ROOTS) < 1e-6:
            continue
        t = complex(np.trace(X @ _jinv(Y)))
        if t.imag < 0:
            X, Y, t = X.conj(), Y.conj(), t.conjugate()
        res = abs(np.trace(X @ Y @ _jinv(X) @ _jinv(Y)) - 3)
        return LagrangianSolution(
            n,
            t,
            GroupElement(X, STANDARD, det_normalized=True),
            GroupElement(Y, STANDARD, det_normalized=True),
            float(res),
        )
    raise NoConvergence(f"no representation with unipotent [x,y] found for n={n} after {restarts} restarts")
