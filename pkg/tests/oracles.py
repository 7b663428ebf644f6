"""Independent reference computations used only by the tests.

Nothing here calls into the package's numeric kernels: fixed points come
from power iteration, classification from numpy's general eigen-solver,
Smith invariants from determinantal divisors, surjections from brute force.
"""

from __future__ import annotations

import itertools
import math
from functools import reduce as fold

import numpy as np


def power_iteration(m: np.ndarray, steps: int = 400, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    for _ in range(steps):
        v = m @ v
        v = v / np.linalg.norm(v)
    return v


def same_line(u: np.ndarray, v: np.ndarray) -> float:
    """Distance between the complex lines through u and v (0 when equal)."""
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    return float(np.linalg.norm(u - np.vdot(v, u) * v))


def eigen_loxodromic(m: np.ndarray, tol: float = 1e-8) -> bool:
    """Loxodromic iff the eigenvalue moduli are not all 1."""
    mod = np.abs(np.linalg.eigvals(m))
    return bool(np.abs(mod - 1).max() > tol)


def int_det(rows: list[list[int]]) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def determinantal_invariants(m: list[list[int]], n_cols: int) -> tuple[list[int], int]:
    """(invariant factors > 1, free rank) from gcds of k x k minors."""
    rows = len(m)
    d = [1]
    for k in range(1, min(rows, n_cols) + 1):
        g = 0
        for ri in itertools.combinations(range(rows), k):
            for ci in itertools.combinations(range(n_cols), k):
                g = math.gcd(g, int_det([[m[i][j] for j in ci] for i in ri]))
        if g == 0:
            break
        d.append(g)
    factors = [d[i] // d[i - 1] for i in range(1, len(d))]
    rank = len(factors)
    return [f for f in factors if f != 1], n_cols - rank


def brute_surjects(relator_rows: list[list[int]], n_gens: int, target: tuple[int, ...]) -> bool:
    """Is there an onto map from <gens | relators>^ab to prod Z/t?

    Enumerates every assignment of generators to target elements.
    """
    elems = list(itertools.product(*[range(t) for t in target]))
    order = fold(lambda a, b: a * b, target, 1)

    def span(vectors):
        seen = {tuple(0 for _ in target)}
        frontier = list(seen)
        while frontier:
            nxt = []
            for s in frontier:
                for v in vectors:
                    w = tuple((a + b) % t for a, b, t in zip(s, v, target))
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
        return len(seen)

    for assign in itertools.product(elems, repeat=n_gens):
        ok = all(
            all(sum(c * assign[g][k] for g, c in enumerate(row)) % t == 0 for k, t in enumerate(target))
            for row in relator_rows
        )
        if ok and span(assign) == order:
            return True
    return False


def brute_reduced_words(alphabet: str, length: int) -> set[str]:
    letters = list(alphabet) + [c.upper() for c in alphabet]
    out = set()
    for w in itertools.product(letters, repeat=length):
        if all(w[i] != w[i + 1].swapcase() for i in range(length - 1)):
            out.add("".join(w))
    return out


def eig_chart(H: np.ndarray) -> np.ndarray:
    """A chart from the spectral decomposition, for the transposed convention
    z^T H conj(w): columns are conj of orthonormal eigenvectors, scaled."""
    w, U = np.linalg.eigh(H)
    idx = np.argsort(-w)
    w, U = w[idx], U[:, idx]
    return (U / np.sqrt(np.abs(w))).conj()
