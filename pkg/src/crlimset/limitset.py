"""Approximate limit sets on the boundary sphere S^3.

Phase one collects the attracting fixed points of every loxodromic word up
to length ``n1``; phase two pushes the cloud around with the symmetries and
with every word up to length ``n2``. Points live in the ball chart as unit
vectors (z1, z2) in C^2 and are deduplicated in the chord metric of R^4.
"""

from __future__ import annotations

import enum
import os
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from .config import DEFAULT
from .hermitian import GroupElement, attracting_eigenvectors
from .words import letters


@dataclass(frozen=True)
class OrbitConfig:
    n1: int = 8
    n2: int = 4
    symmetries: tuple[GroupElement, ...] | None = None  # None: the generator images
    epsilon: float = 1e-3
    max_points: int = 2_000_000
    rounds: int = 2
    threads: int = 1
    chunk: int = 1 << 21  # candidate points per batch
    debug: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("n1 and n2 must be >= 1")
        if self.max_points < 1 or self.rounds < 0 or self.threads < 1:
            raise ValueError("max_points, threads >= 1 and rounds >= 0 required")


# --- cell keys -----------------------------------------------------------

_MIX = np.array([0x9E3779B97F4A7C15, 0xC2B2AE3D27D4EB4F, 0x165667B19E3779F9, 0x27D4EB2F165667C5], dtype=np.uint64)


def _pack(idx: np.ndarray, base: int) -> np.ndarray:
    """int64 key of (..., 4) cell indices; exact when base**4 fits, hashed otherwise.

    A hash collision can only make a candidate look closer to the cloud than
    it is, never the reverse, because distances are always checked exactly.
    """
    if base**4 < 2**62:
        k = idx[..., 0]
        for j in range(1, 4):
            k = k * base + idx[..., j]
        return k
    u = idx.astype(np.uint64)
    with np.errstate(over="ignore"):
        h = (u * _MIX).sum(axis=-1, dtype=np.uint64)
        h ^= h >> np.uint64(29)
    return h.view(np.int64)


def _as_real(z: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(z).view(np.float64).reshape(-1, 4)


_CORNERS = np.array(np.meshgrid(*[[0, 1]] * 4, indexing="ij")).reshape(4, -1).T


class PointCloud:
    """Deduplicated points on S^3 (ball chart), in insertion order.

    Invariants: stored points are pairwise more than epsilon/2 apart, and
    every rejected candidate lies within epsilon of a stored point. A fine
    grid of pitch epsilon/4 (cell diagonal epsilon/2) rejects candidates in
    occupied or blocked cells outright; the rest are checked exactly against a coarse
    grid of pitch epsilon, where a ball of radius epsilon/2 meets at most
    the 2^4 cells on the near side of each axis.
    """

    def __init__(self, epsilon: float = 1e-3, max_points: int = 2_000_000, debug: bool = False):
        self.epsilon = float(epsilon)
        self.max_points = int(max_points)
        self.debug = debug or bool(os.environ.get("CRLIMSET_DEBUG"))
        self.seeds = 0
        self.densified = 0
        self.no_loxodromic = False
        self.rejected_degenerate = 0
        self._z = np.empty((0, 2), dtype=complex)
        self._fine_h = self.epsilon / 4
        self._fine_base = int(np.floor(2 / self._fine_h)) + 3
        self._coarse_h = self.epsilon
        self._coarse_base = int(np.floor(2 / self._coarse_h)) + 4
        self._fine_keys = np.empty(0, dtype=np.int64)  # sorted
        self._coarse_keys = np.empty(0, dtype=np.int64)  # sorted
        self._coarse_pts = np.empty((0, 4))  # aligned with _coarse_keys

    # read-only views
    @property
    def points(self) -> np.ndarray:
        v = self._z.view()
        v.setflags(write=False)
        return v

    @property
    def s3(self) -> np.ndarray:
        return _as_real(self._z)

    def __len__(self) -> int:
        return len(self._z)

    @property
    def full(self) -> bool:
        return len(self._z) >= self.max_points

    def copy(self) -> PointCloud:
        c = PointCloud.__new__(PointCloud)
        c.__dict__.update(self.__dict__)
        return c  # arrays are never mutated in place, sharing them is safe

    def lifts(self, chart: np.ndarray | None = None) -> np.ndarray:
        """Null vectors (z1, z2, 1), mapped through ``chart`` when given."""
        u = np.concatenate([self._z, np.ones((len(self._z), 1))], axis=1)
        return u if chart is None else u @ chart.T

    # --- insertion -----------------------------------------------------

    def _fine(self, x: np.ndarray) -> np.ndarray:
        idx = np.floor((x + 1.0) / self._fine_h).astype(np.int64) + 1
        return _pack(np.clip(idx, 0, self._fine_base - 1), self._fine_base)

    def _coarse_idx(self, x: np.ndarray) -> np.ndarray:
        idx = np.floor((x + 1.0) / self._coarse_h).astype(np.int64) + 2
        return np.clip(idx, 1, self._coarse_base - 2)

    def _probe_cells(self, x: np.ndarray) -> np.ndarray:
        t = (x + 1.0) / self._coarse_h
        side = np.where(t - np.floor(t) >= 0.5, 1, -1)
        cells = self._coarse_idx(x)[:, None, :] + _CORNERS[None] * side[:, None, :]
        return _pack(cells, self._coarse_base)

    def _near_stored(self, x: np.ndarray, block: int = 1 << 16) -> np.ndarray:
        hit = np.zeros(len(x), dtype=bool)
        if not len(self._coarse_keys):
            return hit
        r2 = (self.epsilon / 2) ** 2
        for s in range(0, len(x), block):
            xs = x[s : s + block]
            nb = self._probe_cells(xs).ravel()
            lo = np.searchsorted(self._coarse_keys, nb, "left")
            cnt = np.searchsorted(self._coarse_keys, nb, "right") - lo
            tot = int(cnt.sum())
            if not tot:
                continue
            rep = np.repeat(np.arange(len(nb)), cnt)
            pos = lo[rep] + (np.arange(tot) - np.repeat(np.cumsum(cnt) - cnt, cnt))
            row = rep // len(_CORNERS)
            d2 = ((xs[row] - self._coarse_pts[pos]) ** 2).sum(axis=1)
            hit[s + row[d2 <= r2]] = True
        return hit

    def _greedy(self, x: np.ndarray) -> np.ndarray:
        """Keep mask: lowest index wins among candidates within epsilon/2."""
        keep = np.ones(len(x), dtype=bool)
        if len(x) < 2:
            return keep
        pairs = cKDTree(x).query_pairs(self.epsilon / 2, output_type="ndarray")
        if not len(pairs):
            return keep
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
        for i, j in pairs.tolist():
            if keep[i]:
                keep[j] = False
        return keep

    def insert(self, z: np.ndarray) -> int:
        """Add candidate points (M, 2) in order; returns how many were kept."""
        room = self.max_points - len(self._z)
        if room <= 0 or not len(z):
            return 0
        z = np.ascontiguousarray(z, dtype=complex)
        finite = np.isfinite(z).all(axis=1)
        if not finite.all():
            z = z[finite]
        x = _as_real(z)
        fk = self._fine(x)
        # first candidate per fine cell, then drop cells already occupied
        uk, first = np.unique(fk, return_index=True)
        if len(self._fine_keys):
            pos = np.minimum(np.searchsorted(self._fine_keys, uk), len(self._fine_keys) - 1)
            first = first[self._fine_keys[pos] != uk]
        first.sort()
        z, x, fk = z[first], x[first], fk[first]
        near = self._near_stored(x)
        blocked = [fk[near]]
        z, x, fk = z[~near], x[~near], fk[~near]
        keep = self._greedy(x)
        blocked.append(fk[~keep])
        z, x, fk = z[keep][:room], x[keep][:room], fk[keep][:room]
        # a blocked cell holds a rejected candidate, so all of it lies within
        # epsilon of a stored point; later candidates there are dropped unseen
        self._fine_keys = np.sort(np.concatenate([self._fine_keys, fk, *blocked]))
        if not len(z):
            return 0
        if self.debug:
            check_points(z)
        self._z = np.concatenate([self._z, z])
        ck = _pack(self._coarse_idx(x), self._coarse_base)
        keys = np.concatenate([self._coarse_keys, ck])
        pts = np.concatenate([self._coarse_pts, x])
        order = np.argsort(keys, kind="stable")
        self._coarse_keys, self._coarse_pts = keys[order], pts[order]
        return len(z)


def check_points(z: np.ndarray, tol: float = 1e-8):
    """Boundary invariants: unit norm in C^2, i.e. (z1, z2, 1) is null for diag(1,1,-1)."""
    bad = np.abs(np.abs(z[:, 0]) ** 2 + np.abs(z[:, 1]) ** 2 - 1) >= tol
    if bad.any():
        raise AssertionError(f"{int(bad.sum())} points off S^3")


# --- group action in the ball chart -------------------------------------

def ball_matrices(gens: Mapping[str, GroupElement]) -> tuple[str, np.ndarray, np.ndarray]:
    """Letters a, A, b, B, ... with their det-1 matrices in form and ball coordinates."""
    forms = [g.form for g in gens.values()]
    form = forms[0]
    alpha = letters("".join(gens))
    raw = []
    for ch in alpha:
        g = gens[ch.lower()]
        g = g if ch.islower() else g.inverse()
        raw.append(g.normalized().matrix if abs(g.det) > 0 else g.matrix)
    raw = np.array(raw)
    T, Ti = form.chart, form.chart_inverse
    return "".join(alpha), raw, Ti @ raw @ T


def act(mb: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Apply ball-chart matrix ``mb`` to points z (N, 2), renormalized onto S^3."""
    w = z @ mb[:, :2].T + mb[:, 2]
    out = w[:, :2] / w[:, 2:3]
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def _project(lifts: np.ndarray, Ti: np.ndarray) -> np.ndarray:
    u = lifts @ Ti.T
    z = u[:, :2] / u[:, 2:3]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def goldman_f_vec(tr: np.ndarray) -> np.ndarray:
    a2 = np.abs(tr) ** 2
    return a2 * a2 - 8.0 * (tr**3).real + 18.0 * a2 - 27.0


# --- phase one -----------------------------------------------------------

def _shard_levels(first: int, mats: np.ndarray, inv: np.ndarray, n1: int):
    """Matrices of all reduced words starting with letter ``first``, level by
    level, in the same order as :func:`words.enumerate_reduced`."""
    level = mats[first][None]
    last = np.array([first])
    k = len(mats)
    yield level
    for _ in range(1, n1):
        prod = level[:, None] @ mats[None]
        ok = inv[last][:, None] != np.arange(k)[None]
        level = prod[ok]
        last = np.broadcast_to(np.arange(k), ok.shape)[ok]
        yield level


def _seed_shard(first, mats, inv, cfg, Ti):
    out, n_lox, n_bad = [], 0, 0
    for level in _shard_levels(first, mats, inv, cfg.n1):
        tr = np.trace(level, axis1=1, axis2=2)
        lox = goldman_f_vec(tr) > DEFAULT.trace
        if not lox.any():
            continue
        m = level[lox]
        scale = np.abs(m).max(axis=(1, 2), keepdims=True)
        v, ok = attracting_eigenvectors(m / scale, DEFAULT.eigen_gap)
        n_lox += int(lox.sum())
        n_bad += int((~ok).sum())
        if ok.any():
            out.append(_project(v[ok], Ti))
    return out, n_lox, n_bad


def _map(fn, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(fn, items))


def seed(generators: Mapping[str, GroupElement], cfg: OrbitConfig = OrbitConfig()) -> PointCloud:
    """Attracting fixed points of the loxodromic reduced words up to length n1.

    Words are sharded by first letter; shards may run on threads but are
    always inserted in letter order, so the result does not depend on the
    thread count.
    """
    alpha, mats, _ = ball_matrices(generators)
    form = next(iter(generators.values())).form
    inv = np.array([alpha.index(ch.swapcase()) for ch in alpha])
    cloud = PointCloud(cfg.epsilon, cfg.max_points, cfg.debug)
    results = _map(lambda i: _seed_shard(i, mats, inv, cfg, form.chart_inverse), range(len(alpha)), cfg.threads)
    n_lox = 0
    for pts, nl, nb in results:
        n_lox += nl
        cloud.rejected_degenerate += nb
        for z in pts:
            cloud.seeds += cloud.insert(z)
    cloud.no_loxodromic = n_lox == 0
    return cloud


# --- phase two -----------------------------------------------------------

def word_matrices(generators: Mapping[str, GroupElement], n2: int) -> np.ndarray:
    """Ball-chart matrices of every reduced word of length 1..n2."""
    alpha, _, mb = ball_matrices(generators)
    inv = np.array([alpha.index(ch.swapcase()) for ch in alpha])
    # by length, then by first letter
    levels = [list(_shard_levels(i, mb, inv, n2)) for i in range(len(alpha))]
    return np.concatenate([lv[k] for k in range(n2) for lv in levels])


def _apply_all(cloud: PointCloud, mats: np.ndarray, cfg: OrbitConfig, stream: bool = False) -> int:
    """Push points through every matrix, one block of points at a time.

    With ``stream`` the points inserted along the way are queued too, so the
    pass ends with the cloud closed under ``mats`` (at resolution epsilon) or
    full.
    """
    if not len(cloud) or not len(mats):
        return 0
    end = len(cloud)
    per = max(1, cfg.chunk // len(mats))
    added, q = 0, 0
    while q < (len(cloud) if stream else end) and not cloud.full:
        stop = min(q + per, len(cloud) if stream else end)
        block = cloud.points[q:stop]
        cands = _map(lambda m: act(m, block), list(mats), cfg.threads)
        added += cloud.insert(np.concatenate(cands))
        q = stop
    return added


def densify(
    cloud: PointCloud,
    generators: Mapping[str, GroupElement],
    cfg: OrbitConfig = OrbitConfig(),
    words: np.ndarray | None = None,
) -> PointCloud:
    """``rounds`` passes of: symmetries on the current points, then every
    word up to n2 on the current and all newly found points.

    ``words`` may override the word matrices (ball chart), e.g. with the
    identity alone.
    """
    out = cloud.copy()
    out.max_points = cfg.max_points
    form = next(iter(generators.values())).form
    syms = cfg.symmetries if cfg.symmetries is not None else tuple(generators.values())
    sym_b = np.array([form.chart_inverse @ g.matrix @ form.chart for g in syms]) if syms else np.empty((0, 3, 3))
    wmats = word_matrices(generators, cfg.n2) if words is None else np.asarray(words, dtype=complex)
    for _ in range(cfg.rounds):
        if out.full:
            break
        out.densified += _apply_all(out, sym_b, cfg)
        if out.full:
            break
        out.densified += _apply_all(out, wmats, cfg, stream=True)
    return out


def run(generators: Mapping[str, GroupElement], cfg: OrbitConfig = OrbitConfig()) -> PointCloud:
    c = seed(generators, cfg)
    return densify(c, generators, cfg) if len(c) else c


# --- diagnostics ---------------------------------------------------------

def invariance_score(cloud: PointCloud, generators: Iterable[GroupElement] | Mapping[str, GroupElement]) -> float:
    """Fraction of points p with a cloud point within 2 epsilon of g p for every g."""
    if not len(cloud):
        return 0.0
    gens = list(generators.values()) if isinstance(generators, Mapping) else list(generators)
    tree = cKDTree(cloud.s3)
    good = np.ones(len(cloud), dtype=bool)
    for g in gens:
        mb = g.in_ball()
        img = act(mb, cloud.points.copy())
        d, _ = tree.query(_as_real(img), distance_upper_bound=2 * cloud.epsilon)
        good &= np.isfinite(d)
    return float(good.mean())


class CloudTag(enum.Enum):
    ELEMENTARY = "Elementary"
    ROUND_CIRCLE = "RoundCircleCandidate"
    DENSE = "DenseCandidate"
    FRACTAL = "FractalCandidate"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class CloudClass:
    tag: CloudTag
    n_points: int
    circle_residual: float
    coverage: float
    thresholds: dict = field(default_factory=dict)


def circle_residual(x: np.ndarray) -> float:
    """Max distance from the best affine 2-plane in R^4 (total least squares).

    A round circle of S^3 is exactly the intersection with such a plane.
    """
    if len(x) < 3:
        return 0.0
    c = x - x.mean(axis=0)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    normal = vt[2:]
    return float(np.abs(c @ normal.T).max())


@lru_cache(maxsize=4)
def sphere_cells(pitch: float) -> np.ndarray:
    """Sorted keys of the R^4 grid cells (pitch ``pitch``) that meet S^3 at
    the radial projection of their own centre."""
    n = int(np.ceil(2 / pitch)) + 2
    ax = (np.arange(n) - n / 2 + 0.5) * pitch
    grids = np.meshgrid(ax, ax, ax, ax, indexing="ij")
    c = np.stack([g.ravel() for g in grids], axis=1)
    r = np.linalg.norm(c, axis=1)
    near = np.abs(r - 1) < pitch  # only these can qualify
    c, r = c[near], r[near]
    p = c / r[:, None]
    inside = (np.abs(p - c) <= pitch / 2).all(axis=1)
    return np.sort(_grid_keys(c[inside], pitch, n))


def _grid_keys(x: np.ndarray, pitch: float, n: int) -> np.ndarray:
    idx = np.floor(x / pitch + n / 2).astype(np.int64)
    return _pack(np.clip(idx, 0, n - 1), n)


def coverage(x: np.ndarray, pitch: float = 0.05) -> float:
    cells = sphere_cells(pitch)
    n = int(np.ceil(2 / pitch)) + 2
    occ = np.unique(_grid_keys(x, pitch, n))
    return float(np.isin(cells, occ, assume_unique=True).mean())


def classify_cloud(
    cloud: PointCloud, circle_factor: float = 10.0, dense_fraction: float = 0.9, pitch: float = 0.05
) -> CloudClass:
    x = cloud.s3
    th = {"circle_factor": circle_factor, "dense_fraction": dense_fraction, "pitch": pitch}
    n = len(x)
    if n <= 2:
        return CloudClass(CloudTag.ELEMENTARY, n, 0.0, 0.0, th)
    res = circle_residual(x)
    cov = coverage(x, pitch)
    if res < circle_factor * cloud.epsilon:
        tag = CloudTag.ROUND_CIRCLE
    elif cov > dense_fraction:
        tag = CloudTag.DENSE
    else:
        tag = CloudTag.FRACTAL
    return CloudClass(tag, n, res, cov, th)


def cloud_from_points(z: np.ndarray, epsilon: float = 1e-3, max_points: int = 2_000_000) -> PointCloud:
    """Deduplicated cloud from raw S^3 points (e.g. synthetic or read back from CSV)."""
    c = PointCloud(epsilon, max_points)
    c.insert(np.asarray(z, dtype=complex))
    return c


def cyclic_demo(length: float = 1.0) -> dict[str, GroupElement]:
    """A single hyperbolic translation along the z2 axis of the ball."""
    c, s = np.cosh(length), np.sinh(length)
    m = np.array([[1, 0, 0], [0, c, s], [0, s, c]], dtype=complex)
    return {"g": GroupElement(m, det_normalized=True)}


__all__ = [
    "OrbitConfig",
    "PointCloud",
    "CloudTag",
    "CloudClass",
    "seed",
    "densify",
    "run",
    "invariance_score",
    "classify_cloud",
    "circle_residual",
    "coverage",
    "cloud_from_points",
    "check_points",
    "act",
    "cyclic_demo",
]
