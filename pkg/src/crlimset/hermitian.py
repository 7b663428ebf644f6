"""Linear algebra over C^{2,1}.

The Hermitian product attached to a form matrix ``H`` is

    <z, w> = sum_ij H[i, j] z_i conj(w_j) = z^T H conj(w),

which is the convention in which the Gram matrix of the reflection
vectors, ``H[i, j] = <v_i, v_j>``, is written. A matrix ``M`` preserves the
product when ``<Mz, Mw> = <z, w>``, i.e. ``M^T H conj(M) = H``. For the
standard form ``diag(1, 1, -1)`` (real) this is the familiar ``M* J M = J``.

Boundary points of the complex hyperbolic plane are null lines; they are
represented by a lift in the coordinates of the form and by their image
``(z1, z2)`` on the unit sphere S^3 of the ball model.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import (
    DegenerateEigenstructure,
    FormMismatch,
    NonUnitDeterminant,
    NotLoxodromic,
    WrongSignature,
)

OMEGA = np.exp(2j * np.pi / 3)
CUBE_ROOTS = (1.0 + 0j, OMEGA, OMEGA.conjugate())
J = np.diag([1.0, 1.0, -1.0]).astype(complex)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HermitianForm:
    entries: np.ndarray

    def __post_init__(self):
        m = _frozen(self.entries)
        if m.shape != (3, 3):
            raise ValueError(f"form must be 3x3, got {m.shape}")
        if not np.array_equal(m, m.conj().T):
            raise ValueError("form matrix is not Hermitian")
        object.__setattr__(self, "entries", m)

    @cached_property
    def signature(self) -> tuple[int, int]:
        ev = np.linalg.eigvalsh(self.entries)
        scale = max(1.0, float(np.abs(ev).max()))
        return int((ev > 1e-12 * scale).sum()), int((ev < -1e-12 * scale).sum())

    @cached_property
    def chart(self) -> np.ndarray:
        return ball_chart(self)

    @cached_property
    def chart_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.chart)

    def same_as(self, other: HermitianForm) -> bool:
        return self is other or np.allclose(self.entries, other.entries, rtol=0, atol=1e-12)

    def product(self, z, w) -> complex:
        return herm_product(z, w, self)


STANDARD = HermitianForm(J)


def herm_product(z, w, H: HermitianForm) -> complex:
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return complex(z @ H.entries @ w.conj())


def goldman_f(tau: complex) -> float:
    """Goldman's discriminant; its sign separates loxodromic (> 0) from
    regular elliptic (< 0) elements of SU(2,1)."""
    tau = complex(tau)
    a2 = abs(tau) ** 2
    return a2 * a2 - 8.0 * (tau**3).real + 18.0 * a2 - 27.0


class IsometryType(enum.Enum):
    ELLIPTIC = "Elliptic"
    REGULAR_ELLIPTIC = "RegularElliptic"
    LOXODROMIC = "Loxodromic"
    PARABOLIC = "Parabolic"
    UNIPOTENT = "Unipotent"
    BOUNDARY = "EllipticOrParabolicBoundary"
    IDENTITY = "Identity"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class IsometryClass:
    tag: IsometryType
    trace: complex
    f: float

    @property
    def elliptic(self) -> bool:
        return self.tag in (IsometryType.ELLIPTIC, IsometryType.REGULAR_ELLIPTIC)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A 3x3 complex matrix preserving ``form``.

    ``det_normalized`` records that det = 1, i.e. the matrix lies in SU(2,1)
    and its trace is defined up to a cube root of unity only through the
    projection to PU(2,1).
    """

    matrix: np.ndarray
    form: HermitianForm = STANDARD
    det_normalized: bool = False
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        object.__setattr__(self, "matrix", m)
        if self.check:
            res = form_residual(m, self.form)
            if res > DEFAULT.form * max(1.0, float(np.abs(self.form.entries).max())):
                raise FormMismatch(f"matrix does not preserve the form (residual {res:.3g})")
            if self.det_normalized and abs(np.linalg.det(m) - 1) >= det_tolerance(m):
                raise NonUnitDeterminant(f"det = {np.linalg.det(m)}")

    @classmethod
    def identity(cls, form: HermitianForm = STANDARD) -> GroupElement:
        return cls(np.eye(3), form, det_normalized=True, check=False)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def _compatible(self, other: GroupElement):
        if not self.form.same_as(other.form):
            raise FormMismatch("elements preserve different forms")

    def __matmul__(self, other: GroupElement) -> GroupElement:
        self._compatible(other)
        return GroupElement(
            self.matrix @ other.matrix,
            self.form,
            self.det_normalized and other.det_normalized,
            check=False,
        )

    def __pow__(self, k: int) -> GroupElement:
        base = self if k >= 0 else self.inverse()
        out = np.eye(3, dtype=complex)
        for _ in range(abs(k)):
            out = out @ base.matrix
        return GroupElement(out, self.form, self.det_normalized or k == 0, check=False)

    def inverse(self) -> GroupElement:
        # <Mz,Mw> = <z,w>  =>  M^{-1} = conj(H^{-1} M^T H)
        H = self.form.entries
        inv = np.linalg.solve(H, self.matrix.T @ H).conj()
        return GroupElement(inv, self.form, self.det_normalized, check=False)

    def conjugate(self) -> GroupElement:
        """Entrywise complex conjugate; preserves the conjugate form."""
        return GroupElement(self.matrix.conj(), HermitianForm(self.form.entries.conj()), self.det_normalized, check=False)

    def normalized(self) -> GroupElement:
        if self.det_normalized:
            return self
        d = np.linalg.det(self.matrix)
        return GroupElement(self.matrix * (1 / d) ** (1 / 3), self.form, True, check=False)

    def in_ball(self) -> np.ndarray:
        """Matrix in ball-model coordinates (preserving diag(1,1,-1))."""
        return self.form.chart_inverse @ self.matrix @ self.form.chart

    @cached_property
    def isometry_class(self) -> IsometryClass:
        return classify(self)


def form_residual(m: np.ndarray, form: HermitianForm) -> float:
    H = form.entries
    return float(np.abs(m.T @ H @ m.conj() - H).max())


def det_tolerance(m: np.ndarray) -> float:
    # rounding in det grows like the cube of the entry size
    return DEFAULT.determinant * max(1.0, float(np.abs(m).max())) ** 3


def is_projective_identity(M: GroupElement, tol: float = DEFAULT.projective) -> bool:
    return min(np.abs(M.matrix - w * np.eye(3)).max() for w in CUBE_ROOTS) < tol


def classify(M: GroupElement, tol: float = DEFAULT.trace) -> IsometryClass:
    if abs(M.det - 1) >= max(tol, det_tolerance(M.matrix)):
        raise NonUnitDeterminant(f"classify needs det 1, got {M.det}")
    tr = M.trace
    f = goldman_f(tr)
    if f > tol:
        tag = IsometryType.LOXODROMIC
    elif f < -tol:
        tag = IsometryType.REGULAR_ELLIPTIC
    elif is_projective_identity(M, tol):
        tag = IsometryType.IDENTITY
    elif abs(tr**3 - 27) < tol * 27:
        tag = IsometryType.UNIPOTENT
    else:
        tag = IsometryType.BOUNDARY
        # f = (t+1)(t-3)^3 on real traces; t = 3 was caught above, so a
        # real representative of the trace can only be -1: a reflection.
        for w in CUBE_ROOTS:
            t = tr * w
            if abs(t.imag) < tol and abs(t.real + 1) < np.sqrt(tol):
                tag = IsometryType.ELLIPTIC
    return IsometryClass(tag, tr, f)


def projective_equal(M: GroupElement, N: GroupElement, tol: float = DEFAULT.projective) -> bool:
    return projective_distance(M, N) < tol


def projective_distance(M: GroupElement, N: GroupElement) -> float:
    """min over cube roots w of ||M - w N||_inf (entrywise max)."""
    if not M.form.same_as(N.form):
        raise FormMismatch("elements preserve different forms")
    return float(min(np.abs(M.matrix - w * N.matrix).max() for w in CUBE_ROOTS))


# --- eigen-solves --------------------------------------------------------

def eigvals3(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of 3x3 matrices, shape (..., 3).

    Cardano on the characteristic polynomial, then one Newton step per root.
    """
    m = np.asarray(m, dtype=complex)
    tr = np.trace(m, axis1=-2, axis2=-1)
    c1 = (
        m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
        + m[..., 0, 0] * m[..., 2, 2] - m[..., 0, 2] * m[..., 2, 0]
        + m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1]
    )
    det = np.linalg.det(m)
    # lambda^3 - tr lambda^2 + c1 lambda - det = 0, lambda = t + tr/3
    s = tr / 3
    p = c1 - tr * tr / 3
    q = -2 * s**3 + c1 * s - det
    disc = np.sqrt(q * q / 4 + p**3 / 27)
    u1 = -q / 2 + disc
    u2 = -q / 2 - disc
    u = np.where(np.abs(u1) >= np.abs(u2), u1, u2)
    C = u ** (1 / 3)
    roots = []
    for w in CUBE_ROOTS:
        Cw = C * w
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(Cw) > 1e-300, Cw - p / (3 * Cw), 0)
        roots.append(t + s)
    lam = np.stack(roots, axis=-1)
    # Newton polish
    P = ((lam - tr[..., None]) * lam + c1[..., None]) * lam - det[..., None]
    dP = (3 * lam - 2 * tr[..., None]) * lam + c1[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        step = np.where(np.abs(dP) > 1e-12 * (1 + np.abs(lam) ** 2), P / dP, 0)
    return lam - step


def null_vector3(a: np.ndarray) -> np.ndarray:
    """Kernel vector of rank-2 3x3 matrices (stacked): the largest cross
    product of two rows."""
    r0, r1, r2 = a[..., 0, :], a[..., 1, :], a[..., 2, :]
    cands = np.stack([np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2)], axis=-2)
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmax(norms, axis=-1)
    v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def attracting_eigenvectors(m: np.ndarray, gap: float = DEFAULT.eigen_gap):
    """Top-modulus eigenvectors for a stack of matrices.

    Returns ``(vectors, ok)`` where ``ok`` is False where the two largest
    eigenvalue moduli are within ``gap`` (relative) of each other.
    """
    lam = eigvals3(m)
    mod = np.abs(lam)
    order = np.argsort(-mod, axis=-1)
    top = np.take_along_axis(lam, order[..., :1], axis=-1)[..., 0]
    m1 = np.take_along_axis(mod, order[..., :1], axis=-1)[..., 0]
    m2 = np.take_along_axis(mod, order[..., 1:2], axis=-1)[..., 0]
    ok = (m1 - m2) > gap * m1
    shifted = m - top[..., None, None] * np.eye(3)
    v = null_vector3(shifted)
    # one inverse-iteration-free refinement: re-apply m and renormalize
    v = np.einsum("...ij,...j->...i", m, v)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return v, ok


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    lift: np.ndarray
    s3: tuple[complex, complex]

    @classmethod
    def from_lift(cls, lift, form: HermitianForm = STANDARD) -> BoundaryPoint:
        v = np.asarray(lift, dtype=complex)
        u = form.chart_inverse @ v
        z = u[:2] / u[2]
        z = z / np.linalg.norm(z)
        return cls(_frozen(v), (complex(z[0]), complex(z[1])))


def attractive_fixed_point(M: GroupElement, tol: Tolerances = DEFAULT) -> BoundaryPoint:
    cls = classify(M.normalized(), tol.trace)
    if cls.tag is not IsometryType.LOXODROMIC:
        raise NotLoxodromic(f"element is {cls.tag}")
    v, ok = attracting_eigenvectors(M.matrix[None], tol.eigen_gap)
    if not ok[0]:
        raise DegenerateEigenstructure("top eigenvalue moduli too close")
    return BoundaryPoint.from_lift(v[0], M.form)


# --- ball chart ----------------------------------------------------------

def _gram_schmidt(H: np.ndarray, order) -> np.ndarray | None:
    cols = []
    for k, idx in enumerate(order):
        x = np.zeros(3, dtype=complex)
        x[idx] = 1.0
        for t, sign in cols:
            x = x - sign * (x @ H @ t.conj()) * t
        n = (x @ H @ x.conj()).real
        want = 1.0 if k < 2 else -1.0
        if n * want <= 1e-12:
            return None
        cols.append((x / np.sqrt(abs(n)), want))
    T = np.zeros((3, 3), dtype=complex)
    for (t, _), idx in zip(cols, range(3)):
        T[:, idx] = t
    return T


def ball_chart(H: HermitianForm) -> np.ndarray:
    """Basis change T with <T u, T u'>_H = <u, u'>_J, i.e.
    ``T^T H conj(T) = diag(1, 1, -1)``.

    Lifts in the coordinates of ``H`` map to the ball model by ``T^{-1}``.
    """
    if H.signature != (2, 1):
        raise WrongSignature(f"signature {H.signature}, expected (2, 1)")
    m = H.entries
    for order in itertools.permutations(range(3)):
        T = _gram_schmidt(m, order)
        if T is not None:
            return T
    # unreachable for signature (2,1) in practice, kept as a safety net
    w, U = np.linalg.eigh(m)
    idx = np.argsort(-w)
    S = U[:, idx] / np.sqrt(np.abs(w[idx]))
    return S.conj()
