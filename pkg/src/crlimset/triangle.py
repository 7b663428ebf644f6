"""Complex hyperbolic triangle groups Delta(p, q, r; theta).

The three complex reflections are written in the basis of their polar
vectors (v1, v2, v3), whose Gram matrix is

    [[1,                 cos(pi/p), cos(pi/r) e^{i theta}],
     [cos(pi/p),         1,         cos(pi/q)            ],
     [cos(pi/r) e^{-i theta}, cos(pi/q), 1               ]].

``r = inf`` is realized as the limit |c13| = 1, which makes I3 I1 unipotent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import DEFAULT
from .errors import Degenerate, OutOfRange, Unsupported, WrongSignature
from .hermitian import GroupElement, HermitianForm, IsometryType, classify

INF = math.inf
RIGID = None  # admissible_bound marker for p = 2


def _cos_pi_over(n) -> float:
    return 1.0 if n == INF else math.cos(math.pi / n)


def _recip(n) -> float:
    return 0.0 if n == INF else 1.0 / n


@dataclass(frozen=True)
class TriangleSpec:
    p: int | float
    q: int | float
    r: int | float
    theta: float = 0.0

    def __post_init__(self):
        for n in (self.p, self.q, self.r):
            if not (n == INF or (int(n) == n and n >= 2)):
                raise ValueError(f"triangle orders must be integers >= 2 or inf, got {n}")
        if not (self.p <= self.q <= self.r):
            raise ValueError("need p <= q <= r")
        if _recip(self.p) + _recip(self.q) + _recip(self.r) >= 1:
            raise ValueError("(p, q, r) is not hyperbolic: 1/p + 1/q + 1/r >= 1")
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError("theta is stored in [0, pi]; conjugate the realization for -theta")

    @classmethod
    def unipotent(cls, p, q, r) -> TriangleSpec:
        """Spec at the angular invariant making I3 I2 I1 I2 unipotent (3,3,r)."""
        return cls(p, q, r, theta_unipotent(r))

    @property
    def c12(self) -> float:
        return _cos_pi_over(self.p)

    @property
    def c23(self) -> float:
        return _cos_pi_over(self.q)

    @property
    def c13(self) -> complex:
        return _cos_pi_over(self.r) * complex(math.cos(self.theta), math.sin(self.theta))

    def label(self) -> str:
        fmt = lambda n: "inf" if n == INF else str(int(n))  # noqa: E731
        return f"({fmt(self.p)},{fmt(self.q)},{fmt(self.r)};theta={self.theta:.12g})"


def gram_determinant(spec: TriangleSpec) -> float:
    a, b, c = spec.c12, spec.c23, _cos_pi_over(spec.r)
    return 1 + 2 * math.cos(spec.theta) * a * b * c - a * a - b * b - c * c


def admissible_bound(p, q, r) -> float | None:
    """Upper bound on cos(theta) for signature (2,1); ``RIGID`` when p = 2."""
    a, b, c = _cos_pi_over(p), _cos_pi_over(q), _cos_pi_over(r)
    if abs(a * b * c) < 1e-15:
        return RIGID
    return (-1 + a * a + b * b + c * c) / (2 * a * b * c)


def gram_matrix(spec: TriangleSpec) -> HermitianForm:
    det = gram_determinant(spec)
    if abs(det) < DEFAULT.degenerate:
        raise Degenerate(f"Gram determinant {det:.3g} vanishes for {spec.label()}")
    c13 = spec.c13
    H = np.array(
        [
            [1.0, spec.c12, c13],
            [spec.c12, 1.0, spec.c23],
            [c13.conjugate(), spec.c23, 1.0],
        ],
        dtype=complex,
    )
    form = HermitianForm(H)
    if det > 0 or form.signature != (2, 1):
        raise WrongSignature(f"Gram form of {spec.label()} has signature {form.signature}")
    return form


def theta_unipotent(r) -> float:
    c = _cos_pi_over(r)
    cos_theta = c - 3 / (4 * c)
    if not -1.0 <= cos_theta <= 1.0:
        raise OutOfRange(f"no unipotent angular invariant for r = {r} (cos = {cos_theta})")
    return math.acos(cos_theta)


def trace_ijkj(spec: TriangleSpec) -> float:
    """tr(I_i I_j I_k I_j) from the Gram entries (i, k = 1, 3; j = 2)."""
    c12, c23, c13 = spec.c12, spec.c23, spec.c13
    return (
        16 * abs(c12 * c23) ** 2
        - 16 * (c12 * c23 * c13.conjugate()).real
        + 4 * abs(c13) ** 2
        - 1
    )


def elliptic_trace(k: int) -> float:
    """Trace of a regular elliptic element of order k in SU(2,1) of the
    form I_i I_j (rotation by 2 pi / k)."""
    return 4 * math.cos(math.pi / k) ** 2 - 1


def reflection_matrices(H: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """I_k(x) = -x + 2 <x, v_k> v_k written in the basis (v1, v2, v3)."""
    c = H
    I1 = np.array([[1, 2 * c[1, 0], 2 * c[2, 0]], [0, -1, 0], [0, 0, -1]], dtype=complex)
    I2 = np.array([[-1, 0, 0], [2 * c[0, 1], 1, 2 * c[2, 1]], [0, 0, -1]], dtype=complex)
    I3 = np.array([[-1, 0, 0], [0, -1, 0], [2 * c[0, 2], 2 * c[1, 2], 1]], dtype=complex)
    return I1, I2, I3


@dataclass(frozen=True, eq=False)
class TriangleRealization:
    spec: TriangleSpec
    gram: HermitianForm
    I1: GroupElement
    I2: GroupElement
    I3: GroupElement

    @property
    def c12(self) -> complex:
        return complex(self.gram.entries[0, 1])

    @property
    def c23(self) -> complex:
        return complex(self.gram.entries[1, 2])

    @property
    def c13(self) -> complex:
        return complex(self.gram.entries[0, 2])

    def _product(self, *factors: GroupElement) -> GroupElement:
        # an even number of det -1 reflections lands in SU(2,1)
        m = np.eye(3, dtype=complex)
        for f in factors:
            m = m @ f.matrix
        return GroupElement(m, self.gram, det_normalized=len(factors) % 2 == 0, check=False)

    @cached_property
    def x(self) -> GroupElement:
        return self._product(self.I1, self.I2)

    @cached_property
    def y(self) -> GroupElement:
        return self._product(self.I2, self.I3)

    @property
    def reflections(self) -> tuple[GroupElement, GroupElement, GroupElement]:
        return self.I1, self.I2, self.I3

    def generators(self) -> dict[str, GroupElement]:
        return {"x": self.x, "y": self.y}

    def symmetries(self) -> tuple[GroupElement, ...]:
        """Densification symmetries for limit-set runs: x, y and the reflections."""
        return (self.x, self.y) + self.reflections

    @cached_property
    def ijkj(self) -> GroupElement:
        """I3 I2 I1 I2, unipotent exactly at theta_unipotent(r)."""
        return self._product(self.I3, self.I2, self.I1, self.I2)


def build(spec: TriangleSpec) -> TriangleRealization:
    form = gram_matrix(spec)
    I1, I2, I3 = (GroupElement(m, form) for m in reflection_matrices(form.entries))
    return TriangleRealization(spec, form, I1, I2, I3)


def discreteness_check(real: TriangleRealization) -> bool:
    """Non-ellipticity of I3 I2 I1 I2, which decides discreteness and
    faithfulness of Delta(3,3,n; theta) for 4 <= n <= inf."""
    s = real.spec
    if (s.p, s.q) != (3, 3) or not (s.r == INF or s.r >= 4):
        raise Unsupported("discreteness criterion covers (3,3,n), 4 <= n <= inf only")
    cls = classify(real.ijkj)
    if cls.tag in (IsometryType.LOXODROMIC, IsometryType.UNIPOTENT):
        return True
    if cls.tag in (IsometryType.REGULAR_ELLIPTIC, IsometryType.ELLIPTIC, IsometryType.IDENTITY):
        return False
    t = cls.trace
    return abs(t.imag) < DEFAULT.trace and not (-1 < t.real < 3)
