"""Finitely presented groups and their morphisms onto Lambda_2(3,3,n).

A morphism rho: pi_1(M) -> Lambda_2(3,3,n) is given by words over {x, y}
for each generator. It is checked in the matrix realization
Delta_2(3,3,n; theta_inf), which is faithful, so projective identities
between matrices are identities in Lambda_2(3,3,n):

* every relator of pi_1(M), and every claimed relation of triangle type,
  maps to the identity;
* witness words w_x, w_y, w_xy, w_xY map to x, y, xy, xy^-1, which makes
  rho onto; w_a and w_b (products of witnesses) map back to rho(a), rho(b);
* their traces are the prescribed 0, 0, tr(xy), tr(xy^-1);
* each cusp (meridian, longitude) maps to a rank-one unipotent subgroup.
"""

from __future__ import annotations

import math
import os
import re
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

from .config import DEFAULT, Tolerances
from .errors import BadSlope, BuildFailure, FixtureError, FormMismatch, MissingWitness
from .hermitian import (
    CUBE_ROOTS,
    GroupElement,
    IsometryType,
    classify,
    projective_distance,
)
from .triangle import INF, TriangleSpec, build, elliptic_trace
from .words import (
    AbelianGroup,
    Word,
    WordEvaluator,
    abelianization_matrix,
    enumerate_reduced,
    inverse,
    parse,
    power,
    reduce,
    smith_invariants,
    surjects_onto,
    triangle_abelianization,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

WITNESS_KEYS = ("x", "y", "xy", "xY")
PERIPHERAL_POWER_BOUND = 12


@dataclass(frozen=True)
class Presentation:
    name: str
    generators: str
    relators: tuple[Word, ...]
    peripheral: tuple[tuple[Word, Word], ...] = ()

    def __post_init__(self):
        for w in self.relators + tuple(w for cusp in self.peripheral for w in cusp):
            reduce(w, self.generators)

    @property
    def h1(self) -> AbelianGroup:
        return smith_invariants(abelianization_matrix(self.relators, self.generators), len(self.generators))


@dataclass(frozen=True)
class MorphismSpec:
    target_n: int | float
    images: dict[str, Word]
    witnesses: dict[str, Word]
    claimed_relations: tuple[Word, ...] = ()
    realization: str = "triangle"  # or "lagrangian"
    witness_text: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.realization not in ("triangle", "lagrangian"):
            raise BuildFailure(f"unknown realization {self.realization!r}")
        for k, w in self.witnesses.items():
            if not w:
                raise MissingWitness(f"witness w_{k} is empty")

    @property
    def target_label(self) -> str:
        n = "inf" if self.target_n == INF else str(int(self.target_n))
        return f"Lambda_2(3,3,{n})" + (" [lagrangian]" if self.realization == "lagrangian" else "")


# --- target realizations -------------------------------------------------

@lru_cache(maxsize=None)
def target_pair(n, realization: str = "triangle") -> tuple[GroupElement, GroupElement]:
    """Images of (x, y): (I1 I2, I2 I3) at theta_inf, or the Lagrangian pair."""
    try:
        if realization == "lagrangian":
            from .lagrangian import lagrangian_solve

            sol = lagrangian_solve(int(n))
            return sol.X, sol.Y
        real = build(TriangleSpec.unipotent(3, 3, n))
    except Exception as exc:  # any construction failure is a bad target
        raise BuildFailure(f"cannot realize target n={n} ({realization}): {exc}") from exc
    return real.x, real.y


def xy_evaluator(m: MorphismSpec) -> WordEvaluator:
    X, Y = target_pair(m.target_n, m.realization)
    return WordEvaluator({"x": X, "y": Y})


def gamma_evaluator(P: Presentation, m: MorphismSpec) -> WordEvaluator:
    """gamma = (images composed with x, y -> matrices) on pi_1 words."""
    ev = xy_evaluator(m)
    missing = [g for g in P.generators if g not in m.images]
    if missing:
        raise BuildFailure(f"no image for generators {missing}")
    return WordEvaluator({g: ev(m.images[g]) for g in P.generators})


# --- report --------------------------------------------------------------

@dataclass
class Check:
    stage: str
    name: str
    residual: float
    passed: bool
    detail: str = ""


@dataclass
class CuspResult:
    meridian: Word
    longitude: Word
    classes: tuple[str, str]
    traces: tuple[complex, complex]
    rank_one: bool
    relation: str
    unipotent: bool


@dataclass
class VerificationReport:
    name: str
    target: str
    checks: list[Check] = field(default_factory=list)
    cusps: list[CuspResult] = field(default_factory=list)
    surjective: bool = False
    trace_coordinates: tuple[complex, ...] = ()

    @property
    def passed(self) -> bool:
        return (
            self.surjective
            and all(c.passed for c in self.checks)
            and all(c.rank_one and c.unipotent for c in self.cusps)
        )

    def failures(self) -> list[str]:
        out = [f"{c.stage}:{c.name}" for c in self.checks if not c.passed]
        out += [f"cusp:{c.meridian},{c.longitude}" for c in self.cusps if not (c.rank_one and c.unipotent)]
        if not self.surjective:
            out.append("surjectivity")
        return out

    def as_dict(self) -> dict:
        cz = lambda z: [float(z.real), float(z.imag)]  # noqa: E731
        return {
            "name": self.name,
            "target": self.target,
            "passed": self.passed,
            "surjective": self.surjective,
            "checks": [c.__dict__ for c in self.checks],
            "cusps": [
                {**c.__dict__, "traces": [cz(t) for t in c.traces], "classes": list(c.classes)}
                for c in self.cusps
            ],
            "trace_coordinates": [cz(t) for t in self.trace_coordinates],
        }

    def format(self) -> str:
        lines = [f"name: {self.name}", f"target: {self.target}"]
        for c in self.checks:
            flag = "ok  " if c.passed else "FAIL"
            extra = f"  ({c.detail})" if c.detail else ""
            lines.append(f"  [{flag}] {c.stage:<9} {c.name:<28} residual={c.residual:.3e}{extra}")
        lines.append(f"  surjective: {'yes' if self.surjective else 'no'}")
        if self.trace_coordinates:
            tc = ", ".join(_fmt_c(t) for t in self.trace_coordinates)
            lines.append(f"  trace coordinates (x, y, xy, xY, [x,y]): {tc}")
        for i, c in enumerate(self.cusps):
            flag = "ok  " if c.rank_one and c.unipotent else "FAIL"
            lines.append(
                f"  [{flag}] cusp {i}: {c.meridian} -> {c.classes[0]} (tr {_fmt_c(c.traces[0])}), "
                f"{c.longitude} -> {c.classes[1]} (tr {_fmt_c(c.traces[1])}); {c.relation}"
            )
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _fmt_c(z: complex) -> str:
    return f"{z.real:.9f}{z.imag:+.9f}i"


def trace_distance(t: complex, target: complex) -> float:
    """|t - target| up to the cube-root ambiguity of SU(2,1) lifts."""
    return float(min(abs(w * t - target) for w in CUBE_ROOTS))


def trace_coordinates(X: GroupElement, Y: GroupElement) -> tuple[complex, ...]:
    if not X.form.same_as(Y.form):
        raise FormMismatch("elements preserve different forms")
    Xi, Yi = X.inverse(), Y.inverse()
    return (
        X.trace,
        Y.trace,
        (X @ Y).trace,
        (X @ Yi).trace,
        (X @ Y @ Xi @ Yi).trace,
    )


def _find_conjugator(g: GroupElement, target: GroupElement, xy: WordEvaluator, tol: float, max_len: int = 3):
    """Short word c in {x, y} and sign e with g = c target^e c^-1."""
    cands = [""] + list(enumerate_reduced("xy", max_len))
    for e, t in ((1, target), (-1, target.inverse())):
        for c in cands:
            C = xy(c)
            if projective_distance(g, C @ t @ C.inverse()) < tol:
                return c, e
    return None


def verify_morphism(P: Presentation, m: MorphismSpec, tol: Tolerances = DEFAULT) -> VerificationReport:
    missing = [k for k in WITNESS_KEYS if k not in m.witnesses]
    if missing:
        raise MissingWitness(f"{P.name}: missing witnesses {', '.join('w_' + k for k in missing)}")
    xy = xy_evaluator(m)
    gamma = gamma_evaluator(P, m)
    rep = VerificationReport(P.name, m.target_label)
    ident = GroupElement.identity(gamma.form)
    ptol = tol.projective

    for r in P.relators:
        d = projective_distance(gamma(r), ident)
        rep.checks.append(Check("relator", r, d, d < ptol))
    for r in m.claimed_relations:
        d = projective_distance(gamma(r), ident)
        rep.checks.append(Check("claimed", r, d, d < ptol))

    x, y = xy("x"), xy("y")
    wanted = {"x": x, "y": y, "xy": xy("xy"), "xY": xy("xY")}
    images = {}
    for k in WITNESS_KEYS:
        g = gamma(m.witnesses[k])
        images[k] = g
        d = projective_distance(g, wanted[k])
        ok, detail = d < ptol, ""
        if not ok and k == "xY":
            # a witness may map to a conjugate of xy^-1 (or of its inverse)
            found = _find_conjugator(g, wanted[k], xy, ptol)
            if found is not None:
                c, e = found
                ok = True
                detail = f"= {c or 'e'} (xY)^{e} {inverse(c) or 'e'}"
                t = wanted[k] if e > 0 else wanted[k].inverse()
                d = projective_distance(g, xy(c) @ t @ xy(inverse(c)))
        rep.checks.append(Check("witness", f"w_{k}={m.witnesses[k]}", d, ok, detail))
    for g in ("a", "b"):
        if g in m.witnesses and g in P.generators:
            d = projective_distance(gamma(m.witnesses[g]), gamma(g))
            text = m.witness_text.get(g, m.witnesses[g])
            rep.checks.append(Check("witness", f"w_{g}={text}", d, d < ptol))

    rep.surjective = all(
        c.passed for c in rep.checks if c.stage == "witness" and c.name.startswith(("w_x=", "w_y="))
    )

    n = m.target_n
    xy_trace = 3.0 if n == INF else elliptic_trace(int(n))
    xY_trace = 3.0 if m.realization == "triangle" else wanted["xY"].trace
    for k, want in zip(WITNESS_KEYS, (0.0, 0.0, xy_trace, xY_trace)):
        d = trace_distance(images[k].trace, want)
        rep.checks.append(Check("trace", f"tr w_{k} = {_fmt_c(complex(want))}", d, d < tol.trace))

    rep.trace_coordinates = trace_coordinates(images["x"], images["y"])
    rep.cusps = check_peripheral(P, m, tol)
    return rep


def check_peripheral(
    P: Presentation, m: MorphismSpec, tol: Tolerances = DEFAULT, bound: int = PERIPHERAL_POWER_BOUND
) -> list[CuspResult]:
    gamma = gamma_evaluator(P, m)
    out = []
    for mu, la in P.peripheral:
        M, L = gamma(mu), gamma(la)
        cm, cl = classify(M, tol.trace), classify(L, tol.trace)
        ids = [c.tag is IsometryType.IDENTITY for c in (cm, cl)]
        relation = ""
        if ids[1]:
            relation, rank_one = "longitude = e", True
        elif ids[0]:
            relation, rank_one = "meridian = e", True
        else:
            rank_one = False
            for k in sorted(range(-bound, bound + 1), key=lambda k: (abs(k), -k)):
                if k and projective_distance(L, M**k) < tol.projective:
                    relation, rank_one = f"longitude = meridian^{k}", True
                    break
            if not rank_one:
                relation = "no power relation found"
        nonid = [c for c, i in zip((cm, cl), ids) if not i]
        unipotent = bool(nonid) and all(c.tag is IsometryType.UNIPOTENT for c in nonid)
        out.append(CuspResult(mu, la, (str(cm.tag), str(cl.tag)), (cm.trace, cl.trace), rank_one, relation, unipotent))
    return out


# --- Dehn filling and homology -------------------------------------------

def dehn_fill(P: Presentation, cusp_index: int, p: int, q: int) -> Presentation:
    if math.gcd(p, q) != 1:
        raise BadSlope(f"slope ({p},{q}) is not primitive")
    if not 0 <= cusp_index < len(P.peripheral):
        raise IndexError(f"{P.name} has no cusp {cusp_index}")
    mu, la = P.peripheral[cusp_index]
    rel = reduce(power(mu, p) + power(la, q))
    rest = P.peripheral[:cusp_index] + P.peripheral[cusp_index + 1:]
    return replace(P, name=f"{P.name}({p},{q})", relators=P.relators + (rel,), peripheral=rest)


@dataclass(frozen=True)
class Obstruction:
    verdict: str  # "allowed" | "blocked"
    source: AbelianGroup
    target: AbelianGroup

    @property
    def blocked(self) -> bool:
        return self.verdict == "blocked"


def homology_obstruction(P: Presentation | AbelianGroup, target_n) -> Obstruction:
    """A surjection onto Lambda_2(3,3,n) forces one of H_1 onto its abelianization."""
    src = P if isinstance(P, AbelianGroup) else P.h1
    tgt = triangle_abelianization(target_n)
    return Obstruction("allowed" if surjects_onto(src, tgt) else "blocked", src, tgt)


# --- fixture documents ---------------------------------------------------

_WITNESS_TOKEN = re.compile(r"w_(xY|xy|x|y)(?:\^([+-]?\d+))?$")


def expand_witness(expr: str, witnesses: dict[str, Word], alphabet: str) -> Word:
    """``w_xy^-2 w_y^-1`` -> concatenated generator word; plain words pass through."""
    tokens = expr.split()
    if not tokens or not all(_WITNESS_TOKEN.match(t) for t in tokens):
        return parse(expr, alphabet)
    out = ""
    for t in tokens:
        name, k = _WITNESS_TOKEN.match(t).groups()
        if name not in witnesses:
            raise MissingWitness(f"expression {expr!r} uses undefined w_{name}")
        out += power(witnesses[name], int(k) if k else 1)
    return reduce(out, alphabet)


def _target_n(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "oo"):
        return INF
    if isinstance(v, int) and v >= 4:
        return v
    raise FixtureError(f"morphism target n must be an integer >= 4 or 'inf', got {v!r}")


def parse_document(doc: dict) -> tuple[Presentation, list[MorphismSpec]]:
    try:
        gens = doc["generators"]
        gens = "".join(gens) if isinstance(gens, list) else str(gens)
        P = Presentation(
            name=str(doc["name"]),
            generators=gens,
            relators=tuple(parse(r, gens) for r in doc.get("relators", [])),
            peripheral=tuple((parse(a, gens), parse(b, gens)) for a, b in doc.get("peripheral", [])),
        )
        blocks = doc.get("morphism", [])
        if isinstance(blocks, dict):
            blocks = [blocks]
        morphisms = []
        for b in blocks:
            wt = {k: str(v) for k, v in b.get("witnesses", {}).items()}
            wit = {k: parse(wt[k], gens) for k in WITNESS_KEYS if k in wt}
            for g in ("a", "b"):
                if g in wt:
                    wit[g] = expand_witness(wt[g], wit, gens)
            morphisms.append(
                MorphismSpec(
                    target_n=_target_n(b["n"]),
                    images={g: parse(w, "xy") for g, w in b["images"].items()},
                    witnesses=wit,
                    claimed_relations=tuple(parse(r, gens) for r in b.get("claimed_relations", [])),
                    realization=b.get("realization", "triangle"),
                    witness_text=wt,
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise FixtureError(f"malformed presentation document: {exc}") from exc
    return P, morphisms


def fixture_root() -> Path:
    env = os.environ.get("CRLIMSET_FIXTURES")
    return Path(env) if env else Path(__file__).with_name("fixtures")


def resolve_fixture(ref: str | os.PathLike) -> Path:
    p = Path(ref)
    if p.is_file():
        return p
    root = fixture_root()
    for cand in (root / p, root / p.name, root / f"{p.name}.toml"):
        if cand.is_file():
            return cand
    raise FileNotFoundError(f"no fixture {str(ref)!r} (searched cwd and {root})")


def load_fixture(ref: str | os.PathLike) -> tuple[Presentation, list[MorphismSpec]]:
    path = resolve_fixture(ref)
    try:
        doc = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise FixtureError(f"{path}: {exc}") from exc
    return parse_document(doc)


def fixture_paths() -> list[Path]:
    return sorted(fixture_root().glob("*.toml"))


def verify_all(refs: Sequence[str | os.PathLike] | None = None, tol: Tolerances = DEFAULT) -> list[VerificationReport]:
    reports = []
    for ref in refs if refs is not None else fixture_paths():
        P, ms = load_fixture(ref)
        reports += [verify_morphism(P, m, tol) for m in ms]
    return reports

