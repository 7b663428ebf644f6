"""``crlimset`` command-line driver.

Exit codes: 0 success, 2 bad input (usage, parse, degenerate triangle),
3 no loxodromic element, 4 failed verification, 5 solver did not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT
from .errors import (
    BadSlope,
    BuildFailure,
    Degenerate,
    FixtureError,
    MissingWitness,
    NoConvergence,
    OutOfRange,
    Unsupported,
    UnknownLetter,
    WordSyntaxError,
    WrongSignature,
)
from .export import PLANES, RasterSpec, heisenberg_array, project, read_cloud_csv, render_ppm, write_cloud
from .limitset import (
    OrbitConfig,
    classify_cloud,
    cyclic_demo,
    invariance_score,
    run,
)
from .presentation import (
    dehn_fill,
    gamma_evaluator,
    homology_obstruction,
    load_fixture,
    verify_morphism,
)
from .triangle import INF, TriangleSpec, build, discreteness_check, theta_unipotent

EXIT_USAGE, EXIT_NO_LOX, EXIT_VERIFY, EXIT_NO_CONV = 2, 3, 4, 5
PARSE_ERRORS = (FixtureError, FileNotFoundError, WordSyntaxError, UnknownLetter, MissingWitness, BuildFailure)


class Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# --- argument helpers ----------------------------------------------------

def order(text: str):
    if text.lower() in ("inf", "infinity", "oo"):
        return INF
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'inf', got {text!r}") from None
    if n < 2:
        raise argparse.ArgumentTypeError("orders must be >= 2")
    return n


def angle(text: str):
    if text.lower() == "unipotent":
        return "unipotent"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"theta must be a float or 'unipotent', got {text!r}") from None


def lagrangian_order(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 4:
        raise argparse.ArgumentTypeError("n must be >= 4")
    return n


def triangle_spec(p, q, r, theta) -> TriangleSpec:
    try:
        th = theta_unipotent(r) if theta == "unipotent" else theta
        return TriangleSpec(p, q, r, th)
    except (ValueError, OutOfRange) as exc:
        raise Failure(EXIT_USAGE, str(exc)) from exc


def realize(spec: TriangleSpec):
    try:
        return build(spec)
    except (Degenerate, WrongSignature) as exc:
        raise Failure(EXIT_USAGE, f"{type(exc).__name__}: {exc}") from exc


def fmt_c(z: complex, digits: int = 9) -> str:
    z = complex(z)
    if abs(z.imag) < 10 ** (-digits):
        return f"{z.real:.{digits}f}"
    return f"{z.real:.{digits}f}{z.imag:+.{digits}f}i"


def fmt_matrix(m: np.ndarray, indent: str = "    ") -> str:
    return "\n".join(indent + "  ".join(f"{fmt_c(v, 6):>22}" for v in row) for row in m)


def _tolerances(args):
    if args.tol is None:
        return DEFAULT
    return dataclasses.replace(DEFAULT, trace=args.tol, projective=args.tol)


# --- manifest ------------------------------------------------------------

def write_manifest(args, stem: str, outputs: list[Path], config: dict, fixture: str | None, started: float) -> Path:
    h = hashlib.sha256()
    for p in outputs:
        h.update(p.name.encode())
        h.update(p.read_bytes())
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": config,
        "fixture": fixture,
        "outputs": [str(p) for p in outputs],
        "content_sha256": h.hexdigest(),
        "wall_time_s": round(time.perf_counter() - started, 3),
        "version": __version__,
    }
    path = Path(args.out) / f"{stem}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# --- commands ------------------------------------------------------------

def cmd_triangle(args) -> int:
    spec = triangle_spec(args.p, args.q, args.r, args.theta)
    real = realize(spec)
    I1, I2, I3 = real.reflections
    print(f"triangle {spec.label()}")
    print(f"theta = {spec.theta:.12f}  (cos theta = {math.cos(spec.theta):.12f})")
    print("Gram matrix H:")
    print(fmt_matrix(real.gram.entries))
    print(f"det H = {np.linalg.det(real.gram.entries).real:.12g}")
    for name, m in (("I1", I1), ("I2", I2), ("I3", I3)):
        print(f"{name}:")
        print(fmt_matrix(m.matrix))
    for name, m in (("I1I2", I1 @ I2), ("I2I3", I2 @ I3), ("I3I1", I3 @ I1), ("I3I2I1I2", real.ijkj)):
        print(f"tr({name}) = {fmt_c(m.trace)}")
    try:
        verdict = "discrete and faithful" if discreteness_check(real) else "I3I2I1I2 elliptic: not covered"
    except Unsupported as exc:
        verdict = f"n/a ({exc})"
    print(f"discreteness: {verdict}")
    return 0


def orbit_config(args, symmetries=None) -> OrbitConfig:
    try:
        return _orbit_config(args, symmetries)
    except ValueError as exc:
        raise Failure(EXIT_USAGE, str(exc)) from exc


def _orbit_config(args, symmetries) -> OrbitConfig:
    return OrbitConfig(
        n1=args.n1,
        n2=args.n2,
        symmetries=symmetries,
        epsilon=args.epsilon,
        max_points=args.max_points,
        rounds=args.rounds,
        threads=args.threads,
    )


def limitset_outputs(args, stem: str, gens, cfg: OrbitConfig, fixture: str | None, started: float) -> int:
    cloud = run(gens, cfg)
    if cloud.no_loxodromic:
        raise Failure(EXIT_NO_LOX, "no loxodromic word up to length n1: nothing to seed")
    cls = classify_cloud(cloud)
    score = invariance_score(cloud, gens)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    csv = out / f"{stem}.csv"
    res = write_cloud(cloud, csv, "csv")
    files.append(csv)
    ply = out / f"{stem}.ply"
    write_cloud(cloud, ply, "ply")
    files.append(ply)
    h, _ = heisenberg_array(cloud.points)
    for plane in PLANES:
        img = out / f"{stem}_{plane}.ppm"
        img.write_bytes(render_ppm(project(h, plane), RasterSpec(args.size, args.size, plane)))
        files.append(img)
    config = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg) if f.name != "symmetries"}
    config["symmetries"] = "generators" if cfg.symmetries is None else f"{len(cfg.symmetries)} elements"
    manifest = write_manifest(args, stem, files, config, fixture, started)
    print(f"points: {len(cloud)} (seeds {cloud.seeds}, densified {cloud.densified}, pole-dropped {res.dropped})")
    print(f"invariance score: {score:.4f}")
    print(f"circle-fit residual: {cls.circle_residual:.6g}")
    print(f"coverage: {cls.coverage:.6g}")
    print(f"class: {cls.tag}")
    for f in files + [manifest]:
        print(f"wrote {f}")
    return 0


def cmd_limitset(args) -> int:
    started = time.perf_counter()
    fixture = None
    if args.cyclic_demo:
        gens, syms, stem = cyclic_demo(), None, "cyclic_demo"
    elif args.triangle:
        p, q, r, th = args.triangle
        try:
            spec = triangle_spec(order(p), order(q), order(r), angle(th))
        except argparse.ArgumentTypeError as exc:
            raise Failure(EXIT_USAGE, str(exc)) from exc
        real = realize(spec)
        gens = real.generators()
        syms = real.symmetries()
        stem = f"triangle_{p}_{q}_{r}_{th}"
    else:
        P, ms = load_fixture(args.fixture)
        if not ms:
            raise Failure(EXIT_USAGE, f"{args.fixture} has no morphism block")
        m = ms[args.morphism]
        ev = gamma_evaluator(P, m)
        gens = {g: ev(g) for g in P.generators}
        syms, fixture = None, args.fixture
        stem = f"{P.name}_{args.morphism}" if len(ms) > 1 else P.name
    return limitset_outputs(args, stem, gens, orbit_config(args, syms), fixture, started)


def cmd_verify(args) -> int:
    tol = _tolerances(args)
    refs = args.fixtures
    if args.all:
        from .presentation import fixture_paths

        refs = [str(p) for p in fixture_paths()]
    if not refs:
        raise Failure(EXIT_USAGE, "give at least one fixture or --all")
    reports = []
    for ref in refs:
        P, ms = load_fixture(ref)
        if not ms:
            if args.all:
                continue  # e.g. filled presentations kept for `homology`
            raise Failure(EXIT_USAGE, f"{ref} has no morphism block")
        for m in ms:
            rep = verify_morphism(P, m, tol)
            reports.append(rep)
            if not args.json:
                print(rep.format())
                print()
    if args.json:
        print(json.dumps([r.as_dict() for r in reports], indent=2, default=str))
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} morphisms verified", file=sys.stderr)
    return EXIT_VERIFY if failed else 0


def cmd_homology(args) -> int:
    P, _ = load_fixture(args.fixture)
    if args.fill:
        cusp, p, q = args.fill
        try:
            P = dehn_fill(P, cusp, p, q)
        except (BadSlope, IndexError) as exc:
            raise Failure(EXIT_USAGE, str(exc)) from exc
    ob = homology_obstruction(P, args.target)
    n = "inf" if args.target == INF else args.target
    print(f"presentation: {P.name}  relators: {', '.join(P.relators) or '-'}")
    print(f"H1 = {ob.source}")
    print(f"Lambda_2(3,3,{n})^ab = {ob.target}")
    print(ob.verdict)
    return 0


def cmd_lagrangian(args) -> int:
    from .lagrangian import lagrangian_solve

    started = time.perf_counter()
    try:
        sol = lagrangian_solve(args.n)
    except NoConvergence as exc:
        raise Failure(EXIT_NO_CONV, str(exc)) from exc
    print(f"n = {args.n}")
    print(f"t = tr(xy^-1) = {sol.t.real:.12f} {'+' if sol.t.imag >= 0 else '-'} {abs(sol.t.imag):.12f}i")
    print(f"residual |tr[x,y] - 3| = {sol.residual:.3e}")
    if args.limitset:
        gens = {"x": sol.X, "y": sol.Y}
        return limitset_outputs(args, f"lagrangian_{args.n}", gens, orbit_config(args), None, started)
    return 0


def cmd_export(args) -> int:
    started = time.perf_counter()
    try:
        z = read_cloud_csv(args.cloud)
    except (OSError, ValueError) as exc:
        raise Failure(EXIT_USAGE, f"cannot read {args.cloud}: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.cloud).stem
    files = []
    if args.format == "ply":
        path = out / f"{stem}.ply"
        write_cloud(z, path, "ply")
        files.append(path)
    else:
        h, _ = heisenberg_array(z)
        planes = PLANES if args.plane == "all" else [args.plane]
        for plane in planes:
            path = out / f"{stem}_{plane}.ppm"
            path.write_bytes(render_ppm(project(h, plane), RasterSpec(args.size, args.size, plane, point_radius=args.radius)))
            files.append(path)
    manifest = write_manifest(args, f"{stem}.export", files, {"format": args.format, "size": args.size}, None, started)
    for f in files + [manifest]:
        print(f"wrote {f}")
    return 0


# --- parser --------------------------------------------------------------

def _globals(parser: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--tol", type=float, default=d(None), help="trace/projective tolerance (default 1e-8)")
    g.add_argument("--threads", type=int, default=d(1), help="engine worker threads")
    g.add_argument("--out", default=d("out"), help="output directory")
    g.add_argument("--seed", type=int, default=d(0), help="reserved: the engine is deterministic")


def _orbit_flags(p: argparse.ArgumentParser):
    d = OrbitConfig()
    p.add_argument("--n1", type=int, default=d.n1, help="seed word length")
    p.add_argument("--n2", type=int, default=d.n2, help="densification word length")
    p.add_argument("--epsilon", type=float, default=d.epsilon, help="dedup scale (chord metric)")
    p.add_argument("--max-points", type=int, default=d.max_points)
    p.add_argument("--rounds", type=int, default=d.rounds)
    p.add_argument("--size", type=int, default=512, help="raster width = height")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crlimset", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _globals(ap, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("triangle", parents=[common], help="build Delta(p,q,r;theta) and report")
    p.add_argument("p", type=order)
    p.add_argument("q", type=order)
    p.add_argument("r", type=order)
    p.add_argument("theta", type=angle, help="radians or 'unipotent'")
    p.set_defaults(func=cmd_triangle)

    p = sub.add_parser("limitset", parents=[common], help="approximate and classify a limit set")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--triangle", nargs=4, metavar=("P", "Q", "R", "THETA"))
    src.add_argument("--cyclic-demo", action="store_true")
    src.add_argument("--fixture", help="presentation document; uses its morphism's image")
    p.add_argument("--morphism", type=int, default=0, help="index of the morphism block")
    _orbit_flags(p)
    p.set_defaults(func=cmd_limitset)

    p = sub.add_parser("verify", parents=[common], help="verify fixture morphisms")
    p.add_argument("fixtures", nargs="*")
    p.add_argument("--all", action="store_true", help="every shipped fixture")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("homology", parents=[common], help="homological obstruction")
    p.add_argument("fixture")
    p.add_argument("--fill", nargs=3, type=int, metavar=("CUSP", "P", "Q"))
    p.add_argument("--target", type=order, required=True)
    p.set_defaults(func=cmd_homology)

    p = sub.add_parser("lagrangian", parents=[common], help="solve for the unipotent-commutator pair")
    p.add_argument("n", type=lagrangian_order)
    p.add_argument("--limitset", action="store_true")
    _orbit_flags(p)
    p.set_defaults(func=cmd_lagrangian)

    p = sub.add_parser("export", parents=[common], help="render or convert a cloud CSV")
    p.add_argument("cloud")
    p.add_argument("--format", choices=("ppm", "ply"), default="ppm")
    p.add_argument("--plane", choices=sorted(PLANES) + ["all"], default="all")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--radius", type=int, default=0)
    p.set_defaults(func=cmd_export)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except PARSE_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
