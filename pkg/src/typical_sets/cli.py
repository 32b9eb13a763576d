"""Command-line entry point.

Exit codes: 0 on success, 2 when ``verify`` finds a violation, 1 for usage,
input or resource errors.  Every file written through ``--out`` gets a
``<out>.manifest.json`` next to it recording how to reproduce it.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import time
from contextlib import contextmanager
from fractions import Fraction

from . import __version__
from . import jsonio as io
from .arithmetic import (
    Polynomial,
    covering_bound,
    decay_threshold,
    dim_evidence,
    exp_partial_sums,
    polynomial_image,
    product_set,
    projection_identity_check,
    sum_set,
)
from .avoidance import Constraint, find_violation, generate, perturbation_trials, sample_typical, verify_certificate
from .category import avoid_construct, hits
from .dyadic import box_count_profile
from .errors import CapExceeded, GenerationError, MalformedScheme, WitnessSearchError
from .funcspace import FiberSet, avoid_shift, graph_hits_fiber
from .geom_core import EXACT, FLOAT, Pattern, hausdorff_distance

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: usage error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


# --------------------------------------------------------------------------
# helpers


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise io.MalformedDocument(f"{path}: not valid JSON ({e})") from e


class Run:
    """Collects outputs of one invocation for the manifest."""

    def __init__(self, args):
        self.args = args
        self.outputs = {}
        self.inputs = {}

    def read(self, path):
        self.inputs[path] = _sha256(path)
        return _read_json(path)

    def emit(self, text, out=None):
        out = out if out is not None else getattr(self.args, "out", None)
        if out is None:
            sys.stdout.write(text)
            return
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
        self.outputs[out] = _sha256(out)


def _points(doc):
    """A point set, or the configuration inside a certificate."""
    if isinstance(doc, dict) and "gamma" in doc:
        doc = doc["gamma"]
    return io.point_set_from_json(doc)


def _rational(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _angle(text):
    """A float, or a multiple of pi written like ``pi/3`` or ``2pi/3``."""
    t = text.replace(" ", "").replace("*", "")
    if "pi" in t:
        head, _, tail = t.partition("pi")
        num = Fraction(head) if head else Fraction(1)
        den = Fraction(tail[1:]) if tail.startswith("/") else Fraction(1)
        if tail and not tail.startswith("/"):
            raise argparse.ArgumentTypeError(f"bad angle {text!r}")
        return float(num / den) * math.pi
    try:
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad angle {text!r}")


def _levels(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}")


def _pattern(args, run):
    if getattr(args, "pattern_file", None):
        P = io.point_set_from_json(run.read(args.pattern_file))
        if len(P) != 3:
            raise UsageError("pattern file must hold exactly three points")
        return Pattern.of(*P.points)
    text = args.pattern
    if text == "equilateral":
        return Pattern.of((1, 0, 0), (0, 1, 0), (0, 0, 1))
    vals = [Fraction(t) for t in text.split(",")]
    if len(vals) != 3:
        raise UsageError("--pattern needs three comma-separated values or 'equilateral'")
    return Pattern.of(*[(v,) for v in vals])


def _constraint(args, run):
    kind = args.constraint
    if kind == "pattern":
        return Constraint.similar_to(_pattern(args, run))
    if kind == "angle":
        if args.theta is None:
            raise UsageError("--theta is required for the angle constraint")
        return Constraint.angle(args.theta)
    return Constraint.general_position()


def _csv(rows, header):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v)) for v in row))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(args, run):
    constraint = _constraint(args, run)
    cert = generate(
        args.level,
        args.dim,
        constraint,
        seed=args.seed,
        max_retries=args.max_retries,
        backend=FLOAT if args.float else EXACT,
        tau=args.tau,
        jobs=args.jobs,
    )
    run.emit(io.dumps(io.certificate_to_json(cert)))
    return EXIT_OK


def cmd_verify(args, run):
    doc = run.read(args.input)
    if isinstance(doc, dict) and "gamma" in doc:
        cert = io.certificate_from_json(doc)
        report = verify_certificate(cert, tol=args.tol, jobs=args.jobs)
        out = {
            "one_per_cube": report.one_per_cube,
            "interiority_failures": [[io.enc(c) for c in p] for p in report.interiority_failures],
        }
        violation, clean = report.violation, report.clean
        if args.perturb:
            pr = perturbation_trials(cert, trials=args.perturb, seed=args.seed)
            out["perturbation"] = {"trials": pr.trials, "violations": pr.violations}
            clean = clean and pr.violations == 0
    else:
        S = io.point_set_from_json(doc)
        violation = find_violation(S, _constraint(args, run), tol=args.tol, jobs=args.jobs)
        out, clean = {}, violation is None
    out["violation"] = None
    if violation is not None:
        out["violation"] = {
            "indices": list(violation.indices),
            "points": [[io.enc(c) for c in p] for p in violation.points],
            "gap": violation.gap,
        }
    out["clean"] = clean
    run.emit(io.dumps(out))
    if violation is not None:
        print("violating tuple: " + " ".join(
            "(" + ", ".join(str(c) for c in p) + ")" for p in violation.points), file=sys.stderr)
    return EXIT_OK if clean else EXIT_VIOLATION


def cmd_hausdorff(args, run):
    E = _points(run.read(args.a))
    F = _points(run.read(args.b))
    h = hausdorff_distance(E, F)
    text = repr(float(h)) if args.float or not E.exact else str(h)
    run.emit(text + "\n")
    return EXIT_OK


def cmd_hit_test(args, run):
    E = io.point_set_from_json(run.read(args.set))
    A = io.scheme_from_json(run.read(args.avoid))
    was_hit = hits(E, A)
    res = avoid_construct(E, A, args.level)
    run.emit(io.dumps(io.point_set_to_json(res.F)))
    summary = {
        "hit": was_hit,
        "eps_prime": str(res.eps_prime),
        "hausdorff_sq": str(res.hausdorff_sq),
        "distance_sq": None if res.distance_sq is None else str(res.distance_sq),
        "witness_cubes": sum(c.tag == "witness" for c in res.contributions),
    }
    print(io.dumps(summary), end="", file=sys.stderr if args.out is None else sys.stdout)
    return EXIT_OK


def cmd_dimension(args, run):
    E = _points(run.read(args.input))
    run.emit(_csv(box_count_profile(E, args.max_level), ["n", "count", "slope"]))
    return EXIT_OK


def cmd_arith(args, run):
    op = args.op
    if op == "cover":
        b = covering_bound(args.n, args.m, args.s)
        doc = {
            "log2": b.log2,
            "value": b.value,
            "decay_threshold": decay_threshold(args.m, args.s),
        }
        run.emit(io.dumps(doc))
        return EXIT_OK
    if op == "dim-evidence":
        prof = dim_evidence(args.n, args.m, args.max_level, seed=args.seed)
        rows = [(name, *row) for name in ("A", "sum", "product") for row in prof[name]]
        run.emit(_csv(rows, ["set", "n", "count", "slope"]))
        return EXIT_OK
    if args.input is None:
        raise UsageError(f"arith {op} needs --in")
    A = io.point_set_from_json(run.read(args.input))
    if op == "identity":
        chk = projection_identity_check(A, args.m)
        run.emit(io.dumps({"equal": chk.equal, "sumset": io.point_set_to_json(chk.sumset)}))
        return EXIT_OK
    if op == "sum":
        out = sum_set(A, args.m)
    elif op == "prod":
        out = product_set(A, args.m)
    elif op == "poly":
        if not args.coeffs:
            raise UsageError("arith poly needs --coeffs a0,a1,...")
        out = polynomial_image(Polynomial.parse(args.coeffs), A)
    else:  # exp
        out = exp_partial_sums(A, args.m)[-1].S
    run.emit(io.dumps(io.point_set_to_json(out)))
    return EXIT_OK


def _fiber(args, run):
    f = io.function_from_json(run.read(args.f))
    A = io.scheme_from_json(run.read(args.avoid))
    return f, FiberSet(args.x, A, args.window)


def cmd_func(args, run):
    f, F = _fiber(args, run)
    if args.op == "hit-test":
        run.emit(("true" if graph_hits_fiber(f, F) else "false") + "\n")
        return EXIT_OK
    if args.eps is None:
        raise UsageError("func avoid needs --eps")
    g, eps_p = avoid_shift(f, F, args.eps)
    run.emit(io.dumps(g.to_json()))
    summary = {"eps_prime": str(eps_p), "shift": str(g.values[0] - f.values[0])}
    print(io.dumps(summary), end="", file=sys.stderr if args.out is None else sys.stdout)
    return EXIT_OK


def cmd_sample_typical(args, run):
    constraint = None
    if args.constraint:
        constraint = _constraint(args, run)
    ts = sample_typical(args.dim, args.levels, seed=args.seed, constraint=constraint,
                        max_children=args.max_children)
    doc = {
        "levels": list(ts.levels),
        "stages": [io.point_set_to_json(S) for S in ts.stages],
        "radii": [str(r) for r in ts.radii],
        "distances_sq": [str(h.square) for h in ts.distances],
        "bounds_hold": ts.bounds_hold,
    }
    run.emit(io.dumps(doc))
    return EXIT_OK


@contextmanager
def _cwd(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def cmd_replay(args, run):
    man = _read_json(args.manifest)
    argv = list(man["argv"])
    recorded = man.get("outputs", {})
    if "--out" not in argv or not recorded:
        raise UsageError("manifest records no output file")
    k = argv.index("--out") + 1
    original = argv[k]
    with tempfile.TemporaryDirectory() as tmp:
        fresh = os.path.join(tmp, "replay.out")
        argv[k] = fresh
        with _cwd(man.get("cwd", os.getcwd())):
            for path, digest in man.get("inputs", {}).items():
                if _sha256(path) != digest:
                    print(f"input {path} changed since the manifest was written", file=sys.stderr)
                    return EXIT_VIOLATION
            code = _dispatch(argv, write_manifest=False)
        if code != man.get("exit_code", 0):
            print(f"replay exited {code}", file=sys.stderr)
            return EXIT_VIOLATION
        same = _sha256(fresh) == recorded[original]
    print("identical" if same else "DIFFERENT")
    return EXIT_OK if same else EXIT_VIOLATION


# --------------------------------------------------------------------------
# parser


def build_parser():
    p = Parser(prog="typical-sets", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def constraint_flags(sp, required):
        sp.add_argument("--constraint", choices=["pattern", "general-position", "angle"],
                        required=required, default=None if required else "general-position")
        sp.add_argument("--pattern", default="equilateral",
                        help="'equilateral' or three comma-separated reals on a line, e.g. 0,1,3")
        sp.add_argument("--pattern-file", help="point-set JSON with the three pattern points")
        sp.add_argument("--theta", type=_angle, help="angle in radians, or e.g. pi/3")

    g = sub.add_parser("generate", help="build a certified one-point-per-cube configuration")
    g.add_argument("--level", type=int, required=True)
    g.add_argument("--dim", type=int, required=True)
    constraint_flags(g, True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-retries", type=int, default=200)
    g.add_argument("--tau", type=float)
    g.add_argument("--float", action="store_true", help="use the float backend")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="re-check a certificate or a point set")
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--tol", type=float, default=0.0)
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--perturb", type=int, default=0, help="number of random perturbation trials")
    v.add_argument("--seed", type=int, default=0)
    constraint_flags(v, False)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    h = sub.add_parser("hausdorff", help="Hausdorff distance of two point sets")
    h.add_argument("a")
    h.add_argument("b")
    h.add_argument("--float", action="store_true")
    h.add_argument("--out")
    h.set_defaults(func=cmd_hausdorff)

    t = sub.add_parser("hit-test", help="replace E by a nearby set avoiding a nowhere-dense scheme")
    t.add_argument("--set", required=True)
    t.add_argument("--avoid", required=True)
    t.add_argument("--level", type=int, required=True)
    t.add_argument("--out")
    t.set_defaults(func=cmd_hit_test)

    d = sub.add_parser("dimension", help="box-counting profile as CSV")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--max-level", type=int, default=8)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dimension)

    a = sub.add_parser("arith", help="sumsets, product sets and related bounds")
    a.add_argument("op", choices=["sum", "prod", "poly", "exp", "identity", "cover", "dim-evidence"])
    a.add_argument("--in", dest="input")
    a.add_argument("--m", type=int, default=2)
    a.add_argument("--coeffs")
    a.add_argument("--n", type=int, default=2)
    a.add_argument("--s", type=float, default=1.0)
    a.add_argument("--max-level", type=int, default=8)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_arith)

    f = sub.add_parser("func", help="piecewise-linear functions against a fiber")
    f.add_argument("op", choices=["hit-test", "avoid"])
    f.add_argument("--f", required=True, help="PL function JSON")
    f.add_argument("--x", type=_rational, required=True)
    f.add_argument("--avoid", required=True, help="scheme JSON for the values above x")
    f.add_argument("--eps", type=_rational)
    f.add_argument("--window", type=_rational, default=Fraction(2))
    f.add_argument("--out")
    f.set_defaults(func=cmd_func)

    s = sub.add_parser("sample-typical", help="finite-stage approximants of a typical compact set")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--levels", type=_levels, required=True, help="increasing list, e.g. 1,2,3")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-children", type=int, default=3)
    s.add_argument("--constraint", choices=["pattern", "general-position", "angle"])
    s.add_argument("--pattern", default="equilateral")
    s.add_argument("--pattern-file")
    s.add_argument("--theta", type=_angle)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample_typical)

    r = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    r.add_argument("--manifest", required=True)
    r.set_defaults(func=cmd_replay)
    return p


def _manifest(args, run, argv, code, wall):
    flags = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in vars(args).items() if k != "func"}
    return {
        "command": args.command,
        "argv": list(argv),
        "cwd": os.getcwd(),
        "flags": flags,
        "seed": getattr(args, "seed", None),
        "backend": FLOAT if getattr(args, "float", False) else EXACT,
        "version": __version__,
        "wall_time_s": wall,
        "exit_code": code,
        "inputs": run.inputs,
        "outputs": run.outputs,
    }


def _dispatch(argv, write_manifest=True):
    args = build_parser().parse_args(argv)
    run = Run(args)
    t0 = time.perf_counter()
    try:
        code = args.func(args, run)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (io.MalformedDocument, MalformedScheme) as e:
        print(f"malformed input: {e}", file=sys.stderr)
        return EXIT_ERROR
    except CapExceeded as e:
        print(f"resource cap exceeded: {e}", file=sys.stderr)
        return EXIT_ERROR
    except GenerationError as e:
        print(f"generation failed: {e}", file=sys.stderr)
        return EXIT_ERROR
    except WitnessSearchError as e:
        print(f"witness search failed: {e}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as e:
        print(f"file not found: {e.filename}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, TypeError, KeyError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_ERROR
    wall = time.perf_counter() - t0
    if write_manifest and args.command != "replay":
        for out in run.outputs:
            with open(out + ".manifest.json", "w") as fh:
                fh.write(io.dumps(_manifest(args, run, argv, code, wall)))
    return code


def main(argv=None):
    try:
        return _dispatch(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
