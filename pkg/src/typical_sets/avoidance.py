"""One-point-per-cube configurations that avoid a constraint, with margins.

A level-n configuration puts one point in each of the ``2^(nd)`` dyadic
cubes.  Points are drawn at random from the concentric half-size sub-cube and
kept only when every new tuple clears the acceptance threshold, which is a
rejection sampler for an event of probability one.  Once all cubes are
filled, :func:`compute_margin` returns a radius ``eps`` such that

* interiority: the ball of radius ``eps`` around each point stays inside its
  cube, and
* separation: no tuple drawn from distinct balls (see ``cross_ball_kinds``) can violate
  the constraint, whatever the perturbation inside the balls.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from . import _kernels as K
from .dyadic import ENUMERATION_CAP, DyadicCube, cube_of_point, cubes_at_level, grid_points
from .errors import CapExceeded, DegenerateInput, GenerationError
from .geom_core import (
    EXACT,
    FLOAT,
    FinitePointSet,
    Pattern,
    Root,
    bareiss_det,
    hausdorff_distance,
    integerize,
    signature_distance,
    similarity_signature,
    triple_angle_gap,
)

INTERIORITY_ETA = Fraction(1, 64)
TAU_FACTOR = 1e-3
SAMPLE_BITS = 40
ANGLE_VIOLATION_TOL = 1e-12


@dataclass(frozen=True)
class Constraint:
    kind: str
    pattern: Pattern | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in ("pattern", "general_position", "angle"):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "pattern" and self.pattern is None:
            raise ValueError("pattern constraint needs a Pattern")
        if self.kind == "angle" and not (self.theta is not None and 0 <= self.theta < math.pi):
            raise ValueError("angle must lie in [0, pi)")

    @classmethod
    def similar_to(cls, *points):
        P = points[0] if len(points) == 1 and isinstance(points[0], Pattern) else Pattern.of(*points)
        return cls("pattern", pattern=P)

    @classmethod
    def general_position(cls):
        return cls("general_position")

    @classmethod
    def angle(cls, theta):
        return cls("angle", theta=float(theta))

    def arity(self, d):
        return d + 1 if self.kind == "general_position" else 3

    def check_dim(self, d):
        if self.kind != "pattern" and d < 2:
            raise ValueError(f"{self.kind} constraint needs dimension >= 2")

    def scanner(self, points, backend):
        if self.kind == "pattern":
            sig = self.pattern.signature
            squares = sig.squares if sig.backend == EXACT else None
            return K.TupleScanner(points, backend, "pattern", psig=sig.as_floats(), psquares=squares)
        if self.kind == "angle":
            return K.TupleScanner(points, backend, "angle", theta=self.theta)
        return K.TupleScanner(points, backend, "general_position")

    def to_json(self):
        if self.kind == "pattern":
            return {"kind": "pattern", "pattern": [[_enc(c) for c in p] for p in self.pattern.points]}
        if self.kind == "angle":
            return {"kind": "angle", "theta": self.theta}
        return {"kind": "general_position"}

    @classmethod
    def from_json(cls, obj):
        kind = obj["kind"].replace("-", "_")
        if kind == "pattern":
            return cls.similar_to(*[[_dec(c) for c in p] for p in obj["pattern"]])
        if kind == "angle":
            return cls.angle(obj["theta"])
        return cls.general_position()


def _enc(c):
    return str(c) if isinstance(c, Fraction) else c


def _dec(c):
    return Fraction(c) if isinstance(c, (str, int)) else float(c)


# --------------------------------------------------------------------------
# exhaustive scan


@dataclass(frozen=True)
class Violation:
    indices: tuple
    points: tuple
    gap: float


def _scan_worker(args):
    points, backend, constraint, firsts = args
    return constraint.scanner(points, backend).scan_first(firsts)


def min_tuple_gap(S: FinitePointSet, constraint: Constraint, jobs=1, cap=K.TUPLE_CAP):
    """Smallest constraint gap over all arity-subsets of ``S`` and its tuple."""
    k = constraint.arity(S.dim)
    N = len(S)
    if N < k:
        return math.inf, None
    if comb(N, k) > cap:
        raise CapExceeded(f"{k}-tuples of {N} points", comb(N, k), cap)
    firsts = list(range(N - k + 1))
    if jobs <= 1:
        return constraint.scanner(S.points, S.backend).scan_first(firsts)
    parts = [firsts[w::jobs] for w in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_scan_worker, [(S.points, S.backend, constraint, p) for p in parts]))
    return min(results, key=lambda r: (r[0], r[1] or ()))


def find_violation(S: FinitePointSet, constraint: Constraint, tol=0.0, jobs=1):
    """Exhaustively look for a tuple of ``S`` violating ``constraint``.

    Returns the minimum-gap tuple when its gap is ``<= tol``, else None.  With
    the exact backend and ``tol=0`` this means literal similarity or affine
    dependence; angles are decided in floating point.
    """
    constraint.check_dim(S.dim)
    gap, row = min_tuple_gap(S, constraint, jobs=jobs)
    if row is None or gap > tol:
        return None
    return Violation(row, tuple(S.points[i] for i in row), gap)


# --------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class AvoidanceCertificate:
    level: int
    dim: int
    gamma: FinitePointSet
    margin: object
    constraint: Constraint
    min_pair_gap: float
    min_tuple_gap: float
    terms: dict = field(default_factory=dict)
    tau: float | None = None
    seed: int | None = None
    flags: tuple = ()

    @property
    def cubes(self):
        return [cube_of_point(p, self.level) for p in self.gamma.points]


@dataclass(frozen=True)
class Margin:
    eps: object
    boundary: object
    min_pair_gap: float
    min_tuple_gap: float
    terms: dict


def compute_margin(gamma: FinitePointSet, constraint: Constraint, n, eta=INTERIORITY_ETA, jobs=1):
    """Radius ``eps`` giving interiority and separation for a complete configuration.

    Terms (the result is ``(1 - eta)`` times their minimum):

    * ``boundary``: smallest distance from a point to its cube's boundary;
    * pattern: ``g * delta / 8`` and ``delta * r / (2 + 2r)``, with ``g`` the
      smallest signature gap, ``delta`` the smallest pairwise distance and
      ``r`` the pattern's shortest-to-longest side ratio;
    * general position: ``sigma / (2 sqrt(d))`` with ``sigma`` the smallest
      singular value over all (d+1)-subsets;
    * angle: ``g * delta / 8``.
    """
    d = gamma.dim
    boundary = min(cube_of_point(p, n).boundary_distance(p) for p in gamma.points)
    g, _ = min_tuple_gap(gamma, constraint, jobs=jobs)
    if g <= 0:
        raise DegenerateInput("configuration violates its constraint; no margin exists")
    X = gamma.as_array()
    if len(X) > 1:
        D2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
        np.fill_diagonal(D2, np.inf)
        delta = float(np.sqrt(D2.min()))
    else:
        delta = math.inf
    terms = {"boundary": float(boundary)}
    if math.isfinite(g):
        if constraint.kind == "pattern":
            r = constraint.pattern.r_min
            terms["signature"] = g * delta / 8
            terms["collapse"] = delta * r / (2 + 2 * r)
        elif constraint.kind == "angle":
            terms["angle"] = g * delta / 8
        else:
            terms["singular"] = g / (2 * math.sqrt(d))
    others = [v for k, v in terms.items() if k != "boundary"]
    if gamma.backend == EXACT:
        eps = boundary
        if others:
            eps = min(eps, Fraction(min(others)))
        eps = eps * (1 - eta)
    else:
        eps = min([float(boundary)] + others) * (1 - float(eta))
    return Margin(eps, boundary, delta, g, terms)


def default_tau(constraint, n, d):
    """Acceptance threshold for new tuple gaps.

    Pattern loci are finite point sets, so ``1e-3 * 2^-n`` suffices.  For general
    position and angles each earlier tuple forbids a hypersurface, and about
    ``N^(d-1)`` of them cross every cube, so the threshold shrinks by that factor.
    """
    tau = TAU_FACTOR * 2.0**-n
    if constraint.kind != "pattern":
        tau *= 2.0 ** (-n * d * (d - 1))
    return tau


def _float_gaps(constraint, X, T):
    if constraint.kind == "pattern":
        return K.pattern_gaps(X, T, constraint.pattern.signature.as_floats())[0]
    if constraint.kind == "angle":
        return K.angle_gaps(X, T, constraint.theta)
    return K.gp_gaps(X, T)[0]


def _sample_point(rng, cube: DyadicCube, bits, backend):
    n = cube.level
    u = rng.integers(0, 1 << bits, size=cube.dim)
    den = 1 << (n + bits + 1)
    coords = [
        Fraction((i << (bits + 1)) + (1 << (bits - 1)) + int(v), den) for i, v in zip(cube.index, u)
    ]
    if backend == FLOAT:
        return tuple(float(c) for c in coords)
    return tuple(coords)


def generate(n, d, constraint: Constraint, seed=0, max_retries=200, backend=EXACT,
             tau=None, cap=ENUMERATION_CAP, eta=INTERIORITY_ETA, jobs=1):
    """Build and certify a level-n configuration avoiding ``constraint``.

    Cubes are filled in lexicographic order; each candidate is uniform (on a
    2^-40 lattice) in the middle half of its cube and accepted when every new
    tuple has gap above ``tau`` (default ``1e-3 * 2^-n``).
    """
    if max_retries < 1:
        raise ValueError("max_retries must be >= 1")
    constraint.check_dim(d)
    cubes = cubes_at_level(n, d, cap)
    k = constraint.arity(d)
    if len(cubes) >= k and comb(len(cubes), k) > K.TUPLE_CAP:
        raise CapExceeded(f"{k}-tuples at level {n}", comb(len(cubes), k), K.TUPLE_CAP)
    bits = min(SAMPLE_BITS, 51 - n)
    if bits < 8:
        raise CapExceeded("coordinate precision", n, 43)
    if tau is None:
        tau = default_tau(constraint, n, d)
    rng = np.random.default_rng(seed)
    X = np.zeros((len(cubes), d))
    chosen = []
    for m, cube in enumerate(cubes):
        best = -math.inf
        for _ in range(max_retries):
            p = _sample_point(rng, cube, bits, backend)
            X[m] = [float(c) for c in p]
            if m + 1 < k:
                worst = math.inf
            else:
                worst = float(_float_gaps(constraint, X, K.tuples_with_last(m, k)).min())
            if worst > tau:
                chosen.append(p)
                break
            best = max(best, worst)
        else:
            raise GenerationError(
                f"no admissible point in cube {cube.index} after {max_retries} tries "
                f"(best gap {best:.3g}, threshold {tau:.3g})",
                cube=cube,
                worst_gap=best,
            )
    gamma = FinitePointSet.of(chosen, d, backend)
    margin = compute_margin(gamma, constraint, n, eta=eta, jobs=jobs)
    flags = ("small-margin",) if float(margin.eps) < 2.0 ** (-n - 8) else ()
    return AvoidanceCertificate(
        level=n,
        dim=d,
        gamma=gamma,
        margin=margin.eps,
        constraint=constraint,
        min_pair_gap=margin.min_pair_gap,
        min_tuple_gap=margin.min_tuple_gap,
        terms=margin.terms,
        tau=tau,
        seed=seed,
        flags=flags,
    )


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerifyReport:
    one_per_cube: bool
    interiority_failures: tuple
    violation: Violation | None

    @property
    def clean(self):
        return self.one_per_cube and not self.interiority_failures and self.violation is None


def check_interiority(cert: AvoidanceCertificate):
    """Cubes whose point is not at distance > eps from the cube boundary."""
    bad = []
    for p in cert.gamma.points:
        try:
            cube = cube_of_point(p, cert.level)
        except ValueError:
            bad.append(p)
            continue
        if not cube.boundary_distance(p) > cert.margin:
            bad.append(p)
    return tuple(bad)


def check_one_per_cube(cert: AvoidanceCertificate):
    if len(cert.gamma) != 1 << (cert.level * cert.dim):
        return False
    try:
        idx = {cube_of_point(p, cert.level).index for p in cert.gamma.points}
    except ValueError:
        return False
    return len(idx) == len(cert.gamma)


def verify_certificate(cert: AvoidanceCertificate, tol=0.0, jobs=1) -> VerifyReport:
    return VerifyReport(
        check_one_per_cube(cert),
        check_interiority(cert),
        find_violation(cert.gamma, cert.constraint, tol=tol, jobs=jobs),
    )


# --------------------------------------------------------------------------
# perturbation trials (spot checks of separation)


def _ball_offset(rng, d, eps, exact):
    v = rng.normal(size=d)
    v /= np.linalg.norm(v)
    v *= rng.random() ** (1.0 / d)
    if not exact:
        return tuple(float(eps) * v)
    off = [Fraction(float(t)) for t in v]
    while sum(t * t for t in off) > 1:
        off = [t * (1 - Fraction(1, 1 << 30)) for t in off]
    return tuple(t * eps for t in off)


def cross_ball_kinds(constraint):
    """Which tuple shapes separation forbids: 'distinct' (all balls different) and,
    for patterns only, 'pair' (two points sharing one ball)."""
    return ("distinct", "pair") if constraint.kind == "pattern" else ("distinct",)


def _tuple_violates(points, constraint, exact):
    if constraint.kind == "pattern":
        sig = similarity_signature(*points)
        if sig.degenerate:
            return False, math.inf
        if exact and constraint.pattern.backend == EXACT:
            return sig.squares == constraint.pattern.signature.squares, _gap(sig, constraint)
        g = _gap(sig, constraint)
        return g == 0, g
    if constraint.kind == "angle":
        g = triple_angle_gap(*points, constraint.theta)
        return g <= ANGLE_VIOLATION_TOL, g
    base = points[0]
    rows = [tuple(x - y for x, y in zip(p, base)) for p in points[1:]]
    sigma = float(np.linalg.svd(np.array(rows, dtype=float), compute_uv=False).min())
    if exact:
        ints, _ = integerize(rows)
        return bareiss_det(ints) == 0, sigma
    return sigma == 0, sigma


def _gap(sig, constraint):
    return signature_distance(sig, constraint.pattern.signature)


@dataclass(frozen=True)
class PerturbationReport:
    trials: int
    violations: int
    min_gap: float
    first_violation: tuple | None


def perturbation_trials(cert: AvoidanceCertificate, trials=10_000, seed=0) -> PerturbationReport:
    """Perturb random cross-ball tuples within ``eps`` and re-test the constraint exactly."""
    rng = np.random.default_rng(seed)
    pts = cert.gamma.points
    N, d = len(pts), cert.dim
    k = cert.constraint.arity(d)
    exact = cert.gamma.backend == EXACT
    kinds = cross_ball_kinds(cert.constraint)
    eps = cert.margin
    if N < 2 or (N < k and "pair" not in kinds):
        return PerturbationReport(0, 0, math.inf, None)
    bad, first, min_gap = 0, None, math.inf
    done = 0
    for _ in range(trials):
        kind = kinds[int(rng.integers(len(kinds)))]
        if kind == "distinct" and N < k:
            kind = "pair"
        if kind == "distinct":
            idx = [int(i) for i in rng.choice(N, size=k, replace=False)]
        else:
            i, j = (int(t) for t in rng.choice(N, size=2, replace=False))
            idx = [i, i, j]
        tup = []
        for i in idx:
            off = _ball_offset(rng, d, eps, exact)
            tup.append(tuple(c + o for c, o in zip(pts[i], off)))
        done += 1
        violated, g = _tuple_violates(tup, cert.constraint, exact)
        min_gap = min(min_gap, g)
        if violated:
            bad += 1
            if first is None:
                first = tuple(tup)
    return PerturbationReport(done, bad, min_gap, first)


# --------------------------------------------------------------------------
# measure-zero statistics for the completion set


@dataclass(frozen=True)
class CompletionStats:
    samples: int
    exact_similar: int
    near_fraction: float
    threshold: float


def completion_statistics(P: Pattern, d=2, samples=100_000, seed=0, threshold=1e-3, a=None, b=None):
    """Fix two points a, b and test uniform third points x for {a, b, x} ~ P.

    Counts exact similarity events (all points are exact dyadic rationals) and
    the fraction of x whose signature gap falls below ``threshold``.
    """
    rng = np.random.default_rng(seed)
    den = 1 << SAMPLE_BITS

    def draw(size):
        return [tuple(Fraction(int(v), den) for v in row) for row in rng.integers(0, den, size=(size, d))]

    if a is None or b is None:
        a, b = draw(2)
        while a == b:
            (b,) = draw(1)
    xs = draw(samples)
    pts = [tuple(a), tuple(b)] + xs
    sig = P.signature
    scan = K.TupleScanner(pts, EXACT, "pattern", psig=sig.as_floats(),
                          psquares=sig.squares if sig.backend == EXACT else None)
    T = np.column_stack([np.zeros(samples, dtype=np.int64), np.ones(samples, dtype=np.int64),
                         np.arange(2, samples + 2, dtype=np.int64)])
    keep = np.array([x != tuple(a) and x != tuple(b) for x in xs])
    g = scan.gaps(T[keep])
    return CompletionStats(int(keep.sum()), int((g == 0).sum()), float((g < threshold).mean()), threshold)


# --------------------------------------------------------------------------
# finite-stage approximants of a typical set


def stage_radius(n) -> Fraction:
    return Fraction(1, 1 << (n * n))


@dataclass(frozen=True)
class TypicalSample:
    levels: tuple
    stages: tuple
    radii: tuple
    distances: tuple

    @property
    def bounds_hold(self):
        return all(dist.square <= r * r for dist, r in zip(self.distances, self.radii))


def sample_typical(d, levels, seed=0, constraint=None, max_children=3, cap=ENUMERATION_CAP):
    """Random finite-stage approximants ``F_1, ..., F_K`` of a typical compact set.

    ``F_1`` is a random nonempty subset of the level-``n_1`` skeleton (a
    certified configuration when ``constraint`` is given, the dyadic grid
    otherwise).  Each later stage replaces every point by 1..max_children
    points within ``2^-(n_k^2)`` of it, clipped to the unit cube; the
    Hausdorff distance between consecutive stages is measured exactly.
    """
    levels = tuple(int(n) for n in levels)
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be a nonempty increasing sequence")
    rng = np.random.default_rng(seed)
    if constraint is not None:
        skeleton = generate(levels[0], d, constraint, seed=seed, cap=cap).gamma.points
    else:
        skeleton = grid_points(levels[0], d, cap).points
    for _ in range(100):
        mask = rng.random(len(skeleton)) < 0.5
        if mask.any():
            break
    else:
        raise GenerationError("empty first-stage selection")
    F = FinitePointSet.of([p for p, keep in zip(skeleton, mask) if keep], d, EXACT)
    stages, radii, dists = [F], [], []
    c = math.isqrt(d - 1) + 1  # ceil(sqrt(d))
    bits = 30
    for n in levels[:-1]:
        r = stage_radius(n)
        children = []
        for p in F.points:
            for _ in range(int(rng.integers(1, max_children + 1))):
                u = rng.integers(-(1 << bits), (1 << bits) + 1, size=d)
                q = tuple(
                    min(Fraction(1), max(Fraction(0), x + r * Fraction(int(v), (1 << bits) * c)))
                    for x, v in zip(p, u)
                )
                children.append(q)
        if len(children) > cap:
            raise CapExceeded("typical-sample stage", len(children), cap)
        G = FinitePointSet.of(children, d, EXACT)
        dists.append(hausdorff_distance(F, G))
        radii.append(r)
        stages.append(G)
        F = G
    return TypicalSample(levels, tuple(stages), tuple(radii), tuple(dists))
