"""Geometric primitives over exact rationals or doubles.

Coordinates are either all ``fractions.Fraction`` (the *exact* backend) or all
``float`` (the *float* backend).  Mixing the two raises ``BackendMismatch``.

Euclidean distances between rational points are generally irrational, so the
exact backend never takes square roots: a distance is a :class:`Root`, i.e. the
square root of an exact rational, and every comparison is done on squares.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce, total_ordering
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BackendMismatch,
    DegenerateInput,
    DimensionMismatch,
    EmptySetError,
)

EXACT = "exact"
FLOAT = "float"

FLOAT_TOL = 1e-9
ENCLOSURE_BITS = 104  # 2**-104 < 1e-30

Point = tuple


# --------------------------------------------------------------------------
# scalars


def to_scalar(value, backend=None):
    """Normalize one coordinate; ints and "p/q" strings become Fractions."""
    if isinstance(value, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(value, Fraction):
        out, kind = value, EXACT
    elif isinstance(value, int):
        out, kind = Fraction(value), EXACT
    elif isinstance(value, str):
        out, kind = Fraction(value), EXACT
    elif isinstance(value, (float, np.floating)):
        out, kind = float(value), FLOAT
    elif isinstance(value, np.integer):
        out, kind = Fraction(int(value)), EXACT
    else:
        raise TypeError(f"unsupported coordinate type {type(value).__name__}")
    if backend is not None and kind != backend:
        raise BackendMismatch(f"{kind} value {value!r} in a {backend} context")
    return out


def backend_of(coords: Iterable) -> str:
    kinds = {FLOAT if isinstance(c, float) else EXACT for c in coords}
    if len(kinds) > 1:
        raise BackendMismatch("mixed exact and float coordinates")
    return kinds.pop() if kinds else EXACT


def as_point(coords, backend=None) -> Point:
    pt = tuple(to_scalar(c) for c in coords)
    if not pt:
        raise DimensionMismatch("points need at least one coordinate")
    kind = backend_of(pt)
    if backend is not None and kind != backend:
        raise BackendMismatch(f"{kind} point in a {backend} context")
    return pt


def _same_backend(*points) -> str:
    return backend_of(c for p in points for c in p)


def _check_dims(*points) -> int:
    dims = {len(p) for p in points}
    if len(dims) != 1:
        raise DimensionMismatch(f"points of dimensions {sorted(dims)}")
    return dims.pop()


@total_ordering
@dataclass(frozen=True)
class Root:
    """The nonnegative real ``sqrt(square)`` for an exact rational ``square``."""

    square: Fraction

    def __post_init__(self):
        if self.square < 0:
            raise ValueError("Root of a negative number")

    def __float__(self):
        return math.sqrt(self.square)

    def __lt__(self, other):
        if not isinstance(other, Root):
            return NotImplemented
        return self.square < other.square

    def exact(self):
        """The value as a Fraction when ``square`` is a perfect rational square."""
        p, q = self.square.numerator, self.square.denominator
        rp, rq = math.isqrt(p), math.isqrt(q)
        if rp * rp == p and rq * rq == q:
            return Fraction(rp, rq)
        return None

    def enclosure(self, bits=ENCLOSURE_BITS):
        """Rational bounds ``lo <= sqrt(square) <= hi`` with ``hi - lo <= 2**-bits``."""
        scaled = self.square * (1 << (2 * bits))
        lo = math.isqrt(scaled.numerator // scaled.denominator)
        lo_f = Fraction(lo, 1 << bits)
        if lo_f * lo_f == self.square:
            return lo_f, lo_f
        return lo_f, Fraction(lo + 1, 1 << bits)

    def __str__(self):
        ex = self.exact()
        return str(ex) if ex is not None else f"sqrt({self.square})"


def root_sum_ge(a, b, c) -> bool:
    """Decide ``sqrt(a) + sqrt(b) >= sqrt(c)`` exactly for rationals a, b, c >= 0."""
    # sqrt(a)+sqrt(b) >= sqrt(c)  <=>  a+b-c >= -2 sqrt(ab)
    t = a + b - c
    if t >= 0:
        return True
    return t * t <= 4 * a * b


def numeric(x) -> float:
    return float(x)


# --------------------------------------------------------------------------
# point sets


def _dedupe_float(points, tol):
    seen = {}
    scale = 1.0 / tol
    for p in points:
        key = tuple(round(c * scale) for c in p)
        seen.setdefault(key, p)
    return list(seen.values())


@dataclass(frozen=True)
class FinitePointSet:
    """A finite set of points of a fixed dimension, stored in sorted order."""

    dim: int
    backend: str
    points: tuple

    @classmethod
    def of(cls, points, dim=None, backend=None, float_tol=1e-12):
        pts = [as_point(p, backend) for p in points]
        if dim is None:
            if not pts:
                raise EmptySetError("cannot infer dimension of an empty set")
            dim = len(pts[0])
        if dim < 1:
            raise DimensionMismatch("dimension must be >= 1")
        for p in pts:
            if len(p) != dim:
                raise DimensionMismatch(f"point {p} is not {dim}-dimensional")
        kind = backend_of(c for p in pts for c in p) if pts else (backend or EXACT)
        if backend is not None and kind != backend:
            raise BackendMismatch(f"{kind} points for a {backend} set")
        if kind == EXACT:
            uniq = set(pts)
        else:
            uniq = _dedupe_float(set(pts), float_tol)
        return cls(dim, kind, tuple(sorted(uniq)))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p):
        lookup = self.__dict__.get("_lookup")
        if lookup is None:
            lookup = self.__dict__["_lookup"] = frozenset(self.points)
        return tuple(p) in lookup

    @classmethod
    def _trusted(cls, dim, backend, points):
        """Skip validation for points already normalized and deduplicated."""
        return cls(dim, backend, tuple(sorted(points)))

    @classmethod
    def _trusted_sorted(cls, dim, backend, points):
        return cls(dim, backend, tuple(points))

    @property
    def exact(self):
        return self.backend == EXACT

    def as_array(self):
        return np.array([[float(c) for c in p] for p in self.points], dtype=float).reshape(
            len(self.points), self.dim
        )

    def union(self, other):
        _require_compatible(self, other)
        return FinitePointSet.of(self.points + other.points, self.dim, self.backend)

    def in_unit_cube(self):
        return all(0 <= c <= 1 for p in self.points for c in p)


def _require_compatible(E, F):
    if E.dim != F.dim:
        raise DimensionMismatch(f"dimensions {E.dim} and {F.dim}")
    if E.backend != F.backend and E.points and F.points:
        raise BackendMismatch(f"{E.backend} set against {F.backend} set")


def integerize(points):
    """Scale exact points to integer coordinates over one common denominator.

    Returns ``(int_points, D)`` with ``point[k] == int_point[k] / D``.
    """
    D = reduce(math.lcm, (c.denominator for p in points for c in p), 1)
    return [tuple(c.numerator * (D // c.denominator) for c in p) for p in points], D


# --------------------------------------------------------------------------
# distances


def squared_distance(a, b):
    _check_dims(a, b)
    return sum((x - y) * (x - y) for x, y in zip(a, b))


def euclidean_distance(a, b):
    """Euclidean distance; a :class:`Root` for exact points, a float otherwise."""
    a, b = as_point(a), as_point(b)
    _check_dims(a, b)
    if _same_backend(a, b) == EXACT:
        return Root(squared_distance(a, b))
    return math.dist(a, b)


def _directed_sq_int(X, Y):
    """max over x of min over y of |x-y|^2, for integer coordinate lists."""
    best = -1
    for x in X:
        m = None
        for y in Y:
            s = 0
            for u, v in zip(x, y):
                s += (u - v) * (u - v)
            if m is None or s < m:
                m = s
                if m <= best:
                    break
        if m > best:
            best = m
    return best


def _directed_sq_sorted(xs, ys):
    best = 0
    for x in xs:
        k = bisect_left(ys, x)
        m = min(abs(x - ys[j]) for j in (k - 1, k) if 0 <= j < len(ys))
        best = max(best, m * m)
    return best


def _int64_safe(ints, dim):
    bound = max((abs(c) for p in ints for c in p), default=0)
    return dim * (2 * bound + 1) ** 2 < 2**62


def hausdorff_distance(E: FinitePointSet, F: FinitePointSet):
    """Hausdorff distance between two nonempty finite sets.

    Exact sets give a :class:`Root` whose ``square`` is the exact squared value
    of the attained maximum; float sets give a float.
    """
    if not len(E) or not len(F):
        raise EmptySetError("Hausdorff distance needs nonempty sets")
    _require_compatible(E, F)
    if E.backend == FLOAT:
        A, B = E.as_array(), F.as_array()
        D = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))
        return float(max(D.min(axis=1).max(), D.min(axis=0).max()))
    ints, den = integerize(E.points + F.points)
    X, Y = ints[: len(E)], ints[len(E):]
    if E.dim == 1:
        xs, ys = sorted(p[0] for p in X), sorted(p[0] for p in Y)
        best = max(_directed_sq_sorted(xs, ys), _directed_sq_sorted(ys, xs))
    elif _int64_safe(ints, E.dim):
        A = np.array(X, dtype=np.int64)
        B = np.array(Y, dtype=np.int64)
        D2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(-1)
        best = int(max(D2.min(axis=1).max(), D2.min(axis=0).max()))
    else:
        best = max(_directed_sq_int(X, Y), _directed_sq_int(Y, X))
    return Root(Fraction(best, den * den))


def point_set_distance_sq(E: FinitePointSet, F: FinitePointSet):
    """Exact squared distance ``min |e - f|^2`` between two exact sets."""
    _require_compatible(E, F)
    ints, den = integerize(E.points + F.points)
    X, Y = ints[: len(E)], ints[len(E):]
    best = min(sum((u - v) ** 2 for u, v in zip(x, y)) for x in X for y in Y)
    return Fraction(best, den * den)


# --------------------------------------------------------------------------
# triangles and similarity


def _three_distinct(a, b, c):
    pts = [as_point(p) for p in (a, b, c)]
    _check_dims(*pts)
    backend = _same_backend(*pts)
    return pts, backend


def _side_squares(a, b, c):
    return [squared_distance(b, c), squared_distance(a, c), squared_distance(a, b)]


def ratio_set(a, b, c):
    """The ratio set ``{|x_i - x_k| / |x_j - x_k|}`` over distinct i, j, k.

    Exact points give a frozenset of :class:`Root`; float points give a
    frozenset of floats with values closer than ``FLOAT_TOL`` merged.
    """
    pts, backend = _three_distinct(a, b, c)
    if len(set(pts)) < 3 or (backend == FLOAT and min(_side_squares(*pts)) == 0):
        raise DegenerateInput("ratio set needs three distinct points")
    sq = {}
    for i, j in combinations(range(3), 2):
        sq[i, j] = sq[j, i] = squared_distance(pts[i], pts[j])
    ratios = []
    for i, j, k in permutations(range(3)):
        if backend == EXACT:
            ratios.append(Root(sq[i, k] / sq[j, k]))
        else:
            ratios.append(math.sqrt(sq[i, k] / sq[j, k]))
    if backend == EXACT:
        return frozenset(ratios)
    merged = []
    for r in sorted(ratios):
        if not merged or r - merged[-1] > FLOAT_TOL * max(1.0, r):
            merged.append(r)
    return frozenset(merged)


@dataclass(frozen=True)
class SimilaritySignature:
    """Sorted side lengths divided by the largest one.

    ``squares`` holds the squared normalized sides ``(q1, q2, 1)`` with
    ``q1 <= q2 <= 1``; under the exact backend these are Fractions and two
    triangles are similar exactly when their ``squares`` agree.
    """

    squares: tuple
    backend: str
    degenerate: bool = False

    @property
    def sides(self):
        if self.backend == EXACT:
            return tuple(Root(q) for q in self.squares)
        return tuple(math.sqrt(q) for q in self.squares)

    def as_floats(self):
        return tuple(float(s) for s in self.sides)

    def matches(self, other, tol=FLOAT_TOL):
        if self.degenerate or other.degenerate:
            return False
        if self.backend == EXACT and other.backend == EXACT:
            return self.squares == other.squares
        return signature_distance(self, other) <= tol


def similarity_signature(a, b, c) -> SimilaritySignature:
    pts, backend = _three_distinct(a, b, c)
    sq = sorted(_side_squares(*pts))
    if sq[2] == 0:
        raise DegenerateInput("all three points coincide")
    degenerate = sq[0] == 0
    if backend == EXACT:
        squares = tuple(s / sq[2] for s in sq)
    else:
        squares = tuple(float(s / sq[2]) for s in sq)
    return SimilaritySignature(squares, backend, degenerate)


def _sqrt_diff(p, q):
    """|sqrt(p) - sqrt(q)| as a float that is zero exactly when p == q."""
    if p == q:
        return 0.0
    return abs(float(p - q)) / (math.sqrt(p) + math.sqrt(q))


def signature_distance(s: SimilaritySignature, t: SimilaritySignature) -> float:
    """L-infinity distance between the normalized side vectors."""
    if s.backend == EXACT and t.backend == EXACT:
        return max(_sqrt_diff(p, q) for p, q in zip(s.squares, t.squares))
    return max(abs(x - y) for x, y in zip(s.as_floats(), t.as_floats()))


@dataclass(frozen=True)
class Pattern:
    """Three pairwise-distinct points; any dimension, any backend."""

    points: tuple
    signature: SimilaritySignature

    @classmethod
    def of(cls, a, b, c):
        pts, _ = _three_distinct(a, b, c)
        sig = similarity_signature(*pts)
        if sig.degenerate:
            raise DegenerateInput("pattern points must be pairwise distinct")
        return cls(tuple(pts), sig)

    @property
    def backend(self):
        return self.signature.backend

    @property
    def r_min(self) -> float:
        """Smallest pairwise distance over the largest."""
        return float(self.signature.sides[0])

    @property
    def dim(self):
        return len(self.points[0])


def similarity_gap(a, b, c, P: Pattern) -> float:
    sig = similarity_signature(a, b, c)
    if sig.degenerate:
        raise DegenerateInput("coincident points have no similarity gap")
    return signature_distance(sig, P.signature)


def is_similar(a, b, c, P: Pattern, tol=FLOAT_TOL) -> bool:
    sig = similarity_signature(a, b, c)
    return sig.matches(P.signature, tol)


# --------------------------------------------------------------------------
# affine dependence


def bareiss_det(M) -> int:
    """Determinant of a square integer matrix by fraction-free elimination."""
    M = [list(row) for row in M]
    n = len(M)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for r in range(k + 1, n):
                if M[r][k] != 0:
                    M[k], M[r] = M[r], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def exact_det(rows) -> Fraction:
    ints, D = integerize(rows)
    return Fraction(bareiss_det(ints), D ** len(rows))


@dataclass(frozen=True)
class AffineMargin:
    independent: bool
    det: object
    margin: float


def affine_dependence_margin(pts: Sequence) -> AffineMargin:
    """Verdict and margin for ``d+1`` points in dimension ``d``.

    The verdict comes from the determinant of the difference matrix (exact
    under the exact backend); the margin is that matrix's smallest singular
    value in floating point, forced to 0 when the verdict is "dependent".
    """
    pts = [as_point(p) for p in pts]
    d = _check_dims(*pts)
    if len(pts) != d + 1:
        raise ValueError(f"need exactly {d + 1} points in dimension {d}, got {len(pts)}")
    backend = _same_backend(*pts)
    base = pts[0]
    rows = [tuple(x - y for x, y in zip(p, base)) for p in pts[1:]]
    M = np.array([[float(c) for c in r] for r in rows], dtype=float)
    sigma = float(np.linalg.svd(M, compute_uv=False).min())
    if backend == EXACT:
        det = exact_det(rows)
        independent = det != 0
    else:
        det = float(np.linalg.det(M))
        independent = sigma > FLOAT_TOL
    return AffineMargin(independent, det, sigma if independent else 0.0)


# --------------------------------------------------------------------------
# angles


def angle_at(x, y, z) -> float:
    """Angle at ``x`` between the arms ``y - x`` and ``z - x``, in [0, pi]."""
    x, y, z = (as_point(p) for p in (x, y, z))
    _check_dims(x, y, z)
    u = [b - a for a, b in zip(x, y)]
    v = [b - a for a, b in zip(x, z)]
    uu = sum(t * t for t in u)
    vv = sum(t * t for t in v)
    if uu == 0 or vv == 0:
        raise DegenerateInput("zero-length arm")
    uv = sum(s * t for s, t in zip(u, v))
    cos = float(uv) / math.sqrt(float(uu) * float(vv))
    return math.acos(min(1.0, max(-1.0, cos)))


def angle_gap(x, y, z, theta) -> float:
    return abs(angle_at(x, y, z) - theta)


def triple_angle_gap(a, b, c, theta) -> float:
    """Smallest angle gap over the three choices of vertex."""
    return min(angle_gap(a, b, c, theta), angle_gap(b, a, c, theta), angle_gap(c, a, b, theta))
