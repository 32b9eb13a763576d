"""Nowhere-dense sets and compact sets that avoid them.

Two representations of a nowhere-dense ``A`` in [0,1]^d are supported:

* ``finite``: a finite exact point set;
* ``dyadic``: the union of selected closed level-m dyadic cubes, read as the
  depth-m stage of a pruned dyadic tree.

:func:`avoid_construct` takes a finite ``E`` and returns ``F`` with
``d_H(E, F) <= 2^-n sqrt(d)`` whose ``eps'``-neighbourhood misses ``A``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .dyadic import ENUMERATION_CAP, DyadicCube, check_cap, cube_indices_of_point, cubes_meeting_set
from .errors import DimensionMismatch, MalformedScheme, WitnessSearchError
from .geom_core import EXACT, FinitePointSet, hausdorff_distance, point_set_distance_sq

MAX_EXTRA_DEPTH = 64


@dataclass(frozen=True)
class NowhereDenseScheme:
    kind: str
    dim: int
    points: FinitePointSet | None = None
    depth: int | None = None
    selected: frozenset = frozenset()

    @classmethod
    def finite(cls, points, dim=None):
        E = points if isinstance(points, FinitePointSet) else FinitePointSet.of(points, dim, EXACT)
        if not E.exact:
            raise MalformedScheme("finite schemes need exact coordinates")
        return cls("finite", E.dim, points=E)

    @classmethod
    def dyadic(cls, depth, selected, dim):
        sel = frozenset(tuple(int(i) for i in idx) for idx in selected)
        scheme = cls("dyadic", dim, depth=depth, selected=sel)
        scheme.validate()
        return scheme

    def validate(self):
        if self.kind == "finite":
            if self.points is None:
                raise MalformedScheme("finite scheme without points")
            return
        if self.kind != "dyadic":
            raise MalformedScheme(f"unknown scheme kind {self.kind!r}")
        if self.depth is None or self.depth < 0:
            raise MalformedScheme("dyadic scheme needs depth >= 0")
        top = 1 << self.depth
        for idx in self.selected:
            if len(idx) != self.dim or any(not 0 <= i < top for i in idx):
                raise MalformedScheme(f"selected index {idx} invalid at depth {self.depth}")

    # dyadic bookkeeping ------------------------------------------------

    def _counts(self, level):
        cache = self.__dict__.setdefault("_count_cache", {})
        if level not in cache:
            shift = self.depth - level
            cache[level] = Counter(tuple(i >> shift for i in idx) for idx in self.selected)
        return cache[level]

    def selected_below(self, cube: DyadicCube) -> int:
        """Number of selected depth-m cubes inside ``cube`` (level <= depth)."""
        return self._counts(cube.level)[cube.index]

    def interior_free(self, cube: DyadicCube) -> bool:
        """True when no point of A lies in the open interior of ``cube``."""
        if self.kind == "finite":
            return not any(cube.contains_interior(p) for p in self.points.points)
        if cube.level >= self.depth:
            return cube.ancestor(self.depth).index not in self.selected
        return self.selected_below(cube) == 0

    def meets_closed(self, cube: DyadicCube) -> bool:
        """Does A intersect the closed cube?"""
        if self.kind == "finite":
            return any(cube.contains(p) for p in self.points.points)
        n, m = cube.level, self.depth
        for idx in self.selected:
            if all(
                Fraction(j, 1 << m) <= Fraction(i + 1, 1 << n) and Fraction(j + 1, 1 << m) >= Fraction(i, 1 << n)
                for i, j in zip(cube.index, idx)
            ):
                return True
        return False

    def contains_point(self, p) -> bool:
        if len(p) != self.dim:
            raise DimensionMismatch("point and scheme dimensions differ")
        if self.kind == "finite":
            return tuple(p) in self.points
        if not all(0 <= c <= 1 for c in p):
            return False
        return any(idx in self.selected for idx in cube_indices_of_point(p, self.depth))

    def distance_sq(self, p) -> Fraction:
        """Exact squared distance from ``p`` to A."""
        if self.kind == "finite":
            return min(sum((x - y) ** 2 for x, y in zip(p, a)) for a in self.points.points)
        best = None
        for idx in self.selected:
            cube = DyadicCube(self.depth, idx)
            s = Fraction(0)
            for c, (lo, hi) in zip(p, cube.bounds()):
                if c < lo:
                    s += (lo - c) ** 2
                elif c > hi:
                    s += (c - hi) ** 2
            if best is None or s < best:
                best = s
        return best

    def is_empty(self):
        return not (self.points.points if self.kind == "finite" else self.selected)


# --------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class Witness:
    cube: DyadicCube
    center: tuple
    radius: Fraction


def find_witness(A: NowhereDenseScheme, cube: DyadicCube, max_extra_depth=MAX_EXTRA_DEPTH) -> Witness:
    """A sub-cube of ``cube`` whose interior misses A, found by tree descent.

    The witness ball is centred at the sub-cube's centre with radius a quarter
    of its side.
    """
    current = cube
    limit = cube.level + max_extra_depth
    while True:
        if A.interior_free(current):
            return Witness(current, current.center(), current.side / 4)
        if A.kind == "dyadic" and current.level >= A.depth:
            raise WitnessSearchError(f"cube {cube.index} at level {cube.level} is covered by A", cube=cube)
        if current.level >= limit:
            raise WitnessSearchError(f"no A-free sub-cube of {cube.index} within depth {limit}", cube=cube)
        kids = list(current.children())
        free = next((c for c in kids if A.interior_free(c)), None)
        if free is not None:
            current = free
            continue
        if A.kind == "dyadic":
            full = 1 << ((A.depth - current.level - 1) * A.dim)
            current = next((c for c in kids if A.selected_below(c) < full), None)
            if current is None:
                raise WitnessSearchError(f"cube {cube.index} at level {cube.level} is covered by A", cube=cube)
        else:
            pts = A.points.points
            current = min(kids, key=lambda c: sum(c.contains(p) for p in pts))


@dataclass(frozen=True)
class NowhereDenseVerdict:
    ok: bool
    witnesses: dict
    counter_witness: DyadicCube | None = None


def is_nowhere_dense_at_resolution(A: NowhereDenseScheme, n, cap=ENUMERATION_CAP) -> NowhereDenseVerdict:
    """Check that every level-n cube holds a sub-cube whose interior misses A."""
    A.validate()
    if A.kind == "dyadic" and n > A.depth:
        raise MalformedScheme(f"resolution {n} exceeds scheme depth {A.depth}")
    check_cap(n, A.dim, cap)
    witnesses = {}
    for idx in product(range(1 << n), repeat=A.dim):
        cube = DyadicCube(n, idx)
        try:
            witnesses[cube] = find_witness(A, cube)
        except WitnessSearchError:
            return NowhereDenseVerdict(False, witnesses, cube)
    return NowhereDenseVerdict(True, witnesses)


def satisfies_pruning(A: NowhereDenseScheme):
    """First cube whose selected children are all of its children, if any.

    This is the strict per-level pruning condition; nowhere density at a
    resolution only needs the weaker check in :func:`is_nowhere_dense_at_resolution`.
    """
    if A.kind == "finite":
        return None
    for level in range(A.depth):
        parents = Counter(tuple(i >> 1 for i in idx) for idx in A._counts(level + 1))
        for idx, count in sorted(parents.items()):
            if count == 1 << A.dim:
                return DyadicCube(level, idx)
    return None


# --------------------------------------------------------------------------
# hitting and avoidance


def hits(E: FinitePointSet, A: NowhereDenseScheme) -> bool:
    if E.dim != A.dim:
        raise DimensionMismatch("set and scheme dimensions differ")
    return any(A.contains_point(p) for p in E.points)


@dataclass(frozen=True)
class Contribution:
    cube: DyadicCube
    tag: str  # "center" or "witness"
    point: tuple
    radius: Fraction


@dataclass(frozen=True)
class AvoidanceResult:
    F: FinitePointSet
    eps_prime: Fraction
    contributions: tuple
    hausdorff_sq: Fraction
    distance_sq: Fraction | None


def distance_to_scheme_sq(F: FinitePointSet, A: NowhereDenseScheme):
    if A.is_empty():
        return None
    if A.kind == "finite":
        return point_set_distance_sq(F, A.points)
    return min(A.distance_sq(p) for p in F.points)


def avoid_construct(E: FinitePointSet, A: NowhereDenseScheme, n) -> AvoidanceResult:
    """Replace ``E`` by one point per level-n cube it meets, each away from A.

    Cubes missing A contribute their centre (clearance ``2^-n / 2``); cubes
    meeting A contribute a witness centre found by :func:`find_witness`.
    """
    if not len(E):
        raise ValueError("E must be nonempty")
    if E.dim != A.dim:
        raise DimensionMismatch("set and scheme dimensions differ")
    if not E.exact:
        raise ValueError("avoid_construct works on exact point sets")
    A.validate()
    contributions = []
    for cube in sorted(cubes_meeting_set(E, n)):
        if A.meets_closed(cube):
            w = find_witness(A, cube)
            contributions.append(Contribution(cube, "witness", w.center, w.radius))
        else:
            contributions.append(Contribution(cube, "center", cube.center(), cube.side / 2))
    F = FinitePointSet.of([c.point for c in contributions], E.dim, EXACT)
    eps = min(c.radius for c in contributions)
    h = hausdorff_distance(E, F).square
    bound_sq = E.dim * Fraction(1, 1 << (2 * n))
    if h > bound_sq:
        raise AssertionError(f"d_H(E, F)^2 = {h} exceeds {bound_sq}")
    dist = distance_to_scheme_sq(F, A)
    if dist is not None and dist < eps * eps:
        raise AssertionError(f"dist(F, A)^2 = {dist} below eps'^2 = {eps * eps}")
    return AvoidanceResult(F, eps, tuple(contributions), h, dist)
