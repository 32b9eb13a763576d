"""Dyadic cubes of [0,1]^d, point-cube incidence and box-counting profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .errors import CapExceeded
from .geom_core import EXACT, FinitePointSet

ENUMERATION_CAP = 1 << 20


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Closed cube ``prod [i_k 2^-n, (i_k+1) 2^-n]``."""

    level: int
    index: tuple

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be >= 0")
        top = 1 << self.level
        if not self.index or any(not 0 <= i < top for i in self.index):
            raise ValueError(f"index {self.index} out of range for level {self.level}")

    @property
    def dim(self):
        return len(self.index)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    def bounds(self):
        s = self.side
        return [(i * s, (i + 1) * s) for i in self.index]

    def center(self):
        s = self.side
        return tuple((2 * i + 1) * s / 2 for i in self.index)

    def contains(self, p) -> bool:
        return all(lo <= c <= hi for c, (lo, hi) in zip(p, self.bounds()))

    def contains_interior(self, p) -> bool:
        return all(lo < c < hi for c, (lo, hi) in zip(p, self.bounds()))

    def boundary_distance(self, p):
        """L-infinity distance from an interior point to the cube's boundary."""
        return min(min(c - lo, hi - c) for c, (lo, hi) in zip(p, self.bounds()))

    def children(self):
        for offs in product((0, 1), repeat=self.dim):
            yield DyadicCube(self.level + 1, tuple(2 * i + o for i, o in zip(self.index, offs)))

    def parent(self):
        if self.level == 0:
            return None
        return DyadicCube(self.level - 1, tuple(i >> 1 for i in self.index))

    def ancestor(self, level):
        shift = self.level - level
        if shift < 0:
            raise ValueError("ancestor level exceeds own level")
        return DyadicCube(level, tuple(i >> shift for i in self.index))


def check_cap(n, d, cap=ENUMERATION_CAP):
    size = 1 << (n * d)
    if size > cap:
        raise CapExceeded(f"level-{n} cubes in dimension {d}", size, cap)
    return size


def cubes_at_level(n, d, cap=ENUMERATION_CAP):
    """All ``2^(nd)`` level-n cubes in lexicographic index order."""
    if n < 0 or d < 1:
        raise ValueError("need n >= 0 and d >= 1")
    check_cap(n, d, cap)
    return [DyadicCube(n, idx) for idx in product(range(1 << n), repeat=d)]


def _coord_indices(c, n):
    top = 1 << n
    t = c * top
    k = math.floor(t)
    if t == k:
        return [i for i in (k - 1, k) if 0 <= i < top]
    return [k] if 0 <= k < top else []


def cube_indices_of_point(p, n):
    """Indices of every closed level-n cube containing ``p`` (1 to 2^d of them)."""
    per = [_coord_indices(c, n) for c in p]
    if any(not options for options in per):
        raise ValueError(f"point {p} lies outside the unit cube")
    return list(product(*per))


def cube_of_point(p, n) -> DyadicCube:
    """The unique level-n cube holding an interior point."""
    idx = cube_indices_of_point(p, n)
    if len(idx) != 1:
        raise ValueError(f"point {p} lies on a face of the level-{n} grid")
    return DyadicCube(n, idx[0])


def cubes_meeting_set(E: FinitePointSet, n):
    out = set()
    for p in E.points:
        out.update(cube_indices_of_point(p, n))
    return frozenset(DyadicCube(n, i) for i in out)


def box_count(E: FinitePointSet, n) -> int:
    out = set()
    for p in E.points:
        out.update(cube_indices_of_point(p, n))
    return len(out)


def box_count_profile(E: FinitePointSet, n_max):
    """Rows ``(n, N_n(E), log2 N_n / n)`` for ``n = 0..n_max``; slope is None at n=0."""
    rows = []
    for n in range(n_max + 1):
        N = box_count(E, n)
        rows.append((n, N, math.log2(N) / n if n else None))
    return rows


def grid_1d(n) -> FinitePointSet:
    """The grid ``{k / 2^n : 0 <= k <= 2^n}``."""
    return FinitePointSet.of([(Fraction(k, 1 << n),) for k in range((1 << n) + 1)], 1, EXACT)


def grid_points(n, d, cap=ENUMERATION_CAP) -> FinitePointSet:
    size = ((1 << n) + 1) ** d
    if size > cap:
        raise CapExceeded(f"level-{n} grid in dimension {d}", size, cap)
    axis = [Fraction(k, 1 << n) for k in range((1 << n) + 1)]
    return FinitePointSet.of(product(axis, repeat=d), d, EXACT)
