"""Piecewise-linear functions on [0,1], the sup metric, and fiber avoidance.

A fiber is a vertical line ``{x} x R`` together with a nowhere-dense set of
values on it.  :func:`avoid_shift` moves a function by a constant so that its
value at ``x`` sits in an open gap of that set.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .category import NowhereDenseScheme
from .errors import WitnessSearchError

DEFAULT_WINDOW = Fraction(2)


@dataclass(frozen=True)
class PLFunction:
    breakpoints: tuple
    values: tuple

    def __init__(self, breakpoints, values):
        t = tuple(Fraction(b) for b in breakpoints)
        v = tuple(Fraction(y) for y in values)
        if len(t) < 2 or len(t) != len(v):
            raise ValueError("need at least two breakpoints and one value per breakpoint")
        if t[0] != 0 or t[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if any(a >= b for a, b in zip(t, t[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, c):
        return cls([0, 1], [c, c])

    @classmethod
    def linear(cls, a, b):
        """The segment from ``(0, a)`` to ``(1, b)``."""
        return cls([0, 1], [a, b])

    def __call__(self, x):
        x = Fraction(x)
        if not 0 <= x <= 1:
            raise ValueError(f"{x} is outside [0, 1]")
        t = self.breakpoints
        k = min(bisect_right(t, x), len(t) - 1)
        t0, t1 = t[k - 1], t[k]
        v0, v1 = self.values[k - 1], self.values[k]
        return v0 + (v1 - v0) * (x - t0) / (t1 - t0)

    def shift(self, c) -> "PLFunction":
        c = Fraction(c)
        return PLFunction(self.breakpoints, [v + c for v in self.values])

    def to_json(self):
        return {"breakpoints": [str(b) for b in self.breakpoints], "values": [str(v) for v in self.values]}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["breakpoints"], obj["values"])


def sup_distance(f: PLFunction, g: PLFunction) -> Fraction:
    """``max |f - g|`` over [0,1]; the difference is PL so the max sits at a breakpoint."""
    grid = sorted(set(f.breakpoints) | set(g.breakpoints))
    return max(abs(f(t) - g(t)) for t in grid)


# --------------------------------------------------------------------------
# fibers


@dataclass(frozen=True)
class FiberSet:
    """A nowhere-dense set of values above ``x``.

    Finite schemes hold raw values.  A dyadic scheme lives in [0,1] and is
    mapped affinely onto the value window ``[-W, W]``.
    """

    x: Fraction
    scheme: NowhereDenseScheme
    window: Fraction = DEFAULT_WINDOW

    def __init__(self, x, scheme, window=DEFAULT_WINDOW):
        x, window = Fraction(x), Fraction(window)
        if not 0 <= x <= 1:
            raise ValueError("fiber position must lie in [0, 1]")
        if window <= 0:
            raise ValueError("window must be positive")
        if scheme.dim != 1:
            raise ValueError("fiber schemes are one-dimensional")
        scheme.validate()
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "scheme", scheme)
        object.__setattr__(self, "window", window)

    def segments(self):
        """A as a sorted list of disjoint closed intervals ``(lo, hi)`` of values."""
        A = self.scheme
        if A.kind == "finite":
            return [(p[0], p[0]) for p in A.points.points]
        W, step = self.window, 2 * self.window / (1 << A.depth)
        out = []
        for (j,) in sorted(A.selected):
            lo, hi = -W + j * step, -W + (j + 1) * step
            if out and out[-1][1] >= lo:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
        return out

    def contains(self, y) -> bool:
        y = Fraction(y)
        return any(lo <= y <= hi for lo, hi in self.segments())

    def distance(self, y):
        """Exact distance from the value ``y`` to A, or None when A is empty."""
        y = Fraction(y)
        best = None
        for lo, hi in self.segments():
            d = lo - y if y < lo else (y - hi if y > hi else Fraction(0))
            best = d if best is None else min(best, d)
        return best

    def gaps(self, lo, hi):
        """Open sub-intervals of ``(lo, hi)`` that miss A."""
        out, cur = [], lo
        for a, b in self.segments():
            if b <= cur:
                continue
            if a >= hi:
                break
            if a > cur:
                out.append((cur, a))
            cur = max(cur, b)
            if cur >= hi:
                break
        if cur < hi:
            out.append((cur, hi))
        return out


def graph_hits_fiber(f: PLFunction, F: FiberSet) -> bool:
    return F.contains(f(F.x))


def avoid_shift(f: PLFunction, F: FiberSet, eps):
    """Shift ``f`` by a constant so that ``g(x)`` has a clear ball missing A.

    Returns ``(g, eps')`` with ``sup_distance(f, g) < eps`` and
    ``(g(x) - eps', g(x) + eps')`` disjoint from A and inside
    ``(f(x) - eps, f(x) + eps)``.  When ``f(x)`` is already off A no shift
    is made.  Otherwise the widest A-free gap near ``f(x)`` is used, with
    its midpoint as the new value.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    c = f(F.x)
    dist = F.distance(c)
    if dist is None or dist > 0:
        g, v = f, c
        eps_p = eps if dist is None else min(dist, eps)
    else:
        gaps = F.gaps(c - eps, c + eps)
        if not gaps:
            raise WitnessSearchError(f"A covers the whole window ({c - eps}, {c + eps})")
        lo, hi = max(gaps, key=lambda ab: (ab[1] - ab[0], ab[0]))
        v = (lo + hi) / 2
        eps_p = (hi - lo) / 2
        g = f.shift(v - c)
    # re-check the posted conditions exactly
    if not sup_distance(f, g) < eps:
        raise AssertionError("shift is not within eps")
    if graph_hits_fiber(g, F):
        raise AssertionError("shifted graph still meets the fiber set")
    if F.gaps(v - eps_p, v + eps_p) != [(v - eps_p, v + eps_p)]:
        raise AssertionError("clearance ball meets the fiber set")
    if v - eps_p < c - eps or v + eps_p > c + eps:
        raise AssertionError("clearance ball leaves the eps-ball")
    return g, eps_p


def avoid_fibers(f: PLFunction, fibers, eps):
    """Avoid several fibers at once by repeated constant shifts.

    The i-th shift has radius at most ``eps / 2^(i+1)`` and at most half the
    clearance left at the fibers already handled, so earlier fibers stay
    avoided and the total move stays below ``eps``.  Returns ``(g, clearances)``.
    """
    eps = Fraction(eps)
    g = f
    budget = None
    for i, F in enumerate(fibers):
        r = eps / (1 << (i + 1))
        if budget is not None:
            r = min(r, budget / 2)
        before = g
        g, clear = avoid_shift(g, F, r)
        moved = sup_distance(before, g)
        budget = clear if budget is None else min(budget - moved, clear)
    clearances = []
    for F in fibers:
        d = F.distance(g(F.x))
        if d is not None and d <= 0:
            raise AssertionError(f"fiber at x={F.x} is hit after all shifts")
        clearances.append(d)
    if fibers and not sup_distance(f, g) < eps:
        raise AssertionError("accumulated shift reached eps")
    return g, clearances
