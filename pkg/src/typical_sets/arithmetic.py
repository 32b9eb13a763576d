"""Exact arithmetic of finite sets: sumsets, product sets, polynomial images.

All sets here are exact-rational :class:`FinitePointSet` objects.  Internally
the values are scaled to integers over a common denominator so that sums and
products stay in Python ints; deduplication is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .dyadic import box_count_profile, grid_1d
from .errors import BackendMismatch, CapExceeded, DimensionMismatch
from .geom_core import EXACT, FinitePointSet, integerize

EXPANSION_CAP = 10**6


def _require_exact(A: FinitePointSet, dim1=False):
    if not A.exact:
        raise BackendMismatch("set arithmetic is exact-rational only")
    if dim1 and A.dim != 1:
        raise DimensionMismatch("this operation is defined for subsets of the line")
    if not len(A):
        raise ValueError("empty set")


def _guard(what, size, cap):
    if size > cap:
        raise CapExceeded(what, size, cap)


def _add(X, Y, cap, what):
    """Sumset of two lists of integer tuples."""
    _guard(what, len(X) * len(Y), cap)
    return list({tuple(a + b for a, b in zip(x, y)) for x in X for y in Y})


def _build(values, den, dim):
    return FinitePointSet._trusted(dim, EXACT, [tuple(Fraction(c, den) for c in v) for v in values])


def set_sum(A: FinitePointSet, B: FinitePointSet, cap=EXPANSION_CAP) -> FinitePointSet:
    """Minkowski sum ``A + B``."""
    _require_exact(A)
    _require_exact(B)
    if A.dim != B.dim:
        raise DimensionMismatch("sumset of sets of different dimensions")
    ints, den = integerize(A.points + B.points)
    S = _add(ints[: len(A)], ints[len(A):], cap, "sumset")
    return _build(S, den, A.dim)


def sum_set(A: FinitePointSet, m, cap=EXPANSION_CAP) -> FinitePointSet:
    """The m-fold sumset, built as ``((A + A) + A) + ...`` with dedup at each step."""
    if m < 1:
        raise ValueError("m must be >= 1")
    _require_exact(A)
    X, den = integerize(A.points)
    S = list(X)
    for _ in range(m - 1):
        S = _add(S, X, cap, f"{m}-fold sumset")
    return _build(S, den, A.dim)


def scalar_mul(lam, A: FinitePointSet) -> FinitePointSet:
    lam = Fraction(lam)
    _require_exact(A)
    return FinitePointSet._trusted(A.dim, EXACT, {tuple(lam * c for c in p) for p in A.points})


def product_set(A: FinitePointSet, m, cap=EXPANSION_CAP) -> FinitePointSet:
    """The m-fold product set ``{x_1 * ... * x_m}``; ``m = 0`` gives ``{1}``."""
    if m < 0:
        raise ValueError("m must be >= 0")
    _require_exact(A, dim1=True)
    if m == 0:
        return FinitePointSet._trusted(1, EXACT, [(Fraction(1),)])
    ints, den = integerize(A.points)
    X = [p[0] for p in ints]
    T = set(X)
    for _ in range(m - 1):
        _guard(f"{m}-fold product set", len(T) * len(X), cap)
        T = {t * x for t in T for x in X}
    D = den**m
    return FinitePointSet._trusted(1, EXACT, [(Fraction(t, D),) for t in T])


@dataclass(frozen=True)
class Polynomial:
    coefficients: tuple

    def __init__(self, coefficients):
        coeffs = [Fraction(c) for c in coefficients]
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def parse(cls, text):
        """From a comma-separated list ``"a0,a1,..."``."""
        return cls([Fraction(t.strip()) for t in text.split(",") if t.strip()])

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, x):
        out = Fraction(0)
        for c in reversed(self.coefficients):
            out = out * x + c
        return out


def polynomial_image(P: Polynomial, A: FinitePointSet, cap=EXPANSION_CAP) -> FinitePointSet:
    """``sum_k a_k T^k(A)``: every monomial draws its own factors from A.

    This is not the pointwise image ``{P(a)}``: for ``x^2 - x`` on ``{0, 1}``
    the result is ``{-1, 0, 1}``.
    """
    _require_exact(A, dim1=True)
    terms = []
    for k, a in enumerate(P.coefficients):
        if a == 0:
            continue
        if k == 0:
            terms.append(FinitePointSet._trusted(1, EXACT, [(a,)]))
        else:
            terms.append(scalar_mul(a, product_set(A, k, cap)))
    if not terms:
        return FinitePointSet._trusted(1, EXACT, [(Fraction(0),)])
    out = terms[0]
    for t in terms[1:]:
        out = set_sum(out, t, cap)
    return out


@dataclass(frozen=True)
class IdentityCheck:
    equal: bool
    projected: FinitePointSet
    sumset: FinitePointSet


def projection_identity_check(A: FinitePointSet, m, cap=EXPANSION_CAP) -> IdentityCheck:
    """Compare ``S^m(A)`` with ``sqrt(m) * pi_e(A^m)``, ``e = (1, ..., 1) / sqrt(m)``.

    The projection of ``x`` is the rational vector ``(<x, 1>/m) (1, ..., 1)``;
    its coordinate along ``e`` times ``sqrt(m)`` equals ``<p, 1>``, so the left
    side never needs a square root.
    """
    _require_exact(A, dim1=True)
    _guard(f"A^{m}", len(A) ** m, cap)
    values = [p[0] for p in A.points]
    coords = set()
    for x in product(values, repeat=m):
        s = sum(x, Fraction(0))
        proj = [s / m] * m
        coords.add((sum(proj, Fraction(0)),))
    lhs = FinitePointSet._trusted(1, EXACT, coords)
    rhs = sum_set(A, m, cap)
    return IdentityCheck(lhs == rhs, lhs, rhs)


# --------------------------------------------------------------------------
# covering bound


@dataclass(frozen=True)
class CoveringBound:
    log2: float

    @property
    def value(self) -> float:
        return 2.0**self.log2 if self.log2 > -1070 else 0.0


def covering_bound(n, m, s) -> CoveringBound:
    """``(2^n + 1)^m * (2^(-n^2) * sqrt(m))^s``, kept in log2 space."""
    if n < 1 or m < 1 or s <= 0:
        raise ValueError("need n >= 1, m >= 1, s > 0")
    log2_N = n + math.log2(1 + 2.0**-n)
    return CoveringBound(m * log2_N + s * (-(n * n) + 0.5 * math.log2(m)))


def predicted_level(m, s, target=1e-6) -> int:
    """A level n at which the covering bound is certainly below ``target``.

    Uses ``log2(2^n + 1) <= n + 1`` and solves the resulting quadratic in n.
    """
    c = m + 0.5 * s * math.log2(m) + math.log2(1 / target)
    return math.ceil((m + math.sqrt(m * m + 4 * s * c)) / (2 * s))


def decay_threshold(m, s) -> int:
    """Beyond this level the bound strictly decreases in n."""
    return math.ceil(m / (2 * s))


# --------------------------------------------------------------------------
# partial sums of the exponential series


@dataclass(frozen=True)
class ExpPartialSum:
    m: int
    S: FinitePointSet
    gap_bound: Fraction  # bound on d_H(S_m, S_{m+1})


def exp_partial_sums(A: FinitePointSet, m, cap=EXPANSION_CAP):
    """``S_0, ..., S_m`` with ``S_k = sum_{j<=k} T^j(A) / j!`` and ``T^0(A) = {1}``.

    Each entry carries the bound ``max(A)^(k+1) / (k+1)!`` on the Hausdorff
    distance to the next partial sum: the added set lies in that interval
    above 0, so every point moves at most that far and every new point has a
    parent that close.
    """
    _require_exact(A, dim1=True)
    if not all(0 <= p[0] <= 1 for p in A.points):
        raise ValueError("exp partial sums need A inside [0, 1]")
    top = max(p[0] for p in A.points)
    ints, den = integerize(A.points)
    X = [p[0] for p in ints]
    # S_k and T^k are kept as integers over den^k * k! and den^k respectively
    S, T = {1}, {1}
    out = []
    for k in range(m + 1):
        if k:
            _guard("product set", len(T) * len(X), cap)
            T = {t * x for t in T for x in X}
            _guard("partial sum", len(S) * len(T), cap)
            S = {s * den * k + t for s in S for t in T}
        D = den**k * math.factorial(k)
        pts = FinitePointSet._trusted_sorted(1, EXACT, [(Fraction(v, D),) for v in sorted(S)])
        out.append(ExpPartialSum(k, pts, top ** (k + 1) / math.factorial(k + 1)))
    return out


def exp_partial_sum(A: FinitePointSet, m, cap=EXPANSION_CAP) -> ExpPartialSum:
    return exp_partial_sums(A, m, cap)[-1]


# --------------------------------------------------------------------------
# dimension evidence


def padded_dyadic_set(n, seed=0):
    """Random nonempty subset of ``{k / 2^n}`` with each point padded at ``2^-(n^2)``."""
    rng = np.random.default_rng(seed)
    grid = grid_1d(n).points
    while True:
        mask = rng.random(len(grid)) < 0.5
        if mask.any():
            break
    eps = Fraction(1, 1 << (n * n))
    pts = set()
    for (x,), keep in zip(grid, mask):
        if keep:
            pts.update({(x,), (min(Fraction(1), x + eps / 2),), (max(Fraction(0), x - eps / 2),)})
    return FinitePointSet.of(pts, 1, EXACT)


def dim_evidence(n, m, n_max, seed=0, cap=EXPANSION_CAP):
    """Box-count profiles of ``S^m(A)`` (scaled by 1/m into [0,1]) and ``T^m(A)``."""
    A = padded_dyadic_set(n, seed)
    S = scalar_mul(Fraction(1, m), sum_set(A, m, cap))
    T = product_set(A, m, cap)
    return {
        "A": box_count_profile(A, n_max),
        "sum": box_count_profile(S, n_max),
        "product": box_count_profile(T, n_max),
    }
