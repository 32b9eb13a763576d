"""Vectorized tuple scans with exact fallbacks.

Every scan evaluates a float "gap" for each index tuple and then re-decides the
borderline rows with integer arithmetic, so a reported zero gap means an exact
similar copy / affine dependence, never a rounding artifact.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from .geom_core import EXACT, _sqrt_diff, bareiss_det, integerize

U = 2.0**-53
PATTERN_FILTER = 1e-6
TUPLE_CAP = 50_000_000


@lru_cache(maxsize=16)
def colex_combinations(s, r):
    """All r-subsets of range(s) in colex order, as an (C(s, r), r) int array.

    Colex order puts the subsets of range(t) first, for every t <= s.
    """
    if r == 0:
        return np.zeros((1, 0), dtype=np.int64)
    if r == 1:
        return np.arange(s, dtype=np.int64)[:, None]
    base = colex_combinations(s - 1, r - 1) if s > 0 else np.zeros((0, r - 1), dtype=np.int64)
    blocks = []
    for t in range(r - 1, s):
        head = base[: comb(t, r - 1)]
        blocks.append(np.hstack([head, np.full((len(head), 1), t, dtype=np.int64)]))
    if not blocks:
        return np.zeros((0, r), dtype=np.int64)
    return np.vstack(blocks)


def tuples_with_first(i, N, k):
    """All increasing k-tuples of range(N) whose smallest entry is i."""
    rest = colex_combinations(N - 1, k - 1)[: comb(N - 1 - i, k - 1)] + (i + 1)
    return np.hstack([np.full((len(rest), 1), i, dtype=np.int64), rest])


def tuples_with_last(m, k):
    """All k-tuples made of index m and a (k-1)-subset of range(m)."""
    rest = colex_combinations(m, k - 1)[: comb(m, k - 1)]
    return np.hstack([rest, np.full((len(rest), 1), m, dtype=np.int64)])


# --------------------------------------------------------------------------
# float gap kernels


def pattern_gaps(X, T, psig):
    """Signature gaps of triples ``T`` against the float signature ``psig``."""
    A, B, C = X[T[:, 0]], X[T[:, 1]], X[T[:, 2]]
    sq = np.stack(
        [((B - C) ** 2).sum(1), ((A - C) ** 2).sum(1), ((A - B) ** 2).sum(1)], axis=1
    )
    sq.sort(axis=1)
    sides = np.sqrt(sq)
    top = sides[:, 2:3]
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = sides / top
    gaps = np.abs(sig - np.asarray(psig)[None, :]).max(axis=1)
    return gaps, sides[:, 2]


def _sigma_min_2x2(M):
    a, b, c, d = M[:, 0, 0], M[:, 0, 1], M[:, 1, 0], M[:, 1, 1]
    det = a * d - b * c
    fro = a * a + b * b + c * c + d * d
    disc = np.sqrt(np.maximum(fro * fro - 4 * det * det, 0.0))
    smax2 = (fro + disc) / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        smin = np.where(smax2 > 0, np.abs(det) / np.sqrt(smax2), 0.0)
    perm = np.abs(a * d) + np.abs(b * c)
    return smin, det, 8 * U * perm


def _det3(M):
    a, b, c = M[:, 0, 0], M[:, 0, 1], M[:, 0, 2]
    d, e, f = M[:, 1, 0], M[:, 1, 1], M[:, 1, 2]
    g, h, i = M[:, 2, 0], M[:, 2, 1], M[:, 2, 2]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    perm = (
        np.abs(a) * (np.abs(e * i) + np.abs(f * h))
        + np.abs(b) * (np.abs(d * i) + np.abs(f * g))
        + np.abs(c) * (np.abs(d * h) + np.abs(e * g))
    )
    return det, 16 * U * perm


def gp_gaps(X, T):
    """Smallest singular value, float determinant and its error bound.

    The bound is only valid when all coordinate differences are exact floats;
    it is None for d > 3 (no filter, every tuple gets an exact determinant).
    """
    M = X[T[:, 1:]] - X[T[:, :1]]
    d = M.shape[1]
    if d == 2:
        return _sigma_min_2x2(M)
    smin = np.linalg.svd(M, compute_uv=False)[:, -1]
    if d == 3:
        det, bound = _det3(M)
        return smin, det, bound
    return smin, np.linalg.det(M), None


def angle_gaps(X, T, theta):
    """Smallest |angle - theta| over the three vertex choices of each triple."""
    out = None
    for v, p, q in ((0, 1, 2), (1, 0, 2), (2, 0, 1)):
        u = X[T[:, p]] - X[T[:, v]]
        w = X[T[:, q]] - X[T[:, v]]
        cos = (u * w).sum(1) / np.sqrt((u * u).sum(1) * (w * w).sum(1))
        g = np.abs(np.arccos(np.clip(cos, -1.0, 1.0)) - theta)
        out = g if out is None else np.minimum(out, g)
    return out


# --------------------------------------------------------------------------
# scanner


class TupleScanner:
    """Gap evaluation for tuples of one point array, with exact re-checks.

    ``kind`` is "pattern", "general_position" or "angle".
    """

    def __init__(self, points, backend, kind, psig=None, psquares=None, theta=None):
        self.kind = kind
        self.backend = backend
        self.X = np.array([[float(c) for c in p] for p in points], dtype=float)
        self.N, self.d = self.X.shape if len(points) else (0, 0)
        self.psig = psig
        self.psquares = psquares
        self.theta = theta
        self.ints = None
        self.D = 1
        self.filter_ok = False
        if backend == EXACT and len(points):
            self.ints, D = integerize(points)
            self.D = D
            big = max((abs(c) for p in self.ints for c in p), default=0)
            self.filter_ok = D & (D - 1) == 0 and big < 2**52
            scale = max(1.0, float(np.abs(self.X).max()))
            self.small_side = PATTERN_FILTER * scale

    @property
    def arity(self):
        return self.d + 1 if self.kind == "general_position" else 3

    # exact decisions -------------------------------------------------

    def _exact_pattern_gap(self, row):
        I = [self.ints[j] for j in row]

        def sq(p, q):
            return sum((x - y) * (x - y) for x, y in zip(p, q))

        a, b, c = sorted([sq(I[1], I[2]), sq(I[0], I[2]), sq(I[0], I[1])])
        q1, q2, _ = self.psquares
        if a == q1 * c and b == q2 * c:
            return 0.0
        mine = (Fraction(a, c), Fraction(b, c), Fraction(1))
        return max(_sqrt_diff(p, q) for p, q in zip(mine, self.psquares))

    def _exact_det(self, row):
        base = self.ints[row[0]]
        M = [[x - y for x, y in zip(self.ints[j], base)] for j in row[1:]]
        return bareiss_det(M)

    # chunk evaluation --------------------------------------------------

    def gaps(self, T):
        """Gap per tuple row, exact-corrected under the exact backend."""
        if len(T) == 0:
            return np.zeros(0)
        if self.kind == "pattern":
            g, top = pattern_gaps(self.X, T, self.psig)
            if self.backend == EXACT and self.psquares is not None:
                cand = np.flatnonzero((g < PATTERN_FILTER) | (top < self.small_side))
                for r in cand:
                    g[r] = self._exact_pattern_gap(T[r])
            return g
        if self.kind == "angle":
            return angle_gaps(self.X, T, self.theta)
        smin, det, bound = gp_gaps(self.X, T)
        if self.backend != EXACT:
            return smin
        if self.filter_ok and bound is not None:
            cand = np.flatnonzero(np.abs(det) <= bound)
        else:
            cand = np.arange(len(T))
        if len(cand):
            M = self.X[T[cand, 1:]] - self.X[T[cand, :1]]
            fro = np.sqrt((M * M).sum(axis=(1, 2)))
            for r, f in zip(cand, fro):
                dd = self._exact_det(T[r])
                if dd == 0:
                    smin[r] = 0.0
                else:
                    # |det| / ||M||_F^(d-1) is a lower bound on sigma_min
                    lower = float(Fraction(abs(dd), self.D**self.d)) / max(f, 1e-300) ** (self.d - 1)
                    smin[r] = max(smin[r], lower)
        return smin

    def scan_first(self, firsts):
        """Minimum gap over all tuples whose smallest index is in ``firsts``."""
        best, best_row = math.inf, None
        k = self.arity
        for i in firsts:
            if self.N - i < k:
                continue
            T = tuples_with_first(i, self.N, k)
            g = self.gaps(T)
            j = int(np.argmin(g))
            if g[j] < best:
                best, best_row = float(g[j]), tuple(int(t) for t in T[j])
        return best, best_row


def total_tuples(N, k):
    return comb(N, k)
