"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Every check here uses its own oracle (integer determinants, brute-force
distances, direct enumeration) rather than the library routine under test.
"""
import json
import math
import time
from bisect import bisect_left
from fractions import Fraction as Fr
from itertools import combinations, product

import numpy as np

from typical_sets.arithmetic import covering_bound, decay_threshold, exp_partial_sums, predicted_level, \
    projection_identity_check, sum_set
from typical_sets.avoidance import (
    Constraint,
    check_interiority,
    check_one_per_cube,
    completion_statistics,
    find_violation,
    generate,
    perturbation_trials,
)
from typical_sets.category import NowhereDenseScheme, avoid_construct, is_nowhere_dense_at_resolution
from typical_sets.cli import main
from typical_sets.errors import WitnessSearchError
from typical_sets.funcspace import FiberSet, PLFunction, avoid_shift, sup_distance
from typical_sets.geom_core import FinitePointSet, Pattern, hausdorff_distance

RESULTS = []  # (number, line), shown in the terminal summary by conftest


def record(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append((number, line))
    print(line)
    assert ok, line


EQUILATERAL = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
ZERO_ONE_THREE = ((0,), (1,), (3,))


def _scaled(points):
    """Integer coordinates over a common denominator."""
    den = math.lcm(*(c.denominator for p in points for c in p))
    return [tuple(int(c * den) for c in p) for p in points]


def _sq(p, q):
    return sum((a - b) ** 2 for a, b in zip(p, q))


def _sides(a, b, c):
    return sorted((_sq(a, b), _sq(b, c), _sq(a, c)))


def _count_similar(points, pattern):
    """Exact similar copies among all triples, by proportional side squares."""
    t = _sides(*pattern)
    ints = _scaled(points)
    hits = 0
    for a, b, c in combinations(ints, 3):
        s = _sides(a, b, c)
        if s[0] * t[2] == t[0] * s[2] and s[1] * t[2] == t[1] * s[2]:
            hits += 1
    return hits


# --------------------------------------------------------------------------
# integer determinants modulo two primes; zero residues fall back to exact ints

PRIMES = (2_147_483_629, 2_147_483_587)


def _singular_count(ints, k):
    """Count k-subsets (k = dim + 1) whose difference matrix is singular."""
    n, d = len(ints), len(ints[0])
    singular = 0
    for i in range(n - k + 1):
        # all subsets with first index i: differences against point i
        rest = list(combinations(range(i + 1, n), k - 1))
        if not rest:
            continue
        R = np.array(rest)
        maybe_zero = np.ones(len(R), dtype=bool)
        for p in PRIMES:
            D = np.array([[(int(c) - int(x)) % p for c, x in zip(row, ints[i])] for row in ints], dtype=np.int64)
            M = D[R]  # (tuples, d, d)
            det = _det_mod(M, p)
            maybe_zero &= det == 0
        for row in R[maybe_zero]:
            M = [[ints[j][t] - ints[i][t] for t in range(d)] for j in row]
            if _int_det(M) == 0:
                singular += 1
    return singular


def _det_mod(M, p):
    d = M.shape[1]
    if d == 2:
        return (M[:, 0, 0] * M[:, 1, 1] % p - M[:, 0, 1] * M[:, 1, 0] % p) % p
    assert d == 3
    out = np.zeros(len(M), dtype=np.int64)
    for (a, b, c), sign in (((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
                            ((0, 2, 1), -1), ((1, 0, 2), -1), ((2, 1, 0), -1)):
        term = M[:, 0, a] * M[:, 1, b] % p * M[:, 2, c] % p
        out = (out + sign * term) % p
    return out


def _int_det(M):
    if len(M) == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * _int_det([r[:j] + r[j + 1:] for r in M[1:]]) for j in range(len(M)))


# --------------------------------------------------------------------------
# 1


def test_criterion_01_pattern_avoidance():
    worst, clean, dirty = 0.0, 0, []
    for name, pat in (("equilateral", EQUILATERAL), ("{0,1,3}", ZERO_ONE_THREE)):
        c = Constraint.similar_to(*pat)
        for seed in range(10):
            t0 = time.perf_counter()
            cert = generate(3, 2, c, seed=seed)
            v = find_violation(cert.gamma, c, tol=0)
            worst = max(worst, time.perf_counter() - t0)
            ok = len(cert.gamma) == 64 and v is None and _count_similar(cert.gamma.points, pat) == 0
            clean += ok
            if not ok:
                dirty.append((name, seed))
    record(1, "pattern avoidance d=2 n=3", clean == 20 and worst < 5,
           f"{clean}/20 clean over 41664 triples each, slowest generate+scan {worst:.2f}s, failures {dirty}")


# --------------------------------------------------------------------------
# 2


def test_criterion_02_general_position():
    gp = Constraint.general_position()
    t0 = time.perf_counter()
    cert = generate(4, 2, gp, seed=0)
    v = find_violation(cert.gamma, gp)
    t_single = time.perf_counter() - t0
    t0 = time.perf_counter()
    cert8 = generate(4, 2, gp, seed=0, jobs=8)
    v8 = find_violation(cert8.gamma, gp, jobs=8)
    t_multi = time.perf_counter() - t0
    bad2 = _singular_count(_scaled(cert.gamma.points), 3)
    cert3 = generate(2, 3, gp, seed=0)
    v3 = find_violation(cert3.gamma, gp)
    bad3 = _singular_count(_scaled(cert3.gamma.points), 4)
    ok = (len(cert.gamma) == 256 and len(cert3.gamma) == 64 and v is None and v8 is None and v3 is None
          and bad2 == 0 and bad3 == 0 and cert8 == cert and t_single < 60 and t_multi < 15)
    record(2, "general position", ok,
           f"d=2 n=4: {math.comb(256, 3)} triples, {bad2} singular, {t_single:.1f}s single, {t_multi:.1f}s jobs=8; "
           f"d=3 n=2: {math.comb(64, 4)} 4-tuples, {bad3} singular")


# --------------------------------------------------------------------------
# 3


def _interiority_oracle(cert):
    """Every margin ball sits inside the interior of its own cube."""
    n, eps = cert.level, cert.margin
    for p in cert.gamma.points:
        for c in p:
            k = math.floor(c * 2**n)
            lo, hi = Fr(k, 2**n), Fr(k + 1, 2**n)
            if not (c - lo > eps and hi - c > eps):
                return False
    return True


def test_criterion_03_margin_certificates():
    certs = [
        generate(3, 2, Constraint.similar_to(*EQUILATERAL), seed=0),
        generate(3, 2, Constraint.similar_to(*ZERO_ONE_THREE), seed=0),
        generate(3, 2, Constraint.general_position(), seed=0),
        generate(2, 3, Constraint.general_position(), seed=0),
        generate(2, 2, Constraint.angle(math.pi / 3), seed=0),
    ]
    inner_ok = all(not check_interiority(c) and _interiority_oracle(c) and check_one_per_cube(c) for c in certs)
    cubes = sum(2 ** (c.level * c.dim) for c in certs)
    reports = [perturbation_trials(c, trials=10_000, seed=11) for c in certs]
    violations = sum(r.violations for r in reports)
    ok = inner_ok and violations == 0 and all(r.trials == 10_000 for r in reports)
    record(3, "margin certificates", ok,
           f"interiority exact on {cubes} cubes over {len(certs)} certificates: {inner_ok}; "
           f"{sum(r.trials for r in reports)} perturbation trials, {violations} violations")


# --------------------------------------------------------------------------
# 4


def test_criterion_04_completion_statistics():
    parts, ok = [], True
    for name, pat in (("equilateral", EQUILATERAL), ("{0,1,3}", ZERO_ONE_THREE)):
        st = completion_statistics(Pattern.of(*pat), d=2, samples=100_000, seed=4, threshold=1e-3)
        ok &= st.samples == 100_000 and st.exact_similar == 0 and st.near_fraction < 1e-2
        parts.append(f"{name}: {st.exact_similar} exact, gap<1e-3 fraction {st.near_fraction:.2e}")
    record(4, "random third points", ok, "; ".join(parts))


# --------------------------------------------------------------------------
# 5


def _box_dist_sq(p, idx, depth):
    w = Fr(1, 2**depth)
    return sum(max(i * w - c, 0, c - (i + 1) * w) ** 2 for c, i in zip(p, idx))


def _random_case(rng):
    d = int(rng.integers(1, 3))
    n = int(rng.integers(0, 4))
    den = int(rng.choice([7, 12, 16, 30]))
    E = FinitePointSet.of(
        [tuple(Fr(int(k), den) for k in rng.integers(0, den + 1, size=d)) for _ in range(rng.integers(1, 5))], d)
    if rng.random() < 0.5:
        pts = [tuple(Fr(int(k), den) for k in rng.integers(0, den + 1, size=d)) for _ in range(rng.integers(1, 5))]
        pts += list(E.points[: int(rng.integers(0, len(E) + 1))])  # plant some hits
        A = NowhereDenseScheme.finite(pts, d)
    else:
        depth = n + int(rng.integers(1, 3))
        cells = list(product(range(2**depth), repeat=d))
        keep = rng.random(len(cells)) < 0.4
        A = NowhereDenseScheme.dyadic(depth, [c for c, k in zip(cells, keep) if k], d)
    return E, A, n


def test_criterion_05_avoidance_construction():
    rng = np.random.default_rng(5)
    cases = []
    while len(cases) < 1000:
        E, A, n = _random_case(rng)
        if is_nowhere_dense_at_resolution(A, n).ok:
            cases.append((E, A, n))
    t0 = time.perf_counter()
    results = [avoid_construct(E, A, n) for E, A, n in cases]
    elapsed = time.perf_counter() - t0
    failures = 0
    kinds = {"finite": 0, "dyadic": 0}
    for (E, A, n), res in zip(cases, results):
        kinds[A.kind] += 1
        F = res.F.points
        h = max(max(min(_sq(x, y) for y in F) for x in E.points), max(min(_sq(x, y) for x in E.points) for y in F))
        good = h <= Fr(E.dim, 4**n) and res.eps_prime > 0
        if A.kind == "finite":
            good &= min(_sq(x, a) for x in F for a in A.points.points) >= res.eps_prime**2
        elif A.selected:
            good &= min(_box_dist_sq(x, idx, A.depth) for x in F for idx in A.selected) >= res.eps_prime**2
        failures += not good
    record(5, "nearby set avoiding a nowhere dense set", failures == 0 and elapsed < 30,
           f"{len(cases)} instances ({kinds['finite']} finite, {kinds['dyadic']} dyadic), "
           f"{failures} failures, construction {elapsed:.1f}s")


# --------------------------------------------------------------------------
# 6


def test_criterion_06_projection_identity():
    rng = np.random.default_rng(6)
    equal = 0
    for _ in range(100):
        size, m = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        vals = {Fr(int(rng.integers(-40, 41)), int(rng.integers(1, 13))) for _ in range(size)}
        A = FinitePointSet.of([(v,) for v in vals], 1)
        chk = projection_identity_check(A, m)
        oracle = sorted({sum(t) for t in product(vals, repeat=m)})
        equal += chk.equal and [p[0] for p in sum_set(A, m).points] == oracle
    record(6, "sumset equals scaled diagonal projection", equal == 100, f"{equal}/100 exact equalities")


# --------------------------------------------------------------------------
# 7


def _log_bound(n, m, s):
    return (m * math.log(2**n + 1) + s * (-(n * n) * math.log(2) + 0.5 * math.log(m))) / math.log(2)


def test_criterion_07_covering_bound():
    worst = 0.0
    for n, m, s in product(range(1, 11), range(1, 5), (0.1, 0.5, 1.0)):
        worst = max(worst, abs(covering_bound(n, m, s).log2 - _log_bound(n, m, s)))
    decay_ok = True
    for m, s in product(range(1, 5), (0.1, 0.5, 1.0)):
        n_star = predicted_level(m, s)
        start = max(1, decay_threshold(m, s))
        logs = [_log_bound(n, m, s) for n in range(start, n_star + 1)]
        decay_ok &= all(b < a for a, b in zip(logs, logs[1:]))
        decay_ok &= _log_bound(n_star, m, s) < math.log2(1e-6) and covering_bound(n_star, m, s).value < 1e-6
    record(7, "covering bound", worst <= 1e-9 and decay_ok,
           f"max |log2 difference| {worst:.1e} over 120 cases; monotone decay below 1e-6 by predicted n: {decay_ok}")


# --------------------------------------------------------------------------
# 8


def _hausdorff_1d(X, Y):
    """Hausdorff distance of two sorted lists of rationals by binary search."""
    def one_way(P, Q):
        worst = Fr(0)
        for x in P:
            k = bisect_left(Q, x)
            near = min(abs(x - Q[j]) for j in (k - 1, k) if 0 <= j < len(Q))
            worst = max(worst, near)
        return worst
    return max(one_way(X, Y), one_way(Y, X))


def test_criterion_08_exp_partial_sums():
    rng = np.random.default_rng(8)
    checks, bad, worst_ratio = 0, 0, 0.0
    for _ in range(50):
        size = int(rng.integers(1, 3))
        den = int(rng.integers(1, 9))
        A = FinitePointSet.of([(Fr(int(rng.integers(0, den + 1)), den),) for _ in range(size)], 1)
        seq = exp_partial_sums(A, 7)
        for m in range(7):
            h = _hausdorff_1d([p[0] for p in seq[m].S.points], [p[0] for p in seq[m + 1].S.points])
            bound = Fr(1, math.factorial(m + 1))
            checks += 1
            bad += h > bound
            worst_ratio = max(worst_ratio, float(h / bound))
    record(8, "exp partial sums are Cauchy", bad == 0,
           f"{checks} checks over 50 sets, m=0..6, {bad} exceed 1/(m+1)!, worst ratio {worst_ratio:.3f}")


# --------------------------------------------------------------------------
# 9


def _interp(bps, vals, t):
    for (x0, y0), (x1, y1) in zip(zip(bps, vals), zip(bps[1:], vals[1:])):
        if x0 <= t <= x1:
            return y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    raise ValueError(t)


def _rand_frac(rng, lo, hi, den):
    return Fr(int(rng.integers(lo * den, hi * den + 1)), den)


def _random_pl(rng):
    inner = {_rand_frac(rng, 0, 1, int(rng.integers(2, 9))) for _ in range(rng.integers(0, 4))} - {0, 1}
    bps = [Fr(0), *sorted(inner), Fr(1)]
    return PLFunction(bps, [_rand_frac(rng, -2, 2, int(rng.integers(1, 21))) for _ in bps])


def _fiber_cells(F):
    A = F.scheme
    if A.kind == "finite":
        return [(p[0], p[0]) for p in A.points.points]
    w = 2 * F.window / 2**A.depth
    return [(-F.window + j * w, -F.window + (j + 1) * w) for (j,) in A.selected]


def test_criterion_09_function_shift():
    rng = np.random.default_rng(9)
    done, failures, shifted = 0, 0, 0
    while done < 1000:
        f = _random_pl(rng)
        x = _rand_frac(rng, 0, 1, int(rng.integers(1, 21)))
        if rng.random() < 0.5:
            A = NowhereDenseScheme.finite([(_rand_frac(rng, -2, 2, int(rng.integers(1, 21))),)
                                           for _ in range(rng.integers(1, 7))], 1)
        else:
            depth = int(rng.integers(3, 7))
            A = NowhereDenseScheme.dyadic(depth, [(j,) for j in range(2**depth) if rng.random() < 0.3], 1)
        F = FiberSet(x, A)
        eps = Fr(int(rng.integers(1, 101)), 100)
        c = _interp(f.breakpoints, f.values, x)
        cells = _fiber_cells(F)
        # precondition: some value within eps of f(x) is off A
        grid = [c + eps * Fr(k, 64) for k in range(-63, 64)]
        if all(any(lo <= v <= hi for lo, hi in cells) for v in grid):
            continue
        done += 1
        try:
            g, eps_p = avoid_shift(f, F, eps)
        except WitnessSearchError:
            failures += 1
            continue
        diffs = {_interp(g.breakpoints, g.values, t) - _interp(f.breakpoints, f.values, t)
                 for t in set(f.breakpoints) | set(g.breakpoints)}
        v = _interp(g.breakpoints, g.values, x)
        good = len(diffs) == 1 and abs(diffs.pop()) < eps and sup_distance(f, g) < eps and eps_p > 0
        # open ball (v - eps', v + eps') misses every closed cell of A, and sits inside the eps-ball
        good &= all(hi <= v - eps_p or lo >= v + eps_p for lo, hi in cells)
        good &= c - eps <= v - eps_p and v + eps_p <= c + eps
        failures += not good
        shifted += v != c
    record(9, "function shift avoiding a fiber", failures == 0,
           f"1000 instances ({shifted} needed a shift), {failures} failures")


# --------------------------------------------------------------------------
# 10


def _sqrt_sum_ge(a, b, c):
    """sqrt(a) + sqrt(b) >= sqrt(c) for nonnegative rationals, exactly."""
    r = c - a - b
    return r <= 0 or 4 * a * b >= r * r


def _h_sq(E, F):
    return max(max(min(_sq(x, y) for y in F) for x in E), max(min(_sq(x, y) for x in E) for y in F))


def test_criterion_10_metric_axioms():
    rng = np.random.default_rng(10)
    h_fail = 0
    for _ in range(1000):
        d = int(rng.integers(1, 4))
        sets = []
        for _ in range(3):
            den = int(rng.choice([4, 9, 16]))
            pts = [tuple(Fr(int(k), den) for k in rng.integers(0, den + 1, size=d)) for _ in range(rng.integers(1, 6))]
            sets.append(FinitePointSet.of(pts, d))
        if rng.random() < 0.1:
            sets[1] = FinitePointSet.of(list(reversed(sets[0].points)), d)
        E, F, G = sets
        ef, fe, eg, fg = (hausdorff_distance(E, F).square, hausdorff_distance(F, E).square,
                          hausdorff_distance(E, G).square, hausdorff_distance(F, G).square)
        good = ef == fe == _h_sq(E.points, F.points)
        good &= (ef == 0) == (set(E.points) == set(F.points))
        good &= hausdorff_distance(E, E).square == 0
        good &= _sqrt_sum_ge(ef, fg, eg)
        h_fail += not good
    s_fail = 0
    for _ in range(1000):
        f, g, h = (_random_pl(rng) for _ in range(3))
        fg_, gf_, fh_, gh_ = sup_distance(f, g), sup_distance(g, f), sup_distance(f, h), sup_distance(g, h)
        ts = sorted(set(f.breakpoints) | set(g.breakpoints))
        oracle = max(abs(_interp(f.breakpoints, f.values, t) - _interp(g.breakpoints, g.values, t)) for t in ts)
        good = fg_ == gf_ == oracle and sup_distance(f, f) == 0
        good &= (fg_ == 0) == all(_interp(f.breakpoints, f.values, t) == _interp(g.breakpoints, g.values, t)
                                  for t in ts)
        good &= fh_ <= fg_ + gh_
        s_fail += not good
    record(10, "metric axioms", h_fail == 0 and s_fail == 0,
           f"Hausdorff: 1000 triples, {h_fail} failures; sup metric: 1000 triples, {s_fail} failures")


# --------------------------------------------------------------------------
# 11


def test_criterion_11_manifest_replay(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "e.json").write_text(json.dumps({"dim": 1, "backend": "exact", "points": [["1/2"], ["1/3"]]}))
    (tmp_path / "a.json").write_text(json.dumps({"kind": "finite", "dim": 1, "points": [["1/2"]]}))
    (tmp_path / "f.json").write_text(json.dumps({"breakpoints": ["0", "1"], "values": ["0", "1/2"]}))
    runs = {
        "cert.json": ["generate", "--level", "2", "--dim", "2", "--constraint", "general-position", "--seed", "3"],
        "eq.json": ["generate", "--level", "2", "--dim", "2", "--constraint", "pattern", "--seed", "1"],
        "fl.json": ["generate", "--level", "2", "--dim", "2", "--constraint", "angle", "--theta", "pi/4", "--float"],
        "verify.json": ["verify", "--in", "cert.json", "--perturb", "50"],
        "haus.txt": ["hausdorff", "eq.json", "cert.json"],
        "hit.json": ["hit-test", "--set", "e.json", "--avoid", "a.json", "--level", "2"],
        "dim.csv": ["dimension", "--in", "cert.json", "--max-level", "4"],
        "sum.json": ["arith", "sum", "--in", "e.json", "--m", "3"],
        "exp.json": ["arith", "exp", "--in", "e.json", "--m", "3"],
        "cover.json": ["arith", "cover", "--n", "3", "--m", "2", "--s", "0.5"],
        "dimev.csv": ["arith", "dim-evidence", "--n", "2", "--m", "2", "--max-level", "5"],
        "g.json": ["func", "avoid", "--f", "f.json", "--x", "1", "--avoid", "a.json", "--eps", "1/8"],
        "typ.json": ["sample-typical", "--dim", "2", "--levels", "1,2", "--seed", "5"],
    }
    codes = {out: main(argv + ["--out", out]) for out, argv in runs.items()}
    capsys.readouterr()
    same = 0
    for out in runs:
        first = (tmp_path / out).read_bytes()
        code = main(["replay", "--manifest", out + ".manifest.json"])
        said = capsys.readouterr().out.strip().splitlines()[-1]
        again = main(runs[out] + ["--out", out + ".again"])
        same += code == 0 and said == "identical" and (tmp_path / (out + ".again")).read_bytes() == first
    record(11, "manifest replay", same == len(runs) and set(codes.values()) == {0},
           f"{same}/{len(runs)} outputs replayed byte-identical")
