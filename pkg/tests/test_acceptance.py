"""Acceptance criteria, one test per criterion (or sub-criterion).

Each test prints a single ``PASS``/``FAIL`` line and the full list is
repeated in the pytest terminal summary. Run on its own with::

    pytest tests/test_acceptance.py -v
    python tests/test_acceptance.py

Order searches use the optimal rank matching (each destination block goes
to the rank already holding most of it); the identity-matching outcome of
the same check is printed as an ``INFO`` line where it differs.
"""
from __future__ import annotations

import sys
import time
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fftdecomp.commcost import (
    analyze_patterns,
    compare_report,
    divisor_np_grid,
    hop_costs,
    known_worst,
    search_best,
    sequence_cost,
    sequence_profile,
    transpose_cost,
    transpose_cost_fast,
)
from fftdecomp.fftcore import dft_md, max_relative_error
from fftdecomp.layout import (
    DecompContext,
    Layout,
    Shape,
    bracket,
    delinearize,
    granularity,
    linearize,
    permuted_dims,
    rank_corner_coords,
    rank_ranges,
)
from fftdecomp.orders import best_orders, count_orders, enumerate_sequences
from fftdecomp.simulator import run_parallel_fft

RESULTS: list[str] = []


def record(label: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    RESULTS.append(line)
    print("\n" + line)
    return ok


def info(label: str, detail: str):
    line = f"INFO {label}: {detail}"
    RESULTS.append(line)
    print("\n" + line)


def _grid(n: int, m: int, lo: int = 2, hi: int | None = None) -> list[int]:
    return [p for p in divisor_np_grid(Shape.cube(n, m), hi) if p >= lo]


# -- 1 ---------------------------------------------------------------------

def test_ac01_order_counts():
    t0 = time.perf_counter()
    n3 = sum(1 for _ in enumerate_sequences(3))
    n4 = sum(1 for _ in enumerate_sequences(4))
    elapsed = time.perf_counter() - t0
    ok = (n3, n4) == (8, 1296) and count_orders(5) == 7962624 \
        and count_orders(6) == 2985984000000 and elapsed < 1.0
    assert record("AC1 order-space counts",
                  ok, f"M=3:{n3} M=4:{n4} C5={count_orders(5)} C6={count_orders(6)} "
                      f"enumeration {elapsed:.3f}s (<1s)")


# -- 2 ---------------------------------------------------------------------

def _two_pattern(n: int, low: list[int], high: list[int], rank_matching: str):
    rep = analyze_patterns(Shape.cube(n, 3), 3, low + high, rank_matching=rank_matching)
    exact = [rep.exact_ratio(p) for p in low]
    top = max(rep.ratios[p] for p in high)
    return rep, exact, top


def test_ac02_two_pattern_collapse():
    r8, ex8, top8 = _two_pattern(8, [2, 4, 8], [16, 32, 64], "optimal")
    r16, ex16, top16 = _two_pattern(16, [2, 4, 8, 16], [32, 64, 128, 256], "optimal")
    ok = (
        len(r8.groups) == 2 and len(r16.groups) == 2
        and all(e == 2 for e in ex8 + ex16)
        and top8 <= 1.3 + 0.05 and top16 <= 1.3 + 0.05
        and abs(top8 - top16) <= 0.05
    )
    _, _, itop = _two_pattern(8, [2, 4, 8], [16, 32, 64], "identity")
    ri = analyze_patterns(Shape.cube(8, 3), 3, [2, 4, 8, 16, 32, 64], rank_matching="identity")
    info("AC2 identity matching",
         f"N=8 {len(ri.groups)} profiles, ratio {ri.exact_ratio(2)} at np<=8, "
         f"max {itop:.4f} above")
    assert record(
        "AC2 two-pattern collapse (3-D)", ok,
        f"N=8: {len(r8.groups)} profiles, ratio {sorted(set(map(str, ex8)))} at np<=8, "
        f"max {top8:.4f} at 16..64; N=16: {len(r16.groups)} profiles, "
        f"ratio {sorted(set(map(str, ex16)))} at np<=16, max {top16:.4f} at 32..256",
    )


# -- 3 ---------------------------------------------------------------------

def test_ac03_best_3d_orders():
    want = set(best_orders(3).best)
    details, ok = [], True
    for n in (4, 8, 16):
        got = set(search_best(Shape.cube(n, 3), 3, _grid(n, 3)))
        ok &= got == want
        details.append(f"N={n}:{len(got)}{'=' if got == want else '!='}catalog")
    ident = search_best(Shape.cube(8, 3), 3, _grid(8, 3), rank_matching="identity")
    info("AC3 identity matching",
         f"N=8 full grid -> {[str(s) for s in ident]}; restricted to np<=N -> "
         f"{len(search_best(Shape.cube(8, 3), 3, [2, 4, 8], rank_matching='identity'))} orders")
    assert record("AC3 best 3-D orders", ok, ", ".join(details) + " (np: all divisor powers of 2)")


# -- 4 ---------------------------------------------------------------------

def test_ac04_doubling():
    ok, checked = True, 0
    for n in (4, 8, 16):
        s = Shape.cube(n, 3)
        for p in _grid(n, 3, hi=n):
            for rm in ("identity", "optimal"):
                good = sequence_cost(s, "abc,cab,cba", p, rank_matching=rm)
                bad = sequence_cost(s, "abc,cab,bca", p, rank_matching=rm)
                ok &= bad == 2 * good
                checked += 1
    assert record("AC4 doubling example", ok,
                  f"cost(abc->cab->bca) == 2*cost(abc->cab->cba) in {checked} cases, N in 4,8,16, np<=N")


# -- 5 ---------------------------------------------------------------------

def test_ac05_best_4d_orders_and_ratio():
    t0 = time.perf_counter()
    s = Shape.cube(4, 4)
    nps = _grid(4, 4)
    got = set(search_best(s, 4, nps))
    cat = set(best_orders(4).best)
    rep = analyze_patterns(s, 4, nps, member_limit=1)
    low = [rep.exact_ratio(p) for p in nps if p <= 16]
    high = max(rep.ratios[p] for p in nps if 16 < p <= 64)
    ok = cat <= got and all(r == 3 for r in low) and high <= 1.5 + 0.05
    ri = analyze_patterns(s, 4, nps, rank_matching="identity", member_limit=1)
    info("AC5 identity matching",
         f"ratio {sorted(set(str(ri.exact_ratio(p)) for p in nps if p <= 16))} at np<=16, "
         f"max {max(ri.ratios[p] for p in nps if 16 < p <= 64):.4f} at 32..64, "
         f"catalog always-best only for np<=16: "
         f"{cat <= set(search_best(s, 4, [p for p in nps if p <= 16], rank_matching='identity'))}")
    assert record(
        "AC5 best 4-D orders and ratio", ok,
        f"catalog in search_best ({len(got)} found), ratio {sorted(set(map(str, low)))} at np<=16, "
        f"max {high:.4f} at 32..64, {time.perf_counter() - t0:.1f}s",
    )


# -- 6 ---------------------------------------------------------------------

def test_ac06_5d_sampled():
    s = Shape.cube(4, 5)
    nps = _grid(4, 5)
    rep = analyze_patterns(s, 5, nps, sample=10000, seed=1, member_limit=1)
    floor = rep.best.amounts
    beats = all(
        all(a <= b for a, b in zip(sequence_profile(s, q, nps, rank_matching="optimal").amounts, floor))
        for q in best_orders(5).best
    )
    ratios = set()
    for rm in ("identity", "optimal"):
        for p in nps:
            if p <= 16:
                w = sequence_cost(s, known_worst(5), p, rank_matching=rm)
                b = sequence_cost(s, best_orders(5).best[0], p, rank_matching=rm)
                ratios.add(Fraction(w, b))
    ok = beats and ratios == {4} and rep.worst.at(2) == 4 * rep.best.at(2)
    assert record("AC6 5-D sampled check", ok,
                  f"{rep.evaluated} sequences (10000 sampled, seed 1), catalog minimal at every np in "
                  f"{nps}: {beats}; catalog vs known worst at np<=16: {sorted(map(str, ratios))}")


def test_ac06_5d_exhaustive():
    t0 = time.perf_counter()
    s = Shape.cube(4, 5)
    got = search_best(s, 5, _grid(4, 5), exhaustive=True)
    ok = len(got) == 96 and set(best_orders(5).best) <= set(got)
    assert record("AC6 5-D exhaustive 96 orders", ok,
                  f"{len(got)} always-best orders of {count_orders(5)}, catalog included: "
                  f"{set(best_orders(5).best) <= set(got)}, {time.perf_counter() - t0:.1f}s")


# -- 7 ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def compare64():
    return {r.np: r for r in compare_report(64, 3, [2 ** k for k in range(1, 19)])}


def test_ac07_gain_over_2d_up_to_64(compare64):
    gains = {p: compare64[p].gain_percent("2D") for p in (2, 4, 8, 16, 32, 64)}
    ok = all(60.0 - 0.5 <= g <= 77.8 + 0.5 for g in gains.values())
    assert record("AC7 60.0-77.8% better than A_2D for np<=64", ok,
                  ", ".join(f"np={p}:{g:.2f}%" for p, g in gains.items()))


def test_ac07_gain_range_endpoints(compare64):
    g16, g64 = compare64[16].gain_percent("2D"), compare64[64].gain_percent("2D")
    ok = abs(g16 - 60.0) <= 0.5 and abs(g64 - 77.8) <= 0.5
    assert record("AC7 gain range endpoints", ok,
                  f"np=16:{g16:.2f}% np=64:{g64:.2f}% (expected 60.0 and 77.8 +-0.5)")


def test_ac07_gap_vanishes(compare64):
    gains = {p: compare64[p].gain_percent("2D") for p in (2048, 4096)}
    ok = all(abs(g) <= 0.5 for g in gains.values())
    assert record("AC7 gap to A_2D reaches 0 from 2048", ok,
                  ", ".join(f"np={p}:{g:.3f}%" for p, g in gains.items()) + " (+-0.5 points)")


def test_ac07_3d_peak(compare64):
    r = compare64[8192].ratio("3D")
    ok = abs(r - 11.6) <= 0.2
    near = min(compare64, key=lambda p: abs((compare64[p].ratio("3D") or 0) - 11.6))
    assert record("AC7 A_3D/ours = 11.6 at 8192", ok,
                  f"A_3D/ours at 8192 = {r:.4f}; closest to 11.6 is np={near} "
                  f"({compare64[near].ratio('3D'):.4f})")


def test_ac07_method_limits(compare64):
    last = {}
    for k in ("1D", "1.5D", "2D"):
        last[k] = max(p for p, r in compare64.items() if r.baselines[k] is not None)
    ok = last == {"1D": 64, "1.5D": 512, "2D": 4096}
    assert record("AC7 baseline limits", ok,
                  f"last applicable np: {last} (expected 64, 512, 4096)")


# -- 8 ---------------------------------------------------------------------

def test_ac08_4d_5d_gap():
    n = 16
    out, ok = [], True
    for m, target in ((4, 12.0), (5, 11.1)):
        # FFT-feasible range: every rank keeps whole lines of the last axis
        nps = [2 ** k for k in range(1, 4 * (m - 1) + 1)]
        rows = compare_report(n, m, nps)
        peak_np, peak = max(((r.np, r.ratio(f"{m}D")) for r in rows), key=lambda t: t[1])
        ok &= abs(peak - target) <= 0.1 * target
        out.append(f"{m}-D peak {peak:.4f} at np={peak_np} (target {target}, np<=N^{m - 1})")
    assert record("AC8 4-D/5-D comparison gap", ok, "; ".join(out))


# -- 9 ---------------------------------------------------------------------

def test_ac09_oracle_equivalence():
    t0 = time.perf_counter()
    s = Shape.cube(4, 3)
    lays = [Layout(p) for p in permutations(range(3))]
    mismatches, count = 0, 0
    for p in (1, 2, 4, 8, 16, 32, 64):
        for a in lays:
            for b in lays:
                mismatches += transpose_cost_fast(s, a, b, p) != transpose_cost(s, a, b, p)
                count += 1
    rng = np.random.default_rng(99)
    shapes = [(4, 4, 4, 4), (2, 3, 4, 2), (2, 2, 2, 2, 2), (4, 4, 4, 4, 4), (3, 2, 2, 3, 2)]
    random_count = 0
    for i in range(1000):
        sh = Shape(shapes[i % len(shapes)])
        a = Layout(tuple(rng.permutation(sh.m)))
        b = Layout(tuple(rng.permutation(sh.m)))
        p = int(rng.integers(1, sh.total + 1))
        mismatches += transpose_cost_fast(sh, a, b, p) != transpose_cost(sh, a, b, p)
        random_count += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    assert record("AC9 oracle equivalence", ok,
                  f"{count} exhaustive M=3 + {random_count} random M=4/5 instances, "
                  f"{mismatches} mismatches, {elapsed:.1f}s")


# -- 10 --------------------------------------------------------------------

E2E_CASES = [
    ((8, 8, 8), 0), ((8, 8, 8), 3), ((4, 4, 4), 1), ((4, 4, 4), 2), ((8, 8, 4), 0),
    ((4, 4, 4, 4), 0), ((4, 4, 4, 4), 1), ((4, 4, 4, 4), 2), ((4, 4, 4, 4), 3),
    ((2, 4, 4, 4), 0), ((4, 4, 4, 4, 4), 0), ((4, 4, 4, 4, 4), 1),
    ((4, 4, 4, 4, 4), 2), ((4, 4, 4, 4, 4), 3), ((2, 2, 4, 4, 4), 0),
]


def test_ac10_end_to_end():
    rng = np.random.default_rng(2024)
    worst_err, cases, hop_ok = 0.0, 0, True
    for dims, which in E2E_CASES:
        s = Shape(dims)
        order = best_orders(s.m).best[which]
        for p in (1, 2, 4, 8, 16):
            x = rng.standard_normal(s.total) + 1j * rng.standard_normal(s.total)
            out, ledger = run_parallel_fft(s, order, p, x, restore_output=bool(cases % 2))
            worst_err = max(worst_err, max_relative_error(out, dft_md(dims, x)))
            hop_ok &= ledger.hop_totals == hop_costs(s, order, p, bool(cases % 2))
            cases += 1
    ok = cases >= 20 and worst_err <= 1e-9 and hop_ok
    assert record("AC10 end-to-end parallel FFT", ok,
                  f"{cases} seeded cases, max relative error {worst_err:.2e}, "
                  f"ledger == model on every hop: {hop_ok}")


# -- 11 --------------------------------------------------------------------

_SEEN = {"n": 0}


@st.composite
def _contexts(draw):
    m = draw(st.integers(2, 5))
    dims = tuple(draw(st.lists(st.integers(1, 4), min_size=m, max_size=m)))
    perm = tuple(draw(st.permutations(range(m))))
    shape = Shape(dims)
    return DecompContext(shape, Layout(perm), draw(st.integers(1, shape.total)))


@settings(max_examples=10_000, deadline=None, database=None)
@given(_contexts(), st.integers(0, 10 ** 9))
def _structural_case(ctx, salt):
    _SEEN["n"] += 1
    ranges = rank_ranges(ctx)
    total = ctx.shape.total
    # tiling
    assert ranges[0].start == 0 and ranges[-1].end == total - 1
    assert all(b.start == a.end + 1 for a, b in zip(ranges, ranges[1:]))
    # load balance
    unit = granularity(ctx.shape, ctx.layout, ctx.np)
    assert all(abs(r.size - total / ctx.np) <= unit for r in ranges)
    # bijection
    x = salt % total
    assert linearize(ctx.shape, ctx.layout, delinearize(ctx.shape, ctx.layout, x)) == x
    # adaptivity
    k = bracket(ctx.shape, ctx.layout, ctx.np)
    dims = permuted_dims(ctx.shape, ctx.layout)
    for r in range(ctx.np):
        first, last = rank_corner_coords(ctx, r)
        assert all(c == 0 for c in first[k:])
        assert all(c == n - 1 for c, n in zip(last[k:], dims[k:]))


def test_ac11_structural_invariants():
    _SEEN["n"] = 0
    try:
        _structural_case()
        ok, err = _SEEN["n"] >= 10_000, ""
    except AssertionError as exc:  # pragma: no cover - reported below
        ok, err = False, f" falsified: {exc}"
    assert record("AC11 structural invariants", ok,
                  f"tiling, load balance, bijection, adaptivity on {_SEEN['n']} generated cases{err}")


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print("\n".join(RESULTS))
    sys.exit(code)
