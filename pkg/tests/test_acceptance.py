"""End-to-end acceptance criteria.

Each test prints one line: criterion number, PASS or FAIL, the measured
quantity against its pinned tolerance, and the wall time against its budget.
"""

import random
from fractions import Fraction
import resource
import time
from pathlib import Path

import pytest

from mwn import GaussRat, parse_rule
from mwn.analysis import (
    classify_affine_rule,
    enumerate_branchings,
    enumerate_mergers,
    extract_loops,
    grid_structure_holds,
    reached_below,
    reached_numbers,
    step_counts,
)
from mwn.branchial import branchial_graph
from mwn.collisions import find_word_collisions
from mwn.export import FORMATS, export_graph
from mwn.graph import build, path_weights, transitive_reduction
from mwn.merge_search import merge_search
from mwn.numtheory import first_generation_step, frobenius_number, prime_nu, tube_circumference
from mwn.residue import (
    accepted_fraction,
    accepted_words,
    build_residue_automaton,
    drop_transients,
    remainder_via_graph,
)
from mwn.rules import (
    AffineInt,
    Rule,
    affine_word_compose,
    apply_rule,
    compose_branch_word,
    invert_affine_rule,
    word_to_str,
)

AFFINE = parse_rule("n -> {2n+1, 3n+1}")
MERGERS = [31, 175, 1039, 1471, 2191, 4495, 6223, 8815, 13135, 20479, 22639, 26815]
RESIDUES = {2: 1, 3: 1, 4: 3, 6: 1, 8: 7, 9: 4, 12: 7, 16: 15, 18: 13, 24: 7, 36: 31, 48: 31, 72: 31, 144: 31}


@pytest.fixture
def report(capsys):
    """Print a criterion line (bypassing capture) and assert it."""
    def _report(num, ok, detail, elapsed, budget):
        in_time = elapsed < budget
        status = "PASS" if ok and in_time else "FAIL"
        with capsys.disabled():
            print(f"\n[criterion {num:2d}] {status}: {detail}; time {elapsed:.2f}s (budget {budget:g}s)")
        assert ok, detail
        assert in_time, f"took {elapsed:.1f}s, budget {budget}s"
    return _report


@pytest.fixture(scope="module")
def g17():
    return build(AFFINE, [1], 17)


def test_criterion_01_merger_list(report):
    t0 = time.perf_counter()
    g = build(AFFINE, [1], 17)
    got = [m.value for m in enumerate_mergers(g)][:12]
    dt = time.perf_counter() - t0
    report(1, got == MERGERS, f"first 12 mergers {got} (exact match required)", dt, 10)


def test_criterion_02_residue_invariant(report, g17):
    t0 = time.perf_counter()
    vals = [m.value for m in enumerate_mergers(g17)]
    bad = [(v, k) for v in vals for k, r in RESIDUES.items() if v % k != r]
    dt = time.perf_counter() - t0
    report(2, not bad and len(vals) >= 12, f"{len(vals)} mergers checked against 14 moduli, violations {bad[:5]} (exact)", dt, 1)


def test_criterion_03_step_table(report):
    branchings = [1, 2, 4, 8, 15, 30, 59, 118, 235, 468, 934, 1866, 3729, 7449, 14887, 29756, 59482]
    mergings = [0, 0, 0, 1, 0, 1, 0, 1, 2, 2, 2, 3, 9, 11, 18, 30, 41]
    t0 = time.perf_counter()
    sc = step_counts(build(AFFINE, [1], 17))
    dt = time.perf_counter() - t0
    rss_gb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 2**20
    ok = [s.branchings for s in sc] == branchings and [s.mergings for s in sc] == mergings and rss_gb < 2
    report(3, ok, f"both rows for steps 1-17 (exact); peak RSS {rss_gb:.2f} GB (< 2 GB)", dt, 30)


def test_criterion_04_branch_pair_merges(report):
    expected = {(3, 4): (175, 5), (7, 10): (31, 2), (9, 13): (177151, 13), (15, 22): (30036991, 18)}
    t0 = time.perf_counter()
    got = {}
    for pair in expected:
        r = merge_search(AFFINE, *pair, 29, residue_filter="auto")
        assert compose_branch_word(AFFINE, r.word_u, pair[0]) == r.value
        assert compose_branch_word(AFFINE, r.word_v, pair[1]) == r.value
        got[pair] = (r.value, r.steps) if r.merged else None
    open_pairs = {}
    for pair in [(21, 31), (19, 28)]:
        r = merge_search(AFFINE, *pair, 29, residue_filter="auto")
        open_pairs[pair] = r.merged
    dt = time.perf_counter() - t0
    ok = got == expected and not any(open_pairs.values())
    report(4, ok, f"merged rows {got}; (21,31),(19,28) merged within 29: {open_pairs} (exact)", dt, 600)


def test_criterion_05_word_languages(report):
    mod12 = {
        2: ["22", "33"],
        3: ["222", "233", "322", "333"],
        4: ["2222", "2233", "2322", "3233", "3322", "3333"],
        5: ["22222", "22233", "22322", "23322", "23333", "32222", "32233", "32322", "33233", "33322", "33333"],
    }
    t0 = time.perf_counter()
    a12 = build_residue_automaton(AFFINE, 12, start=1)
    r12 = drop_transients(a12)
    r144 = drop_transients(build_residue_automaton(AFFINE, 144, start=1))
    lists_ok = all([word_to_str(w, "23") for w in accepted_words(r12, m)] == mod12[m] for m in mod12)
    w3 = [word_to_str(w, "23") for w in accepted_words(r144, 3)]
    f12, f144 = accepted_fraction(r12), accepted_fraction(r144)
    dt = time.perf_counter() - t0
    ok = a12.acceptors == {7} and lists_ok and w3 == ["222", "233", "333"] and abs(f12 - 0.28) <= 0.02 and abs(f144 - 0.03) <= 0.01
    report(5, ok, f"acceptor {sorted(a12.acceptors)}, mod-12 lists 2-5 exact={lists_ok}, mod-144 length 3 {w3}, "
                  f"fraction12 {f12:.4f} (0.28 +/- 0.02), fraction144 {f144:.4f} (0.03 +/- 0.01)", dt, 10)


def test_criterion_06_reached_numbers(report):
    prefix = [0, 1, 3, 4, 7, 9, 10, 13, 15, 19, 21, 22, 27, 28, 31, 39, 40, 43, 45, 46, 55, 57, 58, 63, 64]
    t0 = time.perf_counter()
    got = list(reached_numbers(AFFINE, 0, 8).values[:25])
    rs = reached_below(AFFINE, 0, 10**7)
    slope, coef = rs.density_slope(), rs.max_gap_coefficient()
    dt = time.perf_counter() - t0
    ok = got == prefix and abs(slope + 0.3) <= 0.1 and abs(coef - 0.17) <= 0.05
    report(6, ok, f"prefix exact={got == prefix}; density slope {slope:.3f} (-0.3 +/- 0.1); "
                  f"max-gap coefficient {coef:.4f} (0.17 +/- 0.05) over {len(rs.values)} values <= 1e7", dt, 60)


def test_criterion_07_loop_identity(report, g17):
    # Asserted as stated.  The quoted pair evaluates to 2191 (not 26815)
    # in every consistent orientation, so this criterion is expected to fail.
    letters = "23"
    t0 = time.perf_counter()
    loops = [l for l in extract_loops(g17) if l.merge_value == 26815]
    words = {(word_to_str(l.word_a, letters), word_to_str(l.word_b, letters)) for l in loops}
    wa = tuple(1 if c == "2" else 2 for c in "223232222")
    wb = tuple(1 if c == "2" else 2 for c in "3333233")
    va, vb = compose_branch_word(AFFINE, wa, 1), compose_branch_word(AFFINE, wb, 1)
    dt = time.perf_counter() - t0
    ok = ("223232222", "3333233") in words and va == vb == 26815
    report(7, ok, f"loop words at 26815: {sorted(words)}; quoted pair evaluates to {va} and {vb} "
                  f"(need the pair at 26815 and both = 26815)", dt, 10)


def test_criterion_08_addition_rules(report):
    t0 = time.perf_counter()
    frob = (frobenius_number([4, 7]).number, frobenius_number([2, 3]).number)
    mismatches = []
    for a, b in [(2, 3), (4, 7), (3, 5), (7, 11), (2, 4)]:
        g = build(parse_rule(f"n -> {{n+{a}, n+{b}}}"), [0], 200 // min(a, b) + 1)
        for n in range(201):
            i = g.id_of(n)
            if first_generation_step(a, b, n) != (None if i is None else g.layers[i]):
                mismatches.append((a, b, n))
    c1, c2 = tube_circumference(4, 7), tube_circumference(7, 11)
    dt = time.perf_counter() - t0
    ok = (frob == (17, 1) and not mismatches and c1.radicand == 65 and abs(c1.value - 8.06) < 0.005
          and abs(c2.value - 13.04) < 0.005)
    report(8, ok, f"frobenius {frob} (17, 1); firstgen mismatches {mismatches[:3]} over n <= 200; "
                  f"circumferences sqrt({c1.radicand})={c1.value:.4f} (8.06), sqrt({c2.radicand})={c2.value:.4f} (13.04), "
                  f"tolerance 0.005", dt, 10)


def test_criterion_09_growth_counts(report):
    t0 = time.perf_counter()
    g = build(parse_rule("n -> {2n, n+1}"), [0], 20)
    fib = [0, 1]
    while len(fib) < 25:
        fib.append(fib[-1] + fib[-2])
    # offset pinned by direct enumeration: distinct count after t steps from 0 is F(t+2)
    counts_ok = all(sum(1 for x in g.layers if x <= t) == fib[t + 2] for t in range(21))
    rule = parse_rule("n -> {2n, n+1}")
    pentagon = affine_word_compose(rule, (1, 2, 2)) == affine_word_compose(rule, (2, 1))
    general = all(
        affine_word_compose(Rule.simple(AffineInt(a, 0), AffineInt(1, 1)), (1,) + (2,) * a)
        == affine_word_compose(Rule.simple(AffineInt(a, 0), AffineInt(1, 1)), (2, 1))
        for a in range(1, 7)
    )
    dt = time.perf_counter() - t0
    report(9, counts_ok and pentagon and general,
           f"distinct counts = F(t+2) for t <= 20: {counts_ok}; pentagon identity symbolic: {pentagon}; "
           f"a*n+a = (n+1)*a for a <= 6: {general} (exact)", dt, 10)


def test_criterion_10_classification(report):
    t0 = time.perf_counter()
    cited = {(1, 1, 1, 2): "ribbon", (1, 0, 1, 3): "ribbon", (2, 1, 3, 2): "simple-grid",
             (2, 0, 2, 1): "simple-tree", (2, 1, 3, 1): "irregular"}
    got = {k: classify_affine_rule(*k) for k in cited}
    unconfirmed = []
    checked = 0
    for a in range(1, 7):
        for b in range(0, 4):
            for c in range(a, 7):
                for d in range(0, 4):
                    if (a, b) != (c, d) and not a == c == 1 and classify_affine_rule(a, b, c, d) == "simple-grid":
                        checked += 1
                        if not grid_structure_holds(a, b, c, d, steps=6):
                            unconfirmed.append((a, b, c, d))
    dt = time.perf_counter() - t0
    ok = got == cited and not unconfirmed
    report(10, ok, f"cited classes {'match' if got == cited else got}; {checked} grid predictions, "
                   f"not structurally confirmed on 6-step builds: {unconfirmed}", dt, 10)


INV_REF_BR = [0, 1, 0, 1, 0, 2, 0, 2, 2, 3, 2, 5, 5, 7, 9, 14, 14, 18, 27, 34, 43, 56, 73, 93, 118, 159, 201, 260, 335, 437]
INV_REF_MG = [1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 5, 1, 1, 2, 6, 4, 5, 13, 10, 13, 17, 29, 31, 38, 54]


def test_criterion_11_inverse_collatz(report):
    t0 = time.perf_counter()
    inv = invert_affine_rule(parse_rule("even ? {n/2} : {3n+1}"))
    inv_ok = inv == parse_rule("n -> selectint{2n, (n-1)/3}")
    listed = [(0, 2), (1, 8), (2, 14), (3, 20), (4, 26), (5, 32), (11, 68), (12, 74), (13, 80), (15, 92)]
    steps = {p: merge_search(inv, *p, 13) for p in listed}
    merges_ok = all(r.merged and r.steps <= 13 for r in steps.values())
    g = build(inv, [1], 31)
    cyc = all(any(g.values[e.dst] == b for e in g.out_edges(g.id_of(a))) for a, b in [(1, 2), (2, 4), (4, 1)])
    # soft table: reference step t corresponds to our step t + 1 (offset pinned by comparison)
    sc = step_counts(g)
    ours_br = [s.branchings for s in sc[1:]]
    ours_mg = [s.mergings for s in sc[1:]]
    n = min(len(ours_br), len(INV_REF_BR))
    br_miss = [t + 1 for t in range(n) if ours_br[t] != INV_REF_BR[t]]
    mg_miss = [t + 1 for t in range(n) if ours_mg[t] != INV_REF_MG[t]]
    dt = time.perf_counter() - t0
    ok = inv_ok and merges_ok and cyc
    report(11, ok, f"inverse rule {inv_ok}; listed pairs merge steps {[r.steps for r in steps.values()]} (<= 13); "
                   f"cycle 1->2->4->1 {cyc}; soft table (offset +1): branching mismatches at reference steps {br_miss}, "
                   f"merging mismatches at reference steps {mg_miss} (reported, not required)", dt, 60)


def test_criterion_12_remainder(report):
    t0 = time.perf_counter()
    rng = random.Random(12)
    cases = [(rng.randrange(10**12), rng.randrange(2, 51)) for _ in range(1000)]
    bad = [(n, k) for n, k in cases if remainder_via_graph(n, 10, k) != n % k]
    r867 = remainder_via_graph(867, 10, 7)
    dt = time.perf_counter() - t0
    report(12, r867 == 6 and not bad, f"867 mod 7 via graph = {r867} (6); disagreements in 1000 cases: {len(bad)}", dt, 1)


def prime_exponents(n):
    """Exponents of the prime factorisation by trial division."""
    exps, p = [], 2
    while n > 1:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            exps.append(e)
        p += 1
    return exps


def test_criterion_13_divisor_graphs(report):
    import networkx as nx

    t0 = time.perf_counter()
    results = {}
    for n in (30, 210, 100, 64):
        red = transitive_reduction(build(parse_rule("n -> {divisors(n)}"), [n], 12))
        D = nx.DiGraph()
        D.add_nodes_from(red.values)
        D.add_edges_from((red.values[e.src], red.values[e.dst]) for e in red.edges)
        divs = [d for d in range(1, n + 1) if n % d == 0]
        # Hasse diagram: a covers b when no divisor lies strictly between
        hasse = {(a, b) for a in divs for b in divs
                 if a != b and a % b == 0 and not any(c not in (a, b) and a % c == 0 and c % b == 0 for c in divs)}
        exps = prime_exponents(n)
        grid = nx.grid_graph(dim=[e + 1 for e in exps])
        results[n] = (set(D.edges) == hasse, nx.is_isomorphic(D.to_undirected(), grid), len(exps) == prime_nu(n))
    dt = time.perf_counter() - t0
    ok = all(all(v) for v in results.values())
    report(13, ok, f"(Hasse equal, grid of dimension prime_nu, dimension check) per n: {results}", dt, 5)


def test_criterion_14_complex_collisions(report):
    t0 = time.perf_counter()
    one = GaussRat(1)
    half = parse_rule("z -> {1+(-1/2+i)n, 1+(-1/2-i)n}")
    cols = find_word_collisions(half, one, 8)
    first = (cols[0].word_a, cols[0].word_b) if cols else None
    tree = parse_rule("z -> {1+(1/2-i/4)n, 1+(1/2+i/4)n}")
    none = find_word_collisions(tree, one, 8)
    dt = time.perf_counter() - t0
    ok = first == ((1, 1), (2, 2)) and cols[0].value == GaussRat(Fraction(-1, 4)) and none == []
    report(14, ok, f"c=-1/2+i first collision {first} at {cols[0].value if cols else None}; "
                   f"c=1/2-i/4 collisions to depth 8: {len(none)} (exact arithmetic, no tolerance)", dt, 30)


def test_criterion_15_property_suite(report):
    t0 = time.perf_counter()
    failures = []
    golden = Path(__file__).parent / "golden"
    g5 = build(AFFINE, [1], 5)
    for fmt in FORMATS:
        if export_graph(g5, fmt) != (golden / f"affine5.{fmt}").read_text():
            failures.append(f"golden {fmt}")
    a, b = build(AFFINE, [1], 10), build(AFFINE, [1], 10)
    if a.values != b.values or a.edges != b.edges:
        failures.append("determinism")
    # inverse round trips on a deterministic sweep of 10^3 affine rules
    for a1 in range(-5, 6):
        for b1 in range(-4, 5):
            if a1 == 0:
                continue
            r = Rule.simple(AffineInt(a1, b1), AffineInt(3, 1))
            inv = invert_affine_rule(r)
            for n in range(-5, 5):
                for br, ib in zip(r.branches, inv.branches):
                    (y,) = br.outputs(n)
                    if ib.outputs(y) != [n]:
                        failures.append(f"inverse {a1},{b1},{n}")
    # path weights against explicit path enumeration
    g8 = build(AFFINE, [1], 8)
    w = path_weights(g8)
    count = [0] * len(g8)
    stack = list(g8.initials)
    while stack:
        x = stack.pop()
        count[x] += 1
        stack.extend(e.dst for e in g8.out_edges(x))
    if w != count:
        failures.append("path weights")
    # covering property on 2000 nodes for several moduli
    g11 = build(AFFINE, [1], 11)
    parent = {}
    for e in sorted(g11.edges, key=lambda e: (e.step, e.src, e.branch)):
        parent.setdefault(e.dst, e)
    rng = random.Random(15)
    sample = rng.sample(range(len(g11)), 2000)
    for k in (5, 12, 144):
        ra = build_residue_automaton(AFFINE, k)
        for i in sample:
            word, x = [], i
            while x in parent:
                word.append(parent[x].branch)
                x = parent[x].src
            if ra.run(1, word[::-1]) != g11.values[i] % k:
                failures.append(f"covering {k} {i}")
    # branchial cliques and multiplicities
    g6 = build(parse_rule("n -> {3n, 2n, n+1}"), [1], 6)
    for layer in range(1, 7):
        bg = branchial_graph(g6, layer)
        par = {u: {e.src for e in g6.in_edges(u) if e.step == layer} for u in bg.nodes}
        for (u, v), m in bg.edges.items():
            if m != len(par[u] & par[v]):
                failures.append(f"multiplicity {layer}")
        nb = bg.neighbours()
        for p in g6.layer_nodes(layer - 1):
            kids = [e.dst for e in g6.out_edges(p) if g6.layers[e.dst] == layer]
            if any(y not in nb[x] for x in kids for y in kids if x != y):
                failures.append(f"clique {layer}")
    dt = time.perf_counter() - t0
    report(15, not failures, f"golden bytes, determinism, 1000 inverse round trips, path weights, "
                             f"6000 covering checks, branchial cliques: failures {failures[:5]}", dt, 60)
