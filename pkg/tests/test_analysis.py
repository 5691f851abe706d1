import math

import numpy as np
import pytest

from mwn import parse_rule
from mwn.analysis import (
    classify_affine_rule,
    confluence_probe,
    enumerate_branchings,
    enumerate_mergers,
    extract_loops,
    grid_structure_holds,
    reach_statistics,
    reached_below,
    reached_numbers,
    step_counts,
)
from mwn.graph import build
from mwn.rules import RuleError, compose_branch_word

MERGERS = [31, 175, 1039, 1471, 2191, 4495, 6223, 8815, 13135, 20479, 22639, 26815]
BRANCHINGS = [1, 2, 4, 8, 15, 30, 59, 118, 235, 468, 934, 1866, 3729, 7449, 14887, 29756, 59482]
MERGINGS = [0, 0, 0, 1, 0, 1, 0, 1, 2, 2, 2, 3, 9, 11, 18, 30, 41]
INVERSE = "n -> selectint{2n, (n-1)/3}"


def test_first_branchings(graph17):
    ev = enumerate_branchings(graph17)[:6]
    assert [(e.parent, e.values) for e in ev] == [
        (1, (3, 4)), (3, (7, 10)), (4, (9, 13)), (7, (15, 22)), (10, (21, 31)), (9, (19, 28)),
    ]


def test_degenerate_branching():
    g = build(parse_rule("n -> {3n, 2n, n+1}"), [1], 3)
    first = enumerate_branchings(g)[0]
    assert first.parent == 1 and sorted(first.values) == [2, 2, 3]
    assert first.children == ((1, 3), (2, 2), (3, 2))
    # the reference list is printed in value order; compare as sets
    later = {e.parent: sorted(e.values) for e in enumerate_branchings(g)[1:]}
    assert later[2] == [3, 4, 6] and later[3] == [4, 6, 9] and later[4] == [5, 8, 12]


def test_inverse_collatz_events_present():
    g = build(parse_rule(INVERSE), [1], 20)
    got = {e.parent: set(e.values) for e in enumerate_branchings(g)}
    listed = {1: {0, 2}, 4: {1, 8}, 7: {2, 14}, 10: {3, 20}, 13: {4, 26},
              16: {5, 32}, 34: {11, 68}, 37: {12, 74}, 40: {13, 80}, 46: {15, 92}}
    for p, kids in listed.items():
        assert got[p] == kids


def test_mergers(graph17):
    ms = enumerate_mergers(graph17)
    assert [m.value for m in ms[:12]] == MERGERS
    assert all(m.in_degree == 2 for m in ms)
    assert all(m.value % 144 == 31 for m in ms)
    assert len(ms) == sum(MERGINGS)


def test_step_count_table(graph17):
    sc = step_counts(graph17)
    assert [s.branchings for s in sc] == BRANCHINGS
    assert [s.mergings for s in sc] == MERGINGS


def test_merging_identity(graph17):
    sc = step_counts(graph17)
    for t in range(len(sc) - 1):
        assert sc[t].mergings == 2 * sc[t].branchings - sc[t + 1].branchings


def test_merging_sum_matches_in_degrees(graph17):
    total = sum(s.mergings for s in step_counts(graph17))
    extra = sum(len(graph17.in_edges(i)) - 1 for i in range(len(graph17)) if graph17.layers[i] > 0)
    extra += sum(len(graph17.in_edges(i)) for i in graph17.initials)
    assert total == extra


def test_branching_growth(graph17):
    for s in step_counts(graph17):
        if 8 <= s.step <= 17:
            approx = 2 ** (s.step - 1) - 2 ** (s.step - 5)
            assert abs(s.branchings - approx) / approx < 0.05


def test_reached_from_zero(affine_rule):
    rs = reached_numbers(affine_rule, 0, 8)
    prefix = [0, 1, 3, 4, 7, 9, 10, 13, 15, 19, 21, 22, 27, 28, 31, 39, 40, 43, 45, 46, 55, 57, 58, 63, 64]
    assert list(rs.values[:25]) == prefix
    assert rs.complete_below is not None and rs.complete_below >= 64


def test_reached_below_agrees_with_graph(affine_rule):
    rs = reached_numbers(affine_rule, 0, 14)
    below = reached_below(affine_rule, 0, rs.complete_below)
    assert list(below.values) == [v for v in rs.values if v <= rs.complete_below]


def test_reach_statistics_fits(affine_rule):
    rs = reached_below(affine_rule, 0, 10**7)
    assert abs(rs.density_slope() - (-0.3)) <= 0.1
    assert abs(rs.max_gap_coefficient() - 0.17) <= 0.05
    st = reach_statistics(rs)
    assert st["count"] == len(rs.values)
    assert np.all(rs.differences() > 0)
    assert np.all(np.diff(rs.running_max_gap()) >= 0)
    assert rs.gap1_distances().size > 0


def test_reached_below_needs_increasing_rule():
    with pytest.raises(RuleError):
        reached_below(parse_rule("n -> {n+1, floor(n/2)}"), 0, 100)


def test_loop_words_for_26815(graph17):
    loops = [l for l in extract_loops(graph17) if l.merge_value == 26815]
    assert len(loops) == 1
    (l,) = loops
    assert l.branch_value == 1
    assert {l.word_a, l.word_b} == {(1, 1, 1, 2, 2, 2, 1, 1, 1, 1, 1, 1), (2, 2, 1, 2, 1, 2, 2, 1, 2, 2)}
    assert compose_branch_word(graph17.rule, l.word_a, 1) == 26815


def test_quoted_word_pair_is_an_identity_for_2191(affine_rule):
    # "223232222" and "3333233" in multiplier letters, read first letter first
    wa = tuple(1 if c == "2" else 2 for c in "223232222")
    wb = tuple(1 if c == "2" else 2 for c in "3333233")
    assert compose_branch_word(affine_rule, wa, 1) == compose_branch_word(affine_rule, wb, 1) == 2191


def test_loops_replay(graph17):
    for l in extract_loops(build(graph17.rule, [1], 13)):
        a = compose_branch_word(graph17.rule, l.word_a, l.branch_value)
        b = compose_branch_word(graph17.rule, l.word_b, l.branch_value)
        assert a == b == l.merge_value


@pytest.mark.parametrize("init", [1, 3, 5])
def test_pentagon_loops(init):
    g = build(parse_rule("n -> {2n, n+1}"), [init], 9)
    loops = extract_loops(g)
    assert loops
    pentagon = [l for l in loops if (l.word_a, l.word_b) == ((1, 2, 2), (2, 1))]
    others = [l for l in loops if l not in pentagon]
    assert len(pentagon) > len(others)
    # the only other shape is the identity 2n = n + n
    for l in others:
        assert (l.word_a, l.word_b) == ((1,), (2,) * l.branch_value)


def test_triangle_loops():
    g = build(parse_rule("n -> {n+1, n+2}"), [1], 8)
    loops = extract_loops(g)
    assert loops and all((l.word_a, l.word_b) == ((1, 1), (2,)) for l in loops)


@pytest.mark.parametrize("abcd, cls", [
    ((1, 1, 1, 2), "ribbon"),
    ((2, 1, 3, 2), "simple-grid"),
    ((2, 0, 2, 1), "simple-tree"),
    ((2, 1, 3, 1), "irregular"),
    ((2, 0, 1, 1), "simple-web"),
    ((2, 0, 3, 0), "simple-grid"),
    ((2, 0, 4, 0), "ladder"),
])
def test_classification(abcd, cls):
    assert classify_affine_rule(*abcd) == cls


def test_classification_rejects_identical():
    with pytest.raises(ValueError):
        classify_affine_rule(2, 1, 2, 1)


def test_grid_predictions_hold_structurally():
    checked = 0
    for a in range(1, 7):
        for b in range(0, 4):
            for c in range(a, 7):
                for d in range(0, 4):
                    if (a, b) == (c, d) or a == c == 1:
                        continue
                    cls = classify_affine_rule(a, b, c, d)
                    if cls == "simple-grid":
                        assert grid_structure_holds(a, b, c, d), (a, b, c, d)
                        checked += 1
                    elif cls == "ladder":
                        assert not grid_structure_holds(a, b, c, d), (a, b, c, d)
    assert checked >= 5
    assert not grid_structure_holds(2, 1, 3, 1)


@pytest.mark.parametrize("abcd", [(2, 0, 4, 0), (2, 0, 8, 0), (1, 0, 2, 0), (2, 1, 4, 3), (3, 0, 9, 0)])
def test_dependent_multipliers_give_ladders(abcd):
    assert classify_affine_rule(*abcd) == "ladder"


@pytest.mark.parametrize("text", ["n -> {n+2, n+5}", "n -> {2n, 3n}", "n -> {2n, n+3}", "n -> {2n, 3n, n+1}"])
def test_confluent_families_merge(text):
    rep = confluence_probe(parse_rule(text), 1, 4, 12, max_pairs=15)
    assert rep.results and rep.open == 0


def test_inverse_collatz_pairs_merge_within_13():
    rep = confluence_probe(parse_rule(INVERSE), 1, 20, 13, max_pairs=10)
    assert len(rep.results) == 10
    assert all(r.merged and r.steps <= 13 for _, r in rep.results)


def test_probe_never_claims_non_confluence(affine_rule):
    rep = confluence_probe(affine_rule, 1, 3, 10, residue_filter="auto")
    d = rep.to_dict()
    assert d["open"] >= 1
    assert {p["outcome"] for p in d["pairs"]} <= {"merged", "not-merged-within"}
    assert rep.trend_ratio is None or rep.trend_ratio >= 0
