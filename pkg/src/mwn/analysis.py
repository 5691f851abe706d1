"""Branchings, mergers, loops and reach statistics of multiway graphs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .graph import MultiwayGraph, build, layer_stats
from .merge_search import DEFAULT_VALUE_CAP, MergeSearchResult, merge_search
from .rules import AffineInt, Rule, RuleError, apply_rule
from .values import sort_key

__all__ = [
    "BranchEvent",
    "MergeEvent",
    "StepCount",
    "Loop",
    "ReachStats",
    "ProbeReport",
    "creation_order",
    "enumerate_branchings",
    "enumerate_mergers",
    "step_counts",
    "reached_numbers",
    "reached_below",
    "reach_statistics",
    "extract_loops",
    "classify_affine_rule",
    "grid_structure_holds",
    "confluence_probe",
]


@dataclass(frozen=True)
class BranchEvent:
    parent: object
    children: tuple  # (branch, value) in branch order
    step: int

    @property
    def values(self) -> tuple:
        return tuple(v for _, v in self.children)


@dataclass(frozen=True)
class MergeEvent:
    value: object
    steps: tuple  # creation step of each in-edge, ascending
    incoming: tuple  # (src value, branch, step)

    @property
    def in_degree(self) -> int:
        return len(self.incoming)


@dataclass(frozen=True)
class StepCount:
    step: int
    branchings: int
    mergings: int


def creation_order(g: MultiwayGraph) -> list[int]:
    """Node ids in the order the layered expansion first produces them.

    Within a layer a node ranks by its earliest producer, then by branch:
    children of 3 come before children of 4, the 3n+1 child after the 2n+1
    child.  Initials keep their id order.
    """
    rank = {i: (k,) for k, i in enumerate(sorted(g.initials))}
    order = sorted(g.initials)
    for t in range(1, g.steps_built + 1):
        best = {}
        for i in g.layer_nodes(t):
            best[i] = min((rank[e.src], e.branch) for e in g.in_edges(i) if e.step == t and e.src in rank)
        layer = sorted(best, key=lambda i: (best[i], i))
        for k, i in enumerate(layer):
            rank[i] = (len(order) + k,)
        order.extend(layer)
    return order


def enumerate_branchings(g: MultiwayGraph) -> list[BranchEvent]:
    """One event per expanded node with two or more outgoing edges, in the
    order the parents were created (see ``creation_order``).

    Duplicate children (two branches giving the same value) count, so
    ``1 -> {2, 2, 3}`` is a branching with three children.
    """
    events = []
    for i in creation_order(g):
        outs = g.out_edges(i)
        if len(outs) >= 2:
            ch = tuple(sorted(((e.branch, g.values[e.dst]) for e in outs), key=lambda c: (c[0], sort_key(c[1]))))
            events.append(BranchEvent(g.values[i], ch, outs[0].step))
    return events


def enumerate_mergers(g: MultiwayGraph) -> list[MergeEvent]:
    """Nodes of in-degree >= 2, sorted by value."""
    out = []
    for i in range(len(g)):
        ins = g.in_edges(i)
        if len(ins) >= 2:
            inc = tuple(sorted(((g.values[e.src], e.branch, e.step) for e in ins), key=lambda t: (t[2], sort_key(t[0]), t[1])))
            out.append(MergeEvent(g.values[i], tuple(t[2] for t in inc), inc))
    out.sort(key=lambda m: sort_key(m.value))
    return out


def step_counts(g: MultiwayGraph) -> list[StepCount]:
    """Per step: expansions with two or more outputs, and produced slots that
    landed on an existing value (produced - new)."""
    return [StepCount(r.step, r.branching_sources, r.produced - r.new_nodes) for r in g.step_log]


# -- reached numbers --------------------------------------------------------

def _increasing_branches(rule: Rule, lo: int) -> bool:
    """True when every branch maps n >= lo to something larger than n."""
    if not rule.is_affine_int:
        return False
    for br in rule.branches:
        if br.a < 1 or (br.a - 1) * lo + br.b <= 0:
            return False
    return True


@dataclass(frozen=True)
class ReachStats:
    values: tuple
    complete_below: Optional[int]  # every reachable value <= this is listed

    def differences(self) -> np.ndarray:
        return np.diff(np.asarray(self.values, dtype=object)).astype(np.int64)

    def density(self) -> tuple[np.ndarray, np.ndarray]:
        """(m, m / n_m) for the m-th value n_m, skipping n_m = 0."""
        vals = np.asarray(self.values, dtype=np.float64)
        m = np.arange(1, vals.size + 1, dtype=np.float64)
        keep = vals > 0
        return m[keep], m[keep] / vals[keep]

    def density_slope(self, m_min: int = 100) -> float:
        """Slope of log(density) against log(m), for m >= m_min."""
        m, dens = self.density()
        sel = m >= m_min
        return float(np.polyfit(np.log(m[sel]), np.log(dens[sel]), 1)[0])

    def running_max_gap(self) -> np.ndarray:
        return np.maximum.accumulate(self.differences())

    def max_gap_coefficient(self) -> float:
        """Least-squares c in ``running max gap ~ c * m`` (line through 0)."""
        gaps = self.running_max_gap().astype(np.float64)
        m = np.arange(1, gaps.size + 1, dtype=np.float64)
        return float(m @ gaps / (m @ m))

    def gap1_distances(self) -> np.ndarray:
        """Index distances between successive differences equal to 1."""
        idx = np.flatnonzero(self.differences() == 1)
        return np.diff(idx)


def reached_numbers(rule: Rule, init, steps: int) -> ReachStats:
    """All values in the graph built for ``steps`` steps, sorted."""
    inits = list(init) if isinstance(init, (list, tuple)) else [init]
    g = build(rule, inits, steps)
    vals = tuple(sorted(g.values))
    complete = None
    if _increasing_branches(rule, min(inits)):
        last = [g.values[i] for i in g.layer_nodes(g.steps_built)]
        # Anything unreached descends from the last layer, so exceeds its min.
        complete = min(last) if last else max(vals)
    return ReachStats(vals, complete)


def reached_below(rule: Rule, init: int, bound: int) -> ReachStats:
    """Every value <= bound reachable from ``init`` (increasing rules only)."""
    if not _increasing_branches(rule, init):
        raise RuleError("value-bounded enumeration needs strictly increasing affine branches")
    brs = [(b.a, b.b) for b in rule.branches]
    seen = {init}
    stack = [init]
    while stack:
        x = stack.pop()
        for a, b in brs:
            y = a * x + b
            if y <= bound and y not in seen:
                seen.add(y)
                stack.append(y)
    return ReachStats(tuple(sorted(seen)), bound)


def reach_statistics(rs: ReachStats) -> dict:
    return {
        "count": len(rs.values),
        "complete_below": rs.complete_below,
        "density_slope": rs.density_slope() if len(rs.values) > 200 else None,
        "max_gap_coefficient": rs.max_gap_coefficient() if len(rs.values) > 1 else None,
    }


# -- loops ------------------------------------------------------------------

@dataclass(frozen=True)
class Loop:
    branch_value: object
    word_a: tuple
    word_b: tuple
    merge_value: object


def _ancestors(g: MultiwayGraph, start: int) -> dict:
    """Backward BFS: node -> (distance, word from node to start)."""
    out = {start: (0, ())}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        d, w = out[x]
        for e in sorted(g.in_edges(x), key=lambda e: (e.src, e.branch)):
            if e.src not in out:
                out[e.src] = (d + 1, (e.branch,) + w)
                queue.append(e.src)
    return out


def extract_loops(g: MultiwayGraph) -> list[Loop]:
    """For every merger and every pair of its in-edges, the two branch words
    leading from their nearest common ancestor to the merger.

    The ancestor minimises (longer word, total length, value).  Word pairs
    are ordered lexicographically; words are in application order.
    """
    loops = []
    for m in enumerate_mergers(g):
        target = g.id_of(m.value)
        ins = sorted(g.in_edges(target), key=lambda e: (e.step, e.src, e.branch))
        cache = {}
        for e1, e2 in combinations(ins, 2):
            for e in (e1, e2):
                if e.src not in cache:
                    cache[e.src] = _ancestors(g, e.src)
            a1, a2 = cache[e1.src], cache[e2.src]
            common = a1.keys() & a2.keys()
            if not common:
                continue
            best = min(
                common,
                key=lambda c: (max(a1[c][0], a2[c][0]), a1[c][0] + a2[c][0], sort_key(g.values[c])),
            )
            w1 = a1[best][1] + (e1.branch,)
            w2 = a2[best][1] + (e2.branch,)
            w1, w2 = sorted((w1, w2))
            loops.append(Loop(g.values[best], w1, w2, m.value))
    return loops


# -- affine classification --------------------------------------------------

CLASSES = ("ribbon", "simple-web", "simple-grid", "ladder", "simple-tree", "irregular")


def _independent(a: int, c: int) -> bool:
    """True when no powers a^p = c^q (p, q >= 1) coincide."""
    a, c = abs(a), abs(c)
    if a < 2 or c < 2:
        return False
    while a != c:
        if a < c:
            a, c = c, a
        if a % c:
            return True
        a //= c
    return False


def classify_affine_rule(a: int, b: int, c: int, d: int) -> str:
    """Structural class of ``n -> {a n + b, c n + d}``.

    Commuting branches give a 2D grid when the multipliers are
    multiplicatively independent; otherwise the extra relation
    ``f^p = g^q`` folds the grid into a ladder.
    """
    if (a, b) == (c, d):
        raise ValueError("the two branches are identical")
    if a == 1 and c == 1:
        return "ribbon"
    if a == c and b != d and a > 1:
        return "simple-tree"
    # f(g(n)) = g(f(n)) for all n
    if a * d + b == c * b + d:
        return "simple-grid" if _independent(a, c) else "ladder"
    if (a == 1) != (c == 1):
        return "simple-web"
    return "irregular"


def grid_structure_holds(a: int, b: int, c: int, d: int, init: int = 1, steps: int = 6) -> bool:
    """Check on a built graph that the two branches close commuting squares
    and that layer t holds t+1 values (a 2D grid)."""
    rule = Rule.simple(AffineInt(a, b), AffineInt(c, d))
    g = build(rule, [init], steps)
    for t in range(steps + 1):
        if len(g.layer_nodes(t)) != t + 1:
            return False
    for i, x in enumerate(g.values):
        if g.layers[i] <= steps - 2:
            fg = a * (c * x + d) + b
            gf = c * (a * x + b) + d
            if fg != gf or fg not in g:
                return False
    return True


# -- confluence probing -----------------------------------------------------

@dataclass
class ProbeReport:
    results: list = field(default_factory=list)  # (step, MergeSearchResult)

    @property
    def merged(self) -> int:
        return sum(r.merged for _, r in self.results)

    @property
    def open(self) -> int:
        return sum(not r.merged for _, r in self.results)

    def counts_per_step(self) -> dict:
        out = {}
        for step, r in self.results:
            tot, mer = out.get(step, (0, 0))
            out[step] = (tot + 1, mer + r.merged)
        return out

    @property
    def trend_ratio(self) -> Optional[float]:
        """Open fraction at the last probed step over that at the first."""
        per = sorted(self.counts_per_step().items())
        if not per:
            return None
        (_, (t0, m0)), (_, (t1, m1)) = per[0], per[-1]
        first = (t0 - m0) / t0
        if first == 0:
            return None
        return ((t1 - m1) / t1) / first

    def to_dict(self) -> dict:
        return {
            "merged": self.merged,
            "open": self.open,
            "per_step": {str(k): {"pairs": t, "merged": m} for k, (t, m) in sorted(self.counts_per_step().items())},
            "trend_ratio": self.trend_ratio,
            "pairs": [dict(r.to_dict(), branch_step=s) for s, r in self.results],
        }


def confluence_probe(
    rule: Rule,
    init,
    steps: int,
    pair_steps: int,
    value_cap: Optional[int] = DEFAULT_VALUE_CAP,
    max_pairs: Optional[int] = None,
    residue_filter=None,
) -> ProbeReport:
    """Run merge_search on the branch pairs of the first ``steps`` steps.

    Pairs that stay apart are reported as open within the budget, never as
    non-confluent.  Duplicate children are already merged and are skipped.
    """
    inits = list(init) if isinstance(init, (list, tuple)) else [init]
    g = build(rule, inits, steps)
    report = ProbeReport()
    seen = set()
    for ev in enumerate_branchings(g):
        vals = sorted(set(ev.values), key=sort_key)
        for u, v in combinations(vals, 2):
            if (u, v) in seen:
                continue
            seen.add((u, v))
            report.results.append((ev.step, merge_search(rule, u, v, pair_steps, value_cap, residue_filter)))
            if max_pairs is not None and len(report.results) >= max_pairs:
                return report
    return report
