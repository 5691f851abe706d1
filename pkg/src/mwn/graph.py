"""Layered multiway graph construction and structural transforms."""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .rules import Rule, apply_rule
from .values import Value, domain_of, sort_key

__all__ = [
    "Node",
    "Edge",
    "StepRecord",
    "MultiwayGraph",
    "GraphCycleError",
    "build",
    "prune_loose_ends",
    "transitive_reduction",
    "layer_stats",
    "path_weights",
]

Node = namedtuple("Node", "id value layer")
Edge = namedtuple("Edge", "src dst branch step")


@dataclass(frozen=True)
class StepRecord:
    """What happened while expanding one layer.

    ``produced`` counts rule outputs with multiplicity, ``branching_sources``
    the expanded nodes that produced two or more outputs.
    """

    step: int
    expanded: int
    produced: int
    new_nodes: int
    branching_sources: int
    max_value: Optional[int]
    min_value: Optional[int]


class GraphCycleError(ValueError):
    pass


class MultiwayGraph:
    """Immutable multiway graph.  Node ids are positions in ``values``."""

    def __init__(self, rule, values, layers, edges, initials, steps_built, truncated, step_log=()):
        self.rule = rule
        self.values = tuple(values)
        self.layers = tuple(layers)
        self.edges = tuple(edges)
        self.initials = tuple(initials)
        self.steps_built = steps_built
        self.truncated = truncated
        self.step_log = tuple(step_log)
        self._index = None
        self._out = None
        self._in = None

    def __len__(self) -> int:
        return len(self.values)

    @property
    def nodes(self) -> list:
        return [Node(i, v, l) for i, (v, l) in enumerate(zip(self.values, self.layers))]

    def id_of(self, v: Value) -> Optional[int]:
        if self._index is None:
            self._index = {val: i for i, val in enumerate(self.values)}
        return self._index.get(v)

    def __contains__(self, v) -> bool:
        return self.id_of(v) is not None

    def out_edges(self, i: int) -> list:
        if self._out is None:
            self._out = [[] for _ in self.values]
            for e in self.edges:
                self._out[e.src].append(e)
        return self._out[i]

    def in_edges(self, i: int) -> list:
        if self._in is None:
            self._in = [[] for _ in self.values]
            for e in self.edges:
                self._in[e.dst].append(e)
        return self._in[i]

    def layer_nodes(self, t: int) -> list:
        return [i for i, l in enumerate(self.layers) if l == t]

    def subgraph(self, keep: Iterable[int]) -> "MultiwayGraph":
        """Induced subgraph; ids are renumbered keeping their relative order."""
        keep = sorted(set(keep))
        remap = {old: new for new, old in enumerate(keep)}
        edges = [
            Edge(remap[e.src], remap[e.dst], e.branch, e.step)
            for e in self.edges
            if e.src in remap and e.dst in remap
        ]
        return MultiwayGraph(
            self.rule,
            [self.values[i] for i in keep],
            [self.layers[i] for i in keep],
            edges,
            [remap[i] for i in self.initials if i in remap],
            self.steps_built,
            self.truncated,
            self.step_log,
        )

    def with_edges(self, edges) -> "MultiwayGraph":
        return MultiwayGraph(
            self.rule, self.values, self.layers, edges, self.initials,
            self.steps_built, self.truncated, self.step_log,
        )


def build(
    rule: Rule,
    initials: Sequence[Value],
    steps: int,
    node_budget: Optional[int] = None,
) -> MultiwayGraph:
    """Expand ``initials`` for ``steps`` layers, merging equal values.

    Every node is expanded exactly once, at step ``layer + 1``.  Values reached
    again only gain an in-edge.  When adding a layer would exceed
    ``node_budget`` the layer is dropped and the graph is flagged truncated.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if len(set(initials)) != len(initials):
        raise ValueError("initial values must be distinct")
    for v in initials:
        if domain_of(v) != rule.domain:
            raise ValueError(f"initial value {v!r} is not in the {rule.domain} domain")
    values = sorted(initials, key=sort_key)
    if node_budget is not None and len(values) > node_budget:
        raise ValueError("node_budget is smaller than the number of initial values")
    index = {v: i for i, v in enumerate(values)}
    layers = [0] * len(values)
    edges: list = []
    log: list = []
    frontier = list(range(len(values)))
    truncated = False
    built = 0
    is_int = rule.domain == "int"
    for t in range(1, steps + 1):
        pending: dict = {}
        raw = []  # (src, dst value, branch)
        produced = branching = 0
        hi = lo = None
        for src in frontier:
            outs = apply_rule(rule, values[src])
            produced += len(outs)
            if len(outs) >= 2:
                branching += 1
            for b, w in outs:
                raw.append((src, w, b))
                if w not in index:
                    pending[w] = None
                if is_int:
                    hi = w if hi is None or w > hi else hi
                    lo = w if lo is None or w < lo else lo
        if node_budget is not None and len(values) + len(pending) > node_budget:
            truncated = True
            break
        new_vals = sorted(pending, key=sort_key)
        start = len(values)
        for k, w in enumerate(new_vals):
            index[w] = start + k
        values.extend(new_vals)
        layers.extend([t] * len(new_vals))
        seen = set()
        for src, w, b in raw:
            key = (src, index[w], b)
            if key not in seen:
                seen.add(key)
                edges.append(Edge(src, index[w], b, t))
        log.append(StepRecord(t, len(frontier), produced, len(new_vals), branching, hi, lo))
        frontier = list(range(start, len(values)))
        built = t
    return MultiwayGraph(rule, values, layers, edges, range(len(initials)), built, truncated, log)


def _undirected_neighbours(g: MultiwayGraph) -> list[set]:
    nb = [set() for _ in g.values]
    for e in g.edges:
        nb[e.src].add(e.dst)
        nb[e.dst].add(e.src)
    return nb


def prune_loose_ends(g: MultiwayGraph) -> MultiwayGraph:
    """Repeatedly remove nodes of undirected degree <= 1 (the 2-core).

    Degree counts distinct neighbours; a self-loop counts as two, since it is
    a cycle on its own.
    """
    nb = _undirected_neighbours(g)
    deg = [len(s) + (1 if i in s else 0) for i, s in enumerate(nb)]
    alive = [True] * len(nb)
    stack = [i for i, d in enumerate(deg) if d <= 1]
    while stack:
        i = stack.pop()
        if not alive[i]:
            continue
        alive[i] = False
        for j in nb[i]:
            if j != i and alive[j]:
                deg[j] -= 1
                if deg[j] <= 1:
                    stack.append(j)
    return g.subgraph(i for i, a in enumerate(alive) if a)


def _topological_order(g: MultiwayGraph) -> list[int]:
    indeg = [0] * len(g)
    for e in g.edges:
        indeg[e.dst] += 1
    order = [i for i, d in enumerate(indeg) if d == 0]
    k = 0
    while k < len(order):
        i = order[k]
        k += 1
        for e in g.out_edges(i):
            indeg[e.dst] -= 1
            if indeg[e.dst] == 0:
                order.append(e.dst)
    if len(order) != len(g):
        raise GraphCycleError("graph has a directed cycle")
    return order


def transitive_reduction(g: MultiwayGraph) -> MultiwayGraph:
    """Drop every edge ``u -> v`` for which another path ``u ~> v`` exists.

    Parallel edges between the same pair keep only the lowest branch index.
    """
    order = _topological_order(g)
    # Descendant sets as int bitmasks, filled in reverse topological order.
    desc = [0] * len(g)
    for u in reversed(order):
        mask = 0
        for e in g.out_edges(u):
            if e.dst != u:
                mask |= desc[e.dst] | (1 << e.dst)
        desc[u] = mask
    kept = []
    for u in range(len(g)):
        children = {}
        for e in g.out_edges(u):
            if e.dst not in children or e.branch < children[e.dst].branch:
                children[e.dst] = e
        via = 0
        for c in children:
            via |= desc[c]
        kept.extend(e for c, e in children.items() if not (via >> c) & 1)
    kept.sort(key=lambda e: (e.step, e.src, e.dst, e.branch))
    return g.with_edges(kept)


def layer_stats(g: MultiwayGraph) -> list[StepRecord]:
    """Per-step records; entry 0 describes the initial layer."""
    init_vals = [g.values[i] for i in g.initials]
    if g.rule is not None and g.rule.domain == "int" and init_vals:
        hi, lo = max(init_vals), min(init_vals)
    else:
        hi = lo = None
    return [StepRecord(0, 0, 0, len(init_vals), 0, hi, lo), *g.step_log]


def path_weights(g: MultiwayGraph) -> list[int]:
    """Number of distinct directed paths from the initial nodes to each node."""
    order = _topological_order(g)
    w = [0] * len(g)
    for i in g.initials:
        w[i] = 1
    for u in order:
        for e in g.out_edges(u):
            w[e.dst] += w[u]
    return w
