"""Per-layer views of a multiway graph: branchial graphs and value
distributions."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy import stats

from .graph import MultiwayGraph, path_weights

__all__ = [
    "BranchialGraph",
    "branchial_graph",
    "layer_value_distribution",
    "total_variation",
    "branchial_vs_numeric",
    "rank_correlation",
]


@dataclass(frozen=True)
class BranchialGraph:
    layer: int
    nodes: tuple  # node ids of the layer, ascending
    edges: dict  # (u, v) with u < v -> number of shared ancestors

    def neighbours(self) -> dict:
        nb = {u: set() for u in self.nodes}
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return nb

    def distances_from(self, src: int) -> dict:
        nb = self.neighbours()
        dist = {src: 0}
        queue = deque([src])
        while queue:
            x = queue.popleft()
            for y in nb[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist


def _ancestors(g: MultiwayGraph, node: int, layer: int, depth: int) -> frozenset:
    """Nodes reached from ``node`` by following back edges created at steps
    layer, layer-1, ..., layer-depth+1."""
    cur = {node}
    for k in range(depth):
        step = layer - k
        cur = {e.src for x in cur for e in g.in_edges(x) if e.step == step}
    return frozenset(cur)


def branchial_graph(g: MultiwayGraph, layer: int, depth: int = 1) -> BranchialGraph:
    """Join two nodes of ``layer`` when they share an ancestor ``depth`` steps
    back; the edge weight counts the shared ancestors."""
    if not 1 <= layer <= g.steps_built:
        raise ValueError(f"layer must be in 1..{g.steps_built}")
    if not 1 <= depth <= layer:
        raise ValueError("depth must be in 1..layer")
    nodes = tuple(g.layer_nodes(layer))
    anc = {u: _ancestors(g, u, layer, depth) for u in nodes}
    by_parent: dict = {}
    for u in nodes:
        for p in anc[u]:
            by_parent.setdefault(p, []).append(u)
    edges: dict = {}
    for kids in by_parent.values():
        for u, v in combinations(sorted(kids), 2):
            edges[(u, v)] = edges.get((u, v), 0) + 1
    return BranchialGraph(layer, nodes, dict(sorted(edges.items())))


def _layer_values(g: MultiwayGraph, layer: int, log: bool) -> np.ndarray:
    vals = [g.values[i] for i in g.layer_nodes(layer)]
    if log:
        if any(v <= 0 for v in vals):
            raise ValueError("log values need positive integers")
        return np.array([math.log(v) for v in vals])
    return np.array([float(v) for v in vals])


def layer_value_distribution(g: MultiwayGraph, layer: int, log: bool = True, weighted: bool = False) -> dict:
    """Normalised histogram of the (log) values first reached at ``layer``.

    Bins use the Freedman-Diaconis width of the unweighted values.  With
    ``weighted`` every value counts with its path weight.
    """
    if g.rule is not None and g.rule.domain != "int":
        raise ValueError("value distributions need an integer graph")
    x = _layer_values(g, layer, log)
    if x.size == 0:
        raise ValueError(f"layer {layer} is empty")
    w = None
    if weighted:
        pw = path_weights(g)
        w = np.array([float(pw[i]) for i in g.layer_nodes(layer)])
    edges = np.histogram_bin_edges(x, bins="fd")
    counts, edges = np.histogram(x, bins=edges, weights=w)
    total = counts.sum()
    return {
        "layer": layer,
        "log": log,
        "weighted": weighted,
        "bin_width": float(edges[1] - edges[0]),
        "edges": edges.tolist(),
        "fractions": (counts / total).tolist(),
        "n": int(x.size),
    }


def total_variation(a: np.ndarray, b: np.ndarray, bins: Optional[int] = None) -> float:
    """Total-variation distance of two samples binned on common edges."""
    both = np.concatenate([a, b])
    edges = np.histogram_bin_edges(both, bins=bins if bins is not None else "fd")
    ha, _ = np.histogram(a, bins=edges)
    hb, _ = np.histogram(b, bins=edges)
    return float(0.5 * np.abs(ha / ha.sum() - hb / hb.sum()).sum())


def branchial_vs_numeric(g: MultiwayGraph, layer: int, full: bool = False, depth: int = 1) -> list:
    """(branchial distance, |log u - log v|) per branchial edge, or for every
    connected pair of the layer when ``full``.  Sorted for reproducibility."""
    bg = branchial_graph(g, layer, depth)
    logv = {u: math.log(g.values[u]) for u in bg.nodes if g.values[u] > 0}
    if len(logv) != len(bg.nodes):
        raise ValueError("log distances need positive integers")
    out = []
    if not full:
        for u, v in bg.edges:
            out.append((1, abs(logv[u] - logv[v])))
    else:
        for u in bg.nodes:
            for v, d in bg.distances_from(u).items():
                if v > u:
                    out.append((d, abs(logv[u] - logv[v])))
    out.sort()
    return out


def rank_correlation(pairs) -> Optional[float]:
    """Spearman correlation of branchial and numeric distances."""
    if len(pairs) < 3:
        return None
    a = np.array([p[0] for p in pairs], dtype=float)
    b = np.array([p[1] for p in pairs], dtype=float)
    if np.all(a == a[0]) or np.all(b == b[0]):
        return None
    return float(stats.spearmanr(a, b).statistic)
