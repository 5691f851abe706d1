"""Bilateral search for the re-merging of a branch pair.

Two engines give the same answers:

* the lockstep engine grows both reach sets one layer at a time and works for
  any integer rule;
* the residue-filtered engine (affine rules with increasing branches only)
  enumerates each side depth-first in numpy chunks and keeps only values whose
  residue mod k can be a merge point for this pair.  It is what makes horizons
  near 30 affordable.

A merge is a value reachable from both u and v.  Among all common values the
reported one minimises ``(max(du, dv), value)`` where du, dv are the minimal
numbers of steps from each side; ``steps`` is that maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .residue import _affine_branches, _lcm_multipliers, pair_merge_residues, reachable_residues
from .rules import Rule, RuleError, apply_rule, compose_branch_word

__all__ = ["MergeSearchResult", "merge_search", "pair_acceptors", "DEFAULT_VALUE_CAP", "AUTO_FILTER_K"]

DEFAULT_VALUE_CAP = 10**12
# 144 * 36; residues are lifted a further factor L (lcm of multipliers).
AUTO_FILTER_K = 5184
_CHUNK = 1 << 20
_INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class MergeSearchResult:
    pair: tuple
    merged: bool
    value: Optional[int]
    steps: int  # merge steps if merged, else the horizon searched
    steps_u: Optional[int] = None
    steps_v: Optional[int] = None
    word_u: tuple = ()
    word_v: tuple = ()
    nodes_explored: int = 0
    value_cap: Optional[int] = None
    lower_bound: bool = False  # True when the value cap dropped something
    engine: str = "lockstep"

    def to_dict(self) -> dict:
        out = {
            "pair": [str(self.pair[0]), str(self.pair[1])],
            "outcome": "merged" if self.merged else "not-merged-within",
            "value": None if self.value is None else str(self.value),
            "steps": self.steps,
            "explored": self.nodes_explored,
        }
        if self.merged:
            out["words"] = ["".join(map(str, self.word_u)), "".join(map(str, self.word_v))]
        else:
            out["value_cap"] = None if self.value_cap is None else str(self.value_cap)
            out["lower_bound"] = self.lower_bound
        return out


def _word(parent: dict, x) -> tuple:
    word = []
    while True:
        p = parent[x]
        if p is None:
            return tuple(reversed(word))
        x, b = p
        word.append(b)


def _verify(rule: Rule, start, word, value) -> None:
    try:
        got = compose_branch_word(rule, word, start)
        ok = got == value
    except RuleError:
        # Multi-output branches: check the path step by step instead.
        frontier = {start}
        for b in word:
            frontier = {w for x in frontier for i, w in apply_rule(rule, x) if i == b}
        ok = value in frontier
    if not ok:
        raise AssertionError(f"replay of word {word} from {start} does not give {value}")


def _increasing(rule: Rule) -> bool:
    try:
        brs = _affine_branches(rule)
    except RuleError:
        return False
    return all(a >= 1 and b >= 0 and (a, b) != (1, 0) for a, b in brs)


def _lockstep(rule, u, v, max_steps, value_cap):
    du, dv = {u: 0}, {v: 0}
    pu, pv = {u: None}, {v: None}
    fu, fv = [u], [v]
    explored = 2
    dropped = False
    for s in range(1, max_steps + 1):
        new_sides = []
        for depth, parent, frontier in ((du, pu, fu), (dv, pv, fv)):
            nxt = []
            for x in frontier:
                for b, y in apply_rule(rule, x):
                    if y in depth:
                        continue
                    if value_cap is not None and y > value_cap:
                        dropped = True
                        continue
                    depth[y] = s
                    parent[y] = (x, b)
                    nxt.append(y)
            explored += len(nxt)
            new_sides.append(nxt)
        fu, fv = new_sides
        common = [y for y in fu if y in dv] + [y for y in fv if y in du]
        if common:
            m = min(common)
            return du, dv, pu, pv, m, s, explored, dropped
        if not fu and not fv:
            break
    return du, dv, pu, pv, None, max_steps, explored, dropped


def pair_acceptors(rule: Rule, u: int, v: int, k: int, lift: Optional[int] = None) -> set:
    """Residues mod k where a merge of the branch pair (u, v) can occur.

    The last step into a first merge uses two different branches applied to
    some x reachable from one side and y from the other, so the merge value
    solves ``a_i x + b_i = a_j y + b_j``; reachability is tested mod
    ``k * lift`` (default lift: lcm of the multipliers).
    """
    brs = _affine_branches(rule)
    K = k * (lift if lift is not None else _lcm_multipliers(brs))
    ru = reachable_residues(brs, K, u)
    rv = reachable_residues(brs, K, v)
    return pair_merge_residues(brs, k, K, ru, rv) | pair_merge_residues(brs, k, K, rv, ru)


def _enumerate_filtered(brs, start: int, horizon: int, k: int, mask: np.ndarray):
    """All descendants of start within ``horizon`` steps whose residue mod k
    passes ``mask``; returns (sorted unique values, minimal depths, count)."""
    A = np.array([a for a, _ in brs], dtype=np.int64)
    B = np.array([b for _, b in brs], dtype=np.int64)
    vals, deps = [], []
    stack = [(np.array([start], dtype=np.int64), 0)]
    total = 0
    while stack:
        F, d = stack.pop()
        total += F.size
        sel = mask[F % k]
        if sel.any():
            vals.append(F[sel])
            deps.append(np.full(int(sel.sum()), d, dtype=np.int16))
        if d == horizon:
            continue
        N = (A[:, None] * F[None, :] + B[:, None]).ravel()
        for i in range(0, N.size, _CHUNK):
            stack.append((N[i:i + _CHUNK], d + 1))
    if not vals:
        return np.empty(0, np.int64), np.empty(0, np.int16), total
    v = np.concatenate(vals)
    dd = np.concatenate(deps)
    order = np.lexsort((dd, v))
    v, dd = v[order], dd[order]
    first = np.ones(v.size, dtype=bool)
    first[1:] = v[1:] != v[:-1]
    return v[first], dd[first], total


def _inverse_depth(brs, target: int, source: int, horizon: int) -> Optional[int]:
    """Fewest steps from source to target (increasing affine rule), by
    walking target backwards through exact preimages."""
    level = {target}
    for d in range(horizon + 1):
        if source in level:
            return d
        nxt = set()
        for y in level:
            for a, b in brs:
                if (y - b) % a == 0:
                    x = (y - b) // a
                    if x >= source:
                        nxt.add(x)
        level = nxt
        if not level:
            return None
    return None


def _backward_word(brs, start: int, value: int, steps: int) -> tuple:
    """A branch word of exactly ``steps`` letters taking start to value."""
    def go(y, left):
        if left == 0:
            return () if y == start else None
        for i, (a, b) in enumerate(brs, 1):
            if (y - b) % a == 0:
                x = (y - b) // a
                if x >= start:
                    w = go(x, left - 1)
                    if w is not None:
                        return w + (i,)
        return None

    w = go(value, steps)
    if w is None:
        raise AssertionError(f"no word of length {steps} from {start} to {value}")
    return w


def _filtered(rule, u, v, max_steps, k, acceptors):
    brs = _affine_branches(rule)
    amax = max(a for a, _ in brs)
    bmax = max(b for _, b in brs)
    if (max(u, v) + bmax) * amax**max_steps >= _INT64_SAFE:
        raise RuleError("values would overflow int64 at this horizon; use the lockstep engine")
    mask = np.zeros(k, dtype=bool)
    mask[sorted(acceptors)] = True
    au, du, nu = _enumerate_filtered(brs, u, max_steps, k, mask)
    av, dv, nv = _enumerate_filtered(brs, v, max_steps, k, mask)
    common, iu, iv = np.intersect1d(au, av, assume_unique=True, return_indices=True)
    cands = [(max(int(du[a]), int(dv[b])), int(m), int(du[a]), int(dv[b])) for m, a, b in zip(common, iu, iv)]
    # One endpoint may itself be the merge (u in D(v) or v in D(u)); the
    # residue filter says nothing about those.
    d = _inverse_depth(brs, u, v, max_steps)
    if d is not None:
        cands.append((d, u, 0, d))
    d = _inverse_depth(brs, v, u, max_steps)
    if d is not None:
        cands.append((d, v, d, 0))
    explored = nu + nv
    if not cands:
        return None, explored
    steps, m, su, sv = min(cands)
    return (m, steps, su, sv, _backward_word(brs, u, m, su), _backward_word(brs, v, m, sv)), explored


def merge_search(
    rule: Rule,
    u: int,
    v: int,
    max_steps: int,
    value_cap: Optional[int] = DEFAULT_VALUE_CAP,
    residue_filter=None,
) -> MergeSearchResult:
    """Search for a common descendant of u and v within ``max_steps`` per side.

    ``residue_filter`` is None (lockstep engine), ``"auto"`` (pair-specific
    acceptors mod 5184) or ``(k, acceptors)``.  An explicit acceptor set must
    contain every residue a merge of this pair can have, otherwise merges
    are missed.  The filtered engine ignores ``value_cap``: it is exact.
    """
    if u == v:
        raise ValueError("branch pair members must differ")
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    pair = (u, v)
    if residue_filter is not None:
        if not _increasing(rule):
            raise RuleError("the residue filter needs affine branches a*n+b with a >= 1, b >= 0")
        if u < 0 or v < 0:
            raise RuleError("the residue filter needs nonnegative values")
        if residue_filter == "auto":
            k = AUTO_FILTER_K
            acc = pair_acceptors(rule, u, v, k)
        else:
            k, acc = residue_filter
            acc = set(acc)
        found, explored = _filtered(rule, u, v, max_steps, k, acc)
        if found is None:
            return MergeSearchResult(pair, False, None, max_steps, nodes_explored=explored, engine="residue")
        m, steps, su, sv, wu, wv = found
        _verify(rule, u, wu, m)
        _verify(rule, v, wv, m)
        return MergeSearchResult(pair, True, m, steps, su, sv, wu, wv, explored, engine="residue")

    du, dv, pu, pv, m, steps, explored, dropped = _lockstep(rule, u, v, max_steps, value_cap)
    if m is None:
        return MergeSearchResult(pair, False, None, steps, nodes_explored=explored, value_cap=value_cap, lower_bound=dropped)
    wu, wv = _word(pu, m), _word(pv, m)
    _verify(rule, u, wu, m)
    _verify(rule, v, wv, m)
    return MergeSearchResult(pair, True, m, steps, du[m], dv[m], wu, wv, explored, value_cap, dropped)
