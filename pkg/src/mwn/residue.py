"""Residue automata: integer rules reduced mod k.

The mod-k image of an affine rule ``{a_i n + b_i}`` is a deterministic
automaton on ``0..k-1`` with one transition per branch.  Merge-feasible
residues ("acceptors") are derived by lifting to a finer modulus, see
:func:`merger_residues`.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from functools import reduce
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

from .rules import AffineInt, Rule, RuleError

__all__ = [
    "ResidueAutomaton",
    "build_residue_automaton",
    "drop_transients",
    "reachable_residues",
    "pair_merge_residues",
    "merger_residues",
    "accepted_words",
    "accepted_count",
    "accepted_fraction",
    "remainder_via_graph",
    "automaton_to_dot",
    "automaton_to_json",
]

# Largest lifted modulus merger_residues will enumerate.
LIFT_CAP = 2_000_000


def _affine_branches(rule: Rule) -> tuple:
    if rule.domain != "int" or len(rule.cases) != 1 or rule.cases[0].guard.kind != "always":
        raise RuleError("residue automata need an unguarded integer rule")
    brs = rule.cases[0].branches
    if not brs or not all(isinstance(b, AffineInt) for b in brs):
        raise RuleError("residue automata need affine branches a*n+b")
    return tuple((b.a, b.b) for b in brs)


@dataclass(frozen=True)
class ResidueAutomaton:
    """States ``states`` (a subset of ``0..k-1``); ``transitions[s][i]`` is the
    target of branch ``i+1`` from ``s``, or None if it leaves ``states``."""

    k: int
    branches: tuple  # (a, b) per branch
    states: tuple
    transitions: dict
    recurrent: frozenset
    acceptors: frozenset = frozenset()

    @property
    def branch_count(self) -> int:
        return len(self.branches)

    def step(self, s: int, branch: int) -> Optional[int]:
        return self.transitions[s][branch - 1]

    def run(self, s: int, word: Sequence[int]) -> Optional[int]:
        for b in word:
            if s is None:
                return None
            s = self.step(s, b)
        return s

    def with_acceptors(self, acceptors: Iterable[int]) -> "ResidueAutomaton":
        acc = frozenset(acceptors)
        if not acc <= self.recurrent:
            raise ValueError("acceptors must be recurrent states")
        return ResidueAutomaton(self.k, self.branches, self.states, self.transitions, self.recurrent, acc)


def _recurrent_states(transitions: dict) -> frozenset:
    rec = set()
    for s in transitions:
        seen, stack = set(), [t for t in transitions[s] if t is not None]
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(t for t in transitions[x] if t is not None)
        if s in seen:
            rec.add(s)
    return frozenset(rec)


def build_residue_automaton(rule: Rule, k: int, start: Optional[int] = None, depth: Optional[int] = None) -> ResidueAutomaton:
    """Mod-k automaton of ``rule``.  With ``start`` the acceptors are computed
    by :func:`merger_residues` and restricted to recurrent states."""
    if k < 2:
        raise ValueError("k must be >= 2")
    brs = _affine_branches(rule)
    trans = {r: tuple((a * r + b) % k for a, b in brs) for r in range(k)}
    rec = _recurrent_states(trans)
    ra = ResidueAutomaton(k, brs, tuple(range(k)), trans, rec)
    if start is not None:
        ra = ra.with_acceptors(merger_residues(rule, k, depth=depth, start=start) & rec)
    return ra


def drop_transients(ra: ResidueAutomaton) -> ResidueAutomaton:
    """Restrict to the states lying on directed cycles."""
    keep = ra.recurrent
    if not keep:
        warnings.warn(f"mod-{ra.k} automaton has no recurrent states", RuntimeWarning, stacklevel=2)
    trans = {s: tuple(t if t in keep else None for t in ra.transitions[s]) for s in sorted(keep)}
    rec = _recurrent_states(trans)
    return ResidueAutomaton(ra.k, ra.branches, tuple(sorted(keep)), trans, rec, ra.acceptors & rec)


def reachable_residues(branches, K: int, start: int) -> np.ndarray:
    """Boolean mask of residues mod K reachable from ``start`` (itself included)."""
    mask = np.zeros(K, dtype=bool)
    s0 = start % K
    mask[s0] = True
    frontier = np.array([s0], dtype=np.int64)
    while frontier.size:
        nxt = np.concatenate([(a * frontier + b) % K for a, b in branches])
        nxt = np.unique(nxt[~mask[nxt]])
        mask[nxt] = True
        frontier = nxt
    return mask


def pair_merge_residues(branches, k: int, K: int, reach_x: np.ndarray, reach_y: np.ndarray) -> set:
    """Residues mod k of values ``m = a_i x + b_i = a_j y + b_j`` (i != j) with
    ``x mod K`` in ``reach_x`` and ``y mod K`` in ``reach_y``.

    ``K`` must be a multiple of ``k``.  Every integer solution is of the form
    ``x = x0 + (a_j/g) t``, ``y = y0 + (a_i/g) t`` and only ``t mod K`` matters.
    """
    if K % k:
        raise ValueError("K must be a multiple of k")
    out = set()
    t = np.arange(K, dtype=np.int64)
    for i, (ai, bi) in enumerate(branches):
        for j, (aj, bj) in enumerate(branches):
            if i == j:
                continue
            if ai == 0 or aj == 0:
                raise RuleError("merger residues need nonzero multipliers")
            g = math.gcd(ai, aj)
            c = bj - bi
            if c % g:
                continue
            ai_g, aj_g = ai // g, aj // g
            # a_i x - a_j y = c
            x0 = (c // g) * pow(ai_g, -1, abs(aj_g)) % abs(aj_g) if abs(aj_g) > 1 else 0
            y0 = (ai * x0 - c) // aj
            m0 = ai * x0 + bi
            step = ai * aj_g
            xs = (x0 + aj_g * t) % K
            ys = (y0 + ai_g * t) % K
            ok = reach_x[xs] & reach_y[ys]
            out.update(int(r) for r in np.unique((m0 + step * t[ok]) % k))
    return out


def _lcm_multipliers(branches) -> int:
    return reduce(math.lcm, (abs(a) for a, _ in branches), 1)


def merger_residues(
    rule: Rule,
    k: int,
    depth: Optional[int] = None,
    start: Optional[int] = 1,
    max_depth: int = 3,
) -> set:
    """Residues mod k at which two different branches can produce one value.

    Both preimages must be reachable from ``start`` (any residue if None).
    Reachability is tested mod ``k * L**depth`` with L the lcm of the
    multipliers; raising ``depth`` only removes residues.  With ``depth=None``
    lifting stops when two consecutive depths agree (or at ``max_depth``).
    """
    brs = _affine_branches(rule)
    if len(brs) < 2:
        return set()
    L = _lcm_multipliers(brs)

    def at(d):
        K = k * L**d
        if K > LIFT_CAP:
            raise ValueError(f"lifted modulus {K} exceeds {LIFT_CAP}")
        if start is None:
            reach = np.ones(K, dtype=bool)
        else:
            reach = reachable_residues(brs, K, start)
        return pair_merge_residues(brs, k, K, reach, reach)

    if depth is not None:
        return at(depth)
    prev = at(0)
    for d in range(1, max_depth + 1):
        if k * L**d > LIFT_CAP:
            break
        cur = at(d)
        if cur == prev:
            break
        prev = cur
    return prev


# -- word languages ---------------------------------------------------------

def _starts(ra: ResidueAutomaton, starts) -> list:
    if starts is None:
        return sorted(ra.recurrent)
    return sorted({s % ra.k for s in starts} & set(ra.states))


def accepted_words(ra: ResidueAutomaton, m: int, starts: Optional[Iterable[int]] = None) -> list:
    """Words of length m (branch indices, application order) that lead from
    some start state to an acceptor without leaving the automaton.

    ``starts`` defaults to the recurrent states; pass ``drop_transients(ra)``
    to forbid passing through transient states.
    """
    if m > 12:
        raise ValueError("word lists are limited to m <= 12; use accepted_count")
    if not ra.acceptors:
        raise ValueError("automaton has no acceptors")
    st = _starts(ra, starts)
    out = []
    for word in product(range(1, ra.branch_count + 1), repeat=m):
        for s in st:
            end = ra.run(s, word)
            if end is not None and end in ra.acceptors:
                out.append(word)
                break
    return out


def accepted_count(ra: ResidueAutomaton, m: int, starts: Optional[Iterable[int]] = None) -> int:
    """Exact number of accepted words of length m.

    The set of states reachable by a word is tracked as one subset-automaton
    state, so counts are exact integers for any m.
    """
    if not ra.acceptors:
        raise ValueError("automaton has no acceptors")
    dist = Counter({frozenset(_starts(ra, starts)): 1})
    for _ in range(m):
        nxt: Counter = Counter()
        for S, c in dist.items():
            for i in range(ra.branch_count):
                T = frozenset(t for t in (ra.transitions[s][i] for s in S) if t is not None)
                if T:
                    nxt[T] += c
        dist = nxt
    return sum(c for S, c in dist.items() if S & ra.acceptors)


def accepted_fraction(ra: ResidueAutomaton, m_lo: int = 24, m_hi: int = 30, starts=None) -> float:
    """Mean of ``accepted_count(m) / B**m`` over ``m_lo <= m <= m_hi``."""
    B = ra.branch_count
    vals = [accepted_count(ra, m, starts) / B**m for m in range(m_lo, m_hi + 1)]
    return sum(vals) / len(vals)


# -- remainder graphs -------------------------------------------------------

def remainder_via_graph(digits, base: int, k: int) -> int:
    """Residue of a number read digit by digit on the graph ``{n+1, base*n} mod k``.

    From state 0, each digit d is d steps along branch 1 followed by one step
    along branch 2; the step along branch 2 after the last digit is omitted.
    """
    if k < 1 or base < 2:
        raise ValueError("need k >= 1 and base >= 2")
    if isinstance(digits, int):
        if digits < 0:
            raise ValueError("number must be nonnegative")
        n, digits = digits, []
        while True:
            n, d = divmod(n, base)
            digits.append(d)
            if not n:
                break
        digits.reverse()
    digits = list(digits)
    if not digits or any(not 0 <= d < base for d in digits):
        raise ValueError(f"digits must lie in 0..{base - 1}")
    s = 0
    for pos, d in enumerate(digits):
        for _ in range(d):
            s = (s + 1) % k
        if pos < len(digits) - 1:
            s = (base * s) % k
    return s


# -- export -----------------------------------------------------------------

_COLOURS = ("red", "blue", "darkgreen", "orange", "purple")


def automaton_to_dot(ra: ResidueAutomaton) -> str:
    lines = [f"digraph mod{ra.k} {{", "  rankdir=LR;"]
    for s in ra.states:
        shape = "doublecircle" if s in ra.acceptors else "circle"
        style = "" if s in ra.recurrent else ", style=dashed"
        lines.append(f"  r{s} [label=\"{s}\", shape={shape}{style}];")
    for s in ra.states:
        for i, t in enumerate(ra.transitions[s]):
            if t is not None:
                lines.append(f"  r{s} -> r{t} [branch={i + 1}, color={_COLOURS[i % len(_COLOURS)]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def automaton_to_json(ra: ResidueAutomaton) -> str:
    obj = {
        "k": ra.k,
        "transitions": {str(s): list(ra.transitions[s]) for s in ra.states},
        "recurrent": sorted(ra.recurrent),
        "acceptors": sorted(ra.acceptors),
    }
    return json.dumps(obj) + "\n"
