"""Exact search for branch words that give the same value."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

from .rules import Rule, RuleError, apply_rule
from .values import Value, value_to_json

__all__ = ["WordCollision", "find_word_collisions", "collisions_to_json", "MAX_DEPTH"]

MAX_DEPTH = 14


@dataclass(frozen=True)
class WordCollision:
    word_a: tuple
    word_b: tuple
    value: Value

    @property
    def depth(self) -> int:
        return max(len(self.word_a), len(self.word_b))

    def to_dict(self) -> dict:
        return {
            "words": ["".join(map(str, self.word_a)), "".join(map(str, self.word_b))],
            "value": value_to_json(self.value),
            "depth": self.depth,
        }


def find_word_collisions(rule: Rule, init: Value, depth: int, max_results: int = 100_000) -> list[WordCollision]:
    """Pairs of distinct words of length <= depth with equal values from init.

    A pair ``(p x, q x)`` ending in the same letter is dropped when ``p`` and
    ``q`` already give equal values: it only extends an earlier collision.
    Results are ordered by depth, then by the words.
    """
    if not 0 <= depth <= MAX_DEPTH:
        raise ValueError(f"depth must be in 0..{MAX_DEPTH}")
    words = {(): init}
    layer = [((), init)]
    for _ in range(depth):
        nxt = []
        for w, x in layer:
            outs = apply_rule(rule, x)
            idx = [i for i, _ in outs]
            if len(set(idx)) != len(idx):
                raise RuleError("collision search needs single-output branches")
            for i, y in outs:
                nxt.append((w + (i,), y))
        words.update(nxt)
        layer = nxt
    groups: dict = {}
    for w, x in words.items():
        groups.setdefault(x, []).append(w)
    out = []
    for x, ws in groups.items():
        if len(ws) < 2:
            continue
        for a, b in combinations(sorted(ws, key=lambda w: (len(w), w)), 2):
            if a and b and a[-1] == b[-1] and words[a[:-1]] == words[b[:-1]]:
                continue
            out.append(WordCollision(a, b, x))
            if len(out) > max_results:
                raise RuntimeError(f"more than {max_results} collisions; lower the depth")
    out.sort(key=lambda c: (c.depth, c.word_a, c.word_b))
    return out


def collisions_to_json(cols) -> str:
    return json.dumps([c.to_dict() for c in cols]) + "\n"
