"""Rule representation and application.

A rule is an ordered list of guarded cases.  The first case whose guard
matches the current value supplies the branch maps; each branch produces zero
or more successor values.  Branch indices are 1-based within the case.

Branch words are tuples of branch indices in application order: ``(1, 2)``
means "apply branch 1, then branch 2".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from . import numtheory
from .values import GaussRat, Value, domain_of

__all__ = [
    "RuleError",
    "AffineInt",
    "AffineComplex",
    "PolyInt",
    "FloorDiv",
    "ExactLinear",
    "AffineVec",
    "UnaryFn",
    "Guard",
    "ALWAYS",
    "Case",
    "Rule",
    "apply_rule",
    "compose_branch_word",
    "affine_word_compose",
    "invert_affine_rule",
    "word_to_str",
    "word_from_str",
]


class RuleError(ValueError):
    """Raised for malformed rules or values a rule cannot handle."""


# -- branch maps ------------------------------------------------------------

@dataclass(frozen=True)
class AffineInt:
    a: int
    b: int = 0

    domain = "int"

    def outputs(self, n: int) -> list:
        return [self.a * n + self.b]


@dataclass(frozen=True)
class AffineComplex:
    c: GaussRat
    d: GaussRat = field(default_factory=GaussRat)

    domain = "gauss"

    def outputs(self, z: GaussRat) -> list:
        return [self.c * z + self.d]


@dataclass(frozen=True)
class PolyInt:
    coefficients: tuple  # ascending degree

    domain = "int"

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs or (0,))

    def outputs(self, n: int) -> list:
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * n + c
        return [acc]


@dataclass(frozen=True)
class FloorDiv:
    num: int
    den: int
    mode: str = "floor"  # floor | round | ceil

    domain = "int"

    def __post_init__(self):
        if self.den < 1:
            raise RuleError("FloorDiv denominator must be positive")
        if self.mode not in ("floor", "round", "ceil"):
            raise RuleError(f"unknown rounding mode {self.mode!r}")
        g = math.gcd(self.num, self.den)
        object.__setattr__(self, "num", self.num // g)
        object.__setattr__(self, "den", self.den // g)

    def outputs(self, n: int) -> list:
        x = self.num * n
        if self.mode == "floor":
            return [x // self.den]
        if self.mode == "ceil":
            return [-((-x) // self.den)]
        # Python rounds Fractions half-to-even.
        return [round(Fraction(x, self.den))]


@dataclass(frozen=True)
class ExactLinear:
    """``(p n + q) / r``, emitted only when the division is exact."""

    p: int
    q: int
    r: int = 1

    domain = "int"

    def __post_init__(self):
        if self.r < 1:
            raise RuleError("ExactLinear divisor must be positive")
        # (g p' n + g q') / (g r') is exact exactly when (p' n + q') / r' is.
        g = math.gcd(math.gcd(self.p, self.q), self.r)
        object.__setattr__(self, "p", self.p // g)
        object.__setattr__(self, "q", self.q // g)
        object.__setattr__(self, "r", self.r // g)

    def outputs(self, n: int) -> list:
        x = self.p * n + self.q
        if x % self.r:
            return []
        return [x // self.r]


@dataclass(frozen=True)
class AffineVec:
    matrix: tuple  # rows
    offset: tuple

    domain = "vec"

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.matrix)
        d = len(rows)
        if d == 0 or any(len(row) != d for row in rows):
            raise RuleError("AffineVec matrix must be square")
        off = tuple(int(x) for x in self.offset) if self.offset else (0,) * d
        if len(off) != d:
            raise RuleError("AffineVec offset has wrong length")
        object.__setattr__(self, "matrix", rows)
        object.__setattr__(self, "offset", off)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    def outputs(self, v: tuple) -> list:
        if len(v) != self.dim:
            raise RuleError(f"vector of length {len(v)} given to a {self.dim}-dimensional map")
        return [tuple(sum(m * x for m, x in zip(row, v)) + c for row, c in zip(self.matrix, self.offset))]


_UNARY = {
    "phi": lambda n, base: [numtheory.euler_phi(n)],
    "pi": lambda n, base: [numtheory.prime_pi(n)],
    "rev": lambda n, base: [numtheory.integer_reverse(n, base)],
    "divisors": lambda n, base: numtheory.proper_divisors(n),
    "coprimes": lambda n, base: numtheory.coprimes_below(n),
}


@dataclass(frozen=True)
class UnaryFn:
    """Arithmetic function branch.  Dead end (no output) for n <= 0."""

    name: str
    base: Optional[int] = None

    domain = "int"

    def __post_init__(self):
        if self.name not in _UNARY:
            raise RuleError(f"unknown function {self.name!r}")
        if self.name == "rev" and self.base is None:
            object.__setattr__(self, "base", 10)
        if self.name != "rev" and self.base is not None:
            raise RuleError(f"{self.name} takes no base")

    def outputs(self, n: int) -> list:
        if n <= 0:
            return []
        return list(_UNARY[self.name](n, self.base))


BranchMap = (AffineInt, AffineComplex, PolyInt, FloorDiv, ExactLinear, AffineVec, UnaryFn)


# -- guards and rules -------------------------------------------------------

@dataclass(frozen=True)
class Guard:
    kind: str = "always"  # always | even | odd | mod
    m: int = 0
    r: int = 0

    def __post_init__(self):
        if self.kind == "mod":
            if self.m < 1 or not 0 <= self.r < self.m:
                raise RuleError(f"bad residue guard mod({self.m})=={self.r}")
        elif self.kind not in ("always", "even", "odd"):
            raise RuleError(f"unknown guard {self.kind!r}")

    def matches(self, n) -> bool:
        if self.kind == "always":
            return True
        if self.kind == "even":
            return n % 2 == 0
        if self.kind == "odd":
            return n % 2 == 1
        return n % self.m == self.r

    def residues(self, m: int) -> set:
        """Residues mod m (a multiple of this guard's modulus) it accepts."""
        return {x for x in range(m) if self.matches(x)}

    @property
    def modulus(self) -> int:
        return {"always": 1, "even": 2, "odd": 2}.get(self.kind, self.m)


ALWAYS = Guard()


@dataclass(frozen=True)
class Case:
    guard: Guard
    branches: tuple


@dataclass(frozen=True)
class Rule:
    cases: tuple
    global_mod: Optional[int] = None
    domain: str = "int"

    def __post_init__(self):
        cases = tuple(c if isinstance(c, Case) else Case(c[0], tuple(c[1])) for c in self.cases)
        object.__setattr__(self, "cases", cases)
        if not cases:
            raise RuleError("rule has no cases")
        for case in cases:
            for br in case.branches:
                if not isinstance(br, BranchMap):
                    raise RuleError(f"not a branch map: {br!r}")
                if br.domain != self.domain:
                    raise RuleError(f"{type(br).__name__} branch in a {self.domain} rule")
        if self.domain != "int":
            if any(c.guard.kind != "always" for c in cases):
                raise RuleError("guards are only allowed in integer rules")
            if self.global_mod is not None:
                raise RuleError("mod reduction is only allowed in integer rules")
        if self.global_mod is not None and self.global_mod < 1:
            raise RuleError("mod must be positive")
        if self.domain == "vec":
            dims = {br.dim for c in cases for br in c.branches}
            if len(dims) > 1:
                raise RuleError("vector branches disagree on dimension")
        if not self.is_exhaustive():
            raise RuleError("guards do not cover every integer")

    @classmethod
    def simple(cls, *branches, mod: Optional[int] = None) -> "Rule":
        dom = branches[0].domain if branches else "int"
        return cls((Case(ALWAYS, tuple(branches)),), mod, dom)

    def is_exhaustive(self) -> bool:
        if any(c.guard.kind == "always" for c in self.cases):
            return True
        m = math.lcm(*(c.guard.modulus for c in self.cases))
        covered = set()
        for c in self.cases:
            covered |= c.guard.residues(m)
        return len(covered) == m

    @property
    def branches(self) -> tuple:
        """Branches of a single unguarded case."""
        if len(self.cases) != 1 or self.cases[0].guard.kind != "always":
            raise RuleError("rule has guarded cases")
        return self.cases[0].branches

    @property
    def is_affine_int(self) -> bool:
        return (
            self.domain == "int"
            and self.global_mod is None
            and len(self.cases) == 1
            and self.cases[0].guard.kind == "always"
            and all(isinstance(b, AffineInt) for b in self.cases[0].branches)
        )

    def case_for(self, v: Value) -> Case:
        for case in self.cases:
            if case.guard.matches(v):
                return case
        raise RuleError(f"no guard matches {v!r}")

    def __str__(self) -> str:
        from .dsl import render_rule

        return render_rule(self)


def apply_rule(rule: Rule, v: Value) -> list[tuple[int, Value]]:
    """Successors of ``v`` as ``(branch_index, value)`` pairs, in branch order.

    Duplicates are kept.  Multi-output functions repeat their branch index.
    """
    if domain_of(v) != rule.domain:
        raise RuleError(f"{v!r} is not in the {rule.domain} domain")
    case = rule.case_for(v)
    out = []
    for i, br in enumerate(case.branches, 1):
        for w in br.outputs(v):
            if rule.global_mod is not None:
                w %= rule.global_mod
            out.append((i, w))
    return out


def compose_branch_word(rule: Rule, word: Sequence[int], v: Value) -> Value:
    """Apply the branches named by ``word`` to ``v``, first letter first."""
    for step, idx in enumerate(word):
        case = rule.case_for(v)
        if not 1 <= idx <= len(case.branches):
            raise RuleError(f"branch {idx} does not exist for value {v!r}")
        outs = case.branches[idx - 1].outputs(v)
        if len(outs) != 1:
            raise RuleError(f"branch {idx} gives {len(outs)} outputs at step {step} (value {v!r})")
        v = outs[0]
        if rule.global_mod is not None:
            v %= rule.global_mod
    return v


def affine_word_compose(rule: Rule, word: Sequence[int]) -> AffineInt:
    """Closed form ``A n + B`` of a branch word of an affine integer rule."""
    if not rule.is_affine_int:
        raise RuleError("symbolic composition needs an unguarded affine integer rule")
    brs = rule.branches
    a, b = 1, 0
    for idx in word:
        br = brs[idx - 1]
        a, b = br.a * a, br.a * b + br.b
    return AffineInt(a, b)


def _invert_branch(br) -> ExactLinear:
    if isinstance(br, AffineInt):
        p, q, r = 1, -br.b, br.a
    elif isinstance(br, ExactLinear):
        p, q, r = br.r, -br.q, br.p
    else:
        raise RuleError(f"cannot invert {type(br).__name__} branch")
    if r == 0:
        raise RuleError("branch with zero multiplier is not invertible")
    if r < 0:
        p, q, r = -p, -q, -r
    g = math.gcd(math.gcd(p, q), r)
    return ExactLinear(p // g, q // g, r // g)


def invert_affine_rule(rule: Rule) -> Rule:
    """Inverse rule: every branch ``x -> y`` becomes an exact ``y -> x``.

    Guards are dropped and the branches of all cases are concatenated in order,
    so ``even ? {n/2} : {3n+1}`` inverts to ``selectint{2n, (n-1)/3}``.
    """
    if rule.domain != "int" or rule.global_mod is not None:
        raise RuleError("only integer rules without mod can be inverted")
    branches = tuple(_invert_branch(br) for case in rule.cases for br in case.branches)
    return Rule((Case(ALWAYS, branches),), None, "int")


def word_to_str(word: Sequence[int], letters: Optional[str] = None) -> str:
    """Render a word; ``letters[i-1]`` names branch i (default: the digits)."""
    if letters is None:
        return "".join(str(i) for i in word)
    return "".join(letters[i - 1] for i in word)


def word_from_str(text: str, letters: Optional[str] = None) -> tuple:
    alphabet = letters if letters is not None else "123456789"
    bad = sorted(set(text) - set(alphabet))
    if bad:
        raise ValueError(f"letters {''.join(bad)!r} are not branch names (expected any of {alphabet!r})")
    return tuple(alphabet.index(ch) + 1 for ch in text)
