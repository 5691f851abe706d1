"""Text form of rules.

Examples of accepted input::

    n -> {2n+1, 3n+1}
    even ? {n/2} : {3n, n+1}
    mod(3)==1 ? {2n, (n-1)/3} : {2n}
    n -> selectint{(n-1)/2, (n-1)/3}
    n -> {n+1, 10n} mod 7
    n -> {phi(n), n+1}
    n -> {n+1, floor(n/2)}
    z -> {1+(-1/2+i)n, 1+(-1/2-i)n}
    v -> {[[1,0],[1,1]]v, [[0,1],[1,0]]v+[0,1]}

``render_rule`` produces a canonical string that parses back to an equal rule.
A plain quotient such as ``(n-1)/3`` in an integer rule is an exact-division
branch: it yields nothing when the division leaves a remainder.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Optional

from .rules import (
    ALWAYS,
    AffineComplex,
    AffineInt,
    AffineVec,
    Case,
    ExactLinear,
    FloorDiv,
    Guard,
    PolyInt,
    Rule,
    RuleError,
    UnaryFn,
)
from .values import GaussRat, format_gauss

__all__ = ["DSLSyntaxError", "parse_rule", "render_rule", "render_branch"]


class DSLSyntaxError(RuleError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} (at column {pos + 1})")


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_]+)|(->|==|[-+*/^(){}\[\],?:√]))")
_FUNCS = {"phi", "pi", "rev", "divisors", "coprimes"}
_ROUNDING = {"floor", "round", "ceil"}


def _tokenize(text: str):
    toks, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        start = m.start(m.lastindex)
        if m.group(1):
            toks.append(("int", int(m.group(1)), start))
        elif m.group(2):
            toks.append(("id", m.group(2), start))
        else:
            toks.append(("op", m.group(3), start))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


# Polynomials in n are dicts degree -> GaussRat.

def _padd(p, q, sign=1):
    out = dict(p)
    for d, c in q.items():
        out[d] = out.get(d, GaussRat()) + (c if sign > 0 else -c)
    return {d: c for d, c in out.items() if not c.is_zero()}


def _pmul(p, q):
    out = {}
    for d1, c1 in p.items():
        for d2, c2 in q.items():
            out[d1 + d2] = out.get(d1 + d2, GaussRat()) + c1 * c2
    return {d: c for d, c in out.items() if not c.is_zero()}


def _const(c) -> dict:
    c = GaussRat.of(c)
    return {} if c.is_zero() else {0: c}


def _degree(p) -> int:
    return max(p) if p else 0


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.var = None

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        raise DSLSyntaxError(msg, tok[2], self.text)

    def at(self, kind, value=None) -> bool:
        k, v, _ = self.tok
        return k == kind and (value is None or v == value)

    def accept(self, kind, value=None):
        if self.at(kind, value):
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, kind, value=None):
        tok = self.accept(kind, value)
        if tok is None:
            want = value if value is not None else kind
            got = self.tok[1] if self.tok[0] != "end" else "end of input"
            self.error(f"expected {want!r}, found {got!r}")
        return tok

    # rule level
    def parse(self) -> Rule:
        if self.at("id") and self.toks[self.i + 1][:2] == ("op", "->"):
            name = self.tok[1]
            if name not in ("n", "z", "v"):
                self.error(f"unknown variable {name!r}; use n, z or v")
            self.var = name
            self.i += 2
        raw_cases = []
        while True:
            if self.at("op", "{") or self.at("id", "selectint"):
                raw_cases.append((ALWAYS, self.parse_braces()))
                break
            guard = self.parse_guard()
            self.expect("op", "?")
            raw_cases.append((guard, self.parse_braces()))
            if not self.accept("op", ":"):
                break
        mod = None
        if self.accept("id", "mod"):
            mod = self.expect("int")[1]
        if not self.at("end"):
            self.error(f"unexpected {self.tok[1]!r}")
        return self.finish(raw_cases, mod)

    def parse_guard(self) -> Guard:
        tok = self.tok
        if self.accept("id", "even"):
            return Guard("even")
        if self.accept("id", "odd"):
            return Guard("odd")
        if self.accept("id", "mod"):
            self.expect("op", "(")
            m = self.expect("int")[1]
            self.expect("op", ")")
            self.expect("op", "==")
            r = self.expect("int")[1]
            try:
                return Guard("mod", m, r)
            except RuleError as exc:
                self.error(str(exc), tok)
        self.error("expected a guard (even, odd, mod(m)==r) or '{'")

    def parse_braces(self) -> list:
        if self.accept("id", "selectint"):
            self.expect("op", "{")
            items = []
            if not self.at("op", "}"):
                items.append(("select", self.parse_expr(), self.tok[2]))
                while self.accept("op", ","):
                    items.append(("select", self.parse_expr(), self.tok[2]))
            self.expect("op", "}")
            return items
        self.expect("op", "{")
        items = []
        if not self.at("op", "}"):
            items.append(self.parse_branch())
            while self.accept("op", ","):
                items.append(self.parse_branch())
        self.expect("op", "}")
        return items

    def parse_branch(self):
        tok = self.tok
        if tok[0] == "id" and tok[1] in _FUNCS and self.toks[self.i + 1][:2] == ("op", "("):
            self.i += 2
            self.expect_var("n")
            base = None
            if self.accept("op", ","):
                base = self.expect("int")[1]
            self.expect("op", ")")
            try:
                return ("fn", UnaryFn(tok[1], base), tok[2])
            except RuleError as exc:
                self.error(str(exc), tok)
        if tok[0] == "id" and tok[1] in _ROUNDING:
            self.i += 1
            self.expect("op", "(")
            inner = self.parse_expr()
            self.expect("op", ")")
            return ("round", (tok[1], inner), tok[2])
        if tok[0] == "id" and tok[1] == "selectint":
            self.i += 1
            self.expect("op", "(")
            inner = self.parse_expr()
            self.expect("op", ")")
            return ("select", inner, tok[2])
        if self.at("op", "[") or self.at("id", "v"):
            return ("vec", self.parse_vec_branch(), tok[2])
        return ("expr", self.parse_expr(), tok[2])

    def expect_var(self, name):
        tok = self.expect("id")
        if tok[1] != name:
            self.error(f"expected variable {name!r}", tok)

    def parse_int_list(self) -> list:
        self.expect("op", "[")
        out = [self.parse_signed_int()]
        while self.accept("op", ","):
            out.append(self.parse_signed_int())
        self.expect("op", "]")
        return out

    def parse_signed_int(self) -> int:
        sign = -1 if self.accept("op", "-") else 1
        return sign * self.expect("int")[1]

    def parse_vec_branch(self) -> AffineVec:
        matrix = None
        if self.at("op", "["):
            self.expect("op", "[")
            rows = [self.parse_int_list()]
            while self.accept("op", ","):
                rows.append(self.parse_int_list())
            self.expect("op", "]")
            matrix = rows
        self.expect_var("v")
        offset = None
        if self.at("op", "+") or self.at("op", "-"):
            sign = -1 if self.tok[1] == "-" else 1
            self.i += 1
            offset = [sign * x for x in self.parse_int_list()]
        if matrix is None:
            if offset is None:
                self.error("identity vector branch needs an offset to fix its dimension")
            matrix = [[int(i == j) for j in range(len(offset))] for i in range(len(offset))]
        try:
            return AffineVec(tuple(map(tuple, matrix)), tuple(offset or ()))
        except RuleError as exc:
            self.error(str(exc))

    # arithmetic expressions in n
    def parse_expr(self):
        p = self.parse_term()
        while self.at("op", "+") or self.at("op", "-"):
            sign = 1 if self.tok[1] == "+" else -1
            self.i += 1
            p = _padd(p, self.parse_term(), sign)
        return p

    def _starts_factor(self) -> bool:
        k, v, _ = self.tok
        return k == "int" or (k == "id" and v in ("n", "i", "z", "sqrt")) or (k == "op" and v in ("(", "√"))

    def parse_term(self):
        p = self.parse_unary()
        while True:
            if self.accept("op", "*"):
                p = _pmul(p, self.parse_unary())
            elif self.at("op", "/"):
                tok = self.tok
                self.i += 1
                q = self.parse_unary()
                if _degree(q) > 0 or not q:
                    self.error("can only divide by a nonzero constant", tok)
                inv = GaussRat(1) / q[0]
                p = {d: c * inv for d, c in p.items()}
            elif self._starts_factor():
                p = _pmul(p, self.parse_unary())
            else:
                return p

    def parse_unary(self):
        if self.accept("op", "-"):
            return {d: -c for d, c in self.parse_unary().items()}
        if self.accept("op", "+"):
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.accept("op", "^"):
            k = self.expect("int")[1]
            out = _const(1)
            for _ in range(k):
                out = _pmul(out, base)
            return out
        return base

    def parse_atom(self):
        tok = self.tok
        if self.accept("int"):
            return _const(tok[1])
        if self.accept("op", "("):
            p = self.parse_expr()
            self.expect("op", ")")
            return p
        if tok[0] == "id":
            if tok[1] in ("sqrt",) or tok[1] == "√":
                self.error("irrational coefficients are out of scope: only exact Gaussian rationals are supported")
            if tok[1] in ("n", "z"):
                self.i += 1
                return {1: GaussRat(1)}
            if tok[1] == "i":
                self.i += 1
                return {0: GaussRat(0, 1)}
        if tok[:2] == ("op", "√"):
            self.error("irrational coefficients are out of scope: only exact Gaussian rationals are supported")
        self.error("unexpected end of input" if tok[0] == "end" else f"unexpected {tok[1]!r} in expression")

    # assembling the rule
    def finish(self, raw_cases, mod) -> Rule:
        items = [it for _, its in raw_cases for it in its]
        complex_dom = self.var == "z" or any(
            kind in ("expr", "select") and any(c.im != 0 for c in body.values())
            for kind, body, _ in items
        )
        has_vec = any(kind == "vec" for kind, _, _ in items)
        if self.var == "v" or has_vec:
            domain = "vec"
        elif complex_dom:
            domain = "gauss"
        else:
            domain = "int"
        cases = []
        for guard, its in raw_cases:
            cases.append(Case(guard, tuple(self.make_branch(kind, body, pos, domain) for kind, body, pos in its)))
        try:
            return Rule(tuple(cases), mod, domain)
        except DSLSyntaxError:
            raise
        except RuleError as exc:
            raise DSLSyntaxError(str(exc), 0, self.text) from None

    def make_branch(self, kind, body, pos, domain):
        def fail(msg):
            raise DSLSyntaxError(msg, pos, self.text)

        if domain == "vec":
            if kind != "vec":
                fail("vector rules take only matrix branches")
            return body
        if kind == "vec":
            fail("matrix branch in a scalar rule")
        if kind == "fn":
            if domain != "int":
                fail("arithmetic functions need an integer rule")
            return body
        if domain == "gauss":
            if kind != "expr":
                fail(f"{kind} branches need an integer rule")
            if _degree(body) > 1:
                fail("complex branches must be affine in n")
            return AffineComplex(body.get(1, GaussRat()), body.get(0, GaussRat()))
        if kind == "round":
            mode, inner = body
            if any(c.im != 0 for c in inner.values()):
                fail("complex coefficient in an integer rule")
            inner = {d: c.re for d, c in inner.items()}
            if set(inner) - {1}:
                fail(f"{mode}() takes a multiple of n over an integer")
            c = inner.get(1, Fraction(0))
            return FloorDiv(c.numerator, c.denominator, mode)
        if any(c.im != 0 for c in body.values()):
            fail("complex coefficient in an integer rule")
        coeffs = {d: c.re for d, c in body.items()}
        den = math.lcm(*(c.denominator for c in coeffs.values())) if coeffs else 1
        deg = _degree(body)
        if kind == "select" or den > 1:
            if deg > 1:
                fail("exact division only supports affine numerators")
            return ExactLinear(int(coeffs.get(1, 0) * den), int(coeffs.get(0, 0) * den), den)
        if deg <= 1:
            return AffineInt(int(coeffs.get(1, 0)), int(coeffs.get(0, 0)))
        return PolyInt(tuple(int(coeffs.get(d, 0)) for d in range(deg + 1)))


def parse_rule(text: str) -> Rule:
    return _Parser(text).parse()


# -- rendering --------------------------------------------------------------

def _coef_str(c: GaussRat) -> str:
    s = format_gauss(c)
    if c.im == 0 and c.re.denominator == 1:
        return s
    return f"({s})"


def _poly_str(terms) -> str:
    """terms: list of (degree, GaussRat) in descending degree, nonzero."""
    if not terms:
        return "0"
    parts = []
    for deg, c in terms:
        mono = "" if deg == 0 else ("n" if deg == 1 else f"n^{deg}")
        if deg == 0:
            s = _coef_str(c)
        elif c == GaussRat(1):
            s = mono
        elif c == GaussRat(-1):
            s = "-" + mono
        else:
            s = _coef_str(c) + mono
        parts.append(s)
    out = parts[0]
    for s in parts[1:]:
        out += s if s.startswith("-") else "+" + s
    return out


def _int_poly_str(coeffs) -> str:
    terms = [(d, GaussRat(c)) for d, c in reversed(list(enumerate(coeffs))) if c]
    return _poly_str(terms)


def _exact_str(br: ExactLinear) -> str:
    inner = _int_poly_str((br.q, br.p))
    if br.r == 1:
        return inner
    simple = br.q == 0 or br.p == 0
    return f"{inner}/{br.r}" if simple and not inner.startswith("-") else f"({inner})/{br.r}"


def render_branch(br) -> str:
    if isinstance(br, AffineInt):
        return _int_poly_str((br.b, br.a))
    if isinstance(br, PolyInt):
        return _int_poly_str(br.coefficients)
    if isinstance(br, ExactLinear):
        # A quotient already reads as exact division; r == 1 needs the marker.
        return _exact_str(br) if br.r > 1 else f"selectint({_exact_str(br)})"
    if isinstance(br, FloorDiv):
        num = _int_poly_str((0, br.num))
        return f"{br.mode}({num}/{br.den})"
    if isinstance(br, UnaryFn):
        return f"{br.name}(n,{br.base})" if br.name == "rev" else f"{br.name}(n)"
    if isinstance(br, AffineComplex):
        terms = [(d, c) for d, c in ((1, br.c), (0, br.d)) if not c.is_zero()]
        return _poly_str(terms)
    if isinstance(br, AffineVec):
        mat = "[" + ",".join("[" + ",".join(map(str, row)) + "]" for row in br.matrix) + "]"
        off = "" if not any(br.offset) else "+[" + ",".join(map(str, br.offset)) + "]"
        return f"{mat}v{off}"
    raise TypeError(f"unknown branch {br!r}")


def _render_list(branches) -> str:
    if (
        branches
        and all(isinstance(b, ExactLinear) for b in branches)
        and any(b.r == 1 for b in branches)
    ):
        return "selectint{" + ", ".join(_exact_str(b) for b in branches) + "}"
    return "{" + ", ".join(render_branch(b) for b in branches) + "}"


def _render_guard(g: Guard) -> str:
    return f"mod({g.m})=={g.r}" if g.kind == "mod" else g.kind


def render_rule(rule: Rule) -> str:
    var = {"int": "n", "gauss": "z", "vec": "v"}[rule.domain]
    cases = rule.cases
    if len(cases) == 1 and cases[0].guard.kind == "always":
        text = f"{var} -> {_render_list(cases[0].branches)}"
    else:
        parts = []
        for case in cases:
            if case.guard.kind == "always":
                parts.append(_render_list(case.branches))
                break
            parts.append(f"{_render_guard(case.guard)} ? {_render_list(case.branches)}")
        text = " : ".join(parts)
    if rule.global_mod is not None:
        text += f" mod {rule.global_mod}"
    return text
