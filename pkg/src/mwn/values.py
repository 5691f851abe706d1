"""Exact number domains used as multiway states.

Three kinds of value are supported and they are kept as plain Python objects:

* ``int`` for the integer domain (arbitrary precision),
* :class:`GaussRat` for complex numbers with exact rational parts,
* ``tuple`` of ints for fixed-dimension integer vectors.

Every value has a canonical byte key.  Keys are injective, carry a domain tag,
and for integers their lexical order equals numeric order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

__all__ = [
    "GaussRat",
    "Value",
    "domain_of",
    "canonical_key",
    "decode_key",
    "sort_key",
    "value_coordinate",
    "value_to_json",
    "value_from_json",
    "format_value",
]

_INT_TAG = b"I"
_GAUSS_TAG = b"G"
_VEC_TAG = b"V"


@dataclass(frozen=True, slots=True)
class GaussRat:
    """Complex number ``re + im*i`` with exact rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        # Fraction normalises sign and gcd; coerce ints and strings.
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def of(cls, x: "GaussRat | int | Fraction") -> "GaussRat":
        if isinstance(x, GaussRat):
            return x
        return cls(Fraction(x), Fraction(0))

    def __add__(self, other):
        o = GaussRat.of(other)
        return GaussRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussRat.of(other))

    def __rsub__(self, other):
        return GaussRat.of(other) - self

    def __mul__(self, other):
        o = GaussRat.of(other)
        return GaussRat(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRat.of(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("GaussRat division by zero")
        num = self * o.conjugate()
        return GaussRat(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return GaussRat.of(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return GaussRat(1) / (self ** (-k))
        out, base = GaussRat(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "GaussRat":
        return GaussRat(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        return format_gauss(self)


Value = Union[int, GaussRat, tuple]


def domain_of(v: Value) -> str:
    if isinstance(v, bool):
        raise TypeError("bool is not a multiway value")
    if isinstance(v, int):
        return "int"
    if isinstance(v, GaussRat):
        return "gauss"
    if isinstance(v, tuple) and all(isinstance(c, int) and not isinstance(c, bool) for c in v):
        return "vec"
    raise TypeError(f"unsupported value {v!r}")


# -- canonical keys ---------------------------------------------------------

def _encode_int(n: int) -> bytes:
    # sign byte, then 4-byte length and big-endian magnitude; negatives are
    # byte-complemented so that lexical order equals numeric order.
    if n == 0:
        return b"\x01"
    mag = abs(n).to_bytes((abs(n).bit_length() + 7) // 8, "big")
    body = len(mag).to_bytes(4, "big") + mag
    if n > 0:
        return b"\x02" + body
    return b"\x00" + bytes(255 - c for c in body)


def _decode_int(buf: bytes, pos: int) -> tuple[int, int]:
    sign = buf[pos]
    if sign == 1:
        return 0, pos + 1
    raw = buf[pos + 1:pos + 5]
    if sign == 0:
        raw = bytes(255 - c for c in raw)
    length = int.from_bytes(raw, "big")
    mag = buf[pos + 5:pos + 5 + length]
    if sign == 0:
        mag = bytes(255 - c for c in mag)
    n = int.from_bytes(mag, "big")
    return (n if sign == 2 else -n), pos + 5 + length


def canonical_key(v: Value) -> bytes:
    dom = domain_of(v)
    if dom == "int":
        return _INT_TAG + _encode_int(v)
    if dom == "gauss":
        return _GAUSS_TAG + b"".join(
            _encode_int(x)
            for x in (v.re.numerator, v.re.denominator, v.im.numerator, v.im.denominator)
        )
    return _VEC_TAG + len(v).to_bytes(4, "big") + b"".join(_encode_int(c) for c in v)


def decode_key(key: bytes) -> Value:
    tag, pos = key[:1], 1
    if tag == _INT_TAG:
        n, pos = _decode_int(key, pos)
        out: Value = n
    elif tag == _GAUSS_TAG:
        parts = []
        for _ in range(4):
            x, pos = _decode_int(key, pos)
            parts.append(x)
        out = GaussRat(Fraction(parts[0], parts[1]), Fraction(parts[2], parts[3]))
    elif tag == _VEC_TAG:
        dim = int.from_bytes(key[1:5], "big")
        pos = 5
        comps = []
        for _ in range(dim):
            x, pos = _decode_int(key, pos)
            comps.append(x)
        out = tuple(comps)
    else:
        raise ValueError(f"unknown key tag {tag!r}")
    if pos != len(key):
        raise ValueError("trailing bytes in key")
    return out


def sort_key(v: Value):
    """Sort key consistent with canonical key order (ints sort natively)."""
    if isinstance(v, int):
        return v
    return canonical_key(v)


# -- coordinates ------------------------------------------------------------

def _signed_log(x) -> float:
    if x == 0:
        return 0.0
    mag = math.log1p(abs(x)) if abs(x) < 2**1000 else math.log(abs(x))
    return mag if x > 0 else -mag


def value_coordinate(v: Value, mode: str = "linear") -> tuple[float, float]:
    """Project a value to a point in the plane.

    ``linear`` and ``log-magnitude`` put integers on the x axis; the latter uses
    ``sign(n) * log(1 + |n|)``.  ``complex-plane`` needs a GaussRat and
    ``vector-plane`` a 2-vector.
    """
    dom = domain_of(v)
    if mode == "linear":
        if dom != "int":
            raise ValueError("linear mode needs an integer value")
        return float(v), 0.0
    if mode == "log-magnitude":
        if dom != "int":
            raise ValueError("log-magnitude mode needs an integer value")
        return _signed_log(v), 0.0
    if mode == "complex-plane":
        if dom != "gauss":
            raise ValueError("complex-plane mode needs a Gaussian rational")
        return float(v.re), float(v.im)
    if mode == "vector-plane":
        if dom != "vec" or len(v) != 2:
            raise ValueError("vector-plane mode needs a 2-component vector")
        return float(v[0]), float(v[1])
    raise ValueError(f"unknown coordinate mode {mode!r}")


# -- text / JSON forms ------------------------------------------------------

def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_gauss(z: GaussRat) -> str:
    if z.im == 0:
        return _frac_str(z.re)
    im = _frac_str(abs(z.im))
    im = "i" if im == "1" else f"{im}*i"
    if z.re == 0:
        return ("-" if z.im < 0 else "") + im
    return f"{_frac_str(z.re)}{'-' if z.im < 0 else '+'}{im}"


def format_value(v: Value) -> str:
    dom = domain_of(v)
    if dom == "int":
        return str(v)
    if dom == "gauss":
        return format_gauss(v)
    return "{" + ",".join(str(c) for c in v) + "}"


def value_to_json(v: Value):
    dom = domain_of(v)
    if dom == "int":
        return str(v)
    if dom == "gauss":
        return {"re": _frac_str(v.re), "im": _frac_str(v.im)}
    return [str(c) for c in v]


def value_from_json(obj) -> Value:
    if isinstance(obj, str):
        return int(obj)
    if isinstance(obj, dict):
        return GaussRat(Fraction(obj["re"]), Fraction(obj["im"]))
    if isinstance(obj, list):
        return tuple(int(c) for c in obj)
    raise ValueError(f"cannot decode value {obj!r}")
