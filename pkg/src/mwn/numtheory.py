"""Number-theoretic quantities for additive and affine multiway rules.

Also hosts the arithmetic functions that rules can call as branches
(``phi``, ``pi``, ``rev``, ``divisors``, ``coprimes``).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional

__all__ = [
    "FrobeniusResult",
    "frobenius_number",
    "first_generation_step",
    "Circumference",
    "tube_circumference",
    "knacci_counts",
    "knacci_ratio",
    "euler_phi",
    "prime_pi",
    "integer_reverse",
    "proper_divisors",
    "coprimes_below",
    "prime_nu",
    "factorize",
]

# Dijkstra table for three or more coins is bounded by smallest * largest;
# beyond this the query is refused rather than silently slow.
FROBENIUS_TABLE_CAP = 10**7


def _need_positive(n: int, name: str) -> None:
    if n < 1:
        raise ValueError(f"{name} is defined for n >= 1, got {n}")


def factorize(n: int) -> dict[int, int]:
    _need_positive(n, "factorize")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def euler_phi(n: int) -> int:
    _need_positive(n, "euler_phi")
    result = n
    for p in factorize(n):
        result -= result // p
    return result


_sieve_limit = 0
_prime_counts: list[int] = []


def prime_pi(n: int) -> int:
    """Number of primes <= n (sieve grown on demand)."""
    global _sieve_limit, _prime_counts
    _need_positive(n, "prime_pi")
    if n > _sieve_limit:
        limit = max(n, 2 * _sieve_limit, 1024)
        is_p = bytearray([1]) * (limit + 1)
        is_p[0:2] = b"\x00\x00"
        for p in range(2, math.isqrt(limit) + 1):
            if is_p[p]:
                is_p[p * p::p] = bytearray(len(range(p * p, limit + 1, p)))
        counts, c = [], 0
        for flag in is_p:
            c += flag
            counts.append(c)
        _sieve_limit, _prime_counts = limit, counts
    return _prime_counts[n]


def integer_reverse(n: int, base: int = 10) -> int:
    """Reverse the base-``base`` digits of ``n`` (6 -> 110_2 -> 011_2 -> 3)."""
    _need_positive(n, "integer_reverse")
    if base < 2:
        raise ValueError("base must be >= 2")
    out = 0
    while n:
        n, d = divmod(n, base)
        out = out * base + d
    return out


def proper_divisors(n: int) -> list[int]:
    """All divisors of n except n itself, ascending."""
    _need_positive(n, "proper_divisors")
    small, large = [], []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
    return (small + large[::-1])[:-1]


def coprimes_below(n: int) -> list[int]:
    """Integers in [2, n-1] coprime to n."""
    _need_positive(n, "coprimes_below")
    return [m for m in range(2, n) if math.gcd(m, n) == 1]


def prime_nu(n: int) -> int:
    """Number of distinct prime factors."""
    return len(factorize(n))


# -- Frobenius problem ------------------------------------------------------

@dataclass(frozen=True)
class FrobeniusResult:
    """Largest non-representable multiple of ``gcd`` (``number``), scaled back.

    ``number`` is -1 when every multiple of the gcd is representable (a coin of
    value gcd exists).  ``all_integers`` is False when gcd > 1, in which case the
    threshold only speaks about multiples of the gcd.
    """

    number: int
    gcd: int

    @property
    def all_integers(self) -> bool:
        return self.gcd == 1


def frobenius_number(coins) -> FrobeniusResult:
    coins = sorted(set(int(c) for c in coins))
    if not coins or coins[0] < 1:
        raise ValueError("coins must be a nonempty set of positive integers")
    g = reduce(math.gcd, coins)
    reduced = [c // g for c in coins]
    if reduced[0] == 1:
        return FrobeniusResult(-1, g)
    if len(reduced) == 2:
        a, b = reduced
        return FrobeniusResult((a * b - a - b) * g, g)
    # Shortest paths over residues mod the smallest coin.
    m = reduced[0]
    if m * reduced[-1] > FROBENIUS_TABLE_CAP:
        raise ValueError("coin set too large for the residue table")
    dist = [math.inf] * m
    dist[0] = 0
    heap = [(0, 0)]
    while heap:
        d, r = heapq.heappop(heap)
        if d > dist[r]:
            continue
        for c in reduced[1:]:
            nd, nr = d + c, (r + c) % m
            if nd < dist[nr]:
                dist[nr] = nd
                heapq.heappush(heap, (nd, nr))
    return FrobeniusResult((max(dist) - m) * g, g)


def first_generation_step(a: int, b: int, n: int) -> Optional[int]:
    """Minimal number of steps for ``{n+a, n+b}`` to reach ``n`` from 0.

    Returns None when n has no nonnegative representation ``a x + b y``.
    """
    if a < 1 or b < 1:
        raise ValueError("a and b must be positive")
    if n < 0:
        return None
    best = None
    # x + y is minimised by taking as many of the larger step as possible.
    big, small = max(a, b), min(a, b)
    for y in range(n // big, -1, -1):
        rest = n - y * big
        if rest % small == 0:
            total = y + rest // small
            if best is None or total < best:
                best = total
            break
    return best


@dataclass(frozen=True)
class Circumference:
    radicand: int

    @property
    def value(self) -> float:
        return math.sqrt(self.radicand)

    def __str__(self) -> str:
        return f"sqrt({self.radicand}) ≈ {self.value:.4f}"


def tube_circumference(a: int, b: int) -> Circumference:
    if a < 1 or b < 1:
        raise ValueError("a and b must be positive")
    g = math.gcd(a, b)
    return Circumference((a // g) ** 2 + (b // g) ** 2)


def knacci_counts(a: int, t: int) -> list[int]:
    """First ``t + a`` terms of the all-ones order-``a`` recurrence.

    Initial segment is ``a-1`` zeros followed by a one, so ``a = 2`` gives the
    Fibonacci numbers 0, 1, 1, 2, 3, ...
    """
    if a < 2 or t < 1:
        raise ValueError("need a >= 2 and t >= 1")
    seq = [0] * (a - 1) + [1]
    while len(seq) < t + a:
        seq.append(sum(seq[-a:]))
    return seq[: t + a]


def knacci_ratio(a: int, t: int = 200) -> float:
    seq = knacci_counts(a, t)
    return seq[-1] / seq[-2]
