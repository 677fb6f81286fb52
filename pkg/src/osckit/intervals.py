"""Conservative interval arithmetic for expression sign analysis.

Intervals are closed, possibly unbounded. Operations over-approximate:
whatever real values the operands can take, the result interval contains
the image. Rounding is not outward-directed; callers that need a strict
sign must demand a margin (the criteria engine uses its strictness margin
for exactly that reason).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"malformed interval [{self.lo}, {self.hi}]")

    # --- arithmetic -------------------------------------------------------
    def __add__(self, other: "Interval") -> "Interval":
        return Interval(_add(self.lo, other.lo, -1), _add(self.hi, other.hi, +1))

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(_add(self.lo, -other.hi, -1), _add(self.hi, -other.lo, +1))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        cands = [_mul(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(cands), max(cands))

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.lo <= 0.0 <= other.hi:
            # divisor may vanish: the quotient is unbounded
            return Interval(-INF, INF)
        cands = [a / b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(cands), max(cands))

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))


def _add(a: float, b: float, sign: int) -> float:
    # inf - inf resolves toward the conservative side
    if math.isinf(a) and math.isinf(b) and (a > 0) != (b > 0):
        return sign * INF
    return a + b


def _mul(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0  # convention 0 * inf = 0: 0 is an exact endpoint here
    return a * b


def point(x: float) -> Interval:
    return Interval(x, x)


def monotone(fn, iv: Interval, increasing: bool = True) -> Interval:
    a, b = fn(iv.lo), fn(iv.hi)
    return Interval(a, b) if increasing else Interval(b, a)


def exp_iv(iv: Interval) -> Interval:
    lo = 0.0 if iv.lo == -INF else math.exp(min(iv.lo, 700.0))
    hi = INF if iv.hi > 700.0 else math.exp(iv.hi)
    return Interval(lo, hi)


def log_iv(iv: Interval) -> Interval:
    if iv.lo <= 0.0:
        raise ValueError("log of interval touching (-inf, 0]")
    lo = math.log(iv.lo)
    hi = INF if iv.hi == INF else math.log(iv.hi)
    return Interval(lo, hi)


def sqrt_iv(iv: Interval) -> Interval:
    if iv.lo < 0.0:
        raise ValueError("sqrt of interval with negative part")
    return Interval(math.sqrt(iv.lo), INF if iv.hi == INF else math.sqrt(iv.hi))


def abs_iv(iv: Interval) -> Interval:
    if iv.lo >= 0.0:
        return iv
    if iv.hi <= 0.0:
        return -iv
    return Interval(0.0, max(-iv.lo, iv.hi))


def pow_iv(base: Interval, expo: float) -> Interval:
    if expo == 0.0:
        return point(1.0)
    if float(expo).is_integer() and expo > 0:
        n = int(expo)
        cands = [base.lo**n, base.hi**n]
        if n % 2 == 0 and base.lo < 0.0 < base.hi:
            cands.append(0.0)
        return Interval(min(cands), max(cands))
    if base.lo < 0.0:
        raise ValueError("fractional/negative power of interval with negative part")
    def f(x):
        if x == INF:
            return INF if expo > 0 else 0.0
        if x == 0.0:
            return 0.0 if expo > 0 else INF
        return x**expo
    return monotone(f, base, increasing=expo > 0)


def sinh_iv(iv: Interval) -> Interval:
    return monotone(lambda x: math.sinh(x) if abs(x) < 700 else math.copysign(INF, x), iv)


def cosh_iv(iv: Interval) -> Interval:
    hi = max(_cosh(iv.lo), _cosh(iv.hi))
    lo = 1.0 if iv.lo <= 0.0 <= iv.hi else min(_cosh(iv.lo), _cosh(iv.hi))
    return Interval(lo, hi)


def _cosh(x):
    return math.cosh(x) if abs(x) < 700 else INF


def coth_iv(iv: Interval) -> Interval:
    if iv.lo <= 0.0:
        return Interval(-INF, INF)
    # decreasing on (0, inf), limit 1
    hi = 1.0 / math.tanh(iv.lo)
    lo = 1.0 if iv.hi == INF else 1.0 / math.tanh(iv.hi)
    return Interval(lo, hi)


def sin_iv(iv: Interval) -> Interval:
    if iv.hi - iv.lo >= 2.0 * math.pi:
        return Interval(-1.0, 1.0)
    cands = [math.sin(iv.lo), math.sin(iv.hi)]
    # include interior extrema k*pi + pi/2
    k = math.ceil((iv.lo - math.pi / 2.0) / math.pi)
    while k * math.pi + math.pi / 2.0 <= iv.hi:
        cands.append(math.sin(k * math.pi + math.pi / 2.0))
        k += 1
    return Interval(min(cands), max(cands))
