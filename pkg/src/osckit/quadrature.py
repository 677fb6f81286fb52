"""Quadrature helpers: finite panels plus dyadic improper integrals.

Improper integrals over [r, +inf) are summed over dyadically growing
panels [r, 2r], [2r, 4r], ... with the remainder estimated from the
geometric decay ratio of the last panels. A hard horizon cap (default
1e12) bounds the search; failure to converge below tolerance before the
cap raises :class:`DivergentTail`, which callers interpret as evidence
that the integrand is not integrable at infinity.
"""

from __future__ import annotations

import math
import warnings
from typing import Callable, Sequence

from scipy.integrate import IntegrationWarning, quad

from .errors import DivergentTail

ABS_TOL = 1e-10
REL_TOL = 1e-8
HORIZON_CAP = 1e12


def finite_integral(f: Callable[[float], float], a: float, b: float, *,
                    atol: float = ABS_TOL, rtol: float = REL_TOL,
                    breakpoints: Sequence[float] = ()) -> float:
    """Integral of f over [a, b] with optional interior breakpoints."""
    if b <= a:
        return 0.0
    pts = sorted(p for p in breakpoints if a < p < b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(f, a, b, points=pts or None, epsabs=atol, epsrel=rtol,
                      limit=200)
    return val


def _tolerance(total: float, atol: float, rtol: float) -> float:
    return max(atol, rtol * abs(total))


def tail_integral_numeric(f: Callable[[float], float], r: float, *,
                          atol: float = ABS_TOL, rtol: float = REL_TOL,
                          cap: float = HORIZON_CAP,
                          breakpoints: Sequence[float] = ()) -> float:
    """Integral of f over [r, +inf) by dyadic panels.

    Raises DivergentTail when the remainder estimate does not fall below
    tolerance before the horizon cap.
    """
    if r <= 0:
        raise ValueError("tail integrals start at r > 0")
    total = 0.0
    a = r
    prev = None
    small_streak = 0
    while a < cap:
        b = min(2.0 * a, cap)
        panel = finite_integral(f, a, b, atol=atol / 8.0, rtol=rtol / 8.0,
                                breakpoints=breakpoints)
        total += panel
        tol = _tolerance(total, atol, rtol)
        if abs(panel) <= tol / 4.0:
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
        if prev is not None and abs(prev) > 0:
            q = abs(panel) / abs(prev)
            if q < 0.9:
                remainder = abs(panel) * q / (1.0 - q)
                if remainder <= tol:
                    return total + math.copysign(0.0, panel)
        prev = panel
        a = b
    raise DivergentTail(
        f"tail integral from {r} did not converge below tolerance by {cap}")


def lower_integral(f: Callable[[float], float], lo: float, b: float, *,
                   atol: float = ABS_TOL, rtol: float = REL_TOL,
                   floor: float = 1e-14,
                   breakpoints: Sequence[float] = ()) -> float:
    """Integral of f over (lo, b] approached by halving panels from b down.

    Used for integrals with a potentially singular or degenerate left
    endpoint (weights vanishing at 0). ``lo`` is usually 0.
    """
    if b <= lo:
        return 0.0
    total = 0.0
    hi = b
    prev = None
    small_streak = 0
    while hi - lo > floor * max(1.0, b):
        a = lo + (hi - lo) / 2.0
        panel = finite_integral(f, a, hi, atol=atol / 8.0, rtol=rtol / 8.0,
                                breakpoints=breakpoints)
        total += panel
        tol = _tolerance(total, atol, rtol)
        if abs(panel) <= tol / 4.0:
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
        if prev is not None and abs(prev) > 0:
            q = abs(panel) / abs(prev)
            if q < 0.9:
                remainder = abs(panel) * q / (1.0 - q)
                if remainder <= tol:
                    return total
        prev = panel
        hi = a
    if prev is not None and abs(prev) > _tolerance(total, atol, rtol):
        raise DivergentTail(
            f"integral down to {lo} did not converge (last panel {prev:.3e})")
    return total


def origin_nonintegrable_evidence(f: Callable[[float], float], c: float,
                                  *, n: int = 10) -> bool:
    """Sampled evidence that the integral of f over (0, c] diverges.

    Compares partial integrals from c/2^k; divergence evidence means the
    per-halving increments do not decay geometrically.
    """
    increments = []
    hi = c
    for _ in range(n):
        a = hi / 2.0
        increments.append(finite_integral(f, a, hi, atol=1e-8, rtol=1e-6))
        hi = a
    tail = increments[-4:]
    head = increments[:4]
    if all(abs(x) < 1e-12 for x in tail):
        return False
    return sum(abs(x) for x in tail) > 0.25 * sum(abs(x) for x in head)
