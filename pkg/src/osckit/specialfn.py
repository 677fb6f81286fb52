"""Modified Bessel function of the first kind and closed-form shift solutions.

bessel_I uses the ascending power series below a crossover point and the
large-argument asymptotic expansion above it; the crossover sits at
x = max(20, 10 nu) where both expansions agree to better than 1e-8 for the
orders this package uses (nu <= ~10). The gamma function is taken from the
standard library (Lanczos-quality, relative error well below 1e-12).
log_bessel_I is the overflow-safe path used by tail integrals of weights
that grow exponentially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import Overflow

_SERIES_EPS = 1e-17
_MAX_SERIES_TERMS = 400


def _crossover(nu: float) -> float:
    return max(20.0, 10.0 * nu)


def _series_I(nu: float, x: float) -> float:
    half = x / 2.0
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0)) if x > 0 else (
        1.0 if nu == 0.0 else 0.0)
    total = term
    for k in range(1, _MAX_SERIES_TERMS):
        term *= half * half / (k * (k + nu))
        total += term
        if term < _SERIES_EPS * total:
            return total
    return total


def _asymptotic_factor(nu: float, x: float) -> float:
    """Series sum s with I_nu(x) = e^x / sqrt(2 pi x) * s."""
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        factor = -(mu - (2.0 * k - 1.0) ** 2) / (8.0 * k * x)
        new = term * factor
        if abs(new) >= abs(term):
            break  # asymptotic series started diverging; stop at optimum
        term = new
        total += term
        if abs(term) < _SERIES_EPS * abs(total):
            break
    return total


def bessel_I(nu: float, x: float) -> float:
    """Modified Bessel function I_nu(x) for nu >= 0, x >= 0."""
    if nu < 0 or x < 0:
        raise ValueError("bessel_I requires nu >= 0 and x >= 0")
    if x == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    if x <= _crossover(nu):
        return _series_I(nu, x)
    if x > 700.0:
        raise Overflow(f"bessel_I overflow at x={x}; use log_bessel_I")
    return math.exp(x) / math.sqrt(2.0 * math.pi * x) * _asymptotic_factor(nu, x)


def log_bessel_I(nu: float, x: float) -> float:
    """log I_nu(x), stable for large x."""
    if nu < 0 or x < 0:
        raise ValueError("log_bessel_I requires nu >= 0 and x >= 0")
    if x == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    if x <= _crossover(nu):
        half_log = math.log(x / 2.0)
        logs = []
        log_term = nu * half_log - math.lgamma(nu + 1.0)
        logs.append(log_term)
        for k in range(1, _MAX_SERIES_TERMS):
            log_term += 2.0 * half_log - math.log(k) - math.log(k + nu)
            logs.append(log_term)
            if log_term < logs[0] - 40.0 and log_term < max(logs) - 40.0:
                break
        m = max(logs)
        return m + math.log(math.fsum(math.exp(v - m) for v in logs))
    s = _asymptotic_factor(nu, x)
    if s <= 0.0:
        raise Overflow(f"asymptotic expansion unusable at nu={nu}, x={x}")
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(s)


# --- closed-form shift solutions -------------------------------------------

@dataclass(frozen=True)
class ShiftWeight:
    """A positive function w used to shift a sign-changing potential.

    ``fn`` evaluates w(t); ``log_squared`` evaluates log w(t)^2 without
    overflow. ``positivity_start`` is the first point after which w > 0 is
    certified by sampling; ``source_inequality`` describes the differential
    inequality w satisfies. ``vanishes_at_zero`` records w(0)=0 with
    w'(0) > 0, the initial contract consumed by the first-zero and
    oscillation criteria.
    """

    fn: Callable[[float], float]
    source_inequality: str
    positivity_start: float = 0.0
    vanishes_at_zero: bool = True
    log_squared: Callable[[float], float] | None = None
    closed_tail: Callable[[float], float] | None = None
    closed_log_tail: Callable[[float], float] | None = None
    family: dict = field(default_factory=dict)
    label: str = "w"

    def __call__(self, t: float) -> float:
        return self.fn(t)

    def log_sq(self, t: float) -> float:
        if self.log_squared is not None:
            return self.log_squared(t)
        return 2.0 * math.log(self.fn(t))


def _log_sinh(x: float) -> float:
    # log sinh(x) for x > 0 without overflow
    if x > 35.0:
        return x - math.log(2.0)
    return math.log(math.sinh(x))


def shift_solution_negative_part(alpha: float, B: float) -> ShiftWeight:
    """Positive supersolution of w'' - B^2 (1+t^2)^(alpha/2) w >= 0.

    Branches: sinh of a power for alpha >= 0, a scaled Bessel function for
    alpha in (-2, 0), and a pure power t^B' with B' = (1+sqrt(1+4B^2))/2 at
    alpha = -2. The same formulas solve w'' - B^2 t^alpha w = 0 (power-law
    bound variant) exactly for alpha in (-2, 0] and alpha = -2.
    """
    if alpha < -2.0:
        raise ValueError("alpha must be >= -2")
    if B <= 0.0:
        raise ValueError("B must be positive")
    fam = {"kind": "negative_part", "alpha": alpha, "B": B}
    if alpha == -2.0:
        Bp = (1.0 + math.sqrt(1.0 + 4.0 * B * B)) / 2.0
        root = math.sqrt(1.0 + 4.0 * B * B)

        def tail(t: float) -> float:
            return t ** (-root) / root

        return ShiftWeight(
            fn=lambda t: t**Bp,
            log_squared=lambda t: 2.0 * Bp * math.log(t),
            closed_tail=tail,
            closed_log_tail=lambda t: -root * math.log(t) - math.log(root),
            source_inequality=f"w'' - {B}^2 t^-2 w = 0",
            vanishes_at_zero=False,  # w'(0) = 0 for B' > 1
            family={**fam, "B_prime": Bp},
            label=f"t^{Bp:.6g}",
        )
    if alpha >= 0.0:
        lam = 2.0 * B / (2.0 + alpha)

        def phi(t: float) -> float:
            return lam * ((1.0 + t) ** (1.0 + alpha / 2.0) - 1.0)

        closed = log_closed = None
        if alpha == 0.0:
            def closed(t: float) -> float:  # noqa: F811
                x = 2.0 * B * t
                if x > 700.0:
                    return 2.0 * math.exp(-x) / B if x < 1400.0 else 0.0
                return 2.0 / (B * math.expm1(x))

            def log_closed(t: float) -> float:  # noqa: F811
                x = 2.0 * B * t
                extra = 0.0 if x > 40.0 else -math.log(-math.expm1(-x))
                return math.log(2.0 / B) - x + extra

        return ShiftWeight(
            fn=lambda t: math.sinh(phi(t)) if phi(t) < 700 else math.inf,
            log_squared=lambda t: 2.0 * _log_sinh(phi(t)),
            closed_tail=closed,
            closed_log_tail=log_closed,
            source_inequality=(
                f"w'' - {B}^2 (1+t^2)^({alpha}/2) w >= 0 (sinh branch)"),
            family=fam,
            label=f"sinh({lam:.6g}((1+t)^{1 + alpha / 2:.6g}-1))",
        )
    # alpha in (-2, 0)
    nu = 1.0 / (2.0 + alpha)
    lam = 2.0 * B / (2.0 + alpha)
    p = 1.0 + alpha / 2.0

    def wfn(t: float) -> float:
        if t == 0.0:
            return 0.0
        return math.sqrt(t) * bessel_I(nu, lam * t**p)

    def logsq(t: float) -> float:
        return math.log(t) + 2.0 * log_bessel_I(nu, lam * t**p)

    return ShiftWeight(
        fn=wfn,
        log_squared=logsq,
        source_inequality=f"w'' - {B}^2 t^{alpha} w = 0 (Bessel branch)",
        family={**fam, "nu": nu},
        label=f"sqrt(t) I_{nu:.6g}({lam:.6g} t^{p:.6g})",
    )


def euler_solution(B: float) -> ShiftWeight:
    """Explicit positive solution of w'' + B^2/(1+t)^2 w = 0, w(0)=0, w'(0)=1.

    For B = 1/2 this is sqrt(1+t) log(1+t); for B < 1/2 it is
    ((1+t)^B'' - (1+t)^(1-B'')) / sqrt(1-4B^2) with B'' = (1+sqrt(1-4B^2))/2.
    The normalization makes w'(0) = 1; scaling w by a constant changes
    neither its critical curve nor any criterion built on it.
    """
    if not 0.0 <= B <= 0.5:
        raise ValueError("B must lie in [0, 1/2]")
    fam = {"kind": "euler", "B": B}
    if B == 0.5:
        def tail(t: float) -> float:
            return 1.0 / math.log1p(t)

        return ShiftWeight(
            fn=lambda t: math.sqrt(1.0 + t) * math.log1p(t),
            closed_tail=tail,
            closed_log_tail=lambda t: -math.log(math.log1p(t)),
            source_inequality="w'' + (1/4)/(1+t)^2 w = 0",
            family=fam,
            label="sqrt(1+t)log(1+t)",
        )
    beta = math.sqrt(1.0 - 4.0 * B * B)
    Bpp = (1.0 + beta) / 2.0

    def wfn(t: float) -> float:
        return ((1.0 + t) ** Bpp - (1.0 + t) ** (1.0 - Bpp)) / beta

    def tail(t: float) -> float:
        # int_t^inf dt / w^2 for the normalized solution
        x = beta * math.log1p(t)
        if x > 700.0:
            return beta * math.exp(-x)
        return beta / math.expm1(x)

    def log_tail(t: float) -> float:
        x = beta * math.log1p(t)
        extra = 0.0 if x > 40.0 else -math.log(-math.expm1(-x))
        return math.log(beta) - x + extra

    return ShiftWeight(
        fn=wfn,
        closed_tail=tail,
        closed_log_tail=log_tail,
        source_inequality=f"w'' + {B}^2/(1+t)^2 w = 0",
        family={**fam, "B_dprime": Bpp},
        label=f"((1+t)^{Bpp:.6g}-(1+t)^{1 - Bpp:.6g})/{beta:.6g}",
    )


def ode_residual_profile(w: Callable[[float], float],
                         coefficient: Callable[[float], float],
                         points, *, sign: int = 0) -> float:
    """Worst scaled violation of w'' + coefficient * w (= 0 or >= 0).

    Second derivatives come from centered differences with the scale-aware
    step h = max(1e-4, 1e-4 t). ``sign`` = 0 checks |residual|, +1 checks
    residual >= -tol (supersolution), -1 checks residual <= tol.
    """
    worst = 0.0
    for t in points:
        h = max(1e-4, 1e-4 * t)
        if t - h <= 0:
            continue
        w0 = w(t)
        second = (w(t + h) - 2.0 * w0 + w(t - h)) / (h * h)
        res = second + coefficient(t) * w0
        scale = max(1.0, abs(w0) * (1.0 + abs(coefficient(t))))
        scaled = res / scale
        if sign > 0:
            scaled = max(0.0, -scaled)
        elif sign < 0:
            scaled = max(0.0, scaled)
        else:
            scaled = abs(scaled)
        worst = max(worst, scaled)
    return worst
