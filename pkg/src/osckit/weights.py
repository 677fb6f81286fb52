"""Weight functions, tail integrals and critical curves.

A Weight is a positive function v(r) on (domain_start, inf) whose
reciprocal is integrable at infinity. Its critical curve is

    chi(r) = { 2 v(r) * int_r^inf ds/v(s) }^(-2)

and the path integral of sqrt(chi) between two points equals half the log
ratio of the tails, which is the identity every oscillation criterion in
this package leans on. Closed-form tails, when supplied, are trusted only
after a startup cross-check against quadrature; the cross-check compares
tail differences (finite integrals), because slowly decaying tails such as
1/log r cannot be reproduced by truncated quadrature at any feasible
horizon.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import quadrature, specialfn
from .errors import DivergentTail, WeightTailMismatch, WeightVanishes
from .expr import Expression


class Weight:
    """A positive weight v(r) with cached tail integrals."""

    def __init__(self, fn: Callable[[float], float], *,
                 domain_start: float = 0.0,
                 closed_form_tail: Callable[[float], float] | None = None,
                 label: str = "v",
                 log_fn: Callable[[float], float] | None = None,
                 closed_log_tail: Callable[[float], float] | None = None,
                 chi_expression: Expression | None = None,
                 chi_params: dict | None = None,
                 atol: float = quadrature.ABS_TOL,
                 rtol: float = quadrature.REL_TOL):
        self.fn = fn
        self.domain_start = float(domain_start)
        self.closed_form_tail = closed_form_tail
        self.closed_log_tail = closed_log_tail
        self.label = label
        self.log_fn = log_fn
        self.chi_expression = chi_expression
        self.chi_params = dict(chi_params or {})
        self.atol = atol
        self.rtol = rtol
        self._lock = threading.Lock()
        self._tail_cache: dict[float, float] = {}
        self._tail_checked = closed_form_tail is None

    def __call__(self, r: float) -> float:
        return self.fn(r)

    def __repr__(self):
        return f"Weight({self.label!r})"

    def log_value(self, r: float) -> float:
        if self.log_fn is not None:
            return self.log_fn(r)
        v = self.fn(r)
        if v <= 0.0:
            raise WeightVanishes(f"{self.label} <= 0 at r={r}")
        return math.log(v)

    def _reciprocal(self, s: float) -> float:
        if self.log_fn is not None:
            lv = self.log_fn(s)
            return math.exp(-lv) if lv < 700 else 0.0
        v = self.fn(s)
        if v <= 0.0:
            raise WeightVanishes(f"{self.label} <= 0 at r={s}")
        return 1.0 / v

    # --- tails ------------------------------------------------------------
    def tail(self, r: float) -> float:
        """int_r^inf ds / v(s)."""
        if r <= self.domain_start:
            raise ValueError(
                f"tail needs r > domain_start={self.domain_start}, got {r}")
        with self._lock:
            if r in self._tail_cache:
                return self._tail_cache[r]
        self._ensure_tail_checked()
        if self.closed_form_tail is not None:
            val = self.closed_form_tail(r)
        else:
            val = quadrature.tail_integral_numeric(
                self._reciprocal, r, atol=self.atol, rtol=self.rtol)
        with self._lock:
            self._tail_cache[r] = val
        return val

    def log_tail(self, r: float) -> float:
        """log of the tail integral, stable where the tail underflows."""
        if self.closed_log_tail is not None:
            self._ensure_tail_checked()
            return self.closed_log_tail(r)
        return math.log(self.tail(r))

    def _ensure_tail_checked(self):
        if self._tail_checked:
            return
        with self._lock:
            if self._tail_checked:
                return
            base = max(2.0 * self.domain_start, self.domain_start + 1.0, 1.0)
            pts = [base * 2.0**k for k in range(5)]
            vals = []
            for p in pts:
                closed_diff = self.closed_form_tail(p) - self.closed_form_tail(2.0 * p)
                quad_diff = quadrature.finite_integral(
                    self._reciprocal, p, 2.0 * p, atol=self.atol, rtol=self.rtol)
                tol = self.atol * 10.0 + self.rtol * abs(quad_diff)
                if abs(closed_diff - quad_diff) > tol:
                    raise WeightTailMismatch(
                        f"closed-form tail of {self.label} off by "
                        f"{abs(closed_diff - quad_diff):.3e} on [{p}, {2 * p}]")
                vals.append(self.closed_form_tail(p))
            if any(b >= a for a, b in zip(vals, vals[1:])):
                raise WeightTailMismatch(
                    f"closed-form tail of {self.label} not decreasing")
            self._tail_checked = True

    def scaled(self, c: float) -> "Weight":
        if c <= 0:
            raise ValueError("scale must be positive")
        closed = None
        if self.closed_form_tail is not None:
            closed = lambda r, _t=self.closed_form_tail: _t(r) / c
        logf = None
        if self.log_fn is not None:
            logf = lambda r, _l=self.log_fn: _l(r) + math.log(c)
        return Weight(lambda r, _f=self.fn: c * _f(r),
                      domain_start=self.domain_start,
                      closed_form_tail=closed,
                      label=f"{c}*{self.label}", log_fn=logf,
                      atol=self.atol, rtol=self.rtol)

    def positivity_evidence(self, grid: Sequence[float]) -> bool:
        return all(self.fn(r) > 0.0 for r in grid if r > self.domain_start)


class CriticalCurve:
    """chi(r) derived from a weight; see module docstring."""

    def __init__(self, source: Weight):
        self.source = source

    def __call__(self, r: float) -> float:
        w = self.source
        if w.log_fn is not None:
            logchi = -2.0 * (math.log(2.0) + w.log_value(r) + w.log_tail(r))
            return math.exp(logchi)
        prod = 2.0 * w.fn(r) * w.tail(r)
        return prod**-2

    def sqrt(self, r: float) -> float:
        w = self.source
        if w.log_fn is not None:
            return math.exp(-(math.log(2.0) + w.log_value(r) + w.log_tail(r)))
        return 1.0 / (2.0 * w.fn(r) * w.tail(r))

    def path_integral(self, R: float, r: float) -> float:
        """int_R^r sqrt(chi), evaluated through the tail-ratio identity."""
        if not (self.source.domain_start < R < r):
            raise ValueError("need domain_start < R < r")
        return 0.5 * (self.source.log_tail(R) - self.source.log_tail(r))

    def path_integral_quadrature(self, R: float, r: float, **kw) -> float:
        """Same integral by direct quadrature of sqrt(chi); the slow path
        used to cross-validate the identity."""
        return quadrature.finite_integral(self.sqrt, R, r, **kw)

    def nonintegrable_evidence(self, R0: float | None = None, *,
                               factor: float = 4.0, n: int = 12) -> bool:
        """sqrt(chi) is never integrable at infinity; check the monotone
        unbounded growth of its path integral over a geometric grid."""
        w = self.source
        R0 = R0 or max(2.0 * w.domain_start, w.domain_start + 1.0, 1.0)
        vals = [self.path_integral(R0, R0 * factor**k) for k in range(1, n)]
        increasing = all(b > a for a, b in zip(vals, vals[1:]))
        return increasing and vals[-1] > vals[0] + 1.0


# --- module operations ------------------------------------------------------

def tail_integral(v: Weight, r: float) -> float:
    """int_r^inf ds/v(s); DivergentTail signals a non-integrable reciprocal."""
    return v.tail(r)


def critical_curve(v: Weight) -> CriticalCurve:
    """The critical curve of ``v``; probes one tail so that DivergentTail
    surfaces at construction."""
    probe = max(2.0 * v.domain_start, v.domain_start + 1.0, 1.0)
    v.tail(probe)
    return CriticalCurve(v)


class ChiOrdering(enum.Enum):
    CHI_LEQ = "chi <= chi_f"
    CHI_GEQ = "chi >= chi_f"
    CHI_EQUAL = "chi == chi_f"
    NO_MONOTONICITY = "no monotonicity"


def compare_critical_curves(v: Weight, f: Weight,
                            interval: tuple[float, float],
                            *, n: int = 64) -> ChiOrdering:
    """Order chi vs chi_f from the monotonicity of v/f on a sample grid.

    Non-increasing v/f gives chi <= chi_f, non-decreasing gives the reverse;
    the claimed pointwise ordering is additionally spot-checked.
    """
    a, b = interval
    lo = max(a, v.domain_start, f.domain_start)
    if not lo < b:
        raise ValueError("empty comparison interval")
    grid = np.geomspace(lo * (1 + 1e-9) if lo > 0 else 1e-9, b, n)
    ratios = np.array([v(r) / f(r) for r in grid])
    rel = 1e-9 * np.max(np.abs(ratios))
    diffs = np.diff(ratios)
    non_increasing = bool(np.all(diffs <= rel))
    non_decreasing = bool(np.all(diffs >= -rel))
    if non_increasing and non_decreasing:
        return ChiOrdering.CHI_EQUAL
    if not (non_increasing or non_decreasing):
        return ChiOrdering.NO_MONOTONICITY
    chi_v, chi_f = CriticalCurve(v), CriticalCurve(f)
    order = ChiOrdering.CHI_LEQ if non_increasing else ChiOrdering.CHI_GEQ
    for r in np.geomspace(grid[0] * 1.01, b, 5):
        cv, cf = chi_v(r), chi_f(r)
        slack = 1e-9 * max(cv, cf)
        if order is ChiOrdering.CHI_LEQ and cv > cf + slack:
            return ChiOrdering.NO_MONOTONICITY
        if order is ChiOrdering.CHI_GEQ and cv < cf - slack:
            return ChiOrdering.NO_MONOTONICITY
    return order


# --- structural condition report ---------------------------------------------

PASS, FAIL, UNDECIDED = "PASS", "FAIL", "UNDECIDED"


@dataclass
class ConditionCheck:
    status: str
    evidence: dict = field(default_factory=dict)
    note: str = ""


@dataclass
class ConditionReport:
    """Sample-based evidence for the structural weight conditions.

    Statuses are evidence from finitely many samples, never proofs; the
    grid used is recorded so a reader can judge the coverage.
    """

    weight: str
    grid: tuple
    checks: dict[str, ConditionCheck] = field(default_factory=dict)
    disclaimer: str = ("sampled evidence only; the conditions are stated "
                       "almost everywhere / asymptotically and are not "
                       "decidable from finitely many points")

    def status(self, name: str) -> str:
        return self.checks[name].status


def validate_weight(v: Weight, grid: Sequence[float] | None = None, *,
                    a: float = 1.0) -> ConditionReport:
    """Evidence for: vanishing at 0 plus local boundedness; boundedness of
    v(r) int_r^a ds/v and (1/v) int_0^r v near 0; the latter tending to 0;
    and tail integrability. UNDECIDED is a valid outcome."""
    ds = v.domain_start
    if grid is None:
        lo = ds + 1e-6 if ds > 0 else 1e-6
        grid = np.concatenate([
            np.geomspace(lo, max(a, lo * 10), 40),
            np.geomspace(max(a, lo * 10), max(100.0, 20 * a), 12),
        ])
    grid = np.asarray(sorted(set(float(g) for g in grid if g > ds)))
    report = ConditionReport(weight=v.label, grid=tuple(grid))

    near0 = grid[grid <= max(a, grid[0] * 4)][:16]
    vals0 = [v(r) for r in near0]

    # positivity and local boundedness on the sampled range
    if any(x <= 0 for x in vals0):
        report.checks["positivity"] = ConditionCheck(FAIL, {"min": min(vals0)})
    else:
        report.checks["positivity"] = ConditionCheck(PASS, {"min": min(vals0)})

    # vanishing limit at the left endpoint (evaluated on the representative
    # given by fn; no attempt to quotient by null sets)
    if ds > 0:
        report.checks["vanishing_at_zero"] = ConditionCheck(
            UNDECIDED, note="domain starts after 0; limit not applicable")
    else:
        probes = [v(10.0**-k) for k in range(3, 9)]
        if all(x > 0 for x in probes) and probes[-1] < 1e-4 * max(probes[0], 1e-30) + 1e-12:
            report.checks["vanishing_at_zero"] = ConditionCheck(
                PASS, {"v(1e-8)": probes[-1]})
        elif probes[-1] > 1e-3:
            report.checks["vanishing_at_zero"] = ConditionCheck(
                FAIL, {"v(1e-8)": probes[-1]})
        else:
            report.checks["vanishing_at_zero"] = ConditionCheck(
                UNDECIDED, {"v(1e-8)": probes[-1]})

    # boundedness of v(r) int_r^a ds/v and (1/v) int_0^r v on (0, a]
    inner = [r for r in grid if r <= a][:24] or [a]
    try:
        prods, means = [], []
        for r in inner:
            t1 = quadrature.finite_integral(lambda s: 1.0 / v(s), r, a,
                                            atol=1e-8, rtol=1e-6)
            t2 = quadrature.lower_integral(v, 0.0 if ds == 0 else ds, r,
                                           atol=1e-8, rtol=1e-6)
            prods.append(v(r) * t1)
            means.append(t2 / v(r))
        bounded = max(prods) < 1e6 and max(means) < 1e6
        report.checks["near_origin_bounded"] = ConditionCheck(
            PASS if bounded else UNDECIDED,
            {"sup_v_tail": max(prods), "sup_mean": max(means)})
        half = max(3, len(means) // 3)
        vanishing_mean = means[0] <= 0.05 * (max(means[half:]) + 1e-30) or means[0] < 1e-8
        report.checks["mean_vanishes_at_zero"] = ConditionCheck(
            PASS if vanishing_mean else UNDECIDED,
            {"first": means[0], "last": means[-1]})
    except (DivergentTail, WeightVanishes, OverflowError, ZeroDivisionError) as exc:
        report.checks["near_origin_bounded"] = ConditionCheck(UNDECIDED, note=str(exc))
        report.checks["mean_vanishes_at_zero"] = ConditionCheck(UNDECIDED, note=str(exc))

    # tail integrability
    try:
        t = v.tail(max(grid[-1] / 4.0, ds + 1.0))
        report.checks["tail_integrable"] = ConditionCheck(PASS, {"tail": t})
    except DivergentTail as exc:
        report.checks["tail_integrable"] = ConditionCheck(FAIL, note=str(exc))
    return report


# --- built-in weights ---------------------------------------------------------

def unit_weight() -> Weight:
    """v = 1; admits no tail (the reciprocal is not integrable)."""
    def no_tail(r):
        raise DivergentTail("constant weight has no finite tail")
    w = Weight(lambda r: 1.0, label="one")
    w.tail = no_tail  # type: ignore[method-assign]
    return w


def power_weight(m: float) -> Weight:
    """v(r) = r^(m-1) for m > 2; tail r^(2-m)/(m-2); chi = ((m-2)/(2r))^2."""
    if m <= 2:
        raise ValueError("power weight needs m > 2 for an integrable tail")
    expo = m - 1.0
    chi = Expression("((m-2)/(2*t))^2")
    return Weight(lambda r: r**expo,
                  closed_form_tail=lambda r: r ** (2.0 - m) / (m - 2.0),
                  label=f"t^{expo:g}",
                  chi_expression=chi, chi_params={"m": m})


def sinh_squared_weight(B: float, alpha: float = 0.0) -> Weight:
    """The squared negative-part shift family: w(t)^2 for the sinh / Bessel /
    power branches selected by alpha."""
    sw = specialfn.shift_solution_negative_part(alpha, B)
    return shift_weight_squared(sw)


def euler_squared_weight(B: float) -> Weight:
    """w(t)^2 for the explicit Euler-equation solution with B in [0, 1/2]."""
    sw = specialfn.euler_solution(B)
    return shift_weight_squared(sw)


def shift_weight_squared(sw: specialfn.ShiftWeight) -> Weight:
    chi_expression = None
    chi_params = None
    fam = sw.family
    if fam.get("kind") == "negative_part" and fam.get("alpha") == 0.0:
        chi_expression = Expression("B^2/(1-exp(-2*B*t))^2")
        chi_params = {"B": fam["B"]}
    if fam.get("kind") == "euler" and fam.get("B") == 0.5:
        chi_expression = Expression("1/(4*(1+t)^2*log(1+t)^2)")
        chi_params = {}
    def squared(t: float) -> float:
        w = sw.fn(t)
        return math.inf if w > 1e154 else w * w

    return Weight(squared,
                  domain_start=sw.positivity_start,
                  closed_form_tail=sw.closed_tail,
                  closed_log_tail=sw.closed_log_tail,
                  label=f"({sw.label})^2",
                  log_fn=sw.log_sq,
                  chi_expression=chi_expression,
                  chi_params=chi_params)


def _iterated_log(t: float, k: int) -> float:
    for _ in range(k):
        t = math.log(t)
    return t


def _ladder_domain_start(k: int) -> float:
    # first point where the k-th iterated log is positive
    s = 1.0
    for _ in range(k - 1):
        s = math.exp(s)
    return s


def ladder_weight(k: int) -> Weight:
    """The k-th nested-log weight t log t ... (log^(k) t)^2 with closed tail
    1/log^(k) t; stage k of the iterated critical-curve refinement."""
    if k < 1:
        raise ValueError("ladder index starts at 1")

    def fn(t: float) -> float:
        val = t
        for j in range(1, k):
            val *= _iterated_log(t, j)
        return val * _iterated_log(t, k) ** 2

    chi_src = "1/(4*t^2" + "".join(
        "*" + ("log(" * j) + "t" + (")" * j) + "^2" for j in range(1, k + 1)) + ")"
    return Weight(fn,
                  domain_start=_ladder_domain_start(k),
                  closed_form_tail=lambda t: 1.0 / _iterated_log(t, k),
                  label=f"ladder({k})",
                  chi_expression=Expression(chi_src), chi_params={})


def weight_from_expression(src: str | Expression, params: dict | None = None, *,
                           domain_start: float = 0.0,
                           label: str | None = None) -> Weight:
    e = src if isinstance(src, Expression) else Expression(src)
    e.check_bound(params)
    p = dict(params or {})
    return Weight(lambda r: e(r, p), domain_start=domain_start,
                  label=label or e.src)


BUILTIN_WEIGHTS = {
    "one": lambda **kw: unit_weight(),
    "power": lambda m=3.0, **kw: power_weight(float(m)),
    "sinh2": lambda B=1.0, alpha=0.0, **kw: sinh_squared_weight(float(B), float(alpha)),
    "euler2": lambda B=0.5, **kw: euler_squared_weight(float(B)),
    "ladder": lambda k=1, **kw: ladder_weight(int(k)),
}


def builtin_weight(name: str, **params) -> Weight:
    try:
        factory = BUILTIN_WEIGHTS[name]
    except KeyError:
        raise ValueError(f"unknown builtin weight {name!r}; "
                         f"choose from {sorted(BUILTIN_WEIGHTS)}") from None
    return factory(**params)
