"""Problem-rewriting devices.

Three pure transformations connect the plain Cauchy problem
g'' + K g = 0, g(0)=0, g'(0)=1 with weighted divergence-form problems
(v z')' + A v z = 0:

* ``to_weighted`` moves K into a chosen weight frame through the variable
  change t(r) = 1 / int_r^inf ds/v and z(r) = g(t(r)) / t(r);
* ``weight_shift`` absorbs the negative part of a potential into the
  weight by dividing the solution by a positive supersolution w, leaving
  the nonnegative potential A + W with the new weight v w^2;
* ``refine_ladder`` iterates the critical-curve construction, producing
  nested-log weights whose curves separate progressively finer
  oscillation thresholds.

All three only verify residuals; none of them solve initial value
problems themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import quadrature
from .errors import (BracketFailure, DivergentTail, InvalidWeight, LadderStall,
                     NegativeShiftedPotential)
from .problems import PotentialSpec
from .specialfn import ShiftWeight
from .weights import CriticalCurve, Weight

_HARD_CAP = 1e12


@dataclass(frozen=True)
class VarMap:
    """Invertible map between the plain variable t and the frame variable r."""

    weight: Weight

    def forward(self, r: float) -> float:
        return 1.0 / self.weight.tail(r)

    def inverse(self, t: float) -> float:
        return invert_var_map(self.weight, t)

    def derivative(self, r: float) -> float:
        return self.forward(r) ** 2 / self.weight(r)


@dataclass
class TransformedProblem:
    weight: Weight
    potential: PotentialSpec
    var_map: VarMap | None
    provenance: str
    flags: dict = field(default_factory=dict)


def invert_var_map(v: Weight, t: float) -> float:
    """The r with (int_r^inf ds/v)^(-1) = t, by bracketed root finding on
    the strictly monotone tail. Relative residual <= 1e-10."""
    if t <= 0:
        raise ValueError("t must be positive")
    target = 1.0 / t

    def h(r: float) -> float:
        return v.tail(r) - target

    lo = hi = max(2.0 * v.domain_start, v.domain_start + 1.0, 1.0)
    val = h(lo)
    tries = 0
    while val < 0.0:  # tail too small: move left toward domain_start
        lo = v.domain_start + (lo - v.domain_start) / 2.0
        val = h(lo)
        tries += 1
        if tries > 200:
            raise BracketFailure(f"no left bracket for t={t}")
    val = h(hi)
    while val > 0.0:
        hi *= 2.0
        if hi > _HARD_CAP:
            raise BracketFailure(f"no right bracket for t={t} below {_HARD_CAP}")
        val = h(hi)
    r = brentq(h, lo, hi, xtol=1e-300, rtol=8.881784197001252e-16, maxiter=200)
    resid = abs(1.0 / v.tail(r) - t) / t
    if resid > 1e-10:
        raise BracketFailure(f"inversion residual {resid:.2e} exceeds 1e-10")
    return r


def to_weighted(K: PotentialSpec, v: Weight) -> TransformedProblem:
    """Rewrite g'' + K g = 0 in the frame of ``v``.

    The transformed potential is K(t(r)) t(r)^4 / v(r)^2 and z = g(t)/t
    solves the weighted problem exactly when g solves the plain one, which
    the oracle can confirm numerically. Requires the reciprocal of v to be
    non-integrable at 0 so that t ranges over all of (0, inf).
    """
    probe = max(2.0 * v.domain_start, v.domain_start + 1.0, 1.0)
    v.tail(probe)  # raises DivergentTail when the frame has no tail
    if v.domain_start == 0.0:
        integrable_origin = not quadrature.origin_nonintegrable_evidence(
            lambda s: 1.0 / v(s), probe)
        if integrable_origin:
            raise InvalidWeight(
                f"1/{v.label} looks integrable at 0; the frame variable "
                "t(r) would not cover all of (0, inf)")
    vm = VarMap(v)

    def Abar(r: float) -> float:
        t = vm.forward(r)
        return K(t) * t**4 / v(r) ** 2

    pot = PotentialSpec.from_callable(
        Abar,
        domain_start=v.domain_start,
        sign_hint=K.sign_hint,
        label=f"[{K.label}] in frame {v.label}",
    )
    return TransformedProblem(
        weight=v, potential=pot, var_map=vm,
        provenance=f"frame change via t(r) = 1/tail_{v.label}(r); z = g(t)/t",
        flags={"initial_contract_vz_over_z_zero": True},
    )


def weight_shift(v: Weight, A: PotentialSpec, W: PotentialSpec,
                 w: ShiftWeight, *, grid: Sequence[float] | None = None,
                 tolerance: float = 1e-6) -> TransformedProblem:
    """Shift the sign-changing potential A by W >= 0 using the positive
    supersolution w of (v w')' - W v w >= 0.

    Returns the problem with weight v w^2 and potential A + W, recording
    that the shifted solution is z / w. The grid verifies W >= 0,
    A + W >= 0 and the defining differential inequality of w by centered
    second differences.
    """
    if grid is None:
        start = max(v.domain_start, w.positivity_start)
        grid = np.geomspace(max(start + 1e-3, 1e-3), max(100.0, start + 100.0), 80)
    bad = [t for t in grid if W(t) < -tolerance]
    if bad:
        raise NegativeShiftedPotential(f"W < 0 at t={bad[0]}")
    bad = [t for t in grid if A(t) + W(t) < -tolerance]
    if bad:
        raise NegativeShiftedPotential(f"A + W < -{tolerance} at t={bad[0]}")
    worst = _shift_residual(v, w, W, grid)
    if worst > tolerance:
        raise NegativeShiftedPotential(
            f"shift function violates (v w')' - W v w >= 0 by {worst:.3e}")

    unit_frame = v.label == "one"
    if unit_frame and w.closed_tail is not None:
        from .weights import shift_weight_squared
        new_weight = shift_weight_squared(w)
    else:
        def fn(t: float) -> float:
            return v(t) * w(t) ** 2

        log_fn = None
        if w.log_squared is not None:
            log_fn = lambda t: v.log_value(t) + w.log_sq(t)
        new_weight = Weight(fn, domain_start=max(v.domain_start, w.positivity_start),
                            label=f"{v.label}*({w.label})^2", log_fn=log_fn)

    def shifted(t: float) -> float:
        return A(t) + W(t)

    pot = PotentialSpec.from_callable(
        shifted, domain_start=A.domain_start, sign_hint="nonnegative",
        label=f"[{A.label}] + [{W.label}]")
    flags = {
        "initial_contract_vz_over_z_zero": unit_frame and w.vanishes_at_zero,
    }
    return TransformedProblem(
        weight=new_weight, potential=pot, var_map=None,
        provenance=(f"shift by w = {w.label} ({w.source_inequality}); "
                    "shifted solution is z / w"),
        flags=flags)


def _shift_residual(v: Weight, w: ShiftWeight, W: PotentialSpec,
                    grid: Sequence[float]) -> float:
    """Max violation of (v w')' - W v w >= 0, scaled, by second differences."""
    worst = 0.0
    for t in grid:
        h = max(1e-4, 1e-4 * t)
        if t - h <= max(v.domain_start, 0.0):
            continue
        vp = v(t + h / 2.0)
        vm = v(t - h / 2.0)
        flux = (vp * (w(t + h) - w(t)) - vm * (w(t) - w(t - h))) / (h * h)
        val = flux - W(t) * v(t) * w(t)
        scale = max(1.0, abs(v(t) * w(t)) * (1.0 + abs(W(t))))
        worst = max(worst, max(0.0, -val / scale))
    return worst


def refine_ladder(v: Weight, depth: int) -> list[tuple[Weight, CriticalCurve]]:
    """Iterate the critical-curve refinement ``depth`` times.

    Stage k+1 uses w(t) = -sqrt(T_k(t)) log T_k(t) where T_k is the tail of
    the stage-k weight; the new weight is v_k w^2 and its tail is
    -1/log T_k, in closed form, valid past the point where T_k drops below
    one (which is exactly where w turns positive).
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    try:
        from .weights import critical_curve
        out = [(v, critical_curve(v))]
    except DivergentTail as exc:
        raise LadderStall(f"stage 0: {exc}") from exc
    current = v
    for stage in range(1, depth + 1):
        try:
            current = _ladder_stage(current, stage)
            from .weights import critical_curve
            out.append((current, critical_curve(current)))
        except DivergentTail as exc:
            raise LadderStall(f"stage {stage}: {exc}") from exc
    return out


def _positivity_start(v: Weight) -> float:
    """First point past which the refinement factor is positive: where the
    tail of v drops below 1 (scan a geometric grid, then bisect)."""
    lo = max(2.0 * v.domain_start, v.domain_start + 1e-6, 1e-6)
    if v.tail(lo) <= 1.0:
        return v.domain_start
    hi = lo
    while v.tail(hi) > 1.0:
        hi *= 2.0
        if hi > _HARD_CAP:
            raise DivergentTail("tail never drops below 1 before the cap")
    return brentq(lambda r: v.tail(r) - 1.0, lo, hi, rtol=1e-12)


def _ladder_stage(v: Weight, stage: int) -> Weight:
    ps = _positivity_start(v)

    def wfactor(t: float) -> float:
        T = v.tail(t)
        return -math.sqrt(T) * math.log(T)

    def fn(t: float) -> float:
        return v(t) * wfactor(t) ** 2

    def closed_tail(t: float) -> float:
        T = v.tail(t)
        if T >= 1.0:
            raise DivergentTail(f"refined tail undefined at r={t} (tail >= 1)")
        return -1.0 / math.log(T)

    log_fn = None
    if v.log_fn is not None:
        def log_fn(t: float) -> float:
            T = v.tail(t)
            return v.log_value(t) + math.log(T) + 2.0 * math.log(-math.log(T))

    w = Weight(fn, domain_start=ps, closed_form_tail=closed_tail,
               label=f"refine^{stage}[{v.label}]", log_fn=log_fn)
    return w
