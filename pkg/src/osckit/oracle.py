"""Independent numerical ground truth for the criteria engine.

Both Cauchy problems are integrated with an adaptive embedded 5(4)
Runge-Kutta pair (scipy's RK45) with dense output; zeros are located as
sign-change events of the solution component and refined on the dense
interpolant. Trajectories that outgrow 1e150 are renormalized and the
accumulated log-scale recorded; zeros and sign patterns are invariant
under the rescaling, and growth fits correct for it.

Integration restarts at declared breakpoints of piecewise potentials so
the error control never steps across a jump. Undeclared discontinuities
degrade the integrator's order silently; declare them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .criteria import (FIRST_ZERO, INCONCLUSIVE, NONOSCILLATORY,
                       OSCILLATION_EVIDENCE, POSITIVE, Verdict)
from .errors import EnvelopeViolated, WeightVanishes
from .problems import PotentialSpec
from .weights import Weight

HORIZON_REACHED = "HorizonReached"
OVERFLOW = "Overflow"
STEP_UNDERFLOW = "StepUnderflow"

_RENORM_LIMIT = 1e150


@dataclass(frozen=True)
class ZeroReport:
    """Zeros, trajectory samples and termination status of one integration."""

    zeros: tuple
    count: int
    horizon: float
    trajectory: tuple  # of (t, y, yprime, logscale)
    max_error_estimate: float
    terminated: str
    start: float = 0.0

    def last_decade_zero_free(self) -> bool:
        lo = self.horizon / 10.0
        return not any(lo <= z <= self.horizon for z in self.zeros)

    def min_value_after(self, t_min: float) -> float:
        vals = [y for (t, y, _, _) in self.trajectory if t >= t_min]
        return min(vals) if vals else math.nan

    def to_dict(self) -> dict:
        return {
            "zeros": [float(z) for z in self.zeros],
            "count": self.count,
            "horizon": float(self.horizon),
            "start": float(self.start),
            "terminated": self.terminated,
            "max_error_estimate": float(self.max_error_estimate),
            "samples": len(self.trajectory),
        }


def _integrate(rhs: Callable, t0: float, y0: Sequence[float], horizon: float,
               *, breakpoints: Sequence[float], rtol: float, atol: float,
               n_samples: int, max_step: float | None = None) -> ZeroReport:
    segments = [t0] + sorted(b for b in set(breakpoints) if t0 < b < horizon)
    segments.append(horizon)
    zeros: list[float] = []
    samples: list[tuple] = []
    logscale = 0.0
    y = np.array(y0, dtype=float)
    steps = 0
    terminated = HORIZON_REACHED

    def zero_event(t, yv):
        return yv[0]

    def renorm_event(t, yv):
        return abs(yv[0]) + abs(yv[1]) - _RENORM_LIMIT

    renorm_event.terminal = True
    renorm_event.direction = 1.0

    for a, b in zip(segments, segments[1:]):
        t_cur = a
        while t_cur < b:
            sol = solve_ivp(rhs, (t_cur, b), y, method="RK45",
                            rtol=rtol, atol=atol, dense_output=True,
                            events=[zero_event, renorm_event],
                            max_step=max_step or np.inf)
            steps += len(sol.t) - 1
            span = sol.t[-1] - sol.t[0]
            if span > 0:
                n_here = max(8, int(n_samples * span / (horizon - t0)))
                ts = np.linspace(sol.t[0], sol.t[-1], n_here)
                ys = sol.sol(ts)
                samples.extend(
                    (float(t), float(g), float(gp), logscale)
                    for t, g, gp in zip(ts, ys[0], ys[1]))
            zeros.extend(float(z) for z in sol.t_events[0])
            if sol.status == 1:  # renormalization event
                y = sol.y[:, -1] / _RENORM_LIMIT
                logscale += math.log(_RENORM_LIMIT)
                t_cur = sol.t[-1]
                continue
            if sol.status == -1:
                terminated = STEP_UNDERFLOW
                if not np.all(np.isfinite(sol.y[:, -1])):
                    terminated = OVERFLOW
                return _finalize(zeros, samples, horizon, t0, y0, rtol, steps,
                                 terminated)
            y = sol.y[:, -1]
            t_cur = b
    return _finalize(zeros, samples, horizon, t0, y0, rtol, steps, terminated)


def _finalize(zeros, samples, horizon, t0, y0, rtol, steps, terminated):
    # drop the initial-condition zero and event duplicates at segment joins
    eps0 = 1e-10 * max(1.0, abs(t0))
    cleaned: list[float] = []
    for z in sorted(zeros):
        if y0[0] == 0.0 and z <= t0 + eps0:
            continue
        if cleaned and z - cleaned[-1] <= 1e-9 * max(1.0, abs(z)):
            continue
        cleaned.append(z)
    return ZeroReport(
        zeros=tuple(cleaned), count=len(cleaned), horizon=horizon,
        trajectory=tuple(samples),
        max_error_estimate=rtol * max(1, steps),
        terminated=terminated, start=t0)


def integrate_cp(K: PotentialSpec, horizon: float, *,
                 start: float | None = None, g0: float = 0.0,
                 gprime0: float = 1.0, rtol: float = 1e-10,
                 atol: float = 1e-12, n_samples: int = 600,
                 max_step: float | None = None) -> ZeroReport:
    """Integrate g'' + K g = 0 from (g0, gprime0) at ``start``.

    Defaults reproduce the canonical initial data g(0) = 0, g'(0) = 1;
    potentials whose domain begins after zero are integrated from their
    domain start with the same data (matched initial conditions).
    """
    t0 = start if start is not None else max(0.0, K.domain_start)

    def rhs(t, y):
        return (y[1], -K(t) * y[0])

    return _integrate(rhs, t0, (g0, gprime0), horizon,
                      breakpoints=K.breakpoints(), rtol=rtol, atol=atol,
                      n_samples=n_samples, max_step=max_step)


def integrate_weighted(v: Weight, A: PotentialSpec, r0: float, z0: float,
                       p0: float, horizon: float, *, eps: float = 1e-6,
                       rtol: float = 1e-10, atol: float = 1e-12,
                       n_samples: int = 600) -> ZeroReport:
    """Integrate the first-order system z' = p / v, p' = -A v z.

    For r0 = 0 with a weight vanishing at the origin, integration starts
    at the offset ``eps`` with z(eps) = z0 and p(eps) = 0, realizing the
    contract (v z')(0+) = 0 of the singular initial value problem; the
    offset sensitivity is checked by rerunning at eps / 10.
    """
    if r0 == 0.0:
        if v.domain_start > 0.0:
            raise ValueError("r0 = 0 needs a weight defined near the origin")
        t0, y0 = eps, (z0, 0.0)
    else:
        if r0 <= v.domain_start:
            raise ValueError(f"r0 must exceed the weight domain start "
                             f"{v.domain_start}")
        t0, y0 = r0, (z0, p0)

    def rhs(t, y):
        val = v(t)
        if val <= 0.0:
            raise WeightVanishes(f"{v.label} <= 0 at r={t}")
        return (y[1] / val, -A(t) * val * y[0])

    return _integrate(rhs, t0, y0, horizon, breakpoints=A.breakpoints(),
                      rtol=rtol, atol=atol, n_samples=n_samples)


# --- agreement with criteria ---------------------------------------------------

AGREE = "AGREE"
AGREE_WITH_ANNOTATION = "AGREE-with-annotation"
CONTRADICTION = "CONTRADICTION"
NOT_APPLICABLE = "NOT-APPLICABLE"


@dataclass(frozen=True)
class AgreementRecord:
    criterion: str
    classification: str
    status: str
    note: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"criterion": self.criterion,
                "classification": self.classification,
                "status": self.status, "note": self.note,
                "details": {k: float(v) for k, v in sorted(self.details.items())}}


def cross_validate(verdict: Verdict, report: ZeroReport) -> AgreementRecord:
    """Check a verdict against the oracle's zero report.

    FirstZero needs a zero at or before the bound; Positive needs a
    zero-free, positive trajectory; Nonoscillatory needs the last decade
    of the horizon zero-free; OscillationEvidence needs two zeros, or one
    zero together with a drift-rate annotation placing the next zero
    beyond the integration horizon (nested-log spacing is physically
    unreachable; the annotation records the honest substitute).
    """
    cls = verdict.classification
    details: dict = {"count": float(report.count)}
    if cls == INCONCLUSIVE:
        return AgreementRecord(verdict.criterion, cls, NOT_APPLICABLE,
                               "criterion made no claim", details)
    if cls == POSITIVE:
        min_val = report.min_value_after(report.start + 1e-9)
        details["min_value"] = min_val
        ok = report.count == 0 and min_val > 0.0
        return AgreementRecord(verdict.criterion, cls,
                               AGREE if ok else CONTRADICTION,
                               "" if ok else "zero found or negative dip",
                               details)
    if cls == NONOSCILLATORY:
        ok = report.last_decade_zero_free()
        return AgreementRecord(verdict.criterion, cls,
                               AGREE if ok else CONTRADICTION,
                               "" if ok else "zeros persist near the horizon",
                               details)
    if cls == FIRST_ZERO:
        if report.count < 1:
            return AgreementRecord(verdict.criterion, cls, CONTRADICTION,
                                   "no zero found below the horizon", details)
        details["first_zero"] = report.zeros[0]
        if verdict.bound is None:
            return AgreementRecord(verdict.criterion, cls, AGREE,
                                   "criterion carries no position bound",
                                   details)
        details["bound"] = verdict.bound
        tol = 1e-6 * max(1.0, verdict.bound)
        ok = report.zeros[0] <= verdict.bound + tol
        return AgreementRecord(verdict.criterion, cls,
                               AGREE if ok else CONTRADICTION,
                               "" if ok else "first zero beyond the bound",
                               details)
    if cls == OSCILLATION_EVIDENCE:
        if report.count >= 2:
            return AgreementRecord(verdict.criterion, cls, AGREE, "", details)
        estimate = verdict.witnesses.get("next_zero_estimate")
        if report.count >= 1 and estimate is not None \
                and estimate > report.horizon:
            details["next_zero_estimate"] = min(estimate, 1e308)
            return AgreementRecord(
                verdict.criterion, cls, AGREE_WITH_ANNOTATION,
                "slow oscillation: drift rate places the next zero beyond "
                "the integration horizon", details)
        return AgreementRecord(verdict.criterion, cls, CONTRADICTION,
                               "fewer zeros than oscillation requires",
                               details)
    return AgreementRecord(verdict.criterion, cls, NOT_APPLICABLE,
                           f"unknown classification {cls}", details)


def growth_envelope_fit(report: ZeroReport,
                        envelope: Callable[[float], float],
                        *, window_decades: float = 2.0
                        ) -> tuple[float, float]:
    """Fit the largest C with trajectory >= C * envelope on the last decades.

    Returns (C, spread) where spread is the standard deviation of
    log(trajectory / envelope) over the window (0 for a perfect shape
    match). Raises EnvelopeViolated when no positive C exists or when the
    ratio collapses across the window, which is the signature of an
    envelope growing strictly faster than the trajectory.
    """
    lo = report.horizon / 10.0**window_decades
    log_ratios = []
    for (t, y, _, logscale) in report.trajectory:
        if t < lo or t <= report.start:
            continue
        try:
            env = envelope(t)
        except ValueError:
            continue
        if not math.isfinite(env) or env <= 0.0:
            continue
        if y <= 0.0:
            raise EnvelopeViolated(f"trajectory not positive at t={t}")
        log_ratios.append(math.log(y) + logscale - math.log(env))
    if len(log_ratios) < 8:
        raise EnvelopeViolated("window too small for a fit")
    arr = np.array(log_ratios)
    median = float(np.median(arr))
    if arr[-1] < median + math.log(0.1):
        raise EnvelopeViolated(
            "trajectory/envelope ratio collapses across the window; "
            "the envelope grows faster than the solution")
    c = math.exp(float(arr.min()))
    spread = float(arr.std())
    return c, spread
