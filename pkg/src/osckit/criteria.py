"""Verdict-producing criteria and the compactness certifier.

Every operation here classifies qualitative behaviour of solutions of
g'' + K g = 0 (plain frame) or (v z')' + A v z = 0 (weighted frame):
positivity, nonoscillation, existence and position of a first zero, or
oscillation. Verdicts carry the criterion applied, numeric witnesses and
an evidence grade:

* ``Certified``            - sign established by interval evaluation;
* ``FiniteFormCertified``  - a finite-form inequality evaluated to strict
                             satisfaction (quadrature accuracy);
* ``AsymptoticEvidence``   - a limsup-type condition graded through the
                             finite divergence protocol below.

Limsup conditions are undecidable from finite data. The divergence
protocol evaluates the relevant functional at geometric checkpoints and
reports divergence evidence iff the last increments are all positive and
the total rise exceeds a threshold; the grade makes the epistemic status
explicit and the oracle cross-validation backs it independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import quadrature, specialfn, transforms
from .errors import (BracketFailure, DivergentTail, FamilyMismatch,
                     InvalidRange, NegativeShiftedPotential)
from .problems import PotentialSpec
from .weights import CriticalCurve, Weight, critical_curve, ladder_weight

STRICT_MARGIN = 1e-9

POSITIVE = "Positive"
NONOSCILLATORY = "Nonoscillatory"
FIRST_ZERO = "FirstZero"
OSCILLATION_EVIDENCE = "OscillationEvidence"
INCONCLUSIVE = "Inconclusive"

CERTIFIED = "Certified"
FINITE_FORM = "FiniteFormCertified"
ASYMPTOTIC = "AsymptoticEvidence"


@dataclass(frozen=True)
class Verdict:
    classification: str
    criterion: str
    witnesses: dict = field(default_factory=dict)
    bound: float | None = None
    evidence_grade: str | None = None
    notes: tuple = ()
    envelope: Callable[[float], float] | None = None
    envelope_description: str = ""

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "criterion": self.criterion,
            "witnesses": {k: float(v) for k, v in sorted(self.witnesses.items())},
            "bound": None if self.bound is None else float(self.bound),
            "evidence_grade": self.evidence_grade,
            "notes": list(self.notes),
            "envelope": self.envelope_description or None,
        }


@dataclass(frozen=True)
class ZeroBound:
    R_bar: float
    bracket: tuple
    residual: float


@dataclass(frozen=True)
class SearchGrid:
    lo: float = 1e-2
    hi: float = 1e3
    n: int = 24

    def points(self, start: float = 0.0) -> np.ndarray:
        lo = max(self.lo, start * (1.0 + 1e-9)) if start > 0 else self.lo
        if lo >= self.hi:
            return np.array([])
        return np.geomspace(lo, self.hi, self.n)


@dataclass(frozen=True)
class DivergenceProtocol:
    """Finite-checkpoint grading of limsup = +inf conditions.

    Checkpoints are t_k = t0 * factor^k, k <= max_checkpoints. Divergence
    evidence requires the last ``tail_increments`` increments to be
    positive and the sequence to exceed ``threshold`` above its initial
    value. The threshold is calibrated so that genuinely divergent
    nested-log drifts (which rise by only a few units over forty
    doublings) are detected while bounded functionals of unit size are
    not; it is configurable for potentials with larger bounded swings.
    """

    factor: float = 2.0
    max_checkpoints: int = 40
    threshold: float = 2.0
    tail_increments: int = 5

    def checkpoints(self, t0: float) -> np.ndarray:
        return t0 * self.factor ** np.arange(0, self.max_checkpoints + 1)

    def classify(self, values: Sequence[float]) -> tuple[bool, dict]:
        vals = np.asarray(values, dtype=float)
        stats = {"initial": float(vals[0]), "final": float(vals[-1]),
                 "rise": float(vals[-1] - vals[0])}
        if len(vals) < self.tail_increments + 1:
            return False, stats
        incs = np.diff(vals)[-self.tail_increments:]
        diverges = bool(np.all(incs > 0.0) and
                        vals[-1] - vals[0] > self.threshold)
        stats["last_increment"] = float(incs[-1])
        return diverges, stats


# --- shared numeric helpers --------------------------------------------------

def _sqrt_clamped(A: PotentialSpec) -> Callable[[float], float]:
    def f(s: float) -> float:
        return math.sqrt(max(A(s), 0.0))
    return f


def _cumulative_integrals(fn: Callable[[float], float],
                          pts: Sequence[float],
                          breakpoints: Sequence[float] = ()) -> list[float]:
    """Integrals of fn from pts[0] to each grid point."""
    out = [0.0]
    for a, b in zip(pts, pts[1:]):
        out.append(out[-1] + quadrature.finite_integral(
            fn, a, b, breakpoints=breakpoints))
    return out


def _origin_mass(A: PotentialSpec, v: Weight, R: float) -> float:
    """int_0^R A v with the singular endpoint approached from below."""
    def integrand(s: float) -> float:
        a = A(s)
        return 0.0 if a == 0.0 else a * v(s)

    return quadrature.lower_integral(
        integrand, max(0.0, v.domain_start, A.domain_start), R,
        breakpoints=A.breakpoints())


def _evidence_grid(start: float, horizon: float, n: int) -> np.ndarray:
    lo = start + 1e-6 if start > 0 else 1e-6
    return np.geomspace(lo, max(horizon, 10 * lo), n)


def _interval_certifies_below(A: PotentialSpec, v: Weight, start: float,
                              horizon: float, panels: int = 48) -> bool:
    """Try to prove A <= chi on [start, inf) by interval evaluation.

    Conservative: compares the interval upper bound of A against the
    interval lower bound of the closed-form critical curve on log-spaced
    panels plus one unbounded tail panel. Failure to prove is not a
    counterexample.
    """
    if A.expression is None or v.chi_expression is None:
        return False
    lo = max(start, v.domain_start * (1 + 1e-9), 1e-9)
    edges = list(np.geomspace(lo, horizon, panels)) + [math.inf]
    try:
        for a, b in zip(edges, edges[1:]):
            chi_iv = v.chi_expression.interval(a, b, v.chi_params)
            a_iv = A.expression.interval(a, b, A.params)
            if chi_iv.lo < a_iv.hi:
                return False
    except (ValueError, OverflowError, ZeroDivisionError):
        return False
    return True


def _lower_envelope(f: Weight, scale: float = 1.0):
    """The guaranteed asymptotic shape -sqrt(tail_f) log tail_f (positive
    once the tail has dropped below one)."""
    def env(r: float) -> float:
        T = f.tail(r)
        return -scale * math.sqrt(T) * math.log(T)
    return env


# --- pointwise comparison criteria -------------------------------------------

def check_positivity(A: PotentialSpec, v: Weight, *, horizon: float = 1e6,
                     grid_n: int = 160) -> Verdict:
    """Positivity from A <= chi over the full declared domain.

    On success the verdict carries the lower-bound envelope shape
    -C sqrt(tail(r)) log tail(r); the constant C is determined post hoc by
    fitting the oracle trajectory.
    """
    chi = critical_curve(v)
    start = max(A.domain_start, v.domain_start)
    grid = _evidence_grid(start, horizon, grid_n)
    for r in grid:
        c = chi(r)
        if A(r) > c + STRICT_MARGIN * (1.0 + abs(c)):
            return Verdict(INCONCLUSIVE, "positivity",
                           witnesses={"violation_at": r, "A": A(r), "chi": c})
    grade = CERTIFIED if _interval_certifies_below(A, v, start, horizon) \
        else ASYMPTOTIC
    return Verdict(
        POSITIVE, "positivity",
        witnesses={"grid_lo": float(grid[0]), "grid_hi": float(grid[-1]),
                   "grid_n": float(len(grid))},
        evidence_grade=grade,
        envelope=_lower_envelope(v),
        envelope_description="-C sqrt(tail(r)) log tail(r) for tail(r) < 1",
        notes=("pointwise comparison A <= chi sampled over the declared domain",))


def check_nonoscillation(A: PotentialSpec, v: Weight, r0: float, *,
                         horizon: float = 1e6, grid_n: int = 160) -> Verdict:
    """Nonoscillation from A <= chi on [r0, inf)."""
    chi = critical_curve(v)
    start = max(r0, v.domain_start)
    grid = _evidence_grid(start, horizon, grid_n)
    for r in grid:
        c = chi(r)
        if A(r) > c + STRICT_MARGIN * (1.0 + abs(c)):
            return Verdict(INCONCLUSIVE, "nonoscillation",
                           witnesses={"violation_at": r, "A": A(r), "chi": c})
    grade = CERTIFIED if _interval_certifies_below(A, v, start, horizon) \
        else ASYMPTOTIC
    return Verdict(NONOSCILLATORY, "nonoscillation",
                   witnesses={"r0": r0, "grid_hi": float(grid[-1])},
                   evidence_grade=grade)


# --- finite-form first-zero criteria ------------------------------------------

def _first_zero_scan(A: PotentialSpec, v: Weight, f: Weight,
                     search: SearchGrid, *, collect_all: bool):
    """Scan (R, r) pairs for the finite-form first-zero inequality

        int_R^r (sqrt A - sqrt chi_f) > -1/2 (log int_0^R A v + log tail_f(R)).

    The sqrt(chi_f) path integral is evaluated through the tail-ratio
    identity, so the inequality is equivalently tested in its simplified
    form against log tail_f(r). Pairs with int_0^R A v = 0 are skipped
    (the criterion requires mass before R).
    """
    start = max(v.domain_start, f.domain_start)
    pts = search.points(start)
    if len(pts) < 2:
        return []
    cums = _cumulative_integrals(_sqrt_clamped(A), pts, A.breakpoints())
    hits = []
    for i, R in enumerate(pts):
        mass = _origin_mass(A, v, R)
        if mass <= 0.0 or not math.isfinite(mass):
            continue
        log_mass = math.log(mass)
        for j in range(i + 1, len(pts)):
            r = pts[j]
            lhs = cums[j] - cums[i]
            try:
                rhs = -0.5 * (log_mass + f.log_tail(r))
            except (ValueError, OverflowError):
                continue
            margin = lhs - rhs
            if margin > STRICT_MARGIN:
                hits.append({"R": float(R), "r": float(r),
                             "margin": float(margin), "mass": float(mass),
                             "sqrtA": float(lhs)})
                if not collect_all:
                    return hits
    return hits


def check_first_zero(A: PotentialSpec, v: Weight, f: Weight | None = None,
                     search: SearchGrid = SearchGrid()) -> Verdict:
    """First zero in finite form; on success the bound R_bar is attached."""
    f = f or v
    probe = _evidence_grid(max(A.domain_start, v.domain_start), search.hi, 60)
    if not A.nonneg_evidence(probe):
        return Verdict(INCONCLUSIVE, "first_zero",
                       notes=("requires A >= 0; negative samples found",))
    hits = _first_zero_scan(A, v, f, search, collect_all=False)
    if not hits:
        return Verdict(INCONCLUSIVE, "first_zero",
                       witnesses={"grid_lo": search.lo, "grid_hi": search.hi,
                                  "grid_n": float(search.n)})
    hit = hits[0]
    zb = solve_position_bound(A, v, f, hit["R"], hit["r"])
    return Verdict(FIRST_ZERO, "first_zero",
                   witnesses={**hit, "residual": zb.residual},
                   bound=zb.R_bar, evidence_grade=FINITE_FORM)


def solve_position_bound(A: PotentialSpec, v: Weight, f: Weight,
                         R: float, r: float) -> ZeroBound:
    """Solve for the unique R_bar with

        int_R^r sqrt A = -1/2 log int_0^R A v - 1/2 log int_r^R_bar ds/f

    by monotone bracketing on the tail of f. Residual <= 1e-8 or the
    bracketing is reported as failed.
    """
    L = quadrature.finite_integral(_sqrt_clamped(A), R, r,
                                   breakpoints=A.breakpoints())
    mass = _origin_mass(A, v, R)
    if mass <= 0.0:
        raise BracketFailure("int_0^R A v vanishes; no finite bound exists")
    log_target = -2.0 * L - math.log(mass)  # log of int_r^R_bar ds/f needed
    log_tail_r = f.log_tail(r)
    tail_r = f.tail(r)
    if log_target >= log_tail_r:
        raise BracketFailure(
            "finite-form inequality not satisfied at (R, r); "
            f"needed log tail mass {log_target:.3e} >= available "
            f"{math.log(tail_r):.3e}")
    target = math.exp(log_target)  # may underflow to 0; handled below

    if target > 1e-8 * tail_r:
        # well conditioned as a difference of tails
        def h(x: float) -> float:
            return (tail_r - f.tail(x)) - target

        hi = r * 2.0
        while h(hi) < 0.0:
            hi *= 2.0
            if hi > 1e12:
                raise BracketFailure("no bracket for R_bar below 1e12")
        R_bar = brentq(h, r, hi, rtol=1e-14, maxiter=200)
        achieved = tail_r - f.tail(R_bar)
        bracket = (r, hi)
    else:
        # tiny required mass: the bound collapses onto r itself; integrate
        # increments directly to dodge tail cancellation
        log_step = log_target + f.log_value(r)
        step = math.exp(log_step) if log_step > -700.0 else 0.0
        if step <= 1e-12 * max(1.0, r):
            # defining equation satisfied identically to first order
            return ZeroBound(R_bar=r + step, bracket=(r, r + step),
                             residual=0.0)

        def g(x: float) -> float:
            return quadrature.finite_integral(
                lambda s: 1.0 / f(s), r, x) - target

        hi = r + 2.0 * step
        while g(hi) < 0.0:
            hi = r + 2.0 * (hi - r)
            if hi > 1e12:
                raise BracketFailure("no bracket for R_bar below 1e12")
        R_bar = brentq(g, r, hi, rtol=1e-14, maxiter=200)
        achieved = quadrature.finite_integral(lambda s: 1.0 / f(s), r, R_bar)
        bracket = (r, hi)
    residual = L + 0.5 * math.log(mass) + 0.5 * math.log(achieved)
    if abs(residual) > 1e-8:
        raise BracketFailure(f"position-bound residual {residual:.2e} > 1e-8")
    return ZeroBound(R_bar=R_bar, bracket=bracket, residual=abs(residual))


def calabi_finite_form(K: PotentialSpec, a: float, b: float) -> Verdict:
    """First zero when int_a^b sqrt(K) exceeds sqrt((1 + log(b/a)/2)^2 - 1)."""
    if a >= b or a <= 0:
        raise InvalidRange(f"need 0 < a < b, got a={a}, b={b}")
    probe = _evidence_grid(max(K.domain_start, 0.0), 2 * b, 60)
    if not K.nonneg_evidence(probe):
        return Verdict(INCONCLUSIVE, "calabi_finite_form",
                       notes=("requires K >= 0; negative samples found",))
    lhs = quadrature.finite_integral(_sqrt_clamped(K), a, b,
                                     breakpoints=K.breakpoints())
    rhs = math.sqrt((1.0 + 0.5 * math.log(b / a)) ** 2 - 1.0)
    if lhs > rhs + STRICT_MARGIN:
        return Verdict(FIRST_ZERO, "calabi_finite_form",
                       witnesses={"a": a, "b": b, "lhs": lhs, "rhs": rhs,
                                  "margin": lhs - rhs},
                       evidence_grade=FINITE_FORM,
                       notes=("no positional bound from this criterion",))
    return Verdict(INCONCLUSIVE, "calabi_finite_form",
                   witnesses={"a": a, "b": b, "lhs": lhs, "rhs": rhs})


def mrv_first_zero(K: PotentialSpec, B: float, a: float, b: float,
                   lam: float) -> Verdict:
    """Finite-form first zero for K >= -B^2 via moment inequalities.

    lam = 1 tests int_a^b s K ds against B(b + a coth(Ba)) + log(b/a)/4;
    other lam test int_a^b s^lam K ds against
    B(b^lam + a^lam coth(Ba)) + lam^2 (a^(lam-1) - b^(lam-1)) / (4(1-lam)).
    B = 0 uses the analytic limits of these right-hand sides.
    """
    if a >= b or a <= 0:
        raise InvalidRange(f"need 0 < a < b, got a={a}, b={b}")
    if B < 0:
        raise ValueError("B must be >= 0")
    probe = _evidence_grid(max(K.domain_start, 0.0), 2 * b, 60)
    floor = -B * B - 1e-9
    if not all(K(t) >= floor for t in probe):
        return Verdict(INCONCLUSIVE, "mrv_first_zero",
                       notes=(f"requires K >= -B^2 = {-B * B}; "
                              "lower-bound evidence failed",))
    lhs = quadrature.finite_integral(lambda s: s**lam * K(s), a, b,
                                     breakpoints=K.breakpoints())
    if B == 0.0:
        if lam == 1.0:
            rhs = 1.0 + 0.25 * math.log(b / a)
        else:
            rhs = a ** (lam - 1.0) + lam * lam / (4.0 * (1.0 - lam)) * (
                a ** (lam - 1.0) - b ** (lam - 1.0))
    else:
        cth = 1.0 / math.tanh(B * a)
        if lam == 1.0:
            rhs = B * (b + a * cth) + 0.25 * math.log(b / a)
        else:
            rhs = B * (b**lam + a**lam * cth) + lam * lam / (4.0 * (1.0 - lam)) * (
                a ** (lam - 1.0) - b ** (lam - 1.0))
    if lhs > rhs + STRICT_MARGIN:
        return Verdict(FIRST_ZERO, "mrv_first_zero",
                       witnesses={"a": a, "b": b, "lambda": lam, "B": B,
                                  "lhs": lhs, "rhs": rhs, "margin": lhs - rhs},
                       evidence_grade=FINITE_FORM,
                       notes=("no positional bound from this criterion",))
    return Verdict(INCONCLUSIVE, "mrv_first_zero",
                   witnesses={"a": a, "b": b, "lambda": lam, "B": B,
                              "lhs": lhs, "rhs": rhs})


# --- limsup criteria -----------------------------------------------------------

def _drift_rate_estimate(ts: np.ndarray, vals: list[float]) -> float | None:
    """Estimated functional rise per unit of log log t at the last
    checkpoints; used for the slow-oscillation next-zero annotation."""
    usable = [(t, v) for t, v in zip(ts, vals) if t > math.e * 1.01]
    if len(usable) < 2:
        return None
    (t1, v1), (t2, v2) = usable[-2], usable[-1]
    dll = math.log(math.log(t2)) - math.log(math.log(t1))
    if dll <= 0:
        return None
    return (v2 - v1) / dll


def _next_zero_estimate(ts: np.ndarray, vals: list[float]) -> float | None:
    """Order-of-magnitude position of the next zero: where the functional
    would have risen by a half-period pi beyond its last checkpoint."""
    rate = _drift_rate_estimate(ts, vals)
    if rate is None or rate <= 0:
        return None
    arg = math.log(math.log(ts[-1])) + math.pi / rate
    if arg > 700.0:
        return math.inf
    inner = math.exp(arg)
    return math.inf if inner > 700.0 else math.exp(inner)


def check_oscillation(A: PotentialSpec, v: Weight, f: Weight, R: float, *,
                      protocol: DivergenceProtocol = DivergenceProtocol()
                      ) -> Verdict:
    """Oscillation evidence from the divergence of

        F(r) = int_R^r sqrt(A) + 1/2 log tail_f(r)

    graded through the divergence protocol (never more than evidence)."""
    start = max(R, v.domain_start, f.domain_start)
    ts = protocol.checkpoints(max(start, 1e-6))
    probe = _evidence_grid(start, ts[-1], 80)
    if not A.nonneg_evidence(probe):
        return Verdict(INCONCLUSIVE, "oscillation",
                       notes=("requires A >= 0 on [R, inf); negative "
                              "samples found",))
    cums = _cumulative_integrals(_sqrt_clamped(A), ts, A.breakpoints())
    vals = []
    for c, t in zip(cums, ts):
        try:
            vals.append(c + 0.5 * f.log_tail(t))
        except (ValueError, OverflowError):
            break
    ts = ts[:len(vals)]
    diverges, stats = protocol.classify(vals)
    witnesses = {"R": R, "horizon": float(ts[-1]), **stats}
    nz = _next_zero_estimate(ts, vals)
    if nz is not None:
        witnesses["next_zero_estimate"] = nz
    if diverges:
        return Verdict(OSCILLATION_EVIDENCE, "oscillation",
                       witnesses=witnesses, evidence_grade=ASYMPTOTIC)
    return Verdict(INCONCLUSIVE, "oscillation", witnesses=witnesses)


def hille_nehari(K: PotentialSpec, horizon: float = 1e6, *,
                 t0: float | None = None, margin: float = 0.05,
                 settle_tol: float = 1e-3) -> Verdict:
    """Classical tail-moment criterion with k(t) = t int_t^inf K.

    Oscillation evidence needs the checkpoint estimate of the lower tail
    limit to exceed 1/4 + margin *and* to have stabilized (limits are
    estimated, and a sequence still drifting toward 1/4 must stay
    inconclusive no matter how far above 1/4 its current value sits).
    Non-integrable tails short-circuit to oscillation evidence. If every
    checkpoint past a burn-in satisfies k <= 1/4 the verdict is
    nonoscillatory; when the early samples satisfy it too, the solution is
    in fact positive and increasing, recorded as a witness flag.
    """
    start = max(t0 if t0 is not None else 1.0,
                K.domain_start * 1.01 if K.domain_start > 0 else 1.0)
    probe = _evidence_grid(K.domain_start, horizon, 80)
    if not K.nonneg_evidence(probe):
        return Verdict(INCONCLUSIVE, "hille_nehari",
                       notes=("requires K >= 0; negative samples found",))
    n = max(6, int(math.floor(math.log(horizon / start) / math.log(2.0))))
    ts = start * 2.0 ** np.arange(0, n + 1)
    try:
        tail_last = quadrature.tail_integral_numeric(
            lambda s: max(K(s), 0.0), float(ts[-1]),
            breakpoints=K.breakpoints())
    except DivergentTail:
        return Verdict(OSCILLATION_EVIDENCE, "hille_nehari",
                       witnesses={"k_lo": math.inf, "k_hi": math.inf},
                       evidence_grade=ASYMPTOTIC,
                       notes=("potential not integrable at infinity",))
    segs = _cumulative_integrals(lambda s: max(K(s), 0.0), ts,
                                 K.breakpoints())
    tails = [tail_last + (segs[-1] - c) for c in segs]
    ks = [float(t) * T for t, T in zip(ts, tails)]

    window = max(4, len(ks) // 4)
    k_window = ks[-window:]
    k_lo, k_hi = min(k_window), max(k_window)
    incs = np.abs(np.diff(ks[-4:]))
    settled = bool(np.all(incs <= settle_tol * max(1.0, abs(ks[-1]))))
    witnesses = {"k_lo": k_lo, "k_hi": k_hi, "settled": float(settled),
                 "checkpoints": float(len(ks)), "t_last": float(ts[-1])}

    if k_lo > 0.25 + margin and settled:
        return Verdict(OSCILLATION_EVIDENCE, "hille_nehari",
                       witnesses=witnesses, evidence_grade=ASYMPTOTIC)
    burn_in = len(ks) // 3
    if all(k <= 0.25 + 1e-12 for k in ks[burn_in:]):
        notes = []
        early = _evidence_grid(K.domain_start, start, 16)
        early_ks = []
        for t in early:
            seg = quadrature.finite_integral(lambda s: max(K(s), 0.0),
                                             float(t), float(ts[0]),
                                             breakpoints=K.breakpoints())
            early_ks.append(float(t) * (tails[0] + seg))
        if all(k <= 0.25 + 1e-12 for k in early_ks + ks):
            witnesses["kneser_positive_increasing"] = 1.0
            notes.append("k <= 1/4 at every sample: solution positive "
                         "and increasing on the whole half-line")
        return Verdict(NONOSCILLATORY, "hille_nehari", witnesses=witnesses,
                       evidence_grade=ASYMPTOTIC, notes=tuple(notes))
    return Verdict(INCONCLUSIVE, "hille_nehari", witnesses=witnesses,
                   notes=("tail moments neither settled above 1/4 nor "
                          "below it",))


def moore(K: PotentialSpec, lam: float, horizon: float = 1e9, *,
          protocol: DivergenceProtocol = DivergenceProtocol()) -> Verdict:
    """Oscillation evidence from the divergence of int s^lam K(s) ds.

    The underlying theorem needs the limit to exist; bounded or
    oscillating partial sums stay inconclusive."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    start = max(K.domain_start, 0.0)
    t0 = max(start * 1.01, 1e-2) if start > 0 else 1e-2
    ts = protocol.checkpoints(t0)
    ts = ts[ts <= horizon] if ts[-1] > horizon else ts
    head = quadrature.lower_integral(lambda s: s**lam * K(s), start,
                                     float(ts[0]),
                                     breakpoints=K.breakpoints())
    cums = _cumulative_integrals(lambda s: s**lam * K(s), ts,
                                 K.breakpoints())
    vals = [head + c for c in cums]
    diverges, stats = protocol.classify(vals)
    witnesses = {"lambda": lam, "horizon": float(ts[-1]), **stats}
    if diverges:
        return Verdict(OSCILLATION_EVIDENCE, "moore", witnesses=witnesses,
                       evidence_grade=ASYMPTOTIC)
    return Verdict(INCONCLUSIVE, "moore", witnesses=witnesses)


@dataclass(frozen=True)
class PolyLowerBound:
    """K >= -B^2 t^alpha beyond t0 (negative-part comparison family)."""
    alpha: float
    B: float

    def floor(self, t: float) -> float:
        return -self.B**2 * t**self.alpha

    def drift(self, t: float) -> float:
        if self.alpha == -2.0:
            return 0.5 * math.sqrt(1.0 + 4.0 * self.B**2) * math.log(t)
        p = self.alpha / 2.0 + 1.0
        return 2.0 * self.B / (self.alpha + 2.0) * t**p

    def describe(self) -> str:
        return f"K >= -{self.B}^2 t^{self.alpha}"


@dataclass(frozen=True)
class EulerLowerBound:
    """K >= B^2 / t^2 beyond t0 with B in [0, 1/2]."""
    B: float

    def floor(self, t: float) -> float:
        return self.B**2 / t**2

    def drift(self, t: float) -> float:
        if self.B == 0.5:
            return 0.5 * math.log(math.log(t))
        return 0.5 * math.sqrt(1.0 - 4.0 * self.B**2) * math.log(t)

    def describe(self) -> str:
        return f"K >= {self.B}^2 / t^2"


def generalized_calabi(K: PotentialSpec, family, t0: float,
                       horizon: float | None = None, *,
                       protocol: DivergenceProtocol = DivergenceProtocol()
                       ) -> Verdict:
    """Oscillation evidence for potentials bounded below by a comparison
    family: the excess integral over the family's drift must diverge.

    family is PolyLowerBound(alpha, B) or EulerLowerBound(B); the drift is
    the closed-form tail contribution of the matching shift solution.
    """
    if isinstance(family, PolyLowerBound):
        if family.alpha < -2 or family.B <= 0:
            raise ValueError("poly family needs alpha >= -2 and B > 0")
    elif isinstance(family, EulerLowerBound):
        if not 0.0 <= family.B <= 0.5:
            raise ValueError("euler family needs B in [0, 1/2]")
    else:
        raise TypeError("family must be PolyLowerBound or EulerLowerBound")
    start = max(t0, K.domain_start * 1.01 if K.domain_start > 0 else t0)
    if isinstance(family, EulerLowerBound) and family.B == 0.5 \
            and start <= 1.0:
        raise ValueError("the B=1/2 family needs t0 > 1 (log log drift)")
    ts = protocol.checkpoints(start)
    if horizon is not None:
        kept = ts[ts <= horizon]
        ts = kept if len(kept) >= 2 else ts[:2]
    probe = _evidence_grid(start, ts[-1], 100)
    bad = [t for t in probe if K(t) < family.floor(t) - 1e-9]
    if bad:
        raise FamilyMismatch(
            f"{family.describe()} fails at t={bad[0]} "
            f"(K={K(bad[0])}, floor={family.floor(bad[0])})")

    def integrand(s: float) -> float:
        return math.sqrt(max(K(s) - family.floor(s), 0.0))

    cums = _cumulative_integrals(integrand, ts, K.breakpoints())
    d0 = family.drift(float(ts[0]))
    vals = [c - (family.drift(float(t)) - d0) for c, t in zip(cums, ts)]
    diverges, stats = protocol.classify(vals)
    witnesses = {"t0": start, "horizon": float(ts[-1]), **stats}
    nz = _next_zero_estimate(ts, vals)
    if nz is not None:
        witnesses["next_zero_estimate"] = nz
    if diverges:
        return Verdict(OSCILLATION_EVIDENCE, "generalized_calabi",
                       witnesses=witnesses, evidence_grade=ASYMPTOTIC,
                       notes=(family.describe(),))
    return Verdict(INCONCLUSIVE, "generalized_calabi", witnesses=witnesses,
                   notes=(family.describe(),))


# --- iterated refinements -------------------------------------------------------

def _ladder_threshold(depth: int) -> tuple[Callable[[float], float], float]:
    """Cumulative nonoscillation threshold 1/(4t^2) + sum of the first
    ``depth`` nested-log critical curves, built through the iterated
    refinement; returns (threshold, first admissible t)."""
    stages = transforms.refine_ladder(ladder_weight(1), depth - 1)
    curves = [chi for _, chi in stages]
    start = max(w.domain_start for w, _ in stages)

    def thr(t: float) -> float:
        return 1.0 / (4.0 * t * t) + sum(chi(t) for chi in curves)
    return thr, start


def refined_nonoscillation(K: PotentialSpec, depth: int, t0: float, *,
                           horizon: float = 1e6, grid_n: int = 140) -> Verdict:
    """Positivity / nonoscillation from the iterated nested-log thresholds.

    With t0 = 0 the depth-1 threshold in its whole-line (1+t) form is
    tested on all of the half-line; success gives a Positive verdict with
    the growth envelope C sqrt(t log t) log log t. Otherwise K is tested
    against the cumulative threshold of the requested depth on [t0, inf),
    giving a Nonoscillatory verdict with the depth recorded.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    slack = STRICT_MARGIN

    if t0 == 0.0 and K.domain_start == 0.0:
        def thr_global(t: float) -> float:
            base = 1.0 + t
            lg = math.log1p(t)
            return (1.0 + 1.0 / (lg * lg)) / (4.0 * base * base)
        grid = _evidence_grid(0.0, horizon, grid_n)
        if all(K(t) <= thr_global(t) * (1.0 + slack) + slack for t in grid):
            def env(t: float) -> float:
                return math.sqrt((1.0 + t) * math.log1p(t)) * math.log(
                    math.log1p(t))
            return Verdict(
                POSITIVE, "refined_nonoscillation",
                witnesses={"depth": 1.0, "grid_hi": float(grid[-1])},
                evidence_grade=ASYMPTOTIC,
                envelope=env,
                envelope_description="C sqrt((1+t) log(1+t)) log log (1+t), t > e-1",
                notes=("whole-line threshold (1+t) form",))

    thr, dom = _ladder_threshold(depth)
    start = max(t0, dom * 1.05, dom + 0.05, K.domain_start)
    grid = _evidence_grid(start, horizon, grid_n)
    ok = all(K(t) <= thr(t) * (1.0 + slack) + slack for t in grid)
    if ok:
        return Verdict(NONOSCILLATORY, "refined_nonoscillation",
                       witnesses={"depth": float(depth), "t0": start,
                                  "grid_hi": float(grid[-1])},
                       evidence_grade=ASYMPTOTIC,
                       notes=(f"below the depth-{depth} nested-log threshold",))
    worst = max(grid, key=lambda t: K(t) - thr(t))
    return Verdict(INCONCLUSIVE, "refined_nonoscillation",
                   witnesses={"depth": float(depth), "t0": start,
                              "violation_at": float(worst),
                              "excess": float(K(worst) - thr(worst))})


# --- compactness certifier -------------------------------------------------------

@dataclass(frozen=True)
class CertificateStrategy:
    """Search strategy for the compactness certificate.

    ``case`` selects the comparison family: "negative_part" pairs
    K >= -B^2 (1+t^2)^(alpha/2) with the sinh/Bessel/power shift;
    "euler" pairs K >= B^2/(1+t)^2, B in [0, 1/2], with the explicit
    Euler-equation solution. ``optimize`` keeps scanning after the first
    satisfying pair and returns the smallest position bound found.
    """
    case: str = "negative_part"
    alpha: float = 0.0
    B: float = 1.0
    S_grid: SearchGrid = SearchGrid()
    t_grid: SearchGrid = SearchGrid()
    optimize: bool = True


@dataclass(frozen=True)
class CertificateReport:
    verdict: str  # "CompactFiniteFundamentalGroup" | "Inconclusive"
    dimension: int
    strategy: str
    shift: str
    witnesses: dict = field(default_factory=dict)
    zero_bound: ZeroBound | None = None
    diameter_bound: float | None = None
    assumptions: tuple = ()
    notes: tuple = ()

    @property
    def issued(self) -> bool:
        return self.verdict == "CompactFiniteFundamentalGroup"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "dimension": self.dimension,
            "strategy": self.strategy,
            "shift": self.shift,
            "witnesses": {k: float(v) for k, v in sorted(self.witnesses.items())},
            "first_zero_bound": None if self.zero_bound is None else
                float(self.zero_bound.R_bar),
            "bound_residual": None if self.zero_bound is None else
                float(self.zero_bound.residual),
            "diameter_bound": None if self.diameter_bound is None else
                float(self.diameter_bound),
            "assumptions": list(self.assumptions),
            "notes": list(self.notes),
        }


def compactness_certificate(K_gamma: PotentialSpec, m: int,
                            strategy: CertificateStrategy
                            ) -> CertificateReport:
    """Certify compactness with finite fundamental group from a radial
    curvature profile.

    The profile K_gamma(t) must lower-bound the radial curvature over
    every unit-speed geodesic from the chosen origin (recorded as an
    assumption, not verified here). The certifier shifts the profile into
    a nonnegative potential, searches for a satisfying pair of the
    finite-form first-zero inequality in the shifted frame, and converts
    the resulting position bound R_bar into the diameter bound 2 R_bar
    (every ray is cut by R_bar, so any two points join through the origin).
    """
    if m < 2:
        raise ValueError("dimension m must be >= 2")
    if strategy.case == "negative_part":
        alpha, B = strategy.alpha, strategy.B
        sw = specialfn.shift_solution_negative_part(alpha, B)

        def shift_amount(t: float) -> float:
            return B * B * (1.0 + t * t) ** (alpha / 2.0)

        A_gamma = PotentialSpec.from_callable(
            lambda t: K_gamma(t) + shift_amount(t),
            domain_start=K_gamma.domain_start,
            label=f"[{K_gamma.label}] + {B}^2 (1+t^2)^({alpha}/2)")
        residual_target = shift_amount
        strat_desc = (f"negative-part shift, alpha={alpha}, B={B}")
    elif strategy.case == "euler":
        B = strategy.B
        sw = specialfn.euler_solution(B)

        def shift_amount(t: float) -> float:
            return -B * B / (1.0 + t) ** 2

        A_gamma = PotentialSpec.from_callable(
            lambda t: K_gamma(t) - B * B / (1.0 + t) ** 2,
            domain_start=K_gamma.domain_start,
            label=f"[{K_gamma.label}] - {B}^2/(1+t)^2")
        residual_target = lambda t: -B * B / (1.0 + t) ** 2
        strat_desc = f"euler-equation shift, B={B}"
    else:
        raise ValueError("strategy.case must be 'negative_part' or 'euler'")

    grid = _evidence_grid(K_gamma.domain_start, strategy.t_grid.hi, 120)
    bad = [t for t in grid if A_gamma(t) < -1e-9]
    if bad:
        raise NegativeShiftedPotential(
            f"shifted profile negative at t={bad[0]}: {A_gamma(bad[0])}")
    # soundness needs w'' - shift * w >= 0, i.e. w'' + (-shift) w >= -tol
    res = specialfn.ode_residual_profile(
        sw.fn, lambda t: -residual_target(t),
        np.geomspace(1e-2, 50.0, 60), sign=+1)
    if res > 1e-6:
        raise NegativeShiftedPotential(
            f"shift solution violates its differential inequality by {res:.2e}")

    from .weights import shift_weight_squared
    vbar = shift_weight_squared(sw)
    hits = _first_zero_scan(A_gamma, vbar, vbar,
                            SearchGrid(strategy.S_grid.lo, strategy.S_grid.hi,
                                       strategy.S_grid.n),
                            collect_all=strategy.optimize)
    assumptions = (
        "profile lower-bounds the radial curvature along every unit-speed "
        "geodesic from the origin",
        "manifold complete; solution contract (v z'/z)(0+) = 0 holds in the "
        "shifted frame",
    )
    if not hits:
        return CertificateReport(
            verdict="Inconclusive", dimension=m, strategy=strat_desc,
            shift=sw.label, assumptions=assumptions,
            notes=("no satisfying pair on the search grid",))
    best = None
    for hit in hits:
        try:
            zb = solve_position_bound(A_gamma, vbar, vbar, hit["R"], hit["r"])
        except BracketFailure:
            continue
        if best is None or zb.R_bar < best[1].R_bar:
            best = (hit, zb)
    if best is None:
        return CertificateReport(
            verdict="Inconclusive", dimension=m, strategy=strat_desc,
            shift=sw.label, assumptions=assumptions,
            notes=("satisfying pairs found but no position bound bracketed",))
    hit, zb = best
    return CertificateReport(
        verdict="CompactFiniteFundamentalGroup", dimension=m,
        strategy=strat_desc, shift=sw.label,
        witnesses={"S": hit["R"], "t": hit["r"], "margin": hit["margin"],
                   "pairs_considered": float(len(hits))},
        zero_bound=zb, diameter_bound=2.0 * zb.R_bar,
        assumptions=assumptions,
        notes=("diameter bound uses the conservative doubling 2 R_bar",))
