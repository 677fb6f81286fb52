"""Potential specifications shared by the transforms, criteria and oracle."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError
from .expr import Expression

SIGN_HINTS = ("nonnegative", "sign_changing")


class PotentialSpec:
    """A scalar potential K(t) or A(r): an expression with bound parameters
    (or an opaque callable for transformed problems), a validity domain and
    an optional sign hint."""

    def __init__(self, *, expression: Expression | None = None,
                 params: dict | None = None,
                 fn: Callable[[float], float] | None = None,
                 domain_start: float = 0.0,
                 sign_hint: str | None = None,
                 lower_bound: Expression | None = None,
                 label: str | None = None):
        if (expression is None) == (fn is None):
            raise ValueError("provide exactly one of expression or fn")
        if sign_hint is not None and sign_hint not in SIGN_HINTS:
            raise ValueError(f"sign_hint must be one of {SIGN_HINTS}")
        self.expression = expression
        self.params = dict(params or {})
        self._fn = fn
        self.domain_start = float(domain_start)
        self.sign_hint = sign_hint
        self.lower_bound = lower_bound
        if expression is not None:
            expression.check_bound(self.params)
            self.label = label or expression.src
        else:
            self.label = label or "callable potential"

    @classmethod
    def from_expression(cls, src: str | Expression, params: dict | None = None,
                        **kw) -> "PotentialSpec":
        e = src if isinstance(src, Expression) else Expression(src)
        return cls(expression=e, params=params, **kw)

    @classmethod
    def from_callable(cls, fn: Callable[[float], float], **kw) -> "PotentialSpec":
        return cls(fn=fn, **kw)

    @classmethod
    def constant(cls, value: float, **kw) -> "PotentialSpec":
        kw.setdefault("sign_hint", "nonnegative" if value >= 0 else None)
        return cls(expression=Expression(repr(float(value))), **kw)

    def __call__(self, t: float) -> float:
        if self._fn is not None:
            return self._fn(t)
        return self.expression(t, self.params)

    def __repr__(self):
        return f"PotentialSpec({self.label!r})"

    def breakpoints(self) -> list[float]:
        if self.expression is None:
            return []
        return self.expression.breakpoints(self.params)

    def default_grid(self, horizon: float, n: int = 120) -> np.ndarray:
        lo = self.domain_start
        start = lo + 1e-6 if lo > 0 else 1e-6
        return np.geomspace(start, max(horizon, start * 10), n)

    def validate(self, grid: Sequence[float] | None = None,
                 horizon: float = 1e4) -> None:
        """Fail fast on domain-error sentinels and sign-hint violations."""
        pts = list(grid) if grid is not None else list(self.default_grid(horizon))
        for t in pts:
            val = self(t)
            if not math.isfinite(val):
                raise EvaluationError(
                    f"{self.label} evaluates to {val} at t={t}")
            if self.sign_hint == "nonnegative" and val < -1e-12:
                raise EvaluationError(
                    f"{self.label} declared nonnegative but is {val} at t={t}")
            if self.lower_bound is not None:
                lb = self.lower_bound(t, self.params)
                if val < lb - 1e-9:
                    raise EvaluationError(
                        f"{self.label} below its declared lower bound at t={t}")

    def nonneg_evidence(self, grid: Sequence[float], tol: float = 1e-12) -> bool:
        return all(self(t) >= -tol for t in grid)

    def shifted_by(self, other: "PotentialSpec", label: str | None = None
                   ) -> "PotentialSpec":
        return PotentialSpec.from_callable(
            lambda t: self(t) + other(t),
            domain_start=max(self.domain_start, other.domain_start),
            label=label or f"[{self.label}] + [{other.label}]")
