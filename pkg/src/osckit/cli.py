"""Command-line front end.

Subcommands:

* ``analyze <spec>``  - run the selected criteria, the oracle, and the
  cross-validation; exit 0 when every record agrees, 2 on any
  contradiction, 1 on usage errors.
* ``certify <spec>``  - run the compactness certifier; exit 0 when a
  certificate is issued, 3 when inconclusive, 1 on usage errors.
* ``curve <spec>``    - emit the critical curve (and its iterated
  refinements) as CSV on a log grid.
* ``oracle <spec>``   - integrate the problem and report zeros; with
  --out also writes the trajectory CSV (t, g, gprime, logscale).

Spec files are flat INI documents with sections [problem], [potential],
[weight], [criteria], [oracle], [certify], [curve], [output]; expression
values are strings, parameters are numbers. OSC_THREADS caps the
fan-out of independent criterion evaluations.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import math
import os
import sys

import numpy as np
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import criteria as crit
from . import oracle as orc
from . import report as rpt
from . import transforms
from .errors import OsckitError, ParseError
from .expr import parse_expression
from .problems import PotentialSpec
from .weights import (BUILTIN_WEIGHTS, Weight, builtin_weight, critical_curve,
                      weight_from_expression)


class SpecFileError(OsckitError):
    pass


_POTENTIAL_RESERVED = {"expr", "domain_start", "sign_hint"}
_SIGN_SENSITIVE = {"first_zero", "oscillation", "hille_nehari",
                   "calabi_finite_form"}


@dataclass
class AnalysisSpec:
    kind: str
    potential: PotentialSpec
    weight: Weight
    criteria_run: list
    options: dict
    oracle_options: dict
    output_format: str
    sections: dict = field(default_factory=dict)

    def echo(self) -> dict:
        pot = {"expr": self.potential.expression.src
               if self.potential.expression else self.potential.label,
               "params": {k: v for k, v in self.potential.params.items()},
               "domain_start": self.potential.domain_start,
               "sign_hint": self.potential.sign_hint}
        return {"kind": self.kind, "potential": pot,
                "weight": self.weight.label,
                "criteria": list(self.criteria_run)}


def _floats(raw: str) -> list:
    return [float(x) for x in raw.replace(",", " ").split()]


def _parse_potential(cfg: configparser.ConfigParser) -> PotentialSpec:
    if not cfg.has_section("potential"):
        raise SpecFileError("missing [potential] section")
    sec = cfg["potential"]
    if "expr" not in sec:
        raise SpecFileError("[potential] needs expr = <expression>")
    expression = parse_expression(sec["expr"])
    params = {}
    for key in sec:
        if key in _POTENTIAL_RESERVED:
            continue
        try:
            params[key] = float(sec[key])
        except ValueError:
            raise SpecFileError(f"parameter {key!r} is not a number") from None
    sign_hint = sec.get("sign_hint") or None
    spec = PotentialSpec.from_expression(
        expression, params,
        domain_start=float(sec.get("domain_start", "0") or 0),
        sign_hint=sign_hint)
    spec.validate()
    return spec


def _parse_weight(cfg: configparser.ConfigParser) -> Weight:
    if not cfg.has_section("weight"):
        return builtin_weight("power", m=3)
    sec = cfg["weight"]
    if "expr" in sec:
        params = {k: float(v) for k, v in sec.items()
                  if k not in ("expr", "domain_start", "name")}
        return weight_from_expression(
            sec["expr"], params,
            domain_start=float(sec.get("domain_start", "0") or 0))
    name = sec.get("name", "power")
    if name not in BUILTIN_WEIGHTS:
        raise SpecFileError(f"unknown weight {name!r}")
    params = {k: float(v) for k, v in sec.items() if k != "name"}
    return builtin_weight(name, **params)


def load_spec(path: str) -> AnalysisSpec:
    cfg = configparser.ConfigParser(interpolation=None)
    cfg.optionxform = str  # parameter names are case-sensitive
    read = cfg.read(path)
    if not read:
        raise SpecFileError(f"cannot read spec file {path!r}")
    kind = cfg.get("problem", "kind", fallback="cp").strip()
    if kind not in ("cp", "weighted"):
        raise SpecFileError("problem kind must be 'cp' or 'weighted'")
    potential = _parse_potential(cfg)
    weight = _parse_weight(cfg)

    options: dict = {}
    run: list = []
    if cfg.has_section("criteria"):
        sec = cfg["criteria"]
        raw = sec.get("run", "")
        run = [c.strip() for c in raw.replace(",", " ").split() if c.strip()]
        for key in sec:
            if key != "run":
                options[key] = sec[key]
    if not run:
        run = (["hille_nehari", "moore", "refined_nonoscillation"]
               if kind == "cp" else
               ["positivity", "nonoscillation", "first_zero", "oscillation"])
    if potential.sign_hint == "sign_changing":
        clash = sorted(set(run) & _SIGN_SENSITIVE)
        if clash:
            raise SpecFileError(
                f"criteria {clash} require a nonnegative potential but the "
                "spec declares sign_changing")

    oracle_options = {"horizon": 1e6, "rtol": 1e-10, "atol": 1e-12,
                      "z0": 1.0, "p0": 0.0, "eps": 1e-6, "start": None}
    if cfg.has_section("oracle"):
        sec = cfg["oracle"]
        for key in ("horizon", "rtol", "atol", "z0", "p0", "eps", "start"):
            if key in sec and sec[key].strip():
                oracle_options[key] = float(sec[key])

    fmt = cfg.get("output", "format", fallback="json").strip()
    sections = {name: dict(cfg[name]) for name in cfg.sections()}
    return AnalysisSpec(kind=kind, potential=potential, weight=weight,
                        criteria_run=run, options=options,
                        oracle_options=oracle_options, output_format=fmt,
                        sections=sections)


# --- criterion dispatch -------------------------------------------------------

def _criterion_tasks(spec: AnalysisSpec, horizon: float, depth: int | None):
    """Build (name, thunk) pairs for the requested criteria."""
    K = spec.potential
    opts = spec.options
    tasks = []

    def opt(key, default):
        return float(opts[key]) if key in opts else default

    if spec.kind == "weighted":
        A, v = K, spec.weight
        frame = None
    else:
        frame = None
        if set(spec.criteria_run) & {"positivity", "nonoscillation",
                                     "first_zero", "oscillation"}:
            frame = transforms.to_weighted(K, spec.weight)
        A = frame.potential if frame else None
        v = spec.weight

    for name in spec.criteria_run:
        if name == "hille_nehari":
            tasks.append((name, lambda: crit.hille_nehari(
                K, horizon=min(horizon, 1e8))))
        elif name == "moore":
            lams = (_floats(opts["moore_lambda"])
                    if "moore_lambda" in opts else [0.0])
            for lam in lams:
                tasks.append((f"moore({lam:g})",
                              lambda lam=lam: crit.moore(K, lam)))
        elif name == "generalized_calabi":
            family_name = opts.get("calabi_family", "euler")
            if family_name == "euler":
                family = crit.EulerLowerBound(opt("calabi_b", 0.5))
            else:
                family = crit.PolyLowerBound(opt("calabi_alpha", 0.0),
                                             opt("calabi_b", 1.0))
            t0 = opt("calabi_t0", max(K.domain_start, 1.5))
            tasks.append((name, lambda family=family, t0=t0:
                          crit.generalized_calabi(K, family, t0)))
        elif name == "refined_nonoscillation":
            d = depth if depth is not None else int(opt("ladder_depth", 1))
            t0 = opt("nonosc_t0", K.domain_start)
            tasks.append((name, lambda d=d, t0=t0:
                          crit.refined_nonoscillation(K, d, t0,
                                                      horizon=horizon)))
        elif name == "calabi_finite_form":
            a, b = opt("calabi_a", 1.0), opt("calabi_b_end", math.e**2)
            tasks.append((name, lambda a=a, b=b:
                          crit.calabi_finite_form(K, a, b)))
        elif name == "mrv_first_zero":
            tasks.append((name, lambda: crit.mrv_first_zero(
                K, opt("mrv_b", 0.0), opt("mrv_a", 1.0),
                opt("mrv_b_end", 2.0), opt("mrv_lambda", 0.0))))
        elif name == "positivity":
            tasks.append((name, lambda A=A, v=v: crit.check_positivity(
                A, v, horizon=min(horizon, 1e8))))
        elif name == "nonoscillation":
            r0 = opt("nonosc_r0", max(v.domain_start + 1e-3, 1e-3))
            tasks.append((name, lambda A=A, v=v, r0=r0:
                          crit.check_nonoscillation(A, v, r0,
                                                    horizon=min(horizon, 1e8))))
        elif name == "first_zero":
            grid = crit.SearchGrid(opt("search_lo", 1e-2),
                                   opt("search_hi", 1e3),
                                   int(opt("search_n", 24)))
            def first_zero_task(A=A, v=v, grid=grid, frame=frame):
                verdict = crit.check_first_zero(A, v, search=grid)
                if frame is not None and verdict.bound is not None:
                    mapped = frame.var_map.forward(verdict.bound)
                    verdict = crit.Verdict(
                        verdict.classification, verdict.criterion,
                        witnesses={**verdict.witnesses,
                                   "bound_frame_variable": verdict.bound},
                        bound=mapped, evidence_grade=verdict.evidence_grade,
                        notes=verdict.notes + (
                            "bound mapped back to the plain variable",))
                return verdict
            tasks.append((name, first_zero_task))
        elif name == "oscillation":
            R = opt("oscillation_r", max(v.domain_start + 1e-2, 1.0))
            tasks.append((name, lambda A=A, v=v, R=R:
                          crit.check_oscillation(A, v, v, R)))
        else:
            raise SpecFileError(f"unknown criterion {name!r}")
    return tasks


def _run_criteria(tasks) -> dict:
    workers = max(1, int(os.environ.get("OSC_THREADS", "1")))
    verdicts: dict = {}
    if workers == 1:
        for name, thunk in tasks:
            verdicts[name] = thunk()
        return verdicts
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {name: pool.submit(thunk) for name, thunk in tasks}
        for name, fut in futures.items():
            verdicts[name] = fut.result()
    return verdicts


def _run_oracle(spec: AnalysisSpec, horizon: float):
    oo = spec.oracle_options
    if spec.kind == "cp":
        return orc.integrate_cp(
            spec.potential, horizon,
            start=oo["start"], rtol=oo["rtol"], atol=oo["atol"])
    return orc.integrate_weighted(
        spec.weight, spec.potential, oo["start"] or 0.0, oo["z0"], oo["p0"],
        horizon, eps=oo["eps"], rtol=oo["rtol"], atol=oo["atol"])


def _settings(spec: AnalysisSpec, horizon: float) -> dict:
    return {
        "horizon": horizon,
        "oracle": {k: v for k, v in sorted(spec.oracle_options.items())
                   if v is not None},
        "criteria_options": dict(sorted(spec.options.items())),
        "strict_margin": crit.STRICT_MARGIN,
        "divergence_protocol": {
            "factor": 2.0, "max_checkpoints": 40, "threshold": 2.0,
            "tail_increments": 5},
    }


def _emit(doc: dict, fmt: str, out: str | None) -> None:
    text = rpt.to_json(doc) if fmt == "json" else rpt.to_text(doc)
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> AnalysisSpec:
    spec = load_spec(args.spec)
    if args.tolerance is not None:
        spec.oracle_options["rtol"] = args.tolerance
    return spec


def cmd_analyze(args) -> int:
    spec = _load(args)
    horizon = args.horizon or spec.oracle_options["horizon"]
    fmt = args.format or spec.output_format
    tasks = _criterion_tasks(spec, horizon, args.depth)
    verdicts = _run_criteria(tasks)
    zero_report = _run_oracle(spec, horizon)
    agreements = [dataclasses.replace(orc.cross_validate(v, zero_report),
                                      criterion=name)
                  for name, v in sorted(verdicts.items())]
    contradiction = any(a.status == orc.CONTRADICTION for a in agreements)
    exit_status = 2 if contradiction else 0
    doc = rpt.analysis_document(
        spec_echo=spec.echo(), settings=_settings(spec, horizon),
        verdicts=verdicts, oracle_summary=zero_report.to_dict(),
        agreements=agreements, exit_status=exit_status,
        timestamp=not args.no_timestamp)
    _emit(doc, fmt, args.out)
    return exit_status


def cmd_certify(args) -> int:
    spec = _load(args)
    sec = spec.sections.get("certify", {})
    m = int(float(sec.get("m", "3")))
    grid = crit.SearchGrid(float(sec.get("grid_lo", "1e-2")),
                           float(sec.get("grid_hi", "1e3")),
                           int(float(sec.get("grid_n", "24"))))
    strategy = crit.CertificateStrategy(
        case=sec.get("case", "negative_part"),
        alpha=float(sec.get("alpha", "0")),
        B=float(sec.get("b", sec.get("B", "1"))),
        S_grid=grid, t_grid=grid)
    cert = crit.compactness_certificate(spec.potential, m, strategy)
    oracle_summary = None
    if cert.issued:
        horizon = args.horizon or min(4.0 * cert.zero_bound.R_bar, 1e6)
        zr = orc.integrate_cp(spec.potential, horizon,
                              rtol=spec.oracle_options["rtol"])
        oracle_summary = zr.to_dict()
    exit_status = 0 if cert.issued else 3
    doc = rpt.certificate_document(
        spec_echo=spec.echo(), settings=_settings(
            spec, args.horizon or spec.oracle_options["horizon"]),
        report=cert, oracle_summary=oracle_summary, exit_status=exit_status,
        timestamp=not args.no_timestamp)
    _emit(doc, args.format or spec.output_format, args.out)
    return exit_status


def cmd_curve(args) -> int:
    spec = _load(args)
    sec = spec.sections.get("curve", {})
    lo = float(sec.get("lo", "1"))
    hi = float(sec.get("hi", "1e4"))
    n = int(float(sec.get("n", "200")))
    depth = args.depth if args.depth is not None else int(
        float(sec.get("depth", "0")))
    stages = transforms.refine_ladder(spec.weight, depth)
    header = ["r"] + [f"chi_{k}" for k in range(len(stages))]
    rows = []
    if n > 0 and lo < hi:
        start = max(lo, max(w.domain_start for w, _ in stages) * (1 + 1e-9))
        for r in np.geomspace(start, hi, n):
            rows.append([float(r)] + [chi(float(r)) for _, chi in stages])
    out = args.out or "curve.csv"
    rpt.write_csv(out, header, rows)
    sys.stdout.write(f"wrote {out} ({len(rows)} rows)\n")
    return 0


def cmd_oracle(args) -> int:
    spec = _load(args)
    horizon = args.horizon or spec.oracle_options["horizon"]
    zr = _run_oracle(spec, horizon)
    doc = {
        "schema_version": rpt.SCHEMA_VERSION,
        "kind": "oracle",
        "input": spec.echo(),
        "report": zr.to_dict(),
        "exit_status": 0,
    }
    _emit(doc, args.format or "json", None)
    if args.out:
        rpt.write_csv(args.out, ["t", "g", "gprime", "logscale"],
                      zr.trajectory)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="osckit",
        description="Qualitative analysis of second-order linear ODEs: "
                    "positivity, first zeros, oscillation, compactness "
                    "certificates.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("analyze", cmd_analyze), ("certify", cmd_certify),
                     ("curve", cmd_curve), ("oracle", cmd_oracle)):
        q = sub.add_parser(name)
        q.add_argument("spec", help="spec file (INI format)")
        q.add_argument("--horizon", type=float, default=None)
        q.add_argument("--tolerance", type=float, default=None,
                       help="override oracle relative tolerance")
        q.add_argument("--depth", type=int, default=None)
        q.add_argument("--out", default=None)
        q.add_argument("--no-timestamp", action="store_true")
        q.add_argument("--format", choices=("json", "text"), default=None)
        q.set_defaults(handler=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (SpecFileError, ParseError, configparser.Error) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OsckitError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
