"""Report documents: JSON (machine-readable), text, and CSV tables.

Documents are deterministic: keys are sorted, floats use repr, and the
timestamp is the only run-dependent field, omitted under --no-timestamp.
Every report embeds the spec echo, tolerances and grid parameters that
produced it.
"""

from __future__ import annotations

import datetime
import json
from typing import Iterable, Sequence

SCHEMA_VERSION = "1"


def analysis_document(*, spec_echo: dict, settings: dict, verdicts: dict,
                      oracle_summary: dict | None, agreements: list,
                      exit_status: int, timestamp: bool) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "input": spec_echo,
        "settings": settings,
        "criteria": {name: v.to_dict() for name, v in sorted(verdicts.items())},
        "oracle": oracle_summary,
        "agreement": [a.to_dict() for a in agreements],
        "exit_status": exit_status,
    }
    if timestamp:
        doc["generated_at"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    return doc


def certificate_document(*, spec_echo: dict, settings: dict, report,
                         oracle_summary: dict | None, exit_status: int,
                         timestamp: bool) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "certificate",
        "input": spec_echo,
        "settings": settings,
        "certificate": report.to_dict(),
        "oracle": oracle_summary,
        "exit_status": exit_status,
    }
    if timestamp:
        doc["generated_at"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    return doc


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def to_text(doc: dict) -> str:
    lines = [f"# {doc['kind']} report (schema {doc['schema_version']})"]
    if "generated_at" in doc:
        lines.append(f"generated: {doc['generated_at']}")
    lines.append("")
    lines.append("## input")
    for k, v in sorted(doc.get("input", {}).items()):
        lines.append(f"  {k}: {v}")
    if doc["kind"] == "analysis":
        lines.append("")
        lines.append("## criteria")
        for name, v in sorted(doc.get("criteria", {}).items()):
            grade = v.get("evidence_grade") or "-"
            bound = v.get("bound")
            extra = f" bound={bound:.6g}" if bound is not None else ""
            lines.append(f"  {name}: {v['classification']} [{grade}]{extra}")
            for note in v.get("notes", []):
                lines.append(f"      note: {note}")
    else:
        lines.append("")
        lines.append("## certificate")
        cert = doc["certificate"]
        lines.append(f"  verdict: {cert['verdict']}")
        for key in ("strategy", "shift", "first_zero_bound", "diameter_bound"):
            if cert.get(key) is not None:
                lines.append(f"  {key}: {cert[key]}")
        for note in cert.get("notes", []):
            lines.append(f"  note: {note}")
    if doc.get("oracle"):
        lines.append("")
        lines.append("## oracle")
        for k, v in sorted(doc["oracle"].items()):
            lines.append(f"  {k}: {v}")
    if doc.get("agreement"):
        lines.append("")
        lines.append("## agreement")
        for rec in doc["agreement"]:
            lines.append(f"  {rec['criterion']}: {rec['status']}"
                         + (f" ({rec['note']})" if rec["note"] else ""))
    lines.append("")
    lines.append(f"exit status: {doc['exit_status']}")
    return "\n".join(lines) + "\n"


def write_csv(path: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    """Comma-separated, '.' decimal, header row, LF line endings."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")


def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)
