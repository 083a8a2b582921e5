"""JSON and markdown rendering of reports, deltas and derivation traces."""

from __future__ import annotations

import enum
import json
from typing import Any

from qrisk.model import (
    Aggregation,
    AssessmentConfig,
    AssessmentReport,
    DeltaReport,
    Finding,
)
from qrisk.riskcore import Level, MigrationStage, StrideClass, parse_enum, stride_letters
from qrisk.timeline import TimelineConfig

REPORT_SCHEMA = "qrisk-report/1"
DELTA_SCHEMA = "qrisk-delta/1"
OVERRIDE_MARK = "\u2020"


class Format(enum.Enum):
    JSON = "json"
    MARKDOWN = "markdown"


def canonical_dumps(data: Any) -> str:
    """Sorted keys, two-space indent, trailing newline: the byte-stable form."""
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _lv(level: Level | None) -> str | None:
    return None if level is None else level.label


# --------------------------------------------------------------------------
# JSON


def finding_to_json(f: Finding) -> dict:
    return {
        "asset": f.asset,
        "stage": f.stage.value,
        "kind": f.kind,
        "subject": f.subject,
        "likelihood": _lv(f.likelihood),
        "impact": _lv(f.impact),
        "risk": _lv(f.risk),
        "stride": [s.value for s in f.stride],
        "stride_conditions": {s.value: c for s, c in f.stride_conditions},
        "vulnerabilities": list(f.vulnerabilities),
        "countermeasures": list(f.countermeasures),
        "alternatives": list(f.alternatives),
        "derivation": list(f.derivation),
        "per_attack": [finding_to_json(x) for x in f.per_attack],
        "components": [finding_to_json(x) for x in f.components],
        "aggregation": f.aggregation.value if f.aggregation else None,
        "override": f.override,
        "error": f.error,
    }


def finding_from_json(d: dict) -> Finding:
    def lv(x):
        return None if x is None else Level.parse(x)

    order = list(StrideClass)
    conds = sorted(((parse_enum(StrideClass, k), v) for k, v in d.get("stride_conditions", {}).items()),
                   key=lambda kv: order.index(kv[0]))
    return Finding(
        asset=d["asset"],
        stage=parse_enum(MigrationStage, d["stage"]),
        likelihood=lv(d["likelihood"]),
        impact=lv(d["impact"]),
        risk=lv(d["risk"]),
        kind=d.get("kind", ""),
        subject=d.get("subject", ""),
        stride=tuple(parse_enum(StrideClass, s) for s in d.get("stride", [])),
        stride_conditions=tuple(conds),
        vulnerabilities=tuple(d.get("vulnerabilities", [])),
        countermeasures=tuple(d.get("countermeasures", [])),
        alternatives=tuple(d.get("alternatives", [])),
        derivation=tuple(d.get("derivation", [])),
        per_attack=tuple(finding_from_json(x) for x in d.get("per_attack", [])),
        components=tuple(finding_from_json(x) for x in d.get("components", [])),
        aggregation=parse_enum(Aggregation, d["aggregation"]) if d.get("aggregation") else None,
        override=d.get("override"),
        error=d.get("error"),
    )


def config_to_json(cfg: AssessmentConfig) -> dict:
    return {
        "horizon_years": cfg.horizon_years,
        "low_upper_bound": cfg.timeline.low_upper_bound,
        "medium_upper_bound": cfg.timeline.medium_upper_bound,
        "fail_on_unknown": cfg.fail_on_unknown,
    }


def report_to_json(report: AssessmentReport) -> dict:
    out = {
        "schema": REPORT_SCHEMA,
        "inventory": report.inventory_name,
        "kb_version": report.kb_version,
        "config": config_to_json(report.config),
        "findings": [finding_to_json(f) for f in report.findings],
        "summary": report.summary,
        "warnings": list(report.warnings),
    }
    if report.generated_at:
        out["generated_at"] = report.generated_at
    return out


def report_from_json(text: str | dict) -> AssessmentReport:
    d = json.loads(text) if isinstance(text, str) else text
    if d.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"not a {REPORT_SCHEMA} document")
    c = d["config"]
    cfg = AssessmentConfig(
        horizon_years=c["horizon_years"],
        timeline=TimelineConfig(c["horizon_years"], c["low_upper_bound"], c["medium_upper_bound"]),
        fail_on_unknown=c["fail_on_unknown"],
    )
    report = AssessmentReport(
        kb_version=d["kb_version"],
        config=cfg,
        findings=tuple(finding_from_json(f) for f in d["findings"]),
        inventory_name=d.get("inventory", ""),
        warnings=tuple(d.get("warnings", [])),
        generated_at=d.get("generated_at"),
    )
    if report.summary != d["summary"]:
        raise ValueError("summary does not match the findings")
    return report


def delta_to_json(delta: DeltaReport) -> dict:
    return {
        "schema": DELTA_SCHEMA,
        "baseline_summary": {k: dict(v) for k, v in delta.baseline_summary.items()},
        "modified_summary": {k: dict(v) for k, v in delta.modified_summary.items()},
        "changes": [
            {"asset": c.asset, "before": _lv(c.before), "after": _lv(c.after), "direction": c.direction.value}
            for c in delta.changes
        ],
        "added": list(delta.added),
        "removed": list(delta.removed),
    }


# --------------------------------------------------------------------------
# markdown


def _cell(text: str) -> str:
    return text.replace("|", "\\|").replace("\n", " ")


def _letter(level: Level | None) -> str:
    return "-" if level is None else level.letter


def _stride_cell(f: Finding) -> str:
    if not f.stride:
        return "-"
    letters = stride_letters(f.stride)
    conditional = {s for s, _ in f.stride_conditions}
    if conditional:
        marked = [s.letter + ("*" if s in conditional else "") for s in f.stride]
        letters = ",".join(marked)
    return letters


def _list_cell(items) -> str:
    return _cell("; ".join(items)) if items else "-"


def _row(f: Finding, label: str | None = None) -> str:
    mark = OVERRIDE_MARK if f.override else ""
    name = label or f"{f.asset}{mark}"
    if f.errored:
        return f"| {_cell(name)} | {_cell(f.subject or '-')} | error: {_cell(f.error)} | - | - | - | - | - |"
    remedies = list(f.countermeasures) + [f"use {a}" for a in f.alternatives]
    return (
        f"| {_cell(name)} | {_cell(f.subject or '-')} | {_list_cell(f.vulnerabilities)} | {_stride_cell(f)} "
        f"| {_letter(f.likelihood)} | {_letter(f.impact)} | {_letter(f.risk)}{mark} | {_list_cell(remedies)} |"
    )


_HEADER = (
    "| Asset | Subject | Vulnerabilities | Quantum Threats (STRIDE) | L | I | R | Countermeasures/Alternatives |\n"
    "|---|---|---|---|---|---|---|---|"
)


def render_markdown(report: AssessmentReport) -> str:
    title = report.inventory_name or "inventory"
    lines = [f"# Quantum risk assessment: {title}", ""]
    c = report.config
    lines.append(
        f"KB version `{report.kb_version}`, horizon {c.horizon_years} years, likelihood thresholds "
        f"{c.timeline.low_upper_bound:g}/{c.timeline.medium_upper_bound:g}."
    )
    if report.generated_at:
        lines.append(f"Generated at {report.generated_at}.")
    lines.append("")
    if not report.findings:
        lines += ["No assets assessed.", ""]
    else:
        lines += ["## Summary", "", "| Stage | Low | Medium | High | Errored |", "|---|---|---|---|---|"]
        for stage, counts in report.summary.items():
            lines.append(
                f"| {MigrationStage(stage).title} | {counts['low']} | {counts['medium']} | {counts['high']} | {counts['errored']} |"
            )
        lines.append("")
        for stage in MigrationStage:
            rows = [f for f in report.findings if f.stage is stage]
            if not rows:
                continue
            lines += [f"## {stage.title}", "", _HEADER]
            for f in rows:
                lines.append(_row(f))
                for sub in f.per_attack:
                    lines.append(_row(sub, label=f"{f.asset} / {sub.vulnerabilities[0]}"))
                for comp in f.components:
                    lines.append(_row(comp, label=f"{f.asset} / component {comp.asset}"))
            notes = []
            if any(f.aggregation is Aggregation.WORST_CASE for f in rows):
                notes.append("Headline rows of algorithms with per-attack rows use aggregation: worst-case.")
            if any(f.stride_conditions for f in rows):
                notes.append("Threats marked * apply only when no component resists them (see combiner).")
            if notes:
                lines += [""] + notes
            lines.append("")
        overridden = [f for f in report.findings if f.override]
        if overridden:
            lines += ["## Overrides", ""]
            for f in overridden:
                lines.append(f"{OVERRIDE_MARK} `{f.asset}` ({f.subject}): {f.override}")
            lines.append("")
    if report.warnings:
        lines += ["## Warnings", ""] + [f"- {w}" for w in report.warnings] + [""]
    return "\n".join(lines).rstrip("\n") + "\n"


def render_report(report: AssessmentReport, fmt: Format | str = Format.MARKDOWN) -> str:
    fmt = parse_enum(Format, fmt)
    if fmt is Format.JSON:
        return canonical_dumps(report_to_json(report))
    return render_markdown(report)


def render_delta(delta: DeltaReport, fmt: Format | str = Format.MARKDOWN) -> str:
    fmt = parse_enum(Format, fmt)
    if fmt is Format.JSON:
        return canonical_dumps(delta_to_json(delta))
    lines = ["# What-if delta", "", "| Asset | Before | After | Direction |", "|---|---|---|---|"]
    for c in delta.changes:
        lines.append(f"| {_cell(c.asset)} | {_letter(c.before)} | {_letter(c.after)} | {c.direction.value} |")
    if not delta.changes:
        lines.append("| - | - | - | - |")
    for label, ids in (("Added", delta.added), ("Removed", delta.removed)):
        if ids:
            lines += ["", f"{label}: " + ", ".join(f"`{i}`" for i in ids)]
    lines += ["", "| Stage | High before | High after |", "|---|---|---|"]
    for stage in MigrationStage:
        b = delta.baseline_summary[stage.value]["high"]
        a = delta.modified_summary[stage.value]["high"]
        lines.append(f"| {stage.title} | {b} | {a} |")
    return "\n".join(lines) + "\n"


def render_explain(f: Finding, indent: int = 0) -> str:
    """Indented derivation trace for one finding and its sub-findings."""
    pad = "  " * indent
    head = f"{pad}{f.asset} [{f.stage.value}] {f.kind} {f.subject}".rstrip()
    if f.errored:
        return f"{head}\n{pad}  error: {f.error}\n"
    lines = [f"{head}: L={f.likelihood.label} I={f.impact.label} R={f.risk.label}"]
    lines += [f"{pad}  - {step}" for step in f.derivation]
    text = "\n".join(lines) + "\n"
    for sub in f.components + f.per_attack:
        text += render_explain(sub, indent + 1)
    return text


__all__ = [
    "Format",
    "canonical_dumps",
    "delta_to_json",
    "finding_from_json",
    "finding_to_json",
    "render_delta",
    "render_explain",
    "render_markdown",
    "render_report",
    "report_from_json",
    "report_to_json",
]
