"""Risk deltas between two assessment reports."""

from __future__ import annotations

from qrisk.model import AssessmentReport, DeltaReport, Direction, RiskChange
from qrisk.riskcore import Level


def direction(before: Level | None, after: Level | None) -> Direction:
    if before is None or after is None or before == after:
        return Direction.UNCHANGED if before == after else _unknown_direction(before, after)
    return Direction.IMPROVED if after < before else Direction.WORSENED


def _unknown_direction(before, after) -> Direction:
    # An asset that stopped erroring counts as improved; one that started, worsened.
    return Direction.IMPROVED if before is None else Direction.WORSENED


def diff_reports(a: AssessmentReport, b: AssessmentReport) -> DeltaReport:
    before = {f.asset: f for f in a.findings}
    after = {f.asset: f for f in b.findings}
    changes = tuple(
        RiskChange(aid, before[aid].risk, after[aid].risk, direction(before[aid].risk, after[aid].risk))
        for aid in sorted(before.keys() & after.keys())
    )
    return DeltaReport(
        baseline_summary=a.summary,
        modified_summary=b.summary,
        changes=changes,
        added=tuple(sorted(after.keys() - before.keys())),
        removed=tuple(sorted(before.keys() - after.keys())),
    )
