"""Inventory, finding and report data model shared by the engine and I/O layers."""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from types import MappingProxyType

from qrisk.riskcore import Level, MigrationStage, StrideClass
from qrisk.timeline import TimelineConfig


class AssetKind(enum.Enum):
    ALGORITHM = "algorithm"
    CERTIFICATE = "certificate"
    PROTOCOL = "protocol"
    HYBRID = "hybrid"


class Aggregation(enum.Enum):
    WORST_CASE = "worst-case"
    HYBRID_MIN = "hybrid-min"
    WEAK_NESTING = "weak-nesting"


class Direction(enum.Enum):
    IMPROVED = "improved"
    UNCHANGED = "unchanged"
    WORSENED = "worsened"


@dataclass(frozen=True)
class HybridSpec:
    combiner: str
    components: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))


@dataclass(frozen=True)
class Asset:
    id: str
    kind: AssetKind
    stage: MigrationStage
    subject: str | None = None
    hybrid: HybridSpec | None = None
    context_notes: str = ""


@dataclass(frozen=True)
class Inventory:
    name: str
    assets: tuple[Asset, ...] = ()
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    def __eq__(self, other):
        if not isinstance(other, Inventory):
            return NotImplemented
        return (self.name, self.assets, dict(self.metadata)) == (other.name, other.assets, dict(other.metadata))

    __hash__ = None

    def get(self, asset_id: str) -> Asset | None:
        for a in self.assets:
            if a.id == asset_id:
                return a
        return None


@dataclass(frozen=True)
class AssessmentConfig:
    horizon_years: int = 15
    timeline: TimelineConfig = field(default_factory=TimelineConfig)
    fail_on_unknown: bool = False

    def __post_init__(self):
        # The timeline carries its own horizon; keep the two in step.
        if self.timeline.horizon_years != self.horizon_years:
            object.__setattr__(self, "timeline", replace(self.timeline, horizon_years=self.horizon_years))


@dataclass(frozen=True)
class Finding:
    """Assessment outcome for one asset, attack or hybrid component.

    ``risk`` equals ``combine_risk(likelihood, impact)`` unless ``aggregation``
    is set.  An errored finding has ``error`` set and no levels.
    """

    asset: str
    stage: MigrationStage
    likelihood: Level | None
    impact: Level | None
    risk: Level | None
    kind: str = ""
    subject: str = ""
    stride: tuple[StrideClass, ...] = ()
    stride_conditions: tuple[tuple[StrideClass, str], ...] = ()
    vulnerabilities: tuple[str, ...] = ()
    countermeasures: tuple[str, ...] = ()
    alternatives: tuple[str, ...] = ()
    derivation: tuple[str, ...] = ()
    per_attack: tuple[Finding, ...] = ()
    components: tuple[Finding, ...] = ()
    aggregation: Aggregation | None = None
    override: str | None = None
    error: str | None = None

    @property
    def errored(self) -> bool:
        return self.error is not None


SUMMARY_KEYS = ("low", "medium", "high", "errored")


def summarize(findings: Iterable[Finding]) -> dict[str, dict[str, int]]:
    out = {s.value: {k: 0 for k in SUMMARY_KEYS} for s in MigrationStage}
    for f in findings:
        key = "errored" if f.risk is None else f.risk.label
        out[f.stage.value][key] += 1
    return out


@dataclass(frozen=True)
class AssessmentReport:
    kb_version: str
    config: AssessmentConfig
    findings: tuple[Finding, ...]
    inventory_name: str = ""
    warnings: tuple[str, ...] = ()
    generated_at: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "findings", tuple(sorted(self.findings, key=lambda f: f.asset)))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def summary(self) -> dict[str, dict[str, int]]:
        return summarize(self.findings)

    def finding(self, asset_id: str) -> Finding | None:
        for f in self.findings:
            if f.asset == asset_id:
                return f
        return None

    @property
    def has_high(self) -> bool:
        return any(f.risk is Level.HIGH for f in self.findings)

    @property
    def has_errors(self) -> bool:
        return any(f.errored for f in self.findings)


@dataclass(frozen=True)
class RiskChange:
    asset: str
    before: Level | None
    after: Level | None
    direction: Direction


@dataclass(frozen=True)
class DeltaReport:
    baseline_summary: Mapping[str, Mapping[str, int]]
    modified_summary: Mapping[str, Mapping[str, int]]
    changes: tuple[RiskChange, ...]
    added: tuple[str, ...] = ()
    removed: tuple[str, ...] = ()

    def change(self, asset_id: str) -> RiskChange | None:
        for c in self.changes:
            if c.asset == asset_id:
                return c
        return None

    @property
    def has_high_after(self) -> bool:
        return any(counts.get("high", 0) for counts in self.modified_summary.values())
