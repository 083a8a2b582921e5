"""Typed records held by the knowledge base."""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from qrisk.riskcore import CombinerKind, Level, MigrationStage, StrideClass
from qrisk.timeline import ExpertPoll, MechanismFamily, MechanismProfile


class AttackClass(enum.Enum):
    FAULT_ATTACK = "fault_attack"
    TIMING_ATTACK = "timing_attack"
    SIMPLE_POWER_ANALYSIS = "simple_power_analysis"
    ADVANCED_POWER_ANALYSIS = "advanced_power_analysis"
    ELECTROMAGNETIC_ATTACK = "electromagnetic_attack"
    TEMPLATE_ATTACK = "template_attack"
    COLD_BOOT_ATTACK = "cold_boot_attack"
    CRYPTANALYSIS_ATTACK = "cryptanalysis_attack"


class ExploitVector(enum.Enum):
    REMOTE_NETWORK = "remote_network"
    PHYSICAL_ACCESS = "physical_access"
    PRIVILEGED_ACCESS = "privileged_access"


class AppliesTo(enum.Enum):
    KEM_ENC = "kem_enc"
    SIGNATURE = "signature"
    CERTIFICATE = "certificate"
    PROTOCOL = "protocol"


class Generation(enum.Enum):
    """Whether a certificate or protocol profile is classical or post-quantum."""

    CLASSICAL = "classical"
    POST_QUANTUM = "post_quantum"


# The pairings tabulated for through-migration hybrids.
ALLOWED_APPLIES_TO: Mapping[CombinerKind, frozenset[AppliesTo]] = MappingProxyType(
    {
        CombinerKind.CONCATENATION: frozenset({AppliesTo.KEM_ENC, AppliesTo.SIGNATURE}),
        **{
            k: frozenset({AppliesTo.KEM_ENC})
            for k in (
                CombinerKind.CONCAT_KDF,
                CombinerKind.CASCADE_KDF,
                CombinerKind.DUAL_PRF,
                CombinerKind.NESTED_DUAL_PRF,
                CombinerKind.SPLIT_KEY_PRF,
                CombinerKind.XOR,
                CombinerKind.XOR_THEN_MAC,
                CombinerKind.XOR_THEN_PRF,
            )
        },
        **{
            k: frozenset({AppliesTo.SIGNATURE})
            for k in (CombinerKind.WEAK_NESTING, CombinerKind.STRONG_NESTING, CombinerKind.DUAL_NESTING)
        },
        CombinerKind.DUAL_CERTIFICATE: frozenset({AppliesTo.CERTIFICATE}),
        CombinerKind.COMPOSITE_CERTIFICATE: frozenset({AppliesTo.CERTIFICATE}),
        CombinerKind.DUAL_PROTOCOL: frozenset({AppliesTo.PROTOCOL}),
        CombinerKind.COMPOSITE_PROTOCOL: frozenset({AppliesTo.PROTOCOL}),
    }
)


@dataclass(frozen=True)
class StrideEntry:
    threat: StrideClass
    rationale: str
    condition: str = ""


@dataclass(frozen=True)
class Alternative:
    ref: str
    external: bool = False


@dataclass(frozen=True)
class SuiteMember:
    mechanism: str
    optional_use: bool = False
    role: str = ""


@dataclass(frozen=True)
class PostStageAttributes:
    uses_asymmetric: bool
    vulnerability_via_optional_only: bool
    countermeasures_available: bool
    challenges: tuple[str, ...] = ()
    countermeasures: tuple[str, ...] = ()


@dataclass(frozen=True)
class MechanismRecord:
    id: str
    display_name: str
    profile: MechanismProfile
    variant_of: str | None = None
    stride_threats: tuple[StrideEntry, ...] = ()
    vulnerabilities: tuple[str, ...] = ()
    alternatives: tuple[Alternative, ...] = ()
    derived_profile: bool = False

    @property
    def family(self) -> MechanismFamily:
        return self.profile.family


@dataclass(frozen=True)
class AttackRecord:
    id: str
    target_mechanism: str
    attack_class: AttackClass
    exploit_vector: ExploitVector
    known_exploit: bool
    countermeasure_available: bool
    countermeasures: tuple[str, ...] = ()
    stride_threats: tuple[StrideEntry, ...] = ()
    notes: str = ""


@dataclass(frozen=True)
class CertificateRecord:
    id: str
    standard: str
    version: str
    fields_summary: tuple[str, ...] = ()
    purposes: tuple[str, ...] = ()
    suite: tuple[SuiteMember, ...] = ()
    stride_threats: tuple[StrideEntry, ...] = ()
    alternatives: tuple[str, ...] = ()
    stage_attributes: PostStageAttributes | None = None
    generation: Generation = Generation.CLASSICAL

    @property
    def display_name(self) -> str:
        return f"{self.standard} {self.version}"

    @property
    def post_attributes(self) -> PostStageAttributes | None:
        return self.stage_attributes


@dataclass(frozen=True)
class ProtocolRecord:
    id: str
    display_name: str
    components: tuple[str, ...] = ()
    purposes: tuple[str, ...] = ()
    suite: tuple[SuiteMember, ...] = ()
    stride_threats: tuple[StrideEntry, ...] = ()
    alternatives: tuple[str, ...] = ()
    post_attributes: PostStageAttributes | None = None
    generation: Generation = Generation.CLASSICAL


@dataclass(frozen=True)
class CombinerRecord:
    id: str
    kind: CombinerKind
    applies_to: AppliesTo
    pros: tuple[str, ...] = ()
    cons: tuple[str, ...] = ()
    stride_threats: tuple[StrideEntry, ...] = ()


@dataclass(frozen=True)
class RiskOverride:
    subject: str
    stage: MigrationStage
    justification: str
    likelihood: Level | None = None
    impact: Level | None = None


class RecordKind(enum.Enum):
    MECHANISM = "mechanism"
    ATTACK = "attack"
    CERTIFICATE = "certificate"
    PROTOCOL = "protocol"
    COMBINER = "combiner"


Record = MechanismRecord | AttackRecord | CertificateRecord | ProtocolRecord | CombinerRecord


def _frozen(mapping: Mapping | None) -> Mapping:
    return MappingProxyType(dict(mapping or {}))


@dataclass(frozen=True)
class KnowledgeBase:
    version: str
    mechanisms: Mapping[str, MechanismRecord] = field(default_factory=dict)
    attacks: Mapping[str, AttackRecord] = field(default_factory=dict)
    certificates: Mapping[str, CertificateRecord] = field(default_factory=dict)
    protocols: Mapping[str, ProtocolRecord] = field(default_factory=dict)
    combiners: Mapping[str, CombinerRecord] = field(default_factory=dict)
    poll: ExpertPoll = field(default_factory=lambda: ExpertPoll(()))
    overrides: tuple[RiskOverride, ...] = ()

    def __post_init__(self):
        for name in ("mechanisms", "attacks", "certificates", "protocols", "combiners"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "overrides", tuple(self.overrides))

    def __eq__(self, other):
        if not isinstance(other, KnowledgeBase):
            return NotImplemented
        return all(
            (dict(getattr(self, n)) if n in _COLLECTIONS else getattr(self, n))
            == (dict(getattr(other, n)) if n in _COLLECTIONS else getattr(other, n))
            for n in ("version", *_COLLECTIONS, "poll", "overrides")
        )

    __hash__ = None

    def collections(self) -> dict[RecordKind, Mapping[str, Record]]:
        return {
            RecordKind.MECHANISM: self.mechanisms,
            RecordKind.ATTACK: self.attacks,
            RecordKind.CERTIFICATE: self.certificates,
            RecordKind.PROTOCOL: self.protocols,
            RecordKind.COMBINER: self.combiners,
        }

    def all_ids(self) -> list[str]:
        return sorted({i for coll in self.collections().values() for i in coll})

    def attacks_on(self, mechanism_id: str) -> list[AttackRecord]:
        return sorted((a for a in self.attacks.values() if a.target_mechanism == mechanism_id), key=lambda a: a.id)

    def override_for(self, subject: str, stage: MigrationStage) -> RiskOverride | None:
        for o in self.overrides:
            if o.subject == subject and o.stage is stage:
                return o
        return None


_COLLECTIONS = ("mechanisms", "attacks", "certificates", "protocols", "combiners")
