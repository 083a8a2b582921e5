"""Knowledge base: typed records, loader, validator and lookup."""

from qrisk.kb.loader import (
    LookupResult,
    load_kb,
    load_kb_dir,
    load_seeded_kb,
    lookup,
    parse_documents,
    read_kb_dir,
    seeded_documents,
    serialize,
    validate_kb,
)
from qrisk.kb.records import (
    Alternative,
    AppliesTo,
    AttackClass,
    AttackRecord,
    CertificateRecord,
    CombinerRecord,
    ExploitVector,
    Generation,
    KnowledgeBase,
    MechanismRecord,
    PostStageAttributes,
    ProtocolRecord,
    RecordKind,
    RiskOverride,
    StrideEntry,
    SuiteMember,
)

__all__ = [
    "Alternative",
    "AppliesTo",
    "AttackClass",
    "AttackRecord",
    "CertificateRecord",
    "CombinerRecord",
    "ExploitVector",
    "Generation",
    "KnowledgeBase",
    "LookupResult",
    "MechanismRecord",
    "PostStageAttributes",
    "ProtocolRecord",
    "RecordKind",
    "RiskOverride",
    "StrideEntry",
    "SuiteMember",
    "load_kb",
    "load_kb_dir",
    "load_seeded_kb",
    "lookup",
    "parse_documents",
    "read_kb_dir",
    "seeded_documents",
    "serialize",
    "validate_kb",
]
