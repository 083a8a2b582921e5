"""Qualitative levels, STRIDE taxonomy, migration stages and risk rules."""

from __future__ import annotations

import enum
from collections.abc import Iterable


class Level(enum.IntEnum):
    """Ordered qualitative scale used for likelihood, impact and risk."""

    LOW = 1
    MEDIUM = 2
    HIGH = 3

    @classmethod
    def parse(cls, token: str | Level) -> Level:
        if isinstance(token, Level):
            return token
        if not isinstance(token, str):
            raise ValueError(f"not a level: {token!r}")
        key = token.strip().lower()
        try:
            return _LEVEL_TOKENS[key]
        except KeyError:
            raise ValueError(f"not a level: {token!r} (expected low, medium or high)") from None

    @property
    def label(self) -> str:
        return self.name.lower()

    @property
    def letter(self) -> str:
        return self.name[0]


_LEVEL_TOKENS = {
    "low": Level.LOW,
    "l": Level.LOW,
    "medium": Level.MEDIUM,
    "m": Level.MEDIUM,
    "high": Level.HIGH,
    "h": Level.HIGH,
}


class StrideClass(enum.Enum):
    SPOOFING = "spoofing"
    TAMPERING = "tampering"
    REPUDIATION = "repudiation"
    INFORMATION_DISCLOSURE = "information_disclosure"
    DENIAL_OF_SERVICE = "denial_of_service"
    ELEVATION_OF_PRIVILEGE = "elevation_of_privilege"

    @property
    def letter(self) -> str:
        return _STRIDE_LETTERS[self]

    @property
    def title(self) -> str:
        return self.value.replace("_", " ").title()


_STRIDE_LETTERS = {
    StrideClass.SPOOFING: "S",
    StrideClass.TAMPERING: "T",
    StrideClass.REPUDIATION: "R",
    StrideClass.INFORMATION_DISCLOSURE: "I",
    StrideClass.DENIAL_OF_SERVICE: "D",
    StrideClass.ELEVATION_OF_PRIVILEGE: "E",
}
_STRIDE_ORDER = {s: i for i, s in enumerate(StrideClass)}


def stride_sorted(threats: Iterable[StrideClass]) -> list[StrideClass]:
    """Deduplicate and order threats canonically (S, T, R, I, D, E)."""
    return sorted(set(threats), key=_STRIDE_ORDER.__getitem__)


def stride_letters(threats: Iterable[StrideClass]) -> str:
    return ",".join(t.letter for t in stride_sorted(threats))


class MigrationStage(enum.Enum):
    PRE_MIGRATION = "pre_migration"
    THROUGH_MIGRATION = "through_migration"
    POST_MIGRATION = "post_migration"

    @property
    def title(self) -> str:
        return self.value.replace("_", "-").capitalize()


class CombinerKind(enum.Enum):
    CONCATENATION = "concatenation"
    CONCAT_KDF = "concat_kdf"
    CASCADE_KDF = "cascade_kdf"
    DUAL_PRF = "dual_prf"
    NESTED_DUAL_PRF = "nested_dual_prf"
    SPLIT_KEY_PRF = "split_key_prf"
    XOR = "xor"
    XOR_THEN_MAC = "xor_then_mac"
    XOR_THEN_PRF = "xor_then_prf"
    WEAK_NESTING = "weak_nesting"
    STRONG_NESTING = "strong_nesting"
    DUAL_NESTING = "dual_nesting"
    DUAL_CERTIFICATE = "dual_certificate"
    COMPOSITE_CERTIFICATE = "composite_certificate"
    DUAL_PROTOCOL = "dual_protocol"
    COMPOSITE_PROTOCOL = "composite_protocol"

    @property
    def first_component_only(self) -> bool:
        return self is CombinerKind.WEAK_NESTING


def parse_enum(enum_cls, token):
    """Parse an enum member from its value, case-insensitively."""
    if isinstance(token, enum_cls):
        return token
    if isinstance(token, str):
        key = token.strip().lower()
        for member in enum_cls:
            if member.value == key:
                return member
    choices = ", ".join(m.value for m in enum_cls)
    raise ValueError(f"invalid {enum_cls.__name__} {token!r}; expected one of: {choices}")


# Rows are likelihood, columns impact.
_RISK_MATRIX = {
    Level.LOW: (Level.LOW, Level.LOW, Level.MEDIUM),
    Level.MEDIUM: (Level.LOW, Level.MEDIUM, Level.HIGH),
    Level.HIGH: (Level.MEDIUM, Level.HIGH, Level.HIGH),
}


def combine_risk(likelihood: Level, impact: Level) -> Level:
    """Risk level for a likelihood/impact pair, read off the 3x3 risk matrix."""
    return _RISK_MATRIX[Level(likelihood)][Level(impact) - 1]


def combine_hybrid(a: Level, b: Level) -> Level:
    """A hybrid is as risky as its least risky component."""
    return min(Level(a), Level(b))


def combine_weak_nesting(first: Level, second: Level) -> Level:
    """Weak nesting only inherits the first signature's unforgeability."""
    return Level(first)


def fold_hybrid(levels: Iterable[Level], kind: CombinerKind | None = None) -> Level:
    """Combine two or more component risks under a combiner kind.

    Non-weak-nesting kinds fold the min rule left to right.  Weak nesting is
    only defined for a pair.
    """
    levels = [Level(x) for x in levels]
    if len(levels) < 2:
        raise ValueError("a hybrid needs at least two components")
    if kind is CombinerKind.WEAK_NESTING:
        if len(levels) != 2:
            raise ValueError("weak nesting is defined for exactly two components")
        return combine_weak_nesting(levels[0], levels[1])
    out = levels[0]
    for lv in levels[1:]:
        out = combine_hybrid(out, lv)
    return out


def aggregate_findings(levels: Iterable[Level]) -> Level:
    """Worst-case roll-up of several risks on one asset."""
    levels = list(levels)
    if not levels:
        raise ValueError("no findings to aggregate")
    return max(Level(x) for x in levels)
