"""Quantum threat timeline, quantum security strength and level mapping."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from qrisk.errors import QriskError
from qrisk.riskcore import Level

FRACTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PollBin:
    representative: float
    fraction: float
    label: str = ""


@dataclass(frozen=True)
class PollHorizon:
    years: int
    bins: tuple[PollBin, ...]

    def expectation(self) -> float:
        # fsum keeps the result independent of bin order up to rounding.
        return math.fsum(b.representative * b.fraction for b in self.bins)


@dataclass(frozen=True)
class ExpertPoll:
    horizons: tuple[PollHorizon, ...]

    def horizon(self, years: int) -> PollHorizon:
        for h in self.horizons:
            if h.years == years:
                return h
        available = ", ".join(str(h.years) for h in self.horizons) or "none"
        raise QriskError(
            f"no poll horizon for {years} years (available: {available})",
            code="unknown-horizon",
        )

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(h.years for h in self.horizons)

    def problems(self) -> list[str]:
        """Human-readable invariant violations; empty when the poll is well formed."""
        out: list[str] = []
        if not self.horizons:
            out.append("poll has no horizons")
        years = [h.years for h in self.horizons]
        for a, b in zip(years, years[1:]):
            if b <= a:
                out.append(f"horizons not strictly increasing: {a} then {b}")
        for h in self.horizons:
            if not isinstance(h.years, int) or h.years <= 0:
                out.append(f"horizon years must be a positive integer, got {h.years!r}")
            if not h.bins:
                out.append(f"horizon {h.years} has no bins")
                continue
            for i, b in enumerate(h.bins):
                for name in ("representative", "fraction"):
                    v = getattr(b, name)
                    if not 0.0 <= v <= 1.0:
                        out.append(f"horizon {h.years} bin {i} {name} {v} outside [0, 1]")
            total = math.fsum(b.fraction for b in h.bins)
            if abs(total - 1.0) > FRACTION_TOLERANCE:
                out.append(f"horizon {h.years} fractions sum to {total:.12g}, expected 1")
        return out


class MechanismFamily(enum.Enum):
    ASYMMETRIC_SHOR_BREAKABLE = "asymmetric_shor_breakable"
    SYMMETRIC_CIPHER = "symmetric_cipher"
    KEYED_MAC = "keyed_mac"
    UNKEYED_HASH = "unkeyed_hash"
    QUANTUM_RESISTANT = "quantum_resistant"


_SIZED_FAMILIES = (
    MechanismFamily.SYMMETRIC_CIPHER,
    MechanismFamily.KEYED_MAC,
    MechanismFamily.UNKEYED_HASH,
)


@dataclass(frozen=True)
class MechanismProfile:
    name: str
    family: MechanismFamily
    parameter_bits: int
    classic_strength_bits: int

    def problems(self) -> list[str]:
        out = []
        if self.parameter_bits < 0 or self.classic_strength_bits < 0:
            out.append(f"{self.name}: bit counts must be nonnegative")
        if self.family is not MechanismFamily.ASYMMETRIC_SHOR_BREAKABLE and self.parameter_bits <= 0:
            out.append(f"{self.name}: parameter_bits must be positive for {self.family.value}")
        if self.family in _SIZED_FAMILIES and self.classic_strength_bits > self.parameter_bits:
            out.append(
                f"{self.name}: classic strength {self.classic_strength_bits} exceeds "
                f"parameter size {self.parameter_bits}"
            )
        return out


@dataclass(frozen=True)
class TimelineConfig:
    horizon_years: int = 15
    low_upper_bound: float = 0.30
    medium_upper_bound: float = 0.55

    def __post_init__(self):
        if not isinstance(self.horizon_years, int) or self.horizon_years <= 0:
            raise QriskError(f"horizon must be a positive integer, got {self.horizon_years!r}", code="config")
        if not 0.0 < self.low_upper_bound < self.medium_upper_bound < 1.0:
            raise QriskError(
                "thresholds must satisfy 0 < low_upper_bound < medium_upper_bound < 1",
                code="config",
            )


def expected_likelihood(poll: ExpertPoll, horizon_years: int) -> float:
    """Probability-weighted mean of the poll bins at one horizon.

    >>> p = ExpertPoll((PollHorizon(1, (PollBin(1.0, 1.0),)),))
    >>> expected_likelihood(p, 1)
    1.0
    """
    value = poll.horizon(horizon_years).expectation()
    return min(1.0, max(0.0, value))


def likelihood_level(expected: float, cfg: TimelineConfig) -> Level:
    if expected < cfg.low_upper_bound:
        return Level.LOW
    if expected < cfg.medium_upper_bound:
        return Level.MEDIUM
    return Level.HIGH


def quantum_strength(mech: MechanismProfile) -> int:
    """Bits of security left against a quantum adversary.

    Shor's algorithm removes all security from factoring and discrete-log
    schemes, Grover halves symmetric keys and BHT cuts hash output to a third.

    >>> quantum_strength(MechanismProfile("sha2_256", MechanismFamily.UNKEYED_HASH, 256, 128))
    85
    """
    fam = mech.family
    if fam is MechanismFamily.ASYMMETRIC_SHOR_BREAKABLE:
        return 0
    if fam in (MechanismFamily.SYMMETRIC_CIPHER, MechanismFamily.KEYED_MAC):
        return mech.parameter_bits // 2
    if fam is MechanismFamily.UNKEYED_HASH:
        return mech.parameter_bits // 3
    return mech.classic_strength_bits


def impact_from_strength(qs_bits: int) -> Level:
    if qs_bits < 64:
        return Level.HIGH
    if qs_bits < 128:
        return Level.MEDIUM
    return Level.LOW
