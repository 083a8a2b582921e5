"""Error types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can print
``qrisk-error[CODE]: message`` lines that scripts can grep for.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Violation:
    """One problem found while loading or validating a document."""

    code: str
    message: str
    location: str = ""

    def __str__(self) -> str:
        where = f" ({self.location})" if self.location else ""
        return f"[{self.code}] {self.message}{where}"


class QriskError(Exception):
    code = "error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    @property
    def message(self) -> str:
        return str(self.args[0]) if self.args else ""


class ViolationsError(QriskError):
    """Raised when a document fails validation; holds every violation found."""

    code = "invalid"

    def __init__(self, violations: list[Violation], what: str = "document"):
        self.violations = sorted(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"{what} has {len(self.violations)} violation(s): {lines}{more}")
        if len(self.violations) == 1:
            self.code = self.violations[0].code


class KBError(ViolationsError):
    def __init__(self, violations: list[Violation]):
        super().__init__(violations, what="knowledge base")


class InventoryError(ViolationsError):
    def __init__(self, violations: list[Violation]):
        super().__init__(violations, what="inventory")


class AssessmentError(QriskError):
    code = "assessment"
