"""Loading, validation, lookup and canonical serialization of the KB.

The KB is a set of JSON documents, one per collection, each wrapped in the
``{"schema": "qrisk-kb/1", "entries": [...]}`` envelope.  Loading collects
every violation before failing so a broken data pack can be fixed in one pass.
"""

from __future__ import annotations

import difflib
import json
import os
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

from qrisk.errors import KBError, QriskError, Violation
from qrisk.kb.records import (
    ALLOWED_APPLIES_TO,
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
    Record,
    RecordKind,
    RiskOverride,
    StrideEntry,
    SuiteMember,
)
from qrisk.riskcore import CombinerKind, Level, MigrationStage, StrideClass, parse_enum
from qrisk.timeline import ExpertPoll, MechanismFamily, MechanismProfile, PollBin, PollHorizon

KB_SCHEMA = "qrisk-kb/1"
DOCUMENT_NAMES = ("mechanisms", "attacks", "protocols", "certificates", "combiners", "poll", "overrides")
UNVERSIONED = "unversioned"


# --------------------------------------------------------------------------
# field reader


class _Reader:
    """Pulls typed fields out of one JSON object, recording violations."""

    def __init__(self, obj: Any, where: str, sink: list[Violation], lax: bool):
        self.where = where
        self.sink = sink
        self.lax = lax
        self.ok = isinstance(obj, dict)
        self.obj = obj if self.ok else {}
        self.seen: set[str] = set()
        if not self.ok:
            self.fail("schema", f"expected an object, got {type(obj).__name__}")

    def fail(self, code: str, message: str) -> None:
        self.ok = False
        self.sink.append(Violation(code, message, self.where))

    def _get(self, name: str, required: bool, default: Any) -> tuple[bool, Any]:
        self.seen.add(name)
        if name not in self.obj:
            if required:
                self.fail("missing-field", f"missing required field '{name}'")
            return False, default
        return True, self.obj[name]

    def text(self, name: str, required: bool = True, default: str = "") -> str:
        present, v = self._get(name, required, default)
        if present and not isinstance(v, str):
            self.fail("schema", f"field '{name}' must be a string")
            return default
        return v

    def ident(self, name: str, required: bool = True) -> str:
        v = self.text(name, required)
        if v and not _is_identifier(v):
            self.fail("schema", f"field '{name}' value {v!r} is not an identifier")
        return v

    def opt_ident(self, name: str) -> str | None:
        present, v = self._get(name, False, None)
        if v is None:
            return None
        if not isinstance(v, str) or not _is_identifier(v):
            self.fail("schema", f"field '{name}' must be an identifier or null")
            return None
        return v

    def flag(self, name: str, required: bool = True, default: bool = False) -> bool:
        present, v = self._get(name, required, default)
        if present and not isinstance(v, bool):
            self.fail("schema", f"field '{name}' must be true or false")
            return default
        return v

    def integer(self, name: str, required: bool = True) -> int:
        present, v = self._get(name, required, 0)
        if present and (isinstance(v, bool) or not isinstance(v, int)):
            self.fail("schema", f"field '{name}' must be an integer")
            return 0
        return v

    def number(self, name: str, required: bool = True) -> float:
        present, v = self._get(name, required, 0.0)
        if present and (isinstance(v, bool) or not isinstance(v, (int, float))):
            self.fail("schema", f"field '{name}' must be a number")
            return 0.0
        return float(v)

    def texts(self, name: str, required: bool = False) -> tuple[str, ...]:
        present, v = self._get(name, required, [])
        if present and (not isinstance(v, list) or not all(isinstance(x, str) for x in v)):
            self.fail("schema", f"field '{name}' must be a list of strings")
            return ()
        return tuple(v)

    def choice(self, name: str, enum_cls, required: bool = True, default=None):
        present, v = self._get(name, required, default)
        if not present or v is None:
            return default
        try:
            return parse_enum(enum_cls, v)
        except ValueError as exc:
            self.fail("schema", f"field '{name}': {exc}")
            return default

    def level(self, name: str) -> Level | None:
        present, v = self._get(name, False, None)
        if v is None:
            return None
        try:
            return Level.parse(v)
        except ValueError as exc:
            self.fail("schema", f"field '{name}': {exc}")
            return None

    def objects(self, name: str, parse: Callable[[Any, str], Any], required: bool = False) -> tuple:
        present, v = self._get(name, required, [])
        if not present:
            return ()
        if not isinstance(v, list):
            self.fail("schema", f"field '{name}' must be a list")
            return ()
        out = []
        for i, item in enumerate(v):
            parsed = parse(item, f"{self.where}.{name}[{i}]")
            if parsed is None:
                self.ok = False
            else:
                out.append(parsed)
        return tuple(out)

    def sub(self, name: str, parse: Callable[[Any, str], Any], required: bool = False):
        present, v = self._get(name, required, None)
        if v is None:
            return None
        parsed = parse(v, f"{self.where}.{name}")
        if parsed is None:
            self.ok = False
        return parsed

    def finish(self):
        # Unknown fields are reported but do not discard the record, so one
        # typo does not cascade into dangling-reference noise.
        if not self.lax:
            for key in sorted(set(self.obj) - self.seen):
                self.sink.append(Violation("unknown-field", f"unknown field '{key}'", self.where))
        return self.ok


def _is_identifier(text: str) -> bool:
    return bool(text) and text.replace("_", "a").isalnum() and text.isascii() and not text[0].isdigit()


# --------------------------------------------------------------------------
# entry parsers


class _Parser:
    def __init__(self, sink: list[Violation], lax: bool):
        self.sink = sink
        self.lax = lax

    def reader(self, obj, where) -> _Reader:
        return _Reader(obj, where, self.sink, self.lax)

    def stride(self, obj, where):
        r = self.reader(obj, where)
        e = StrideEntry(
            threat=r.choice("threat", StrideClass),
            rationale=r.text("rationale"),
            condition=r.text("condition", required=False),
        )
        return e if r.finish() else None

    def alternative(self, obj, where):
        r = self.reader(obj, where)
        a = Alternative(ref=r.text("ref"), external=r.flag("external", required=False))
        return a if r.finish() else None

    def suite_member(self, obj, where):
        r = self.reader(obj, where)
        m = SuiteMember(
            mechanism=r.ident("mechanism"),
            optional_use=r.flag("optional_use", required=False),
            role=r.text("role", required=False),
        )
        return m if r.finish() else None

    def post_attrs(self, obj, where):
        r = self.reader(obj, where)
        p = PostStageAttributes(
            uses_asymmetric=r.flag("uses_asymmetric"),
            vulnerability_via_optional_only=r.flag("vulnerability_via_optional_only"),
            countermeasures_available=r.flag("countermeasures_available"),
            challenges=r.texts("challenges"),
            countermeasures=r.texts("countermeasures"),
        )
        return p if r.finish() else None

    def mechanism(self, obj, where):
        r = self.reader(obj, where)
        mid = r.ident("id")

        def profile(p, w):
            pr = self.reader(p, w)
            prof = MechanismProfile(
                name=mid,
                family=pr.choice("family", MechanismFamily),
                parameter_bits=pr.integer("parameter_bits"),
                classic_strength_bits=pr.integer("classic_strength_bits"),
            )
            return prof if pr.finish() else None

        rec = MechanismRecord(
            id=mid,
            display_name=r.text("display_name"),
            profile=r.sub("profile", profile, required=True),
            variant_of=r.opt_ident("variant_of"),
            stride_threats=r.objects("stride_threats", self.stride),
            vulnerabilities=r.texts("vulnerabilities"),
            alternatives=r.objects("alternatives", self.alternative),
            derived_profile=r.flag("derived_profile", required=False),
        )
        return rec if r.finish() else None

    def attack(self, obj, where):
        r = self.reader(obj, where)
        rec = AttackRecord(
            id=r.ident("id"),
            target_mechanism=r.ident("target_mechanism"),
            attack_class=r.choice("attack_class", AttackClass),
            exploit_vector=r.choice("exploit_vector", ExploitVector),
            known_exploit=r.flag("known_exploit"),
            countermeasure_available=r.flag("countermeasure_available"),
            countermeasures=r.texts("countermeasures"),
            stride_threats=r.objects("stride_threats", self.stride),
            notes=r.text("notes", required=False),
        )
        return rec if r.finish() else None

    def certificate(self, obj, where):
        r = self.reader(obj, where)
        rec = CertificateRecord(
            id=r.ident("id"),
            standard=r.text("standard"),
            version=r.text("version"),
            fields_summary=r.texts("fields_summary"),
            purposes=r.texts("purposes"),
            suite=r.objects("suite", self.suite_member),
            stride_threats=r.objects("stride_threats", self.stride),
            alternatives=r.texts("alternatives"),
            stage_attributes=r.sub("stage_attributes", self.post_attrs),
            generation=r.choice("generation", Generation, required=False, default=Generation.CLASSICAL),
        )
        return rec if r.finish() else None

    def protocol(self, obj, where):
        r = self.reader(obj, where)
        rec = ProtocolRecord(
            id=r.ident("id"),
            display_name=r.text("display_name"),
            components=r.texts("components"),
            purposes=r.texts("purposes"),
            suite=r.objects("suite", self.suite_member),
            stride_threats=r.objects("stride_threats", self.stride),
            alternatives=r.texts("alternatives"),
            post_attributes=r.sub("post_attributes", self.post_attrs),
            generation=r.choice("generation", Generation, required=False, default=Generation.CLASSICAL),
        )
        return rec if r.finish() else None

    def combiner(self, obj, where):
        r = self.reader(obj, where)
        rec = CombinerRecord(
            id=r.ident("id"),
            kind=r.choice("kind", CombinerKind),
            applies_to=r.choice("applies_to", AppliesTo),
            pros=r.texts("pros"),
            cons=r.texts("cons"),
            stride_threats=r.objects("stride_threats", self.stride),
        )
        return rec if r.finish() else None

    def horizon(self, obj, where):
        r = self.reader(obj, where)

        def poll_bin(b, w):
            br = self.reader(b, w)
            pb = PollBin(
                representative=br.number("representative"),
                fraction=br.number("fraction"),
                label=br.text("label", required=False),
            )
            return pb if br.finish() else None

        h = PollHorizon(years=r.integer("years"), bins=r.objects("bins", poll_bin, required=True))
        return h if r.finish() else None

    def override(self, obj, where):
        r = self.reader(obj, where)
        o = RiskOverride(
            subject=r.ident("subject"),
            stage=r.choice("stage", MigrationStage),
            justification=r.text("justification"),
            likelihood=r.level("likelihood"),
            impact=r.level("impact"),
        )
        return o if r.finish() else None


_ENTRY_PARSERS = {
    "mechanisms": _Parser.mechanism,
    "attacks": _Parser.attack,
    "protocols": _Parser.protocol,
    "certificates": _Parser.certificate,
    "combiners": _Parser.combiner,
    "poll": _Parser.horizon,
    "overrides": _Parser.override,
}


# --------------------------------------------------------------------------
# loading


def _doc_name(name: str) -> str:
    base = os.path.basename(name)
    return base[:-5] if base.endswith(".json") else base


def parse_documents(documents: Mapping[str, str], lax: bool = False) -> tuple[KnowledgeBase | None, list[Violation]]:
    """Parse KB documents without raising; returns the KB (if buildable) and violations."""
    sink: list[Violation] = []
    parser = _Parser(sink, lax)
    parsed: dict[str, list] = {n: [] for n in DOCUMENT_NAMES}
    versions: dict[str, str] = {}

    for raw_name in sorted(documents):
        name = _doc_name(raw_name)
        doc = f"{name}.json"
        if name not in _ENTRY_PARSERS:
            if not lax:
                sink.append(Violation("unknown-document", f"unexpected KB document '{raw_name}'", doc))
            continue
        try:
            data = json.loads(documents[raw_name])
        except json.JSONDecodeError as exc:
            sink.append(Violation("parse", f"invalid JSON: {exc.msg}", f"{doc}:{exc.lineno}:{exc.colno}"))
            continue
        r = _Reader(data, doc, sink, lax)
        schema = r.text("schema")
        if schema and schema != KB_SCHEMA:
            r.fail("schema", f"unsupported schema {schema!r} (expected {KB_SCHEMA!r})")
        version = r.text("version", required=False)
        if version:
            versions[doc] = version
        entries = r.obj.get("entries") if r.ok or isinstance(data, dict) else None
        r.seen.add("entries")
        r.finish()
        if not isinstance(entries, list):
            sink.append(Violation("schema", "field 'entries' must be a list", doc))
            continue
        for i, entry in enumerate(entries):
            label = None
            if isinstance(entry, dict):
                label = entry.get("id") or entry.get("subject") or entry.get("years")
            where = f"{doc}#{i}" + (f" ({label})" if label is not None else "")
            rec = _ENTRY_PARSERS[name](parser, entry, where)
            if rec is not None:
                parsed[name].append((where, rec))

    distinct = sorted(set(versions.values()))
    if len(distinct) > 1:
        detail = ", ".join(f"{d}={v}" for d, v in sorted(versions.items()))
        sink.append(Violation("version-mismatch", f"documents disagree on KB version: {detail}"))
    version = distinct[0] if len(distinct) == 1 else UNVERSIONED

    collections: dict[str, dict] = {}
    owner: dict[str, str] = {}
    for name in ("mechanisms", "attacks", "protocols", "certificates", "combiners"):
        coll: dict = {}
        for where, rec in parsed[name]:
            if rec.id in owner:
                sink.append(Violation("duplicate-id", f"duplicate id '{rec.id}' (first defined in {owner[rec.id]})", where))
                continue
            owner[rec.id] = where
            coll[rec.id] = rec
        collections[name] = dict(sorted(coll.items()))

    horizons = sorted((h for _, h in parsed["poll"]), key=lambda h: h.years)
    overrides = sorted((o for _, o in parsed["overrides"]), key=lambda o: (o.subject, o.stage.value))
    kb = KnowledgeBase(
        version=version,
        poll=ExpertPoll(tuple(horizons)),
        overrides=tuple(overrides),
        **collections,
    )
    return kb, sink


def load_kb(documents: Mapping[str, str], lax: bool = False) -> KnowledgeBase:
    """Build a validated KB from named JSON texts or raise :class:`KBError` with every violation."""
    kb, violations = parse_documents(documents, lax=lax)
    violations = violations + validate_kb(kb)
    if violations:
        raise KBError(sorted(set(violations)))
    return kb


def read_kb_dir(path: str | os.PathLike) -> dict[str, str]:
    root = Path(path)
    if not root.is_dir():
        raise QriskError(f"KB directory not found: {root}", code="io")
    return {p.name: p.read_text(encoding="utf-8") for p in sorted(root.glob("*.json"))}


def load_kb_dir(path: str | os.PathLike, lax: bool = False) -> KnowledgeBase:
    return load_kb(read_kb_dir(path), lax=lax)


def seeded_documents() -> dict[str, str]:
    base = resources.files("qrisk.kb") / "data"
    return {f"{n}.json": (base / f"{n}.json").read_text(encoding="utf-8") for n in DOCUMENT_NAMES}


_SEEDED: KnowledgeBase | None = None


def load_seeded_kb() -> KnowledgeBase:
    """The KB bundled with the package (parsed once and cached; it is immutable)."""
    global _SEEDED
    if _SEEDED is None:
        _SEEDED = load_kb(seeded_documents())
    return _SEEDED


# --------------------------------------------------------------------------
# validation


def validate_kb(kb: KnowledgeBase) -> list[Violation]:
    """Check every cross-record invariant; returns all violations found (sorted)."""
    from qrisk.engine import attack_likelihood  # deferred: the engine imports this module

    out: list[Violation] = []

    def add(code, msg, where=""):
        out.append(Violation(code, msg, where))

    if not kb.mechanisms:
        add("empty", "no mechanisms defined")

    seen: dict[str, str] = {}
    for kind, coll in kb.collections().items():
        for rid in coll:
            if rid in seen and seen[rid] != kind.value:
                add("duplicate-id", f"id '{rid}' used by both a {seen[rid]} and a {kind.value}")
            seen.setdefault(rid, kind.value)

    def check_stride(entries, where):
        threats = [e.threat for e in entries]
        for t in sorted({t for t in threats if threats.count(t) > 1}, key=lambda s: s.value):
            add("duplicate-threat", f"threat '{t.value}' listed twice", where)

    for m in kb.mechanisms.values():
        where = f"mechanism {m.id}"
        for p in m.profile.problems():
            add("invariant", p, where)
        if m.family is MechanismFamily.ASYMMETRIC_SHOR_BREAKABLE and not m.stride_threats:
            add("invariant", "Shor-breakable mechanism must list at least one STRIDE threat", where)
        if m.variant_of is not None and m.variant_of not in kb.mechanisms:
            add("dangling-reference", f"'{m.id}' is a variant of unknown mechanism '{m.variant_of}'", where)
        for a in m.alternatives:
            if not a.external and a.ref not in kb.mechanisms:
                add("dangling-reference", f"'{m.id}' names unknown alternative '{a.ref}' (mark it external if free text)", where)
        check_stride(m.stride_threats, where)

    for a in kb.attacks.values():
        where = f"attack {a.id}"
        target = kb.mechanisms.get(a.target_mechanism)
        if target is None:
            add("dangling-reference", f"attack '{a.id}' targets unknown mechanism '{a.target_mechanism}'", where)
        elif target.family is not MechanismFamily.QUANTUM_RESISTANT:
            add("invariant", f"attack '{a.id}' targets '{target.id}', which is not quantum resistant", where)
        if a.countermeasure_available and not a.countermeasures:
            add("invariant", "countermeasure_available is true but no countermeasures are listed", where)
        try:
            attack_likelihood(a.exploit_vector, a.known_exploit, a.countermeasure_available)
        except QriskError as exc:
            add(exc.code, str(exc), where)
        check_stride(a.stride_threats, where)

    suites: list[tuple[str, str, Iterable[SuiteMember], Generation]] = [
        ("protocol", p.id, p.suite, p.generation) for p in kb.protocols.values()
    ] + [("certificate", c.id, c.suite, c.generation) for c in kb.certificates.values()]
    for kind, rid, suite, gen in suites:
        where = f"{kind} {rid}"
        if gen is Generation.CLASSICAL and not suite:
            add("invariant", "classical profile must have a nonempty suite", where)
        for member in suite:
            if member.mechanism not in kb.mechanisms:
                add("dangling-reference", f"{kind} '{rid}' suite references unknown mechanism '{member.mechanism}'", where)
    for p in kb.protocols.values():
        check_stride(p.stride_threats, f"protocol {p.id}")
    for c in kb.certificates.values():
        check_stride(c.stride_threats, f"certificate {c.id}")

    for c in kb.combiners.values():
        where = f"combiner {c.id}"
        allowed = ALLOWED_APPLIES_TO[c.kind]
        if c.applies_to not in allowed:
            names = ", ".join(sorted(x.value for x in allowed))
            add("invariant", f"combiner kind '{c.kind.value}' cannot apply to '{c.applies_to.value}' (allowed: {names})", where)
        check_stride(c.stride_threats, where)

    for problem in kb.poll.problems():
        add("poll", problem, "poll")

    subjects = {**kb.mechanisms, **kb.protocols, **kb.certificates}
    seen_override: set[tuple[str, MigrationStage]] = set()
    for o in kb.overrides:
        where = f"override {o.subject}/{o.stage.value}"
        if o.subject not in subjects:
            add("dangling-reference", f"override names unknown subject '{o.subject}'", where)
        if not o.justification.strip():
            add("invariant", "override justification must not be empty", where)
        if o.likelihood is None and o.impact is None:
            add("invariant", "override must set likelihood or impact", where)
        if (o.subject, o.stage) in seen_override:
            add("duplicate-id", "more than one override for this subject and stage", where)
        seen_override.add((o.subject, o.stage))

    return sorted(set(out))


# --------------------------------------------------------------------------
# lookup


@dataclass(frozen=True)
class LookupResult:
    id: str
    kind: RecordKind | None
    record: Record | None
    suggestions: tuple[str, ...] = ()

    @property
    def found(self) -> bool:
        return self.record is not None


def lookup(kb: KnowledgeBase, rid: str) -> LookupResult:
    for kind, coll in kb.collections().items():
        if rid in coll:
            return LookupResult(rid, kind, coll[rid])
    near = difflib.get_close_matches(rid, kb.all_ids(), n=5, cutoff=0.6)
    return LookupResult(rid, None, None, tuple(near))


# --------------------------------------------------------------------------
# serialization


def _stride_json(entries):
    out = []
    for e in entries:
        d = {"threat": e.threat.value, "rationale": e.rationale}
        if e.condition:
            d["condition"] = e.condition
        out.append(d)
    return out


def _suite_json(suite):
    return [{"mechanism": m.mechanism, "optional_use": m.optional_use, "role": m.role} for m in suite]


def _post_json(p: PostStageAttributes | None):
    if p is None:
        return None
    return {
        "uses_asymmetric": p.uses_asymmetric,
        "vulnerability_via_optional_only": p.vulnerability_via_optional_only,
        "countermeasures_available": p.countermeasures_available,
        "challenges": list(p.challenges),
        "countermeasures": list(p.countermeasures),
    }


def record_to_json(rec: Record) -> dict:
    if isinstance(rec, MechanismRecord):
        return {
            "id": rec.id,
            "display_name": rec.display_name,
            "profile": {
                "family": rec.profile.family.value,
                "parameter_bits": rec.profile.parameter_bits,
                "classic_strength_bits": rec.profile.classic_strength_bits,
            },
            "variant_of": rec.variant_of,
            "stride_threats": _stride_json(rec.stride_threats),
            "vulnerabilities": list(rec.vulnerabilities),
            "alternatives": [{"ref": a.ref, "external": a.external} for a in rec.alternatives],
            "derived_profile": rec.derived_profile,
        }
    if isinstance(rec, AttackRecord):
        return {
            "id": rec.id,
            "target_mechanism": rec.target_mechanism,
            "attack_class": rec.attack_class.value,
            "exploit_vector": rec.exploit_vector.value,
            "known_exploit": rec.known_exploit,
            "countermeasure_available": rec.countermeasure_available,
            "countermeasures": list(rec.countermeasures),
            "stride_threats": _stride_json(rec.stride_threats),
            "notes": rec.notes,
        }
    if isinstance(rec, CertificateRecord):
        return {
            "id": rec.id,
            "standard": rec.standard,
            "version": rec.version,
            "fields_summary": list(rec.fields_summary),
            "purposes": list(rec.purposes),
            "suite": _suite_json(rec.suite),
            "stride_threats": _stride_json(rec.stride_threats),
            "alternatives": list(rec.alternatives),
            "stage_attributes": _post_json(rec.stage_attributes),
            "generation": rec.generation.value,
        }
    if isinstance(rec, ProtocolRecord):
        return {
            "id": rec.id,
            "display_name": rec.display_name,
            "components": list(rec.components),
            "purposes": list(rec.purposes),
            "suite": _suite_json(rec.suite),
            "stride_threats": _stride_json(rec.stride_threats),
            "alternatives": list(rec.alternatives),
            "post_attributes": _post_json(rec.post_attributes),
            "generation": rec.generation.value,
        }
    if isinstance(rec, CombinerRecord):
        return {
            "id": rec.id,
            "kind": rec.kind.value,
            "applies_to": rec.applies_to.value,
            "pros": list(rec.pros),
            "cons": list(rec.cons),
            "stride_threats": _stride_json(rec.stride_threats),
        }
    raise TypeError(f"not a KB record: {rec!r}")


def _horizon_json(h: PollHorizon) -> dict:
    bins = []
    for b in h.bins:
        d = {"representative": b.representative, "fraction": b.fraction}
        if b.label:
            d["label"] = b.label
        bins.append(d)
    return {"years": h.years, "bins": bins}


def _override_json(o: RiskOverride) -> dict:
    return {
        "subject": o.subject,
        "stage": o.stage.value,
        "likelihood": o.likelihood.label if o.likelihood else None,
        "impact": o.impact.label if o.impact else None,
        "justification": o.justification,
    }


def canonical_json(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def serialize(kb: KnowledgeBase) -> dict[str, str]:
    """Canonical document set for ``kb``; loading it back yields an equal KB."""
    entries = {
        "mechanisms": [record_to_json(r) for r in kb.mechanisms.values()],
        "attacks": [record_to_json(r) for r in kb.attacks.values()],
        "protocols": [record_to_json(r) for r in kb.protocols.values()],
        "certificates": [record_to_json(r) for r in kb.certificates.values()],
        "combiners": [record_to_json(r) for r in kb.combiners.values()],
        "poll": [_horizon_json(h) for h in kb.poll.horizons],
        "overrides": [_override_json(o) for o in kb.overrides],
    }
    out = {}
    for name, items in entries.items():
        if name not in ("poll", "overrides"):
            items = sorted(items, key=lambda d: d["id"])
        envelope = {"schema": KB_SCHEMA, "entries": items}
        if kb.version != UNVERSIONED:
            envelope["version"] = kb.version
        out[f"{name}.json"] = canonical_json(envelope)
    return out
