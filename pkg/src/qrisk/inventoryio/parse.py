"""Inventory document parsing and validation."""

from __future__ import annotations

import json
from collections.abc import Mapping
from typing import Any

from qrisk.errors import InventoryError, Violation
from qrisk.kb.records import KnowledgeBase
from qrisk.model import Asset, AssetKind, HybridSpec, Inventory
from qrisk.riskcore import CombinerKind, MigrationStage, parse_enum

INVENTORY_SCHEMA = "qrisk-inventory/1"
_ASSET_FIELDS = {"id", "kind", "stage", "subject", "hybrid", "context_notes"}


def parse_inventory(document: str | bytes | Mapping[str, Any], kb: KnowledgeBase | None = None, lax: bool = False) -> Inventory:
    """Parse and validate an inventory, raising :class:`InventoryError` with every violation.

    With ``kb`` given, hybrid components must name an inventory asset or a KB
    subject, and a combiner named by id must exist.  Plain subjects are not
    checked here; unknown ones surface as errored findings during assessment.
    """
    out: list[Violation] = []

    def bad(code, msg, where=""):
        out.append(Violation(code, msg, where))

    if isinstance(document, (str, bytes)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise InventoryError([Violation("parse", f"invalid JSON: {exc.msg}", f"line {exc.lineno}:{exc.colno}")]) from None
    else:
        data = document
    if not isinstance(data, dict):
        raise InventoryError([Violation("schema", "inventory must be a JSON object")])

    for key in sorted(set(data) - {"schema", "name", "assets", "metadata"}):
        if not lax:
            bad("unknown-field", f"unknown field '{key}'", "inventory")
    if data.get("schema") != INVENTORY_SCHEMA:
        bad("schema", f"schema must be {INVENTORY_SCHEMA!r}, got {data.get('schema')!r}", "inventory")
    name = data.get("name", "")
    if not isinstance(name, str):
        bad("schema", "name must be a string", "inventory")
        name = ""
    metadata = data.get("metadata", {})
    if not isinstance(metadata, dict) or not all(isinstance(k, str) and isinstance(v, str) for k, v in metadata.items()):
        bad("schema", "metadata must map strings to strings", "inventory")
        metadata = {}
    raw_assets = data.get("assets")
    if not isinstance(raw_assets, list):
        bad("schema", "assets must be a list", "inventory")
        raw_assets = []

    assets: list[Asset] = []
    seen: dict[str, int] = {}
    for i, raw in enumerate(raw_assets):
        where = f"assets[{i}]"
        if not isinstance(raw, dict):
            bad("schema", "asset must be an object", where)
            continue
        aid = raw.get("id")
        if isinstance(aid, str) and aid:
            where = f"assets[{i}] ({aid})"
        else:
            bad("missing-field", "asset needs a nonempty string 'id'", where)
            continue
        if not lax:
            for key in sorted(set(raw) - _ASSET_FIELDS):
                bad("unknown-field", f"unknown field '{key}'", where)
        if aid in seen:
            bad("duplicate-id", f"duplicate asset id '{aid}' (also assets[{seen[aid]}])", where)
            continue
        seen[aid] = i
        try:
            kind = parse_enum(AssetKind, raw.get("kind"))
            stage = parse_enum(MigrationStage, raw.get("stage"))
        except ValueError as exc:
            bad("schema", str(exc), where)
            continue
        notes = raw.get("context_notes", "")
        if not isinstance(notes, str):
            bad("schema", "context_notes must be a string", where)
            notes = ""
        subject, hybrid = raw.get("subject"), raw.get("hybrid")
        if (subject is None) == (hybrid is None):
            bad("schema", "asset needs exactly one of 'subject' or 'hybrid'", where)
            continue
        if kind is AssetKind.HYBRID:
            if hybrid is None:
                bad("schema", "hybrid asset needs a 'hybrid' specification", where)
                continue
            if stage is not MigrationStage.THROUGH_MIGRATION:
                bad("stage", "hybrid assets must be at through_migration", where)
            spec = _hybrid_spec(hybrid, where, bad, lax)
            if spec is None:
                continue
            assets.append(Asset(aid, kind, stage, hybrid=spec, context_notes=notes))
        else:
            if not isinstance(subject, str) or not subject:
                bad("schema", f"{kind.value} asset needs a string 'subject'", where)
                continue
            if stage is MigrationStage.THROUGH_MIGRATION:
                bad("stage", f"{kind.value} assets cannot be at through_migration; use a hybrid asset", where)
                continue
            assets.append(Asset(aid, kind, stage, subject=subject, context_notes=notes))

    if kb is not None:
        ids = {a.id for a in assets}
        for a in assets:
            if a.hybrid is None:
                continue
            where = f"asset {a.id}"
            for ref in a.hybrid.components:
                if ref == a.id and ref not in kb.all_ids():
                    bad("dangling-reference", f"hybrid '{a.id}' lists itself as a component", where)
                elif ref not in ids and ref not in kb.mechanisms and ref not in kb.protocols and ref not in kb.certificates:
                    bad("dangling-reference", f"hybrid component '{ref}' is neither an inventory asset nor a KB subject", where)
            comb = a.hybrid.combiner
            kind = kb.combiners[comb].kind if comb in kb.combiners else None
            if kind is None:
                try:
                    kind = parse_enum(CombinerKind, comb)
                except ValueError:
                    bad("dangling-reference", f"unknown combiner '{comb}'", where)
            if kind is CombinerKind.WEAK_NESTING and len(a.hybrid.components) != 2:
                bad("invariant", "weak nesting is defined for exactly two components", where)

    if out:
        raise InventoryError(out)
    return Inventory(name=name, assets=tuple(assets), metadata=metadata)


def _hybrid_spec(raw, where, bad, lax) -> HybridSpec | None:
    if not isinstance(raw, dict):
        bad("schema", "'hybrid' must be an object", where)
        return None
    if not lax:
        for key in sorted(set(raw) - {"combiner", "components"}):
            bad("unknown-field", f"unknown field 'hybrid.{key}'", where)
    comb, comps = raw.get("combiner"), raw.get("components")
    ok = True
    if not isinstance(comb, str) or not comb:
        bad("schema", "hybrid.combiner must be a nonempty string", where)
        ok = False
    if not isinstance(comps, list) or not all(isinstance(c, str) and c for c in comps):
        bad("schema", "hybrid.components must be a list of ids", where)
        ok = False
    elif len(comps) < 2:
        bad("invariant", "a hybrid needs at least two components", where)
        ok = False
    return HybridSpec(comb, tuple(comps)) if ok else None


def inventory_to_json(inv: Inventory) -> dict:
    assets = []
    for a in inv.assets:
        d: dict[str, Any] = {"id": a.id, "kind": a.kind.value, "stage": a.stage.value}
        if a.hybrid is not None:
            d["hybrid"] = {"combiner": a.hybrid.combiner, "components": list(a.hybrid.components)}
        else:
            d["subject"] = a.subject
        if a.context_notes:
            d["context_notes"] = a.context_notes
        assets.append(d)
    out = {"schema": INVENTORY_SCHEMA, "name": inv.name, "assets": assets}
    if inv.metadata:
        out["metadata"] = dict(inv.metadata)
    return out
