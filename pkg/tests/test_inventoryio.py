from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrisk.engine import assess_inventory
from qrisk.errors import InventoryError
from qrisk.inventoryio import (
    Format,
    diff_reports,
    direction,
    inventory_to_json,
    parse_inventory,
    render_delta,
    render_explain,
    render_report,
    report_from_json,
    report_to_json,
)
from qrisk.inventoryio.render import canonical_dumps
from qrisk.model import (
    AssessmentConfig,
    AssessmentReport,
    Direction,
    Finding,
)
from qrisk.riskcore import Level, MigrationStage, StrideClass, combine_risk

SCHEMA = "qrisk-inventory/1"


def doc(*assets, **extra):
    return {"schema": SCHEMA, "name": "t", "assets": list(assets), **extra}


def algo(aid, subject="rsa_2048", stage="pre_migration"):
    return {"id": aid, "kind": "algorithm", "stage": stage, "subject": subject}


class TestParse:
    def test_minimal(self, kb):
        inv = parse_inventory(json.dumps(doc(algo("a"))), kb=kb)
        assert [a.id for a in inv.assets] == ["a"]
        assert inv.assets[0].stage is MigrationStage.PRE_MIGRATION

    def test_round_trip(self, kb, sample_path):
        inv = parse_inventory(sample_path.read_text(), kb=kb)
        assert parse_inventory(inventory_to_json(inv), kb=kb) == inv

    def test_duplicate_ids(self):
        with pytest.raises(InventoryError) as err:
            parse_inventory(doc(algo("a"), algo("a")))
        assert "duplicate" in str(err.value)

    def test_unknown_field(self):
        bad = algo("a") | {"colour": "red"}
        with pytest.raises(InventoryError, match="colour"):
            parse_inventory(doc(bad))
        assert parse_inventory(doc(bad), lax=True).assets[0].id == "a"

    def test_wrong_schema(self):
        with pytest.raises(InventoryError):
            parse_inventory({"schema": "other/1", "name": "t", "assets": []})

    def test_bad_enum(self):
        with pytest.raises(InventoryError, match="during"):
            parse_inventory(doc(algo("a", stage="during")))

    def test_hybrid_needs_through_stage(self):
        h = {"id": "h", "kind": "hybrid", "stage": "pre_migration",
             "hybrid": {"combiner": "xor", "components": ["ecdh", "kyber"]}}
        with pytest.raises(InventoryError):
            parse_inventory(doc(h))

    def test_non_hybrid_rejects_through_stage(self):
        with pytest.raises(InventoryError):
            parse_inventory(doc(algo("a", stage="through_migration")))

    def test_hybrid_component_count(self, kb):
        h = {"id": "h", "kind": "hybrid", "stage": "through_migration",
             "hybrid": {"combiner": "xor", "components": ["ecdh"]}}
        with pytest.raises(InventoryError):
            parse_inventory(doc(h), kb=kb)

    def test_weak_nesting_is_binary(self, kb):
        h = {"id": "h", "kind": "hybrid", "stage": "through_migration",
             "hybrid": {"combiner": "weak_nesting", "components": ["ecdsa", "dilithium", "falcon"]}}
        with pytest.raises(InventoryError, match="weak"):
            parse_inventory(doc(h), kb=kb)

    def test_dangling_component(self, kb):
        h = {"id": "h", "kind": "hybrid", "stage": "through_migration",
             "hybrid": {"combiner": "xor", "components": ["ecdh", "nowhere"]}}
        with pytest.raises(InventoryError, match="nowhere"):
            parse_inventory(doc(h), kb=kb)

    def test_subject_and_hybrid_exclusive(self):
        both = algo("a") | {"hybrid": {"combiner": "xor", "components": ["ecdh", "kyber"]}}
        with pytest.raises(InventoryError):
            parse_inventory(doc(both))

    def test_malformed_json(self):
        with pytest.raises(InventoryError):
            parse_inventory("{not json")


@pytest.fixture(scope="module")
def sample_report(kb, sample_path):
    return assess_inventory(parse_inventory(sample_path.read_text(), kb=kb), kb, AssessmentConfig())


class TestRender:
    def test_json_uses_labels(self, sample_report):
        data = json.loads(render_report(sample_report, Format.JSON))
        assert data["schema"] == "qrisk-report/1"
        web = next(f for f in data["findings"] if f["asset"] == "web-tls")
        assert web["risk"] == "high"

    def test_json_round_trip(self, sample_report):
        text = render_report(sample_report, "json")
        assert report_from_json(text) == sample_report
        assert render_report(report_from_json(text), "json") == text

    def test_summary_checked_on_load(self, sample_report):
        data = report_to_json(sample_report)
        data["summary"]["pre_migration"]["high"] += 1
        with pytest.raises(Exception):
            report_from_json(data)

    def test_empty_report(self):
        md = render_report(AssessmentReport("v", AssessmentConfig(), ()), "markdown")
        assert "No assets assessed." in md

    def test_markdown_tables(self, sample_report):
        md = render_report(sample_report)
        assert "| Asset | Subject | Vulnerabilities | Quantum Threats (STRIDE) | L | I | R |" in md
        assert "## Pre-migration" in md and "## Post-migration" in md
        assert "pq-kem / " in md and "kex-hybrid / component ecdh" in md

    def test_override_footnote(self, sample_report):
        md = render_report(sample_report)
        assert "vpn†" in md and "## Overrides" in md
        assert "† `vpn` (ipsec)" in md

    def test_conditional_threat_marker(self, sample_report):
        md = render_report(sample_report)
        assert "*" in next(line for line in md.splitlines() if line.startswith("| kex-hybrid |"))

    def test_markdown_is_deterministic(self, sample_report):
        assert render_report(sample_report) == render_report(sample_report)

    def test_explain_indents_subfindings(self, sample_report):
        text = render_explain(sample_report.finding("pq-kem"))
        assert "\n  pq-kem" in text or "\n  kyber" in text

    def test_level_letters_injective(self):
        letters = {lv.letter for lv in Level}
        assert len(letters) == len(Level)


levels = st.sampled_from(list(Level))
stages = st.sampled_from([MigrationStage.PRE_MIGRATION, MigrationStage.POST_MIGRATION])
text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12)


@st.composite
def findings(draw):
    lik, imp = draw(levels), draw(levels)
    errored = draw(st.booleans()) and draw(st.booleans())
    return Finding(
        asset=draw(st.from_regex(r"[a-z][a-z0-9-]{0,8}", fullmatch=True)),
        stage=draw(stages),
        likelihood=None if errored else lik,
        impact=None if errored else imp,
        risk=None if errored else combine_risk(lik, imp),
        kind=draw(st.sampled_from(["algorithm", "protocol"])),
        subject=draw(text),
        stride=tuple(sorted(draw(st.sets(st.sampled_from(list(StrideClass)))), key=list(StrideClass).index)),
        vulnerabilities=tuple(draw(st.lists(text, max_size=3))),
        derivation=tuple(draw(st.lists(text, min_size=1, max_size=3))),
        error=draw(text) if errored else None,
    )


@st.composite
def reports(draw):
    fs = draw(st.lists(findings(), max_size=6, unique_by=lambda f: f.asset))
    return AssessmentReport(draw(text), AssessmentConfig(), tuple(fs), inventory_name=draw(text),
                            warnings=tuple(draw(st.lists(text, max_size=2))))


@settings(max_examples=1000, deadline=None)
@given(reports())
def test_json_fixed_point(report):
    once = render_report(report, "json")
    assert render_report(report_from_json(once), "json") == once
    assert canonical_dumps(json.loads(once)) == once


class TestDiff:
    def test_direction(self):
        L, M, H = Level
        assert direction(H, M) is Direction.IMPROVED
        assert direction(L, H) is Direction.WORSENED
        assert direction(M, M) is Direction.UNCHANGED
        assert direction(None, L) is Direction.IMPROVED
        assert direction(L, None) is Direction.WORSENED

    def test_identical_reports(self, sample_report):
        delta = diff_reports(sample_report, sample_report)
        assert all(c.direction is Direction.UNCHANGED for c in delta.changes)
        assert not delta.added and not delta.removed

    def test_added_and_removed(self, kb):
        a = assess_inventory(parse_inventory(doc(algo("a"), algo("b"))), kb)
        b = assess_inventory(parse_inventory(doc(algo("b"), algo("c", "aes_256"))), kb)
        delta = diff_reports(a, b)
        assert delta.added == ("c",) and delta.removed == ("a",)
        md = render_delta(delta)
        assert "Added: `c`" in md and "Removed: `a`" in md
        assert json.loads(render_delta(delta, "json"))["schema"] == "qrisk-delta/1"
