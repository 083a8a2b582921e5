from __future__ import annotations

import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from qrisk.errors import KBError
from qrisk.kb import (
    KnowledgeBase,
    MechanismRecord,
    RecordKind,
    load_kb,
    lookup,
    parse_documents,
    seeded_documents,
    serialize,
    validate_kb,
)
from qrisk.kb.records import AppliesTo, CombinerRecord
from qrisk.riskcore import CombinerKind
from qrisk.timeline import MechanismFamily, quantum_strength


def docs_with(**changes):
    """Seeded documents with some collections' entries replaced or edited."""
    docs = seeded_documents()
    for name, edit in changes.items():
        key = f"{name}.json"
        data = json.loads(docs[key])
        data["entries"] = edit(data["entries"])
        docs[key] = json.dumps(data)
    return docs


def codes(exc_info):
    return sorted({v.code for v in exc_info.value.violations})


class TestSeededKB:
    def test_validates_clean(self, kb):
        assert validate_kb(kb) == []

    def test_counts(self, kb):
        classical = [m for m in kb.mechanisms.values() if m.family is not MechanismFamily.QUANTUM_RESISTANT]
        pq_targets = {a.target_mechanism for a in kb.attacks.values()}
        assert len(classical) >= 14
        assert len(pq_targets) >= 8
        assert len(kb.protocols) >= 16
        assert len(kb.attacks) == 35

    def test_every_suite_member_has_a_strength(self, kb):
        for rec in list(kb.protocols.values()) + list(kb.certificates.values()):
            for member in rec.suite:
                assert quantum_strength(kb.mechanisms[member.mechanism].profile) >= 0

    def test_derived_profiles_are_flagged(self, kb):
        for mid in ("md4", "md5", "sha1", "triple_des", "rc4"):
            assert kb.mechanisms[mid].derived_profile
        assert not kb.mechanisms["aes_128"].derived_profile

    def test_document_order_does_not_matter(self):
        docs = seeded_documents()
        reordered = dict(reversed(list(docs.items())))
        assert load_kb(reordered) == load_kb(docs)

    def test_round_trip_fixed_point(self, kb):
        once = serialize(kb)
        again = serialize(load_kb(once))
        assert once == again
        assert load_kb(once) == kb
        assert once == seeded_documents()


class TestLoadErrors:
    def test_empty_document_set(self):
        with pytest.raises(KBError, match="no mechanisms defined"):
            load_kb({})

    def test_dangling_suite_reference_names_both_ids(self):
        def bad_suite(entries):
            for e in entries:
                if e["id"] == "tls_1_3":
                    e["suite"].append({"mechanism": "aes_999", "optional_use": False, "role": "encryption"})
            return entries

        with pytest.raises(KBError) as info:
            load_kb(docs_with(protocols=bad_suite))
        msgs = [v.message for v in info.value.violations]
        assert codes(info) == ["dangling-reference"]
        assert any("tls_1_3" in m and "aes_999" in m for m in msgs)

    def test_parse_error_reports_line(self):
        docs = seeded_documents()
        docs["attacks.json"] = '{\n  "schema": "qrisk-kb/1",\n  "entries": [,]\n}'
        with pytest.raises(KBError) as info:
            load_kb(docs)
        parse = [v for v in info.value.violations if v.code == "parse"]
        assert parse and parse[0].location.startswith("attacks.json:3")

    def test_duplicate_id_across_collections(self):
        def dup(entries):
            entries.append(dict(entries[0], id="rsa"))
            return entries

        with pytest.raises(KBError) as info:
            load_kb(docs_with(combiners=dup))
        assert "duplicate-id" in codes(info)

    def test_unknown_field_strict_and_lax(self):
        def extra(entries):
            entries[0]["colour"] = "red"
            return entries

        docs = docs_with(mechanisms=extra)
        with pytest.raises(KBError) as info:
            load_kb(docs)
        assert codes(info) == ["unknown-field"]
        assert load_kb(docs, lax=True).mechanisms

    def test_all_violations_reported_together(self):
        def two_problems(entries):
            entries[0]["colour"] = "red"
            entries[1]["profile"]["family"] = "magic"
            return entries

        with pytest.raises(KBError) as info:
            load_kb(docs_with(mechanisms=two_problems))
        assert len(info.value.violations) >= 2

    def test_weak_nesting_on_kem_is_one_violation(self, kb):
        bad = CombinerRecord("bad", CombinerKind.WEAK_NESTING, AppliesTo.KEM_ENC)
        edited = KnowledgeBase(
            kb.version, kb.mechanisms, kb.attacks, kb.certificates, kb.protocols,
            {**kb.combiners, "bad": bad}, kb.poll, kb.overrides,
        )
        violations = validate_kb(edited)
        assert len(violations) == 1 and "weak_nesting" in violations[0].message

    def test_poll_fractions_not_summing_to_one(self):
        def shrink(entries):
            entries[0]["bins"][0]["fraction"] -= 0.1
            return entries

        kb, sink = parse_documents(docs_with(poll=shrink))
        violations = sink + validate_kb(kb)
        assert len(violations) == 1 and "sum to" in violations[0].message

    def test_shor_breakable_needs_stride(self):
        def strip(entries):
            for e in entries:
                if e["id"] == "rsa_2048":
                    e["stride_threats"] = []
            return entries

        with pytest.raises(KBError, match="STRIDE"):
            load_kb(docs_with(mechanisms=strip))

    def test_attack_categories_must_be_total(self):
        def physical_with_countermeasure(entries):
            entries[0]["exploit_vector"] = "physical_access"
            entries[0]["countermeasure_available"] = True
            entries[0]["countermeasures"] = ["something"]
            return entries

        with pytest.raises(KBError) as info:
            load_kb(docs_with(attacks=physical_with_countermeasure))
        assert codes(info) == ["uncategorized-attack"]

    def test_countermeasure_flag_needs_text(self):
        def empty(entries):
            entries[0]["countermeasure_available"] = True
            entries[0]["countermeasures"] = []
            return entries

        with pytest.raises(KBError, match="no countermeasures are listed"):
            load_kb(docs_with(attacks=empty))

    def test_override_needs_justification_and_level(self):
        def hollow(entries):
            entries[0]["justification"] = " "
            entries[0]["likelihood"] = None
            entries[0]["impact"] = None
            return entries

        with pytest.raises(KBError) as info:
            load_kb(docs_with(overrides=hollow))
        assert len(info.value.violations) == 2

    def test_validate_is_idempotent(self, kb):
        assert validate_kb(kb) == validate_kb(kb)


class TestLookup:
    def test_rsa_2048(self, kb):
        hit = lookup(kb, "rsa_2048")
        assert hit.kind is RecordKind.MECHANISM
        assert isinstance(hit.record, MechanismRecord)
        assert quantum_strength(hit.record.profile) == 0

    def test_tls_suite(self, kb):
        hit = lookup(kb, "tls_1_3")
        assert hit.kind is RecordKind.PROTOCOL
        assert {m.mechanism for m in hit.record.suite} == {"rsa", "ecdh", "aes", "sha2", "chacha20_poly1305"}

    def test_not_found_with_near_misses(self, kb):
        assert not lookup(kb, "nonexistent").found
        miss = lookup(kb, "rsa_2084")
        assert not miss.found and "rsa_2048" in miss.suggestions


# Random KBs for the round-trip property.
ident = st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True)
text = st.text(st.characters(min_codepoint=32, max_codepoint=0x2FF), max_size=20)


@st.composite
def mechanism_entries(draw):
    ids = draw(st.lists(ident, min_size=1, max_size=6, unique=True))
    out = []
    for mid in ids:
        family = draw(st.sampled_from([f.value for f in MechanismFamily]))
        bits = draw(st.integers(1, 4096))
        classic = draw(st.integers(0, bits))
        stride = [{"threat": "spoofing", "rationale": draw(text)}]
        out.append({
            "id": mid,
            "display_name": draw(text),
            "profile": {"family": family, "parameter_bits": bits, "classic_strength_bits": classic},
            "variant_of": draw(st.sampled_from([None] + ids)),
            "stride_threats": stride,
            "vulnerabilities": draw(st.lists(text, max_size=2)),
            "alternatives": [{"ref": draw(text), "external": True}],
            "derived_profile": draw(st.booleans()),
        })
    return out


@st.composite
def poll_entries(draw):
    years = sorted(draw(st.lists(st.integers(1, 60), min_size=1, max_size=4, unique=True)))
    out = []
    for y in years:
        weights = draw(st.lists(st.integers(1, 20), min_size=1, max_size=5))
        total = sum(weights)
        bins = [{"representative": draw(st.floats(0, 1)), "fraction": w / total} for w in weights]
        out.append({"years": y, "bins": bins})
    return out


@settings(max_examples=1000, suppress_health_check=[HealthCheck.too_slow])
@given(mechanism_entries(), poll_entries(), st.sampled_from(["2024.1", "x"]))
def test_random_kb_round_trip(mechs, poll, version):
    docs = {
        "mechanisms.json": json.dumps({"schema": "qrisk-kb/1", "version": version, "entries": mechs}),
        "poll.json": json.dumps({"schema": "qrisk-kb/1", "entries": poll}),
    }
    kb, violations = parse_documents(docs)
    # Poll fractions from integer weights may miss 1.0 by rounding only.
    assert [v for v in violations + validate_kb(kb) if v.code != "poll"] == []
    once = serialize(kb)
    kb2, _ = parse_documents(once)
    assert kb2 == kb
    assert serialize(kb2) == once
