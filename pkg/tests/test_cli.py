from __future__ import annotations

import json
import subprocess
import sys

import pytest

from qrisk.cli import exit_code_for, parse_replacement, run
from qrisk.errors import QriskError
from qrisk.kb import seeded_documents
from qrisk.model import AssessmentConfig, AssessmentReport, Finding, HybridSpec
from qrisk.riskcore import Level, MigrationStage

PRE = MigrationStage.PRE_MIGRATION


def _report(*findings):
    return AssessmentReport("v", AssessmentConfig(), tuple(findings))


def _f(asset, risk, error=None):
    return Finding(asset, PRE, risk, risk, risk, error=error)


class TestExitCode:
    def test_clean(self):
        assert exit_code_for(_report(_f("a", Level.LOW), _f("b", Level.MEDIUM))) == 0
        assert exit_code_for(_report()) == 0

    def test_high(self):
        assert exit_code_for(_report(_f("a", Level.HIGH))) == 2

    def test_errors_take_precedence(self):
        assert exit_code_for(_report(_f("a", Level.HIGH), _f("b", None, error="boom"))) == 1


class TestReplacement:
    def test_kb_id(self):
        sub = parse_replacement("disk=aes_256")
        assert (sub.asset, sub.replace_with) == ("disk", "aes_256")

    def test_hybrid(self):
        sub = parse_replacement("tls=hybrid:tls_1_3+kemtls:composite_protocol")
        assert sub.replace_with == HybridSpec("composite_protocol", ("tls_1_3", "kemtls"))

    @pytest.mark.parametrize("bad", ["noequals", "=aes", "a=", "a=hybrid:x:c", "a=hybrid:x+y"])
    def test_malformed(self, bad):
        with pytest.raises(QriskError):
            parse_replacement(bad)


@pytest.fixture
def inv(sample_path):
    return str(sample_path)


def test_assess_markdown(inv, capsys):
    assert run(["assess", "--inventory", inv]) == 2
    out = capsys.readouterr().out
    assert out.startswith("# Quantum risk assessment: sample-bank")


def test_assess_json_to_file(inv, tmp_path):
    out = tmp_path / "r.json"
    assert run(["assess", "--inventory", inv, "--format", "json", "--out", str(out)]) == 2
    data = json.loads(out.read_text())
    assert {f["asset"]: f["risk"] for f in data["findings"]}["disk-aes"] == "medium"


def test_assess_jobs_matches_serial(inv, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["assess", "--inventory", inv, "--format", "json", "--out", str(a)])
    run(["assess", "--inventory", inv, "--format", "json", "--out", str(b), "--jobs", "4"])
    assert a.read_bytes() == b.read_bytes()


def test_assess_stamp(inv, capsys):
    run(["assess", "--inventory", inv, "--stamp"])
    assert "Generated at " in capsys.readouterr().out


def test_horizon_flag(tmp_path, capsys):
    p = tmp_path / "inv.json"
    p.write_text(json.dumps({"schema": "qrisk-inventory/1", "name": "x", "assets": [
        {"id": "a", "kind": "algorithm", "stage": "pre_migration", "subject": "aes_256"}]}))
    assert run(["assess", "--inventory", str(p)]) == 0
    assert run(["assess", "--inventory", str(p), "--horizon", "30"]) == 0
    assert run(["assess", "--inventory", str(p), "--horizon", "12"]) == 1
    assert "qrisk-error[unknown-horizon]" in capsys.readouterr().err


def test_unknown_subject_exit(tmp_path, capsys):
    p = tmp_path / "inv.json"
    p.write_text(json.dumps({"schema": "qrisk-inventory/1", "name": "x", "assets": [
        {"id": "a", "kind": "algorithm", "stage": "pre_migration", "subject": "rsa_4096x"}]}))
    assert run(["assess", "--inventory", str(p)]) == 1
    assert run(["assess", "--inventory", str(p), "--fail-on-unknown"]) == 1
    assert "qrisk-error[unknown-subject]" in capsys.readouterr().err


def test_kb_list_and_show(capsys):
    assert run(["kb_list", "--kind", "protocol", "--format", "json"]) == 0
    ids = [r["id"] for r in json.loads(capsys.readouterr().out)["records"]]
    assert "tls_1_3" in ids and "kyber" not in ids
    assert run(["kb-show", "kyber"]) == 0
    assert "```json" in capsys.readouterr().out


def test_kb_show_not_found(capsys):
    assert run(["kb_show", "kybr"]) == 1
    err = capsys.readouterr().err
    assert err.startswith("qrisk-error[not-found]") and "kyber" in err


def test_validate(capsys, inv):
    assert run(["validate"]) == 0
    assert capsys.readouterr().out.strip().endswith("0 violations")
    assert run(["validate", "--inventory", inv]) == 0


def test_validate_broken_kb(tmp_path, capsys, monkeypatch):
    for name, text in seeded_documents().items():
        (tmp_path / name).write_text(text)
    mech = json.loads((tmp_path / "mechanisms.json").read_text())
    mech["entries"][0]["typo"] = 1
    (tmp_path / "mechanisms.json").write_text(json.dumps(mech))
    assert run(["validate", "--kb", str(tmp_path)]) == 1
    assert "1 violations" in capsys.readouterr().out
    monkeypatch.setenv("QRISK_KB", str(tmp_path))
    assert run(["validate"]) == 1
    assert run(["validate", "--lax"]) == 0


def test_explain(inv, capsys):
    assert run(["explain", "--inventory", inv, "sig-hybrid"]) == 0
    out = capsys.readouterr().out
    assert "weak" in out and "code-signing" in out


def test_explain_unknown_asset(inv, capsys):
    assert run(["explain", "--inventory", inv, "ghost"]) == 1
    assert capsys.readouterr().err.startswith("qrisk-error[unknown-asset]")


def test_whatif(inv, capsys):
    code = run(["whatif", "--inventory", inv,
                "--replace", "web-tls=hybrid:tls_1_3+kemtls:composite_protocol",
                "--replace", "disk-aes=aes_256", "--format", "json"])
    assert code == 2
    changes = {c["asset"]: c for c in json.loads(capsys.readouterr().out)["changes"]}
    assert (changes["web-tls"]["before"], changes["web-tls"]["after"]) == ("high", "medium")
    assert changes["disk-aes"]["direction"] == "improved"


def test_usage_error(capsys):
    assert run(["assess"]) == 1
    assert "qrisk-error[usage]" in capsys.readouterr().err
    assert run(["frobnicate"]) == 1


def test_missing_inventory_file(capsys):
    assert run(["assess", "--inventory", "/nonexistent.json"]) == 1
    assert capsys.readouterr().err.startswith("qrisk-error[io]")


def test_subprocess_entry_point(inv):
    proc = subprocess.run([sys.executable, "-m", "qrisk.cli", "assess", "--inventory", inv, "--format", "json"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stdout)["schema"] == "qrisk-report/1"
