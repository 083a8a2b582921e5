"""Byte-for-byte checks of the sample inventory's rendered reports.

Regenerate after an intended output change with::

    QRISK_REGEN_GOLDEN=1 python3 -m pytest tests/test_golden.py
"""

from __future__ import annotations

import os

import pytest

from conftest import GOLDEN
from qrisk.engine import assess_inventory
from qrisk.inventoryio import parse_inventory, render_report

CASES = {"sample_report.json": "json", "sample_report.md": "markdown"}


def _render(kb, sample_path, fmt, jobs=1):
    inv = parse_inventory(sample_path.read_text(encoding="utf-8"), kb=kb)
    return render_report(assess_inventory(inv, kb, jobs=jobs), fmt)


@pytest.mark.parametrize("name", sorted(CASES))
def test_golden(kb, sample_path, name):
    path = GOLDEN / name
    text = _render(kb, sample_path, CASES[name])
    if os.environ.get("QRISK_REGEN_GOLDEN"):
        path.write_text(text, encoding="utf-8")
    assert path.read_text(encoding="utf-8") == text


@pytest.mark.parametrize("name", sorted(CASES))
def test_parallel_output_is_identical(kb, sample_path, name):
    assert _render(kb, sample_path, CASES[name], jobs=8) == _render(kb, sample_path, CASES[name])
