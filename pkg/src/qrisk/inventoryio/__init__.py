"""Inventory ingestion, report rendering and report diffs."""

from qrisk.inventoryio.diff import diff_reports, direction
from qrisk.inventoryio.parse import INVENTORY_SCHEMA, inventory_to_json, parse_inventory
from qrisk.inventoryio.render import (
    Format,
    render_delta,
    render_explain,
    render_report,
    report_from_json,
    report_to_json,
)

__all__ = [
    "INVENTORY_SCHEMA",
    "Format",
    "diff_reports",
    "direction",
    "inventory_to_json",
    "parse_inventory",
    "render_delta",
    "render_explain",
    "render_report",
    "report_from_json",
    "report_to_json",
]
