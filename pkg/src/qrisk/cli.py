"""Command-line interface: ``qrisk <command> [options]``.

Exit codes: 0 success, 2 when any finding is High risk, 1 on usage, I/O,
validation or per-asset assessment errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from qrisk.engine import Substitution, assess_inventory, what_if
from qrisk.errors import QriskError, ViolationsError
from qrisk.inventoryio import (
    Format,
    parse_inventory,
    render_delta,
    render_explain,
    render_report,
)
from qrisk.kb import (
    RecordKind,
    load_kb,
    load_seeded_kb,
    lookup,
    parse_documents,
    read_kb_dir,
    seeded_documents,
    validate_kb,
)
from qrisk.kb.loader import canonical_json, record_to_json
from qrisk.model import AssessmentConfig, AssessmentReport, HybridSpec, Inventory
from qrisk.riskcore import MigrationStage, parse_enum
from qrisk.timeline import TimelineConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_HIGH = 2


class UsageError(QriskError):
    code = "usage"


def exit_code_for(report: AssessmentReport) -> int:
    """CI gate: errors first, then any High finding."""
    if report.has_errors:
        return EXIT_ERROR
    if report.has_high:
        return EXIT_HIGH
    return EXIT_OK


def _error(code: str, message: str) -> None:
    print(f"qrisk-error[{code}]: {message}", file=sys.stderr)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {value}")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures through our error prefix
        self.print_usage(sys.stderr)
        _error("usage", message)
        raise SystemExit(EXIT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kb", dest="kb_path", help="KB directory (default: $QRISK_KB or the bundled seed)")
    common.add_argument("--lax", action="store_true", help="ignore unknown fields and documents")
    common.add_argument("--format", choices=[f.value for f in Format], default=Format.MARKDOWN.value)
    common.add_argument("--out", help="write the output to this file instead of stdout")

    assess_opts = argparse.ArgumentParser(add_help=False)
    assess_opts.add_argument("--inventory", required=True, help="inventory JSON file")
    assess_opts.add_argument("--horizon", type=_positive_int, default=15, help="poll horizon in years (default 15)")
    assess_opts.add_argument("--low-upper-bound", type=float, default=0.30)
    assess_opts.add_argument("--medium-upper-bound", type=float, default=0.55)
    assess_opts.add_argument("--fail-on-unknown", action="store_true", help="abort on the first unassessable asset")
    assess_opts.add_argument("--jobs", type=_positive_int, default=1, help="assess assets in parallel")

    parser = _Parser(prog="qrisk", description="Quantum-safe migration risk assessment")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("assess", parents=[common, assess_opts], help="assess an inventory")
    p.add_argument("--stamp", action="store_true", help="add a generation timestamp")

    p = sub.add_parser("kb_list", aliases=["kb-list"], parents=[common], help="list KB records")
    p.add_argument("--kind", choices=[k.value for k in RecordKind])

    p = sub.add_parser("kb_show", aliases=["kb-show"], parents=[common], help="show one KB record")
    p.add_argument("id")

    p = sub.add_parser("explain", parents=[common, assess_opts], help="derivation trace for one asset")
    p.add_argument("asset")

    p = sub.add_parser("whatif", parents=[common, assess_opts], help="compare risk after substitutions")
    p.add_argument(
        "--replace",
        action="append",
        required=True,
        metavar="ASSET=SPEC",
        help="SPEC is a KB id, or hybrid:ID+ID[+ID...]:COMBINER",
    )

    p = sub.add_parser("validate", parents=[common], help="validate the KB (and optionally an inventory)")
    p.add_argument("--inventory", help="also validate this inventory against the KB")
    return parser


def _kb_source(args) -> str | None:
    return args.kb_path or os.environ.get("QRISK_KB") or None


def _load_kb(args):
    source = _kb_source(args)
    if source is None:
        return load_seeded_kb() if not args.lax else load_kb(seeded_documents(), lax=True)
    return load_kb(read_kb_dir(source), lax=args.lax)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise QriskError(f"cannot read {path}: {exc.strerror}", code="io") from None


def _emit(args, text: str) -> None:
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise QriskError(f"cannot write {args.out}: {exc.strerror}", code="io") from None
    else:
        sys.stdout.write(text)


def _config(args) -> AssessmentConfig:
    timeline = TimelineConfig(args.horizon, args.low_upper_bound, args.medium_upper_bound)
    return AssessmentConfig(horizon_years=args.horizon, timeline=timeline, fail_on_unknown=args.fail_on_unknown)


def _inventory(args, kb) -> Inventory:
    return parse_inventory(_read(args.inventory), kb=kb, lax=args.lax)


def parse_replacement(text: str) -> Substitution:
    """``asset=kb_id`` or ``asset=hybrid:a+b[+c]:combiner``."""
    asset, sep, spec = text.partition("=")
    if not sep or not asset or not spec:
        raise UsageError(f"bad --replace {text!r}; expected ASSET=SPEC")
    if spec.startswith("hybrid:"):
        parts = spec.split(":")
        if len(parts) != 3 or not parts[2]:
            raise UsageError(f"bad hybrid spec {spec!r}; expected hybrid:ID+ID:COMBINER")
        components = tuple(c for c in parts[1].split("+") if c)
        if len(components) < 2:
            raise UsageError(f"hybrid spec {spec!r} needs at least two components")
        return Substitution(asset, HybridSpec(parts[2], components))
    return Substitution(asset, spec)


def _cmd_assess(args) -> int:
    kb = _load_kb(args)
    report = assess_inventory(_inventory(args, kb), kb, _config(args), jobs=args.jobs)
    if args.stamp:
        stamp = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
        report = AssessmentReport(
            report.kb_version, report.config, report.findings, report.inventory_name, report.warnings, stamp
        )
    _emit(args, render_report(report, args.format))
    for w in report.warnings:
        print(f"qrisk-warning: {w}", file=sys.stderr)
    return exit_code_for(report)


def _cmd_kb_list(args) -> int:
    kb = _load_kb(args)
    rows = []
    for kind, coll in kb.collections().items():
        if args.kind and kind.value != args.kind:
            continue
        for rid, rec in coll.items():
            name = getattr(rec, "display_name", None) or rid
            rows.append((kind.value, rid, name))
    if args.format == Format.JSON.value:
        data = {"kb_version": kb.version, "records": [{"kind": k, "id": i, "name": n} for k, i, n in rows]}
        _emit(args, canonical_json(data))
    else:
        lines = [f"# KB {kb.version}", "", "| Kind | Id | Name |", "|---|---|---|"]
        lines += [f"| {k} | `{i}` | {n} |" for k, i, n in rows]
        _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_kb_show(args) -> int:
    kb = _load_kb(args)
    found = lookup(kb, args.id)
    if not found.found:
        hint = f"; did you mean: {', '.join(found.suggestions)}" if found.suggestions else ""
        raise QriskError(f"no KB record '{args.id}'{hint}", code="not-found")
    data = {"kind": found.kind.value, "record": record_to_json(found.record)}
    if args.format == Format.JSON.value:
        _emit(args, canonical_json(data))
    else:
        body = json.dumps(data["record"], indent=2, ensure_ascii=False)
        _emit(args, f"# {found.kind.value} `{args.id}`\n\n```json\n{body}\n```\n")
    return EXIT_OK


def _cmd_explain(args) -> int:
    kb = _load_kb(args)
    inv = _inventory(args, kb)
    if inv.get(args.asset) is None:
        raise QriskError(f"no asset '{args.asset}' in the inventory", code="unknown-asset")
    report = assess_inventory(inv, kb, _config(args), jobs=args.jobs)
    finding = report.finding(args.asset)
    if args.format == Format.JSON.value:
        from qrisk.inventoryio.render import canonical_dumps, finding_to_json

        _emit(args, canonical_dumps(finding_to_json(finding)))
    else:
        _emit(args, render_explain(finding))
    return EXIT_ERROR if finding.errored else EXIT_OK


def _cmd_whatif(args) -> int:
    kb = _load_kb(args)
    inv = _inventory(args, kb)
    subs = [parse_replacement(r) for r in args.replace]
    delta = what_if(inv, subs, kb, _config(args), jobs=args.jobs)
    _emit(args, render_delta(delta, args.format))
    return EXIT_HIGH if delta.has_high_after else EXIT_OK


def _cmd_validate(args) -> int:
    source = _kb_source(args)
    docs = read_kb_dir(source) if source else seeded_documents()
    kb, violations = parse_documents(docs, lax=args.lax)
    violations = sorted(set(violations + validate_kb(kb)))
    lines = [str(v) for v in violations]
    if args.inventory and not violations:
        try:
            inv = _inventory(args, kb)
            lines.append(f"inventory '{inv.name}': {len(inv.assets)} assets")
        except ViolationsError as exc:
            violations = exc.violations
            lines += [str(v) for v in violations]
    lines.append(f"{len(violations)} violations")
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_ERROR if violations else EXIT_OK


_COMMANDS = {
    "assess": _cmd_assess,
    "kb_list": _cmd_kb_list,
    "kb-list": _cmd_kb_list,
    "kb_show": _cmd_kb_show,
    "kb-show": _cmd_kb_show,
    "explain": _cmd_explain,
    "whatif": _cmd_whatif,
    "validate": _cmd_validate,
}


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return _COMMANDS[args.command](args)
    except ViolationsError as exc:
        for v in exc.violations:
            _error(v.code, f"{v.message}" + (f" ({v.location})" if v.location else ""))
        return EXIT_ERROR
    except QriskError as exc:
        _error(exc.code, str(exc))
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
