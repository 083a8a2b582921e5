"""Assessment calculus: per-stage derivations, hybrids, overrides and orchestration."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from qrisk.errors import AssessmentError, QriskError
from qrisk.kb.records import (
    ALLOWED_APPLIES_TO,
    AppliesTo,
    AttackRecord,
    CertificateRecord,
    CombinerRecord,
    ExploitVector,
    Generation,
    KnowledgeBase,
    MechanismRecord,
    ProtocolRecord,
    StrideEntry,
    SuiteMember,
)
from qrisk.model import (
    Aggregation,
    AssessmentConfig,
    AssessmentReport,
    Asset,
    AssetKind,
    DeltaReport,
    Finding,
    HybridSpec,
    Inventory,
)
from qrisk.riskcore import (
    CombinerKind,
    Level,
    MigrationStage,
    StrideClass,
    aggregate_findings,
    combine_risk,
    fold_hybrid,
    parse_enum,
    stride_sorted,
)
from qrisk.timeline import (
    MechanismFamily,
    expected_likelihood,
    impact_from_strength,
    likelihood_level,
    quantum_strength,
)

SuiteRecord = ProtocolRecord | CertificateRecord


def _stride(entries: Iterable[StrideEntry]) -> tuple[StrideClass, ...]:
    return tuple(stride_sorted(e.threat for e in entries))


def _display(kb: KnowledgeBase, ref: str) -> str:
    for coll in (kb.mechanisms, kb.protocols, kb.certificates):
        if ref in coll:
            return coll[ref].display_name
    return ref


def _alt_names(kb: KnowledgeBase, refs: Iterable[str]) -> tuple[str, ...]:
    return tuple(_display(kb, r) for r in refs)


def _matrix_step(likelihood: Level, impact: Level, risk: Level) -> str:
    return f"risk matrix ({likelihood.label}, {impact.label}) -> {risk.label}"


def _apply_override(kb: KnowledgeBase, subject: str, stage: MigrationStage, likelihood: Level, impact: Level):
    """Return (likelihood, impact, justification or None, trace lines)."""
    o = kb.override_for(subject, stage)
    if o is None:
        return likelihood, impact, None, []
    steps = []
    if o.likelihood is not None and o.likelihood is not likelihood:
        steps.append(f"override: likelihood {likelihood.label} -> {o.likelihood.label}")
    if o.impact is not None and o.impact is not impact:
        steps.append(f"override: impact {impact.label} -> {o.impact.label}")
    if not steps:
        steps.append("override: levels confirmed unchanged")
    steps.append(f"override justification: {o.justification}")
    return o.likelihood or likelihood, o.impact or impact, o.justification, steps


def timeline_likelihood(kb: KnowledgeBase, cfg: AssessmentConfig) -> tuple[Level, str]:
    expected = expected_likelihood(kb.poll, cfg.horizon_years)
    level = likelihood_level(expected, cfg.timeline)
    t = cfg.timeline
    return level, (
        f"expected likelihood at {cfg.horizon_years} years = {expected:.4f} -> {level.label} "
        f"(low below {t.low_upper_bound:g}, medium below {t.medium_upper_bound:g})"
    )


# --------------------------------------------------------------------------
# pre-migration


def assess_pre_algorithm(mech: MechanismRecord, kb: KnowledgeBase, cfg: AssessmentConfig, asset_id: str | None = None) -> Finding:
    if mech.family is MechanismFamily.QUANTUM_RESISTANT:
        raise AssessmentError(
            f"stage/mechanism mismatch: '{mech.id}' is quantum resistant and has no pre-migration profile",
            code="stage-mismatch",
        )
    likelihood, lstep = timeline_likelihood(kb, cfg)
    qs = quantum_strength(mech.profile)
    impact = impact_from_strength(qs)
    steps = [
        lstep,
        f"{mech.id}: {mech.family.value}, {mech.profile.parameter_bits} bits -> quantum strength {qs} bits -> impact {impact.label}",
    ]
    likelihood, impact, just, ostep = _apply_override(kb, mech.id, MigrationStage.PRE_MIGRATION, likelihood, impact)
    risk = combine_risk(likelihood, impact)
    steps += ostep + [_matrix_step(likelihood, impact, risk)]
    return Finding(
        asset=asset_id or mech.id,
        stage=MigrationStage.PRE_MIGRATION,
        likelihood=likelihood,
        impact=impact,
        risk=risk,
        kind=AssetKind.ALGORITHM.value,
        subject=mech.id,
        stride=_stride(mech.stride_threats),
        vulnerabilities=mech.vulnerabilities,
        alternatives=tuple(a.ref if a.external else _display(kb, a.ref) for a in mech.alternatives),
        derivation=tuple(steps),
        override=just,
    )


def member_impact(member: SuiteMember, mech: MechanismRecord) -> tuple[int, Level, str]:
    """Impact contributed by one suite member, with optional members capped at Medium."""
    qs = quantum_strength(mech.profile)
    impact = impact_from_strength(qs)
    line = f"{mech.id}: quantum strength {qs} bits -> impact {impact.label}"
    if member.optional_use and impact > Level.MEDIUM:
        impact = Level.MEDIUM
        line += " (optional use, capped at medium)"
    return qs, impact, line


def _record_kind(record: SuiteRecord) -> AssetKind:
    return AssetKind.PROTOCOL if isinstance(record, ProtocolRecord) else AssetKind.CERTIFICATE


def assess_pre_suite(record: SuiteRecord, kb: KnowledgeBase, cfg: AssessmentConfig, asset_id: str | None = None) -> Finding:
    if record.generation is Generation.POST_QUANTUM:
        raise AssessmentError(
            f"stage/mechanism mismatch: '{record.id}' is a post-quantum profile with no pre-migration assessment",
            code="stage-mismatch",
        )
    if not record.suite:
        raise AssessmentError(f"'{record.id}' has an empty crypto suite", code="invariant")
    likelihood, lstep = timeline_likelihood(kb, cfg)
    steps = [lstep]
    contributions: list[tuple[Level, int, str]] = []
    for member in record.suite:
        mech = kb.mechanisms.get(member.mechanism)
        if mech is None:
            if cfg.fail_on_unknown:
                raise AssessmentError(
                    f"'{record.id}' suite member '{member.mechanism}' is not in the KB", code="dangling-reference"
                )
            steps.append(f"{member.mechanism}: unknown mechanism, skipped")
            continue
        qs, impact, line = member_impact(member, mech)
        steps.append(line)
        contributions.append((impact, qs, mech.id))
    if not contributions:
        raise AssessmentError(f"'{record.id}' has no resolvable suite members", code="dangling-reference")
    # Highest impact wins; among equals the weakest strength names the driver.
    impact, qs, driver = max(contributions, key=lambda c: (c[0], -c[1]))
    weakest = min(contributions, key=lambda c: c[1])  # first in suite order on ties
    steps.append(f"min suite quantum strength = {weakest[1]} ({weakest[2]}) -> impact {weakest[0].label}")
    steps.append(f"suite impact = max over members = {impact.label} ({driver})")
    likelihood, impact, just, ostep = _apply_override(kb, record.id, MigrationStage.PRE_MIGRATION, likelihood, impact)
    risk = combine_risk(likelihood, impact)
    steps += ostep + [_matrix_step(likelihood, impact, risk)]
    vulns = tuple(
        f"{mid}: quantum strength {q} bits" for lvl, q, mid in contributions if lvl is Level.HIGH
    )
    return Finding(
        asset=asset_id or record.id,
        stage=MigrationStage.PRE_MIGRATION,
        likelihood=likelihood,
        impact=impact,
        risk=risk,
        kind=_record_kind(record).value,
        subject=record.id,
        stride=_stride(record.stride_threats),
        vulnerabilities=vulns,
        alternatives=_alt_names(kb, record.alternatives),
        derivation=tuple(steps),
        override=just,
    )


# --------------------------------------------------------------------------
# post-migration


def attack_likelihood(vector: ExploitVector, known_exploit: bool, countermeasure_available: bool) -> Level:
    """Likelihood category of an attack on a PQ implementation.

    Raises for the one combination the categories leave open: a known
    physical-access exploit that already has a countermeasure.
    """
    if not known_exploit or vector is ExploitVector.PRIVILEGED_ACCESS:
        return Level.LOW
    if vector is ExploitVector.REMOTE_NETWORK:
        return Level.MEDIUM if countermeasure_available else Level.HIGH
    if not countermeasure_available:
        return Level.MEDIUM
    raise AssessmentError(
        "uncategorized attack attributes: known physical-access exploit with a countermeasure",
        code="uncategorized-attack",
    )


def assess_post_attack(attack: AttackRecord) -> Finding:
    likelihood = attack_likelihood(attack.exploit_vector, attack.known_exploit, attack.countermeasure_available)
    impact = Level.MEDIUM
    risk = combine_risk(likelihood, impact)
    steps = (
        f"{attack.attack_class.value}: vector {attack.exploit_vector.value}, "
        f"known exploit {'yes' if attack.known_exploit else 'no'}, "
        f"countermeasure {'available' if attack.countermeasure_available else 'unavailable'} -> likelihood {likelihood.label}",
        "post-migration attack impact is medium",
        _matrix_step(likelihood, impact, risk),
    )
    return Finding(
        asset=attack.id,
        stage=MigrationStage.POST_MIGRATION,
        likelihood=likelihood,
        impact=impact,
        risk=risk,
        kind="attack",
        subject=attack.target_mechanism,
        stride=_stride(attack.stride_threats),
        vulnerabilities=(attack.attack_class.value.replace("_", " "),),
        countermeasures=attack.countermeasures,
        derivation=steps,
    )


def assess_post_algorithm(target: MechanismRecord, kb: KnowledgeBase, cfg: AssessmentConfig, asset_id: str | None = None) -> Finding:
    if target.family is not MechanismFamily.QUANTUM_RESISTANT:
        raise AssessmentError(
            f"stage/mechanism mismatch: '{target.id}' is not quantum resistant and has no post-migration profile",
            code="stage-mismatch",
        )
    base = dict(
        asset=asset_id or target.id,
        stage=MigrationStage.POST_MIGRATION,
        kind=AssetKind.ALGORITHM.value,
        subject=target.id,
        stride=_stride(target.stride_threats),
        vulnerabilities=target.vulnerabilities,
    )
    attacks = kb.attacks_on(target.id)
    if not attacks:
        if cfg.fail_on_unknown:
            raise AssessmentError(f"no recorded attacks for '{target.id}'", code="no-attacks")
        return Finding(
            likelihood=Level.LOW,
            impact=Level.LOW,
            risk=Level.LOW,
            derivation=("no recorded attacks", _matrix_step(Level.LOW, Level.LOW, Level.LOW)),
            **base,
        )
    subs = tuple(assess_post_attack(a) for a in attacks)
    risk = aggregate_findings(f.risk for f in subs)
    # attacks_on is sorted by id, so the first maximum is the id-order tie-break.
    worst = next(f for f in subs if f.risk is risk)
    counter: list[str] = []
    for f in subs:
        counter += [c for c in f.countermeasures if c not in counter]
    steps = [f"{f.asset}: {f.likelihood.label}/{f.impact.label} -> {f.risk.label}" for f in subs]
    steps.append(f"aggregation: worst-case over {len(subs)} attacks -> {risk.label} (headline from {worst.asset})")
    return Finding(
        likelihood=worst.likelihood,
        impact=worst.impact,
        risk=risk,
        countermeasures=tuple(counter),
        derivation=tuple(steps),
        per_attack=subs,
        aggregation=Aggregation.WORST_CASE,
        **base,
    )


def assess_post_protocol(record: SuiteRecord, kb: KnowledgeBase, cfg: AssessmentConfig, asset_id: str | None = None) -> Finding:
    attrs = record.post_attributes
    if attrs is None:
        raise AssessmentError(f"'{record.id}' has no post-migration profile", code="no-post-profile")
    medium = attrs.countermeasures_available and attrs.uses_asymmetric and not attrs.vulnerability_via_optional_only
    likelihood = Level.MEDIUM if medium else Level.LOW
    impact = Level.MEDIUM if attrs.uses_asymmetric else Level.LOW
    steps = [
        f"countermeasures {'available' if attrs.countermeasures_available else 'unavailable'}, "
        f"asymmetric {'yes' if attrs.uses_asymmetric else 'no'}, "
        f"optional-only exposure {'yes' if attrs.vulnerability_via_optional_only else 'no'} -> likelihood {likelihood.label}",
        f"impact {impact.label} ({'asymmetric' if attrs.uses_asymmetric else 'symmetric only'})",
    ]
    likelihood, impact, just, ostep = _apply_override(kb, record.id, MigrationStage.POST_MIGRATION, likelihood, impact)
    risk = combine_risk(likelihood, impact)
    steps += ostep + [_matrix_step(likelihood, impact, risk)]
    return Finding(
        asset=asset_id or record.id,
        stage=MigrationStage.POST_MIGRATION,
        likelihood=likelihood,
        impact=impact,
        risk=risk,
        kind=_record_kind(record).value,
        subject=record.id,
        stride=_stride(record.stride_threats),
        vulnerabilities=attrs.challenges,
        countermeasures=attrs.countermeasures,
        alternatives=_alt_names(kb, record.alternatives),
        derivation=tuple(steps),
        override=just,
    )


# --------------------------------------------------------------------------
# hybrids

_APPLIES_KINDS = {
    AppliesTo.KEM_ENC: AssetKind.ALGORITHM,
    AppliesTo.SIGNATURE: AssetKind.ALGORITHM,
    AppliesTo.CERTIFICATE: AssetKind.CERTIFICATE,
    AppliesTo.PROTOCOL: AssetKind.PROTOCOL,
}


def assess_hybrid(a: Finding, b: Finding, combiner: CombinerRecord, asset_id: str = "") -> Finding:
    return assess_hybrid_many([a, b], combiner, asset_id)


def assess_hybrid_many(components: Sequence[Finding], combiner: CombinerRecord, asset_id: str = "") -> Finding:
    """Combine component findings: min rule, or first component under weak nesting."""
    if combiner.applies_to not in ALLOWED_APPLIES_TO[combiner.kind]:
        raise AssessmentError(
            f"combiner '{combiner.id}' of kind '{combiner.kind.value}' cannot apply to '{combiner.applies_to.value}'",
            code="combiner",
        )
    expected_kind = _APPLIES_KINDS[combiner.applies_to]
    for c in components:
        if c.errored:
            raise AssessmentError(f"hybrid component '{c.asset}' could not be assessed: {c.error}", code="component")
        if c.kind not in (expected_kind.value, AssetKind.HYBRID.value):
            raise AssessmentError(
                f"combiner '{combiner.id}' applies to {combiner.applies_to.value} but component "
                f"'{c.asset}' is a {c.kind}",
                code="combiner",
            )
    try:
        risk = fold_hybrid([c.risk for c in components], combiner.kind)
    except ValueError as exc:
        raise AssessmentError(str(exc), code="combiner") from None
    if combiner.kind is CombinerKind.WEAK_NESTING:
        chosen, tag, rule = components[0], Aggregation.WEAK_NESTING, "weak nesting keeps the first component's risk"
    else:
        chosen = next(c for c in components if c.risk is risk)
        tag, rule = Aggregation.HYBRID_MIN, "hybrid risk is the minimum component risk"
    steps = [f"component {c.asset} ({c.stage.value}): {c.risk.label}" for c in components]
    steps.append(f"combiner {combiner.id} ({combiner.kind.value}): {rule} -> {risk.label}")
    conditions = tuple((e.threat, e.condition) for e in combiner.stride_threats if e.condition)
    return Finding(
        asset=asset_id or "+".join(c.asset for c in components),
        stage=MigrationStage.THROUGH_MIGRATION,
        likelihood=chosen.likelihood,
        impact=chosen.impact,
        risk=risk,
        kind=AssetKind.HYBRID.value,
        subject=combiner.id,
        stride=_stride(combiner.stride_threats),
        stride_conditions=tuple(sorted(conditions, key=lambda tc: list(StrideClass).index(tc[0]))),
        vulnerabilities=combiner.cons,
        derivation=tuple(steps),
        components=tuple(components),
        aggregation=tag,
    )


def resolve_combiner(kb: KnowledgeBase, ref: str, component_kinds: Iterable[str] = ()) -> CombinerRecord:
    """Find a combiner by id, or by kind token (first matching id in sorted order)."""
    if ref in kb.combiners:
        return kb.combiners[ref]
    try:
        kind = parse_enum(CombinerKind, ref)
    except ValueError:
        raise AssessmentError(f"unknown combiner '{ref}'", code="unknown-combiner") from None
    kinds = {k for k in component_kinds if k != AssetKind.HYBRID.value}
    candidates = [c for c in kb.combiners.values() if c.kind is kind]
    fitting = [c for c in candidates if not kinds or kinds <= {_APPLIES_KINDS[c.applies_to].value}]
    pool = fitting or candidates
    if not pool:
        raise AssessmentError(f"no combiner of kind '{kind.value}' in the KB", code="unknown-combiner")
    return sorted(pool, key=lambda c: c.id)[0]


# --------------------------------------------------------------------------
# dispatch


def _kb_asset(kb: KnowledgeBase, ref: str) -> Asset:
    """Synthesize an asset for a hybrid component named by KB id."""
    if ref in kb.mechanisms:
        mech = kb.mechanisms[ref]
        stage = (
            MigrationStage.POST_MIGRATION
            if mech.family is MechanismFamily.QUANTUM_RESISTANT
            else MigrationStage.PRE_MIGRATION
        )
        return Asset(ref, AssetKind.ALGORITHM, stage, subject=ref)
    for coll, kind in ((kb.protocols, AssetKind.PROTOCOL), (kb.certificates, AssetKind.CERTIFICATE)):
        if ref in coll:
            rec = coll[ref]
            stage = (
                MigrationStage.POST_MIGRATION
                if rec.generation is Generation.POST_QUANTUM
                else MigrationStage.PRE_MIGRATION
            )
            return Asset(ref, kind, stage, subject=ref)
    raise AssessmentError(f"hybrid component '{ref}' is neither an inventory asset nor a KB subject", code="unknown-subject")


class _Assessor:
    def __init__(self, inv: Inventory, kb: KnowledgeBase, cfg: AssessmentConfig):
        self.inv = inv
        self.kb = kb
        self.cfg = cfg

    def assess(self, asset: Asset, chain: tuple[str, ...] = ()) -> Finding:
        if asset.kind is AssetKind.HYBRID:
            return self._hybrid(asset, chain + (asset.id,))
        return assess_subject(asset, self.kb, self.cfg)

    def _hybrid(self, asset: Asset, chain: tuple[str, ...]) -> Finding:
        spec = asset.hybrid
        if spec is None:
            raise AssessmentError(f"hybrid asset '{asset.id}' has no hybrid specification", code="invariant")
        if asset.stage is not MigrationStage.THROUGH_MIGRATION:
            raise AssessmentError(f"hybrid asset '{asset.id}' must be at through_migration", code="stage-mismatch")
        comps = []
        for ref in spec.components:
            inner = self.inv.get(ref) if ref != asset.id else None
            if inner is not None and inner.id in chain:
                raise AssessmentError(f"hybrid '{asset.id}' has a cyclic component reference via '{ref}'", code="cycle")
            comp_asset = inner if inner is not None else _kb_asset(self.kb, ref)
            comps.append(self.assess(comp_asset, chain))
        combiner = resolve_combiner(self.kb, spec.combiner, [c.kind for c in comps])
        return assess_hybrid_many(comps, combiner, asset.id)


def assess_subject(asset: Asset, kb: KnowledgeBase, cfg: AssessmentConfig) -> Finding:
    """Dispatch a non-hybrid asset by (kind, stage)."""
    stage = asset.stage
    if stage is MigrationStage.THROUGH_MIGRATION:
        raise AssessmentError(f"asset '{asset.id}': through_migration applies only to hybrid assets", code="stage-mismatch")
    sid = asset.subject or ""
    if asset.kind is AssetKind.ALGORITHM:
        rec = kb.mechanisms.get(sid)
        if rec is not None:
            if stage is MigrationStage.PRE_MIGRATION:
                return assess_pre_algorithm(rec, kb, cfg, asset.id)
            return assess_post_algorithm(rec, kb, cfg, asset.id)
    else:
        coll = kb.protocols if asset.kind is AssetKind.PROTOCOL else kb.certificates
        rec = coll.get(sid)
        if rec is not None:
            if stage is MigrationStage.PRE_MIGRATION:
                return assess_pre_suite(rec, kb, cfg, asset.id)
            return assess_post_protocol(rec, kb, cfg, asset.id)
    from qrisk.kb.loader import lookup

    found = lookup(kb, sid)
    if found.found:
        raise AssessmentError(
            f"asset '{asset.id}': subject '{sid}' is a {found.kind.value}, not a {asset.kind.value}",
            code="kind-mismatch",
        )
    hint = f" (did you mean: {', '.join(found.suggestions)})" if found.suggestions else ""
    raise AssessmentError(f"asset '{asset.id}': unknown subject '{sid}'{hint}", code="unknown-subject")


def _errored(asset: Asset, exc: QriskError) -> Finding:
    return Finding(
        asset=asset.id,
        stage=asset.stage,
        likelihood=None,
        impact=None,
        risk=None,
        kind=asset.kind.value,
        subject=asset.subject or (asset.hybrid.combiner if asset.hybrid else ""),
        derivation=(f"error [{exc.code}]: {exc}",),
        error=f"[{exc.code}] {exc}",
    )


def assess_asset(asset: Asset, inv: Inventory, kb: KnowledgeBase, cfg: AssessmentConfig) -> Finding:
    finding = _Assessor(inv, kb, cfg).assess(asset)
    if asset.context_notes:
        finding = replace(finding, derivation=finding.derivation + (f"context notes: {asset.context_notes}",))
    return finding


def assess_inventory(inv: Inventory, kb: KnowledgeBase, cfg: AssessmentConfig | None = None, jobs: int = 1) -> AssessmentReport:
    """Assess every asset; per-asset failures become errored findings unless fail_on_unknown."""
    cfg = cfg or AssessmentConfig()
    kb.poll.horizon(cfg.horizon_years)  # unknown horizons fail up front

    def one(asset: Asset) -> Finding:
        try:
            return assess_asset(asset, inv, kb, cfg)
        except QriskError as exc:
            if cfg.fail_on_unknown:
                raise
            return _errored(asset, exc)

    if jobs > 1 and len(inv.assets) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            findings = list(pool.map(one, inv.assets))
    else:
        findings = [one(a) for a in inv.assets]

    warnings = []
    if not inv.assets:
        warnings.append("inventory contains no assets")
    for f in sorted(findings, key=lambda f: f.asset):
        if f.errored:
            warnings.append(f"asset '{f.asset}' could not be assessed: {f.error}")
    return AssessmentReport(
        kb_version=kb.version,
        config=cfg,
        findings=tuple(findings),
        inventory_name=inv.name,
        warnings=tuple(warnings),
    )


# --------------------------------------------------------------------------
# what-if


@dataclass(frozen=True)
class Substitution:
    asset: str
    replace_with: str | HybridSpec
    stage: MigrationStage | None = None


def apply_substitutions(inv: Inventory, substitutions: Sequence[Substitution], kb: KnowledgeBase) -> Inventory:
    by_id = {a.id: a for a in inv.assets}
    for sub in substitutions:
        if sub.asset not in by_id:
            raise AssessmentError(f"substitution names unknown asset '{sub.asset}'", code="unknown-asset")
    assets = []
    subs = {s.asset: s for s in substitutions}
    for a in inv.assets:
        s = subs.get(a.id)
        if s is None:
            assets.append(a)
        elif isinstance(s.replace_with, HybridSpec):
            assets.append(Asset(a.id, AssetKind.HYBRID, MigrationStage.THROUGH_MIGRATION, hybrid=s.replace_with,
                                context_notes=a.context_notes))
        else:
            template = _kb_asset(kb, s.replace_with)
            stage = s.stage or (a.stage if a.kind is not AssetKind.HYBRID else template.stage)
            assets.append(Asset(a.id, template.kind, stage, subject=s.replace_with, context_notes=a.context_notes))
    return Inventory(inv.name, tuple(assets), inv.metadata)


def what_if(
    inv: Inventory,
    substitutions: Sequence[Substitution],
    kb: KnowledgeBase,
    cfg: AssessmentConfig | None = None,
    jobs: int = 1,
) -> DeltaReport:
    from qrisk.inventoryio.diff import diff_reports

    modified = apply_substitutions(inv, substitutions, kb)
    return diff_reports(assess_inventory(inv, kb, cfg, jobs), assess_inventory(modified, kb, cfg, jobs))
