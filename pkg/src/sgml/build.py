"""End-to-end model build: parse every input file, merge, overlay, validate.

The input is a flat collection of files; kinds are detected from content.
SSD/SCD pairs are matched by substation name, ICDs are attributed to the
substations whose SCD lists the IED, and supplementary configs reference
consolidated ("Sub/name") ids, with bare names accepted when unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from sgml.merge import MergeError, MergePlan, merge_scd, merge_ssd
from sgml.model import (
    HostRole,
    IedSpec,
    NAME_SEP,
    RangeModel,
    ScadaSpec,
    ScenarioTimeline,
    TimelineEntry,
    Violation,
    validate_model,
)
from sgml.parsing import (
    FileKind,
    ParseDiagnostic,
    ParseFailure,
    Severity,
    SourceFile,
    load_source,
    parse_icd,
    parse_ied_config,
    parse_plc_logic,
    parse_ps_extra,
    parse_scada_config,
    parse_scd,
    parse_sed,
    parse_ssd,
    resolve_name,
)

from dataclasses import replace


class BuildError(Exception):
    def __init__(self, diagnostics: list[ParseDiagnostic], violations: list[Violation]):
        self.diagnostics = diagnostics
        self.violations = violations
        lines = [str(d) for d in diagnostics if d.severity == Severity.ERROR]
        lines += [str(v) for v in violations]
        super().__init__("\n".join(lines) or "build failed")


@dataclass
class BuildResult:
    model: RangeModel
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    report: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations and not any(
            d.severity == Severity.ERROR for d in self.diagnostics)


def _err(path: str, message: str) -> ParseDiagnostic:
    return ParseDiagnostic(Severity.ERROR, path, 1, 1, message)


def _warn(path: str, message: str) -> ParseDiagnostic:
    return ParseDiagnostic(Severity.WARNING, path, 1, 1, message)


def build_range_model(sources: list[SourceFile], tick_ms: int = 100) -> BuildResult:
    """Compile source files into a validated RangeModel.

    Parse failures raise BuildError immediately; semantic violations are
    collected into the result so callers can report them all at once.
    """
    diags: list[ParseDiagnostic] = []
    by_kind: dict[FileKind, list[SourceFile]] = {}
    for src in sources:
        by_kind.setdefault(src.kind, []).append(src)

    consolidated_ssd = None
    consolidated_scd = None
    try:
        substations = []   # (name, SubstationModel, CyberModel, scd_path)
        scds = []
        for src in sorted(by_kind.get(FileKind.SSD, []), key=lambda s: s.path):
            model, d = parse_ssd(src)
            diags.extend(d)
            if not model.name:
                if consolidated_ssd is not None or substations:
                    diags.append(_err(src.path, "a consolidated SSD must be the only SSD"))
                    continue
                consolidated_ssd = model
                continue
            substations.append((model.name, model, src.path))
        for src in sorted(by_kind.get(FileKind.SCD, []), key=lambda s: s.path):
            cyber, d = parse_scd(src)
            diags.extend(d)
            subs = {sn.substation for sn in cyber.subnetworks}
            if consolidated_ssd is not None:
                if consolidated_scd is not None:
                    diags.append(_err(src.path, "a consolidated build takes exactly one SCD"))
                    continue
                consolidated_scd = cyber
                continue
            if len(subs) != 1 or "" in subs:
                diags.append(_err(src.path, "SCD must name exactly one substation"))
                continue
            scds.append((subs.pop(), cyber, src.path))

        sed_links = []
        for src in sorted(by_kind.get(FileKind.SED, []), key=lambda s: s.path):
            link, d = parse_sed(src)
            diags.extend(d)
            sed_links.append(link)

        icds = []
        for src in sorted(by_kind.get(FileKind.ICD, []), key=lambda s: s.path):
            spec, d = parse_icd(src)
            diags.extend(d)
            icds.append((spec, src.path))
    except ParseFailure as exc:
        raise BuildError(diags + exc.diagnostics, [])

    if consolidated_ssd is not None:
        # pre-consolidated input: skip merging, ids are already qualified
        if consolidated_scd is None:
            raise BuildError(diags + [_err("build", "consolidated SSD without an SCD")], [])
        substation = consolidated_ssd
        cyber = consolidated_scd
        n_substations = len({sn.substation for sn in cyber.subnetworks})
        plan_pairs = [(None, None)] * n_substations  # count only, for the report
        host_names = {h.name for h in cyber.hosts}
        ied_specs = []
        matched_paths = set()
        for host in cyber.hosts:
            if host.role != HostRole.IED:
                continue
            local = host.name.split(NAME_SEP, 1)[-1]
            for spec, path in icds:
                if spec.name == local:
                    ied_specs.append(replace(spec, name=host.name))
                    matched_paths.add(path)
        for spec, path in icds:
            if path not in matched_paths:
                diags.append(_warn(path, f"ICD for {spec.name!r} matches no IED host; ignored"))
    else:
        # pair SSDs with SCDs by substation name
        scd_by_sub = {name: cyber for name, cyber, _ in scds}
        plan_pairs = []
        for name, sub_model, path in substations:
            cyber = scd_by_sub.get(name)
            if cyber is None:
                diags.append(_err(path, f"no SCD found for substation {name!r}"))
                continue
            plan_pairs.append((sub_model, cyber))
        for name, _cyber, path in scds:
            if name not in {n for n, _, _ in substations}:
                diags.append(_err(path, f"no SSD found for substation {name!r}"))

        ssd_names = {n for n, _, _ in substations}
        for link in sed_links:
            for sub in (link.from_substation, link.to_substation):
                if sub not in ssd_names:
                    diags.append(_err("sed", f"SED references unknown substation pair "
                                             f"{link.from_substation!r}-{link.to_substation!r}"))

        if any(d.severity == Severity.ERROR for d in diags):
            raise BuildError(diags, [])

        plan = MergePlan(tuple(plan_pairs), tuple(sed_links))
        try:
            substation = merge_ssd(plan)
            cyber = merge_scd(plan)
        except MergeError as exc:
            raise BuildError(diags + [_err("merge", str(exc))], [])

        # attribute ICDs to hosts: one runtime instance per matching ied host
        host_names = {h.name for h in cyber.hosts}
        ied_specs = []
        matched_paths = set()
        for sub_model, sub_cyber in plan_pairs:
            prefix = sub_model.name + NAME_SEP
            local_hosts = {h.name for h in sub_cyber.hosts if h.role == HostRole.IED}
            for spec, path in icds:
                if spec.name in local_hosts:
                    ied_specs.append(replace(spec, name=prefix + spec.name))
                    matched_paths.add(path)
        for spec, path in icds:
            if path not in matched_paths:
                diags.append(_warn(path, f"ICD for {spec.name!r} matches no IED host; ignored"))

    # supplementary overlays
    element_ids = substation.element_ids()
    switch_ids = {s.id for s in substation.switches}
    ied_names = {s.name for s in ied_specs}
    specs_by_name = {s.name: s for s in ied_specs}

    try:
        for src in sorted(by_kind.get(FileKind.IED_CONFIG, []), key=lambda s: s.path):
            overlay, d = parse_ied_config(src)
            diags.extend(d)
            for entry in overlay.entries:
                target = resolve_name(entry.ied, ied_names)
                if target is None:
                    diags.append(_err(src.path, f"IED Config entry for unknown IED {entry.ied!r}"))
                    continue
                spec = specs_by_name[target]
                measurements = []
                for m in entry.bindings.measurements:
                    element = resolve_name(m.element, element_ids)
                    if element is None:
                        diags.append(_err(src.path, f"{target}: unknown element {m.element!r}"))
                        continue
                    measurements.append(replace(m, element=element))
                controls = []
                for c in entry.bindings.controls:
                    switch = resolve_name(c.switch, switch_ids)
                    if switch is None:
                        diags.append(_err(src.path, f"{target}: unknown switch {c.switch!r}"))
                        continue
                    controls.append(replace(c, switch=switch))
                guards = []
                for g in entry.interlock_guards:
                    guarded = resolve_name(g.guarded_switch, switch_ids)
                    guard = resolve_name(g.guard_switch, switch_ids)
                    if guarded is None or guard is None:
                        diags.append(_err(src.path, f"{target}: unknown guard switch"))
                        continue
                    guards.append(replace(g, guarded_switch=guarded, guard_switch=guard))
                peer = None
                if entry.remote_peer is not None:
                    peer = resolve_name(entry.remote_peer, ied_names)
                    if peer is None:
                        diags.append(_err(src.path, f"{target}: unknown peer {entry.remote_peer!r}"))
                specs_by_name[target] = replace(
                    spec,
                    thresholds=entry.thresholds,
                    bindings=replace(spec.bindings, measurements=tuple(measurements),
                                     controls=tuple(controls)),
                    interlock_guards=tuple(guards),
                    remote_peer=peer,
                )

        plcs = []
        for src in sorted(by_kind.get(FileKind.PLC_LOGIC, []), key=lambda s: s.path):
            plc, d = parse_plc_logic(src)
            diags.extend(d)
            host = resolve_name(plc.name, host_names)
            if host is None:
                diags.append(_err(src.path, f"PLC program {plc.name!r} matches no host"))
                continue
            io_map = []
            for binding in plc.io_map:
                ied = resolve_name(binding.ied, ied_names)
                if ied is None:
                    diags.append(_err(src.path, f"{plc.name}: io_map names unknown IED {binding.ied!r}"))
                    continue
                io_map.append(replace(binding, ied=ied))
            plcs.append(replace(plc, name=host,
                                program=replace(plc.program, name=host),
                                io_map=tuple(io_map)))

        scada = ScadaSpec()
        for src in sorted(by_kind.get(FileKind.SCADA_CONFIG, []), key=lambda s: s.path):
            spec, d = parse_scada_config(src)
            diags.extend(d)
            sources_resolved = []
            for ds in spec.data_sources:
                host = resolve_name(ds.host, host_names)
                if host is None:
                    diags.append(_err(src.path, f"data source {ds.name!r}: unknown host {ds.host!r}"))
                    continue
                sources_resolved.append(replace(ds, host=host))
            scada = ScadaSpec(tuple(sources_resolved), spec.data_points)

        timeline = ScenarioTimeline()
        for src in sorted(by_kind.get(FileKind.PS_EXTRA, []), key=lambda s: s.path):
            tl, d = parse_ps_extra(src)
            diags.extend(d)
            entries = []
            for e in tl.entries:
                target = resolve_name(e.target, element_ids)
                if target is None:
                    diags.append(_err(src.path, f"timeline entry targets unknown element {e.target!r}"))
                    continue
                entries.append(TimelineEntry(e.tick, target, e.field, e.value))
            timeline = ScenarioTimeline(tuple(entries))
    except ParseFailure as exc:
        raise BuildError(diags + exc.diagnostics, [])

    if any(d.severity == Severity.ERROR for d in diags):
        raise BuildError(diags, [])

    model = RangeModel(
        substation=substation,
        cyber=cyber,
        ieds=tuple(sorted(specs_by_name.values(), key=lambda s: s.name)),
        plcs=tuple(plcs),
        scada=scada,
        timeline=timeline,
        tick_ms=tick_ms,
    )
    violations = validate_model(model)

    protections: dict[str, int] = {}
    for spec in model.ieds:
        for fn in ("PTOC", "PTOV", "PTUV", "PDIF", "CILO"):
            if fn in spec.logical_nodes:
                protections[fn] = protections.get(fn, 0) + 1
    report = {
        "substations": len(plan_pairs),
        "buses": len(substation.buses),
        "branches": len(substation.branches),
        "switches": len(substation.switches),
        "loads": len(substation.loads),
        "sources": len(substation.sources),
        "hosts": len(cyber.hosts),
        "wan_switch": cyber.wan_switch() is not None,
        "ieds": len(model.ieds),
        "plcs": len(model.plcs),
        "scada_points": len(model.scada.data_points),
        "timeline_entries": len(model.timeline.entries),
        "protections": dict(sorted(protections.items())),
        "violations": len(violations),
    }
    return BuildResult(model=model, diagnostics=diags, violations=violations, report=report)


def load_sources_from_dir(directory: str | Path) -> list[SourceFile]:
    """Load every recognizable model file beneath a directory."""
    root = Path(directory)
    sources = []
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix.lower() in (".json", ".md", ".log"):
            continue
        try:
            sources.append(load_source(path))
        except ParseFailure:
            continue  # not a model file; ignore quietly
    return sources
