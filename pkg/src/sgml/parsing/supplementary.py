"""Parsers for the supplementary configs: IED Config, SCADA Config, PS Extra.

These carry what SCL cannot: protection thresholds (current in amperes,
voltage in per-unit of nominal), cyber-physical bindings, SCADA data
sources/points, and the load/breaker scenario time series. All element ids
refer to the consolidated model ("S1/B2" form); bare names are accepted
when they resolve unambiguously.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

from sgml.model import (
    ControlBinding,
    CyberPhysicalMap,
    DataPoint,
    DataSource,
    InterlockGuard,
    MeasurementBinding,
    NAME_SEP,
    PointKind,
    ProtectionThresholds,
    Quantity,
    ScadaProtocol,
    ScadaSpec,
    ScenarioTimeline,
    SwitchState,
    TimelineEntry,
    TimelineField,
)
from sgml.parsing.source import DiagnosticSink, FileKind, SourceFile, parse_xml


def resolve_name(name: str, candidates: set[str]) -> str | None:
    """Resolve a possibly-bare name against consolidated ids.

    Exact match wins; otherwise a unique "Sub/name" suffix match is
    accepted. Ambiguous or missing names resolve to None.
    """
    if name in candidates:
        return name
    if NAME_SEP in name:
        return None
    matches = [c for c in candidates if c.endswith(NAME_SEP + name)]
    return matches[0] if len(matches) == 1 else None


@dataclass(frozen=True)
class IedOverlay:
    """Per-IED thresholds and bindings to lay over a capabilities-only spec."""

    ied: str
    thresholds: ProtectionThresholds
    bindings: CyberPhysicalMap
    interlock_guards: tuple[InterlockGuard, ...]
    remote_peer: str | None


@dataclass(frozen=True)
class IedConfigOverlay:
    entries: tuple[IedOverlay, ...]


def _float_of(sink: DiagnosticSink, doc, elem: ET.Element, attr: str) -> float | None:
    raw = elem.get(attr)
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        sink.error_at(doc, elem, f"attribute {attr}={raw!r} is not a number")
        return None


def parse_ied_config(file: SourceFile) -> tuple[IedConfigOverlay, list]:
    if file.kind != FileKind.IED_CONFIG:
        raise ValueError(f"{file.path}: expected an IED Config file, found {file.kind.value}")
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    overlays: list[IedOverlay] = []
    for ied_elem in doc.children(doc.root, "IED"):
        name = ied_elem.get("name", "")
        if not name:
            sink.error_at(doc, ied_elem, "IED entry without a name")
            continue

        th_elem = doc.find(ied_elem, "Thresholds")
        thresholds = ProtectionThresholds()
        if th_elem is not None:
            delay = th_elem.get("ptoc_delay")
            thresholds = ProtectionThresholds(
                ptoc_limit_a=_float_of(sink, doc, th_elem, "ptoc_limit"),
                ptoc_delay_ticks=int(delay) if delay is not None else 3,
                ptov_limit_pu=_float_of(sink, doc, th_elem, "ptov_limit"),
                ptuv_limit_pu=_float_of(sink, doc, th_elem, "ptuv_limit"),
                pdif_limit_a=_float_of(sink, doc, th_elem, "pdif_limit"),
            )

        measurements = []
        for m in doc.children(ied_elem, "Measurement"):
            try:
                quantity = Quantity(m.get("quantity", ""))
            except ValueError:
                sink.error_at(doc, m, f"unknown quantity {m.get('quantity')!r}")
                continue
            measurements.append(MeasurementBinding(m.get("path", ""), m.get("element", ""), quantity))
        controls = [ControlBinding(c.get("path", ""), c.get("switch", ""))
                    for c in doc.children(ied_elem, "Control")]
        guards = [InterlockGuard(g.get("guarded", ""), g.get("guard", ""))
                  for g in doc.children(ied_elem, "Interlock")]
        peer_elem = doc.find(ied_elem, "RemotePeer")
        peer = peer_elem.get("name") if peer_elem is not None else None

        overlays.append(IedOverlay(
            ied=name,
            thresholds=thresholds,
            bindings=CyberPhysicalMap(tuple(measurements), tuple(controls)),
            interlock_guards=tuple(guards),
            remote_peer=peer,
        ))

    sink.raise_if_errors()
    return IedConfigOverlay(tuple(overlays)), sink.items


def parse_scada_config(file: SourceFile) -> tuple[ScadaSpec, list]:
    if file.kind != FileKind.SCADA_CONFIG:
        raise ValueError(f"{file.path}: expected a SCADA Config file, found {file.kind.value}")
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    sources: list[DataSource] = []
    for s in doc.children(doc.root, "DataSource"):
        try:
            protocol = ScadaProtocol(s.get("protocol", "mms"))
        except ValueError:
            sink.error_at(doc, s, f"unknown protocol {s.get('protocol')!r}")
            continue
        sources.append(DataSource(s.get("name", ""), s.get("host", ""), protocol))

    points: list[DataPoint] = []
    for p in doc.children(doc.root, "DataPoint"):
        try:
            kind = PointKind(p.get("kind", "measurement"))
        except ValueError:
            sink.error_at(doc, p, f"unknown point kind {p.get('kind')!r}")
            continue
        points.append(DataPoint(
            id=p.get("id", ""), source=p.get("source", ""), path=p.get("path", ""),
            kind=kind, display_name=p.get("display", p.get("id", "")), unit=p.get("unit", "")))

    sink.raise_if_errors()
    return ScadaSpec(tuple(sources), tuple(points)), sink.items


def parse_ps_extra(file: SourceFile) -> tuple[ScenarioTimeline, list]:
    if file.kind != FileKind.PS_EXTRA:
        raise ValueError(f"{file.path}: expected a Power System Extra file, found {file.kind.value}")
    doc = parse_xml(file.data, file.path)
    sink = DiagnosticSink(file.path)

    entries: list[TimelineEntry] = []
    for e in doc.children(doc.root, "Entry"):
        try:
            tick = int(e.get("tick", ""))
        except ValueError:
            sink.error_at(doc, e, f"tick {e.get('tick')!r} is not an integer")
            continue
        if tick < 0:
            sink.error_at(doc, e, f"tick {tick} is negative")
            continue
        try:
            field = TimelineField(e.get("field", ""))
        except ValueError:
            sink.error_at(doc, e, f"unknown field {e.get('field')!r}")
            continue
        raw = e.get("value", "")
        value: float | SwitchState
        if field == TimelineField.SWITCH_STATE:
            try:
                value = SwitchState(raw)
            except ValueError:
                sink.error_at(doc, e, f"switch state {raw!r} must be open or closed")
                continue
        else:
            try:
                value = float(raw)
            except ValueError:
                sink.error_at(doc, e, f"value {raw!r} is not a number")
                continue
        entries.append(TimelineEntry(tick, e.get("target", ""), field, value))

    entries.sort(key=lambda e: e.tick)
    sink.raise_if_errors()
    return ScenarioTimeline(tuple(entries)), sink.items
