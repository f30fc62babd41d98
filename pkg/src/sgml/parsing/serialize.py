"""Canonical XML and structured-text writers for every model part.

Output is deterministic: fixed attribute order, sorted sections, floats
written with repr (shortest exact form), two-space indentation. Branch
impedances are emitted in per-unit (the canonical consolidated form), which
parsers accept alongside physical ohms, so parse -> serialize -> parse is
the identity on every supported part.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from sgml.model import (
    Branch,
    BranchKind,
    CyberModel,
    IedSpec,
    NAME_SEP,
    PlcSpec,
    ScadaSpec,
    ScenarioTimeline,
    SedLink,
    StDataType,
    SubstationModel,
    SwitchDevice,
    SwitchState,
)
from sgml.parsing.scl import WAN_SWITCH_NAME, access_switch_name
from sgml.parsing.supplementary import IedConfigOverlay

_XML_DECL = b'<?xml version="1.0" encoding="UTF-8"?>\n'


def _num(x: float) -> str:
    return repr(float(x))


def _to_bytes(root: ET.Element) -> bytes:
    ET.indent(root, space="  ")
    return _XML_DECL + ET.tostring(root, encoding="utf-8") + b"\n"


def _split_id(eid: str) -> tuple[str, str]:
    """Split a consolidated id into (substation, local name)."""
    if NAME_SEP in eid:
        sub, local = eid.split(NAME_SEP, 1)
        return sub, local
    return "", eid


# --------------------------------------------------------------------------
# SSD
# --------------------------------------------------------------------------

def substation_to_ssd(model: SubstationModel) -> bytes:
    consolidated = model.name == ""
    root = ET.Element("SCL")
    if consolidated:
        root.set("consolidated", "true")
    ET.SubElement(root, "Header", id=model.name or "consolidated")

    sub_names = sorted({_split_id(b.id)[0] for b in model.buses}) if consolidated \
        else [model.name]

    def local(eid: str) -> str:
        return _split_id(eid)[1] if consolidated else eid

    for sub_name in sub_names:
        sub_elem = ET.SubElement(root, "Substation", name=sub_name)
        vls = [v for v in model.voltage_levels
               if (_split_id(v.name)[0] if consolidated else model.name) == sub_name]
        for vl in vls:
            vl_elem = ET.SubElement(sub_elem, "VoltageLevel", name=local(vl.name))
            volt = ET.SubElement(vl_elem, "Voltage", unit="V", multiplier="k")
            volt.text = _num(vl.nominal_kv)
            bay = ET.SubElement(vl_elem, "Bay", name="Bay1")
            vl_buses = {b.id for b in model.buses if b.voltage_level == vl.name}
            for bus in model.buses:
                if bus.id in vl_buses:
                    ET.SubElement(bay, "ConnectivityNode", name=local(bus.id))
            # equipment lives with its first terminal's voltage level
            for br in model.branches:
                if br.kind != BranchKind.TIE_LINE and br.from_bus in vl_buses:
                    _write_branch(bay, br, local)
            for sw in model.switches:
                if sw.from_bus in vl_buses:
                    _write_switch(bay, sw, local)
            for ld in model.loads:
                if ld.bus in vl_buses:
                    eq = ET.SubElement(bay, "ConductingEquipment",
                                       name=local(ld.id), type="LOD")
                    eq.set("p_mw", _num(ld.p_mw))
                    eq.set("q_mvar", _num(ld.q_mvar))
                    ET.SubElement(eq, "Terminal", connectivityNode=local(ld.bus))
            for src in model.sources:
                if src.bus in vl_buses:
                    kind_attr = {"grid_slack": "IFL", "generator": "GEN",
                                 "pv": "PV", "battery": "BAT"}[src.kind.value]
                    eq = ET.SubElement(bay, "ConductingEquipment",
                                       name=local(src.id), type=kind_attr)
                    eq.set("p_mw", _num(src.p_mw))
                    eq.set("v_setpoint_pu", _num(src.v_setpoint_pu))
                    ET.SubElement(eq, "Terminal", connectivityNode=local(src.bus))

    ties = [b for b in model.branches if b.kind == BranchKind.TIE_LINE]
    if ties:
        inter = ET.SubElement(root, "Interconnection")
        for tie in ties:
            t = ET.SubElement(inter, "TieLine", name=tie.id,
                              fromBus=tie.from_bus, toBus=tie.to_bus)
            t.set("r_pu", _num(tie.r_pu))
            t.set("x_pu", _num(tie.x_pu))
            t.set("rating_a", _num(tie.rating_a))
    return _to_bytes(root)


def _write_branch(bay: ET.Element, br: Branch, local) -> None:
    type_attr = "LIN" if br.kind == BranchKind.LINE else "PTR"
    eq = ET.SubElement(bay, "ConductingEquipment", name=local(br.id), type=type_attr)
    eq.set("r_pu", _num(br.r_pu))
    eq.set("x_pu", _num(br.x_pu))
    eq.set("rating_a", _num(br.rating_a))
    ET.SubElement(eq, "Terminal", connectivityNode=local(br.from_bus))
    ET.SubElement(eq, "Terminal", connectivityNode=local(br.to_bus))


def _write_switch(bay: ET.Element, sw: SwitchDevice, local) -> None:
    eq = ET.SubElement(bay, "ConductingEquipment", name=local(sw.id),
                       type=sw.kind.value, state=sw.state.value)
    ET.SubElement(eq, "Terminal", connectivityNode=local(sw.from_bus))
    ET.SubElement(eq, "Terminal", connectivityNode=local(sw.to_bus))


# --------------------------------------------------------------------------
# SCD
# --------------------------------------------------------------------------

_TYPE_BY_ROLE = {"ied": "IED", "plc": "PLC", "scada": "SCADA", "attacker_slot": "ATTACKER"}


def cyber_to_scd(model: CyberModel) -> bytes:
    consolidated = any(NAME_SEP in h.name for h in model.hosts)
    root = ET.Element("SCL")
    if consolidated:
        root.set("consolidated", "true")
    ET.SubElement(root, "Header", id="communication")
    for sub in sorted({sn.substation for sn in model.subnetworks if sn.substation}):
        ET.SubElement(root, "Substation", name=sub)
    for host in model.hosts:
        ET.SubElement(root, "IED", name=host.name, type=_TYPE_BY_ROLE[host.role.value])

    comm = ET.SubElement(root, "Communication")
    default_links: set[tuple[str, str]] = set()
    for sn in model.subnetworks:
        sn_elem = ET.SubElement(comm, "SubNetwork", name=sn.name)
        if sn.substation:
            sn_elem.set("substation", sn.substation)
        sw_name = access_switch_name(sn.name)
        for host in model.hosts:
            if host.subnetwork != sn.name:
                continue
            ap = ET.SubElement(sn_elem, "ConnectedAP", iedName=host.name, apName="AP1")
            addr = ET.SubElement(ap, "Address")
            ET.SubElement(addr, "P", type="IP").text = host.ip
            ET.SubElement(addr, "P", type="MAC-Address").text = host.mac
            default_links.add(tuple(sorted((host.name, sw_name))))

    wan = model.wan_switch()
    if wan is not None:
        ET.SubElement(comm, "SubNetwork", name="WAN", type="WAN")
        for sw in model.switches:
            if sw.subnetwork:
                default_links.add(tuple(sorted((sw.name, WAN_SWITCH_NAME))))

    for link in model.links:
        key = tuple(sorted((link.endpoint_a, link.endpoint_b)))
        if key in default_links and link.latency_ticks == 0:
            continue
        ln = ET.SubElement(comm, "Link", a=link.endpoint_a, b=link.endpoint_b)
        ln.set("latency", str(link.latency_ticks))
    return _to_bytes(root)


# --------------------------------------------------------------------------
# ICD / SED / supplementary
# --------------------------------------------------------------------------

def ied_to_icd(spec: IedSpec) -> bytes:
    root = ET.Element("SCL")
    ET.SubElement(root, "Header", id=spec.name)
    ied = ET.SubElement(root, "IED", name=spec.name, type="IED")
    ap = ET.SubElement(ied, "AccessPoint", name="AP1")
    server = ET.SubElement(ap, "Server")
    ld = ET.SubElement(server, "LDevice", inst="LD0")
    for ln_class in sorted(spec.logical_nodes):
        ET.SubElement(ld, "LN", lnClass=ln_class, inst="1")
    return _to_bytes(root)


def sed_to_xml(link: SedLink) -> bytes:
    root = ET.Element("SCL")
    ET.SubElement(root, "Header", id=f"SED-{link.from_substation}-{link.to_substation}")
    ex = ET.SubElement(root, "SubstationExchange")
    ex.set("from", link.from_substation)
    ex.set("to", link.to_substation)
    tie = ET.SubElement(ex, "TieLine", fromBus=link.from_bus, toBus=link.to_bus)
    tie.set("r_pu", _num(link.r_pu))
    tie.set("x_pu", _num(link.x_pu))
    tie.set("rating_a", _num(link.rating_a))
    if link.comm_latency_ticks:
        ET.SubElement(ex, "CommLink", latency=str(link.comm_latency_ticks))
    return _to_bytes(root)


def overlay_to_xml(overlay: IedConfigOverlay) -> bytes:
    root = ET.Element("IEDConfig")
    for entry in overlay.entries:
        ied = ET.SubElement(root, "IED", name=entry.ied)
        th = entry.thresholds
        th_elem = ET.SubElement(ied, "Thresholds")
        if th.ptoc_limit_a is not None:
            th_elem.set("ptoc_limit", _num(th.ptoc_limit_a))
        th_elem.set("ptoc_delay", str(th.ptoc_delay_ticks))
        if th.ptov_limit_pu is not None:
            th_elem.set("ptov_limit", _num(th.ptov_limit_pu))
        if th.ptuv_limit_pu is not None:
            th_elem.set("ptuv_limit", _num(th.ptuv_limit_pu))
        if th.pdif_limit_a is not None:
            th_elem.set("pdif_limit", _num(th.pdif_limit_a))
        if entry.remote_peer:
            ET.SubElement(ied, "RemotePeer", name=entry.remote_peer)
        for m in entry.bindings.measurements:
            ET.SubElement(ied, "Measurement", path=m.path, element=m.element,
                          quantity=m.quantity.value)
        for c in entry.bindings.controls:
            ET.SubElement(ied, "Control", path=c.path, switch=c.switch)
        for g in entry.interlock_guards:
            ET.SubElement(ied, "Interlock", guarded=g.guarded_switch, guard=g.guard_switch)
    return _to_bytes(root)


def scada_to_xml(spec: ScadaSpec) -> bytes:
    root = ET.Element("ScadaConfig")
    for s in spec.data_sources:
        ET.SubElement(root, "DataSource", name=s.name, host=s.host,
                      protocol=s.protocol.value)
    for p in spec.data_points:
        ET.SubElement(root, "DataPoint", id=p.id, source=p.source, path=p.path,
                      kind=p.kind.value, display=p.display_name, unit=p.unit)
    return _to_bytes(root)


def timeline_to_xml(timeline: ScenarioTimeline) -> bytes:
    root = ET.Element("PowerSystemExtra")
    for e in timeline.entries:
        value = e.value.value if isinstance(e.value, SwitchState) else _num(e.value)
        ET.SubElement(root, "Entry", tick=str(e.tick), target=e.target,
                      field=e.field.value, value=value)
    return _to_bytes(root)


# --------------------------------------------------------------------------
# structured text
# --------------------------------------------------------------------------

_PRECEDENCE = {"OR": 1, "AND": 2, "=": 3, "<>": 3, "<": 3, "<=": 3, ">": 3, ">=": 3,
               "+": 4, "-": 4, "*": 5, "/": 5}


def _expr_text(node) -> str:
    kind = node[0]
    if kind == "num":
        value = node[1]
        return repr(float(value)) if isinstance(value, float) else str(value)
    if kind == "bool":
        return "TRUE" if node[1] else "FALSE"
    if kind == "var":
        return node[1]
    if kind == "neg":
        return "-" + _wrap(node[1])
    if kind == "not":
        return "NOT " + _wrap(node[1])
    _, op, left, right = node
    return f"{_wrap(left)} {op} {_wrap(right)}"


def _wrap(node) -> str:
    text = _expr_text(node)
    if node[0] in ("bin",):
        return f"({text})"
    return text


def _stmt_lines(stmt, indent: int) -> list[str]:
    pad = "  " * indent
    if stmt[0] == "assign":
        return [f"{pad}{stmt[1]} := {_expr_text(stmt[2])};"]
    _, branches, else_body = stmt
    lines: list[str] = []
    for i, (cond, body) in enumerate(branches):
        head = "IF" if i == 0 else "ELSIF"
        lines.append(f"{pad}{head} {_expr_text(cond)} THEN")
        for s in body:
            lines.extend(_stmt_lines(s, indent + 1))
    if else_body:
        lines.append(f"{pad}ELSE")
        for s in else_body:
            lines.extend(_stmt_lines(s, indent + 1))
    lines.append(f"{pad}END_IF;")
    return lines


def _initial_text(var) -> str | None:
    if var.initial is None:
        return None
    if var.data_type == StDataType.BOOL:
        return "TRUE" if var.initial else "FALSE"
    if var.data_type == StDataType.REAL:
        return repr(float(var.initial))
    return str(var.initial)


def plc_to_st(spec: PlcSpec) -> bytes:
    """Canonical bare structured-text rendering of a PLC spec."""
    io_by_var = {b.variable: b for b in spec.io_map}
    scada_by_var = {e.variable: e for e in spec.scada_points}
    lines = [f"PROGRAM {spec.name}", "VAR"]
    for var in spec.program.variables:
        decl = f"  {var.name} : {var.data_type.value}"
        init = _initial_text(var)
        if init is not None:
            decl += f" := {init}"
        decl += ";"
        if var.name in io_by_var:
            b = io_by_var[var.name]
            decl += f" {{{b.direction.value} {b.ied}:{b.path}}}"
        if var.name in scada_by_var:
            decl += f" {{scada {scada_by_var[var.name].point_path}}}"
        lines.append(decl)
    lines.append("END_VAR")
    for stmt in spec.program.statements:
        lines.extend(_stmt_lines(stmt, 0))
    lines.append("END_PROGRAM")
    return ("\n".join(lines) + "\n").encode("utf-8")


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def serialize(part) -> bytes:
    """Serialize any supported model part to its canonical file form."""
    if isinstance(part, SubstationModel):
        return substation_to_ssd(part)
    if isinstance(part, CyberModel):
        return cyber_to_scd(part)
    if isinstance(part, IedSpec):
        return ied_to_icd(part)
    if isinstance(part, SedLink):
        return sed_to_xml(part)
    if isinstance(part, IedConfigOverlay):
        return overlay_to_xml(part)
    if isinstance(part, ScadaSpec):
        return scada_to_xml(part)
    if isinstance(part, ScenarioTimeline):
        return timeline_to_xml(part)
    if isinstance(part, PlcSpec):
        return plc_to_st(part)
    raise TypeError(f"cannot serialize {type(part).__name__}")
