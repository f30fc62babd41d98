"""Synthetic model-file generators used by tests, demos and benchmarks.

Two families:

* ``epic`` - a single-substation lab-scale model with four voltage-level
  segments (generation, transmission, microgrid, smart homes), two
  generators plus PV and battery, nine IEDs, one mediating PLC and a
  SCADA host. Ships with false-command-injection and MITM scripts.

* ``multisub`` - five substations tied by four inter-substation links,
  104 IEDs total (24 + 4 x 20), differential protection across every tie,
  one SCADA host and one attacker slot. Used for the scale/latency run.

Electrical parameters are synthetic but chosen so every fixture solves
with healthy voltages and protection margins.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

_XML = '<?xml version="1.0" encoding="UTF-8"?>\n'
_SCL_OPEN = '<SCL xmlns="http://www.iec.ch/61850/2003/SCL">\n'


def _icd(name: str, ln_classes: list[str]) -> bytes:
    lns = "\n".join(f'          <LN lnClass="{c}" inst="1"/>' for c in ln_classes)
    return (f'{_XML}{_SCL_OPEN}  <Header id="{name}"/>\n'
            f'  <IED name="{name}" type="IED">\n'
            f'    <AccessPoint name="AP1">\n      <Server>\n'
            f'        <LDevice inst="LD0">\n{lns}\n        </LDevice>\n'
            f'      </Server>\n    </AccessPoint>\n  </IED>\n</SCL>\n').encode()


def _scd(substation: str, hosts: list[tuple[str, str, str, str]], subnetwork: str) -> bytes:
    """hosts: (name, type, ip, mac)."""
    ied_lines = "\n".join(f'  <IED name="{n}" type="{t}"/>' for n, t, _, _ in hosts)
    aps = "\n".join(
        f'      <ConnectedAP iedName="{n}" apName="AP1">\n'
        f'        <Address>\n'
        f'          <P type="IP">{ip}</P>\n'
        f'          <P type="MAC-Address">{mac}</P>\n'
        f'        </Address>\n'
        f'      </ConnectedAP>' for n, _, ip, mac in hosts)
    return (f'{_XML}{_SCL_OPEN}  <Header id="{substation}-comm"/>\n'
            f'  <Substation name="{substation}"/>\n{ied_lines}\n'
            f'  <Communication>\n    <SubNetwork name="{subnetwork}">\n{aps}\n'
            f'    </SubNetwork>\n  </Communication>\n</SCL>\n').encode()


def _sed(sub_a: str, bus_a: str, sub_b: str, bus_b: str,
         r_pu=0.01, x_pu=0.05, rating=400.0) -> bytes:
    return (f'{_XML}{_SCL_OPEN}  <Header id="SED-{sub_a}-{sub_b}"/>\n'
            f'  <SubstationExchange from="{sub_a}" to="{sub_b}">\n'
            f'    <TieLine fromBus="{bus_a}" toBus="{bus_b}" r_pu="{r_pu}" '
            f'x_pu="{x_pu}" rating_a="{rating}"/>\n'
            f'  </SubstationExchange>\n</SCL>\n').encode()


# --------------------------------------------------------------------------
# EPIC-style single substation
# --------------------------------------------------------------------------

EPIC_SUB = "S1"
EPIC_IPS = {
    "IED1": "10.0.1.11", "IED2": "10.0.1.12", "IED3": "10.0.1.13",
    "IED4": "10.0.1.14", "IED5": "10.0.1.15", "IED6": "10.0.1.16",
    "IED7": "10.0.1.17", "IED8": "10.0.1.18", "IED9": "10.0.1.19",
    "CPLC": "10.0.1.20", "SCADA": "10.0.1.21",
}

# thresholds sit ~3x above the quiescent operating point of each element
EPIC_PTOC_LIMIT_A = 45.0   # LT1 carries ~15 A at 66 kV in the base case

_EPIC_SSD = f"""{_XML}{_SCL_OPEN}  <Header id="S1"/>
  <Substation name="S1">
    <VoltageLevel name="VLGEN">
      <Voltage unit="V" multiplier="k">11</Voltage>
      <Bay name="Bay1">
        <ConnectivityNode name="GB1"/>
        <ConnectivityNode name="GB2"/>
        <ConnectivityNode name="GB3"/>
        <ConductingEquipment name="GRID" type="IFL" p_mw="0.0" v_setpoint_pu="1.0">
          <Terminal connectivityNode="GB1"/>
        </ConductingEquipment>
        <ConductingEquipment name="GEN1" type="GEN" p_mw="2.0" v_setpoint_pu="1.01">
          <Terminal connectivityNode="GB2"/>
        </ConductingEquipment>
        <ConductingEquipment name="GEN2" type="GEN" p_mw="1.5" v_setpoint_pu="1.01">
          <Terminal connectivityNode="GB3"/>
        </ConductingEquipment>
        <ConductingEquipment name="LG1" type="LIN" r_ohm="0.0121" x_ohm="0.0605" rating_a="400">
          <Terminal connectivityNode="GB2"/>
          <Terminal connectivityNode="GB1"/>
        </ConductingEquipment>
        <ConductingEquipment name="LG2" type="LIN" r_ohm="0.0121" x_ohm="0.0605" rating_a="400">
          <Terminal connectivityNode="GB3"/>
          <Terminal connectivityNode="GB1"/>
        </ConductingEquipment>
        <ConductingEquipment name="T1" type="PTR" r_ohm="0.00605" x_ohm="0.121" rating_a="300">
          <Terminal connectivityNode="GB1"/>
          <Terminal connectivityNode="TB1"/>
        </ConductingEquipment>
      </Bay>
    </VoltageLevel>
    <VoltageLevel name="VLTX">
      <Voltage unit="V" multiplier="k">66</Voltage>
      <Bay name="Bay1">
        <ConnectivityNode name="TB1"/>
        <ConnectivityNode name="TB1A"/>
        <ConnectivityNode name="TB2"/>
        <ConnectivityNode name="TB3"/>
        <ConductingEquipment name="CB_T1" type="CBR" state="closed">
          <Terminal connectivityNode="TB1"/>
          <Terminal connectivityNode="TB1A"/>
        </ConductingEquipment>
        <ConductingEquipment name="LT1" type="LIN" r_ohm="0.4356" x_ohm="2.178" rating_a="120">
          <Terminal connectivityNode="TB1A"/>
          <Terminal connectivityNode="TB2"/>
        </ConductingEquipment>
        <ConductingEquipment name="LT2" type="LIN" r_ohm="0.4356" x_ohm="2.178" rating_a="120">
          <Terminal connectivityNode="TB2"/>
          <Terminal connectivityNode="TB3"/>
        </ConductingEquipment>
        <ConductingEquipment name="T2" type="PTR" r_ohm="0.2178" x_ohm="4.356" rating_a="120">
          <Terminal connectivityNode="TB3"/>
          <Terminal connectivityNode="MB0"/>
        </ConductingEquipment>
        <ConductingEquipment name="T3" type="PTR" r_ohm="0.2178" x_ohm="4.356" rating_a="120">
          <Terminal connectivityNode="TB2"/>
          <Terminal connectivityNode="HB0"/>
        </ConductingEquipment>
      </Bay>
    </VoltageLevel>
    <VoltageLevel name="VLMG">
      <Voltage unit="V" multiplier="k">11</Voltage>
      <Bay name="Bay1">
        <ConnectivityNode name="MB0"/>
        <ConnectivityNode name="MB1"/>
        <ConnectivityNode name="MB2"/>
        <ConductingEquipment name="CB_MG" type="CBR" state="closed">
          <Terminal connectivityNode="MB0"/>
          <Terminal connectivityNode="MB1"/>
        </ConductingEquipment>
        <ConductingEquipment name="PV1" type="PV" p_mw="0.8" v_setpoint_pu="1.0">
          <Terminal connectivityNode="MB1"/>
        </ConductingEquipment>
        <ConductingEquipment name="BAT1" type="BAT" p_mw="0.2" v_setpoint_pu="1.0">
          <Terminal connectivityNode="MB1"/>
        </ConductingEquipment>
        <ConductingEquipment name="LM1" type="LIN" r_ohm="0.0121" x_ohm="0.0605" rating_a="400">
          <Terminal connectivityNode="MB1"/>
          <Terminal connectivityNode="MB2"/>
        </ConductingEquipment>
        <ConductingEquipment name="LD_MG" type="LOD" p_mw="0.6" q_mvar="0.2">
          <Terminal connectivityNode="MB2"/>
        </ConductingEquipment>
      </Bay>
    </VoltageLevel>
    <VoltageLevel name="VLSH">
      <Voltage unit="V" multiplier="k">0.4</Voltage>
      <Bay name="Bay1">
        <ConnectivityNode name="HB0"/>
        <ConnectivityNode name="HB1"/>
        <ConnectivityNode name="HB2"/>
        <ConnectivityNode name="HB3"/>
        <ConductingEquipment name="CB_SH" type="CBR" state="closed">
          <Terminal connectivityNode="HB0"/>
          <Terminal connectivityNode="HB1"/>
        </ConductingEquipment>
        <ConductingEquipment name="LH1" type="LIN" r_ohm="1.6e-05" x_ohm="8e-05" rating_a="4000">
          <Terminal connectivityNode="HB1"/>
          <Terminal connectivityNode="HB2"/>
        </ConductingEquipment>
        <ConductingEquipment name="LH2" type="LIN" r_ohm="1.6e-05" x_ohm="8e-05" rating_a="4000">
          <Terminal connectivityNode="HB2"/>
          <Terminal connectivityNode="HB3"/>
        </ConductingEquipment>
        <ConductingEquipment name="LD_H1" type="LOD" p_mw="1.2" q_mvar="0.4">
          <Terminal connectivityNode="HB2"/>
        </ConductingEquipment>
        <ConductingEquipment name="LD_H2" type="LOD" p_mw="0.9" q_mvar="0.3">
          <Terminal connectivityNode="HB3"/>
        </ConductingEquipment>
      </Bay>
    </VoltageLevel>
  </Substation>
</SCL>
""".encode()

_EPIC_IED_LNS = {
    "IED1": ["LLN0", "MMXU", "XCBR", "CSWI", "PTOC"],
    "IED2": ["LLN0", "MMXU", "XCBR", "CSWI", "PTOV", "PTUV"],
    "IED3": ["LLN0", "MMXU"],
    "IED4": ["LLN0", "MMXU", "XCBR", "CSWI", "CILO"],
    "IED5": ["LLN0", "MMXU"],
    "IED6": ["LLN0", "MMXU"],
    "IED7": ["LLN0", "MMXU"],
    "IED8": ["LLN0", "MMXU"],
    "IED9": ["LLN0", "MMXU"],
}

_EPIC_IED_CONFIG = f"""{_XML}<IEDConfig>
  <IED name="S1/IED1">
    <Thresholds ptoc_limit="{EPIC_PTOC_LIMIT_A}" ptoc_delay="3"/>
    <Measurement path="MMXU1.A" element="S1/LT1" quantity="i_a"/>
    <Measurement path="MMXU1.PhV" element="S1/TB1" quantity="v_pu"/>
    <Control path="XCBR1.Pos" switch="S1/CB_T1"/>
  </IED>
  <IED name="S1/IED2">
    <Thresholds ptov_limit="1.1" ptuv_limit="0.9"/>
    <Measurement path="MMXU1.PhV" element="S1/TB2" quantity="v_pu"/>
    <Measurement path="MMXU1.A" element="S1/LT2" quantity="i_a"/>
    <Control path="XCBR1.Pos" switch="S1/CB_SH"/>
  </IED>
  <IED name="S1/IED3">
    <Measurement path="MMXU1.A" element="S1/LH1" quantity="i_a"/>
    <Measurement path="MMXU1.PhV" element="S1/HB2" quantity="v_pu"/>
  </IED>
  <IED name="S1/IED4">
    <Measurement path="MMXU1.A" element="S1/LM1" quantity="i_a"/>
    <Control path="XCBR1.Pos" switch="S1/CB_MG"/>
    <Interlock guarded="S1/CB_MG" guard="S1/CB_T1"/>
  </IED>
  <IED name="S1/IED5">
    <Measurement path="MMXU1.W" element="S1/T1" quantity="p_mw"/>
    <Measurement path="MMXU1.PhV" element="S1/GB1" quantity="v_pu"/>
  </IED>
  <IED name="S1/IED6">
    <Measurement path="MMXU1.A" element="S1/LG1" quantity="i_a"/>
    <Measurement path="MMXU1.PhV" element="S1/GB2" quantity="v_pu"/>
  </IED>
  <IED name="S1/IED7">
    <Measurement path="MMXU1.A" element="S1/LG2" quantity="i_a"/>
    <Measurement path="MMXU1.PhV" element="S1/GB3" quantity="v_pu"/>
  </IED>
  <IED name="S1/IED8">
    <Measurement path="MMXU1.A" element="S1/T2" quantity="i_a"/>
    <Measurement path="MMXU1.PhV" element="S1/MB1" quantity="v_pu"/>
  </IED>
  <IED name="S1/IED9">
    <Measurement path="MMXU1.A" element="S1/T3" quantity="i_a"/>
    <Measurement path="MMXU1.PhV" element="S1/HB0" quantity="v_pu"/>
  </IED>
</IEDConfig>
""".encode()

_EPIC_PLC = """PROGRAM CPLC
VAR
  i_lt1 : REAL := 0.0; {read S1/IED1:MMXU1.A} {scada i_lt1}
  v_tb2 : REAL := 1.0; {read S1/IED2:MMXU1.PhV} {scada v_tb2}
  v_hb2 : REAL := 1.0; {read S1/IED3:MMXU1.PhV} {scada v_hb2}
  p_t1 : REAL := 0.0; {read S1/IED5:MMXU1.W} {scada p_t1}
  overcurrent : BOOL := FALSE;
  cb_t1_trip : BOOL := FALSE; {write S1/IED1:XCBR1.Pos}
END_VAR
overcurrent := i_lt1 > 500.0;
IF overcurrent THEN
  cb_t1_trip := TRUE;
END_IF;
END_PROGRAM
""".encode()

_EPIC_SCADA = f"""{_XML}<ScadaConfig>
  <DataSource name="cplc" host="S1/CPLC" protocol="plc_gateway"/>
  <DataSource name="ied1" host="S1/IED1" protocol="mms"/>
  <DataSource name="ied2" host="S1/IED2" protocol="mms"/>
  <DataSource name="ied4" host="S1/IED4" protocol="mms"/>
  <DataPoint id="v_tb2" source="cplc" path="v_tb2" kind="measurement" display="TB2 Voltage" unit="pu"/>
  <DataPoint id="i_lt1" source="cplc" path="i_lt1" kind="measurement" display="LT1 Current" unit="A"/>
  <DataPoint id="v_hb2" source="cplc" path="v_hb2" kind="measurement" display="HB2 Voltage" unit="pu"/>
  <DataPoint id="p_t1" source="cplc" path="p_t1" kind="measurement" display="T1 Active Power" unit="MW"/>
  <DataPoint id="cb_t1_pos" source="ied1" path="XCBR1.Pos" kind="status" display="CB_T1 Position" unit=""/>
  <DataPoint id="cb_sh_pos" source="ied2" path="XCBR1.Pos" kind="status" display="CB_SH Position" unit=""/>
  <DataPoint id="cb_mg_pos" source="ied4" path="XCBR1.Pos" kind="status" display="CB_MG Position" unit=""/>
  <DataPoint id="cb_t1_cmd" source="ied1" path="XCBR1.Pos" kind="control" display="CB_T1 Control" unit=""/>
  <DataPoint id="cb_sh_cmd" source="ied2" path="XCBR1.Pos" kind="control" display="CB_SH Control" unit=""/>
  <DataPoint id="cb_mg_cmd" source="ied4" path="XCBR1.Pos" kind="control" display="CB_MG Control" unit=""/>
</ScadaConfig>
""".encode()

_EPIC_PS_EXTRA = f"""{_XML}<PowerSystemExtra>
  <Entry tick="100" target="S1/LD_H1" field="load_p" value="1.4"/>
  <Entry tick="200" target="S1/LD_MG" field="load_p" value="0.8"/>
  <Entry tick="300" target="S1/LD_H1" field="load_p" value="1.2"/>
</PowerSystemExtra>
""".encode()

EPIC_FCI_SCRIPT = {
    "attacker": "S1/IED9",
    "steps": [
        {"at": 20, "action": "inject_mms", "target": EPIC_IPS["IED2"],
         "path": "XCBR1.Pos", "verb": "operate", "value": "open"},
    ],
}

EPIC_MITM_SCRIPT = {
    "attacker": "S1/IED9",
    "steps": [
        {"at": 10, "action": "arp_poison",
         "victim_a": EPIC_IPS["SCADA"], "victim_b": EPIC_IPS["CPLC"]},
        {"at": 12, "action": "intercept",
         "match": {"protocol": "MMS", "verb": "response", "path": "v_tb2"},
         "transform": {"scale": 0.5}},
        {"at": 60, "action": "restore_arp"},
        {"at": 60, "action": "stop_intercept"},
    ],
}

EPIC_COMBINED_SCRIPT = {
    "attacker": "S1/IED9",
    "steps": [
        {"at": 10, "action": "arp_poison",
         "victim_a": EPIC_IPS["SCADA"], "victim_b": EPIC_IPS["CPLC"]},
        {"at": 12, "action": "intercept",
         "match": {"protocol": "MMS", "verb": "response", "path": "v_tb2"},
         "transform": {"scale": 0.5}},
        {"at": 30, "action": "inject_mms", "target": EPIC_IPS["IED2"],
         "path": "XCBR1.Pos", "verb": "operate", "value": "open"},
        {"at": 60, "action": "restore_arp"},
        {"at": 60, "action": "stop_intercept"},
    ],
}


def epic_files() -> dict[str, bytes]:
    """The single-substation model file set, plus its attack scripts."""
    files = {"s1.ssd.xml": _EPIC_SSD}
    hosts = []
    for i in range(1, 10):
        name = f"IED{i}"
        hosts.append((name, "IED", EPIC_IPS[name], f"00-00-00-01-00-{10 + i:02X}"))
    hosts.append(("CPLC", "PLC", EPIC_IPS["CPLC"], "00-00-00-01-00-14"))
    hosts.append(("SCADA", "SCADA", EPIC_IPS["SCADA"], "00-00-00-01-00-15"))
    files["s1.scd.xml"] = _scd(EPIC_SUB, hosts, "CTRL")
    for name, lns in _EPIC_IED_LNS.items():
        files[f"{name.lower()}.icd.xml"] = _icd(name, lns)
    files["ied_config.xml"] = _EPIC_IED_CONFIG
    files["cplc.st"] = _EPIC_PLC
    files["scada_config.xml"] = _EPIC_SCADA
    files["ps_extra.xml"] = _EPIC_PS_EXTRA
    files["fci.json"] = json.dumps(EPIC_FCI_SCRIPT, indent=2).encode()
    files["mitm.json"] = json.dumps(EPIC_MITM_SCRIPT, indent=2).encode()
    files["combined.json"] = json.dumps(EPIC_COMBINED_SCRIPT, indent=2).encode()
    return files


# --------------------------------------------------------------------------
# five-substation scale model
# --------------------------------------------------------------------------

def _feeder_nominal_a(p_mw: float, kv: float) -> float:
    return p_mw * 1e3 / (math.sqrt(3) * kv)


def _sub_ssd(sub: str, main: bool) -> bytes:
    """One substation: 2 transformers, breakered feeders, loads or ties."""
    hv_kv, mv_kv = (66, 11) if main else (11, 0.4)
    n_feeders = 8 if main else 6
    lines = [f'{_XML}{_SCL_OPEN}  <Header id="{sub}"/>', f'  <Substation name="{sub}">']

    z_hv = hv_kv * hv_kv / 100.0
    z_mv = mv_kv * mv_kv / 100.0
    hv_nodes = ['<ConnectivityNode name="B0"/>']
    hv_equipment = [
        f'<ConductingEquipment name="GRID" type="IFL" p_mw="0.0" v_setpoint_pu="1.0">'
        f'<Terminal connectivityNode="B0"/></ConductingEquipment>']
    t_from = "B0"
    if main:
        hv_equipment.append(
            '<ConductingEquipment name="INF2" type="GEN" p_mw="3.0" v_setpoint_pu="1.0">'
            '<Terminal connectivityNode="B0"/></ConductingEquipment>')
    else:
        hv_nodes.append('<ConnectivityNode name="B0A"/>')
        hv_equipment.append(
            '<ConductingEquipment name="CB_IN" type="CBR" state="closed">'
            '<Terminal connectivityNode="B0"/><Terminal connectivityNode="B0A"/>'
            '</ConductingEquipment>')
        t_from = "B0A"
    for t in (1, 2):
        hv_equipment.append(
            f'<ConductingEquipment name="T{t}" type="PTR" r_ohm="{0.005 * z_hv}" '
            f'x_ohm="{0.1 * z_hv}" rating_a="300">'
            f'<Terminal connectivityNode="{t_from}"/><Terminal connectivityNode="B{t}"/>'
            f'</ConductingEquipment>')

    lines.append(f'    <VoltageLevel name="VLHV"><Voltage unit="V" multiplier="k">{hv_kv}</Voltage>'
                 f'<Bay name="Bay1">')
    lines.extend(f'      {x}' for x in hv_nodes)
    lines.extend(f'      {x}' for x in hv_equipment)
    lines.append('    </Bay></VoltageLevel>')

    mv_nodes = ['<ConnectivityNode name="B1"/>', '<ConnectivityNode name="B2"/>']
    mv_equipment = []
    for i in range(1, n_feeders + 1):
        mv_bus = "B1" if i <= n_feeders // 2 else "B2"
        mv_nodes.append(f'<ConnectivityNode name="FB{i}"/>')
        mv_nodes.append(f'<ConnectivityNode name="LB{i}"/>')
        mv_equipment.append(
            f'<ConductingEquipment name="CB_F{i}" type="CBR" state="closed">'
            f'<Terminal connectivityNode="{mv_bus}"/><Terminal connectivityNode="FB{i}"/>'
            f'</ConductingEquipment>')
        mv_equipment.append(
            f'<ConductingEquipment name="LF{i}" type="LIN" r_ohm="{0.01 * z_mv}" '
            f'x_ohm="{0.05 * z_mv}" rating_a="400">'
            f'<Terminal connectivityNode="FB{i}"/><Terminal connectivityNode="LB{i}"/>'
            f'</ConductingEquipment>')
        tie_feeder = main and i > 4
        if not tie_feeder:
            p = round(1.5 + 0.25 * (i % 4), 2) if main else round(0.3 + 0.05 * i, 2)
            q = round(p * 0.3, 3)
            mv_equipment.append(
                f'<ConductingEquipment name="LD{i}" type="LOD" p_mw="{p}" q_mvar="{q}">'
                f'<Terminal connectivityNode="LB{i}"/></ConductingEquipment>')

    lines.append(f'    <VoltageLevel name="VLMV"><Voltage unit="V" multiplier="k">{mv_kv}</Voltage>'
                 f'<Bay name="Bay1">')
    lines.extend(f'      {x}' for x in mv_nodes)
    lines.extend(f'      {x}' for x in mv_equipment)
    lines.append('    </Bay></VoltageLevel>')
    lines.append('  </Substation>')
    lines.append('</SCL>')
    return "\n".join(lines).encode()


def _multisub_ied_plan(subs: list[str]) -> dict[str, list[tuple[str, list[str]]]]:
    """Per substation: (ied name, logical node classes)."""
    plan: dict[str, list[tuple[str, list[str]]]] = {}
    for idx, sub in enumerate(subs):
        main = idx == 0
        n_feeders = 8 if main else 6
        ieds: list[tuple[str, list[str]]] = []
        for i in range(1, n_feeders + 1):
            ieds.append((f"{sub}F{i}", ["LLN0", "MMXU", "XCBR", "CSWI", "PTOC"]))
        for t in (1, 2):
            ieds.append((f"{sub}TX{t}", ["LLN0", "MMXU"]))
        for b in (1, 2):
            ieds.append((f"{sub}BV{b}", ["LLN0", "MMXU", "XCBR", "CSWI", "PTOV", "PTUV"]))
        n_inf = 2 if main else 1
        for i in range(1, n_inf + 1):
            ieds.append((f"{sub}IN{i}", ["LLN0", "MMXU"]))
        n_dp = 4 if main else 1
        for i in range(1, n_dp + 1):
            ieds.append((f"{sub}DP{i}", ["LLN0", "MMXU", "XCBR", "CSWI", "PDIF"]))
        n_misc = 6 if main else 8
        for i in range(1, n_misc + 1):
            ieds.append((f"{sub}MX{i}", ["LLN0", "MMXU"]))
        plan[sub] = ieds
    return plan


def _multisub_ied_config(subs: list[str]) -> bytes:
    out = [f"{_XML}<IEDConfig>"]
    for idx, sub in enumerate(subs):
        main = idx == 0
        hv_kv, mv_kv = (66, 11) if main else (11, 0.4)
        n_feeders = 8 if main else 6
        for i in range(1, n_feeders + 1):
            tie_feeder = main and i > 4
            p = round(1.5 + 0.25 * (i % 4), 2) if main else round(0.3 + 0.05 * i, 2)
            nominal = _feeder_nominal_a(2.6 if tie_feeder else p, mv_kv)
            limit = round(3 * nominal, 1)
            out.append(f'  <IED name="{sub}/{sub}F{i}">')
            out.append(f'    <Thresholds ptoc_limit="{limit}" ptoc_delay="3"/>')
            out.append(f'    <Measurement path="MMXU1.A" element="{sub}/LF{i}" quantity="i_a"/>')
            out.append(f'    <Measurement path="MMXU1.PhV" element="{sub}/LB{i}" quantity="v_pu"/>')
            out.append(f'    <Control path="XCBR1.Pos" switch="{sub}/CB_F{i}"/>')
            out.append('  </IED>')
        for t in (1, 2):
            out.append(f'  <IED name="{sub}/{sub}TX{t}">')
            out.append(f'    <Measurement path="MMXU1.W" element="{sub}/T{t}" quantity="p_mw"/>')
            out.append(f'    <Measurement path="MMXU1.PhV" element="{sub}/B0" quantity="v_pu"/>')
            out.append('  </IED>')
        for b in (1, 2):
            trip = f"{sub}/CB_F{1 if b == 1 else (n_feeders // 2) + 1}"
            out.append(f'  <IED name="{sub}/{sub}BV{b}">')
            out.append('    <Thresholds ptov_limit="1.1" ptuv_limit="0.9"/>')
            out.append(f'    <Measurement path="MMXU1.PhV" element="{sub}/B{b}" quantity="v_pu"/>')
            out.append(f'    <Control path="XCBR1.Pos" switch="{trip}"/>')
            out.append('  </IED>')
        n_inf = 2 if main else 1
        for i in range(1, n_inf + 1):
            out.append(f'  <IED name="{sub}/{sub}IN{i}">')
            out.append(f'    <Measurement path="MMXU1.W" element="{sub}/T{i}" quantity="p_mw"/>')
            out.append(f'    <Measurement path="MMXU1.PhV" element="{sub}/B0" quantity="v_pu"/>')
            out.append('  </IED>')
        if main:
            for k, other in enumerate(subs[1:], start=1):
                feeder = 4 + k
                out.append(f'  <IED name="{sub}/{sub}DP{k}">')
                out.append('    <Thresholds pdif_limit="50.0"/>')
                out.append(f'    <RemotePeer name="{other}/{other}DP1"/>')
                out.append(f'    <Measurement path="MMXU1.A" element="{sub}/LF{feeder}" quantity="i_a"/>')
                out.append(f'    <Control path="XCBR1.Pos" switch="{sub}/CB_F{feeder}"/>')
                out.append('  </IED>')
        else:
            tie_id = f"{subs[0]}/TIE-{sub}-{idx - 1}"
            out.append(f'  <IED name="{sub}/{sub}DP1">')
            out.append('    <Thresholds pdif_limit="50.0"/>')
            out.append(f'    <RemotePeer name="{subs[0]}/{subs[0]}DP{idx}"/>')
            out.append(f'    <Measurement path="MMXU1.A" element="{tie_id}" quantity="i_a"/>')
            out.append(f'    <Control path="XCBR1.Pos" switch="{sub}/CB_IN"/>')
            out.append('  </IED>')
        n_misc = 6 if main else 8
        for i in range(1, n_misc + 1):
            bus = f"LB{(i % (n_feeders // 2)) + 1}" if i <= n_feeders else "B1"
            out.append(f'  <IED name="{sub}/{sub}MX{i}">')
            out.append(f'    <Measurement path="MMXU1.PhV" element="{sub}/{bus}" quantity="v_pu"/>')
            out.append('  </IED>')
    out.append("</IEDConfig>")
    return ("\n".join(out) + "\n").encode()


def _multisub_scada(subs: list[str]) -> bytes:
    main = subs[0]
    second = subs[1]
    tie0 = f"{main}/TIE-{second}-0"
    out = [f"{_XML}<ScadaConfig>"]
    out.append(f'  <DataSource name="f1" host="{main}/{main}F1" protocol="mms"/>')
    out.append(f'  <DataSource name="bv1" host="{main}/{main}BV1" protocol="mms"/>')
    out.append(f'  <DataSource name="dp1" host="{main}/{main}DP1" protocol="mms"/>')
    out.append(f'  <DataSource name="rbv" host="{second}/{second}BV1" protocol="mms"/>')
    out.append('  <DataPoint id="i_f1" source="f1" path="MMXU1.A" kind="measurement" display="Feeder 1 Current" unit="A"/>')
    out.append('  <DataPoint id="v_b1" source="bv1" path="MMXU1.PhV" kind="measurement" display="Bus 1 Voltage" unit="pu"/>')
    out.append(f'  <DataPoint id="i_tie" source="dp1" path="MMXU1.A" kind="measurement" display="Tie {tie0} Current" unit="A"/>')
    out.append('  <DataPoint id="v_remote" source="rbv" path="MMXU1.PhV" kind="measurement" display="Remote Bus Voltage" unit="pu"/>')
    out.append('  <DataPoint id="cb_f1_pos" source="f1" path="XCBR1.Pos" kind="status" display="Feeder 1 CB" unit=""/>')
    out.append('  <DataPoint id="cb_f1_cmd" source="f1" path="XCBR1.Pos" kind="control" display="Feeder 1 CB Control" unit=""/>')
    out.append("</ScadaConfig>")
    return ("\n".join(out) + "\n").encode()


def multisub_files(n_substations: int = 5) -> dict[str, bytes]:
    """The multi-substation file set: SSD/SCD per substation, SEDs, configs."""
    subs = [f"SUB{i}" for i in range(1, n_substations + 1)]
    files: dict[str, bytes] = {}
    plan = _multisub_ied_plan(subs)

    for idx, sub in enumerate(subs):
        files[f"{sub.lower()}.ssd.xml"] = _sub_ssd(sub, main=idx == 0)
        hosts = []
        for j, (name, _lns) in enumerate(plan[sub]):
            hosts.append((name, "IED", f"10.0.{idx + 1}.{11 + j}",
                          f"00-00-00-{idx + 1:02X}-00-{11 + j:02X}"))
        if idx == 0:
            hosts.append(("SCADA", "SCADA", f"10.0.{idx + 1}.250", f"00-00-00-{idx + 1:02X}-00-FA"))
            hosts.append(("ATK", "ATTACKER", f"10.0.{idx + 1}.251", f"00-00-00-{idx + 1:02X}-00-FB"))
        files[f"{sub.lower()}.scd.xml"] = _scd(sub, hosts, f"{sub}NET")
        for name, lns in plan[sub]:
            files[f"icd/{name.lower()}.icd.xml"] = _icd(name, lns)

    for k, other in enumerate(subs[1:], start=1):
        files[f"sed_{subs[0].lower()}_{other.lower()}.sed.xml"] = _sed(
            subs[0], f"LB{4 + k}", other, "B0")

    files["ied_config.xml"] = _multisub_ied_config(subs)
    files["scada_config.xml"] = _multisub_scada(subs)
    files["ps_extra.xml"] = (
        f'{_XML}<PowerSystemExtra>\n'
        f'  <Entry tick="100" target="{subs[0]}/LD2" field="load_p" value="2.5"/>\n'
        f'  <Entry tick="300" target="{subs[2]}/LD3" field="load_p" value="0.6"/>\n'
        f'  <Entry tick="450" target="{subs[0]}/LD1" field="load_p" value="1.0"/>\n'
        f'</PowerSystemExtra>\n').encode()
    return files


FIXTURE_KINDS = ("epic", "multisub")


def write_fixture(kind: str, outdir: str | Path) -> list[str]:
    """Write a named fixture file set to a directory; returns the paths."""
    generators = {"epic": epic_files, "multisub": multisub_files}
    if kind not in generators:
        raise ValueError(f"unknown fixture kind {kind!r}; pick one of {FIXTURE_KINDS}")
    files = generators[kind]()
    out = Path(outdir)
    written = []
    for name, blob in files.items():
        path = out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(blob)
        written.append(str(path))
    return written
