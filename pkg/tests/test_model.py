import random
from dataclasses import replace

import pytest

from sgml.model import (
    CyberModel,
    Host,
    HostRole,
    IedSpec,
    Link,
    ProtectionThresholds,
    Quantity,
    RangeModel,
    ScenarioTimeline,
    SubNetwork,
    SwitchNode,
    SwitchState,
    TimelineEntry,
    TimelineField,
    UnknownElementError,
    checked_element_key,
    element_key,
    validate_model,
)
from tests.conftest import breaker, line, load, slack, small_model


def minimal_cyber(n_hosts=2):
    hosts = tuple(
        Host(f"IED{i}", HostRole.IED, f"10.0.0.{i+1}", f"00-00-00-00-00-{i+1:02X}", "SN1")
        for i in range(n_hosts)
    )
    links = tuple(Link(h.name, "SN1-SW", 0) for h in hosts)
    return CyberModel(
        subnetworks=(SubNetwork("SN1", "S1"),),
        hosts=hosts,
        switches=(SwitchNode("SN1-SW", "SN1"),),
        links=links,
    )


def minimal_range_model(**overrides):
    sub = small_model(
        ["B1", "B2", "B3"],
        branches=[line("L1", "B1", "B2")],
        switches=[breaker("CB1", "B2", "B3")],
        loads=[load("LD1", "B3", 5.0, 1.0)],
        sources=[slack("GRID", "B1")],
    )
    ied = IedSpec(name="IED0", logical_nodes=frozenset({"MMXU", "XCBR", "CSWI"}))
    fields = dict(substation=sub, cyber=minimal_cyber(), ieds=(ied,))
    fields.update(overrides)
    return RangeModel(**fields)


class TestValidate:
    def test_valid_fixture_has_no_violations(self):
        assert validate_model(minimal_range_model()) == []

    def test_threshold_without_logical_node_rejected(self):
        ied = IedSpec(name="IED0", logical_nodes=frozenset({"MMXU"}),
                      thresholds=ProtectionThresholds(ptov_limit_pu=1.1))
        violations = validate_model(minimal_range_model(ieds=(ied,)))
        assert any(v.code == "threshold-without-ln" and "IED0" in v.subject for v in violations)

    def test_protection_without_threshold_rejected(self):
        ied = IedSpec(name="IED0", logical_nodes=frozenset({"PTOV"}))
        violations = validate_model(minimal_range_model(ieds=(ied,)))
        assert any(v.code == "missing-threshold" and v.subject == "IED0" for v in violations)

    def test_duplicate_ip_flagged(self):
        cyber = minimal_cyber()
        dup = replace(cyber.hosts[1], ip=cyber.hosts[0].ip)
        cyber = replace(cyber, hosts=(cyber.hosts[0], dup))
        violations = validate_model(minimal_range_model(cyber=cyber))
        assert any(v.code == "duplicate-ip" for v in violations)

    def test_dangling_branch_endpoint(self):
        sub = small_model(["B1"], branches=[line("L1", "B1", "NOPE")],
                          sources=[slack("GRID", "B1")])
        violations = validate_model(minimal_range_model(substation=sub))
        assert any(v.code == "dangling-branch" for v in violations)

    def test_zero_reactance_branch_rejected(self):
        sub = small_model(["B1", "B2"], branches=[line("L1", "B1", "B2", r=0.0, x=0.0)],
                          sources=[slack("GRID", "B1")])
        violations = validate_model(minimal_range_model(substation=sub))
        assert any(v.code == "zero-impedance-branch" for v in violations)

    def test_scenario_switch_must_be_controlled(self):
        tl = ScenarioTimeline((TimelineEntry(5, "CB1", TimelineField.SWITCH_STATE,
                                             SwitchState.OPEN),))
        violations = validate_model(minimal_range_model(timeline=tl))
        assert any(v.code == "uncontrolled-switch" and v.subject == "CB1" for v in violations)

    def test_validation_is_order_insensitive(self):
        rng = random.Random(3)
        model = minimal_range_model(ieds=(
            IedSpec(name="IED0", logical_nodes=frozenset({"PTOC"})),      # missing threshold
            IedSpec(name="IED1", logical_nodes=frozenset({"MMXU"}),
                    thresholds=ProtectionThresholds(ptuv_limit_pu=0.9)),  # stray threshold
        ))
        base = set(validate_model(model))
        assert base
        for _ in range(5):
            sub = model.substation
            shuffled = replace(
                model,
                substation=replace(
                    sub,
                    buses=tuple(rng.sample(sub.buses, len(sub.buses))),
                    loads=tuple(rng.sample(sub.loads, len(sub.loads))),
                ),
                ieds=tuple(rng.sample(model.ieds, len(model.ieds))),
            )
            assert set(validate_model(shuffled)) == base
            assert set(validate_model(shuffled)) == base  # idempotent


class TestElementKey:
    def test_bus_voltage_key(self):
        assert element_key("S1/B2", Quantity.V_PU) == "S1/B2.v_pu"

    def test_switch_state_key(self):
        assert element_key("S1/CB4", Quantity.STATE) == "S1/CB4.state"

    def test_deterministic(self):
        a = element_key("S1/B2", Quantity.I_A)
        b = element_key("S1/B2", Quantity.I_A)
        assert a == b

    def test_checked_key_rejects_unknown_element(self):
        model = minimal_range_model().substation
        with pytest.raises(UnknownElementError):
            checked_element_key(model, "GHOST", Quantity.V_PU)

    def test_injective_over_model_elements(self):
        model = minimal_range_model().substation
        seen = {}
        for eid in sorted(model.element_ids()):
            for quantity in Quantity:
                key = element_key(eid, quantity)
                assert key not in seen, f"collision: {key}"
                seen[key] = (eid, quantity)

    def test_injective_with_dotted_ids(self):
        # ids may contain dots; quantity tokens never suffix-collide
        ids = ["A.B", "A", "B.v", "X.state.Y"]
        seen = set()
        for eid in ids:
            for quantity in Quantity:
                key = element_key(eid, quantity)
                assert key not in seen
                seen.add(key)
