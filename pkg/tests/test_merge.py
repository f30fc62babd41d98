import itertools
import random

import pytest

from sgml.build import build_range_model, load_sources_from_dir
from sgml.fixtures import multisub_files
from sgml.merge import MergeError, MergePlan, merge_scd, merge_ssd
from sgml.model import SourceKind, validate_model
from sgml.parsing import parse_scd, parse_sed, parse_ssd, source_from_bytes


@pytest.fixture(scope="module")
def multisub_parts():
    files = multisub_files()
    subs = {}
    seds = []
    for name, data in files.items():
        src = source_from_bytes(data, name)
        if name.endswith(".ssd.xml"):
            model, _ = parse_ssd(src)
            subs.setdefault(model.name, {})["ssd"] = model
        elif name.endswith(".scd.xml"):
            cyber, _ = parse_scd(src)
            sub = cyber.subnetworks[0].substation
            subs.setdefault(sub, {})["scd"] = cyber
        elif name.startswith("sed_"):
            link, _ = parse_sed(src)
            seds.append(link)
    pairs = tuple((entry["ssd"], entry["scd"]) for _, entry in sorted(subs.items()))
    return pairs, tuple(seds)


class TestMergeArithmetic:
    def test_branch_count_is_sum_plus_ties(self, multisub_parts):
        pairs, seds = multisub_parts
        merged = merge_ssd(MergePlan(pairs, seds))
        per_sub = sum(len(sub.branches) for sub, _ in pairs)
        assert len(merged.branches) == per_sub + len(seds)
        assert len(seds) == 4

    def test_bus_count_is_sum(self, multisub_parts):
        pairs, seds = multisub_parts
        merged = merge_ssd(MergePlan(pairs, seds))
        assert len(merged.buses) == sum(len(sub.buses) for sub, _ in pairs)

    def test_exactly_one_wan_switch_with_uplinks(self, multisub_parts):
        pairs, seds = multisub_parts
        merged = merge_scd(MergePlan(pairs, seds))
        wans = [s for s in merged.switches if s.subnetwork == ""]
        assert len(wans) == 1
        uplinks = [l for l in merged.links
                   if wans[0].name in (l.endpoint_a, l.endpoint_b)]
        assert len(uplinks) == 5

    def test_host_count_is_sum(self, multisub_parts):
        pairs, seds = multisub_parts
        merged = merge_scd(MergePlan(pairs, seds))
        assert len(merged.hosts) == sum(len(c.hosts) for _, c in pairs)

    def test_exactly_one_grid_slack_survives(self, multisub_parts):
        pairs, seds = multisub_parts
        merged = merge_ssd(MergePlan(pairs, seds))
        slacks = [s for s in merged.sources if s.kind == SourceKind.GRID_SLACK]
        assert len(slacks) == 1
        assert slacks[0].id == "SUB1/GRID"  # smallest substation name keeps it
        demoted = [s for s in merged.sources
                   if s.id.endswith("/GRID") and s.kind == SourceKind.GENERATOR]
        assert len(demoted) == 4

    def test_merged_model_validates(self, multisub_parts):
        pairs, seds = multisub_parts
        from sgml.model import RangeModel
        merged_sub = merge_ssd(MergePlan(pairs, seds))
        merged_cyber = merge_scd(MergePlan(pairs, seds))
        model = RangeModel(substation=merged_sub, cyber=merged_cyber)
        assert [v for v in validate_model(model)] == []


class TestIdentityMerge:
    def test_single_substation_prefixes_only(self, multisub_parts):
        pairs, _ = multisub_parts
        sub, cyber = pairs[0]
        merged = merge_ssd(MergePlan(((sub, cyber),)))
        assert merged.name == ""
        assert len(merged.branches) == len(sub.branches)
        assert all(b.id.startswith("SUB1/") for b in merged.buses)
        merged_cyber = merge_scd(MergePlan(((sub, cyber),)))
        assert merged_cyber.wan_switch() is None


class TestErrors:
    def test_missing_tie_endpoint(self, multisub_parts):
        from dataclasses import replace
        pairs, seds = multisub_parts
        broken = (replace(seds[0], from_bus="SUB1/GHOST"),) + seds[1:]
        with pytest.raises(MergeError):
            merge_ssd(MergePlan(pairs, broken))

    def test_duplicate_substation_names(self, multisub_parts):
        pairs, seds = multisub_parts
        with pytest.raises(MergeError):
            merge_ssd(MergePlan((pairs[0], pairs[0]), seds))

    def test_disconnected_sed_graph(self, multisub_parts):
        pairs, seds = multisub_parts
        with pytest.raises(MergeError, match="unreachable"):
            merge_ssd(MergePlan(pairs, seds[:2]))

    def test_cross_substation_ip_collision(self, multisub_parts):
        from dataclasses import replace
        pairs, seds = multisub_parts
        sub2, cyber2 = pairs[1]
        stolen = pairs[0][1].hosts[0].ip
        clashed = replace(cyber2, hosts=(replace(cyber2.hosts[0], ip=stolen),)
                          + cyber2.hosts[1:])
        plan = MergePlan((pairs[0], (sub2, clashed)) + pairs[2:], seds)
        with pytest.raises(MergeError, match="IP collision"):
            merge_scd(plan)


class TestPermutationInvariance:
    def test_all_orderings_of_three_substations(self, multisub_parts):
        pairs, seds = multisub_parts
        trio = pairs[:3]
        links = tuple(s for s in seds
                      if {s.from_substation, s.to_substation} <=
                      {"SUB1", "SUB2", "SUB3"})
        reference_sub = merge_ssd(MergePlan(trio, links))
        reference_cyber = merge_scd(MergePlan(trio, links))
        for ordering in itertools.permutations(trio):
            assert merge_ssd(MergePlan(tuple(ordering), links)) == reference_sub
            assert merge_scd(MergePlan(tuple(ordering), links)) == reference_cyber

    def test_all_120_orderings_of_five_substations(self, multisub_parts):
        pairs, seds = multisub_parts
        reference = merge_ssd(MergePlan(pairs, seds))
        count = 0
        for ordering in itertools.permutations(pairs):
            assert merge_ssd(MergePlan(tuple(ordering), seds)) == reference
            count += 1
        assert count == 120

    def test_sed_order_irrelevant(self, multisub_parts):
        pairs, seds = multisub_parts
        reference = merge_ssd(MergePlan(pairs, seds))
        rng = random.Random(11)
        for _ in range(5):
            shuffled = list(seds)
            rng.shuffle(shuffled)
            assert merge_ssd(MergePlan(pairs, tuple(shuffled))) == reference
