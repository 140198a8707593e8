"""Property-based tests for scenario config parsing and the feasibility matrix."""
# IMMUTABLE: Do not modify these tests. Fix implementation if tests fail.

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rowhammer_sim.attack.capabilities import capabilities, check_feasibility
from rowhammer_sim.attack.schema import (
    AttackScenario,
    BypassTechnique,
    Capability,
    EvMethod,
    LpTechnique,
    Origin,
    PatternTechnique,
    Stage,
    TargetClass,
    TargetKind,
    VictimProperty,
)
from rowhammer_sim.config import ScenarioConfig, parse_config
from rowhammer_sim.dram.schema import RowPolicyKind
from rowhammer_sim.errors import ConfigSyntaxError, ConstraintViolationError, UnknownIdentifierError

MINIMAL = """\
[attack]
origin = "UPro"
target_class = "DPUO"
lp = "A2"
bypass = "Ba3"
pattern = "Bb2"
ev = "C2"
"""


def _scenario(**fields) -> AttackScenario:
    base = {
        "origin": "UPro",
        "target_class": "EPRO",
        "lp": "A1",
        "bypass": "Ba1",
        "pattern": "Bb1",
        "ev": "C1",
    }
    return AttackScenario.model_validate(base | fields)


# ── Parsing ──────────────────────────────────────────────────────────────────


def test_minimal_config_gets_documented_defaults():  # A
    cfg = parse_config(MINIMAL)
    assert cfg.seed == 0
    assert cfg.dram.geometry.banks_per_rank == 2
    assert cfg.dram.geometry.rows_per_bank == 32
    assert cfg.dram.geometry.bytes_per_row == 256
    assert cfg.dram.refresh.interval == 1024
    assert cfg.os.frame_bytes == 128
    assert cfg.attack.budget == 4096
    assert cfg.attack.target_kind is TargetKind.PAGE_TABLE
    assert cfg.fault_map.templates[0].page_offsets == [16]
    assert cfg.defenses == []


def test_unknown_technique_names_the_field():  # A
    with pytest.raises(UnknownIdentifierError) as info:
        parse_config(MINIMAL.replace('lp = "A2"', 'lp = "A5"'))
    assert info.value.field == "attack.lp"
    assert info.value.line == 4


def test_unknown_key_is_an_unknown_identifier():  # A
    with pytest.raises(UnknownIdentifierError):
        parse_config(MINIMAL + "hammer_speed = 3\n")


def test_unknown_countermeasure_kind_rejected():  # A
    with pytest.raises(UnknownIdentifierError):
        parse_config(MINIMAL + '\n[[defenses]]\nkind = "magic"\n')


def test_toml_syntax_error_reports_line():  # A
    with pytest.raises(ConfigSyntaxError) as info:
        parse_config(MINIMAL + "budget = = 3\n")
    assert info.value.line == 8


@pytest.mark.parametrize(
    "extra",
    [
        "[os]\nframe_bytes = 96\n",
        "[dram.geometry]\nbytes_per_row = 100\n",
        "[[fault_map.entries]]\nvictim = { row = 40 }\ndirection = \"1to0\"\nthreshold = 8\n",
    ],
)
def test_constraint_violations(extra):  # A
    with pytest.raises(ConstraintViolationError):
        parse_config(MINIMAL + extra)


def test_budget_must_be_positive():  # A
    with pytest.raises(ConstraintViolationError) as info:
        parse_config(MINIMAL + "budget = 0\n")
    assert info.value.field == "attack.budget"


def test_infeasible_combination_still_parses():  # A
    """Feasibility is judged at run time, not parse time."""
    cfg = parse_config(MINIMAL.replace('"UPro"', '"Website"').replace('"Ba3"', '"Ba1"'))
    assert cfg.attack.origin is Origin.WEBSITE
    assert not check_feasibility(cfg.attack).feasible


@given(seed=st.integers(min_value=0, max_value=2**32))
@settings(max_examples=20)
def test_digest_is_stable_and_seed_sensitive(seed):  # A
    a = parse_config(MINIMAL).model_copy(update={"seed": seed})
    b = ScenarioConfig.from_dict(a.model_dump(mode="json"))
    assert a.digest() == b.digest()
    assert a.digest() != a.model_copy(update={"seed": seed + 1}).digest()


# ── Feasibility ──────────────────────────────────────────────────────────────


@pytest.mark.parametrize(
    "fields, stage",
    [
        ({"origin": "Website", "bypass": "Ba1"}, Stage.RH),
        ({"origin": "Website", "bypass": "Ba3"}, Stage.RH),
        ({"origin": "Network", "bypass": "Ba2", "target_class": "EPUO", "ev": "C2"}, Stage.RH),
        ({"origin": "Network", "target_class": "EPUO", "ev": "C2", "victim_properties": ["victim_flushes_packets"]}, Stage.EV),
        ({"target_class": "DPRO", "lp": "A1"}, Stage.LP),
        ({"target_class": "DPUO", "ev": "C1"}, Stage.EV),
        ({"origin": "UPro", "lp": "A3"}, Stage.LP),
        ({"origin": "PPro", "lp": "A3", "target_class": "DPUO", "ev": "C2"}, Stage.LP),
        ({"origin": "Website", "lp": "A2", "bypass": "Ba2", "se": True, "target_class": "EPUO", "ev": "C2"}, Stage.SE),
        ({"origin": "Website", "lp": "A2", "bypass": "None", "target_class": "EPUO", "ev": "C2"}, Stage.RH),
    ],
)
def test_infeasible_combinations(fields, stage):  # A
    verdict = check_feasibility(_scenario(**fields))
    assert not verdict.feasible
    assert stage in verdict.offending
    assert verdict.reasons


@pytest.mark.parametrize(
    "fields",
    [
        {"lp": "A2", "bypass": "Ba3", "pattern": "Bb2", "target_class": "DPUO", "ev": "C2"},
        {"origin": "Website", "bypass": "Ba2", "target_class": "DPUO", "ev": "C2"},
        {"origin": "PPro", "lp": "A3", "pattern": "Bb2"},
        {
            "origin": "Network",
            "lp": "A2",
            "bypass": "Ba3",
            "pattern": "Bb2",
            "target_class": "DPUO",
            "ev": "C2",
            "victim_properties": ["rdma", "behavior_observable"],
        },
    ],
)
def test_feasible_combinations(fields):  # A
    assert check_feasibility(_scenario(**fields)).feasible


def test_one_location_needs_closed_rows():  # A
    scenario = _scenario(pattern="Bb3", lp="A4", target_class="DPRO")
    assert not check_feasibility(scenario, row_policy=RowPolicyKind.OPEN).feasible
    assert check_feasibility(scenario, row_policy=RowPolicyKind.CLOSE).feasible
    assert check_feasibility(scenario, row_policy=RowPolicyKind.ADAPTIVE).feasible


def test_one_location_from_website_is_flagged_not_rejected():  # A
    scenario = _scenario(origin="Website", lp="A2", bypass="Ba2", pattern="Bb3", target_class="EPUO", ev="C2")
    verdict = check_feasibility(scenario, row_policy=RowPolicyKind.CLOSE)
    assert verdict.feasible
    assert any("precedent" in note for note in verdict.notes)


def test_double_sided_without_address_knowledge_rejected():  # A
    scenario = _scenario(origin="Website", lp="A1", bypass="Ba2", pattern="Bb2", target_class="DPUO", ev="C2")
    assert check_feasibility(scenario).feasible
    no_huge = check_feasibility(scenario, revoked=frozenset({Capability.HUGE_PAGES}))
    assert not no_huge.feasible


def test_revoked_flush_falls_back_to_non_temporal():  # A
    revoked = frozenset({Capability.FLUSH_INSTRUCTION})
    assert check_feasibility(_scenario(), revoked=revoked).feasible
    assert not check_feasibility(_scenario(flush_mode="clflush"), revoked=revoked).feasible


def test_network_capabilities_come_from_victim_properties():  # A
    assert capabilities(Origin.NETWORK) == frozenset({Capability.PACKET_ONLY})
    borrowed = capabilities(Origin.NETWORK, [VictimProperty.RDMA, VictimProperty.INTEL_CAT])
    assert Capability.UNCACHED_RDMA in borrowed and Capability.EVICTION_SETS in borrowed
    # Local origins ignore victim properties.
    assert capabilities(Origin.UPRO, [VictimProperty.RDMA]) == capabilities(Origin.UPRO)


@given(
    budget=st.integers(min_value=1, max_value=100000),
    attempts=st.integers(min_value=1, max_value=500),
    distance=st.integers(min_value=1, max_value=4),
    origin=st.sampled_from(list(Origin)),
    bypass=st.sampled_from(list(BypassTechnique)),
    lp=st.sampled_from([LpTechnique.A1, LpTechnique.A2, LpTechnique.A4]),
)
@settings(max_examples=100)
def test_feasibility_ignores_non_matrix_fields(budget, attempts, distance, origin, bypass, lp):  # A
    """Only origin and techniques decide feasibility."""
    fields = {
        "origin": origin,
        "target_class": TargetClass.EPUO,
        "lp": lp,
        "bypass": bypass,
        "pattern": PatternTechnique.BB1,
        "ev": EvMethod.C2,
    }
    plain = check_feasibility(AttackScenario(**fields))
    varied = check_feasibility(
        AttackScenario(**fields, budget=budget, lp_attempts=attempts, aggressor_distance=distance)
    )
    assert plain.feasible == varied.feasible
    assert plain.reasons == varied.reasons
