"""Integration tests for countermeasure evaluation against single scenarios."""
# IMMUTABLE: Do not modify these tests. Fix implementation if tests fail.

import pytest

from rowhammer_sim.attack.pipeline import run_scenario
from rowhammer_sim.attack.schema import OutcomeStatus, Stage
from rowhammer_sim.config import ScenarioConfig
from rowhammer_sim.defense.evaluate import evaluate
from rowhammer_sim.defense.registry import DEFENSE_REGISTRY, defense_name
from rowhammer_sim.defense.schema import (
    Anvil,
    DefenseVerdict,
    DisallowFlush,
    Ecc,
    FootprintDetector,
    Gcatt,
    HashTree,
    VerdictKind,
    ZebRam,
)

PAGE_TABLE = {"origin": "UPro", "target_class": "DPUO", "lp": "A2", "bypass": "Ba1", "ev": "C2"}
POINTER = {"origin": "UPro", "target_class": "EPRO", "lp": "A1", "bypass": "Ba1", "ev": "C1"}
SHARED_BINARY = {"origin": "UPro", "target_class": "DPRO", "lp": "A4", "bypass": "Ba1", "pattern": "Bb3", "ev": "C1"}


def _config(attack: dict, *, close_page: bool = False, **extra) -> ScenarioConfig:
    data = {"name": "probe", "attack": {"pattern": "Bb1"} | attack} | extra
    if close_page:
        data["dram"] = {"row_policy": {"kind": "close"}}
    return ScenarioConfig.from_dict(data)


def test_every_countermeasure_kind_is_registered():  # A
    assert len(DEFENSE_REGISTRY) == 14
    assert defense_name(ZebRam()) == "ZebRAM"


def test_blocked_verdict_requires_a_stage():  # A
    with pytest.raises(ValueError):
        DefenseVerdict(countermeasure="ECC", scenario="x", result=VerdictKind.BLOCKED)


# ── Refresh-side ─────────────────────────────────────────────────────────────


def test_anvil_catches_double_sided_but_not_one_location():  # A
    double = evaluate(Anvil(), _config(POINTER | {"pattern": "Bb2"}))
    assert double.result is VerdictKind.BLOCKED
    assert double.stage is Stage.RH

    single = evaluate(Anvil(), _config(SHARED_BINARY, close_page=True))
    assert single.result is VerdictKind.BYPASSED


def test_disallowing_flush_falls_back_to_non_temporal_stores():  # A
    verdict = evaluate(DisallowFlush(), _config(POINTER))
    assert verdict.result is VerdictKind.BYPASSED


def test_hash_tree_reports_detection():  # A
    config = _config(POINTER, defenses=[{"kind": "hash_tree"}])
    outcome = run_scenario(config)
    assert outcome.status is OutcomeStatus.DETECTED
    assert outcome.detected_by == defense_name(HashTree())
    assert outcome.failed_stage is Stage.RH


# ── Integrity ────────────────────────────────────────────────────────────────


def test_ecc_corrects_a_lone_flip():  # A
    verdict = evaluate(Ecc(), _config(POINTER))
    assert verdict.result is VerdictKind.BLOCKED
    assert verdict.stage is Stage.RH


def test_ecc_passes_crafted_multibit_flips():  # A
    config = _config(
        PAGE_TABLE | {"lp": "A1", "eccploit": True},
        fault_map={"templates": [{"page_offsets": [16, 20, 22], "slots": [0]}]},
    )
    assert evaluate(Ecc(), config).result is VerdictKind.BYPASSED


# ── Placement-side ───────────────────────────────────────────────────────────


def test_gcatt_isolates_page_tables_but_not_shared_binaries():  # A
    blocked = evaluate(Gcatt(), _config(PAGE_TABLE))
    assert blocked.result is VerdictKind.BLOCKED
    assert blocked.stage is Stage.EV

    bypassed = evaluate(Gcatt(), _config(SHARED_BINARY, close_page=True))
    assert bypassed.result is VerdictKind.BYPASSED


@pytest.mark.parametrize("attack", [PAGE_TABLE | {"pattern": "Bb2"}, POINTER | {"lp": "A2"}])
def test_zebram_guard_rows_absorb_the_hammering(attack):  # A
    verdict = evaluate(ZebRam(), _config(attack))
    assert verdict.result is VerdictKind.BLOCKED
    assert verdict.stage is Stage.EV


def test_footprint_detector_flags_wide_spray():  # A
    config = _config(
        PAGE_TABLE | {"lp": "A1"},
        fault_map={"templates": [{"rows": [14], "page_offsets": [16]}]},
    )
    verdict = evaluate(FootprintDetector(max_fraction=0.1), config)
    assert verdict.result is VerdictKind.BLOCKED
    assert verdict.stage is Stage.LP


def test_countermeasure_against_failing_attack_is_not_applicable():  # A
    config = _config(POINTER, fault_map={})
    verdict = evaluate(Anvil(), config)
    assert verdict.result is VerdictKind.NOT_APPLICABLE
    assert verdict.stage is None
