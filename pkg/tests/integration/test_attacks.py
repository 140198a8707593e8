"""Integration tests for end-to-end attack runs and the expressive UID attack."""
# IMMUTABLE: Do not modify these tests. Fix implementation if tests fail.

import tomllib
from pathlib import Path

import pytest

from rowhammer_sim.attack.pipeline import run_expressive_attack, run_scenario
from rowhammer_sim.attack.schema import BitTarget, LpTechnique, OutcomeStatus, Stage
from rowhammer_sim.config import ScenarioConfig
from rowhammer_sim.replication import corpus_root

CONFIGS = Path(__file__).parents[2] / "configs"


def _variant(filename: str, name: str) -> ScenarioConfig:
    with open(corpus_root() / "table1" / filename, "rb") as f:
        data = tomllib.load(f)
    variant = next(v for v in data["variant"] if v["name"] == name)
    return ScenarioConfig.from_dict(variant)


def _attack(**fields) -> ScenarioConfig:
    attack = {
        "origin": "UPro",
        "target_class": "EPRO",
        "lp": "A1",
        "bypass": "Ba1",
        "pattern": "Bb1",
        "ev": "C1",
    } | fields
    return ScenarioConfig.from_dict({"name": "adhoc", "attack": attack})


@pytest.fixture
def expressive_config():  # A
    return ScenarioConfig.from_toml(CONFIGS / "expressive.toml")


# ── Single scenarios ─────────────────────────────────────────────────────────


@pytest.mark.parametrize(
    "filename, variant",
    [
        ("08_drammer.toml", "drammer"),
        ("04_rowhammer_js.toml", "rowhammer-js-native"),
        ("04_rowhammer_js.toml", "rowhammer-js-website"),
    ],
)
def test_historical_variants_succeed(filename, variant):  # A
    outcome = run_scenario(_variant(filename, variant))
    assert outcome.status is OutcomeStatus.SUCCESS
    assert outcome.failed_stage is None
    assert outcome.placement.placed
    assert outcome.hammer.flips


def test_drammer_exercises_its_techniques():  # A
    outcome = run_scenario(_variant("08_drammer.toml", "drammer"))
    assert set(outcome.exercised) == {"UPro", "DPUO", "A2", "Ba3", "Bb2", "C2"}


def test_bundled_gain_kernel_config_succeeds():  # A
    outcome = run_scenario(ScenarioConfig.from_toml(CONFIGS / "gain_kernel.toml"))
    assert outcome.status is OutcomeStatus.SUCCESS
    assert "Ba1" in outcome.exercised


def test_runs_are_deterministic():  # A
    config = _variant("08_drammer.toml", "drammer")
    first = run_scenario(config).model_dump(mode="json")
    second = run_scenario(config).model_dump(mode="json")
    assert first == second


def test_infeasible_combination_runs_no_stage():  # A
    outcome = run_scenario(_attack(origin="Website", target_class="DPUO", ev="C2"))
    assert outcome.status is OutcomeStatus.INFEASIBLE
    assert outcome.failed_stage is Stage.RH
    assert outcome.placement is None and outcome.hammer is None
    assert outcome.exercised == []


def test_no_weak_cells_means_no_placement():  # A
    data = _attack().model_dump(mode="json") | {"fault_map": {}}
    outcome = run_scenario(ScenarioConfig.from_dict(data))
    assert outcome.status is OutcomeStatus.PLACEMENT_FAILED
    assert outcome.failed_stage is Stage.LP
    assert outcome.hammer is None


# ── Expressive attack ────────────────────────────────────────────────────────


def test_expressive_attack_rewrites_uid_bit_by_bit(expressive_config):  # A
    outcome = run_expressive_attack(expressive_config)
    assert outcome.status is OutcomeStatus.SUCCESS
    assert [loop.disk_field for loop in outcome.loops] == ["0001", "0000"]
    assert [loop.placement.victim_frame for loop in outcome.loops] == [6, 10]
    assert [loop.placement.attempts for loop in outcome.loops] == [4, 6]
    assert "SE" in outcome.exercised


def test_expressive_attack_stops_at_missing_weak_cell(expressive_config):  # A
    """Without a weak cell under the last UID digit, the second loop never finds a placement."""
    data = expressive_config.model_dump(mode="json")
    data["fault_map"]["entries"] = data["fault_map"]["entries"][:1]
    outcome = run_expressive_attack(ScenarioConfig.from_dict(data))
    assert outcome.status is OutcomeStatus.PLACEMENT_FAILED
    assert outcome.failed_stage is Stage.LP
    assert len(outcome.loops) == 2
    assert outcome.loops[0].disk_field == "0001"
    assert outcome.loops[1].disk_field == "0001"


def test_expressive_attack_with_no_targets_is_trivially_done(expressive_config):  # A
    outcome = run_expressive_attack(expressive_config, targets=[])
    assert outcome.status is OutcomeStatus.SUCCESS
    assert outcome.loops == []


def test_expressive_attack_needs_persistence(expressive_config):  # A
    config = expressive_config.model_copy(
        update={"attack": expressive_config.attack.model_copy(update={"se": False})}
    )
    outcome = run_expressive_attack(config, targets=[BitTarget(byte=0, bit=0)])
    assert outcome.status is OutcomeStatus.INFEASIBLE
    assert outcome.failed_stage is Stage.SE


def test_expressive_attack_without_lp_technique_records_none_of_it(expressive_config):  # A
    config = expressive_config.model_copy(
        update={"attack": expressive_config.attack.model_copy(update={"lp": LpTechnique.NONE})}
    )
    outcome = run_expressive_attack(config)
    assert outcome.loops
    assert "None" not in outcome.exercised
    assert outcome.exercised[:2] == ["UPro", "DPRO"]
