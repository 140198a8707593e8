"""Judge one countermeasure against one attack scenario."""

from typing import TYPE_CHECKING

from loguru import logger

from rowhammer_sim.attack.pipeline import run_scenario
from rowhammer_sim.attack.schema import AttackOutcome, OutcomeStatus
from rowhammer_sim.defense.registry import defense_name
from rowhammer_sim.defense.schema import Countermeasure, DefenseVerdict, VerdictKind

if TYPE_CHECKING:
    from rowhammer_sim.config import ScenarioConfig


def verdict_from(
    countermeasure: str, scenario: str, baseline: AttackOutcome, defended: AttackOutcome
) -> DefenseVerdict:
    if baseline.status is not OutcomeStatus.SUCCESS:
        return DefenseVerdict(
            countermeasure=countermeasure,
            scenario=scenario,
            result=VerdictKind.NOT_APPLICABLE,
            mechanism=f"attack fails unprotected: {baseline.status}",
        )
    if defended.status is OutcomeStatus.SUCCESS:
        mechanism = ", ".join(t for t in defended.exercised)
        return DefenseVerdict(
            countermeasure=countermeasure, scenario=scenario, result=VerdictKind.BYPASSED, mechanism=mechanism
        )
    return DefenseVerdict(
        countermeasure=countermeasure,
        scenario=scenario,
        result=VerdictKind.BLOCKED,
        stage=defended.failed_stage,
        mechanism=f"{defended.status}: {defended.detail}",
    )


def evaluate(countermeasure: Countermeasure, config: "ScenarioConfig") -> DefenseVerdict:
    """Run the scenario without and with the countermeasure installed and compare."""
    baseline = run_scenario(config.model_copy(update={"defenses": []}))
    defended = run_scenario(config.model_copy(update={"defenses": [countermeasure]}))
    verdict = verdict_from(defense_name(countermeasure), config.name, baseline, defended)
    logger.debug(f"{verdict.countermeasure} vs {config.name}: {verdict.result} {verdict.stage or ''}")
    return verdict
