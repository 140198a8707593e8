"""Attack orchestration: feasibility, then LP -> RH -> EV -> optional SE."""

from typing import TYPE_CHECKING

from loguru import logger

from rowhammer_sim.attack.capabilities import check_feasibility
from rowhammer_sim.attack.hammer import run_rh
from rowhammer_sim.attack.location import run_lp
from rowhammer_sim.attack.persist import run_se
from rowhammer_sim.attack.schema import (
    AttackOutcome,
    BitTarget,
    BypassTechnique,
    EvResult,
    ExpectedFlip,
    FeasibilityVerdict,
    LoopRecord,
    LpTechnique,
    OutcomeStatus,
    PersistResult,
    Stage,
    TargetKind,
)
from rowhammer_sim.attack.targets import PasswdVictim, make_victim
from rowhammer_sim.attack.verify import run_ev
from rowhammer_sim.attack.world import World
from rowhammer_sim.errors import DefenseDetected
from rowhammer_sim.osmem.passwd import PASSWD_PATH, locate_field

if TYPE_CHECKING:
    from rowhammer_sim.config import ScenarioConfig


def _feasibility(world: World) -> FeasibilityVerdict:
    return check_feasibility(
        world.scenario, row_policy=world.dram.policy.kind, revoked=world.revoked
    )


def assess_feasibility(config: "ScenarioConfig") -> FeasibilityVerdict:
    """Feasibility of the configured combination against the installed countermeasures."""
    return _feasibility(World(config))


def _note(exercised: list[str], item: str) -> None:
    if item not in exercised:
        exercised.append(item)


# ── Single scenario ──────────────────────────────────────────────────────────


def run_scenario(
    config: "ScenarioConfig", *, with_defenses: bool = True, world: World | None = None
) -> AttackOutcome:
    """Run one scenario end to end. Stage failures are encoded in the outcome, never raised."""
    world = world or World(config, with_defenses=with_defenses)
    scenario = world.scenario
    verdict = _feasibility(world)
    outcome = AttackOutcome(name=config.name, status=OutcomeStatus.SUCCESS, feasibility=verdict)
    if not verdict.feasible:
        outcome.status = OutcomeStatus.INFEASIBLE
        outcome.failed_stage = verdict.offending[0] if verdict.offending else None
        outcome.detail = "; ".join(verdict.reasons)
        logger.debug(f"{config.name}: infeasible ({outcome.detail})")
        return outcome

    world.provision_attacker()
    victim = make_victim(world, scenario.target_kind)
    exercised = outcome.exercised
    exercised += [scenario.origin.value, scenario.target_class.value]

    stage = Stage.LP
    try:
        outcome.placement = placement = run_lp(world, victim)
        if scenario.lp is not LpTechnique.NONE:
            _note(exercised, scenario.lp.value)
        for defense in world.defenses:
            defense.after_lp(world, placement)
        if not placement.placed:
            return _fail(outcome, OutcomeStatus.PLACEMENT_FAILED, stage, "no usable placement")

        stage = Stage.RH
        outcome.hammer = hammer = run_rh(world, placement)
        if hammer.accesses:
            if scenario.bypass is not BypassTechnique.NONE:
                _note(exercised, scenario.bypass.value)
            _note(exercised, scenario.pattern.value)
        if not hammer.flips:
            return _fail(outcome, OutcomeStatus.NO_FLIP, stage, hammer.mechanism)

        stage = Stage.EV
        outcome.verify = verify = run_ev(world, victim, placement, hammer)
        _note(exercised, scenario.ev.value)
        if verify.result is not EvResult.VERIFIED:
            return _fail(outcome, OutcomeStatus.WRONG_FLIP, stage, f"observed {verify.observed}")

        if scenario.se:
            stage = Stage.SE
            outcome.persist = persist = run_se(world, victim, hammer)
            _note(exercised, "SE")
            if persist.result is not PersistResult.PERSISTED:
                return _fail(outcome, OutcomeStatus.NOT_PERSISTED, stage, "flip not on disk")
    except DefenseDetected as e:
        outcome.status = OutcomeStatus.DETECTED
        outcome.failed_stage = stage
        outcome.detected_by = e.countermeasure
        outcome.detail = e.detail
        logger.debug(f"{config.name}: detected by {e.countermeasure} during {stage}")
        return outcome

    logger.debug(f"{config.name}: success ({', '.join(exercised)})")
    return outcome


def _fail(outcome: AttackOutcome, status: OutcomeStatus, stage: Stage, detail: str) -> AttackOutcome:
    outcome.status = status
    outcome.failed_stage = stage
    outcome.detail = detail
    logger.debug(f"{outcome.name}: {status} at {stage} ({detail})")
    return outcome


# ── Expressive attack ────────────────────────────────────────────────────────


def _disk_uid(world: World) -> bytes:
    page = world.os.disk.read_page(PASSWD_PATH, 0)
    return locate_field(page, PASSWD_PATH, PasswdVictim.record, "uid").value


def run_expressive_attack(
    config: "ScenarioConfig", targets: list[BitTarget] | None = None
) -> AttackOutcome:
    """Loop LP -> RH -> EV -> SE once per target bit of the attacker's UID, accumulating on disk."""
    world = World(config)
    scenario = world.scenario
    targets = list(scenario.expressive_targets if targets is None else targets)

    verdict = _feasibility(world)
    if not scenario.se:
        verdict.feasible = False
        verdict.reasons.append("the expressive attack needs SE to accumulate flips")
        verdict.offending.append(Stage.SE)
    if scenario.target_kind is not TargetKind.PASSWD_UID:
        verdict.feasible = False
        verdict.reasons.append(f"the expressive attack rewrites the passwd UID, not {scenario.target_kind}")
        verdict.offending.append(Stage.LP)
    outcome = AttackOutcome(name=config.name, status=OutcomeStatus.SUCCESS, feasibility=verdict)
    if not verdict.feasible:
        outcome.status = OutcomeStatus.INFEASIBLE
        outcome.failed_stage = verdict.offending[0]
        outcome.detail = "; ".join(verdict.reasons)
        return outcome
    if not targets:
        return outcome

    world.provision_attacker()
    victim = PasswdVictim(world)
    span = victim.uid_span()
    goal = bytearray(span.value)
    for target in targets:
        goal[target.byte] ^= 1 << target.bit
    exercised = outcome.exercised
    exercised += [scenario.origin.value, scenario.target_class.value]

    for index, target in enumerate(targets, start=1):
        loop = LoopRecord(index=index, target=target)
        outcome.loops.append(loop)
        wanted = [
            ExpectedFlip(page_offset=span.offset + target.byte, bit=target.bit, direction=target.direction)
        ]
        stage = Stage.LP
        try:
            loop.placement = placement = run_lp(world, victim, wanted=wanted)
            if scenario.lp is not LpTechnique.NONE:
                _note(exercised, scenario.lp.value)
            for defense in world.defenses:
                defense.after_lp(world, placement)
            if not placement.placed:
                return _fail(outcome, OutcomeStatus.PLACEMENT_FAILED, stage, f"loop {index}: no usable placement")

            stage = Stage.RH
            loop.hammer = hammer = run_rh(world, placement)
            if scenario.bypass is not BypassTechnique.NONE:
                _note(exercised, scenario.bypass.value)
            _note(exercised, scenario.pattern.value)
            if not hammer.flips:
                return _fail(outcome, OutcomeStatus.NO_FLIP, stage, f"loop {index}: {hammer.mechanism}")

            stage = Stage.EV
            loop.verify = verify = run_ev(world, victim, placement, hammer)
            _note(exercised, scenario.ev.value)
            if verify.result is not EvResult.VERIFIED:
                return _fail(outcome, OutcomeStatus.WRONG_FLIP, stage, f"loop {index}: observed {verify.observed}")

            stage = Stage.SE
            loop.persist = persist = run_se(world, victim, hammer)
            _note(exercised, "SE")
            if persist.result is not PersistResult.PERSISTED:
                return _fail(outcome, OutcomeStatus.NOT_PERSISTED, stage, f"loop {index}: flip not on disk")
        except DefenseDetected as e:
            outcome.status = OutcomeStatus.DETECTED
            outcome.failed_stage = stage
            outcome.detected_by = e.countermeasure
            outcome.detail = f"loop {index}: {e.detail}"
            return outcome
        finally:
            loop.disk_field = _disk_uid(world).decode(errors="replace")
        logger.info(f"{config.name}: loop {index} persisted, disk UID now {loop.disk_field}")

    if _disk_uid(world) != bytes(goal):
        return _fail(outcome, OutcomeStatus.WRONG_FLIP, Stage.SE, f"disk UID {_disk_uid(world)!r} != {bytes(goal)!r}")
    return outcome
