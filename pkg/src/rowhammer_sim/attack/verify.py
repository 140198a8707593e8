"""Exploit verification: confirm the intended bit flipped, by reading it or by probing behaviour."""

from typing import TYPE_CHECKING

from rowhammer_sim.attack.schema import (
    EvMethod,
    EvResult,
    ExpectedFlip,
    HammerRecord,
    PlacementRecord,
    VerifyRecord,
)
from rowhammer_sim.attack.targets import VictimObject, apply_flip
from rowhammer_sim.dram.schema import FlipRecord

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World


def flips_in_frame(world: "World", frame: int, hammer: HammerRecord) -> list[tuple[int, FlipRecord]]:
    """Each recorded flip that landed in `frame`, with its page offset."""
    bank, row, slot = world.memory.frame_location(frame)
    base = slot * world.memory.frame_bytes
    return [
        (f.byte_offset - base, f)
        for f in hammer.flips
        if (f.bank, f.row) == (bank, row) and 0 <= f.byte_offset - base < world.memory.frame_bytes
    ]


def _expected_from_flips(
    world: "World", victim: VictimObject, hammer: HammerRecord
) -> ExpectedFlip | None:
    if victim.frame is None:
        return None
    sensitive = set(victim.sensitive_offsets())
    for offset, flip in flips_in_frame(world, victim.frame, hammer):
        if offset in sensitive:
            return ExpectedFlip(page_offset=offset, bit=flip.bit, direction=flip.direction)
    return None


def run_ev(
    world: "World", victim: VictimObject, placement: PlacementRecord, hammer: HammerRecord
) -> VerifyRecord:
    method = world.scenario.ev
    if victim.frame is None:
        return VerifyRecord(method=method, result=EvResult.UNOBSERVABLE)
    expected = placement.expected or _expected_from_flips(world, victim, hammer)
    if expected is None:
        return VerifyRecord(method=method, result=EvResult.WRONG_FLIP, observed="no flip in target")

    intended = apply_flip(victim.template(), expected)
    if method is EvMethod.C1:
        page = victim.read_page()
        offsets = victim.sensitive_offsets()
        observed = bytes(page[o] for o in offsets).hex()
        wanted = bytes(intended[o] for o in offsets).hex()
    else:
        observed = victim.observe(expected)
        wanted = victim.behavior(intended, expected)

    result = EvResult.VERIFIED if observed == wanted else EvResult.WRONG_FLIP
    return VerifyRecord(method=method, result=result, observed=observed, expected=wanted)
