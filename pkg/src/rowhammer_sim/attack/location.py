"""Location preparation: steering the victim object onto a frame with a usable fault."""

from typing import TYPE_CHECKING

from loguru import logger

from rowhammer_sim.attack.schema import (
    AttackScenario,
    BypassTechnique,
    ExpectedFlip,
    LpTechnique,
    PatternTechnique,
    PlacementRecord,
)
from rowhammer_sim.attack.targets import VictimObject
from rowhammer_sim.errors import AllocationError
from rowhammer_sim.osmem.schema import ATTACKER_UID, FrameKind

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World

Site = tuple[int, int]


# ── Hammering geometry ───────────────────────────────────────────────────────


def pattern_reach(scenario: AttackScenario) -> int:
    """Distance between the victim row and its nearest aggressor."""
    if scenario.pattern is PatternTechnique.BB2:
        return 1
    return scenario.aggressor_distance


def aggressor_plans(scenario: AttackScenario, row: int, rows_per_bank: int) -> list[list[int]]:
    """Aggressor row sets around `row`, in order of preference."""
    d = scenario.aggressor_distance
    if scenario.pattern is PatternTechnique.BB1:
        plans = [[row - d, row - d - 2], [row + d, row + d + 2]]
    elif scenario.pattern is PatternTechnique.BB2:
        plans = [[row - 1, row + 1]]
    else:
        plans = [[row - d], [row + d]]
    return [p for p in plans if all(0 <= r < rows_per_bank and r != row for r in p)]


def accessible_rows(world: "World") -> dict[Site, int]:
    """Rows holding attacker memory the chosen bypass can hammer, mapped to one address in each."""
    uncached_only = world.scenario.bypass is BypassTechnique.BA3
    kinds = world.os.allocator.kinds
    rows: dict[Site, int] = {}
    for frame in world.attacker_frames():
        if uncached_only and kinds.get(frame) not in (FrameKind.DMA, FrameKind.RDMA):
            continue
        bank, row, _ = world.memory.frame_location(frame)
        rows.setdefault((bank, row), world.memory.frame_address(frame))
    return rows


def plan_at(world: "World", site: Site, access: dict[Site, int]) -> list[int] | None:
    bank, row = site
    for plan in aggressor_plans(world.scenario, row, world.dram.geometry.rows_per_bank):
        if all((bank, r) in access for r in plan):
            return plan
    return None


def locate_site(
    world: "World", victim_site: Site, access: dict[Site, int]
) -> tuple[Site, list[int]] | None:
    """The victim row if its aggressors are reachable, else the nearest row whose are."""
    bank, row = victim_site
    geometry = world.dram.geometry
    rows = range(geometry.rows_per_bank)
    order = [(bank, r) for r in sorted(rows, key=lambda r: (abs(r - row), r))]
    for other in range(geometry.total_banks):
        if other != bank:
            order.extend((other, r) for r in sorted(rows, key=lambda r: (abs(r - row), r)))
    for site in order:
        plan = plan_at(world, site, access)
        if plan is not None:
            return site, plan
    return None


# ── Fault usability ──────────────────────────────────────────────────────────


def usable_flip(
    world: "World",
    victim: VictimObject,
    frame: int,
    wanted: list[ExpectedFlip] | None = None,
) -> ExpectedFlip | None:
    """Lowest fault of `frame` that would corrupt a sensitive bit of the victim as intended."""
    template = victim.template()
    sensitive = set(victim.sensitive_offsets())
    reach = pattern_reach(world.scenario)
    bank, row, slot = world.memory.frame_location(frame)
    base = slot * world.memory.frame_bytes
    best = None
    for entry in world.dram.faults_in_row(bank, row):
        offset = entry.victim.byte_offset - base
        if offset not in sensitive or entry.blast_radius < reach:
            continue
        bit = entry.victim.bit_offset
        if (template[offset] >> bit) & 1 != entry.direction.preflip_value:
            continue
        flip = ExpectedFlip(page_offset=offset, bit=bit, direction=entry.direction)
        if wanted is not None and flip not in wanted:
            continue
        if best is None or (offset, bit) < (best.page_offset, best.bit):
            best = flip
    return best


def hammerable(world: "World", frame: int, access: dict[Site, int]) -> bool:
    bank, row, _ = world.memory.frame_location(frame)
    return plan_at(world, (bank, row), access) is not None


# ── Techniques ───────────────────────────────────────────────────────────────


def run_lp(
    world: "World",
    victim: VictimObject,
    *,
    wanted: list[ExpectedFlip] | None = None,
) -> PlacementRecord:
    scenario = world.scenario
    record = PlacementRecord(technique=scenario.lp)
    access = accessible_rows(world)

    def candidate(frame: int) -> ExpectedFlip | None:
        flip = usable_flip(world, victim, frame, wanted)
        if flip is not None and hammerable(world, frame, access):
            return flip
        return None

    try:
        match scenario.lp:
            case LpTechnique.NONE:
                frame = victim.frame if victim.frame is not None else victim.create()
                record.attempts = 1
                _placed(world, record, frame, usable_flip(world, victim, frame, wanted), force=True)
            case LpTechnique.A1:
                _spray(world, victim, record, candidate)
            case LpTechnique.A2:
                _pad(world, victim, record, wanted)
            case LpTechnique.A3:
                _replace(world, victim, record, candidate)
            case LpTechnique.A4:
                _try_and_abort(world, victim, record, candidate)
    except AllocationError as e:
        logger.debug(f"LP {scenario.lp}: {e}")

    logger.debug(
        f"LP {scenario.lp}: placed={record.placed} frame={record.victim_frame} "
        f"attempts={record.attempts} footprint={record.footprint}"
    )
    return record


def _placed(
    world: "World",
    record: PlacementRecord,
    frame: int,
    flip: ExpectedFlip | None,
    *,
    force: bool = False,
) -> None:
    bank, row, _ = world.memory.frame_location(frame)
    record.victim_frame = frame
    record.victim_row = (bank, row)
    record.expected = flip
    record.placed = force or flip is not None


def _spray(world, victim, record, candidate) -> None:
    """Allocate victim copies until one lands on a usable, hammerable frame."""
    while True:
        try:
            frame = victim.create()
        except AllocationError:
            return
        record.attempts += 1
        record.footprint += 1
        flip = candidate(frame)
        if flip is not None:
            victim.select(frame)
            _placed(world, record, frame, flip)
            return


def _pad(world, victim, record, wanted) -> None:
    """Fill free memory, release one chosen frame, and let the victim take it."""
    held = []
    while True:
        try:
            held.append(world.os.map_user_page(ATTACKER_UID))
        except AllocationError:
            break
    record.footprint = len(held)

    access = accessible_rows(world)
    usable = []
    for frame in world.attacker_frames():
        flip = usable_flip(world, victim, frame, wanted)
        if flip is not None:
            usable.append(frame)
    preferred = [f for f in usable if hammerable(world, f, access)]
    choices = preferred or usable
    if not choices:
        return

    world.os.unmap_user_page(ATTACKER_UID, world.attacker_vpage(choices[0]))
    if victim.frame is not None:
        victim.release()
    frame = victim.create()
    record.attempts = 1
    _placed(world, record, frame, usable_flip(world, victim, frame, wanted))


def _replace(world, victim, record, candidate) -> None:
    """Forge the victim's content in an attacker frame and let deduplication merge onto it."""
    if victim.frame is None:
        victim.create()
    forged = next((f for f in world.attacker_frames() if candidate(f) is not None), None)
    if forged is None:
        return
    vpage = world.attacker_vpage(forged)
    world.os.write_user_page(ATTACKER_UID, vpage, 0, victim.template())
    world.os.space(ATTACKER_UID).mergeable.add(vpage)
    merged = world.os.dedup_merge_pass()
    record.attempts = 1
    logger.debug(f"A3: forged frame {forged}, {merged} mappings merged")
    if victim.frame == forged:
        _placed(world, record, forged, candidate(forged))


def _try_and_abort(world, victim, record, candidate) -> None:
    """Recycle the victim while holding each rejected frame, so the next copy lands elsewhere."""
    scenario = world.scenario
    held: list[int] = []
    frame = victim.frame if victim.frame is not None else victim.create()
    try:
        while record.attempts < scenario.lp_attempts:
            record.attempts += 1
            flip = candidate(frame)
            if flip is not None:
                _placed(world, record, frame, flip)
                return
            victim.release()
            held.append(world.os.map_user_page(ATTACKER_UID))
            record.footprint = max(record.footprint, len(held))
            frame = victim.create()
    finally:
        for vpage in held:
            world.os.unmap_user_page(ATTACKER_UID, vpage)
