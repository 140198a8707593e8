"""Rapid hammering: aggressor access loops driven through a cache bypass."""

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from loguru import logger

from rowhammer_sim.attack.location import Site, accessible_rows, locate_site
from rowhammer_sim.attack.schema import (
    BypassTechnique,
    Capability,
    FlushMode,
    HammerRecord,
    PatternTechnique,
    PlacementRecord,
)
from rowhammer_sim.cache.eviction import build_eviction_set
from rowhammer_sim.cache.schema import EvictionSet
from rowhammer_sim.dram.schema import FlipRecord, RowPolicyKind
from rowhammer_sim.errors import EvictionSetError

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World


class Driver(ABC):
    """Turns one aggressor access into a DRAM activation despite the cache."""

    mechanism = ""

    def __init__(self, world: "World") -> None:
        self.world = world

    def prepare(self, aggressors: list[int], site: Site) -> None:
        """Per-run setup before the first access."""

    @abstractmethod
    def hit(self, addr: int) -> None: ...


class DirectDriver(Driver):
    mechanism = "direct controller access"

    def hit(self, addr: int) -> None:
        self.world.dram.activate_address(addr, self.world.tick())


class FlushDriver(Driver):
    def __init__(self, world: "World", *, non_temporal: bool) -> None:
        super().__init__(world)
        self.non_temporal = non_temporal
        self.mechanism = "non-temporal access" if non_temporal else "access + clflush"

    def hit(self, addr: int) -> None:
        cache = self.world.cache
        if self.non_temporal:
            cache.access(addr, self.world.tick(), non_temporal=True)
        else:
            cache.access(addr, self.world.tick())
            cache.flush_line(addr)


class EvictionDriver(Driver):
    mechanism = "eviction sets"

    def __init__(self, world: "World") -> None:
        super().__init__(world)
        self.sets: dict[int, EvictionSet] = {}

    def prepare(self, aggressors: list[int], site: Site) -> None:
        world = self.world
        cache = world.cache
        bank, row = site
        line = cache.config.line_bytes
        excluded = {(bank, r) for r in range(row - 2, row + 3)}
        excluded |= {world.memory.frame_location(world.memory.frame_of(a))[:2] for a in aggressors}

        pool = []
        for frame in world.attacker_frames():
            if world.memory.frame_location(frame)[:2] in excluded:
                continue
            base = world.memory.frame_address(frame)
            if cache.is_uncached(base):
                continue
            pool.extend(range(base, base + world.memory.frame_bytes, line))

        ways = cache.config.effective_ways
        for addr in aggressors:
            found = build_eviction_set(cache.detached_copy(), addr, pool, full=False)
            self.sets[addr] = found.prefix(ways)

    def hit(self, addr: int) -> None:
        cache = self.world.cache
        cache.access(addr, self.world.tick())
        self.world.idle(cache.evict_via_set(self.sets[addr], self.world.clock))


class UncachedDriver(Driver):
    mechanism = "uncached memory"

    def hit(self, addr: int) -> None:
        self.world.cache.access(addr, self.world.tick())


def make_driver(world: "World") -> Driver:
    scenario = world.scenario
    match scenario.bypass:
        case BypassTechnique.NONE:
            return DirectDriver(world)
        case BypassTechnique.BA1:
            if scenario.flush_mode is FlushMode.AUTO:
                non_temporal = Capability.FLUSH_INSTRUCTION not in world.capabilities
            else:
                non_temporal = scenario.flush_mode is FlushMode.NON_TEMPORAL
            return FlushDriver(world, non_temporal=non_temporal)
        case BypassTechnique.BA2:
            return EvictionDriver(world)
        case BypassTechnique.BA3:
            return UncachedDriver(world)


def _observed(world: "World", flips: list[FlipRecord]) -> list[FlipRecord]:
    """Flips still visible to a CPU read of the affected word."""
    out = []
    for flip in flips:
        phys = world.dram.address_of(flip.bank, flip.row, flip.byte_offset)
        seen = world.memory.read(phys, 1)[0]
        intended = world.dram.intended_bytes(phys, 1)[0]
        if (seen ^ intended) >> flip.bit & 1:
            out.append(flip)
    return out


def run_rh(world: "World", placement: PlacementRecord) -> HammerRecord:
    scenario = world.scenario
    record = HammerRecord()
    access = accessible_rows(world)
    located = locate_site(world, placement.victim_row, access)
    if located is None:
        record.mechanism = "no attacker memory next to any row"
        return record

    site, plan = located
    record.site = site
    record.shifted = site != tuple(placement.victim_row)
    record.aggressors = plan
    addrs = [access[(site[0], r)] for r in plan]

    driver = make_driver(world)
    record.mechanism = driver.mechanism
    try:
        driver.prepare(addrs, site)
    except EvictionSetError as e:
        record.mechanism = f"eviction set construction failed: {e}"
        return record

    dram = world.dram
    pace = 0
    if dram.policy.kind is RowPolicyKind.ADAPTIVE and scenario.pattern is PatternTechnique.BB3:
        pace = dram.policy.idle_threshold
    seen = len(dram.flip_log)
    start = dram.ledger.total_activations

    for i in range(scenario.budget):
        driver.hit(addrs[i % len(addrs)])
        record.accesses += 1
        if pace:
            world.idle(pace)
        if len(dram.flip_log) > seen:
            fresh = [f for f in dram.flip_log[seen:] if (f.bank, f.row) == site]
            seen = len(dram.flip_log)
            observed = _observed(world, fresh)
            if observed:
                record.flips = observed
                break

    record.activations = dram.ledger.total_activations - start
    logger.debug(
        f"RH at {site} via {plan} ({record.mechanism}): {record.accesses} accesses, "
        f"{record.activations} activations, {len(record.flips)} flips"
    )
    return record
