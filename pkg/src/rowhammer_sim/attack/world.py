"""A simulated machine built from one scenario config: DRAM, cache, OS and countermeasures."""

from typing import TYPE_CHECKING

import numpy as np
from loguru import logger

from rowhammer_sim.attack.capabilities import capabilities
from rowhammer_sim.attack.schema import (
    BypassTechnique,
    Capability,
    LpTechnique,
    Origin,
    VictimProperty,
)
from rowhammer_sim.cache.model import SetAssociativeCache
from rowhammer_sim.cache.schema import RegionKind, UncachedRegion
from rowhammer_sim.defense.registry import build_defense
from rowhammer_sim.dram.device import Dram
from rowhammer_sim.dram.faults import build_fault_map
from rowhammer_sim.errors import AllocationError
from rowhammer_sim.osmem.memory import PhysicalMemory
from rowhammer_sim.osmem.schema import ATTACKER_UID, FrameKind, Owner
from rowhammer_sim.osmem.system import OsState

if TYPE_CHECKING:
    from rowhammer_sim.config import ScenarioConfig


def arena_kind(origin: Origin, bypass: BypassTechnique) -> FrameKind:
    """Memory an attacker of `origin` hammers from."""
    if bypass is BypassTechnique.BA3:
        return FrameKind.RDMA if origin is Origin.NETWORK else FrameKind.DMA
    if origin is Origin.NETWORK:
        return FrameKind.NET
    return FrameKind.NORMAL


class World:
    def __init__(
        self, config: "ScenarioConfig", *, with_defenses: bool = True, trace_cache: bool = False
    ) -> None:
        self.config = config
        self.scenario = config.attack
        seeds = np.random.SeedSequence(config.seed).spawn(1 + len(config.defenses))

        geometry = config.dram.geometry
        fault_map = build_fault_map(
            config.fault_map, geometry, frame_bytes=config.os.frame_bytes, seed=config.seed
        )
        self.dram = Dram(
            geometry,
            policy=config.dram.row_policy,
            refresh=config.dram.refresh,
            fault_map=fault_map,
            mapping=config.dram.mapping,
            seed=seeds[0],
        )
        self.memory = PhysicalMemory(self.dram, config.os.frame_bytes)

        cache_config = config.cache
        if VictimProperty.INTEL_CAT in self.scenario.victim_properties and cache_config.cat_ways is None:
            cache_config = cache_config.model_copy(update={"cat_ways": max(1, cache_config.ways // 2)})
        self.cache = SetAssociativeCache(
            cache_config,
            capacity=geometry.capacity,
            sink=self.dram.activate_address,
            trace=trace_cache,
        )
        self.os = OsState(
            self.memory,
            max_order=config.os.max_order,
            dedup_enabled=config.os.dedup or self.scenario.lp is LpTechnique.A3,
        )

        self.defenses = []
        if with_defenses:
            for cm, seed in zip(config.defenses, seeds[1:], strict=True):
                self.defenses.append(build_defense(cm, np.random.default_rng(seed), self.scenario))
        for defense in self.defenses:
            defense.install(self)

        self.clock = 0
        self.attacker = Owner.user(ATTACKER_UID)
        self.shared_buffer: list[int] = []

    # ── Clock ────────────────────────────────────────────────────────────────

    def tick(self) -> int:
        now = self.clock
        self.clock += 1
        return now

    def idle(self, ticks: int) -> None:
        self.clock += ticks

    # ── Capabilities ─────────────────────────────────────────────────────────

    @property
    def revoked(self) -> frozenset[Capability]:
        out: frozenset[Capability] = frozenset()
        for defense in self.defenses:
            out |= defense.revoked_capabilities()
        return out

    @property
    def capabilities(self) -> frozenset[Capability]:
        return capabilities(
            self.scenario.origin, self.scenario.victim_properties, revoked=self.revoked
        )

    # ── Attacker memory ──────────────────────────────────────────────────────

    def provision_attacker(self) -> list[int]:
        """Allocate the attacker's arena, then keep only the last frame of each row it touched."""
        kind = arena_kind(self.scenario.origin, self.scenario.bypass)
        vpages = []
        for _ in range(self.config.os.arena_frames):
            try:
                vpages.append(self.os.map_user_page(ATTACKER_UID, kind=kind))
            except AllocationError:
                break

        by_row: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for vpage in vpages:
            frame = self.os.user_frame(ATTACKER_UID, vpage)
            by_row.setdefault(self.memory.frame_location(frame)[:2], []).append((frame, vpage))
        kept = []
        for members in by_row.values():
            members.sort()
            for _, vpage in members[:-1]:
                self.os.unmap_user_page(ATTACKER_UID, vpage)
            kept.append(members[-1][0])
        kept.sort()

        if kind in (FrameKind.DMA, FrameKind.RDMA):
            region_kind = RegionKind.DMA if kind is FrameKind.DMA else RegionKind.RDMA
            for frame in kept:
                start = self.memory.frame_address(frame)
                self.cache.add_uncached(
                    UncachedRegion(start=start, end=start + self.memory.frame_bytes, kind=region_kind)
                )
        self.shared_buffer = kept[:8]
        logger.debug(f"Attacker arena: {len(kept)} {kind} frames across {len(by_row)} rows")
        return kept

    def attacker_vpage(self, frame: int) -> int | None:
        for vpage, mapped in self.os.space(ATTACKER_UID).mappings.items():
            if mapped == frame:
                return vpage
        return None

    def attacker_frames(self) -> list[int]:
        return sorted(set(self.os.space(ATTACKER_UID).mappings.values()))
