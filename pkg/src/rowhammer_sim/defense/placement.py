"""Countermeasures acting on frame placement: blacklisting, partitioning and guard rows."""

from typing import TYPE_CHECKING

from loguru import logger

from rowhammer_sim.attack.schema import Capability, PlacementRecord
from rowhammer_sim.defense.base import Defense
from rowhammer_sim.errors import DefenseDetected
from rowhammer_sim.osmem.buddy import BuddyAllocator
from rowhammer_sim.osmem.schema import Domain, FrameKind, Owner

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World


class _RowAware(Defense):
    def install(self, world: "World") -> None:
        memory = world.memory
        self.rows_per_bank = world.dram.geometry.rows_per_bank
        self.location = [memory.frame_location(f)[:2] for f in range(memory.frame_count)]
        self.row_frames: dict[tuple[int, int], list[int]] = {}
        for frame, loc in enumerate(self.location):
            self.row_frames.setdefault(loc, []).append(frame)

    def reserve_rows(self, allocator: BuddyAllocator, rows: list[tuple[int, int]]) -> int:
        frames = [f for loc in rows for f in self.row_frames.get(loc, ())]
        return allocator.reserve(frames)


class BcattDefense(_RowAware):
    """Blacklist every frame in a row where boot-time profiling found a flip."""

    name = "B-CATT"

    def install(self, world: "World") -> None:
        super().install(world)
        geometry = world.dram.geometry
        rows = sorted(
            {
                (e.victim.bank_id(geometry), e.victim.row)
                for e in world.dram.fault_map.entries
                if e.profiled
            }
        )
        reserved = self.reserve_rows(world.os.allocator, rows)
        logger.debug(f"B-CATT blacklisted {reserved} frames in {len(rows)} rows")


class GcattDefense(_RowAware):
    """Static per-bank partition: user rows low, gap rows, kernel rows high."""

    name = "G-CATT"

    def install(self, world: "World") -> None:
        super().install(world)
        self.user_rows = self.config.user_rows or self.rows_per_bank // 2
        self.kernel_start = self.user_rows + self.config.gap_rows
        banks = world.dram.geometry.total_banks
        gap = [(b, r) for b in range(banks) for r in range(self.user_rows, self.kernel_start)]
        self.reserve_rows(world.os.allocator, gap)
        world.os.allocator.policies.append(self)

    def on_alloc(self, allocator: BuddyAllocator, frames: range, owner: Owner, kind: FrameKind) -> bool:
        for frame in frames:
            row = self.location[frame][1]
            if owner.is_user_side and row >= self.user_rows:
                return False
            if owner.domain is Domain.KERNEL and row < self.kernel_start:
                return False
        return True

    def after_alloc(self, allocator, frames, owner, kind) -> None:
        pass


class _GuardRowIsolation(_RowAware):
    """Protected-kind buffers live in their own rows, fenced by reserved guard rows."""

    protected: frozenset[FrameKind] = frozenset()

    def install(self, world: "World") -> None:
        super().install(world)
        world.os.allocator.policies.append(self)

    def _neighbours(self, loc: tuple[int, int]) -> list[tuple[int, int]]:
        bank, row = loc
        out = []
        for d in range(1, self.config.guard_rows + 1):
            for r in (row - d, row + d):
                if 0 <= r < self.rows_per_bank:
                    out.append((bank, r))
        return out

    def _is_protected(self, allocator: BuddyAllocator, frame: int) -> bool:
        return frame in allocator.owners and allocator.kinds.get(frame) in self.protected

    def _is_plain(self, allocator: BuddyAllocator, frame: int) -> bool:
        owner = allocator.owners.get(frame)
        return owner is not None and owner.domain is not Domain.GUARD and not self._is_protected(allocator, frame)

    def on_alloc(self, allocator: BuddyAllocator, frames: range, owner: Owner, kind: FrameKind) -> bool:
        for frame in frames:
            loc = self.location[frame]
            if kind in self.protected:
                if any(self._is_plain(allocator, f) for f in self.row_frames[loc]):
                    return False
                for near in self._neighbours(loc):
                    if any(self._is_plain(allocator, f) for f in self.row_frames[near]):
                        return False
            elif any(self._is_protected(allocator, f) for f in self.row_frames[loc]):
                return False
        return True

    def after_alloc(self, allocator: BuddyAllocator, frames: range, owner: Owner, kind: FrameKind) -> None:
        if kind not in self.protected:
            return
        rows = {near for f in frames for near in self._neighbours(self.location[f])}
        guards = [
            loc for loc in sorted(rows)
            if not any(self._is_protected(allocator, f) for f in self.row_frames[loc])
        ]
        self.reserve_rows(allocator, guards)


class GuardIonDefense(_GuardRowIsolation):
    name = "GuardION"
    protected = frozenset({FrameKind.DMA})


class AlisDefense(_GuardRowIsolation):
    name = "ALIS"
    protected = frozenset({FrameKind.RDMA, FrameKind.NET})


class ZebRamDefense(_RowAware):
    """Every odd row of every bank is a guard row."""

    name = "ZebRAM"

    def install(self, world: "World") -> None:
        super().install(world)
        banks = world.dram.geometry.total_banks
        odd = [(b, r) for b in range(banks) for r in range(1, self.rows_per_bank, 2)]
        self.reserve_rows(world.os.allocator, odd)


class FootprintDetectorDefense(Defense):
    """Flags placements that consume an outsized share of physical memory."""

    name = "FootprintDetector"

    def install(self, world: "World") -> None:
        self.limit = self.config.max_fraction * world.memory.frame_count

    def after_lp(self, world: "World", placement: PlacementRecord) -> None:
        if placement.footprint > self.limit:
            raise DefenseDetected(
                self.name, f"placement used {placement.footprint} frames (limit {self.limit:.0f})"
            )


class DisallowFlushDefense(Defense):
    name = "DisallowClflush"

    def install(self, world: "World") -> None:
        pass

    def revoked_capabilities(self) -> frozenset[Capability]:
        return frozenset({Capability.FLUSH_INSTRUCTION})
