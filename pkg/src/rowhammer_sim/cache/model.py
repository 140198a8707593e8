"""Sliced set-associative LRU cache in front of DRAM."""

from collections.abc import Callable

import pandas as pd

from rowhammer_sim.cache.schema import (
    AccessOutcome,
    CacheConfig,
    EvictionSet,
    TraceRecord,
    UncachedRegion,
)
from rowhammer_sim.errors import AddressRangeError
from rowhammer_sim.utils.bits import parity

DramSink = Callable[[int, int], object]


class SetAssociativeCache:
    """Every miss and uncached access is forwarded to `sink(phys, tick)` as one DRAM access."""

    def __init__(
        self,
        config: CacheConfig,
        *,
        capacity: int,
        sink: DramSink | None = None,
        trace: bool = False,
    ) -> None:
        self.config = config
        self.capacity = capacity
        self.sink = sink
        self.uncached: list[UncachedRegion] = []
        self.hits = 0
        self.misses = 0
        self.forwarded = 0
        self.trace: list[TraceRecord] | None = [] if trace else None
        self._sets: dict[tuple[int, int], list[int]] = {}

    def slice_of(self, phys: int) -> int:
        index = 0
        for i, mask in enumerate(self.config.slice_masks):
            index |= parity(phys & mask) << i
        return index

    def set_of(self, phys: int) -> int:
        return (phys // self.config.line_bytes) % self.config.sets_per_slice

    def congruence_key(self, phys: int) -> tuple[int, int]:
        return self.slice_of(phys), self.set_of(phys)

    def add_uncached(self, region: UncachedRegion) -> None:
        if region.end <= region.start or region.end > self.capacity:
            raise AddressRangeError(f"invalid uncached region {region.start:#x}-{region.end:#x}")
        for other in self.uncached:
            if region.start < other.end and other.start < region.end:
                raise AddressRangeError("uncached regions must not overlap")
        self.uncached.append(region)

    def is_uncached(self, phys: int) -> bool:
        return any(phys in region for region in self.uncached)

    def access(self, phys: int, tick: int, *, non_temporal: bool = False) -> AccessOutcome:
        if not 0 <= phys < self.capacity:
            raise AddressRangeError(f"address {phys:#x} outside cacheable range")
        if non_temporal or self.is_uncached(phys):
            outcome = AccessOutcome.UNCACHED
            self._forward(phys, tick)
        else:
            line = phys // self.config.line_bytes
            lines = self._sets.setdefault(self.congruence_key(phys), [])
            if line in lines:
                lines.remove(line)
                lines.append(line)
                self.hits += 1
                outcome = AccessOutcome.HIT
            else:
                if len(lines) >= self.config.effective_ways:
                    lines.pop(0)
                lines.append(line)
                self.misses += 1
                outcome = AccessOutcome.MISS
                self._forward(phys, tick)
        if self.trace is not None:
            self.trace.append(TraceRecord(tick=tick, address=phys, outcome=outcome))
        return outcome

    def _forward(self, phys: int, tick: int) -> None:
        self.forwarded += 1
        if self.sink is not None:
            self.sink(phys, tick)

    def flush_line(self, phys: int) -> None:
        line = phys // self.config.line_bytes
        lines = self._sets.get(self.congruence_key(phys))
        if lines and line in lines:
            lines.remove(line)

    def is_cached(self, phys: int) -> bool:
        line = phys // self.config.line_bytes
        return line in self._sets.get(self.congruence_key(phys), ())

    def evict_via_set(self, eviction_set: EvictionSet, tick: int) -> int:
        """Access every member once, one tick apart; returns the ticks consumed."""
        for offset, member in enumerate(eviction_set.members):
            self.access(member, tick + offset)
        return len(eviction_set.members)

    def detached_copy(self) -> "SetAssociativeCache":
        """Same configuration and contents, no DRAM sink, no trace."""
        copy = SetAssociativeCache(self.config, capacity=self.capacity)
        copy.uncached = list(self.uncached)
        copy._sets = {key: list(lines) for key, lines in self._sets.items()}
        return copy

    def trace_frame(self) -> pd.DataFrame:
        rows = [record.model_dump() for record in self.trace or []]
        return pd.DataFrame(rows, columns=["tick", "address", "outcome"])

    def trace_csv(self) -> str:
        return self.trace_frame().to_csv(index=False)
