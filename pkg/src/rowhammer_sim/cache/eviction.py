"""Eviction-set discovery using only hit/miss observations."""

from loguru import logger

from rowhammer_sim.cache.model import SetAssociativeCache
from rowhammer_sim.cache.schema import AccessOutcome, EvictionSet
from rowhammer_sim.errors import EvictionSetError


class _Prober:
    """Timing-style probe: does accessing `candidates` evict `target`?"""

    def __init__(self, cache: SetAssociativeCache, target: int) -> None:
        self.cache = cache
        self.target = target
        self.tick = 0
        self.probes = 0

    def evicts(self, candidates: list[int]) -> bool:
        self.probes += 1
        self._touch(self.target)
        for addr in candidates:
            self._touch(addr)
        return self._touch(self.target) is AccessOutcome.MISS

    def _touch(self, addr: int) -> AccessOutcome:
        self.tick += 1
        return self.cache.access(addr, self.tick)


def _split(items: list[int], groups: int) -> list[list[int]]:
    size, extra = divmod(len(items), groups)
    out, start = [], 0
    for i in range(groups):
        end = start + size + (1 if i < extra else 0)
        out.append(items[start:end])
        start = end
    return [g for g in out if g]


def build_eviction_set(
    cache: SetAssociativeCache, target: int, pool: list[int], *, full: bool = True
) -> EvictionSet:
    """Reduce `pool` to a minimal evicting set, then optionally extend it to every congruent line.

    Only `cache.access` outcomes are consulted; probe on a detached copy to keep DRAM untouched.
    """
    line_bytes = cache.config.line_bytes
    ways = cache.config.effective_ways
    target_line = target // line_bytes

    seen: set[int] = set()
    candidates: list[int] = []
    for addr in pool:
        line = addr // line_bytes
        if line == target_line or line in seen:
            continue
        seen.add(line)
        candidates.append(line * line_bytes)

    prober = _Prober(cache, target)
    if not prober.evicts(candidates):
        raise EvictionSetError(
            f"pool of {len(candidates)} lines holds fewer than {ways} lines congruent with {target:#x}"
        )

    members = candidates
    while len(members) > ways:
        for group in _split(members, ways + 1):
            remainder = [m for m in members if m not in group]
            if prober.evicts(remainder):
                members = remainder
                break
        else:
            raise EvictionSetError(f"reduction stalled at {len(members)} lines for {target:#x}")

    if full:
        core = members[: ways - 1]
        extended = list(members)
        for candidate in candidates:
            if candidate in extended:
                continue
            if prober.evicts([*core, candidate]):
                extended.append(candidate)
        members = extended

    logger.debug(f"Eviction set for {target:#x}: {len(members)} lines after {prober.probes} probes")
    return EvictionSet(target=target, members=sorted(members))
