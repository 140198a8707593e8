"""Countermeasures acting on row activations: refresh-rate, probabilistic and counter-based."""

from collections import deque
from typing import TYPE_CHECKING

from rowhammer_sim.defense.base import Defense
from rowhammer_sim.dram.device import Dram
from rowhammer_sim.dram.schema import RefreshMode

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World


def _refresh_near(dram: Dram, bank: int, row: int, distances: range) -> None:
    rows = dram.geometry.rows_per_bank
    for d in distances:
        for victim in (row - d, row + d):
            if 0 <= victim < rows:
                dram.refresh_row(bank, victim)


class DoubleRefreshDefense(Defense):
    name = "DoubleRefresh"

    def install(self, world: "World") -> None:
        dram = world.dram
        dram.set_refresh(dram.refresh.model_copy(update={"mode": RefreshMode.DOUBLED}))


class ParaDefense(Defense):
    """Refresh both neighbours of an activated row with probability p."""

    name = "PARA"

    def install(self, world: "World") -> None:
        world.dram.hooks.append(self)

    def on_activate(self, dram: Dram, bank: int, row: int, tick: int) -> None:
        if self.rng.random() < self.config.probability:
            _refresh_near(dram, bank, row, range(1, 2))


class PraDefense(Defense):
    """Like PARA, plus a random refresh of one non-adjacent row within reach."""

    name = "PRA"

    def install(self, world: "World") -> None:
        world.dram.hooks.append(self)

    def on_activate(self, dram: Dram, bank: int, row: int, tick: int) -> None:
        p = self.config.probability
        if self.rng.random() < p:
            _refresh_near(dram, bank, row, range(1, 2))
        if self.config.reach >= 2 and self.rng.random() < p:
            distance = int(self.rng.integers(2, self.config.reach + 1))
            victim = row + distance if self.rng.random() < 0.5 else row - distance
            if 0 <= victim < dram.geometry.rows_per_bank:
                dram.refresh_row(bank, victim)


class TrrDefense(Defense):
    """Per-row counters within a refresh window; refresh neighbours when one crosses the trigger."""

    name = "TRR"

    def __init__(self, config, rng) -> None:
        super().__init__(config, rng)
        self.counts: dict[tuple[int, int], int] = {}
        self.window_index = -1

    def install(self, world: "World") -> None:
        world.dram.hooks.append(self)

    def on_activate(self, dram: Dram, bank: int, row: int, tick: int) -> None:
        window = tick // dram.refresh.effective_interval
        if window != self.window_index:
            self.window_index = window
            self.counts.clear()
        key = (bank, row)
        self.counts[key] = self.counts.get(key, 0) + 1
        if self.counts[key] >= self.config.trigger:
            self.counts[key] = 0
            _refresh_near(dram, bank, row, range(1, self.config.radius + 1))


class AnvilDefense(Defense):
    """Sliding window of DRAM accesses; a hot row with same-bank traffic gets its neighbours refreshed."""

    name = "ANVIL"

    def __init__(self, config, rng) -> None:
        super().__init__(config, rng)
        self.recent: deque[tuple[int, int, int]] = deque()
        self.counts: dict[tuple[int, int], int] = {}

    def install(self, world: "World") -> None:
        world.dram.hooks.append(self)

    def on_activate(self, dram: Dram, bank: int, row: int, tick: int) -> None:
        while self.recent and tick - self.recent[0][0] >= self.config.window:
            _, b, r = self.recent.popleft()
            self.counts[(b, r)] -= 1
            if not self.counts[(b, r)]:
                del self.counts[(b, r)]
        self.recent.append((tick, bank, row))
        key = (bank, row)
        self.counts[key] = self.counts.get(key, 0) + 1
        if self.counts[key] < self.config.miss_threshold:
            return
        if not any(b == bank and r != row for b, r in self.counts):
            return
        _refresh_near(dram, bank, row, range(1, 2))
        self.recent = deque(e for e in self.recent if (e[1], e[2]) != key)
        del self.counts[key]
