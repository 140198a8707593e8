"""Countermeasures on the read path: SECDED ECC and hot-row integrity checking."""

from collections import deque
from typing import TYPE_CHECKING

from rowhammer_sim.defense.base import Defense
from rowhammer_sim.dram.device import Dram
from rowhammer_sim.dram.mapping import decode
from rowhammer_sim.errors import DefenseDetected
from rowhammer_sim.utils.bits import popcount_diff

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World


class EccDefense(Defense):
    """Single-error correction, double-error detection per 8-byte word.

    Three or more flips in one word are taken to alias a valid codeword when the attacker
    crafted them for that (`crafted_multibit`); otherwise they are detected.
    """

    name = "ECC"

    def __init__(self, config, rng, *, crafted_multibit: bool = False) -> None:
        super().__init__(config, rng)
        self.crafted_multibit = crafted_multibit
        self.corrected = 0

    def install(self, world: "World") -> None:
        world.memory.read_hooks.append(self)

    def on_read(self, dram: Dram, phys: int, word: bytes) -> bytes:
        intended = dram.intended_bytes(phys, len(word))
        errors = popcount_diff(int.from_bytes(word, "little"), int.from_bytes(intended, "little"))
        if errors == 0:
            return word
        if errors == 1:
            dram.scrub(phys, len(word))
            self.corrected += 1
            return intended
        if errors >= 3 and self.crafted_multibit:
            return word
        raise DefenseDetected(self.name, f"uncorrectable {errors}-bit error at {phys:#x}")


class HashTreeDefense(Defense):
    """Integrity check of words near recently hot rows, verified on every read."""

    name = "HashTree"

    def __init__(self, config, rng) -> None:
        super().__init__(config, rng)
        self.recent: deque[tuple[int, int, int]] = deque()
        self.counts: dict[tuple[int, int], int] = {}

    def install(self, world: "World") -> None:
        world.dram.hooks.append(self)
        world.memory.read_hooks.append(self)

    def on_activate(self, dram: Dram, bank: int, row: int, tick: int) -> None:
        while self.recent and tick - self.recent[0][0] >= self.config.window:
            _, b, r = self.recent.popleft()
            self.counts[(b, r)] -= 1
            if not self.counts[(b, r)]:
                del self.counts[(b, r)]
        self.recent.append((tick, bank, row))
        self.counts[(bank, row)] = self.counts.get((bank, row), 0) + 1

    def _near_hot_row(self, bank: int, row: int) -> bool:
        return any(
            b == bank and abs(r - row) <= self.config.reach and n >= self.config.hot_threshold
            for (b, r), n in self.counts.items()
        )

    def on_read(self, dram: Dram, phys: int, word: bytes) -> bytes:
        bank, row, _ = decode(phys, dram.geometry, dram.mapping)
        if self._near_hot_row(bank, row) and word != dram.intended_bytes(phys, len(word)):
            raise DefenseDetected(self.name, f"integrity mismatch at {phys:#x} near a hot row")
        return word
