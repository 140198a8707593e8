"""Countermeasure base class: pluggable hooks on activation, allocation and read paths."""

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

import numpy as np

from rowhammer_sim.attack.schema import Capability, PlacementRecord

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World


class Defense(ABC):
    """One installed countermeasure instance; state lives for a single world."""

    name: str = "defense"

    def __init__(self, config, rng: np.random.Generator) -> None:
        self.config = config
        self.rng = rng

    @abstractmethod
    def install(self, world: "World") -> None:
        """Attach hooks to the world's DRAM, memory and allocator."""
        ...

    def revoked_capabilities(self) -> frozenset[Capability]:
        return frozenset()

    def after_lp(self, world: "World", placement: PlacementRecord) -> None:
        """Inspect a finished placement; raise DefenseDetected to stop the attack."""
