"""Countermeasure kind -> implementation."""

import numpy as np

from rowhammer_sim.attack.schema import AttackScenario
from rowhammer_sim.defense.base import Defense
from rowhammer_sim.defense.integrity import EccDefense, HashTreeDefense
from rowhammer_sim.defense.placement import (
    AlisDefense,
    BcattDefense,
    DisallowFlushDefense,
    FootprintDetectorDefense,
    GcattDefense,
    GuardIonDefense,
    ZebRamDefense,
)
from rowhammer_sim.defense.refresh import (
    AnvilDefense,
    DoubleRefreshDefense,
    ParaDefense,
    PraDefense,
    TrrDefense,
)

DEFENSE_REGISTRY: dict[str, type[Defense]] = {
    "double_refresh": DoubleRefreshDefense,
    "para": ParaDefense,
    "pra": PraDefense,
    "trr": TrrDefense,
    "ecc": EccDefense,
    "anvil": AnvilDefense,
    "bcatt": BcattDefense,
    "gcatt": GcattDefense,
    "guardion": GuardIonDefense,
    "alis": AlisDefense,
    "zebram": ZebRamDefense,
    "footprint": FootprintDetectorDefense,
    "disallow_flush": DisallowFlushDefense,
    "hash_tree": HashTreeDefense,
}


def build_defense(config, rng: np.random.Generator, scenario: AttackScenario) -> Defense:
    cls = DEFENSE_REGISTRY[config.kind]
    if cls is EccDefense:
        return EccDefense(config, rng, crafted_multibit=scenario.eccploit)
    return cls(config, rng)


def defense_name(config) -> str:
    return DEFENSE_REGISTRY[config.kind].name
