"""Schema for countermeasure configuration and evaluation verdicts."""

from enum import StrEnum
from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from rowhammer_sim.attack.schema import Stage


class _Countermeasure(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DoubleRefresh(_Countermeasure):
    kind: Literal["double_refresh"] = "double_refresh"


class Para(_Countermeasure):
    kind: Literal["para"] = "para"
    probability: float = Field(default=0.5, gt=0.0, le=1.0)


class Pra(_Countermeasure):
    kind: Literal["pra"] = "pra"
    probability: float = Field(default=0.5, gt=0.0, le=1.0)
    reach: int = Field(default=2, ge=1, description="Farthest row a random extra refresh may hit")


class Trr(_Countermeasure):
    kind: Literal["trr"] = "trr"
    trigger: int = Field(default=32, ge=1, description="Activations within a window before refresh")
    radius: int = Field(default=1, ge=1)


class Ecc(_Countermeasure):
    kind: Literal["ecc"] = "ecc"


class Anvil(_Countermeasure):
    kind: Literal["anvil"] = "anvil"
    miss_threshold: int = Field(default=16, ge=1)
    window: int = Field(default=128, ge=1, description="Sliding window in ticks")


class Bcatt(_Countermeasure):
    kind: Literal["bcatt"] = "bcatt"


class Gcatt(_Countermeasure):
    kind: Literal["gcatt"] = "gcatt"
    user_rows: int | None = Field(default=None, ge=1, description="Rows per bank for user; default half")
    gap_rows: int = Field(default=2, ge=1)


class GuardIon(_Countermeasure):
    kind: Literal["guardion"] = "guardion"
    guard_rows: int = Field(default=1, ge=1)


class Alis(_Countermeasure):
    kind: Literal["alis"] = "alis"
    guard_rows: int = Field(default=1, ge=1)


class ZebRam(_Countermeasure):
    kind: Literal["zebram"] = "zebram"


class FootprintDetector(_Countermeasure):
    kind: Literal["footprint"] = "footprint"
    max_fraction: float = Field(default=0.1, gt=0.0, le=1.0, description="Frames per placement")


class DisallowFlush(_Countermeasure):
    kind: Literal["disallow_flush"] = "disallow_flush"


class HashTree(_Countermeasure):
    kind: Literal["hash_tree"] = "hash_tree"
    hot_threshold: int = Field(default=8, ge=1)
    window: int = Field(default=256, ge=1)
    reach: int = Field(default=2, ge=1)


Countermeasure = Annotated[
    DoubleRefresh
    | Para
    | Pra
    | Trr
    | Ecc
    | Anvil
    | Bcatt
    | Gcatt
    | GuardIon
    | Alis
    | ZebRam
    | FootprintDetector
    | DisallowFlush
    | HashTree,
    Field(discriminator="kind"),
]


class VerdictKind(StrEnum):
    BLOCKED = "Blocked"
    BYPASSED = "Bypassed"
    NOT_APPLICABLE = "NotApplicable"


class DefenseVerdict(BaseModel):
    countermeasure: str
    scenario: str
    result: VerdictKind
    stage: Stage | None = None
    mechanism: str | None = None

    @model_validator(mode="after")
    def _blocked_has_stage(self) -> "DefenseVerdict":
        if self.result is VerdictKind.BLOCKED and self.stage is None:
            raise ValueError("Blocked verdicts carry the interrupted stage")
        return self
