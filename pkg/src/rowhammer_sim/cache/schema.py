"""Schema for the last-level cache model."""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from rowhammer_sim.utils.bits import is_power_of_two


class AccessOutcome(StrEnum):
    HIT = "hit"
    MISS = "miss"
    UNCACHED = "uncached"


class RegionKind(StrEnum):
    DMA = "dma"
    RDMA = "rdma"


class CacheConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    slices: int = Field(default=2, ge=1)
    sets_per_slice: int = Field(default=8, ge=1)
    ways: int = Field(default=4, ge=1)
    line_bytes: int = Field(default=32, ge=1)
    slice_masks: list[int] = Field(
        default_factory=lambda: [0x3D00],
        description="One parity mask per slice-index bit (complex addressing)",
    )
    cat_ways: int | None = Field(
        default=None, ge=1, description="Ways left to the victim's buffers under cache partitioning"
    )

    @model_validator(mode="after")
    def _consistent(self) -> "CacheConfig":
        if not is_power_of_two(self.line_bytes):
            raise ValueError("line_bytes must be a power of two")
        if self.slices != 2 ** len(self.slice_masks):
            raise ValueError("slices must equal 2 ** len(slice_masks)")
        if self.cat_ways is not None and self.cat_ways > self.ways:
            raise ValueError("cat_ways cannot exceed ways")
        return self

    @property
    def effective_ways(self) -> int:
        return self.cat_ways or self.ways


class UncachedRegion(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: int = Field(ge=0)
    end: int = Field(description="Exclusive end address")
    kind: RegionKind = RegionKind.DMA

    def __contains__(self, phys: int) -> bool:
        return self.start <= phys < self.end


class EvictionSet(BaseModel):
    target: int
    members: list[int] = Field(description="Line-aligned addresses congruent with the target")

    def prefix(self, count: int) -> "EvictionSet":
        return EvictionSet(target=self.target, members=self.members[:count])


class TraceRecord(BaseModel):
    tick: int
    address: int
    outcome: AccessOutcome
