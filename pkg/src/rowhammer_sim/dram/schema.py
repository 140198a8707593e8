"""Schema for the DRAM device model."""

from enum import StrEnum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rowhammer_sim.utils.bits import is_power_of_two


class RowPolicyKind(StrEnum):
    OPEN = "open"
    CLOSE = "close"
    ADAPTIVE = "adaptive"


class RefreshMode(StrEnum):
    STANDARD = "standard"
    DOUBLED = "doubled"


class FaultDirection(StrEnum):
    ONE_TO_ZERO = "1to0"
    ZERO_TO_ONE = "0to1"

    @property
    def preflip_value(self) -> int:
        return 1 if self is FaultDirection.ONE_TO_ZERO else 0


class ServedFrom(StrEnum):
    ROW_BUFFER = "row_buffer"
    ROW_ARRAY = "row_array"


class DramGeometry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    channels: int = Field(default=1, ge=1)
    dimms_per_channel: int = Field(default=1, ge=1)
    ranks_per_dimm: int = Field(default=1, ge=1)
    banks_per_rank: int = Field(default=2, ge=1)
    rows_per_bank: int = Field(default=32, ge=1)
    bytes_per_row: int = Field(default=256, ge=8, description="Row size in bytes, power of two")

    @field_validator("bytes_per_row")
    @classmethod
    def _row_power_of_two(cls, v: int) -> int:
        if not is_power_of_two(v):
            raise ValueError("bytes_per_row must be a power of two")
        return v

    @property
    def total_banks(self) -> int:
        return self.channels * self.dimms_per_channel * self.ranks_per_dimm * self.banks_per_rank

    @property
    def total_rows(self) -> int:
        return self.total_banks * self.rows_per_bank

    @property
    def capacity(self) -> int:
        return self.total_rows * self.bytes_per_row


class DramCoordinate(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    channel: int = Field(default=0, ge=0)
    dimm: int = Field(default=0, ge=0)
    rank: int = Field(default=0, ge=0)
    bank: int = Field(default=0, ge=0)
    row: int = Field(ge=0)
    byte_offset: int = Field(default=0, ge=0)
    bit_offset: int = Field(default=0, ge=0, le=7)

    def bank_id(self, geometry: DramGeometry) -> int:
        """Flat bank index across channels, DIMMs and ranks."""
        return (
            (self.channel * geometry.dimms_per_channel + self.dimm) * geometry.ranks_per_dimm
            + self.rank
        ) * geometry.banks_per_rank + self.bank

    def in_geometry(self, geometry: DramGeometry) -> bool:
        return (
            self.channel < geometry.channels
            and self.dimm < geometry.dimms_per_channel
            and self.rank < geometry.ranks_per_dimm
            and self.bank < geometry.banks_per_rank
            and self.row < geometry.rows_per_bank
            and self.byte_offset < geometry.bytes_per_row
        )


class RowBufferPolicy(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: RowPolicyKind = RowPolicyKind.OPEN
    idle_threshold: int = Field(default=4, ge=1, description="Adaptive auto-close idle ticks")


class RefreshConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    interval: int = Field(default=1024, ge=2, description="Ticks between refreshes of one row")
    mode: RefreshMode = RefreshMode.STANDARD

    @property
    def effective_interval(self) -> int:
        if self.mode is RefreshMode.DOUBLED:
            return max(self.interval // 2, 1)
        return self.interval


class AddressMapping(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    xor_bank_mask: int = Field(
        default=0, ge=0, description="Row bits XORed into the bank index (0 = plain row-major)"
    )


class FaultEntry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    victim: DramCoordinate
    direction: FaultDirection
    threshold: int = Field(ge=1, description="Aggressor activations per refresh window")
    flip_probability: float = Field(default=1.0, gt=0.0, le=1.0)
    blast_radius: int = Field(default=1, ge=1)
    profiled: bool = Field(default=True, description="Visible to boot-time fault profiling")


class FaultMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: list[FaultEntry] = Field(default_factory=list)

    @model_validator(mode="after")
    def _unique_victims(self) -> "FaultMap":
        seen: set[DramCoordinate] = set()
        for entry in self.entries:
            if entry.victim in seen:
                raise ValueError(f"duplicate fault entry for {entry.victim}")
            seen.add(entry.victim)
        return self

    @property
    def max_radius(self) -> int:
        return max((e.blast_radius for e in self.entries), default=0)


class FlipRecord(BaseModel):
    """A bit flip applied by the fault engine."""

    bank: int = Field(description="Flat bank index")
    row: int
    byte_offset: int
    bit: int
    direction: FaultDirection
    aggressor_row: int
    tick: int


# ── Fault map configuration ──────────────────────────────────────────────────


class FaultTemplate(BaseModel):
    """Structured generator: one entry per (bank, row, offset, bit) combination."""

    model_config = ConfigDict(extra="forbid")

    banks: list[int] | Literal["all"] = "all"
    rows: list[int] | Literal["all"] = "all"
    page_offsets: list[int] = Field(
        default_factory=list, description="Frame-relative offsets, expanded over frame slots"
    )
    slots: list[int] | Literal["all"] = "all"
    byte_offsets: list[int] = Field(default_factory=list, description="Row-relative offsets")
    bits: list[int] = Field(default_factory=lambda: [0])
    direction: FaultDirection = FaultDirection.ONE_TO_ZERO
    threshold: int = Field(default=64, ge=1)
    flip_probability: float = Field(default=1.0, gt=0.0, le=1.0)
    blast_radius: int = Field(default=1, ge=1)
    profiled: bool = True

    @field_validator("bits")
    @classmethod
    def _bits_in_byte(cls, v: list[int]) -> list[int]:
        if any(not 0 <= b <= 7 for b in v):
            raise ValueError("bits must lie in 0..7")
        return v


class GeneratedFaults(BaseModel):
    """Seeded random map: each row is vulnerable with probability `density`."""

    model_config = ConfigDict(extra="forbid")

    density: float = Field(ge=0.0, le=1.0)
    cells_per_row: int = Field(default=1, ge=1)
    one_to_zero_ratio: float = Field(default=0.5, ge=0.0, le=1.0)
    far_ratio: float = Field(default=0.0, ge=0.0, le=1.0, description="Share of radius-2 entries")
    profiled_ratio: float = Field(default=1.0, ge=0.0, le=1.0)
    threshold: int = Field(default=64, ge=1)
    flip_probability: float = Field(default=1.0, gt=0.0, le=1.0)


class FaultSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    entries: list[FaultEntry] = Field(default_factory=list)
    templates: list[FaultTemplate] = Field(default_factory=list)
    generated: GeneratedFaults | None = None

    @staticmethod
    def permissive() -> "FaultSection":
        """Bit 0 of page offset 16 in every frame flips 1->0 after 64 activations."""
        return FaultSection(templates=[FaultTemplate(page_offsets=[16])])
