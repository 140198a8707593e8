"""Fault map construction from inline entries, templates and seeded generation."""

import numpy as np
from loguru import logger

from rowhammer_sim.dram.mapping import split_bank_id
from rowhammer_sim.dram.schema import (
    DramCoordinate,
    DramGeometry,
    FaultDirection,
    FaultEntry,
    FaultMap,
    FaultSection,
    FaultTemplate,
    GeneratedFaults,
)
from rowhammer_sim.errors import AddressRangeError


def _coordinate(geometry: DramGeometry, bank_id: int, row: int, byte: int, bit: int) -> DramCoordinate:
    channel, dimm, rank, bank = split_bank_id(bank_id, geometry)
    return DramCoordinate(
        channel=channel, dimm=dimm, rank=rank, bank=bank, row=row, byte_offset=byte, bit_offset=bit
    )


def expand_template(
    template: FaultTemplate, geometry: DramGeometry, frame_bytes: int
) -> list[FaultEntry]:
    banks = range(geometry.total_banks) if template.banks == "all" else template.banks
    rows = range(geometry.rows_per_bank) if template.rows == "all" else template.rows
    frames_per_row = geometry.bytes_per_row // frame_bytes
    slots = range(frames_per_row) if template.slots == "all" else template.slots

    offsets = list(template.byte_offsets)
    for slot in slots:
        offsets.extend(slot * frame_bytes + off for off in template.page_offsets)

    entries = []
    for bank_id in banks:
        for row in rows:
            for byte in offsets:
                if not (
                    0 <= bank_id < geometry.total_banks
                    and 0 <= row < geometry.rows_per_bank
                    and 0 <= byte < geometry.bytes_per_row
                ):
                    raise AddressRangeError(
                        f"fault template position bank={bank_id} row={row} byte={byte} out of range"
                    )
                for bit in template.bits:
                    entries.append(
                        FaultEntry(
                            victim=_coordinate(geometry, bank_id, row, byte, bit),
                            direction=template.direction,
                            threshold=template.threshold,
                            flip_probability=template.flip_probability,
                            blast_radius=template.blast_radius,
                            profiled=template.profiled,
                        )
                    )
    return entries


def generate_entries(spec: GeneratedFaults, geometry: DramGeometry, seed: int) -> list[FaultEntry]:
    """Deterministic in (seed, spec, geometry)."""
    rng = np.random.default_rng(seed)
    vulnerable = np.flatnonzero(rng.random(geometry.total_rows) < spec.density)
    cells = geometry.bytes_per_row * 8
    per_row = min(spec.cells_per_row, cells)

    entries = []
    for global_row in vulnerable.tolist():
        bank_id, row = divmod(global_row, geometry.rows_per_bank)
        for cell in sorted(rng.choice(cells, size=per_row, replace=False).tolist()):
            byte, bit = divmod(cell, 8)
            direction = (
                FaultDirection.ONE_TO_ZERO
                if rng.random() < spec.one_to_zero_ratio
                else FaultDirection.ZERO_TO_ONE
            )
            radius = 2 if rng.random() < spec.far_ratio else 1
            profiled = bool(rng.random() < spec.profiled_ratio)
            entries.append(
                FaultEntry(
                    victim=_coordinate(geometry, bank_id, row, byte, bit),
                    direction=direction,
                    threshold=spec.threshold,
                    flip_probability=spec.flip_probability,
                    blast_radius=radius,
                    profiled=profiled,
                )
            )
    return entries


def build_fault_map(
    section: FaultSection, geometry: DramGeometry, *, frame_bytes: int, seed: int
) -> FaultMap:
    """Combine inline, templated and generated entries; the first entry per cell wins."""
    candidates: list[FaultEntry] = list(section.entries)
    for template in section.templates:
        candidates.extend(expand_template(template, geometry, frame_bytes))
    if section.generated is not None:
        candidates.extend(generate_entries(section.generated, geometry, seed))

    by_cell: dict[DramCoordinate, FaultEntry] = {}
    for entry in candidates:
        if not entry.victim.in_geometry(geometry):
            raise AddressRangeError(f"fault entry {entry.victim} outside geometry")
        if entry.victim in by_cell:
            logger.debug(f"Duplicate fault entry at {entry.victim}, keeping the first")
            continue
        by_cell[entry.victim] = entry
    return FaultMap(entries=list(by_cell.values()))
