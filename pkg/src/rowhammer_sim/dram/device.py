"""DRAM device: cell array, row buffers, refresh schedule and the disturbance fault engine."""

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from rowhammer_sim.dram.mapping import decode, encode, validate_mapping
from rowhammer_sim.dram.schema import (
    AddressMapping,
    DramCoordinate,
    DramGeometry,
    FaultEntry,
    FaultMap,
    FlipRecord,
    RefreshConfig,
    RowBufferPolicy,
    RowPolicyKind,
    ServedFrom,
)
from rowhammer_sim.errors import AddressRangeError, SimulationError


class ActivationHook(Protocol):
    def on_activate(self, dram: "Dram", bank: int, row: int, tick: int) -> None: ...


@dataclass(slots=True)
class AccessResult:
    served_from: ServedFrom
    flips: list[FlipRecord] = field(default_factory=list)


class ActivationLedger:
    """Activation counts per row and per-victim exposure since the victim's last refresh."""

    def __init__(self) -> None:
        self.row_counts: dict[tuple[int, int], int] = {}
        self.exposure: dict[tuple[int, int], dict[int, int]] = {}
        self.total_activations = 0

    def record(self, bank: int, row: int) -> None:
        key = (bank, row)
        self.row_counts[key] = self.row_counts.get(key, 0) + 1
        self.total_activations += 1

    def expose(self, bank: int, victim_row: int, aggressor_row: int) -> int:
        per_victim = self.exposure.setdefault((bank, victim_row), {})
        count = per_victim.get(aggressor_row, 0) + 1
        per_victim[aggressor_row] = count
        return count

    def reset_row(self, bank: int, row: int) -> None:
        self.row_counts.pop((bank, row), None)
        self.exposure.pop((bank, row), None)

    def count(self, bank: int, row: int) -> int:
        return self.row_counts.get((bank, row), 0)


@dataclass(slots=True)
class _FaultState:
    index: int
    entry: FaultEntry
    byte: int
    bit: int


class Dram:
    """Byte-addressable DRAM with per-bank row buffers and a deterministic fault engine.

    `cells` holds what the device currently stores; `intended` holds what was last written
    through `write_bits`/`write_bytes`. Flips only ever touch `cells`.
    """

    def __init__(
        self,
        geometry: DramGeometry,
        *,
        policy: RowBufferPolicy | None = None,
        refresh: RefreshConfig | None = None,
        fault_map: FaultMap | None = None,
        mapping: AddressMapping | None = None,
        seed: int = 0,
    ) -> None:
        self.geometry = geometry
        self.policy = policy or RowBufferPolicy()
        self.refresh = refresh or RefreshConfig()
        self.mapping = mapping or AddressMapping()
        validate_mapping(geometry, self.mapping)
        self.fault_map = fault_map or FaultMap()

        shape = (geometry.total_banks, geometry.rows_per_bank, geometry.bytes_per_row)
        self.cells = np.zeros(shape, dtype=np.uint8)
        self.intended = np.zeros(shape, dtype=np.uint8)
        self.ledger = ActivationLedger()
        self.flip_log: list[FlipRecord] = []
        self.hooks: list[ActivationHook] = []

        self._rng = np.random.default_rng(seed)
        self._open_row: dict[int, int | None] = {}
        self._last_access: dict[int, int] = {}
        self._last_refresh_tick = -1
        self._tried: set[int] = set()

        self._faults: dict[tuple[int, int], list[_FaultState]] = {}
        for index, entry in enumerate(self.fault_map.entries):
            victim = entry.victim
            key = (victim.bank_id(geometry), victim.row)
            self._faults.setdefault(key, []).append(
                _FaultState(index, entry, victim.byte_offset, victim.bit_offset)
            )
        self._max_radius = self.fault_map.max_radius
        self.set_refresh(self.refresh)

    # ── Refresh ──────────────────────────────────────────────────────────────

    def set_refresh(self, refresh: RefreshConfig) -> None:
        self.refresh = refresh
        interval = refresh.effective_interval
        rows = self.geometry.rows_per_bank
        self._schedule: dict[int, list[int]] = {}
        for row in range(rows):
            self._schedule.setdefault((row * interval) // rows, []).append(row)

    def refresh_step(self, tick: int) -> list[int]:
        """Refresh every row index due in (last refreshed tick, tick]; returns the row indices."""
        if tick <= self._last_refresh_tick:
            return []
        interval = self.refresh.effective_interval
        if tick - self._last_refresh_tick >= interval:
            due = list(range(self.geometry.rows_per_bank))
        else:
            due = []
            for t in range(self._last_refresh_tick + 1, tick + 1):
                due.extend(self._schedule.get(t % interval, ()))
        self._last_refresh_tick = tick
        for row in due:
            for bank in range(self.geometry.total_banks):
                self.refresh_row(bank, row)
        return due

    def refresh_row(self, bank: int, row: int) -> None:
        """Recharge one row: its counters and exposure reset and its faults become eligible again."""
        self.ledger.reset_row(bank, row)
        for state in self._faults.get((bank, row), ()):
            self._tried.discard(state.index)

    # ── Activation ───────────────────────────────────────────────────────────

    def _bank_of(self, coord: DramCoordinate) -> int:
        if not coord.in_geometry(self.geometry):
            raise AddressRangeError(f"{coord} outside geometry")
        return coord.bank_id(self.geometry)

    def activate(self, coord: DramCoordinate, tick: int) -> AccessResult:
        return self.activate_row(self._bank_of(coord), coord.row, tick)

    def activate_address(self, phys: int, tick: int) -> AccessResult:
        bank, row, _ = decode(phys, self.geometry, self.mapping)
        return self.activate_row(bank, row, tick)

    def activate_row(self, bank: int, row: int, tick: int) -> AccessResult:
        if not (0 <= bank < self.geometry.total_banks and 0 <= row < self.geometry.rows_per_bank):
            raise AddressRangeError(f"bank {bank} row {row} outside geometry")
        last = self._last_access.get(bank)
        if last is not None and tick < last:
            raise SimulationError(f"tick {tick} precedes last access {last} on bank {bank}")
        self.refresh_step(tick)

        open_row = self._open_row.get(bank)
        if (
            self.policy.kind is RowPolicyKind.ADAPTIVE
            and open_row is not None
            and last is not None
            and tick - last > self.policy.idle_threshold
        ):
            open_row = None
        self._last_access[bank] = tick

        if self.policy.kind is not RowPolicyKind.CLOSE and open_row == row:
            return AccessResult(ServedFrom.ROW_BUFFER)

        self._open_row[bank] = None if self.policy.kind is RowPolicyKind.CLOSE else row
        self.ledger.record(bank, row)
        flips = self._disturb(bank, row, tick)
        for hook in self.hooks:
            hook.on_activate(self, bank, row, tick)
        return AccessResult(ServedFrom.ROW_ARRAY, flips)

    def _disturb(self, bank: int, aggressor: int, tick: int) -> list[FlipRecord]:
        if not self._max_radius:
            return []
        flips: list[FlipRecord] = []
        lo = max(0, aggressor - self._max_radius)
        hi = min(self.geometry.rows_per_bank, aggressor + self._max_radius + 1)
        for victim_row in range(lo, hi):
            if victim_row == aggressor:
                continue
            states = self._faults.get((bank, victim_row))
            if not states:
                continue
            distance = abs(victim_row - aggressor)
            exposure = self.ledger.expose(bank, victim_row, aggressor)
            for state in states:
                entry = state.entry
                if distance > entry.blast_radius or exposure < entry.threshold:
                    continue
                if state.index in self._tried:
                    continue
                current = (int(self.cells[bank, victim_row, state.byte]) >> state.bit) & 1
                if current != entry.direction.preflip_value:
                    continue
                self._tried.add(state.index)
                if entry.flip_probability < 1.0 and self._rng.random() >= entry.flip_probability:
                    continue
                self.cells[bank, victim_row, state.byte] ^= np.uint8(1 << state.bit)
                record = FlipRecord(
                    bank=bank,
                    row=victim_row,
                    byte_offset=state.byte,
                    bit=state.bit,
                    direction=entry.direction,
                    aggressor_row=aggressor,
                    tick=tick,
                )
                flips.append(record)
                self.flip_log.append(record)
        return flips

    # ── Cell access ──────────────────────────────────────────────────────────

    def read_bits(self, coord: DramCoordinate) -> int:
        """Byte currently stored at `coord`."""
        return int(self.cells[self._bank_of(coord), coord.row, coord.byte_offset])

    def write_bits(self, coord: DramCoordinate, value: int) -> None:
        bank = self._bank_of(coord)
        self.cells[bank, coord.row, coord.byte_offset] = value
        self.intended[bank, coord.row, coord.byte_offset] = value

    def _segments(self, phys: int, length: int):
        end = phys + length
        while phys < end:
            bank, row, byte = decode(phys, self.geometry, self.mapping)
            span = min(self.geometry.bytes_per_row - byte, end - phys)
            yield bank, row, byte, span
            phys += span

    def read_bytes(self, phys: int, length: int) -> bytes:
        out = bytearray()
        for bank, row, byte, span in self._segments(phys, length):
            out += self.cells[bank, row, byte : byte + span].tobytes()
        return bytes(out)

    def intended_bytes(self, phys: int, length: int) -> bytes:
        out = bytearray()
        for bank, row, byte, span in self._segments(phys, length):
            out += self.intended[bank, row, byte : byte + span].tobytes()
        return bytes(out)

    def write_bytes(self, phys: int, data: bytes) -> None:
        pos = 0
        for bank, row, byte, span in self._segments(phys, len(data)):
            chunk = np.frombuffer(data[pos : pos + span], dtype=np.uint8)
            self.cells[bank, row, byte : byte + span] = chunk
            self.intended[bank, row, byte : byte + span] = chunk
            pos += span

    def scrub(self, phys: int, length: int) -> None:
        """Restore stored cells to their intended contents."""
        for bank, row, byte, span in self._segments(phys, length):
            self.cells[bank, row, byte : byte + span] = self.intended[bank, row, byte : byte + span]

    def faults_in_row(self, bank: int, row: int) -> list[FaultEntry]:
        return [state.entry for state in self._faults.get((bank, row), ())]

    def address_of(self, bank: int, row: int, byte: int = 0) -> int:
        return encode(bank, row, byte, self.geometry, self.mapping)

    def dump(self) -> str:
        """Line-oriented dump of every non-zero row, for golden comparisons."""
        lines = []
        for bank in range(self.geometry.total_banks):
            for row in range(self.geometry.rows_per_bank):
                data = self.cells[bank, row]
                if data.any():
                    lines.append(f"b{bank:02d} r{row:04d} {data.tobytes().hex()}")
        return "\n".join(lines) + ("\n" if lines else "")
