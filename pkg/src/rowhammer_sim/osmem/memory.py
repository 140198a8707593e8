"""Physical memory facade: frame arithmetic over the DRAM device and the checked read path."""

from typing import Protocol

from rowhammer_sim.dram.device import Dram
from rowhammer_sim.dram.mapping import decode
from rowhammer_sim.errors import AddressRangeError

WORD_BYTES = 8


class ReadHook(Protocol):
    def on_read(self, dram: Dram, phys: int, word: bytes) -> bytes:
        """Inspect one aligned word on its way to the CPU; may correct it or raise DefenseDetected."""
        ...


class PhysicalMemory:
    def __init__(self, dram: Dram, frame_bytes: int) -> None:
        row_bytes = dram.geometry.bytes_per_row
        if frame_bytes % WORD_BYTES or row_bytes % frame_bytes:
            raise AddressRangeError("frame size must be a word multiple dividing the row size")
        self.dram = dram
        self.frame_bytes = frame_bytes
        self.frame_count = dram.geometry.capacity // frame_bytes
        self.frames_per_row = row_bytes // frame_bytes
        self.read_hooks: list[ReadHook] = []

    def frame_address(self, frame: int) -> int:
        if not 0 <= frame < self.frame_count:
            raise AddressRangeError(f"frame {frame} outside 0..{self.frame_count - 1}")
        return frame * self.frame_bytes

    def frame_of(self, phys: int) -> int:
        return phys // self.frame_bytes

    def frame_location(self, frame: int) -> tuple[int, int, int]:
        """(flat bank, row, slot within row) of a frame."""
        bank, row, byte = decode(self.frame_address(frame), self.dram.geometry, self.dram.mapping)
        return bank, row, byte // self.frame_bytes

    def frames_in_row(self, bank: int, row: int) -> list[int]:
        base = self.dram.address_of(bank, row, 0)
        return [self.frame_of(base) + slot for slot in range(self.frames_per_row)]

    def read(self, phys: int, length: int) -> bytes:
        """Read through every installed read hook, one aligned word at a time."""
        if not self.read_hooks:
            return self.dram.read_bytes(phys, length)
        start = phys - phys % WORD_BYTES
        end = phys + length
        out = bytearray()
        for word_phys in range(start, end, WORD_BYTES):
            word = self.dram.read_bytes(word_phys, WORD_BYTES)
            for hook in self.read_hooks:
                word = hook.on_read(self.dram, word_phys, word)
            out += word
        offset = phys - start
        return bytes(out[offset : offset + length])

    def read_raw(self, phys: int, length: int) -> bytes:
        return self.dram.read_bytes(phys, length)

    def write(self, phys: int, data: bytes) -> None:
        self.dram.write_bytes(phys, data)

    def read_frame(self, frame: int) -> bytes:
        return self.read(self.frame_address(frame), self.frame_bytes)

    def write_frame(self, frame: int, data: bytes) -> None:
        if len(data) > self.frame_bytes:
            raise AddressRangeError(f"{len(data)} bytes do not fit a {self.frame_bytes}-byte frame")
        self.write(self.frame_address(frame), data.ljust(self.frame_bytes, b"\0"))
