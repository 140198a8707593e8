"""Victim objects: what the attacker wants flipped, how it is placed and how it is observed."""

import struct
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from rowhammer_sim.attack.schema import ExpectedFlip, TargetKind
from rowhammer_sim.osmem.passwd import (
    PASSWD_PATH,
    SUDO_BRANCH_OFFSET,
    SUDO_PATH,
    decode_opcode,
    locate_field,
    login_uid,
)
from rowhammer_sim.osmem.schema import ATTACKER_UID, PTE_BYTES, VICTIM_UID, PageTableObject
from rowhammer_sim.osmem.system import encode_page_table

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World

POINTER_OFFSET = 16
POINTER_VALUE = 0x0141


def apply_flip(page: bytes, flip: ExpectedFlip) -> bytes:
    out = bytearray(page)
    out[flip.page_offset] ^= 1 << flip.bit
    return bytes(out)


class VictimObject(ABC):
    """One target object kind. `create` always places a fresh copy and makes it current."""

    kind: TargetKind
    single_copy = False

    def __init__(self, world: "World") -> None:
        self.world = world

    @property
    @abstractmethod
    def frame(self) -> int | None:
        """Frame backing the current copy, None when not resident."""
        ...

    @abstractmethod
    def template(self) -> bytes:
        """Page content the attacker knows the victim object holds."""
        ...

    @abstractmethod
    def sensitive_offsets(self) -> list[int]: ...

    @abstractmethod
    def create(self) -> int: ...

    @abstractmethod
    def release(self) -> None: ...

    @abstractmethod
    def observe(self, expected: ExpectedFlip) -> str:
        """Run the victim's behaviour probe through the system's own read paths."""
        ...

    @abstractmethod
    def behavior(self, page: bytes, expected: ExpectedFlip) -> str:
        """What `observe` reports when the victim's page holds `page`."""
        ...

    def select(self, frame: int) -> None:
        """Make the copy at `frame` current (object spraying)."""

    def read_page(self) -> bytes:
        frame = self.frame
        if frame is None:
            return b""
        return self.world.memory.read_frame(frame)


class PageTableVictim(VictimObject):
    """A page-table page mapping the attacker's shared buffer."""

    kind = TargetKind.PAGE_TABLE

    def __init__(self, world: "World") -> None:
        super().__init__(world)
        self.tables: list[PageTableObject] = []
        self.current: PageTableObject | None = None

    @property
    def frame(self) -> int | None:
        return self.current.frame if self.current else None

    def template(self) -> bytes:
        payload = encode_page_table(self.world.shared_buffer)
        return payload.ljust(self.world.memory.frame_bytes, b"\0")

    def sensitive_offsets(self) -> list[int]:
        entries = len(self.world.shared_buffer)
        return sorted(i * PTE_BYTES + b for i in range(entries) for b in (0, 1))

    def create(self) -> int:
        table = self.world.os.create_page_table(ATTACKER_UID, self.world.shared_buffer)
        self.tables.append(table)
        self.current = table
        return table.frame

    def release(self) -> None:
        if self.current is None:
            return
        self.world.os.destroy_page_table(self.current.frame)
        self.tables.remove(self.current)
        self.current = self.tables[-1] if self.tables else None

    def select(self, frame: int) -> None:
        for table in self.tables:
            if table.frame == frame:
                self.current = table

    def observe(self, expected: ExpectedFlip) -> str:
        index = expected.page_offset // PTE_BYTES
        return f"pte[{index}] -> {self.world.os.walk(self.current.frame, index)}"

    def behavior(self, page: bytes, expected: ExpectedFlip) -> str:
        index = expected.page_offset // PTE_BYTES
        frame, flags, _ = struct.unpack_from("<HBB", page, index * PTE_BYTES)
        return f"pte[{index}] -> {frame if flags & 1 else None}"


class _CachedFileVictim(VictimObject):
    """A single page of a file resident in the page cache."""

    path: str
    single_copy = True

    @property
    def frame(self) -> int | None:
        entry = self.world.os.page_cache.entries.get((self.path, 0))
        return entry.frame if entry else None

    def template(self) -> bytes:
        page = self.world.os.disk.read_page(self.path, 0)
        return page.ljust(self.world.memory.frame_bytes, b"\0")

    def create(self) -> int:
        return self.world.os.page_cache.load_file(self.path)[0].frame

    def release(self) -> None:
        self.world.os.page_cache.evict(self.path)


class PasswdVictim(_CachedFileVictim):
    """The attacker's UID field in the cached /etc/passwd page."""

    kind = TargetKind.PASSWD_UID
    path = PASSWD_PATH
    record = "user"

    def uid_span(self):
        return locate_field(self.template(), PASSWD_PATH, self.record, "uid")

    def sensitive_offsets(self) -> list[int]:
        span = self.uid_span()
        return list(range(span.offset, span.offset + span.length))

    def observe(self, expected: ExpectedFlip) -> str:
        content = self.world.os.page_cache.read_file(self.path)
        return f"login {self.record} -> uid {login_uid(content, self.record)}"

    def behavior(self, page: bytes, expected: ExpectedFlip) -> str:
        return f"login {self.record} -> uid {login_uid(page, self.record)}"


class BinaryVictim(_CachedFileVictim):
    """The branch opcode guarding the privileged path of the shared sudo binary."""

    kind = TargetKind.OPCODE
    path = SUDO_PATH

    def sensitive_offsets(self) -> list[int]:
        return [SUDO_BRANCH_OFFSET]

    def observe(self, expected: ExpectedFlip) -> str:
        addr = self.world.memory.frame_address(self.frame) + SUDO_BRANCH_OFFSET
        return decode_opcode(self.world.memory.read(addr, 1)[0])

    def behavior(self, page: bytes, expected: ExpectedFlip) -> str:
        return decode_opcode(page[SUDO_BRANCH_OFFSET])


class PointerVictim(VictimObject):
    """A 16-bit object pointer inside a page of the victim process."""

    kind = TargetKind.POINTER

    def __init__(self, world: "World") -> None:
        super().__init__(world)
        self.copies: list[int] = []
        self.current: int | None = None

    @property
    def frame(self) -> int | None:
        if self.current is None:
            return None
        return self.world.os.user_frame(VICTIM_UID, self.current)

    def template(self) -> bytes:
        page = bytearray(b"OBJ\x01".ljust(self.world.memory.frame_bytes, b"\0"))
        struct.pack_into("<H", page, POINTER_OFFSET, POINTER_VALUE)
        return bytes(page)

    def sensitive_offsets(self) -> list[int]:
        return [POINTER_OFFSET, POINTER_OFFSET + 1]

    def create(self) -> int:
        vpage = self.world.os.map_user_page(VICTIM_UID, self.template(), mergeable=True)
        self.copies.append(vpage)
        self.current = vpage
        return self.world.os.user_frame(VICTIM_UID, vpage)

    def release(self) -> None:
        if self.current is None:
            return
        self.world.os.unmap_user_page(VICTIM_UID, self.current)
        self.copies.remove(self.current)
        self.current = self.copies[-1] if self.copies else None

    def select(self, frame: int) -> None:
        for vpage in self.copies:
            if self.world.os.user_frame(VICTIM_UID, vpage) == frame:
                self.current = vpage

    def observe(self, expected: ExpectedFlip) -> str:
        page = self.world.os.read_user_page(VICTIM_UID, self.current)
        return self.behavior(page, expected)

    def behavior(self, page: bytes, expected: ExpectedFlip) -> str:
        (pointer,) = struct.unpack_from("<H", page, POINTER_OFFSET)
        return f"deref {pointer:#06x}"


VICTIM_REGISTRY: dict[TargetKind, type[VictimObject]] = {
    TargetKind.PAGE_TABLE: PageTableVictim,
    TargetKind.PASSWD_UID: PasswdVictim,
    TargetKind.OPCODE: BinaryVictim,
    TargetKind.POINTER: PointerVictim,
}


def make_victim(world: "World", kind: TargetKind) -> VictimObject:
    return VICTIM_REGISTRY[kind](world)
