"""OS state: allocator, address spaces, page tables, page cache and authorized writes."""

import struct

from loguru import logger
from pydantic import BaseModel, Field

from rowhammer_sim.errors import FieldWriteError, NotMappedError, PermissionDeniedError
from rowhammer_sim.osmem.buddy import BuddyAllocator
from rowhammer_sim.osmem.memory import PhysicalMemory
from rowhammer_sim.osmem.pagecache import Disk, PageCache
from rowhammer_sim.osmem.passwd import ACCOUNT_NAMES, SUID_COMMANDS, default_files, locate_field
from rowhammer_sim.osmem.schema import (
    PTE_BYTES,
    PTE_PRESENT,
    PTE_USER,
    PTE_WRITABLE,
    ROOT_UID,
    FileObject,
    FrameKind,
    Owner,
    PageTableObject,
)


def encode_page_table(mapped_frames: list[int]) -> bytes:
    """PTE i at offset 4*i: LE16 frame, flags, reserved byte."""
    flags = PTE_PRESENT | PTE_WRITABLE | PTE_USER
    return b"".join(struct.pack("<HBB", f, flags, 0) for f in mapped_frames)


class AddressSpace(BaseModel):
    uid: int
    mappings: dict[int, int] = Field(default_factory=dict, description="vpage -> frame")
    mergeable: set[int] = Field(default_factory=set)
    next_vpage: int = 0


class OsState:
    def __init__(
        self,
        memory: PhysicalMemory,
        *,
        max_order: int = 5,
        dedup_enabled: bool = False,
        files: list[FileObject] | None = None,
    ) -> None:
        self.memory = memory
        self.allocator = BuddyAllocator(memory.frame_count, max_order)
        self.disk = Disk(files if files is not None else default_files(), memory.frame_bytes)
        self.page_cache = PageCache(memory, self.allocator, self.disk)
        self.dedup_enabled = dedup_enabled
        self.spaces: dict[int, AddressSpace] = {}
        self.refcounts: dict[int, int] = {}
        self.page_tables: dict[int, PageTableObject] = {}

    # ── Frames and user pages ────────────────────────────────────────────────

    def space(self, uid: int) -> AddressSpace:
        return self.spaces.setdefault(uid, AddressSpace(uid=uid))

    def map_user_page(
        self,
        uid: int,
        content: bytes = b"",
        *,
        kind: FrameKind = FrameKind.NORMAL,
        mergeable: bool = False,
    ) -> int:
        """Allocate and map one page for `uid`; returns the virtual page number."""
        frame = self.allocator.alloc(0, Owner.user(uid), kind).start
        self.memory.write_frame(frame, content)
        space = self.space(uid)
        vpage = space.next_vpage
        space.next_vpage += 1
        space.mappings[vpage] = frame
        self.refcounts[frame] = 1
        if mergeable:
            space.mergeable.add(vpage)
        return vpage

    def unmap_user_page(self, uid: int, vpage: int) -> int:
        space = self.space(uid)
        if vpage not in space.mappings:
            raise NotMappedError(f"uid {uid} has no page {vpage}")
        frame = space.mappings.pop(vpage)
        space.mergeable.discard(vpage)
        self._drop_ref(frame)
        return frame

    def _drop_ref(self, frame: int) -> None:
        self.refcounts[frame] = self.refcounts.get(frame, 1) - 1
        if self.refcounts[frame] <= 0:
            del self.refcounts[frame]
            self.allocator.free_frame(frame)

    def user_frame(self, uid: int, vpage: int) -> int:
        mapping = self.space(uid).mappings
        if vpage not in mapping:
            raise NotMappedError(f"uid {uid} has no page {vpage}")
        return mapping[vpage]

    def read_user_page(self, uid: int, vpage: int) -> bytes:
        return self.memory.read_frame(self.user_frame(uid, vpage))

    def write_user_page(self, uid: int, vpage: int, offset: int, data: bytes) -> int:
        """Store through the owner's mapping, breaking copy-on-write sharing first."""
        frame = self.user_frame(uid, vpage)
        if self.refcounts.get(frame, 1) > 1:
            kind = self.allocator.kinds.get(frame, FrameKind.NORMAL)
            copy = self.allocator.alloc(0, Owner.user(uid), kind).start
            self.memory.write_frame(copy, self.memory.read_frame(frame))
            self.refcounts[frame] -= 1
            self.refcounts[copy] = 1
            self.space(uid).mappings[vpage] = copy
            logger.debug(f"COW: uid {uid} page {vpage} split {frame} -> {copy}")
            frame = copy
        self.memory.write(self.memory.frame_address(frame) + offset, data)
        return frame

    def pagemap_query(self, uid: int, vpage: int, *, can_read_pagemap: bool) -> int:
        """Physical frame behind a virtual page; only for actors with pagemap access."""
        if not can_read_pagemap:
            raise PermissionDeniedError("pagemap requires privileged access")
        return self.user_frame(uid, vpage)

    # ── Page tables ──────────────────────────────────────────────────────────

    def create_page_table(
        self, owner_uid: int, mapped_frames: list[int], *, base_vpage: int = 0
    ) -> PageTableObject:
        entries_per_page = self.memory.frame_bytes // PTE_BYTES
        if len(mapped_frames) > entries_per_page:
            raise ValueError(f"a page table holds at most {entries_per_page} entries")
        frame = self.allocator.alloc(0, Owner.kernel(), FrameKind.NORMAL).start
        self.memory.write_frame(frame, encode_page_table(mapped_frames))
        table = PageTableObject(
            frame=frame, owner_uid=owner_uid, base_vpage=base_vpage, mapped_frames=mapped_frames
        )
        self.page_tables[frame] = table
        return table

    def destroy_page_table(self, frame: int) -> None:
        if frame not in self.page_tables:
            raise NotMappedError(f"frame {frame} is not a page table")
        del self.page_tables[frame]
        self.allocator.free_frame(frame)

    def walk(self, table_frame: int, index: int) -> int | None:
        """Resolve entry `index` of a page table as the MMU would, reading through memory."""
        raw = self.memory.read(self.memory.frame_address(table_frame) + index * PTE_BYTES, PTE_BYTES)
        frame, flags, _ = struct.unpack("<HBB", raw)
        if not flags & PTE_PRESENT:
            return None
        return frame

    # ── Files ────────────────────────────────────────────────────────────────

    def legit_write(self, path: str, field: str, value: bytes, actor: int, command: str) -> None:
        """Edit `field` of the caller's own record in place, the way a suid helper does."""
        if actor != ROOT_UID:
            spec = SUID_COMMANDS.get(command)
            if spec is None or spec.path != path or spec.field != field:
                raise PermissionDeniedError(f"uid {actor} may not change {path}:{field} via {command}")
        record = ACCOUNT_NAMES.get(actor)
        if record is None:
            raise PermissionDeniedError(f"uid {actor} has no account record")

        entries = self.page_cache.load_file(path)
        page = self.memory.frame_bytes
        content = b"".join(
            self.memory.read(self.memory.frame_address(e.frame), page) for e in entries
        )
        span = locate_field(content, path, record, field)
        if len(value) != span.length:
            raise FieldWriteError(f"{field} edit must keep length {span.length}")
        # The record may straddle a page boundary; each touched page is written and dirtied.
        pos = span.offset
        end = span.offset + len(value)
        while pos < end:
            index, offset = divmod(pos, page)
            chunk = value[pos - span.offset : min(end, (index + 1) * page) - span.offset]
            entry = entries[index]
            self.memory.write(self.memory.frame_address(entry.frame) + offset, chunk)
            self.page_cache.mark_dirty(path, entry.page_index)
            pos += len(chunk)
        logger.debug(f"{command}: uid {actor} set {path}:{record}.{field} = {value!r}")

    def sync_flush(self) -> int:
        return self.page_cache.sync_flush()

    def dedup_merge_pass(self) -> int:
        from rowhammer_sim.osmem.dedup import merge_pass

        return merge_pass(self)
