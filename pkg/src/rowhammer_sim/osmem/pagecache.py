"""Disk image and the write-back page cache in front of it."""

from loguru import logger

from rowhammer_sim.errors import NotMappedError
from rowhammer_sim.osmem.buddy import BuddyAllocator
from rowhammer_sim.osmem.memory import PhysicalMemory
from rowhammer_sim.osmem.schema import FileObject, FrameKind, Owner, PageCacheEntry


class Disk:
    """Persistent file contents. Only `PageCache.sync_flush` writes here."""

    def __init__(self, files: list[FileObject], page_bytes: int) -> None:
        self.page_bytes = page_bytes
        self.files: dict[str, FileObject] = {f.path: f for f in files}
        self.writes = 0

    def file(self, path: str) -> FileObject:
        if path not in self.files:
            raise NotMappedError(f"no such file: {path}")
        return self.files[path]

    def page_count(self, path: str) -> int:
        size = len(self.file(path).content)
        return max(1, -(-size // self.page_bytes))

    def read_page(self, path: str, index: int) -> bytes:
        content = self.file(path).content
        return content[index * self.page_bytes : (index + 1) * self.page_bytes]

    def _write_page(self, path: str, index: int, data: bytes) -> None:
        f = self.file(path)
        start = index * self.page_bytes
        page_len = len(f.content[start : start + self.page_bytes])
        content = f.content[:start] + data[:page_len] + f.content[start + page_len :]
        self.files[path] = f.model_copy(update={"content": content})
        self.writes += 1

    def manifest(self) -> str:
        """Directory manifest: path, mode flags, hex contents."""
        lines = []
        for path in sorted(self.files):
            f = self.files[path]
            mode = ("r" if f.world_readable else "-") + ("s" if f.mapped_shared else "-")
            lines.append(f"{path} uid={f.owner_uid} {mode} {f.content.hex()}")
        return "\n".join(lines) + "\n"


class PageCache:
    def __init__(self, memory: PhysicalMemory, allocator: BuddyAllocator, disk: Disk) -> None:
        self.memory = memory
        self.allocator = allocator
        self.disk = disk
        self.entries: dict[tuple[str, int], PageCacheEntry] = {}

    def load_file(self, path: str) -> list[PageCacheEntry]:
        f = self.disk.file(path)
        owner = Owner.shared() if f.mapped_shared else Owner.kernel()
        loaded = []
        for index in range(self.disk.page_count(path)):
            key = (path, index)
            if key not in self.entries:
                block = self.allocator.alloc(0, owner, FrameKind.NORMAL)
                self.memory.write_frame(block.start, self.disk.read_page(path, index))
                self.entries[key] = PageCacheEntry(path=path, page_index=index, frame=block.start)
                logger.debug(f"Page cache: {path}[{index}] -> frame {block.start}")
            loaded.append(self.entries[key])
        return loaded

    def is_cached(self, path: str) -> bool:
        return any(p == path for p, _ in self.entries)

    def entry(self, path: str, index: int = 0) -> PageCacheEntry:
        if (path, index) not in self.entries:
            raise NotMappedError(f"{path}[{index}] not in page cache")
        return self.entries[(path, index)]

    def entry_for_frame(self, frame: int) -> PageCacheEntry | None:
        for entry in self.entries.values():
            if entry.frame == frame:
                return entry
        return None

    def evict(self, path: str) -> list[int]:
        """Drop clean cached pages of `path`; dirty pages stay resident until flushed."""
        freed = []
        for key in [k for k in self.entries if k[0] == path]:
            entry = self.entries[key]
            if entry.dirty:
                continue
            del self.entries[key]
            self.allocator.free_frame(entry.frame)
            freed.append(entry.frame)
        return freed

    def read_file(self, path: str) -> bytes:
        size = len(self.disk.file(path).content)
        data = b"".join(
            self.memory.read_frame(e.frame) for e in self.load_file(path)
        )
        return data[:size]

    def mark_dirty(self, path: str, index: int) -> None:
        self.entry(path, index).dirty = True

    def dirty_pages(self) -> list[PageCacheEntry]:
        return [e for e in self.entries.values() if e.dirty]

    def sync_flush(self) -> int:
        """Write every dirty page back byte-for-byte, as currently stored in memory."""
        written = 0
        for entry in sorted(self.dirty_pages(), key=lambda e: (e.path, e.page_index)):
            self.disk._write_page(entry.path, entry.page_index, self.memory.read_frame(entry.frame))
            entry.dirty = False
            written += 1
        if written:
            logger.debug(f"sync: wrote back {written} dirty pages")
        return written
