"""Schema for the OS memory model: owners, frames, files and page-cache entries."""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field

ROOT_UID = 0
ATTACKER_UID = 1001
VICTIM_UID = 1002


class Domain(StrEnum):
    KERNEL = "kernel"
    USER = "user"
    SHARED = "shared"
    GUARD = "guard"


class FrameKind(StrEnum):
    NORMAL = "normal"
    DMA = "dma"
    RDMA = "rdma"
    NET = "net"


class Owner(BaseModel):
    model_config = ConfigDict(frozen=True)

    domain: Domain
    uid: int | None = None

    @staticmethod
    def kernel() -> "Owner":
        return Owner(domain=Domain.KERNEL)

    @staticmethod
    def user(uid: int) -> "Owner":
        return Owner(domain=Domain.USER, uid=uid)

    @staticmethod
    def shared() -> "Owner":
        return Owner(domain=Domain.SHARED)

    @staticmethod
    def guard() -> "Owner":
        return Owner(domain=Domain.GUARD)

    @property
    def is_user_side(self) -> bool:
        """User and shared pages belong to the unprivileged side of a privilege partition."""
        return self.domain in (Domain.USER, Domain.SHARED)


class FrameRange(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: int = Field(ge=0)
    order: int = Field(ge=0)

    @property
    def count(self) -> int:
        return 1 << self.order

    @property
    def frames(self) -> range:
        return range(self.start, self.start + self.count)


class FileObject(BaseModel):
    path: str
    content: bytes
    owner_uid: int = ROOT_UID
    world_readable: bool = True
    mapped_shared: bool = Field(
        default=False, description="Cached pages are mapped into user processes (binaries)"
    )


class PageCacheEntry(BaseModel):
    path: str
    page_index: int
    frame: int
    dirty: bool = False


class PageTableObject(BaseModel):
    """A page-table page: PTE i at offset 4*i, LE16 frame + flags + reserved."""

    frame: int
    owner_uid: int
    base_vpage: int
    mapped_frames: list[int]


PTE_BYTES = 4
PTE_PRESENT = 0x1
PTE_WRITABLE = 0x2
PTE_USER = 0x4
