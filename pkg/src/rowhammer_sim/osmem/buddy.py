"""Binary buddy frame allocator with placement-policy hooks."""

from typing import Protocol

from rowhammer_sim.errors import AllocationError
from rowhammer_sim.osmem.schema import FrameKind, FrameRange, Owner


class PlacementPolicy(Protocol):
    def on_alloc(
        self, allocator: "BuddyAllocator", frames: range, owner: Owner, kind: FrameKind
    ) -> bool:
        """Whether `frames` may be handed to `owner` for `kind`."""
        ...

    def after_alloc(
        self, allocator: "BuddyAllocator", frames: range, owner: Owner, kind: FrameKind
    ) -> None: ...


class BuddyAllocator:
    """Lowest-address-first buddy allocator; reserved frames are owned by the guard domain."""

    def __init__(self, frame_count: int, max_order: int = 5) -> None:
        if frame_count <= 0:
            raise ValueError("frame_count must be positive")
        self.frame_count = frame_count
        self.max_order = max_order
        self.free_lists: dict[int, set[int]] = {order: set() for order in range(max_order + 1)}
        self.owners: dict[int, Owner] = {}
        self.kinds: dict[int, FrameKind] = {}
        self.policies: list[PlacementPolicy] = []
        self.sequence: dict[int, int] = {}
        self._next_seq = 0

        start = 0
        while start < frame_count:
            order = max_order
            while order and (start % (1 << order) or start + (1 << order) > frame_count):
                order -= 1
            self.free_lists[order].add(start)
            start += 1 << order

    # ── Queries ──────────────────────────────────────────────────────────────

    @property
    def free_count(self) -> int:
        return sum(len(blocks) << order for order, blocks in self.free_lists.items())

    @property
    def allocated_count(self) -> int:
        return len(self.owners)

    def is_free(self, frame: int) -> bool:
        return self._block_containing(frame) is not None

    def owner_of(self, frame: int) -> Owner | None:
        return self.owners.get(frame)

    def frames_owned_by(self, owner: Owner) -> list[int]:
        return sorted(f for f, o in self.owners.items() if o == owner)

    def _block_containing(self, frame: int) -> tuple[int, int] | None:
        for order, blocks in self.free_lists.items():
            start = frame & ~((1 << order) - 1)
            if start in blocks:
                return start, order
        return None

    # ── Allocation ───────────────────────────────────────────────────────────

    def _allowed(self, frames: range, owner: Owner, kind: FrameKind) -> bool:
        return all(p.on_alloc(self, frames, owner, kind) for p in self.policies)

    def alloc(self, order: int, owner: Owner, kind: FrameKind = FrameKind.NORMAL) -> FrameRange:
        """Smallest fitting order first, lowest address within it, subject to placement policies."""
        if not 0 <= order <= self.max_order:
            raise AllocationError(f"order {order} outside 0..{self.max_order}")
        size = 1 << order
        for block_order in range(order, self.max_order + 1):
            for start in sorted(self.free_lists[block_order]):
                for sub in range(start, start + (1 << block_order), size):
                    frames = range(sub, sub + size)
                    if self._allowed(frames, owner, kind):
                        self._split_to(start, block_order, sub, order)
                        self._assign(frames, owner, kind)
                        for policy in self.policies:
                            policy.after_alloc(self, frames, owner, kind)
                        return FrameRange(start=sub, order=order)
        raise AllocationError(f"no free order-{order} block for {owner.domain} ({kind})")

    def _split_to(self, start: int, block_order: int, target: int, order: int) -> None:
        self.free_lists[block_order].discard(start)
        cur, cur_order = start, block_order
        while cur_order > order:
            cur_order -= 1
            half = 1 << cur_order
            if target >= cur + half:
                self.free_lists[cur_order].add(cur)
                cur += half
            else:
                self.free_lists[cur_order].add(cur + half)

    def _assign(self, frames: range, owner: Owner, kind: FrameKind) -> None:
        for frame in frames:
            self.owners[frame] = owner
            self.kinds[frame] = kind
            self.sequence[frame] = self._next_seq
        self._next_seq += 1

    def free(self, block: FrameRange) -> None:
        for frame in block.frames:
            if frame not in self.owners:
                raise AllocationError(f"double free of frame {frame}")
        for frame in block.frames:
            del self.owners[frame]
            self.kinds.pop(frame, None)
            self.sequence.pop(frame, None)
        start, order = block.start, block.order
        while order < self.max_order:
            buddy = start ^ (1 << order)
            if buddy not in self.free_lists[order]:
                break
            self.free_lists[order].discard(buddy)
            start = min(start, buddy)
            order += 1
        self.free_lists[order].add(start)

    def free_frame(self, frame: int) -> None:
        self.free(FrameRange(start=frame, order=0))

    def reserve(self, frames: list[int] | range) -> int:
        """Hand free frames to the guard domain; returns how many were reserved."""
        reserved = 0
        for frame in frames:
            block = self._block_containing(frame)
            if block is None:
                continue
            self._split_to(block[0], block[1], frame, 0)
            self._assign(range(frame, frame + 1), Owner.guard(), FrameKind.NORMAL)
            reserved += 1
        return reserved
