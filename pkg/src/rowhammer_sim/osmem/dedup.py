"""Content-based page merging across owners (KSM-style)."""

import hashlib
from typing import TYPE_CHECKING

from loguru import logger

if TYPE_CHECKING:
    from rowhammer_sim.osmem.system import OsState


def merge_pass(os: "OsState") -> int:
    """Merge byte-identical mergeable pages of different owners onto the earliest-created frame.

    Returns the number of mappings redirected. Comparisons read raw stored bytes.
    """
    if not os.dedup_enabled:
        return 0
    groups: dict[bytes, list[tuple[int, int, int]]] = {}
    for uid, space in sorted(os.spaces.items()):
        for vpage in sorted(space.mergeable):
            frame = space.mappings[vpage]
            data = os.memory.read_raw(os.memory.frame_address(frame), os.memory.frame_bytes)
            groups.setdefault(hashlib.sha256(data).digest(), []).append((uid, vpage, frame))

    merged = 0
    for members in groups.values():
        if len({uid for uid, _, _ in members}) < 2:
            continue
        canonical = min(
            (frame for _, _, frame in members), key=lambda f: (os.allocator.sequence.get(f, 0), f)
        )
        for uid, vpage, frame in members:
            if frame == canonical:
                continue
            os.spaces[uid].mappings[vpage] = canonical
            os.refcounts[canonical] = os.refcounts.get(canonical, 1) + 1
            os._drop_ref(frame)
            merged += 1
            logger.debug(f"dedup: uid {uid} page {vpage} merged {frame} -> {canonical}")
    return merged
