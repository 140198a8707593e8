"""Property-based tests for the buddy allocator, page cache and authorized file writes."""
# IMMUTABLE: Do not modify these tests. Fix implementation if tests fail.

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rowhammer_sim.dram.device import Dram
from rowhammer_sim.dram.schema import DramGeometry
from rowhammer_sim.errors import AllocationError, FieldWriteError, PermissionDeniedError
from rowhammer_sim.osmem.buddy import BuddyAllocator
from rowhammer_sim.osmem.memory import PhysicalMemory
from rowhammer_sim.osmem.passwd import PASSWD_PATH, locate_field
from rowhammer_sim.osmem.schema import ATTACKER_UID, ROOT_UID, Domain, FileObject, Owner
from rowhammer_sim.osmem.system import OsState

USER = Owner.user(ATTACKER_UID)


@pytest.fixture
def os_state():  # A
    """Default 16 KiB machine: 128 frames of 128 bytes."""
    memory = PhysicalMemory(Dram(DramGeometry()), frame_bytes=128)
    return OsState(memory, dedup_enabled=True)


# ── Buddy allocator ──────────────────────────────────────────────────────────


@given(ops=st.lists(st.tuples(st.booleans(), st.integers(min_value=0, max_value=3)), max_size=80))
@settings(max_examples=60)
def test_frames_are_conserved(ops):  # A
    """Free plus allocated frames always equals the total, whatever the alloc/free order."""
    allocator = BuddyAllocator(128, max_order=5)
    live = []
    for is_alloc, order in ops:
        if is_alloc or not live:
            try:
                live.append(allocator.alloc(order, USER))
            except AllocationError:
                pass
        else:
            allocator.free(live.pop(0))
        assert allocator.free_count + allocator.allocated_count == 128
    for block in live:
        allocator.free(block)
    assert allocator.free_count == 128
    assert allocator.free_lists[5] == {0, 32, 64, 96}


@given(count=st.integers(min_value=1, max_value=128))
@settings(max_examples=30)
def test_allocation_is_lowest_address_first(count):  # A
    allocator = BuddyAllocator(128)
    frames = [allocator.alloc(0, USER).start for _ in range(count)]
    assert frames == list(range(count))


def test_freed_hole_is_reused_first():  # A
    """Smallest fitting order wins, so an order-0 hole beats splitting a larger block."""
    allocator = BuddyAllocator(128)
    for _ in range(8):
        allocator.alloc(0, USER)
    allocator.free_frame(2)
    assert allocator.alloc(0, Owner.kernel()).start == 2


def test_double_free_raises():  # A
    allocator = BuddyAllocator(16, max_order=4)
    block = allocator.alloc(0, USER)
    allocator.free(block)
    with pytest.raises(AllocationError):
        allocator.free(block)


def test_exhaustion_raises():  # A
    allocator = BuddyAllocator(4, max_order=2)
    for _ in range(4):
        allocator.alloc(0, USER)
    with pytest.raises(AllocationError):
        allocator.alloc(0, USER)


def test_reserve_hands_frames_to_guard_domain():  # A
    allocator = BuddyAllocator(16, max_order=4)
    assert allocator.reserve([2, 3]) == 2
    assert allocator.owner_of(3).domain is Domain.GUARD
    assert allocator.reserve([3]) == 0
    frames = [allocator.alloc(0, USER).start for _ in range(4)]
    assert frames == [0, 1, 4, 5]


# ── Pages, page tables and files ─────────────────────────────────────────────


def test_page_table_walk_reads_through_memory(os_state):  # A
    table = os_state.create_page_table(ATTACKER_UID, [9, 11, 13])
    assert os_state.walk(table.frame, 1) == 11
    base = os_state.memory.frame_address(table.frame)
    os_state.memory.write(base + 4, b"\x0a")
    assert os_state.walk(table.frame, 1) == 10


def test_pagemap_needs_privilege(os_state):  # A
    vpage = os_state.map_user_page(ATTACKER_UID, b"data")
    with pytest.raises(PermissionDeniedError):
        os_state.pagemap_query(ATTACKER_UID, vpage, can_read_pagemap=False)
    assert os_state.pagemap_query(ATTACKER_UID, vpage, can_read_pagemap=True) == 0


def test_dirty_page_written_back_byte_for_byte(os_state):  # A
    """sync_flush persists memory as stored, including flipped bits."""
    entry = os_state.page_cache.load_file(PASSWD_PATH)[0]
    base = os_state.memory.frame_address(entry.frame)
    os_state.memory.write(base + 44, b"0")
    assert os_state.sync_flush() == 0
    os_state.page_cache.mark_dirty(PASSWD_PATH, 0)
    assert os_state.sync_flush() == 1
    on_disk = os_state.disk.read_page(PASSWD_PATH, 0)
    assert locate_field(on_disk, PASSWD_PATH, "user", "uid").value == b"0001"


def test_clean_page_eviction_frees_frame(os_state):  # A
    entry = os_state.page_cache.load_file(PASSWD_PATH)[0]
    assert os_state.page_cache.evict(PASSWD_PATH) == [entry.frame]
    assert not os_state.page_cache.is_cached(PASSWD_PATH)
    assert os_state.allocator.is_free(entry.frame)


def test_chsh_edits_own_record_and_marks_dirty(os_state):  # A
    os_state.legit_write(PASSWD_PATH, "shell", b"/bin/ksh", ATTACKER_UID, "chsh")
    assert [e.path for e in os_state.page_cache.dirty_pages()] == [PASSWD_PATH]
    os_state.sync_flush()
    on_disk = os_state.disk.read_page(PASSWD_PATH, 0)
    assert locate_field(on_disk, PASSWD_PATH, "user", "shell").value == b"/bin/ksh"
    assert locate_field(on_disk, PASSWD_PATH, "root", "shell").value == b"/bin/zsh"


@pytest.mark.parametrize(
    "field, command",
    [("uid", "chsh"), ("shell", "passwd"), ("shell", "rm")],
)
def test_unprivileged_write_outside_command_scope_denied(os_state, field, command):  # A
    with pytest.raises(PermissionDeniedError):
        os_state.legit_write(PASSWD_PATH, field, b"0000", ATTACKER_UID, command)


def test_root_may_edit_any_field(os_state):  # A
    os_state.legit_write(PASSWD_PATH, "shell", b"/bin/ksh", ROOT_UID, "vipw")
    os_state.sync_flush()
    on_disk = os_state.disk.read_page(PASSWD_PATH, 0)
    assert locate_field(on_disk, PASSWD_PATH, "root", "shell").value == b"/bin/ksh"


def test_field_write_must_keep_length(os_state):  # A
    with pytest.raises(FieldWriteError):
        os_state.legit_write(PASSWD_PATH, "shell", b"/bin/sh", ATTACKER_UID, "chsh")


def test_dedup_merges_onto_earliest_frame(os_state):  # A
    """Identical mergeable pages of two owners share the first-created frame; writes break sharing."""
    first = os_state.map_user_page(ATTACKER_UID, b"same", mergeable=True)
    second = os_state.map_user_page(2000, b"same", mergeable=True)
    assert os_state.dedup_merge_pass() == 1
    assert os_state.user_frame(2000, second) == os_state.user_frame(ATTACKER_UID, first) == 0
    assert os_state.allocator.is_free(1)

    copy = os_state.write_user_page(2000, second, 0, b"diff")
    assert copy != 0
    assert os_state.read_user_page(ATTACKER_UID, first).startswith(b"same")


@pytest.mark.parametrize(
    "preamble, dirty",
    [
        # Three 41-byte service lines push the attacker's record into the second page.
        (b"svc0:x:0100:0100:service:/srv:/bin/false\n" * 3, [1]),
        # The attacker's shell spans bytes 124..131, across the page boundary.
        (b"svc0:x:0100:0100:service:/srv:/bin/false\nlp:x:4:7:::/\n", [0, 1]),
    ],
)
def test_chsh_edits_record_beyond_first_page(preamble, dirty):  # A
    passwd = b"root:x:0000:0000:root:/root:/bin/zsh\n" + preamble + b"user:x:1001:1001:user:/home/user:/bin/zsh\n"
    files = [FileObject(path=PASSWD_PATH, content=passwd)]
    os_state = OsState(PhysicalMemory(Dram(DramGeometry()), frame_bytes=128), files=files)
    os_state.legit_write(PASSWD_PATH, "shell", b"/bin/ksh", ATTACKER_UID, "chsh")
    assert sorted(e.page_index for e in os_state.page_cache.dirty_pages()) == dirty
    assert os_state.sync_flush() == len(dirty)
    on_disk = os_state.disk.file(PASSWD_PATH).content
    assert len(on_disk) == len(passwd)
    assert locate_field(on_disk, PASSWD_PATH, "user", "shell").value == b"/bin/ksh"
    assert locate_field(on_disk, PASSWD_PATH, "root", "shell").value == b"/bin/zsh"
