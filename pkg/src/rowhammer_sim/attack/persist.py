"""Store Error: piggy-back a hammered flip on a legitimate write-back to disk."""

from typing import TYPE_CHECKING

from loguru import logger

from rowhammer_sim.attack.schema import HammerRecord, PersistRecord, PersistResult
from rowhammer_sim.attack.targets import VictimObject
from rowhammer_sim.attack.verify import flips_in_frame
from rowhammer_sim.errors import FieldWriteError, PermissionDeniedError
from rowhammer_sim.osmem.passwd import ACCOUNT_NAMES, SUID_COMMANDS, alternate_shell, locate_field
from rowhammer_sim.osmem.schema import ATTACKER_UID

if TYPE_CHECKING:
    from rowhammer_sim.attack.world import World


def run_se(world: "World", victim: VictimObject, hammer: HammerRecord) -> PersistRecord:
    frame = victim.frame
    entry = world.os.page_cache.entry_for_frame(frame) if frame is not None else None
    if entry is None:
        return PersistRecord(result=PersistResult.NOT_PERSISTED)

    command = next((name for name, cmd in SUID_COMMANDS.items() if cmd.path == entry.path), None)
    if command is None:
        logger.debug(f"SE: no attacker-editable field in {entry.path}")
        return PersistRecord(result=PersistResult.NOT_PERSISTED)

    field = SUID_COMMANDS[command].field
    memory = world.memory
    try:
        span = locate_field(memory.read_frame(frame), entry.path, ACCOUNT_NAMES[ATTACKER_UID], field)
        world.os.legit_write(entry.path, field, alternate_shell(span.value), ATTACKER_UID, command)
    except (FieldWriteError, PermissionDeniedError) as e:
        logger.debug(f"SE: {command} rejected: {e}")
        return PersistRecord(result=PersistResult.NOT_PERSISTED, command=command)
    written = world.os.sync_flush()

    flips = flips_in_frame(world, frame, hammer)
    disk = world.os.disk.read_page(entry.path, entry.page_index)
    base = memory.frame_address(frame)
    persisted = bool(flips) and all(
        offset < len(disk) and disk[offset] == memory.read_raw(base + offset, 1)[0]
        for offset, _ in flips
    )
    result = PersistResult.PERSISTED if persisted else PersistResult.NOT_PERSISTED
    logger.debug(f"SE: {command} flushed {written} pages, {result}")
    return PersistRecord(result=result, pages_written=written, command=command)
