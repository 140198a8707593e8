"""Colon-separated account databases and the suid commands allowed to edit them."""

from pydantic import BaseModel

from rowhammer_sim.errors import FieldWriteError
from rowhammer_sim.osmem.schema import ATTACKER_UID, ROOT_UID, FileObject

PASSWD_PATH = "/etc/passwd"
SHADOW_PATH = "/etc/shadow"
SUDO_PATH = "/usr/bin/sudo"

PASSWD_FIELDS = ("name", "password", "uid", "gid", "gecos", "home", "shell")
SHADOW_FIELDS = ("name", "hash", "lastchg")
FILE_FIELDS = {PASSWD_PATH: PASSWD_FIELDS, SHADOW_PATH: SHADOW_FIELDS}

# Conditional branch guarding the privileged path of the shared binary.
SUDO_BRANCH_OFFSET = 16

# Session identity of each uid; suid commands edit the record named after the caller.
ACCOUNT_NAMES = {ROOT_UID: "root", ATTACKER_UID: "user"}
OPCODES = {0x74: "je", 0x75: "jne", 0xEB: "jmp", 0x90: "nop"}


class FieldSpan(BaseModel):
    record: str
    field: str
    offset: int
    length: int
    value: bytes


class SuidCommand(BaseModel):
    path: str
    field: str
    flushes: str


SUID_COMMANDS: dict[str, SuidCommand] = {
    "chsh": SuidCommand(path=PASSWD_PATH, field="shell", flushes=PASSWD_PATH),
    "chfn": SuidCommand(path=PASSWD_PATH, field="gecos", flushes=PASSWD_PATH),
    "passwd": SuidCommand(path=SHADOW_PATH, field="hash", flushes=SHADOW_PATH),
}


def parse_records(content: bytes, fields: tuple[str, ...]) -> list[list[FieldSpan]]:
    """Split a NUL-padded record file into per-field byte spans."""
    records = []
    pos = 0
    text = content.split(b"\0", 1)[0]
    for line in text.split(b"\n"):
        if line:
            parts = line.split(b":")
            name = parts[0].decode(errors="replace")
            spans, offset = [], pos
            for field, value in zip(fields, parts, strict=False):
                spans.append(FieldSpan(record=name, field=field, offset=offset, length=len(value), value=value))
                offset += len(value) + 1
            records.append(spans)
        pos += len(line) + 1
    return records


def locate_field(content: bytes, path: str, record: str, field: str) -> FieldSpan:
    fields = FILE_FIELDS.get(path)
    if fields is None:
        raise FieldWriteError(f"{path} has no record structure")
    for spans in parse_records(content, fields):
        if spans and spans[0].value.decode(errors="replace") == record:
            for span in spans:
                if span.field == field:
                    return span
    raise FieldWriteError(f"{path}: no field '{field}' in record '{record}'")


def parse_uid(raw: bytes) -> int | None:
    return int(raw) if raw.isdigit() else None


def login_uid(content: bytes, record: str) -> int | None:
    """UID a login as `record` is granted, as the login program would parse it."""
    try:
        return parse_uid(locate_field(content, PASSWD_PATH, record, "uid").value)
    except FieldWriteError:
        return None


def decode_opcode(byte: int) -> str:
    return OPCODES.get(byte, f"db {byte:#04x}")


def alternate_shell(current: bytes) -> bytes:
    """A different shell of identical length, for an in-place chsh."""
    for a, b in ((b"/bin/zsh", b"/bin/ksh"), (b"/bin/ksh", b"/bin/zsh"), (b"/bin/sh", b"/bin/ah")):
        if current == a:
            return b
    return current[:-1] + (b"a" if current[-1:] != b"a" else b"b")


def default_files() -> list[FileObject]:
    passwd = (
        b"root:x:0000:0000:root:/root:/bin/zsh\n"
        b"user:x:1001:1001:user:/home/user:/bin/zsh\n"
    )
    shadow = b"root:$6$r00t:19000\nuser:$6$us3r:19000\n"
    sudo = bytearray(b"\x7fELF\x02\x01\x01".ljust(SUDO_BRANCH_OFFSET, b"\0"))
    sudo += bytes([0x75, 0x0A, 0x31, 0xC0, 0xC3]) + b"\x90" * 11
    return [
        FileObject(path=PASSWD_PATH, content=passwd, world_readable=True),
        FileObject(path=SHADOW_PATH, content=shadow, world_readable=False),
        FileObject(path=SUDO_PATH, content=bytes(sudo), world_readable=True, mapped_shared=True),
    ]
