"""Exception hierarchy shared by every simulator layer."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class AddressRangeError(SimulationError, ValueError):
    """A physical address or DRAM coordinate lies outside the configured geometry."""


class AllocationError(SimulationError):
    """The frame allocator cannot satisfy a request."""


class PermissionDeniedError(SimulationError):
    """An actor attempted an operation its privileges do not allow."""


class NotMappedError(SimulationError):
    """A virtual page has no translation in the actor's address space."""


class FieldWriteError(SimulationError, ValueError):
    """An in-place record edit cannot be applied (unknown record/field or length change)."""


class EvictionSetError(SimulationError):
    """The candidate pool holds too few lines congruent with the target."""


class CorpusError(SimulationError):
    """A bundled replication corpus is incomplete or inconsistent."""


class DefenseDetected(SimulationError):
    """A countermeasure detected the attack and halted it."""

    def __init__(self, countermeasure: str, detail: str = "") -> None:
        self.countermeasure = countermeasure
        self.detail = detail
        super().__init__(f"{countermeasure}: {detail}" if detail else countermeasure)


# ── Configuration ────────────────────────────────────────────────────────────


class ConfigError(SimulationError):
    """A scenario configuration could not be parsed or validated."""

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None) -> None:
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ConfigSyntaxError(ConfigError):
    """The configuration text is not valid TOML."""


class UnknownIdentifierError(ConfigError):
    """A technique, origin, countermeasure or key name is not recognised."""


class ConstraintViolationError(ConfigError):
    """A value is well-formed but violates a model constraint."""
