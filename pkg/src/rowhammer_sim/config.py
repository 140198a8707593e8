"""Scenario configuration: TOML -> validated pydantic models."""

import hashlib
import json
import re
import tomllib
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from rowhammer_sim.attack.schema import AttackScenario
from rowhammer_sim.cache.schema import CacheConfig
from rowhammer_sim.defense.schema import Countermeasure
from rowhammer_sim.dram.schema import (
    AddressMapping,
    DramGeometry,
    FaultSection,
    RefreshConfig,
    RowBufferPolicy,
)
from rowhammer_sim.errors import (
    ConfigSyntaxError,
    ConstraintViolationError,
    UnknownIdentifierError,
)


class DramConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    geometry: DramGeometry = Field(default_factory=DramGeometry)
    row_policy: RowBufferPolicy = Field(default_factory=RowBufferPolicy)
    refresh: RefreshConfig = Field(default_factory=RefreshConfig)
    mapping: AddressMapping = Field(default_factory=AddressMapping)


class OsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    frame_bytes: int = Field(default=128, ge=8)
    max_order: int = Field(default=5, ge=0, le=10)
    dedup: bool = False
    arena_frames: int = Field(default=32, ge=0, description="Attacker pages provisioned before LP")


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1] = 1
    name: str = "scenario"
    seed: int = Field(default=0, ge=0)
    dram: DramConfig = Field(default_factory=DramConfig)
    fault_map: FaultSection = Field(default_factory=FaultSection.permissive)
    cache: CacheConfig = Field(default_factory=CacheConfig)
    os: OsConfig = Field(default_factory=OsConfig)
    attack: AttackScenario
    defenses: list[Countermeasure] = Field(default_factory=list)

    @model_validator(mode="after")
    def _fits_geometry(self) -> "ScenarioConfig":
        geometry = self.dram.geometry
        if self.os.frame_bytes % 8 or geometry.bytes_per_row % self.os.frame_bytes:
            raise ValueError("os.frame_bytes must be a multiple of 8 dividing dram.geometry.bytes_per_row")
        for entry in self.fault_map.entries:
            if not entry.victim.in_geometry(geometry):
                raise ValueError(f"fault entry {entry.victim} lies outside the DRAM geometry")
        for template in self.fault_map.templates:
            if template.rows != "all" and any(not 0 <= r < geometry.rows_per_bank for r in template.rows):
                raise ValueError("fault template rows outside the DRAM geometry")
            if template.banks != "all" and any(not 0 <= b < geometry.total_banks for b in template.banks):
                raise ValueError("fault template banks outside the DRAM geometry")
        return self

    def digest(self) -> str:
        """Stable content hash of the fully-defaulted configuration."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @staticmethod
    def from_toml(config_path: str | Path) -> "ScenarioConfig":
        return parse_config(Path(config_path).read_text())

    @staticmethod
    def from_dict(data: dict) -> "ScenarioConfig":
        return _validate(data, "")


_IDENTIFIER_ERRORS = {"enum", "literal_error", "union_tag_invalid", "extra_forbidden"}


def _locate(text: str, loc: tuple) -> int | None:
    """Best-effort line number of the key a validation error points at."""
    keys = [str(p) for p in loc if isinstance(p, str)]
    if not keys or not text:
        return None
    key, section = keys[-1], ".".join(keys[:-1])
    current, fallback = "", None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            current = stripped.strip("[]").strip()
            if current == ".".join(keys):
                return number
            continue
        if re.match(rf"{re.escape(key)}\s*=", stripped):
            if current == section:
                return number
            fallback = fallback or number
    return fallback


def _validate(data: dict, text: str) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = tuple(err["loc"])
        field = ".".join(str(p) for p in loc)
        line = _locate(text, loc)
        if err["type"] in _IDENTIFIER_ERRORS and loc != ("schema_version",):
            raise UnknownIdentifierError(err["msg"], field=field, line=line) from e
        raise ConstraintViolationError(err["msg"], field=field, line=line) from e


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate scenario TOML; raises one of the three ConfigError subclasses."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        line = getattr(e, "lineno", None)
        if line is None:
            match = re.search(r"line (\d+)", str(e))
            line = int(match.group(1)) if match else None
        raise ConfigSyntaxError(str(e), line=line) from e
    return _validate(data, text)
