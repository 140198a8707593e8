"""Schema for attack scenarios, technique identifiers and outcomes."""

from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from rowhammer_sim.dram.schema import FaultDirection, FlipRecord


class Origin(StrEnum):
    UPRO = "UPro"
    PPRO = "PPro"
    WEBSITE = "Website"
    NETWORK = "Network"


class TargetClass(StrEnum):
    EPRO = "EPRO"
    EPUO = "EPUO"
    DPRO = "DPRO"
    DPUO = "DPUO"

    @property
    def readable(self) -> bool:
        return self in (TargetClass.EPRO, TargetClass.DPRO)

    @property
    def privileged(self) -> bool:
        return self in (TargetClass.DPRO, TargetClass.DPUO)


class TargetKind(StrEnum):
    PAGE_TABLE = "page_table"
    PASSWD_UID = "passwd_uid"
    OPCODE = "opcode"
    POINTER = "pointer"


DEFAULT_TARGET_KIND = {
    TargetClass.EPRO: TargetKind.POINTER,
    TargetClass.EPUO: TargetKind.POINTER,
    TargetClass.DPRO: TargetKind.OPCODE,
    TargetClass.DPUO: TargetKind.PAGE_TABLE,
}


class LpTechnique(StrEnum):
    NONE = "None"
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"


class BypassTechnique(StrEnum):
    NONE = "None"
    BA1 = "Ba1"
    BA2 = "Ba2"
    BA3 = "Ba3"


class PatternTechnique(StrEnum):
    BB1 = "Bb1"
    BB2 = "Bb2"
    BB3 = "Bb3"


class EvMethod(StrEnum):
    C1 = "C1"
    C2 = "C2"


class Capability(StrEnum):
    FLUSH_INSTRUCTION = "FlushInstruction"
    NON_TEMPORAL = "NonTemporal"
    UNCACHED_DMA = "UncachedDma"
    UNCACHED_RDMA = "UncachedRdma"
    EVICTION_SETS = "EvictionSets"
    PAGEMAP_READ = "PagemapRead"
    HUGE_PAGES = "HugePages"
    DEDUP_CONTROL = "DedupControl"
    NATIVE_CODE = "NativeCode"
    PACKET_ONLY = "PacketOnly"


class VictimProperty(StrEnum):
    """Properties a remote victim may declare that lend capabilities to a network attacker."""

    FLUSHES_PACKETS = "victim_flushes_packets"
    RDMA = "rdma"
    INTEL_CAT = "intel_cat"
    HUGE_PAGES = "huge_pages"
    BEHAVIOR_OBSERVABLE = "behavior_observable"


class FlushMode(StrEnum):
    AUTO = "auto"
    CLFLUSH = "clflush"
    NON_TEMPORAL = "non_temporal"


class Stage(StrEnum):
    LP = "LP"
    RH = "RH"
    EV = "EV"
    SE = "SE"


class OutcomeStatus(StrEnum):
    SUCCESS = "Success"
    INFEASIBLE = "InfeasibleCombination"
    PLACEMENT_FAILED = "PlacementFailed"
    NO_FLIP = "NoFlip"
    WRONG_FLIP = "WrongFlip"
    NOT_PERSISTED = "NotPersisted"
    DETECTED = "Detected"


class EvResult(StrEnum):
    VERIFIED = "Verified"
    WRONG_FLIP = "WrongFlip"
    UNOBSERVABLE = "Unobservable"


class PersistResult(StrEnum):
    PERSISTED = "Persisted"
    NOT_PERSISTED = "NotPersisted"


class BitTarget(BaseModel):
    """A bit the attacker wants flipped, relative to the start of the target field."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    byte: int = Field(ge=0)
    bit: int = Field(ge=0, le=7)
    direction: FaultDirection = FaultDirection.ONE_TO_ZERO


class AttackScenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    origin: Origin
    target_class: TargetClass
    target: TargetKind | None = Field(default=None, description="Defaults by target class")
    lp: LpTechnique
    bypass: BypassTechnique
    pattern: PatternTechnique
    ev: EvMethod
    se: bool = False
    budget: int = Field(default=4096, ge=1, description="Aggressor accesses allowed during RH")
    lp_attempts: int = Field(default=64, ge=1)
    aggressor_distance: int = Field(default=1, ge=1)
    flush_mode: FlushMode = FlushMode.AUTO
    victim_properties: list[VictimProperty] = Field(default_factory=list)
    eccploit: bool = Field(default=False, description="Flips crafted to evade ECC detection")
    expressive_targets: list[BitTarget] = Field(default_factory=list)
    notes: str = ""

    @property
    def target_kind(self) -> TargetKind:
        return self.target or DEFAULT_TARGET_KIND[self.target_class]


class FeasibilityVerdict(BaseModel):
    feasible: bool
    reasons: list[str] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)
    offending: list[Stage] = Field(default_factory=list, description="Stages of violated rules")


# ── Stage records ────────────────────────────────────────────────────────────


class ExpectedFlip(BaseModel):
    model_config = ConfigDict(frozen=True)

    page_offset: int
    bit: int
    direction: FaultDirection


class PlacementRecord(BaseModel):
    technique: LpTechnique
    victim_frame: int | None = None
    victim_row: tuple[int, int] | None = Field(default=None, description="(bank, row)")
    attempts: int = 0
    footprint: int = Field(default=0, description="Frames consumed to steer the placement")
    expected: ExpectedFlip | None = None
    placed: bool = False


class HammerRecord(BaseModel):
    site: tuple[int, int] | None = Field(default=None, description="(bank, row) actually hammered")
    shifted: bool = False
    aggressors: list[int] = Field(default_factory=list)
    accesses: int = 0
    activations: int = 0
    flips: list[FlipRecord] = Field(default_factory=list)
    mechanism: str = ""


class VerifyRecord(BaseModel):
    method: EvMethod
    result: EvResult
    observed: str = ""
    expected: str = ""


class PersistRecord(BaseModel):
    result: PersistResult
    pages_written: int = 0
    command: str | None = None


class LoopRecord(BaseModel):
    index: int
    target: BitTarget
    placement: PlacementRecord | None = None
    hammer: HammerRecord | None = None
    verify: VerifyRecord | None = None
    persist: PersistRecord | None = None
    disk_field: str = Field(default="", description="Target field on disk after the loop")


class AttackOutcome(BaseModel):
    name: str
    status: OutcomeStatus
    failed_stage: Stage | None = None
    detected_by: str | None = None
    feasibility: FeasibilityVerdict
    placement: PlacementRecord | None = None
    hammer: HammerRecord | None = None
    verify: VerifyRecord | None = None
    persist: PersistRecord | None = None
    loops: list[LoopRecord] = Field(default_factory=list)
    exercised: list[str] = Field(default_factory=list, description="Techniques actually executed")
    detail: str = ""

    @model_validator(mode="after")
    def _consistent(self) -> "AttackOutcome":
        if self.status is OutcomeStatus.SUCCESS:
            if self.verify is not None and self.verify.result is not EvResult.VERIFIED:
                raise ValueError("Success requires a verified flip")
            if self.persist is not None and self.persist.result is not PersistResult.PERSISTED:
                raise ValueError("Success with SE requires persistence")
        if self.status is OutcomeStatus.DETECTED and not self.detected_by:
            raise ValueError("Detected outcomes name the countermeasure")
        return self
