"""Schema for run reports and the two replication matrices."""

import json
from pathlib import Path

from loguru import logger
from pydantic import BaseModel, Field

from rowhammer_sim.attack.schema import AttackOutcome, OutcomeStatus, Stage
from rowhammer_sim.config import ScenarioConfig
from rowhammer_sim.defense.schema import DefenseVerdict

TABLE1_COLUMNS = (
    "UPro", "PPro", "Website", "Network",
    "EPRO", "EPUO", "DPRO", "DPUO",
    "A1", "A2", "A3", "A4",
    "Ba1", "Ba2", "Ba3", "Bb1", "Bb2", "Bb3",
    "C1", "C2",
)  # fmt: skip


class StageTrace(BaseModel):
    """Counters lifted out of the stage records."""

    placement_attempts: int = 0
    footprint: int = 0
    accesses: int = 0
    activations: int = 0
    flips: int = 0
    loops: int = 0

    @staticmethod
    def from_outcome(outcome: AttackOutcome) -> "StageTrace":
        trace = StageTrace(loops=len(outcome.loops))
        placements = [outcome.placement] + [loop.placement for loop in outcome.loops]
        hammers = [outcome.hammer] + [loop.hammer for loop in outcome.loops]
        for p in placements:
            if p is not None:
                trace.placement_attempts += p.attempts
                trace.footprint = max(trace.footprint, p.footprint)
        for h in hammers:
            if h is not None:
                trace.accesses += h.accesses
                trace.activations += h.activations
                trace.flips += len(h.flips)
        return trace


class RunReport(BaseModel):
    digest: str
    config: ScenarioConfig | None = None
    outcome: AttackOutcome | None = None
    verdicts: list[DefenseVerdict] = Field(default_factory=list)
    trace: StageTrace | None = None
    error: str | None = None
    wall_time: float = 0.0

    @property
    def status(self) -> str:
        return self.outcome.status.value if self.outcome else "Error"

    @property
    def succeeded(self) -> bool:
        return self.outcome is not None and self.outcome.status is OutcomeStatus.SUCCESS


# ── Table 1 ──────────────────────────────────────────────────────────────────


class VariantResult(BaseModel):
    name: str
    status: OutcomeStatus
    exercised: list[str] = Field(default_factory=list)
    detail: str = ""


class Table1Row(BaseModel):
    attack: str
    checkmarks: list[str] = Field(default_factory=list, description="Union over successful variants")
    expected: list[str] = Field(default_factory=list)
    variants: list[VariantResult] = Field(default_factory=list)

    @property
    def mismatches(self) -> list[str]:
        got, want = set(self.checkmarks), set(self.expected)
        return [f"{c}: {'✓' if c in got else '·'} != {'✓' if c in want else '·'}" for c in TABLE1_COLUMNS if (c in got) != (c in want)]

    @property
    def matches(self) -> bool:
        return not self.mismatches


class Table1Report(BaseModel):
    rows: list[Table1Row] = Field(default_factory=list)

    @property
    def matched(self) -> bool:
        return all(row.matches for row in self.rows)

    def save(self, output_path: str | Path) -> None:
        _save(self, output_path, {"matched": self.matched})


# ── Table 2 ──────────────────────────────────────────────────────────────────


class Table2Row(BaseModel):
    countermeasure: str
    primitive: Stage | None = None
    reliable: bool = False
    verdicts: list[DefenseVerdict] = Field(default_factory=list)
    expected_primitive: Stage | None = None
    expected_reliable: bool | None = None
    note: str = ""

    @property
    def mismatches(self) -> list[str]:
        out = []
        if self.primitive != self.expected_primitive:
            out.append(f"primitive: {self.primitive} != {self.expected_primitive}")
        if self.expected_reliable is not None and self.reliable != self.expected_reliable:
            out.append(f"reliability: {_mark(self.reliable)} != {_mark(self.expected_reliable)}")
        return out

    @property
    def matches(self) -> bool:
        return not self.mismatches


class Table2Report(BaseModel):
    rows: list[Table2Row] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)

    @property
    def matched(self) -> bool:
        return all(row.matches for row in self.rows)

    def save(self, output_path: str | Path) -> None:
        _save(self, output_path, {"matched": self.matched})


def _mark(flag: bool) -> str:
    return "✓" if flag else "×"


def _save(report: BaseModel, output_path: str | Path, extra: dict) -> None:
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    data = report.model_dump(mode="json") | extra
    with open(output_path, "w") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
    logger.info(f"Saved replication report to {output_path}")
