"""Origin capability matrix and technique prerequisites."""

from rowhammer_sim.attack.schema import (
    AttackScenario,
    BypassTechnique,
    Capability,
    EvMethod,
    FeasibilityVerdict,
    FlushMode,
    LpTechnique,
    Origin,
    PatternTechnique,
    Stage,
    TargetKind,
    VictimProperty,
)
from rowhammer_sim.dram.schema import RowPolicyKind

_UPRO = frozenset(
    {
        Capability.FLUSH_INSTRUCTION,
        Capability.NON_TEMPORAL,
        Capability.UNCACHED_DMA,
        Capability.EVICTION_SETS,
        Capability.HUGE_PAGES,
        Capability.NATIVE_CODE,
    }
)

ORIGIN_CAPABILITIES: dict[Origin, frozenset[Capability]] = {
    Origin.UPRO: _UPRO,
    Origin.PPRO: _UPRO | {Capability.PAGEMAP_READ, Capability.DEDUP_CONTROL},
    Origin.WEBSITE: frozenset({Capability.EVICTION_SETS, Capability.HUGE_PAGES}),
    Origin.NETWORK: frozenset({Capability.PACKET_ONLY}),
}

# Capabilities a network attacker borrows from how the victim server handles its packets.
CONDITIONAL_CAPABILITIES: dict[VictimProperty, Capability] = {
    VictimProperty.FLUSHES_PACKETS: Capability.FLUSH_INSTRUCTION,
    VictimProperty.RDMA: Capability.UNCACHED_RDMA,
    VictimProperty.INTEL_CAT: Capability.EVICTION_SETS,
    VictimProperty.HUGE_PAGES: Capability.HUGE_PAGES,
}

SINGLE_COPY_TARGETS = frozenset({TargetKind.PASSWD_UID, TargetKind.OPCODE})


def capabilities(
    origin: Origin,
    victim_properties: list[VictimProperty] | None = None,
    *,
    revoked: frozenset[Capability] = frozenset(),
) -> frozenset[Capability]:
    caps = set(ORIGIN_CAPABILITIES[origin])
    if origin is Origin.NETWORK:
        for prop in victim_properties or ():
            if prop in CONDITIONAL_CAPABILITIES:
                caps.add(CONDITIONAL_CAPABILITIES[prop])
    return frozenset(caps - revoked)


def check_feasibility(
    scenario: AttackScenario,
    *,
    row_policy: RowPolicyKind = RowPolicyKind.OPEN,
    revoked: frozenset[Capability] = frozenset(),
) -> FeasibilityVerdict:
    """Judge a technique combination against the origin's capabilities. Never raises."""
    caps = capabilities(scenario.origin, scenario.victim_properties, revoked=revoked)
    kind = scenario.target_kind
    reasons: list[str] = []
    notes: list[str] = []
    offending: list[Stage] = []

    def reject(stage: Stage, reason: str) -> None:
        reasons.append(reason)
        if stage not in offending:
            offending.append(stage)

    # LP
    if scenario.lp is LpTechnique.A1 and kind in SINGLE_COPY_TARGETS:
        reject(Stage.LP, f"A1 needs many victim copies but {kind} exists once in memory")
    if scenario.lp is LpTechnique.A3:
        if Capability.DEDUP_CONTROL not in caps and scenario.origin is not Origin.PPRO:
            reject(Stage.LP, f"A3 needs DedupControl, unavailable to {scenario.origin}")
        if kind is not TargetKind.POINTER:
            reject(Stage.LP, f"A3 merges user pages only; {kind} is not mergeable")

    # RH
    if scenario.bypass is BypassTechnique.NONE:
        if Capability.NATIVE_CODE not in caps:
            reject(Stage.RH, f"Direct controller access needs a local process, unavailable to {scenario.origin}")
    elif scenario.bypass is BypassTechnique.BA1:
        flush = Capability.FLUSH_INSTRUCTION in caps
        non_temporal = Capability.NON_TEMPORAL in caps
        if scenario.flush_mode is FlushMode.CLFLUSH and not flush:
            reject(Stage.RH, f"Ba1 via clflush needs FlushInstruction, unavailable to {scenario.origin}")
        elif scenario.flush_mode is FlushMode.NON_TEMPORAL and not non_temporal:
            reject(Stage.RH, f"Ba1 via non-temporal access needs NonTemporal, unavailable to {scenario.origin}")
        elif not (flush or non_temporal):
            reject(Stage.RH, f"Ba1 needs FlushInstruction or NonTemporal, unavailable to {scenario.origin}")
    elif scenario.bypass is BypassTechnique.BA2:
        if Capability.EVICTION_SETS not in caps:
            reject(Stage.RH, f"Ba2 needs EvictionSets, unavailable to {scenario.origin}")
    elif scenario.bypass is BypassTechnique.BA3:
        needed = Capability.UNCACHED_RDMA if scenario.origin is Origin.NETWORK else Capability.UNCACHED_DMA
        if needed not in caps:
            reject(Stage.RH, f"Ba3 needs {needed}, unavailable to {scenario.origin}")

    if scenario.pattern is PatternTechnique.BB2 and not (
        Capability.PAGEMAP_READ in caps
        or Capability.HUGE_PAGES in caps
        or scenario.lp is LpTechnique.A2
    ):
        reject(Stage.RH, "Bb2 needs PagemapRead, HugePages or the contiguity A2 provides")
    if scenario.pattern is PatternTechnique.BB3:
        if row_policy is RowPolicyKind.OPEN:
            reject(Stage.RH, "Bb3 needs a close-page or adaptive row-buffer policy")
        elif scenario.origin is Origin.WEBSITE:
            notes.append("Bb3 from a website has no published precedent")

    # EV
    if scenario.ev is EvMethod.C1 and not scenario.target_class.readable:
        reject(Stage.EV, f"C1 needs a readable target; {scenario.target_class} is not readable")
    if (
        scenario.ev is EvMethod.C2
        and scenario.origin is Origin.NETWORK
        and VictimProperty.BEHAVIOR_OBSERVABLE not in scenario.victim_properties
    ):
        reject(Stage.EV, "C2 needs observable victim behavior, unavailable to a network attacker")

    # SE
    if scenario.se and Capability.NATIVE_CODE not in caps:
        reject(Stage.SE, f"SE needs a local shell (NativeCode), unavailable to {scenario.origin}")

    if scenario.notes:
        notes.append(scenario.notes)
    return FeasibilityVerdict(feasible=not reasons, reasons=reasons, notes=notes, offending=offending)
