"""Scenario orchestrator: single runs, isolated batches and parameter sweeps."""

import asyncio
import hashlib
import time
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from rowhammer_sim.attack.pipeline import run_expressive_attack, run_scenario
from rowhammer_sim.attack.schema import AttackOutcome
from rowhammer_sim.attack.world import World
from rowhammer_sim.config import ScenarioConfig
from rowhammer_sim.defense.evaluate import evaluate
from rowhammer_sim.report.schema import RunReport, StageTrace

BatchEntry = ScenarioConfig | Path

# ── Single run ───────────────────────────────────────────────────────────────


def _report(config: ScenarioConfig, outcome: AttackOutcome, started: float) -> RunReport:
    return RunReport(
        digest=config.digest(),
        config=config,
        outcome=outcome,
        trace=StageTrace.from_outcome(outcome),
        wall_time=time.perf_counter() - started,
    )


def run_config(config: ScenarioConfig) -> RunReport:
    """Run one scenario and judge each installed countermeasure on its own."""
    started = time.perf_counter()
    outcome = run_scenario(config)
    report = _report(config, outcome, started)
    report.verdicts = [evaluate(cm, config) for cm in config.defenses]
    report.wall_time = time.perf_counter() - started
    logger.info(f"{config.name}: {outcome.status}" + (f" at {outcome.failed_stage}" if outcome.failed_stage else ""))
    return report


def run_expressive(config: ScenarioConfig) -> RunReport:
    started = time.perf_counter()
    outcome = run_expressive_attack(config)
    logger.info(f"{config.name}: expressive attack {outcome.status} after {len(outcome.loops)} loops")
    return _report(config, outcome, started)


def cache_trace(config: ScenarioConfig) -> pd.DataFrame:
    """Per-access cache hit/miss trace of one run."""
    world = World(config, trace_cache=True)
    run_scenario(config, world=world)
    return world.cache.trace_frame()


# ── Batch ────────────────────────────────────────────────────────────────────


def _run_entry(entry: BatchEntry) -> RunReport:
    if isinstance(entry, ScenarioConfig):
        return run_config(entry)
    return run_config(ScenarioConfig.from_toml(entry))


def _entry_digest(entry: BatchEntry) -> str:
    if isinstance(entry, ScenarioConfig):
        return entry.digest()
    try:
        return hashlib.sha256(Path(entry).read_bytes()).hexdigest()
    except OSError:
        return hashlib.sha256(str(entry).encode()).hexdigest()


async def run_batch_async(
    entries: list[BatchEntry], parallelism: int = 1, *, progress: bool = False
) -> list[RunReport]:
    """Run isolated scenarios concurrently; reports are sorted by digest."""
    sem = asyncio.Semaphore(max(1, parallelism))
    bar = tqdm(total=len(entries), desc="scenarios", disable=not progress)

    async def _process(entry: BatchEntry) -> RunReport:
        async with sem:
            try:
                return await asyncio.to_thread(_run_entry, entry)
            except Exception as e:
                logger.error(f"Batch entry {entry if isinstance(entry, Path) else entry.name} failed: {e}")
                return RunReport(digest=_entry_digest(entry), error=f"{type(e).__name__}: {e}")
            finally:
                bar.update(1)

    try:
        reports = await asyncio.gather(*[_process(e) for e in entries])
    finally:
        bar.close()
    reports = sorted(reports, key=lambda r: r.digest)
    logger.info(f"Batch complete: {sum(r.succeeded for r in reports)}/{len(reports)} succeeded")
    return reports


def run_batch(entries: list[BatchEntry], parallelism: int = 1, *, progress: bool = False) -> list[RunReport]:
    return asyncio.run(run_batch_async(entries, parallelism, progress=progress))


# ── Sweep ────────────────────────────────────────────────────────────────────


def parse_range(spec: str) -> list[int | float]:
    """`start:stop[:step]`, stop inclusive; integer-valued when every bound is an integer."""
    parts = spec.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"range must be start:stop[:step], got {spec!r}")
    if all(p.strip().lstrip("-").isdigit() for p in parts):
        start, stop, *rest = (int(p) for p in parts)
        step = rest[0] if rest else 1
        if step <= 0:
            raise ValueError("range step must be positive")
        return list(range(start, stop + 1, step))
    start, stop, *rest = (float(p) for p in parts)
    step = rest[0] if rest else 1.0
    if step <= 0:
        raise ValueError("range step must be positive")
    values = np.arange(start, stop + step / 2, step)
    return [round(float(v), 12) for v in values]


def _set_path(data: dict, param: str, value) -> None:
    keys = param.split(".")
    node = data
    for key in keys[:-1]:
        node = node[int(key)] if isinstance(node, list) else node.setdefault(key, {})
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def sweep(config: ScenarioConfig, param: str, values: list[int | float]) -> pd.DataFrame:
    """Re-run the scenario once per value of a dotted config parameter."""
    rows = []
    for value in values:
        data = config.model_dump(mode="json")
        _set_path(data, param, value)
        varied = ScenarioConfig.from_dict(data)
        outcome = run_scenario(varied)
        trace = StageTrace.from_outcome(outcome)
        rows.append(
            {
                param: value,
                "status": outcome.status.value,
                "failed_stage": outcome.failed_stage.value if outcome.failed_stage else "",
                "placement_attempts": trace.placement_attempts,
                "footprint": trace.footprint,
                "accesses": trace.accesses,
                "activations": trace.activations,
                "flips": trace.flips,
            }
        )
        logger.debug(f"sweep {param}={value}: {outcome.status}")
    logger.info(f"Sweep over {param}: {len(rows)} points")
    return pd.DataFrame(rows)
