"""Replicate the primitive matrix of historical attacks and the countermeasure matrix.

Both replications run the bundled scenario corpus (``rowhammer_sim/corpus``) and compare what
the runs actually exercised against golden expectations shipped alongside it.
"""

import tomllib
from importlib.resources import files
from pathlib import Path

from loguru import logger
from pydantic import TypeAdapter, ValidationError

from rowhammer_sim.attack.pipeline import run_scenario
from rowhammer_sim.attack.schema import OutcomeStatus, Stage
from rowhammer_sim.config import ScenarioConfig
from rowhammer_sim.defense.evaluate import evaluate
from rowhammer_sim.defense.schema import Countermeasure, VerdictKind
from rowhammer_sim.errors import ConfigError, CorpusError
from rowhammer_sim.report.schema import (
    TABLE1_COLUMNS,
    Table1Report,
    Table1Row,
    Table2Report,
    Table2Row,
    VariantResult,
)

_COUNTERMEASURE = TypeAdapter(Countermeasure)


def corpus_root(corpus_dir: str | Path | None = None) -> Path:
    if corpus_dir is not None:
        return Path(corpus_dir)
    return Path(str(files("rowhammer_sim.corpus")))


def _load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise CorpusError(f"cannot read corpus file {path}: {e}") from e


def _scenario(data: dict, source: Path) -> ScenarioConfig:
    try:
        return ScenarioConfig.from_dict(data)
    except ConfigError as e:
        raise CorpusError(f"{source.name}: {e}") from e


def _fixtures(directory: Path, key: str) -> dict[str, tuple[Path, dict]]:
    """Corpus files of one table, keyed by the row they replicate."""
    if not directory.is_dir():
        raise CorpusError(f"corpus directory {directory} is missing")
    found: dict[str, tuple[Path, dict]] = {}
    for path in sorted(directory.glob("*.toml")):
        data = _load_toml(path)
        if key not in data:
            raise CorpusError(f"{path.name} does not name its {key}")
        if data[key] in found:
            raise CorpusError(f"{path.name} duplicates the row {data[key]!r}")
        found[data[key]] = (path, data)
    return found


def _expected(root: Path, name: str) -> dict:
    path = root / name
    if not path.is_file():
        raise CorpusError(f"golden expectations {path} are missing")
    return _load_toml(path)


# ── Table 1 ──────────────────────────────────────────────────────────────────


def replicate_table1(corpus_dir: str | Path | None = None) -> Table1Report:
    """Run every variant of every historical attack and collect the checkmarks it exercised."""
    root = corpus_root(corpus_dir)
    expected = _expected(root, "table1_expected.toml")
    fixtures = _fixtures(root / "table1", "attack")

    report = Table1Report()
    for attack in expected["order"]:
        if attack not in fixtures:
            raise CorpusError(f"no corpus scenario replicates the {attack!r} row")
        path, data = fixtures[attack]
        variants = data.get("variant", [])
        if not variants:
            raise CorpusError(f"{path.name} defines no variants")

        row = Table1Row(attack=attack, expected=expected["rows"].get(attack, []))
        marks: set[str] = set()
        for variant in variants:
            config = _scenario(variant, path)
            outcome = run_scenario(config)
            row.variants.append(
                VariantResult(
                    name=config.name, status=outcome.status, exercised=outcome.exercised, detail=outcome.detail
                )
            )
            if outcome.status is OutcomeStatus.SUCCESS:
                marks.update(outcome.exercised)
            else:
                logger.warning(f"{attack}: variant {config.name} ended {outcome.status} ({outcome.detail})")
        row.checkmarks = [c for c in TABLE1_COLUMNS if c in marks]
        report.rows.append(row)
        if row.matches:
            logger.debug(f"{attack}: {' '.join(row.checkmarks)}")
        else:
            logger.warning(f"{attack}: mismatch {'; '.join(row.mismatches)}")

    logger.info(f"Table 1: {sum(r.matches for r in report.rows)}/{len(report.rows)} rows match")
    return report


# ── Table 2 ──────────────────────────────────────────────────────────────────


def replicate_table2(corpus_dir: str | Path | None = None) -> Table2Report:
    """Judge each countermeasure against its probe scenarios.

    The affected primitive is the stage of the first blocking verdict; a countermeasure is
    reliable when none of its probes bypasses it.
    """
    root = corpus_root(corpus_dir)
    expected = _expected(root, "table2_expected.toml")
    fixtures = _fixtures(root / "table2", "countermeasure")

    report = Table2Report()
    for name in expected["order"]:
        if name not in fixtures:
            raise CorpusError(f"no corpus probes replicate the {name!r} row")
        path, data = fixtures[name]
        try:
            countermeasure = _COUNTERMEASURE.validate_python(data["defense"])
        except (KeyError, ValidationError) as e:
            raise CorpusError(f"{path.name}: invalid defense section: {e}") from e
        probes = data.get("probe", [])
        if not probes:
            raise CorpusError(f"{path.name} defines no probes")

        golden = expected["rows"].get(name, {})
        row = Table2Row(
            countermeasure=name,
            expected_primitive=Stage(golden["primitive"]) if "primitive" in golden else None,
            expected_reliable=golden.get("reliable"),
            note=data.get("note", ""),
        )
        for probe in probes:
            row.verdicts.append(evaluate(countermeasure, _scenario(probe, path)))

        blocked = [v for v in row.verdicts if v.result is VerdictKind.BLOCKED]
        row.primitive = blocked[0].stage if blocked else None
        row.reliable = bool(blocked) and not any(v.result is VerdictKind.BYPASSED for v in row.verdicts)
        for v in row.verdicts:
            if v.result is VerdictKind.NOT_APPLICABLE:
                logger.warning(f"{name}: probe {v.scenario} does not succeed unprotected")
        if row.note:
            report.notes.append(f"{name}: {row.note}")
        report.rows.append(row)
        if not row.matches:
            logger.warning(f"{name}: mismatch {'; '.join(row.mismatches)}")

    logger.info(f"Table 2: {sum(r.matches for r in report.rows)}/{len(report.rows)} rows match")
    return report
