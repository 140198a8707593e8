"""Human-readable rich tables and the machine-readable record stream."""

from rich.console import Console
from rich.table import Table

from rowhammer_sim.attack.schema import FeasibilityVerdict
from rowhammer_sim.report.schema import TABLE1_COLUMNS, RunReport, Table1Report, Table2Report
from rowhammer_sim.utils.records import dump_records

# Wall time varies run to run; leaving it out keeps record streams byte-identical.
VOLATILE_FIELDS = {"wall_time"}


def records(reports: list[RunReport]) -> str:
    return dump_records(reports, exclude=VOLATILE_FIELDS)


def run_table(reports: list[RunReport]) -> Table:
    table = Table(title="Scenario runs")
    for column in ("scenario", "status", "stage", "exercised", "activations", "detail"):
        table.add_column(column)
    for report in reports:
        outcome = report.outcome
        table.add_row(
            report.config.name if report.config else report.digest[:12],
            report.status,
            str(outcome.failed_stage or "") if outcome else "",
            " ".join(outcome.exercised) if outcome else "",
            str(report.trace.activations) if report.trace else "",
            outcome.detail if outcome else (report.error or ""),
        )
    return table


def feasibility_table(name: str, verdict: FeasibilityVerdict) -> Table:
    table = Table(title=f"Feasibility: {name}")
    table.add_column("verdict")
    table.add_column("reasons")
    table.add_column("notes")
    table.add_row(
        "Feasible" if verdict.feasible else "Infeasible",
        "\n".join(verdict.reasons),
        "\n".join(verdict.notes),
    )
    return table


def table1_table(report: Table1Report) -> Table:
    table = Table(title="Primitive matrix of historical attacks")
    table.add_column("attack")
    for column in TABLE1_COLUMNS:
        table.add_column(column, justify="center")
    table.add_column("match")
    for row in report.rows:
        marks = ["✓" if c in row.checkmarks else "" for c in TABLE1_COLUMNS]
        table.add_row(row.attack, *marks, "ok" if row.matches else "; ".join(row.mismatches))
    return table


def table2_table(report: Table2Report) -> Table:
    table = Table(title="Countermeasures", caption="\n".join(report.notes) or None)
    for column in ("countermeasure", "affected primitive", "reliability", "verdicts", "match"):
        table.add_column(column)
    for row in report.rows:
        verdicts = ", ".join(
            f"{v.scenario}={v.result}{f'({v.stage})' if v.stage else ''}" for v in row.verdicts
        )
        table.add_row(
            row.countermeasure,
            str(row.primitive or ""),
            "✓" if row.reliable else "×",
            verdicts,
            "ok" if row.matches else "; ".join(row.mismatches),
        )
    return table


def show(table: Table) -> None:
    Console().print(table)
