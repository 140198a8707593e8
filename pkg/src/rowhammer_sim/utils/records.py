"""JSON-lines persistence helpers for pydantic records."""

from pathlib import Path
from typing import TypeVar

from loguru import logger
from pydantic import BaseModel

ModelT = TypeVar("ModelT", bound=BaseModel)


def save_records(records: list[BaseModel], output_path: str | Path, *, exclude: set[str] | None = None) -> None:
    """Write one record per line."""
    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w") as f:
        for record in records:
            f.write(record.model_dump_json(exclude=exclude) + "\n")
    logger.info(f"Saved {len(records)} records to {output_path}")


def load_records(input_path: str | Path, model: type[ModelT]) -> list[ModelT]:
    records = []
    with open(input_path) as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(model.model_validate_json(line))
    return records


def dump_records(records: list[BaseModel], *, exclude: set[str] | None = None) -> str:
    """Render records as a JSON-lines string."""
    return "".join(record.model_dump_json(exclude=exclude) + "\n" for record in records)
