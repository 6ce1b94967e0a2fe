"""
Report persistence: CSV with a commented metadata header, or JSON with the
same metadata under "meta". Only the timestamp line differs between two
runs of the same configuration.
"""
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Literal, Sequence, TextIO

import numpy as np

from gwtrees.operations.models import RunConfig

logger = logging.getLogger(__name__)

ReportFormat = Literal["csv", "json"]


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def build_meta(config: RunConfig, **extra: Any) -> dict[str, Any]:
    return {
        "config": config.model_dump(mode="json"),
        "seed": config.seed,
        **extra,
    }


def write_meta(handle: TextIO, meta: dict[str, Any], stamp: str | None = None) -> None:
    """The two comment lines that open every CSV artifact."""
    stamp = stamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    handle.write(f"# meta: {json.dumps(meta, sort_keys=True)}\n")
    handle.write(f"# generated: {stamp}\n")


class ReportWriter:
    """Writes one table to a file path, or to stdout when path is None."""

    def __init__(self, path: str | Path | None, format: ReportFormat, meta: dict[str, Any]):
        self.path = Path(path) if path is not None else None
        self.format = format
        self.meta = meta

    def write(self, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        rows = [[_plain(v) for v in row] for row in rows]
        if self.path is None:
            self._emit(sys.stdout, header, rows)
            return
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("w", newline="", encoding="utf-8") as handle:
            self._emit(handle, header, rows)
        logger.info("report written", extra={"path": str(self.path), "rows": len(rows)})

    def _emit(self, handle: TextIO, header: Sequence[str], rows: list[list[Any]]) -> None:
        stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        if self.format == "json":
            payload = {"meta": {**self.meta, "generated": stamp}, "header": list(header), "rows": rows}
            json.dump(payload, handle, indent=2)
            handle.write("\n")
            return
        write_meta(handle, self.meta, stamp)
        out = csv.writer(handle, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def write_rows(
    rows: Iterable[Sequence[Any]],
    header: Sequence[str],
    path: str | Path | None,
    format: ReportFormat,
    meta: dict[str, Any],
) -> None:
    ReportWriter(path, format, meta).write(header, rows)


def read_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Header and data rows of a CSV report, skipping the metadata comments."""
    with Path(path).open(newline="", encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    table = list(csv.reader(lines))
    return table[0], table[1:]
