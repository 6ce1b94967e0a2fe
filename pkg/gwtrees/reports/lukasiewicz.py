"""Trees as Lukasiewicz CSV: one depth-first outdegree sequence per line."""
import csv
import logging
import sys
from pathlib import Path
from typing import Any, Iterable, Iterator

from gwtrees.exceptions import BallotViolationException
from gwtrees.operations.trees import Tree, from_lukasiewicz, to_lukasiewicz
from gwtrees.reports.writer import write_meta

logger = logging.getLogger(__name__)


def write_trees(trees: Iterable[Tree], path: str | Path | None, meta: dict[str, Any]) -> int:
    """Write trees after the metadata header; stdout when path is None."""
    if path is None:
        return _write(trees, sys.stdout, meta)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        count = _write(trees, handle, meta)
    logger.info("trees written", extra={"path": str(path), "trees": count})
    return count


def _write(trees: Iterable[Tree], handle, meta: dict[str, Any]) -> int:
    write_meta(handle, meta)
    out = csv.writer(handle, lineterminator="\n")
    count = 0
    for tree in trees:
        out.writerow(to_lukasiewicz(tree))
        count += 1
    return count


def read_trees(path: str | Path) -> Iterator[Tree]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or row[0].startswith("#"):
                continue
            try:
                degrees = [int(x) for x in row]
            except ValueError:
                raise BallotViolationException(
                    "Tree line must hold integer outdegrees",
                    details={"path": str(path), "line": lineno},
                )
            yield from_lukasiewicz(degrees)
