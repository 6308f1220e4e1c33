"""Metrics CSV

    step,loss,metric,lr,wall_seconds

float는 repr()로 기록하므로 같은 실행은 바이트 단위로 같은 파일을 만듭니다.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from src.core.errors import ImageFormatError
from src.models.entities import METRICS_COLUMNS, MetricsRow

HEADER = ",".join(METRICS_COLUMNS)


class MetricsWriter:
    """Appends rows to a metrics CSV, flushing after each row.

    With ``resume_step`` set, rows of an earlier run up to that step are kept and
    later rows (written after the checkpoint) are dropped before appending.
    """

    def __init__(self, path: str | Path, resume_step: int | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        kept: list[MetricsRow] = []
        if resume_step is not None and self.path.exists():
            kept = [row for row in read_metrics(self.path) if row.step <= resume_step]
        with open(self.path, "w", encoding="utf-8", newline="") as f:
            f.write(HEADER + "\n")
            for row in kept:
                f.write(row.to_csv() + "\n")

    def write(self, row: MetricsRow) -> None:
        with open(self.path, "a", encoding="utf-8", newline="") as f:
            f.write(row.to_csv() + "\n")

    def write_all(self, rows: Iterable[MetricsRow]) -> None:
        for row in rows:
            self.write(row)


def read_metrics(path: str | Path) -> list[MetricsRow]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ImageFormatError(f"cannot read metrics file {path}: {e}") from e
    if not lines or lines[0].strip() != HEADER:
        raise ImageFormatError(f"{path} is not a metrics CSV (header {HEADER!r} expected)")

    rows: list[MetricsRow] = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(METRICS_COLUMNS):
            raise ImageFormatError(f"{path}:{number}: expected {len(METRICS_COLUMNS)} columns")
        try:
            rows.append(
                MetricsRow(
                    step=int(cells[0]),
                    loss=float(cells[1]),
                    metric=float(cells[2]),
                    lr=float(cells[3]),
                    wall_seconds=float(cells[4]),
                )
            )
        except ValueError as e:
            raise ImageFormatError(f"{path}:{number}: {e}") from e
    return rows
