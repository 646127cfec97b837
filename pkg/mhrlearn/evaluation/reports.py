import csv
import math
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path
from typing import List, Sequence

import numpy as np

from mhrlearn.evaluation.sweep import EvalReport, TuneResult

REPORT_COLUMNS = ["method", "fraction", "repeat", "class", "AP", "mAP", "seconds"]
# Half-width factor of a notched box plot's median notch
NOTCH_FACTOR = 1.57


@dataclass(frozen=True)
class SummaryRow:
    """mAP statistics over the repeats of one (method, fraction) pair."""

    method: str
    fraction: float
    repeats: int
    mean: float
    std: float
    stderr: float
    minimum: float
    lower_hinge: float
    median: float
    upper_hinge: float
    maximum: float
    notch: float


def summarize(reports: Sequence[EvalReport]) -> List[SummaryRow]:
    rows = []
    ordered = sorted(reports)
    for (method, fraction), group in groupby(ordered, key=lambda r: (r.method, r.fraction)):
        values = np.array([r.map for r in group])
        count = values.size
        std = float(values.std(ddof=1)) if count > 1 else math.nan
        lower, median, upper = (float(q) for q in np.percentile(values, [25, 50, 75]))
        rows.append(
            SummaryRow(
                method=method,
                fraction=fraction,
                repeats=count,
                mean=float(values.mean()),
                std=std,
                stderr=std / math.sqrt(count) if count > 1 else math.nan,
                minimum=float(values.min()),
                lower_hinge=lower,
                median=median,
                upper_hinge=upper,
                maximum=float(values.max()),
                notch=NOTCH_FACTOR * (upper - lower) / math.sqrt(count),
            )
        )
    return rows


def write_reports_csv(reports: Sequence[EvalReport], path: Path) -> None:
    """One row per (method, fraction, repeat, class)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as reports_file:
        writer = csv.writer(reports_file, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for report in sorted(reports):
            for class_name, ap in report.class_aps:
                writer.writerow(
                    [
                        report.method,
                        report.fraction,
                        report.repeat,
                        class_name,
                        repr(ap),
                        repr(report.map),
                        f"{report.seconds:.3f}",
                    ]
                )


def format_summary(rows: Sequence[SummaryRow]) -> str:
    columns = ("mean", "std", "stderr", "min", "q1", "median", "q3", "max", "notch")
    header = f"{'method':<16}{'fraction':>9}{'r':>4}" + "".join(f"{column:>9}" for column in columns)
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row.method:<16}{row.fraction:>9.3f}{row.repeats:>4d}{row.mean:>9.4f}{row.std:>9.4f}{row.stderr:>9.4f}"
            f"{row.minimum:>9.4f}{row.lower_hinge:>9.4f}{row.median:>9.4f}{row.upper_hinge:>9.4f}{row.maximum:>9.4f}"
            f"{row.notch:>9.4f}"
        )
    return "\n".join(lines) + "\n"


def write_summary(reports: Sequence[EvalReport], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_summary(summarize(reports)), encoding="utf-8")


def write_tune_csv(result: TuneResult, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as tune_file:
        writer = csv.writer(tune_file, lineterminator="\n")
        writer.writerow([*result.keys, "mAP"])
        for values, score in result.table:
            writer.writerow([*(repr(v) for v in values), repr(score)])
