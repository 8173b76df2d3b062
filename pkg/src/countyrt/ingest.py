"""Loading, validation, and country aggregation of case-count CSVs.

Canonical format: long CSV with header ``region_id,date,cases``, ISO
dates, UTF-8. Foreign schemas are handled by remapping column names.
Rows are aggregated by (region, date), gaps are zero-filled so the panel
is contiguous, and regions are sorted by id for determinism.
"""

from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass, field

import numpy as np

from .model import IncidencePanel


class PanelFormatError(ValueError):
    """Raised when an input file cannot be parsed into a panel."""


@dataclass
class ValidationReport:
    rows_read: int = 0
    duplicates_merged: int = 0
    negatives_clamped: int = 0
    warnings: list = field(default_factory=list)


def load_panel(
    path,
    region_col: str = "region_id",
    date_col: str = "date",
    cases_col: str = "cases",
    delimiter: str = ",",
):
    """Read a long CSV into an (IncidencePanel, ValidationReport) pair.

    Duplicate (region, date) rows are summed; negative counts are clamped
    to zero and tallied in the report.
    """
    report = ValidationReport()
    cells: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        try:
            ri = header.index(region_col)
            di = header.index(date_col)
            ci = header.index(cases_col)
        except ValueError:
            raise PanelFormatError(
                f"{path}: header {header} lacks required columns "
                f"({region_col}, {date_col}, {cases_col})"
            ) from None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if [f.strip() for f in row] == header:
                raise PanelFormatError(f"{path}:{lineno}: duplicate header row")
            if len(row) < max(ri, di, ci) + 1:
                raise PanelFormatError(f"{path}:{lineno}: too few fields: {row}")
            region = row[ri].strip()
            if not region:
                raise PanelFormatError(f"{path}:{lineno}: empty region id")
            try:
                day = datetime.date.fromisoformat(row[di].strip())
            except ValueError:
                raise PanelFormatError(
                    f"{path}:{lineno}: invalid date {row[di]!r}"
                ) from None
            try:
                cases = int(row[ci].strip())
            except ValueError:
                raise PanelFormatError(
                    f"{path}:{lineno}: invalid case count {row[ci]!r}"
                ) from None
            if cases < 0:
                report.negatives_clamped += 1
                cases = 0
            key = (region, day)
            if key in cells:
                report.duplicates_merged += 1
            cells[key] = cells.get(key, 0) + cases
            report.rows_read += 1
    if not cells:
        raise PanelFormatError(f"{path}: no data rows")
    if report.negatives_clamped:
        report.warnings.append(
            f"clamped {report.negatives_clamped} negative counts to 0"
        )

    regions = sorted({r for r, _ in cells})
    d_min = min(d for _, d in cells)
    d_max = max(d for _, d in cells)
    n_days = (d_max - d_min).days + 1
    dates = tuple(d_min + datetime.timedelta(days=i) for i in range(n_days))
    counts = np.zeros((len(regions), n_days), dtype=np.int64)
    r_index = {r: i for i, r in enumerate(regions)}
    for (region, day), cases in cells.items():
        counts[r_index[region], (day - d_min).days] = cases
    return IncidencePanel(tuple(regions), dates, counts), report


def write_panel(panel: IncidencePanel, path) -> None:
    """Write the canonical long CSV (region-major, then date)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id", "date", "cases"])
        for c, region in enumerate(panel.region_ids):
            for t, day in enumerate(panel.dates):
                writer.writerow([region, day.isoformat(), int(panel.counts[c, t])])


def aggregate_country(panel: IncidencePanel) -> IncidencePanel:
    """Sum over regions into a single-region panel with id "ALL"."""
    return IncidencePanel(
        ("ALL",), panel.dates, panel.counts.sum(axis=0, keepdims=True)
    )
