"""Gini index of output concentration from size-class (grouped) farm data."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import MissingColumn, NonNumericCell, TooFewFarms, ZeroTotalOutput

__all__ = ["GroupedDistribution", "gini_grouped", "read_grouped_csv"]


@dataclass
class GroupedDistribution:
    """Farm counts and summed output per class, classes in ascending size order."""

    counts: np.ndarray
    totals: np.ndarray
    region_id: str = ""

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        self.totals = np.asarray(self.totals, dtype=float)
        if self.counts.shape != self.totals.shape or self.counts.ndim != 1:
            raise ValueError("counts and totals must be 1-d arrays of equal length")
        if np.any(self.counts < 0) or np.any(self.totals < 0):
            raise ValueError("counts and totals must be non-negative")


def gini_grouped(d: GroupedDistribution) -> float:
    """
    Grouped-data Gini on a 0-100 scale with the ``N/(N-1)`` correction.

    ``G = N/(N-1) * (1 - sum_j (Q_j + Q_{j-1}) (F_j - F_{j-1}))`` where ``F``
    and ``Q`` are the cumulative farm and output shares.
    """
    n = d.counts.sum()
    if n < 2:
        raise TooFewFarms(f"region {d.region_id!r}: {n:g} farms, at least 2 needed")
    total = d.totals.sum()
    if not total > 0:
        raise ZeroTotalOutput(f"region {d.region_id!r} has no output")
    F = np.concatenate([[0.0], np.cumsum(d.counts) / n])
    Q = np.concatenate([[0.0], np.cumsum(d.totals) / total])
    area = np.sum((Q[1:] + Q[:-1]) * np.diff(F))
    g = 100.0 * n / (n - 1.0) * (1.0 - area)
    return float(min(100.0, max(0.0, g)))


def read_grouped_csv(path) -> dict[str, GroupedDistribution]:
    """
    Read ``region_id, class_rank, farm_count, total_output`` rows.

    Classes are ordered by ``class_rank`` within each region; regions keep
    their order of first appearance.
    """
    rows = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = ["region_id", "class_rank", "farm_count", "total_output"]
        missing = [c for c in need if c not in (reader.fieldnames or [])]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        for lineno, rec in enumerate(reader, 2):
            vals = []
            for col in need[1:]:
                try:
                    vals.append(float(rec[col]))
                except (TypeError, ValueError):
                    raise NonNumericCell(lineno, col, rec[col]) from None
            rows[rec["region_id"]].append(vals)
    out = {}
    for region, recs in rows.items():
        recs.sort(key=lambda r: r[0])
        arr = np.array(recs)
        out[region] = GroupedDistribution(arr[:, 1], arr[:, 2], region)
    return out
