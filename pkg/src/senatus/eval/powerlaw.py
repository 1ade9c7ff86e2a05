"""Feature-length histograms and log-log power-law fits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from senatus.errors import InsufficientData

MIN_ITEMS = 100
LOW_PERCENTILE = 5.0
HIGH_PERCENTILE = 99.5


@dataclass(frozen=True)
class LengthDistribution:
    lengths: np.ndarray  # distinct lengths, ascending
    counts: np.ndarray
    n_items: int
    fit_low: float
    fit_high: float
    slope: float
    intercept: float
    r2: float
    points_fitted: int

    @property
    def is_power_law(self) -> bool:
        return not math.isnan(self.slope)

    def to_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "fit_low": self.fit_low,
            "fit_high": self.fit_high,
            "points_fitted": self.points_fitted,
            "slope": None if math.isnan(self.slope) else self.slope,
            "intercept": None if math.isnan(self.intercept) else self.intercept,
            "r2": None if math.isnan(self.r2) else self.r2,
            "power_law": self.is_power_law,
        }

    def write_csv(self, out: TextIO) -> None:
        """``length,count`` rows after a ``# slope=... intercept=... r2=...`` header."""
        if self.is_power_law:
            out.write(f"# slope={self.slope:.4f} intercept={self.intercept:.4f} r2={self.r2:.4f}\n")
        else:
            out.write("# slope=nan power_law=false\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["length", "count"])
        w.writerows(zip(self.lengths.tolist(), self.counts.tolist()))


def length_distribution(lengths: Iterable[int], low: float = LOW_PERCENTILE,
                        high: float = HIGH_PERCENTILE) -> LengthDistribution:
    """Histogram of ``lengths`` and a least-squares fit of log(count) on log(length).

    Lengths outside the ``[low, high]`` percentile range are left out of the fit.
    A range with fewer than three distinct lengths cannot support a fit; the
    result then carries NaN coefficients and ``is_power_law`` is false.
    """
    x = np.asarray(list(lengths) if not isinstance(lengths, np.ndarray) else lengths)
    if x.size < MIN_ITEMS:
        raise InsufficientData(f"need at least {MIN_ITEMS} items, got {x.size}")
    if (x < 1).any():
        raise ValueError("lengths must be positive")
    values, counts = np.unique(x.astype(np.int64), return_counts=True)
    lo, hi = np.percentile(x, [low, high])
    m = (values >= lo) & (values <= hi)
    nan = float("nan")
    slope = intercept = r2 = nan
    if m.sum() >= 3:
        lx, ly = np.log(values[m]), np.log(counts[m])
        slope, intercept = np.polyfit(lx, ly, 1)
        resid = ly - (slope * lx + intercept)
        ss_tot = float(((ly - ly.mean()) ** 2).sum())
        r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else nan
        slope, intercept = float(slope), float(intercept)
    return LengthDistribution(values, counts, int(x.size), float(lo), float(hi),
                              slope, intercept, r2, int(m.sum()))
