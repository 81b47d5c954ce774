"""Heterogeneity Human Activity Recognition (HHAR) phone recordings.

Expects ``Phones_accelerometer.csv`` and ``Phones_gyroscope.csv`` with the
columns Index, Arrival_Time, Creation_Time, x, y, z, User, Model, Device, gt.
Creation_Time (nanoseconds) drives alignment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from senhar.datasets.base import ACTIVITIES, Recording
from senhar.errors import DataError

log = logging.getLogger(__name__)

SENSOR_FILES = ("Phones_accelerometer.csv", "Phones_gyroscope.csv")
COLUMNS = ["Index", "Arrival_Time", "Creation_Time", "x", "y", "z", "User", "Model", "Device", "gt"]
GT_TO_ACTIVITY = {
    "stand": "Standing",
    "sit": "Sitting",
    "walk": "Walking",
    "stairsup": "Upstairs",
    "stairsdown": "Downstairs",
    "bike": "Biking",
}


@dataclass
class ParseReport:
    rows: int = 0
    rejected: dict[str, int] = field(default_factory=dict)
    duplicate_timestamps: int = 0

    @property
    def rejected_total(self) -> int:
        return sum(self.rejected.values())


def _read(path: Path, report: ParseReport) -> pd.DataFrame:
    if not path.exists():
        raise DataError(f"missing HHAR sensor file: {path}")
    try:
        df = pd.read_csv(path, usecols=["Creation_Time", "x", "y", "z", "User", "Device", "gt"],
                         dtype={"User": str, "Device": str, "gt": str}, keep_default_na=False)
    except (ValueError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    report.rows += len(df)
    known = df["gt"].isin(GT_TO_ACTIVITY.keys())
    for name, count in df.loc[~known, "gt"].value_counts().items():
        report.rejected[name] = report.rejected.get(name, 0) + int(count)
    return df[known]


def _streams(df: pd.DataFrame, report: ParseReport) -> dict[tuple[str, str, str], tuple[np.ndarray, np.ndarray]]:
    out = {}
    for key, grp in df.groupby(["User", "Device", "gt"], sort=True):
        grp = grp.sort_values("Creation_Time", kind="stable")
        t = grp["Creation_Time"].to_numpy(dtype=np.float64) / 1e9
        keep = np.concatenate([[True], np.diff(t) > 0])
        report.duplicate_timestamps += int((~keep).sum())
        out[key] = (t[keep], grp[["x", "y", "z"]].to_numpy(dtype=np.float64)[keep].T)
    return out


def load_hhar(path, report: ParseReport | None = None) -> list[Recording]:
    """One Recording per (user, device, activity) present in both sensor files."""
    root = Path(path)
    report = report if report is not None else ParseReport()
    acc = _streams(_read(root / SENSOR_FILES[0], report), report)
    gyro = _streams(_read(root / SENSOR_FILES[1], report), report)
    labels = {name: i for i, name in enumerate(ACTIVITIES["hhar"])}
    recordings = []
    for key in sorted(acc.keys() & gyro.keys()):
        user, device, gt = key
        (ta, va), (tg, vg) = acc[key], gyro[key]
        recordings.append(Recording([ta, tg], [va, vg], labels[GT_TO_ACTIVITY[gt]], user, device))
    log.info("HHAR: %d recordings, %d rows, %d rejected", len(recordings), report.rows, report.rejected_total)
    return recordings
