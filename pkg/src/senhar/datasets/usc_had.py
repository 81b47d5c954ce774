"""USC-HAD loader: ``Subject<N>/a<activity>t<trial>.mat`` files at 100 Hz.

Each file carries ``sensor_readings`` (n x 6: accelerometer x, y, z then
gyroscope x, y, z) and usually ``activity_number`` and ``subject``.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import scipy.io

from senhar.datasets.base import ACTIVITIES, Recording
from senhar.errors import DataError

NATIVE_RATE = 100.0
# USC-HAD activity numbers -> canonical activity names
SELECTED = {9: "Standing", 8: "Sitting", 1: "Walking", 4: "Upstairs", 5: "Downstairs", 6: "Running"}
_NAME = re.compile(r"a(\d+)t(\d+)\.mat$", re.IGNORECASE)


def load_trial(path: Path, subject: str | None = None) -> Recording | None:
    """Read one trial file; returns None for activities outside the selected six."""
    m = _NAME.search(path.name)
    try:
        mat = scipy.io.loadmat(str(path))
        readings = np.asarray(mat["sensor_readings"], dtype=np.float64)
    except (OSError, ValueError, KeyError, NotImplementedError, scipy.io.matlab.MatReadError) as exc:
        raise DataError(f"unreadable USC-HAD trial file {path}: {exc}") from exc
    act = mat.get("activity_number")
    act = int(np.asarray(act).ravel()[0]) if act is not None and np.asarray(act).size else None
    if act is None:
        if m is None:
            raise DataError(f"cannot determine activity for {path}")
        act = int(m.group(1))
    if act not in SELECTED:
        return None
    if readings.ndim != 2 or readings.shape[1] < 6:
        raise DataError(f"{path}: sensor_readings must be n x 6, got {readings.shape}")
    subj = mat.get("subject")
    if subj is not None and np.asarray(subj).size:
        subject = str(np.asarray(subj).ravel()[0])
    t = np.arange(len(readings)) / NATIVE_RATE
    label = ACTIVITIES["usc_had"].index(SELECTED[act])
    return Recording([t, t.copy()], [readings[:, 0:3].T.copy(), readings[:, 3:6].T.copy()], label,
                     subject or path.parent.name, "MotionNode")


def load_usc_had(path) -> list[Recording]:
    root = Path(path)
    files = sorted(root.rglob("*.mat"))
    if not files:
        raise DataError(f"no USC-HAD trial files under {root}")
    recordings = []
    for f in files:
        rec = load_trial(f, subject=f.parent.name.replace("Subject", ""))
        if rec is not None:
            recordings.append(rec)
    return recordings
