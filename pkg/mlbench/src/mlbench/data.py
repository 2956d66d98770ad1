"""Dataset loading for the router-event CSV schema (columns F1..F19)."""

from __future__ import annotations

from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

EXPECTED_COLUMNS = [f"F{i}" for i in range(1, 20)]
FEATURE_COLUMNS = EXPECTED_COLUMNS[:-1]   # F1..F18
TARGET_COLUMN = "F19"


class SchemaError(ValueError):
    """The CSV does not match the expected event schema."""


class SingleClassError(ValueError):
    """The requested task needs more than one target class."""


def load_dataset(csv_path: str | Path) -> pd.DataFrame:
    frame = pd.read_csv(csv_path)
    missing = [c for c in EXPECTED_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"missing column: {missing[0]}")
    extra = [c for c in frame.columns if c not in EXPECTED_COLUMNS]
    if extra:
        raise SchemaError(f"unexpected column: {extra[0]}")
    return frame


def feature_target(frame: pd.DataFrame, task: str) -> Tuple[np.ndarray, np.ndarray]:
    """Feature matrix F1..F18 and the task's target vector.

    Binary collapses attack labels {1, 2} to 1.
    """
    x = frame[FEATURE_COLUMNS].to_numpy(dtype=np.float64)
    y = frame[TARGET_COLUMN].to_numpy(dtype=np.int64)
    if task == "binary":
        y = (y > 0).astype(np.int64)
    elif task != "multiclass":
        raise ValueError(f"unknown task: {task}")
    if len(np.unique(y)) < 2:
        raise SingleClassError(
            f"{task} task needs at least two classes, got {np.unique(y)}")
    return x, y
