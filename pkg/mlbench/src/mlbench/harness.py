"""Training/evaluation harness: stratified split, scores, importances."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from sklearn.metrics import (accuracy_score, precision_recall_fscore_support)
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import StandardScaler

from .data import FEATURE_COLUMNS, feature_target, load_dataset
from .models import SPECS


def train_eval(csv_path: str | Path, model_name: str, task: str,
               split_seed: int = 0) -> Dict[str, float]:
    """Stratified 80/20 train/test evaluation of one model on one task.

    Returns test accuracy plus macro precision/recall/F1.
    """
    spec = SPECS[model_name]
    frame = load_dataset(csv_path)
    x, y = feature_target(frame, task)
    x_train, x_test, y_train, y_test = train_test_split(
        x, y, test_size=0.2, random_state=split_seed, stratify=y)
    if spec.needs_scaling:
        scaler = StandardScaler().fit(x_train)
        x_train = scaler.transform(x_train)
        x_test = scaler.transform(x_test)
    model = spec.build(split_seed)
    model.fit(x_train, y_train)
    predicted = model.predict(x_test)
    precision, recall, f1, _ = precision_recall_fscore_support(
        y_test, predicted, average="macro", zero_division=0)
    return {
        "model": model_name,
        "task": task,
        "split_seed": split_seed,
        "accuracy": float(accuracy_score(y_test, predicted)),
        "precision": float(precision),
        "recall": float(recall),
        "f1": float(f1),
    }


def feature_importance(csv_path: str | Path,
                       seed: int = 0) -> List[Tuple[str, float]]:
    """Forest impurity importances over F1..F18, normalized and sorted
    descending."""
    frame = load_dataset(csv_path)
    x, y = feature_target(frame, "multiclass")
    model = SPECS["RF"].build(seed)
    model.fit(x, y)
    raw = np.asarray(model.feature_importances_, dtype=np.float64)
    total = raw.sum()
    if total > 0:
        raw = raw / total
    ranked = sorted(zip(FEATURE_COLUMNS, raw.tolist()),
                    key=lambda item: item[1], reverse=True)
    return ranked
