"""The five reference classifiers with pinned hyperparameters.

LR and KNN see standardized features; the tree models and Gaussian NB take
raw values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

MODEL_NAMES = ("LR", "KNN", "NB", "DT", "RF")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    needs_scaling: bool

    def build(self, seed: int):
        if self.name == "LR":
            return LogisticRegression(penalty="l2", C=1.0, max_iter=2000,
                                      random_state=seed)
        if self.name == "KNN":
            return KNeighborsClassifier(n_neighbors=5, metric="euclidean")
        if self.name == "NB":
            return GaussianNB()
        if self.name == "DT":
            return DecisionTreeClassifier(criterion="gini", max_depth=20,
                                          random_state=seed)
        if self.name == "RF":
            return RandomForestClassifier(n_estimators=100, bootstrap=True,
                                          max_features="sqrt",
                                          criterion="gini", random_state=seed,
                                          n_jobs=-1)
        raise ValueError(f"unknown model: {self.name}")


SPECS: Dict[str, ModelSpec] = {
    "LR": ModelSpec("LR", needs_scaling=True),
    "KNN": ModelSpec("KNN", needs_scaling=True),
    "NB": ModelSpec("NB", needs_scaling=False),
    "DT": ModelSpec("DT", needs_scaling=False),
    "RF": ModelSpec("RF", needs_scaling=False),
}
