"""Correlation-based attribute ranking and feature-subset re-evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyFeatureSet, NonBinaryLabels
from .evaluation import EvalReport, cross_validate
from .features import FeatureTable

__all__ = [
    "CATEGORY_A_MIN",
    "CATEGORY_B_MIN",
    "RankedAttribute",
    "AttributeRanking",
    "categorize",
    "pearson_r",
    "rank_attributes",
    "drop_category_and_reevaluate",
]

CATEGORY_A_MIN = 0.30
CATEGORY_B_MIN = 0.15


def categorize(r: float) -> str:
    if r >= CATEGORY_A_MIN:
        return "A"
    if r >= CATEGORY_B_MIN:
        return "B"
    return "C"


@dataclass(frozen=True)
class RankedAttribute:
    feature_name: str
    pearson_r: float  # |r| with the 0/1 class
    signed_r: float
    category: str
    constant: bool = False


@dataclass(frozen=True)
class AttributeRanking:
    entries: tuple[RankedAttribute, ...]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def names(self, category: str | None = None) -> list[str]:
        return [e.feature_name for e in self.entries if category is None or e.category == category]

    def to_csv(self) -> str:
        lines = ["rank,feature,r,signed_r,category,constant"]
        for i, e in enumerate(self.entries, start=1):
            lines.append(f"{i},{e.feature_name},{e.pearson_r:.6f},{e.signed_r:.6f},{e.category},{int(e.constant)}")
        return "\n".join(lines) + "\n"


def pearson_r(x, y) -> float | None:
    """Sample correlation, or None when either vector is constant."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        return None
    return float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))


def rank_attributes(table: FeatureTable) -> AttributeRanking:
    """Rank features by |Pearson r| with the class (Normal = 0, Abnormal = 1).

    Constant features get r = 0 and ``constant=True``. Ties keep feature order.
    """
    if len(table.classes) != 2:
        raise NonBinaryLabels("attribute ranking needs binary labels")
    if len(table) < 2:
        raise ValueError("need at least 2 rows")
    out = []
    for c, name in enumerate(table.feature_names):
        r = pearson_r(table.X[:, c], table.y)
        constant = r is None
        signed = 0.0 if constant else r
        out.append(RankedAttribute(name, abs(signed), signed, categorize(abs(signed)), constant))
    order = sorted(range(len(out)), key=lambda i: -out[i].pearson_r)
    return AttributeRanking(tuple(out[i] for i in order))


@dataclass(frozen=True)
class Reevaluation:
    model: str
    full: EvalReport
    reduced: EvalReport
    dropped: tuple[str, ...]

    @property
    def accuracy_delta(self) -> float:
        return float(self.reduced.accuracy - self.full.accuracy)


def drop_category_and_reevaluate(
    table: FeatureTable,
    ranking: AttributeRanking,
    drop=("C",),
    models=("logit", "rf", "knn", "svm"),
    folds: int = 10,
    seed: int = 0,
    model_params: dict | None = None,
) -> dict[str, Reevaluation]:
    """Re-run CV without the features in ``drop`` categories, per model."""
    drop = set(drop)
    if set(ranking.names()) != set(table.feature_names):
        raise ValueError("ranking was computed from a different feature set")
    dropped = tuple(e.feature_name for e in ranking if e.category in drop)
    keep = [n for n in table.feature_names if n not in dropped]
    if not keep:
        raise EmptyFeatureSet(f"dropping categories {sorted(drop)} removes every feature")
    reduced_table = table.select_features(keep)
    model_params = model_params or {}
    out = {}
    for m in models:
        params = model_params.get(m, {})
        full = cross_validate(table, m, folds, seed, **params)
        reduced = cross_validate(reduced_table, m, folds, seed, **params)
        out[m] = Reevaluation(m, full, reduced, dropped)
    return out
