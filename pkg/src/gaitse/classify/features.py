"""Feature tables built from entropy profiles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..entropy import SeProfile, channel_key
from ..errors import ClassTooSmall, EmptyFeatureSet, MissingChannel
from ..recording import CORE15, Condition, JointGroup

__all__ = [
    "BINARY_CLASSES",
    "FIVE_CLASSES",
    "UNDEFINED_SENTINEL_FACTOR",
    "FeatureTable",
    "build_feature_table",
    "stratified_kfold",
]

BINARY_CLASSES = ("Normal", "Abnormal")
FIVE_CLASSES = tuple(c.value for c in Condition)

# undefined entropy is replaced by this multiple of the largest defined value
UNDEFINED_SENTINEL_FACTOR = 1.5


@dataclass(frozen=True)
class FeatureTable:
    X: np.ndarray  # (n_rows, n_features)
    y: np.ndarray  # class indices into ``classes``
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    subject_ids: tuple[str, ...]
    trial_keys: tuple[tuple, ...]
    imputed: np.ndarray  # (n_rows, n_features) True where the SE was undefined
    labeling: str = "Binary"

    def __len__(self):
        return self.X.shape[0]

    @property
    def labels(self) -> list[str]:
        return [self.classes[i] for i in self.y]

    def rows(self, index) -> "FeatureTable":
        index = np.asarray(index)
        return FeatureTable(
            self.X[index], self.y[index], self.classes, self.feature_names,
            tuple(self.subject_ids[i] for i in index), tuple(self.trial_keys[i] for i in index),
            self.imputed[index], self.labeling,
        )

    def select_features(self, names: Sequence[str]) -> "FeatureTable":
        names = list(names)
        if not names:
            raise EmptyFeatureSet("no features left")
        cols = [self.feature_names.index(n) for n in names]
        return FeatureTable(
            self.X[:, cols], self.y, self.classes, tuple(names), self.subject_ids,
            self.trial_keys, self.imputed[:, cols], self.labeling,
        )


def _label(condition: Condition, labeling: str) -> str:
    if labeling == "Binary":
        return "Normal" if condition is Condition.NW else "Abnormal"
    return condition.value


def build_feature_table(profiles: Sequence[SeProfile], labeling: str = "Binary",
                        joints: JointGroup = CORE15) -> FeatureTable:
    """One row per profile, one column per joint of ``joints``.

    Labels are Normal/Abnormal (``"Binary"``) or the five conditions
    (``"FiveClass"``). Undefined entropies become
    ``UNDEFINED_SENTINEL_FACTOR * max(defined values)`` and are flagged in
    ``imputed``.
    """
    if labeling not in ("Binary", "FiveClass"):
        raise ValueError("labeling must be 'Binary' or 'FiveClass'")
    if not profiles:
        raise EmptyFeatureSet("no profiles")
    names = tuple(j.value for j in joints)
    X = np.empty((len(profiles), len(names)))
    imputed = np.zeros(X.shape, dtype=bool)
    for r, prof in enumerate(profiles):
        for c, joint in enumerate(joints):
            key = channel_key(joint, prof.axis or "Y")
            if key not in prof:
                raise MissingChannel(key, prof.provenance.label)
            v = prof.value(key)
            if v is None:
                imputed[r, c] = True
                X[r, c] = np.nan
            else:
                X[r, c] = v
    if imputed.any():
        defined = X[~imputed]
        top = float(defined.max()) if defined.size else 1.0
        X[imputed] = UNDEFINED_SENTINEL_FACTOR * top
    classes = BINARY_CLASSES if labeling == "Binary" else FIVE_CLASSES
    y = np.array([classes.index(_label(p.provenance.condition, labeling)) for p in profiles])
    X.flags.writeable = False
    return FeatureTable(
        X, y, classes, names,
        tuple(p.provenance.subject_id for p in profiles),
        tuple(p.provenance.key for p in profiles),
        imputed, labeling,
    )


def stratified_kfold(y, k: int = 10, seed: int = 0) -> np.ndarray:
    """Fold id (0..k-1) for every row.

    Rows of each class are shuffled and dealt round-robin; the dealing
    position carries over between classes so fold sizes stay within one
    of each other. Per-fold class counts differ from proportional by < 1.
    """
    if isinstance(y, FeatureTable):
        y = y.y
    y = np.asarray(y)
    if k < 2:
        raise ValueError("need at least 2 folds")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.shape[0], dtype=np.int64)
    offset = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if idx.size < k:
            raise ClassTooSmall(f"class {cls} has {idx.size} rows, fewer than {k} folds")
        idx = rng.permutation(idx)
        folds[idx] = (offset + np.arange(idx.size)) % k
        offset = (offset + idx.size) % k
    return folds
