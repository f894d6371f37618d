"""Confusion matrices, metrics and the cross-validation protocol.

Metrics are exact fractions computed from integer counts. Precision,
recall or F with a zero denominator are None (undefined) and are left out
of macro averages.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..errors import LengthMismatch, NonBinaryLabels
from .features import FeatureTable, stratified_kfold
from .models import (
    knn_train_predict,
    linear_svm_train_predict,
    logistic_train_predict,
    random_forest_train_predict,
)

__all__ = [
    "ConfusionMatrix",
    "EvalReport",
    "evaluate",
    "MODELS",
    "model_descriptor",
    "cross_validate",
]


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[actual][predicted]``."""

    classes: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.classes)))

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["actual\\predicted", *self.classes])
        for name, row in zip(self.classes, self.counts):
            w.writerow([name, *row])
        return buf.getvalue()

    def pairs(self) -> tuple[list[str], list[str]]:
        """(predictions, actuals) label lists that reproduce these counts."""
        pred, act = [], []
        for i, row in enumerate(self.counts):
            for j, n in enumerate(row):
                pred += [self.classes[j]] * n
                act += [self.classes[i]] * n
        return pred, act


def _ratio(num: int, den: int) -> Fraction | None:
    return Fraction(num, den) if den else None


def _as_float(v):
    return None if v is None else float(v)


@dataclass(frozen=True)
class EvalReport:
    confusion: ConfusionMatrix
    accuracy: Fraction
    precision: dict[str, Fraction | None]
    recall: dict[str, Fraction | None]
    f_score: dict[str, Fraction | None]
    fold_assignments: tuple[int, ...] = ()
    model_descriptor: str = ""
    rng_seed: int | None = None

    @property
    def macro_precision(self) -> float | None:
        return self._macro(self.precision)

    @property
    def macro_recall(self) -> float | None:
        return self._macro(self.recall)

    @property
    def macro_f_score(self) -> float | None:
        return self._macro(self.f_score)

    @property
    def undefined_metrics(self) -> list[str]:
        out = []
        for name, table in (("precision", self.precision), ("recall", self.recall), ("f_score", self.f_score)):
            out += [f"{name}:{c}" for c, v in table.items() if v is None]
        return out

    @staticmethod
    def _macro(values) -> float | None:
        defined = [v for v in values.values() if v is not None]
        return float(sum(defined, Fraction(0)) / len(defined)) if defined else None

    def metrics_text(self) -> str:
        """``key=value`` lines; floats printed with 6 decimals."""

        def fmt(v):
            return "undefined" if v is None else f"{float(v):.6f}"

        lines = [
            f"model={self.model_descriptor}",
            f"seed={'' if self.rng_seed is None else self.rng_seed}",
            f"instances={self.confusion.total}",
            f"correct={self.confusion.trace}",
            f"accuracy={fmt(self.accuracy)}",
        ]
        for c in self.confusion.classes:
            lines += [
                f"precision.{c}={fmt(self.precision[c])}",
                f"recall.{c}={fmt(self.recall[c])}",
                f"f_score.{c}={fmt(self.f_score[c])}",
            ]
        lines += [
            f"macro_precision={fmt(self.macro_precision)}",
            f"macro_recall={fmt(self.macro_recall)}",
            f"macro_f_score={fmt(self.macro_f_score)}",
            f"undefined={','.join(self.undefined_metrics)}",
        ]
        if self.fold_assignments:
            lines.append("folds=" + "".join(str(f) if f < 10 else f"[{f}]" for f in self.fold_assignments))
        return "\n".join(lines) + "\n"


def evaluate(predictions: Sequence, actuals: Sequence, class_order: Sequence[str]) -> EvalReport:
    """Confusion matrix and per-class metrics.

    Labels may be class names or integer indices into ``class_order``.
    """
    if len(predictions) != len(actuals):
        raise LengthMismatch(f"{len(predictions)} predictions for {len(actuals)} actuals")
    classes = tuple(class_order)
    index = {c: i for i, c in enumerate(classes)}

    def code(v):
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            if not 0 <= v < len(classes):
                raise ValueError(f"class index {v} out of range")
            return int(v)
        try:
            return index[v]
        except KeyError:
            raise ValueError(f"label {v!r} not in class order {classes}") from None

    k = len(classes)
    counts = [[0] * k for _ in range(k)]
    for p, a in zip(predictions, actuals):
        counts[code(a)][code(p)] += 1
    cm = ConfusionMatrix(classes, tuple(tuple(r) for r in counts))

    precision, recall, f_score = {}, {}, {}
    for i, c in enumerate(classes):
        tp = counts[i][i]
        predicted = sum(counts[r][i] for r in range(k))
        actual = sum(counts[i])
        p = _ratio(tp, predicted)
        r = _ratio(tp, actual)
        precision[c] = p
        recall[c] = r
        f_score[c] = None if p is None or r is None or p + r == 0 else 2 * p * r / (p + r)
    accuracy = Fraction(cm.trace, cm.total) if cm.total else Fraction(0)
    return EvalReport(cm, accuracy, precision, recall, f_score)


# -- cross-validation --------------------------------------------------------


def _knn(Xtr, ytr, Xte, *, k=1, seed=0):
    return knn_train_predict(Xtr, ytr, Xte, k=k)


def _logit(Xtr, ytr, Xte, *, max_iter=100, tol=1e-8, seed=0):
    return logistic_train_predict(Xtr, ytr, Xte, max_iter=max_iter, tol=tol)


def _rf(Xtr, ytr, Xte, *, trees=100, seed=0):
    return random_forest_train_predict(Xtr, ytr, Xte, n_trees=trees, seed=seed)


def _svm(Xtr, ytr, Xte, *, c=5.0, epochs=200, seed=0):
    return linear_svm_train_predict(Xtr, ytr, Xte, c=c, epochs=epochs, seed=seed)


MODELS: dict[str, tuple[Callable, bool]] = {
    # name -> (adapter, binary only)
    "knn": (_knn, False),
    "logit": (_logit, True),
    "rf": (_rf, False),
    "svm": (_svm, True),
}

_DEFAULTS = {
    "knn": {"k": 1},
    "logit": {"max_iter": 100, "tol": 1e-8},
    "rf": {"trees": 100},
    "svm": {"c": 5.0, "epochs": 200},
}


def model_descriptor(model: str, **params) -> str:
    merged = dict(_DEFAULTS[model], **params)
    return model + "(" + ",".join(f"{k}={merged[k]!r}" for k in sorted(merged)) + ")"


def cross_validate(table: FeatureTable, model: str = "knn", folds: int = 10, seed: int = 0, **params) -> EvalReport:
    """Stratified k-fold CV; predictions from all folds pooled into one report.

    Fold ``f`` is predicted by a model trained on the other folds. Model
    seeds are derived from ``seed`` and the fold index.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {sorted(MODELS)}")
    adapter, binary_only = MODELS[model]
    if binary_only and len(table.classes) != 2:
        raise NonBinaryLabels(f"{model} needs binary labels, table has {len(table.classes)} classes")
    unknown = set(params) - set(_DEFAULTS[model])
    if unknown:
        raise ValueError(f"unknown parameters for {model}: {sorted(unknown)}")
    assignment = stratified_kfold(table.y, folds, seed)
    preds = np.empty(len(table), dtype=np.int64)
    for f in range(folds):
        test = assignment == f
        fold_seed = int(np.random.SeedSequence([seed, f]).generate_state(1)[0])
        preds[test] = adapter(table.X[~test], table.y[~test], table.X[test], seed=fold_seed,
                              **dict(_DEFAULTS[model], **params))
    report = evaluate(preds.tolist(), table.y.tolist(), table.classes)
    return EvalReport(
        report.confusion, report.accuracy, report.precision, report.recall, report.f_score,
        tuple(int(a) for a in assignment), model_descriptor(model, **params), seed,
    )
