"""Entropy feature tables, classifiers and the cross-validation protocol."""

from .evaluation import MODELS, ConfusionMatrix, EvalReport, cross_validate, evaluate, model_descriptor
from .features import (
    BINARY_CLASSES,
    FIVE_CLASSES,
    UNDEFINED_SENTINEL_FACTOR,
    FeatureTable,
    build_feature_table,
    stratified_kfold,
)
from .models import (
    RandomForest,
    Standardizer,
    fit_linear_svm,
    fit_logistic,
    knn_train_predict,
    linear_svm_train_predict,
    logistic_train_predict,
    random_forest_train_predict,
    svm_objective,
)
from .ranking import (
    AttributeRanking,
    RankedAttribute,
    Reevaluation,
    categorize,
    drop_category_and_reevaluate,
    pearson_r,
    rank_attributes,
)

__all__ = [
    "MODELS",
    "ConfusionMatrix",
    "EvalReport",
    "cross_validate",
    "evaluate",
    "model_descriptor",
    "BINARY_CLASSES",
    "FIVE_CLASSES",
    "UNDEFINED_SENTINEL_FACTOR",
    "FeatureTable",
    "build_feature_table",
    "stratified_kfold",
    "RandomForest",
    "Standardizer",
    "fit_linear_svm",
    "fit_logistic",
    "knn_train_predict",
    "linear_svm_train_predict",
    "logistic_train_predict",
    "random_forest_train_predict",
    "svm_objective",
    "AttributeRanking",
    "RankedAttribute",
    "Reevaluation",
    "categorize",
    "drop_category_and_reevaluate",
    "pearson_r",
    "rank_attributes",
]
