"""
Supervised evaluation of shape descriptors.

Two classifiers, both scikit-learn compatible estimators:

    KNNClassifier       k nearest neighbours, Euclidean distance
    GaussianNaiveBayes  per-class, per-feature Gaussians with a variance floor

cross_validate() runs stratified n-fold cross-validation repeated many
times with seeded fold assignment, fitting the min-max scaler on the
training folds only, and reports mean +/- std accuracy over the repeats.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import StratifiedKFold
from sklearn.preprocessing import MinMaxScaler

from contourgraph.descriptor import DescriptorLayout, FeatureVector
from contourgraph.errors import ClassificationError

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-9


# ============================================================
# DATASET
# ============================================================

@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """
    Feature matrix with one label per row.

    Attributes:
        features: (m, d) float64 matrix
        labels: (m,) array of class names
        layout: shared layout of every row
        ids: optional sample identifiers
    """

    features: np.ndarray
    labels: np.ndarray
    layout: DescriptorLayout
    ids: tuple[Optional[str], ...] = field(default=())

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=object)
        if features.ndim != 2:
            raise ClassificationError(f"Feature matrix must be 2-D, got {features.shape}")
        if len(labels) != features.shape[0]:
            raise ClassificationError(f"{features.shape[0]} vectors but {len(labels)} labels")
        if features.shape[1] != len(self.layout):
            raise ClassificationError(
                f"Feature width {features.shape[1]} does not match layout length {len(self.layout)}"
            )
        if any(label is None or label == "" for label in labels):
            raise ClassificationError("Every vector must be labeled")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels.astype(str))
        ids = tuple(self.ids) if self.ids else (None,) * len(labels)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "LabeledDataset":
        if not vectors:
            raise ClassificationError("Cannot build a dataset from zero vectors")
        layout = vectors[0].layout
        for vector in vectors:
            if vector.layout != layout:
                raise ClassificationError("All vectors must share the same layout")
            if not vector.label:
                raise ClassificationError(f"Vector {vector.id or '?'} has no label")
        features = np.vstack([v.values for v in vectors])
        labels = np.array([v.label for v in vectors], dtype=object)
        return cls(features, labels, layout, tuple(v.id for v in vectors))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def classes(self) -> list[str]:
        """Sorted class names; class ids follow this order."""
        return sorted(set(self.labels.tolist()))

    def class_counts(self) -> dict[str, int]:
        names, counts = np.unique(self.labels, return_counts=True)
        return {str(name): int(count) for name, count in zip(names, counts)}


# ============================================================
# CLASSIFIERS
# ============================================================

class KNNClassifier(ClassifierMixin, BaseEstimator):
    """
    k nearest neighbours by Euclidean distance.

    Ties on distance go to the lower training index; ties on the vote go to
    the class met first among the ordered neighbours.
    """

    def __init__(self, k: int = 1):
        self.k = k

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if len(X) == 0:
            raise ClassificationError("Training set is empty")
        if not 1 <= self.k <= len(X):
            raise ClassificationError(f"k={self.k} must be between 1 and the training size {len(X)}")
        self.train_ = X
        self.labels_ = np.asarray(y, dtype=object)
        self.classes_ = np.array(sorted(set(self.labels_.tolist())), dtype=object)
        return self

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.train_.shape[1]:
            raise ClassificationError(
                f"Query has {X.shape[1]} features, training data has {self.train_.shape[1]}"
            )
        diff = X[:, None, :] - self.train_[None, :, :]
        distances = np.sqrt(np.einsum("qtd,qtd->qt", diff, diff))
        nearest = np.argsort(distances, axis=1, kind="stable")[:, : self.k]
        return np.array([self._vote(self.labels_[row]) for row in nearest], dtype=object)

    @staticmethod
    def _vote(neighbours: np.ndarray):
        counts: dict = {}
        for label in neighbours:
            counts[label] = counts.get(label, 0) + 1
        best = max(counts.values())
        # dicts keep insertion order, so the first class met wins ties
        return next(label for label, count in counts.items() if count == best)


@dataclass(frozen=True, eq=False)
class NBModel:
    """Fitted Gaussian naive Bayes parameters, rows in class order."""

    classes: np.ndarray
    log_prior: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @property
    def n_features(self) -> int:
        return self.mean.shape[1]


def _fit_gaussians(features: np.ndarray, labels: Sequence[str], var_floor: float) -> NBModel:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=object)
    classes = np.array(sorted(set(y.tolist())), dtype=object)
    means, variances, priors = [], [], []
    for name in classes:
        rows = X[y == name]
        if len(rows) < 2:
            raise ClassificationError(f"Class {name!r} has {len(rows)} training sample(s); need at least 2")
        means.append(rows.mean(axis=0))
        variances.append(np.maximum(rows.var(axis=0), var_floor))
        priors.append(len(rows) / len(X))
    return NBModel(classes, np.log(priors), np.array(means), np.array(variances))


def _predict_gaussians(model: NBModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ClassificationError(f"Query has {X.shape[1]} features, model has {model.n_features}")
    log_norm = -0.5 * np.log(2.0 * np.pi * model.variance).sum(axis=1)
    sq = ((X[:, None, :] - model.mean[None, :, :]) ** 2 / model.variance[None, :, :]).sum(axis=2)
    scores = model.log_prior[None, :] + log_norm[None, :] - 0.5 * sq
    # argmax keeps the first class on ties
    return model.classes[np.argmax(scores, axis=1)]


def nb_fit(train: LabeledDataset, var_floor: float = VARIANCE_FLOOR) -> NBModel:
    """
    Per-class, per-feature Gaussians; variances floored at var_floor and
    priors from class frequencies.

    Raises:
        ClassificationError: a class has fewer than 2 training samples
    """
    return _fit_gaussians(train.features, train.labels, var_floor)


def nb_predict(model: NBModel, query: FeatureVector) -> str:
    """Class maximising log-prior plus summed log-likelihood; ties go to the first class."""
    return str(_predict_gaussians(model, query.values)[0])


class GaussianNaiveBayes(ClassifierMixin, BaseEstimator):
    """Estimator wrapper around the nb_fit / nb_predict model."""

    def __init__(self, var_floor: float = VARIANCE_FLOOR):
        self.var_floor = var_floor

    def fit(self, X, y):
        self.model_ = _fit_gaussians(X, y, self.var_floor)
        self.classes_ = self.model_.classes
        return self

    def predict(self, X):
        return _predict_gaussians(self.model_, X)


def knn_classify(train: LabeledDataset, query: FeatureVector, k: int = 1, scale: bool = True) -> str:
    """
    Label of one query by majority vote of its k nearest training vectors,
    on min-max rescaled features when `scale` is set (scaler fitted on train).
    """
    if len(query.values) != train.features.shape[1]:
        raise ClassificationError(
            f"Query has {len(query.values)} features, training data has {train.features.shape[1]}"
        )
    X, q = train.features, query.values[None, :]
    if scale:
        scaler = MinMaxScaler().fit(X)
        X, q = scaler.transform(X), scaler.transform(q)
    return str(KNNClassifier(k).fit(X, train.labels).predict(q)[0])


# ============================================================
# CROSS-VALIDATION
# ============================================================

@dataclass(frozen=True)
class ClassifierSpec:
    """Which classifier to build: knn with its k, or nb."""

    name: str = "knn"
    k: int = 1

    @classmethod
    def parse(cls, text: str) -> "ClassifierSpec":
        """Parse `knn`, `knn:K` or `nb`."""
        head, _, tail = str(text).strip().lower().partition(":")
        if head == "knn":
            try:
                k = int(tail) if tail else 1
            except ValueError:
                raise ClassificationError(f"Bad k in classifier spec {text!r}") from None
            if k < 1:
                raise ClassificationError(f"k must be positive, got {k}")
            return cls("knn", k)
        if head == "nb" and not tail:
            return cls("nb", 0)
        raise ClassificationError(f"Unknown classifier {text!r}; use knn:K or nb")

    def build(self) -> BaseEstimator:
        return KNNClassifier(self.k) if self.name == "knn" else GaussianNaiveBayes()

    def __str__(self) -> str:
        return f"knn:{self.k}" if self.name == "knn" else "nb"


@dataclass(frozen=True, eq=False)
class AccuracyReport:
    """
    Accuracy of repeated cross-validation.

    Attributes:
        mean_accuracy: mean of per-repeat accuracies, percent
        std_dev: population standard deviation of per-repeat accuracies, percent
        confusion: summed confusion matrix, rows = true class (in `classes` order)
    """

    mean_accuracy: float
    std_dev: float
    n_folds: int
    n_repeats: int
    seed: int
    classifier: str
    scaled: bool
    classes: tuple[str, ...]
    confusion: np.ndarray
    repeat_accuracies: tuple[float, ...]

    def format(self) -> str:
        return f"{self.mean_accuracy:.2f} ± {self.std_dev:.2f}"

    def to_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy,
            "std_dev": self.std_dev,
            "n_folds": self.n_folds,
            "n_repeats": self.n_repeats,
            "seed": self.seed,
            "classifier": self.classifier,
            "scaled": self.scaled,
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "repeat_accuracies": list(self.repeat_accuracies),
        }


def repeat_seed(seed: int, repeat: int) -> int:
    """Fold-assignment seed of one repeat, derived from (seed, repeat)."""
    return int(np.random.SeedSequence([int(seed), int(repeat)]).generate_state(1)[0])


def _run_repeat(data: LabeledDataset, spec: ClassifierSpec, n_folds: int, seed: int, repeat: int,
                scale: bool, classes: list[str]) -> tuple[float, np.ndarray]:
    folds = StratifiedKFold(n_splits=n_folds, shuffle=True, random_state=repeat_seed(seed, repeat))
    predicted = np.empty(len(data), dtype=object)
    for train_index, test_index in folds.split(data.features, data.labels):
        X_train, X_test = data.features[train_index], data.features[test_index]
        if scale:
            scaler = MinMaxScaler().fit(X_train)
            X_train, X_test = scaler.transform(X_train), scaler.transform(X_test)
        model = spec.build().fit(X_train, data.labels[train_index])
        predicted[test_index] = model.predict(X_test)
    predicted = predicted.astype(str)
    accuracy = 100.0 * float(np.mean(predicted == data.labels))
    return accuracy, confusion_matrix(data.labels, predicted, labels=classes)


def cross_validate(data: LabeledDataset, classifier: ClassifierSpec | str = "knn:1", n_folds: int = 10,
                   n_repeats: int = 100, seed: int = 0, scale: bool = True, jobs: int = 1) -> AccuracyReport:
    """
    Repeated stratified n-fold cross-validation.

    Every repeat draws a fresh fold assignment from (seed, repeat index);
    accuracy of a repeat is correct / total over all its folds.

    Args:
        data: Labeled dataset
        classifier: ClassifierSpec or its text form (knn:K, nb)
        n_folds: Folds per repeat (>= 2)
        n_repeats: Number of repeats
        seed: Base seed
        scale: Fit a min-max scaler on the training folds
        jobs: Threads used to run repeats; results do not depend on it

    Raises:
        ClassificationError: n_folds < 2 or a class smaller than n_folds
    """
    spec = classifier if isinstance(classifier, ClassifierSpec) else ClassifierSpec.parse(classifier)
    if n_folds < 2:
        raise ClassificationError(f"n_folds must be >= 2, got {n_folds}")
    if n_repeats < 1:
        raise ClassificationError(f"n_repeats must be >= 1, got {n_repeats}")
    counts = data.class_counts()
    small = {name: count for name, count in counts.items() if count < n_folds}
    if small:
        raise ClassificationError(
            f"Classes smaller than n_folds={n_folds}: "
            + ", ".join(f"{name} ({count})" for name, count in sorted(small.items()))
        )

    classes = data.classes
    logger.info(
        "[classify] %s, %d samples, %d classes, %d folds x %d repeats",
        spec, len(data), len(classes), n_folds, n_repeats,
    )

    def run(repeat: int):
        return _run_repeat(data, spec, n_folds, seed, repeat, scale, classes)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, range(n_repeats)))
    else:
        results = [run(repeat) for repeat in range(n_repeats)]

    accuracies = np.array([accuracy for accuracy, _ in results])
    confusion = np.sum([matrix for _, matrix in results], axis=0)
    return AccuracyReport(
        mean_accuracy=float(accuracies.mean()),
        std_dev=float(accuracies.std()),
        n_folds=n_folds,
        n_repeats=n_repeats,
        seed=int(seed),
        classifier=str(spec),
        scaled=scale,
        classes=tuple(classes),
        confusion=confusion,
        repeat_accuracies=tuple(float(a) for a in accuracies),
    )
