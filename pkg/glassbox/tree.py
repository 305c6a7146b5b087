import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from typing_extensions import Self

from glassbox.chains import ModelCategory
from glassbox.errors import InvariantViolation, NotBinary
from glassbox.imodel import Dataset, IModel
from glassbox.structures import TREE_LEAF, TREE_UNDEFINED, LabelIndex, TreeStructure

logger = logging.getLogger(__name__)

_GAIN_EPS = 1e-12
_LEAF_THRESHOLD = -2.0


@dataclass(frozen=True)
class _Split:
    feature: int
    threshold: float
    gain: float


def _gini(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Row-wise Gini impurity of class-count rows; totals must be positive."""
    return 1.0 - np.sum(counts * counts, axis=-1) / (totals * totals)


def _best_split_on(feature: int, column: np.ndarray, onehot: np.ndarray, parent_gini: float) -> Optional[_Split]:
    order = np.argsort(column, kind="stable")
    xs = column[order]
    n = len(xs)
    cuts = np.flatnonzero(xs[:-1] < xs[1:])
    if len(cuts) == 0:
        return None

    left_counts = np.cumsum(onehot[order], axis=0)[cuts]
    right_counts = onehot.sum(axis=0) - left_counts
    n_left = (cuts + 1).astype(np.float64)
    n_right = n - n_left
    child = (n_left * _gini(left_counts, n_left) + n_right * _gini(right_counts, n_right)) / n
    gains = parent_gini - child

    # first cut within tolerance of the best gain is the lowest threshold
    pos = int(np.flatnonzero(gains >= gains.max() - _GAIN_EPS)[0])
    i = int(cuts[pos])
    threshold = (xs[i] + xs[i + 1]) / 2.0
    if threshold == xs[i + 1]:
        threshold = xs[i]
    return _Split(feature=feature, threshold=float(threshold), gain=float(gains[pos]))


class _TreeBuilder:
    """Grows the node arrays in pre-order so every child index exceeds its parent's."""

    def __init__(self, X: np.ndarray, targets: np.ndarray, n_classes: int, max_depth: int) -> None:
        self._X = X
        self._onehot = np.eye(n_classes)[targets]
        self._max_depth = max_depth
        self._left: List[int] = []
        self._right: List[int] = []
        self._feature: List[int] = []
        self._threshold: List[float] = []
        self._value: List[np.ndarray] = []

    def build(self) -> TreeStructure:
        self._grow(np.arange(self._X.shape[0]), depth=0)
        return TreeStructure(
            children_left=np.array(self._left, dtype=np.int64),
            children_right=np.array(self._right, dtype=np.int64),
            feature=np.array(self._feature, dtype=np.int64),
            threshold=np.array(self._threshold, dtype=np.float64),
            value=np.array(self._value, dtype=np.float64),
        )

    def _best_split(self, rows: np.ndarray) -> Optional[_Split]:
        onehot = self._onehot[rows]
        counts = onehot.sum(axis=0)
        parent_gini = float(_gini(counts, np.float64(len(rows))))
        best: Optional[_Split] = None
        for feature in range(self._X.shape[1]):
            candidate = _best_split_on(feature, self._X[rows, feature], onehot, parent_gini)
            if candidate is None:
                continue
            if best is None or candidate.gain > best.gain + _GAIN_EPS:
                best = candidate
        if best is None or best.gain <= _GAIN_EPS:
            return None
        return best

    def _grow(self, rows: np.ndarray, depth: int) -> int:
        node = len(self._left)
        counts = self._onehot[rows].sum(axis=0)
        self._left.append(TREE_LEAF)
        self._right.append(TREE_LEAF)
        self._feature.append(TREE_UNDEFINED)
        self._threshold.append(_LEAF_THRESHOLD)
        self._value.append(counts)

        if depth >= self._max_depth or np.count_nonzero(counts) <= 1:
            return node
        split = self._best_split(rows)
        if split is None:
            return node

        goes_left = self._X[rows, split.feature] <= split.threshold
        self._feature[node] = split.feature
        self._threshold[node] = split.threshold
        self._left[node] = self._grow(rows[goes_left], depth + 1)
        self._right[node] = self._grow(rows[~goes_left], depth + 1)
        return node


class DecisionTreeClassifierModel(IModel):
    """
    CART classifier with Gini impurity.
    Ties between equally good splits go to the lowest feature index, then the lowest threshold.
    """

    MODEL_TYPE = "DecisionTreeClassifier"
    CATEGORY = ModelCategory.DecisionTree
    STATE_FIELDS = ("criterion", "max_depth", "n_features_in_", "classes_", "tree_")
    REMOTE_CALLS = IModel.REMOTE_CALLS | {"decision_function"}

    CRITERION = "gini"
    DEFAULT_MAX_DEPTH = 10

    def __init__(self, max_depth: int = DEFAULT_MAX_DEPTH) -> None:
        super().__init__()
        self._check_positive(max_depth, "max_depth")
        self.max_depth = int(max_depth)
        self.criterion = self.CRITERION
        self.classes_: Optional[LabelIndex] = None
        self.tree_: Optional[TreeStructure] = None

    def hyper_params(self) -> Dict[str, Any]:
        return {"max_depth": self.max_depth}

    def fit(self, ds: Dataset) -> Self:
        labels = ds.labels()
        classes = LabelIndex.from_classes(np.unique(labels))
        tree = _TreeBuilder(ds.X, classes.positions(labels), len(classes.classes), self.max_depth).build()
        logger.debug("grew a tree of %d nodes on %d samples", tree.node_count, ds.n_samples)

        model = self._fitted_copy()
        model.n_features_in_ = ds.n_features
        model.classes_ = classes
        model.tree_ = tree
        return model

    def _leaf_values(self, X: Any) -> np.ndarray:
        X = self._check_input(X)
        return self.tree_.value[self.tree_.apply(X)]

    def predict(self, X: Any) -> np.ndarray:
        return self.classes_.classes[np.argmax(self._leaf_values(X), axis=1)]

    def decision_function(self, X: Any) -> np.ndarray:
        if len(self.classes_.classes) != 2:
            raise NotBinary("decision_function needs a binary tree classifier")
        values = self._leaf_values(X)
        return 2.0 * values[:, 1] / values.sum(axis=1) - 1.0

    def extract_state(self) -> Dict[str, Any]:
        self._check_fitted()
        return {
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "n_features_in_": self.n_features_in_,
            "classes_": self.classes_,
            "tree_": self.tree_,
        }

    @classmethod
    def restore_state(cls, state: Dict[str, Any]) -> Self:
        criterion = cls._field(state, "criterion")
        if criterion != cls.CRITERION:
            raise InvariantViolation(f"criterion must be {cls.CRITERION!r}, got {criterion!r}")
        model = cls(max_depth=cls._int_field(state, "max_depth", minimum=1))
        p = cls._int_field(state, "n_features_in_", minimum=1)
        classes = cls._field(state, "classes_")
        if not isinstance(classes, LabelIndex) or len(classes.classes) == 0:
            raise InvariantViolation("classes_ must be a non-empty label index")
        tree = cls._field(state, "tree_")
        if not isinstance(tree, TreeStructure):
            raise InvariantViolation("tree_ must be a decision tree structure")
        tree.check()
        if np.any(tree.feature >= p):
            raise InvariantViolation(f"tree_ splits on a feature index >= n_features_in_ ({p})")
        if tree.value.shape[1] != len(classes.classes):
            raise InvariantViolation("tree_.value must have one column per class")
        if np.any(tree.value.sum(axis=1) <= 0):
            raise InvariantViolation("every tree node must hold at least one training sample")

        model._fitted = True
        model.n_features_in_ = p
        model.classes_ = classes
        model.tree_ = tree
        return model


def fit_decision_tree(ds: Dataset, max_depth: int = DecisionTreeClassifierModel.DEFAULT_MAX_DEPTH) -> DecisionTreeClassifierModel:
    return DecisionTreeClassifierModel(max_depth=max_depth).fit(ds)
