from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from glassbox.errors import InvariantViolation

TREE_LEAF = -1
TREE_UNDEFINED = -2


@dataclass(frozen=True, eq=False)
class TreeStructure:
    """
    A fitted binary decision tree held as five parallel node arrays, node 0 being the root.
    Leaves have children_left == children_right == TREE_LEAF and feature == TREE_UNDEFINED.

    :param value: float64 array [node_count, n_classes] with the training class counts reaching each node
    """

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray

    ARRAY_FIELDS = ("children_left", "children_right", "feature", "threshold", "value")

    @property
    def node_count(self) -> int:
        return len(self.children_left)

    def is_leaf(self, node: int) -> bool:
        return int(self.children_left[node]) == TREE_LEAF

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, TreeStructure):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f)) and getattr(self, f).dtype == getattr(other, f).dtype for f in self.ARRAY_FIELDS)

    def check(self) -> None:
        """
        Raises InvariantViolation unless the arrays describe a single rooted binary tree in which every node is reachable
        from the root exactly once.
        """
        int_fields = ("children_left", "children_right", "feature")
        for name in int_fields:
            arr = getattr(self, name)
            if not isinstance(arr, np.ndarray) or arr.dtype != np.int64 or arr.ndim != 1:
                raise InvariantViolation(f"tree.{name} must be a 1-d int64 tensor")
        for name in ("threshold", "value"):
            arr = getattr(self, name)
            if not isinstance(arr, np.ndarray) or arr.dtype != np.float64:
                raise InvariantViolation(f"tree.{name} must be a float64 tensor")
        n = self.node_count
        if n == 0:
            raise InvariantViolation("tree has no nodes")
        if self.threshold.shape != (n,) or self.feature.shape != (n,) or self.children_right.shape != (n,):
            raise InvariantViolation("tree node arrays must have equal length")
        if self.value.ndim != 2 or self.value.shape[0] != n:
            raise InvariantViolation("tree.value must be [node_count, n_classes]")
        if np.any(self.value < 0) or not np.all(np.isfinite(self.value)):
            raise InvariantViolation("tree.value must hold finite non-negative class counts")

        seen = np.zeros(n, dtype=bool)
        pending: List[int] = [0]
        while pending:
            node = pending.pop()
            if seen[node]:
                raise InvariantViolation(f"tree node {node} is reachable more than once")
            seen[node] = True
            left, right, feat = int(self.children_left[node]), int(self.children_right[node]), int(self.feature[node])
            if left == TREE_LEAF or right == TREE_LEAF:
                if left != right or feat != TREE_UNDEFINED:
                    raise InvariantViolation(f"tree node {node}: leaf needs both children {TREE_LEAF} and feature {TREE_UNDEFINED}")
                continue
            if feat < 0:
                raise InvariantViolation(f"tree node {node}: internal node has feature {feat}")
            if not np.isfinite(self.threshold[node]):
                raise InvariantViolation(f"tree node {node}: threshold must be finite")
            for child in (left, right):
                if not node < child < n:
                    raise InvariantViolation(f"tree node {node}: child {child} must lie in ({node}, {n})")
                pending.append(child)
        if not seen.all():
            unreachable = np.flatnonzero(~seen).tolist()
            raise InvariantViolation(f"tree nodes {unreachable} are not reachable from the root")

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row: x[feature] <= threshold goes left."""
        leaves = np.empty(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            node = 0
            while not self.is_leaf(node):
                if row[self.feature[node]] <= self.threshold[node]:
                    node = int(self.children_left[node])
                else:
                    node = int(self.children_right[node])
            leaves[i] = node
        return leaves


@dataclass(frozen=True, eq=False)
class LabelIndex:
    """Sorted class labels together with their label -> position map."""

    classes: np.ndarray
    index: Dict[int, int] = field(default_factory=dict)

    @classmethod
    def from_classes(cls, classes: np.ndarray) -> "LabelIndex":
        classes = np.asarray(classes, dtype=np.int64)
        if classes.ndim != 1 or np.any(np.diff(classes) <= 0):
            raise InvariantViolation("class labels must be a strictly increasing 1-d tensor")
        return cls(classes=classes, index={int(label): i for i, label in enumerate(classes.tolist())})

    def positions(self, labels: np.ndarray) -> np.ndarray:
        return np.array([self.index[int(label)] for label in labels], dtype=np.int64)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, LabelIndex):
            return NotImplemented
        return np.array_equal(self.classes, other.classes) and self.classes.dtype == other.classes.dtype and self.index == other.index
