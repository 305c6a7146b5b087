from unittest import TestCase

import numpy as np

from glassbox.chains import build_chain, chain_deserialize, chain_serialize
from glassbox.errors import InvariantViolation, NotBinary
from glassbox.imodel import Dataset
from glassbox.structures import TREE_LEAF, TREE_UNDEFINED, LabelIndex, TreeStructure
from glassbox.tree import DecisionTreeClassifierModel, fit_decision_tree
from tests.model_tester import IModelTester

STEP = Dataset.build([[0], [1], [2], [3]], [0, 0, 1, 1])


def _two_moons_like(seed: int = 11) -> Dataset:
    rng = np.random.default_rng(seed)
    X = rng.uniform(-2, 2, size=(80, 3))
    y = ((X[:, 0] * X[:, 1] > 0) ^ (X[:, 2] > 1.5)).astype(np.int64)
    return Dataset.build(X, y)


def _brute_force_threshold(x: np.ndarray, y: np.ndarray) -> float:
    """Best Gini midpoint by exhaustive evaluation, lowest threshold on ties."""
    best, best_threshold = None, None
    values = np.unique(x)
    for lo, hi in zip(values[:-1], values[1:]):
        t = (lo + hi) / 2
        impurity = 0.0
        for side in (y[x <= t], y[x > t]):
            p = np.bincount(side, minlength=2) / len(side)
            impurity += len(side) * (1 - np.sum(p * p))
        if best is None or impurity < best - 1e-12:
            best, best_threshold = impurity, t
    return best_threshold


class TestDecisionTree(TestCase):
    def setUp(self):
        self.tester = IModelTester(lambda: DecisionTreeClassifierModel(max_depth=4), _two_moons_like(), self)

    def test_fit_does_not_mutate(self):
        self.tester.test_fit_does_not_mutate()

    def test_state_round_trip(self):
        self.tester.test_state_round_trip()

    def test_document_round_trip(self):
        self.tester.test_document_round_trip()

    def test_exported_document_validates(self):
        self.tester.test_exported_document_validates()

    def test_not_fitted(self):
        self.tester.test_not_fitted()

    def test_missing_field(self):
        self.tester.test_missing_field()

    def test_feature_count_mismatch(self):
        self.tester.test_feature_count_mismatch()

    def test_file_round_trip(self):
        self.tester.test_file_round_trip()

    def test_step_threshold(self):
        model = fit_decision_tree(STEP)
        tree = model.tree_
        self.assertEqual(tree.node_count, 3)
        self.assertEqual(tree.threshold[0], 1.5)
        self.assertEqual(tree.feature.tolist(), [0, TREE_UNDEFINED, TREE_UNDEFINED])
        self.assertEqual(tree.children_left.tolist(), [1, TREE_LEAF, TREE_LEAF])
        self.assertEqual(tree.children_right.tolist(), [2, TREE_LEAF, TREE_LEAF])
        self.assertEqual(tree.value.tolist(), [[2.0, 2.0], [2.0, 0.0], [0.0, 2.0]])
        self.assertEqual(model.predict([[1.5], [1.6]]).tolist(), [0, 1])

    def test_threshold_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            x = rng.integers(0, 12, size=15).astype(np.float64)
            y = rng.integers(0, 2, size=15)
            if len(np.unique(x)) < 2 or len(np.unique(y)) < 2:
                continue
            model = fit_decision_tree(Dataset.build(x.reshape(-1, 1), y), max_depth=1)
            expected = _brute_force_threshold(x, y)
            if model.tree_.node_count == 1:
                continue
            self.assertEqual(model.tree_.threshold[0], expected)

    def test_depth_limit_and_purity(self):
        ds = _two_moons_like()
        stump = fit_decision_tree(ds, max_depth=1)
        self.assertLessEqual(stump.tree_.node_count, 3)
        deep = fit_decision_tree(ds, max_depth=20)
        self.assertEqual(np.mean(deep.predict(ds.X) == ds.y), 1.0)

    def test_single_class_is_one_leaf(self):
        model = fit_decision_tree(Dataset.build([[0.0], [1.0]], [4, 4]))
        self.assertEqual(model.tree_.node_count, 1)
        self.assertEqual(model.predict([[9.0]]).tolist(), [4])
        self.assertRaises(NotBinary, model.decision_function, [[0.0]])

    def test_decision_function_margin(self):
        model = fit_decision_tree(STEP)
        self.assertEqual(model.decision_function([[0.0], [3.0]]).tolist(), [-1.0, 1.0])

    def test_chain_round_trip_keeps_structures(self):
        state = fit_decision_tree(_two_moons_like()).extract_state()
        chain = build_chain(DecisionTreeClassifierModel.CATEGORY)
        restored = chain_deserialize(chain, chain_serialize(chain, state))
        self.assertEqual(restored["tree_"], state["tree_"])
        self.assertEqual(restored["classes_"], state["classes_"])
        self.assertIsInstance(restored["tree_"], TreeStructure)
        self.assertIsInstance(restored["classes_"], LabelIndex)

    def test_restore_rejects_out_of_range_feature(self):
        state = fit_decision_tree(STEP).extract_state()
        tree = state["tree_"]
        feature = tree.feature.copy()
        feature[0] = 5
        state["tree_"] = TreeStructure(tree.children_left, tree.children_right, feature, tree.threshold, tree.value)
        self.assertRaises(InvariantViolation, DecisionTreeClassifierModel.restore_state, state)

    def test_restore_rejects_cycle(self):
        state = fit_decision_tree(STEP).extract_state()
        tree = state["tree_"]
        state["tree_"] = TreeStructure(
            np.array([1, 0, TREE_LEAF], dtype=np.int64), tree.children_right, tree.feature, tree.threshold, tree.value
        )
        self.assertRaises(InvariantViolation, DecisionTreeClassifierModel.restore_state, state)

    def test_restore_rejects_unknown_criterion(self):
        state = fit_decision_tree(STEP).extract_state()
        state["criterion"] = "entropy"
        self.assertRaises(InvariantViolation, DecisionTreeClassifierModel.restore_state, state)
