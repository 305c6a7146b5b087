from unittest import TestCase

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from glassbox.chains import ModelCategory, build_chain, chain_deserialize, chain_serialize
from glassbox.cluster import KMeansModel
from glassbox.errors import FormatError, InvariantViolation, UnknownCategory, UnsupportedStructure
from glassbox.imodel import Dataset
from glassbox.itransporter import AbstractTransporter
from glassbox.linear_model import LinearRegressionModel, LogisticRegressionModel
from glassbox.naive_bayes import GaussianNBModel
from glassbox.structures import LabelIndex
from glassbox.transporters import (
    ContainerTransporter,
    LabelIndexTransporter,
    NdArrayTransporter,
    PrimitiveTransporter,
    ScalarTransporter,
    TreeTransporter,
)
from glassbox.tree import DecisionTreeClassifierModel
from tests.config import CONFIG


class Interval:
    def __init__(self, low: float, high: float) -> None:
        self.low = low
        self.high = high


class IntervalTransporter(AbstractTransporter):
    NAME = "interval"
    STRUCTURE = "Interval"

    def can_handle(self, value):
        return isinstance(value, Interval)

    def _serialize_fields(self, value, chain, path):
        return {"low": value.low, "high": value.high}

    def _deserialize_fields(self, node, chain, path):
        return Interval(self._require(node, "low", path), self._require(node, "high", path))


_LEAVES = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(2**63), max_value=2**63 - 1),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=8),
    st.lists(st.floats(allow_nan=False, allow_infinity=False), max_size=6).map(lambda xs: np.array(xs, dtype=np.float64)),
    st.integers(min_value=-1000, max_value=1000).map(np.int64),
)
_STATES = st.dictionaries(
    st.text(min_size=1, max_size=6).filter(lambda k: not k.startswith("pymiloed")),
    st.recursive(_LEAVES, lambda children: st.lists(children, max_size=3) | st.dictionaries(st.sampled_from(["a", "b", "c"]), children, max_size=3), max_leaves=8),
    max_size=5,
)


def _same_state(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return isinstance(b, np.ndarray) and a.dtype == b.dtype and np.array_equal(a, b)
    if isinstance(a, dict):
        return isinstance(b, dict) and list(a) == list(b) and all(_same_state(a[k], b[k]) for k in a)
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(_same_state(x, y) for x, y in zip(a, b))
    return type(a) is type(b) and a == b


class TestTransporterChain(TestCase):
    def test_layouts(self):
        expected = {
            ModelCategory.LinearModel: [PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, ContainerTransporter],
            ModelCategory.DecisionTree: [PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, TreeTransporter, LabelIndexTransporter, ContainerTransporter],
            ModelCategory.Clustering: [PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, ContainerTransporter],
            ModelCategory.NaiveBayes: [PrimitiveTransporter, ScalarTransporter, NdArrayTransporter, LabelIndexTransporter, ContainerTransporter],
        }
        self.assertEqual(set(expected), set(ModelCategory))
        for category, layout in expected.items():
            chain = build_chain(category)
            self.assertEqual([type(t) for t in chain.transporters], layout, category)
            self.assertEqual(len(chain), len(layout))
        self.assertRaises(UnknownCategory, build_chain, "Ensemble")

    def test_every_state_value_has_exactly_one_claimant(self):
        labels = np.array([0, 0, 1, 1], dtype=np.int64)
        X = np.array([[0.0, 1.0], [1.0, 0.5], [2.0, 2.0], [3.0, 2.5]])
        fitted = [
            LinearRegressionModel().fit(Dataset.build(X, X @ np.array([1.0, 2.0]) + 3.0)),
            LogisticRegressionModel().fit(Dataset.build(X, labels)),
            DecisionTreeClassifierModel().fit(Dataset.build(X, labels)),
            KMeansModel(n_clusters=2).fit(Dataset.build(X)),
            GaussianNBModel().fit(Dataset.build(X, labels)),
        ]

        def _values(value):
            yield value
            if isinstance(value, list):
                for item in value:
                    yield from _values(item)
            elif isinstance(value, dict):
                for item in value.values():
                    yield from _values(item)

        for model in fitted:
            chain = build_chain(model.CATEGORY)
            for name, field in model.extract_state().items():
                for value in _values(field):
                    self.assertEqual(len(chain.claimants(value)), 1, f"{model.MODEL_TYPE}.{name}: {value!r}")

    def test_first_match_wins(self):
        chain = build_chain(ModelCategory.LinearModel)
        claimants = chain.claimants(np.zeros(2))
        self.assertIsInstance(claimants[0], NdArrayTransporter)

    def test_unclaimed_value(self):
        chain = build_chain(ModelCategory.LinearModel)
        with self.assertRaises(UnsupportedStructure) as ctx:
            chain_serialize(chain, {"weights": {"inner": object()}})
        self.assertEqual(ctx.exception.path, "weights.inner")
        self.assertEqual(ctx.exception.kind, "object")

    def test_non_finite_plain_float_unclaimed(self):
        chain = build_chain(ModelCategory.LinearModel)
        self.assertRaises(UnsupportedStructure, chain_serialize, chain, {"tol": float("nan")})

    def test_label_index_needs_its_transporter(self):
        labels = LabelIndex.from_classes(np.array([0, 3], dtype=np.int64))
        self.assertRaises(UnsupportedStructure, chain_serialize, build_chain(ModelCategory.LinearModel), {"classes_": labels})
        chain = build_chain(ModelCategory.NaiveBayes)
        node = chain_serialize(chain, {"classes_": labels})
        self.assertEqual(node["classes_"]["index"], {"0": 0, "3": 1})
        self.assertEqual(chain_deserialize(chain, node)["classes_"], labels)

    def test_label_index_rejects_inconsistent_map(self):
        chain = build_chain(ModelCategory.NaiveBayes)
        node = chain_serialize(chain, {"classes_": LabelIndex.from_classes(np.array([0, 3], dtype=np.int64))})
        node["classes_"]["index"] = {"0": 1, "3": 0}
        self.assertRaises(InvariantViolation, chain_deserialize, chain, node)

    def test_with_transporter(self):
        chain = build_chain(ModelCategory.LinearModel)
        extended = chain.with_transporter(IntervalTransporter())
        self.assertEqual(len(extended), len(chain) + 1)
        self.assertIsInstance(extended.transporters[-2], IntervalTransporter)
        self.assertIsInstance(extended.transporters[-1], ContainerTransporter)
        self.assertRaises(UnsupportedStructure, chain_serialize, chain, {"range": Interval(0.0, 1.0)})

        node = chain_serialize(extended, {"range": Interval(0.0, 1.0)})
        self.assertEqual(node["range"], {"low": 0.0, "high": 1.0, "pymiloed-data-structure": "Interval"})
        restored = chain_deserialize(extended, node)["range"]
        self.assertEqual((restored.low, restored.high), (0.0, 1.0))

    def test_state_must_be_map(self):
        chain = build_chain(ModelCategory.Clustering)
        self.assertRaises(UnsupportedStructure, chain_serialize, chain, [1, 2])
        self.assertRaises(FormatError, chain_deserialize, chain, [1, 2])

    @settings(max_examples=CONFIG.HYPOTHESIS_EXAMPLES, deadline=None)
    @given(_STATES)
    def test_fuzzed_round_trip(self, state):
        chain = build_chain(ModelCategory.LinearModel)
        self.assertTrue(_same_state(chain_deserialize(chain, chain_serialize(chain, state)), state))
