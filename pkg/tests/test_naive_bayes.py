from unittest import TestCase

import numpy as np

from glassbox.errors import EmptyClass, InvariantViolation, NotBinary
from glassbox.imodel import Dataset
from glassbox.naive_bayes import GaussianNBModel, fit_gaussian_nb
from tests.model_tester import IModelTester

PAIRS = Dataset.build([[0], [2], [10], [12]], [0, 0, 1, 1])


def _three_classes(seed: int = 9) -> Dataset:
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1, 2], 15)
    X = np.array([[0.0, 0.0], [3.0, 1.0], [-1.0, 4.0]])[y] + rng.normal(size=(45, 2))
    return Dataset.build(X, y)


class TestGaussianNB(TestCase):
    def setUp(self):
        self.tester = IModelTester(GaussianNBModel, _three_classes(), self)

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

    def test_class_means_and_priors(self):
        model = fit_gaussian_nb(PAIRS)
        np.testing.assert_allclose(model.theta_, [[1.0], [11.0]], atol=1e-12)
        self.assertEqual(model.class_prior_.tolist(), [0.5, 0.5])
        self.assertEqual(model.class_count_.tolist(), [2.0, 2.0])
        # population variance 1.0 plus var_smoothing * largest feature variance
        np.testing.assert_allclose(model.var_, [[1.0 + model.epsilon_], [1.0 + model.epsilon_]], rtol=1e-12)
        self.assertEqual(model.predict([[1.5], [10.5]]).tolist(), [0, 1])

    def test_constant_features_keep_positive_variance(self):
        model = fit_gaussian_nb(Dataset.build([[1.0], [1.0], [1.0]], [0, 1, 1]))
        self.assertEqual(model.epsilon_, np.float64(model.var_smoothing))
        self.assertTrue(np.all(model.var_ > 0))

    def test_declared_class_without_samples(self):
        self.assertRaises(EmptyClass, fit_gaussian_nb, PAIRS, classes=[0, 1, 2])
        self.assertRaises(ValueError, fit_gaussian_nb, PAIRS, classes=[0])

    def test_decision_function_is_log_posterior_margin(self):
        model = fit_gaussian_nb(PAIRS)
        X = np.array([[0.5], [6.0], [11.5]])
        jll = model.joint_log_likelihood(X)
        np.testing.assert_array_equal(model.decision_function(X), jll[:, 1] - jll[:, 0])
        self.assertLess(model.decision_function([[0.0]])[0], 0.0)
        self.assertRaises(NotBinary, fit_gaussian_nb(_three_classes()).decision_function, [[0.0, 0.0]])

    def test_restore_rejects_bad_priors(self):
        state = fit_gaussian_nb(PAIRS).extract_state()
        state["class_prior_"] = np.array([0.6, 0.6])
        self.assertRaises(InvariantViolation, GaussianNBModel.restore_state, state)

    def test_restore_rejects_non_positive_variance(self):
        state = fit_gaussian_nb(PAIRS).extract_state()
        state["var_"] = np.array([[1.0], [0.0]])
        self.assertRaises(InvariantViolation, GaussianNBModel.restore_state, state)
