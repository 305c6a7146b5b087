from typing import Any, Dict, Optional

import numpy as np
from pyxtension import validate
from typing_extensions import Self

from glassbox.chains import ModelCategory
from glassbox.errors import EmptyClass, InvariantViolation, NotBinary
from glassbox.imodel import Dataset, IModel, frozen
from glassbox.structures import LabelIndex

PRIOR_TOLERANCE = 1e-12


class GaussianNBModel(IModel):
    """
    Gaussian naive Bayes.
    var_ holds the per-class population variances plus epsilon_ = var_smoothing * (largest feature variance); when every
    feature is constant the floor is var_smoothing itself, so var_ is always strictly positive.
    """

    MODEL_TYPE = "GaussianNB"
    CATEGORY = ModelCategory.NaiveBayes
    STATE_FIELDS = ("var_smoothing", "n_features_in_", "classes_", "class_count_", "class_prior_", "theta_", "var_", "epsilon_")
    REMOTE_CALLS = IModel.REMOTE_CALLS | {"decision_function"}

    DEFAULT_VAR_SMOOTHING = 1e-9

    def __init__(self, var_smoothing: float = DEFAULT_VAR_SMOOTHING) -> None:
        super().__init__()
        self._check_positive(var_smoothing, "var_smoothing")
        self.var_smoothing = float(var_smoothing)
        self.classes_: Optional[LabelIndex] = None
        self.class_count_ = None
        self.class_prior_ = None
        self.theta_ = None
        self.var_ = None
        self.epsilon_ = None

    def hyper_params(self) -> Dict[str, Any]:
        return {"var_smoothing": self.var_smoothing}

    def fit(self, ds: Dataset, classes: Optional[Any] = None) -> Self:
        """
        :param classes: the full label set; defaults to the labels present in ds. Every class needs a sample.
        :raises EmptyClass: if a class of `classes` has no training sample
        """
        labels = ds.labels()
        present = np.unique(labels)
        index = LabelIndex.from_classes(np.unique(np.asarray(classes, dtype=np.int64)) if classes is not None else present)
        unknown = np.setdiff1d(present, index.classes)
        validate(len(unknown) == 0, f"training labels {unknown.tolist()} are not among the declared classes")

        X = ds.X
        n_classes, p = len(index.classes), ds.n_features
        largest = X.var(axis=0).max()
        epsilon = self.var_smoothing * largest if largest > 0 else self.var_smoothing

        theta = np.empty((n_classes, p))
        var = np.empty((n_classes, p))
        counts = np.empty(n_classes)
        for i, label in enumerate(index.classes):
            rows = X[labels == label]
            if len(rows) == 0:
                raise EmptyClass(f"class {int(label)} has no training samples")
            theta[i] = rows.mean(axis=0)
            var[i] = rows.var(axis=0) + epsilon
            counts[i] = len(rows)

        model = self._fitted_copy()
        model.n_features_in_ = p
        model.classes_ = index
        model.class_count_ = frozen(counts)
        model.class_prior_ = frozen(counts / counts.sum())
        model.theta_ = frozen(theta)
        model.var_ = frozen(var)
        model.epsilon_ = np.float64(epsilon)
        return model

    def joint_log_likelihood(self, X: Any) -> np.ndarray:
        X = self._check_input(X)
        log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_), axis=1)
        diff = X[:, np.newaxis, :] - self.theta_[np.newaxis, :, :]
        return np.log(self.class_prior_) + log_norm - 0.5 * np.sum(diff * diff / self.var_, axis=2)

    def predict(self, X: Any) -> np.ndarray:
        return self.classes_.classes[np.argmax(self.joint_log_likelihood(X), axis=1)]

    def decision_function(self, X: Any) -> np.ndarray:
        if len(self.classes_.classes) != 2:
            raise NotBinary("decision_function needs a binary naive Bayes classifier")
        jll = self.joint_log_likelihood(X)
        return jll[:, 1] - jll[:, 0]

    def extract_state(self) -> Dict[str, Any]:
        self._check_fitted()
        return {
            "var_smoothing": self.var_smoothing,
            "n_features_in_": self.n_features_in_,
            "classes_": self.classes_,
            "class_count_": self.class_count_,
            "class_prior_": self.class_prior_,
            "theta_": self.theta_,
            "var_": self.var_,
            "epsilon_": self.epsilon_,
        }

    @classmethod
    def restore_state(cls, state: Dict[str, Any]) -> Self:
        var_smoothing = cls._float_field(state, "var_smoothing")
        if var_smoothing <= 0:
            raise InvariantViolation("var_smoothing must be positive")
        model = cls(var_smoothing=var_smoothing)
        p = cls._int_field(state, "n_features_in_", minimum=1)
        classes = cls._field(state, "classes_")
        if not isinstance(classes, LabelIndex) or len(classes.classes) == 0:
            raise InvariantViolation("classes_ must be a non-empty label index")
        c = len(classes.classes)
        counts = cls._tensor_field(state, "class_count_", np.float64, (c,))
        prior = cls._tensor_field(state, "class_prior_", np.float64, (c,))
        if np.any(prior <= 0) or abs(prior.sum() - 1.0) > PRIOR_TOLERANCE:
            raise InvariantViolation(f"class_prior_ must be positive and sum to 1, got sum {prior.sum()!r}")
        var = cls._tensor_field(state, "var_", np.float64, (c, p))
        if np.any(var <= 0):
            raise InvariantViolation("var_ must be strictly positive")
        epsilon = cls._scalar_field(state, "epsilon_")
        if epsilon <= 0:
            raise InvariantViolation("epsilon_ must be positive")

        model._fitted = True
        model.n_features_in_ = p
        model.classes_ = classes
        model.class_count_ = counts
        model.class_prior_ = prior
        model.theta_ = cls._tensor_field(state, "theta_", np.float64, (c, p))
        model.var_ = var
        model.epsilon_ = epsilon
        return model


def fit_gaussian_nb(ds: Dataset, var_smoothing: float = GaussianNBModel.DEFAULT_VAR_SMOOTHING, classes: Optional[Any] = None) -> GaussianNBModel:
    return GaussianNBModel(var_smoothing=var_smoothing).fit(ds, classes=classes)
