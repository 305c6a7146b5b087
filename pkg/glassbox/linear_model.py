from typing import Any, Dict

import numpy as np
from typing_extensions import Self

from glassbox.chains import ModelCategory
from glassbox.errors import InvariantViolation, NotBinary
from glassbox.imodel import Dataset, IModel, frozen


class LinearRegressionModel(IModel):
    """
    Ordinary least squares solved by SVD on mean-centered data, so that the exported rank_ and singular_ fields describe
    the centered design matrix. copy_X, n_jobs and positive are inert format-compatibility fields.
    """

    MODEL_TYPE = "LinearRegression"
    CATEGORY = ModelCategory.LinearModel
    STATE_FIELDS = ("fit_intercept", "copy_X", "n_jobs", "positive", "n_features_in_", "coef_", "rank_", "singular_", "intercept_")

    def __init__(self, fit_intercept: bool = True) -> None:
        super().__init__()
        self.fit_intercept = fit_intercept
        self.copy_X = True
        self.n_jobs = None
        self.positive = False
        self.coef_ = None
        self.intercept_ = None
        self.rank_ = None
        self.singular_ = None

    def hyper_params(self) -> Dict[str, Any]:
        return {"fit_intercept": self.fit_intercept}

    def fit(self, ds: Dataset) -> Self:
        X, y = ds.X, ds.targets()
        n, p = X.shape
        if self.fit_intercept:
            x_offset, y_offset = X.mean(axis=0), y.mean()
        else:
            x_offset, y_offset = np.zeros(p), 0.0
        Xc, yc = X - x_offset, y - y_offset

        cond = np.finfo(np.float64).eps * max(n, p)
        coef, _, _, singular = np.linalg.lstsq(Xc, yc, rcond=cond)
        rank = int(np.count_nonzero(singular > cond * singular[0])) if len(singular) else 0

        model = self._fitted_copy()
        model.n_features_in_ = p
        model.coef_ = frozen(coef)
        model.rank_ = rank
        model.singular_ = frozen(singular)
        model.intercept_ = np.float64(y_offset - x_offset @ coef) if self.fit_intercept else np.float64(0.0)
        return model

    def predict(self, X: Any) -> np.ndarray:
        X = self._check_input(X)
        return X @ self.coef_ + self.intercept_

    def extract_state(self) -> Dict[str, Any]:
        self._check_fitted()
        return {
            "fit_intercept": self.fit_intercept,
            "copy_X": self.copy_X,
            "n_jobs": self.n_jobs,
            "positive": self.positive,
            "n_features_in_": self.n_features_in_,
            "coef_": self.coef_,
            "rank_": self.rank_,
            "singular_": self.singular_,
            "intercept_": self.intercept_,
        }

    @classmethod
    def restore_state(cls, state: Dict[str, Any]) -> Self:
        model = cls(fit_intercept=cls._bool_field(state, "fit_intercept"))
        for inert in ("copy_X", "n_jobs", "positive"):
            cls._field(state, inert)
        p = cls._int_field(state, "n_features_in_", minimum=1)
        coef = cls._tensor_field(state, "coef_", np.float64, (p,))
        singular = cls._tensor_field(state, "singular_", np.float64, (None,))
        rank = cls._int_field(state, "rank_", minimum=0)
        if len(singular) > p or np.any(singular < 0) or np.any(np.diff(singular) > 0):
            raise InvariantViolation("singular_ must hold at most n_features_in_ non-negative, non-increasing values")
        if rank > len(singular):
            raise InvariantViolation(f"rank_ {rank} exceeds the number of singular values {len(singular)}")

        model._fitted = True
        model.n_features_in_ = p
        model.coef_ = coef
        model.rank_ = rank
        model.singular_ = singular
        model.intercept_ = cls._scalar_field(state, "intercept_")
        return model


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LogisticRegressionModel(IModel):
    """
    Binary logistic regression without regularization, fitted by full-batch gradient descent from zero weights.
    n_iter_ counts the gradient steps applied; fitting stops once the largest gradient component drops below tol.
    """

    MODEL_TYPE = "LogisticRegression"
    CATEGORY = ModelCategory.LinearModel
    STATE_FIELDS = ("max_iter", "tol", "lr", "n_features_in_", "classes_", "coef_", "intercept_", "n_iter_")
    REMOTE_CALLS = IModel.REMOTE_CALLS | {"decision_function"}

    DEFAULT_MAX_ITER = 1000
    DEFAULT_TOL = 1e-6
    DEFAULT_LR = 0.1

    def __init__(self, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL, lr: float = DEFAULT_LR) -> None:
        super().__init__()
        self._check_positive(max_iter, "max_iter")
        self._check_positive(lr, "lr")
        self.max_iter = int(max_iter)
        self.tol = float(tol)
        self.lr = float(lr)
        self.classes_ = None
        self.coef_ = None
        self.intercept_ = None
        self.n_iter_ = None

    def hyper_params(self) -> Dict[str, Any]:
        return {"max_iter": self.max_iter, "tol": self.tol, "lr": self.lr}

    def fit(self, ds: Dataset) -> Self:
        X, labels = ds.X, ds.labels()
        classes = np.unique(labels)
        if len(classes) != 2:
            raise NotBinary(f"logistic regression needs exactly 2 classes, got {len(classes)}")
        t = (labels == classes[1]).astype(np.float64)
        n, p = X.shape

        w = np.zeros(p)
        b = 0.0
        n_iter = 0
        while n_iter < self.max_iter:
            err = _sigmoid(X @ w + b) - t
            grad_w = X.T @ err / n
            grad_b = err.mean()
            if max(np.abs(grad_w).max(initial=0.0), abs(grad_b)) < self.tol:
                break
            w = w - self.lr * grad_w
            b = b - self.lr * grad_b
            n_iter += 1

        model = self._fitted_copy()
        model.n_features_in_ = p
        model.classes_ = frozen(classes.astype(np.int64))
        model.coef_ = frozen(w.reshape(1, p))
        model.intercept_ = frozen(np.array([b], dtype=np.float64))
        model.n_iter_ = n_iter
        return model

    def decision_function(self, X: Any) -> np.ndarray:
        X = self._check_input(X)
        return X @ self.coef_[0] + self.intercept_[0]

    def predict(self, X: Any) -> np.ndarray:
        # sigmoid(z) > 0.5 exactly when z > 0; a tie keeps the lower class
        return self.classes_[(self.decision_function(X) > 0).astype(np.int64)]

    def extract_state(self) -> Dict[str, Any]:
        self._check_fitted()
        return {
            "max_iter": self.max_iter,
            "tol": self.tol,
            "lr": self.lr,
            "n_features_in_": self.n_features_in_,
            "classes_": self.classes_,
            "coef_": self.coef_,
            "intercept_": self.intercept_,
            "n_iter_": self.n_iter_,
        }

    @classmethod
    def restore_state(cls, state: Dict[str, Any]) -> Self:
        max_iter = cls._int_field(state, "max_iter", minimum=1)
        lr = cls._float_field(state, "lr")
        if lr <= 0:
            raise InvariantViolation("lr must be positive")
        model = cls(max_iter=max_iter, tol=cls._float_field(state, "tol"), lr=lr)
        p = cls._int_field(state, "n_features_in_", minimum=1)
        classes = cls._tensor_field(state, "classes_", np.int64, (2,))
        if classes[0] >= classes[1]:
            raise InvariantViolation("classes_ must be sorted ascending and distinct")
        n_iter = cls._int_field(state, "n_iter_", minimum=0)
        if n_iter > max_iter:
            raise InvariantViolation(f"n_iter_ {n_iter} exceeds max_iter {max_iter}")

        model._fitted = True
        model.n_features_in_ = p
        model.classes_ = classes
        model.coef_ = cls._tensor_field(state, "coef_", np.float64, (1, p))
        model.intercept_ = cls._tensor_field(state, "intercept_", np.float64, (1,))
        model.n_iter_ = n_iter
        return model


def fit_linear_regression(ds: Dataset, fit_intercept: bool = True) -> LinearRegressionModel:
    return LinearRegressionModel(fit_intercept=fit_intercept).fit(ds)


def fit_logistic_regression(
    ds: Dataset,
    max_iter: int = LogisticRegressionModel.DEFAULT_MAX_ITER,
    tol: float = LogisticRegressionModel.DEFAULT_TOL,
    lr: float = LogisticRegressionModel.DEFAULT_LR,
) -> LogisticRegressionModel:
    return LogisticRegressionModel(max_iter=max_iter, tol=tol, lr=lr).fit(ds)
