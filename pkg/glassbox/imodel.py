from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, FrozenSet, Optional, Tuple

import numpy as np
from pyxtension import validate
from typing_extensions import Self

from glassbox.chains import ModelCategory
from glassbox.errors import DimensionMismatch, EmptyDataset, FeatureCountMismatch, InvariantViolation, MissingField, ModelError, NotFitted


def frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    :param X: float64 feature matrix [n, p]
    :param y: optional targets [n]: float64 for regression, integral labels for classification
    """

    X: np.ndarray
    y: Optional[np.ndarray] = None

    @classmethod
    def build(cls, X: Any, y: Any = None) -> "Dataset":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be a 2-d matrix, got {X.ndim} dimensions")
        if X.shape[0] == 0:
            raise EmptyDataset("dataset has no samples")
        if y is not None:
            y = np.asarray(y)
            if y.ndim != 1 or len(y) != X.shape[0]:
                raise DimensionMismatch(f"y must be a vector of {X.shape[0]} targets, got shape {y.shape}")
        return cls(X=frozen(X), y=None if y is None else frozen(y))

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def targets(self) -> np.ndarray:
        if self.y is None:
            raise DimensionMismatch("this model needs targets, but the dataset has none")
        return self.y.astype(np.float64)

    def labels(self) -> np.ndarray:
        if self.y is None:
            raise DimensionMismatch("this model needs class labels, but the dataset has none")
        labels = self.y.astype(np.float64)
        if not np.all(np.isfinite(labels)) or np.any(labels != np.round(labels)):
            raise ModelError("class labels must be integers")
        return labels.astype(np.int64)


class IModel(ABC):
    """
    This class is the base for every supported model.
    - a model is created unfitted from its hyper-parameters; `fit` returns a new fitted instance and never mutates self
    - fitted models are immutable (learned tensors are read-only) and safe to share between threads
    - `extract_state` / `restore_state` convert to and from the ordered field map consumed by the transporter chains
    """

    MODEL_TYPE: ClassVar[str]
    CATEGORY: ClassVar[ModelCategory]
    STATE_FIELDS: ClassVar[Tuple[str, ...]]
    REMOTE_CALLS: ClassVar[FrozenSet[str]] = frozenset({"predict", "fit"})

    def __init__(self) -> None:
        self._fitted = False
        self.n_features_in_: Optional[int] = None

    @property
    def is_fitted(self) -> bool:
        return self._fitted

    @abstractmethod
    def hyper_params(self) -> Dict[str, Any]:
        raise NotImplementedError()

    @abstractmethod
    def fit(self, ds: Dataset) -> Self:
        raise NotImplementedError()

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError()

    @abstractmethod
    def extract_state(self) -> Dict[str, Any]:
        """
        :raises NotFitted: if the model was never fitted
        """
        raise NotImplementedError()

    @classmethod
    @abstractmethod
    def restore_state(cls, state: Dict[str, Any]) -> Self:
        """
        Unknown extra fields are ignored.

        :raises MissingField: if a required field is absent
        :raises InvariantViolation: if a field holds a value the model cannot run with
        """
        raise NotImplementedError()

    def _fitted_copy(self) -> Self:
        model = type(self)(**self.hyper_params())
        model._fitted = True
        return model

    def _check_fitted(self) -> None:
        if not self._fitted:
            raise NotFitted(f"{self.MODEL_TYPE} is not fitted")

    def _check_input(self, X: Any) -> np.ndarray:
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise FeatureCountMismatch(f"{self.MODEL_TYPE} expects {self.n_features_in_} features, got input of shape {X.shape}")
        return X

    @staticmethod
    def _field(state: Dict[str, Any], name: str) -> Any:
        if name not in state:
            raise MissingField(name)
        return state[name]

    @classmethod
    def _int_field(cls, state: Dict[str, Any], name: str, minimum: Optional[int] = None) -> int:
        value = cls._field(state, name)
        if type(value) is not int:
            raise InvariantViolation(f"{name} must be an integer, got {value!r}")
        if minimum is not None and value < minimum:
            raise InvariantViolation(f"{name} must be >= {minimum}, got {value}")
        return value

    @classmethod
    def _float_field(cls, state: Dict[str, Any], name: str) -> float:
        value = cls._field(state, name)
        if type(value) not in (int, float):
            raise InvariantViolation(f"{name} must be a number, got {value!r}")
        return float(value)

    @classmethod
    def _bool_field(cls, state: Dict[str, Any], name: str) -> bool:
        value = cls._field(state, name)
        if type(value) is not bool:
            raise InvariantViolation(f"{name} must be a boolean, got {value!r}")
        return value

    @classmethod
    def _tensor_field(cls, state: Dict[str, Any], name: str, dtype: Any, shape: Tuple[Optional[int], ...]) -> np.ndarray:
        """Fetches a tensor field checking dtype and shape; None in shape matches any extent."""
        value = cls._field(state, name)
        if not isinstance(value, np.ndarray) or value.dtype != np.dtype(dtype):
            raise InvariantViolation(f"{name} must be a {np.dtype(dtype)} tensor")
        if value.ndim != len(shape) or any(want is not None and got != want for got, want in zip(value.shape, shape)):
            raise InvariantViolation(f"{name} has shape {list(value.shape)}, expected {[s if s is not None else '*' for s in shape]}")
        if value.dtype == np.float64 and not np.all(np.isfinite(value)):
            raise InvariantViolation(f"{name} must hold finite values")
        return frozen(value)

    @staticmethod
    def _scalar_field(state: Dict[str, Any], name: str) -> np.float64:
        value = IModel._field(state, name)
        if type(value) is not np.float64 or not np.isfinite(value):
            raise InvariantViolation(f"{name} must be a finite numpy.float64 scalar")
        return value

    @staticmethod
    def _check_positive(value: Any, name: str) -> None:
        validate(value > 0, f"{name} must be positive, got {value}")

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v!r}" for k, v in self.hyper_params().items())
        return f"{type(self).__name__}({params}{', fitted' if self._fitted else ''})"
