from typing import Any, Dict, Type

import numpy as np

from glassbox.chains import ModelCategory
from glassbox.cluster import KMeansModel
from glassbox.errors import UnknownModelType
from glassbox.imodel import IModel
from glassbox.linear_model import LinearRegressionModel, LogisticRegressionModel
from glassbox.naive_bayes import GaussianNBModel
from glassbox.tree import DecisionTreeClassifierModel

MODEL_TYPES: Dict[str, Type[IModel]] = {
    cls.MODEL_TYPE: cls for cls in (LinearRegressionModel, LogisticRegressionModel, DecisionTreeClassifierModel, KMeansModel, GaussianNBModel)
}

# command-line spellings
MODEL_ALIASES: Dict[str, str] = {
    "linear-regression": LinearRegressionModel.MODEL_TYPE,
    "logistic-regression": LogisticRegressionModel.MODEL_TYPE,
    "decision-tree": DecisionTreeClassifierModel.MODEL_TYPE,
    "kmeans": KMeansModel.MODEL_TYPE,
    "gaussian-nb": GaussianNBModel.MODEL_TYPE,
}


def resolve_model_name(name: str) -> str:
    """Maps a command-line alias to its model_type; anything else is returned unchanged."""
    return MODEL_ALIASES.get(name, name)


def model_class(model_type: str) -> Type[IModel]:
    try:
        return MODEL_TYPES[model_type]
    except (KeyError, TypeError):
        raise UnknownModelType(f"unknown model type {model_type!r}; known: {sorted(MODEL_TYPES)}") from None


def category_of(model_type: str) -> ModelCategory:
    return model_class(model_type).CATEGORY


def extract_state(model: IModel) -> Dict[str, Any]:
    return model.extract_state()


def restore_state(model_type: str, state: Dict[str, Any]) -> IModel:
    return model_class(model_type).restore_state(state)


def predict(model: IModel, X: Any) -> np.ndarray:
    return model.predict(X)
