import logging
from typing import Any, Dict

import numpy as np
from pyxtension import validate
from typing_extensions import Self

from glassbox.chains import ModelCategory
from glassbox.errors import InvariantViolation, TooFewSamples
from glassbox.imodel import Dataset, IModel, frozen

logger = logging.getLogger(__name__)


def squared_distances(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """[n, k] squared euclidean distances between rows of X and centers."""
    diff = X[:, np.newaxis, :] - centers[np.newaxis, :, :]
    return np.einsum("nkp,nkp->nk", diff, diff)


def _kmeans_plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = squared_distances(X, X[chosen])[:, 0]
    while len(chosen) < k:
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            nxt = int(rng.integers(n))
        chosen.append(nxt)
        closest = np.minimum(closest, squared_distances(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


class KMeansModel(IModel):
    """
    Lloyd's algorithm with k-means++ seeding drawn from numpy's PCG64 generator, so a given random_state reproduces the
    same centers and labels_ on every platform.
    An empty cluster is re-seeded with the point farthest from its assigned center.
    """

    MODEL_TYPE = "KMeans"
    CATEGORY = ModelCategory.Clustering
    STATE_FIELDS = ("n_clusters", "max_iter", "random_state", "n_features_in_", "cluster_centers_", "labels_", "inertia_", "n_iter_")

    DEFAULT_N_CLUSTERS = 2
    DEFAULT_RANDOM_STATE = 0
    DEFAULT_MAX_ITER = 300

    def __init__(self, n_clusters: int = DEFAULT_N_CLUSTERS, random_state: int = DEFAULT_RANDOM_STATE, max_iter: int = DEFAULT_MAX_ITER) -> None:
        super().__init__()
        self._check_positive(n_clusters, "n_clusters")
        self._check_positive(max_iter, "max_iter")
        validate(random_state >= 0, f"random_state must be non-negative, got {random_state}")
        self.n_clusters = int(n_clusters)
        self.random_state = int(random_state)
        self.max_iter = int(max_iter)
        self.cluster_centers_ = None
        self.labels_ = None
        self.inertia_ = None
        self.n_iter_ = None

    def hyper_params(self) -> Dict[str, Any]:
        return {"n_clusters": self.n_clusters, "random_state": self.random_state, "max_iter": self.max_iter}

    def fit(self, ds: Dataset) -> Self:
        X = ds.X
        k = self.n_clusters
        if ds.n_samples < k:
            raise TooFewSamples(f"k-means with {k} clusters needs at least {k} samples, got {ds.n_samples}")

        rng = np.random.default_rng(self.random_state)
        centers = _kmeans_plus_plus(X, k, rng)
        labels = None
        n_iter = 0
        while n_iter < self.max_iter:
            dist = squared_distances(X, centers)
            assigned = np.argmin(dist, axis=1)
            n_iter += 1
            if labels is not None and np.array_equal(assigned, labels):
                break
            labels = assigned
            centers = self._update_centers(X, labels, dist[np.arange(len(X)), labels])

        dist = squared_distances(X, centers)
        labels = np.argmin(dist, axis=1).astype(np.int64)
        inertia = dist[np.arange(len(X)), labels].sum()
        logger.debug("k-means converged after %d iterations with inertia %r", n_iter, inertia)

        model = self._fitted_copy()
        model.n_features_in_ = ds.n_features
        model.cluster_centers_ = frozen(centers)
        model.labels_ = frozen(labels)
        model.inertia_ = np.float64(inertia)
        model.n_iter_ = n_iter
        return model

    def _update_centers(self, X: np.ndarray, labels: np.ndarray, own_dist: np.ndarray) -> np.ndarray:
        centers = np.empty((self.n_clusters, X.shape[1]))
        own_dist = own_dist.copy()
        for j in range(self.n_clusters):
            members = labels == j
            if members.any():
                centers[j] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(own_dist))
                centers[j] = X[far]
                own_dist[far] = 0.0
        return centers

    def predict(self, X: Any) -> np.ndarray:
        X = self._check_input(X)
        return np.argmin(squared_distances(X, self.cluster_centers_), axis=1).astype(np.int64)

    def extract_state(self) -> Dict[str, Any]:
        self._check_fitted()
        return {
            "n_clusters": self.n_clusters,
            "max_iter": self.max_iter,
            "random_state": self.random_state,
            "n_features_in_": self.n_features_in_,
            "cluster_centers_": self.cluster_centers_,
            "labels_": self.labels_,
            "inertia_": self.inertia_,
            "n_iter_": self.n_iter_,
        }

    @classmethod
    def restore_state(cls, state: Dict[str, Any]) -> Self:
        k = cls._int_field(state, "n_clusters", minimum=1)
        max_iter = cls._int_field(state, "max_iter", minimum=1)
        model = cls(n_clusters=k, random_state=cls._int_field(state, "random_state", minimum=0), max_iter=max_iter)
        p = cls._int_field(state, "n_features_in_", minimum=1)
        labels = cls._tensor_field(state, "labels_", np.int64, (None,))
        if len(labels) < k or np.any(labels < 0) or np.any(labels >= k):
            raise InvariantViolation(f"labels_ must hold at least {k} cluster indices in [0, {k})")
        inertia = cls._scalar_field(state, "inertia_")
        if inertia < 0:
            raise InvariantViolation("inertia_ must be non-negative")
        n_iter = cls._int_field(state, "n_iter_", minimum=0)
        if n_iter > max_iter:
            raise InvariantViolation(f"n_iter_ {n_iter} exceeds max_iter {max_iter}")

        model._fitted = True
        model.n_features_in_ = p
        model.cluster_centers_ = cls._tensor_field(state, "cluster_centers_", np.float64, (k, p))
        model.labels_ = labels
        model.inertia_ = inertia
        model.n_iter_ = n_iter
        return model


def fit_kmeans(
    ds: Dataset,
    k: int = KMeansModel.DEFAULT_N_CLUSTERS,
    random_state: int = KMeansModel.DEFAULT_RANDOM_STATE,
    max_iter: int = KMeansModel.DEFAULT_MAX_ITER,
) -> KMeansModel:
    return KMeansModel(n_clusters=k, random_state=random_state, max_iter=max_iter).fit(ds)
