"""scikit-learn style wrapper around the surrogate training drivers."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import fourdvar, mlp, training
from .dataset import TrainingSet
from .smallmat import RngStream


class SurrogateRegressor(RegressorMixin, BaseEstimator):
    """Surrogate of a 3-state one-interval map, trained with one of the method losses.

    ``fit(X, y)`` is enough for Standard.  Methods using derivative data take
    ``adjoints`` (N, 3, 3) holding M^T at each input, or ``vectors`` and
    ``adjoint_vectors`` (N, 3) holding pairs (v, M^T v).

    >>> est = SurrogateRegressor(method="Adj", epochs=5)         # doctest: +SKIP
    >>> est.fit(X, Y, adjoints=MT).predict(X[:2])                # doctest: +SKIP
    """

    def __init__(self, method="Standard", alpha=None, epochs=200, batches_per_epoch=100,
                 batch_size=5, lr_max=1e-2, lr_min=1e-5, random_state=0):
        self.method = method
        self.alpha = alpha
        self.epochs = epochs
        self.batches_per_epoch = batches_per_epoch
        self.batch_size = batch_size
        self.lr_max = lr_max
        self.lr_min = lr_min
        self.random_state = random_state

    def _states(self, X):
        return check_array(X, dtype=np.float64, ensure_min_features=mlp.N_STATE)

    def fit(self, X, y, adjoints=None, vectors=None, adjoint_vectors=None):
        X = self._states(X)
        if X.shape[1] != mlp.N_STATE:
            raise ValueError(f"expected {mlp.N_STATE} features, got {X.shape[1]}")
        y = check_array(y, dtype=np.float64)
        if y.shape != X.shape:
            raise ValueError(f"y has shape {y.shape}, expected {X.shape}")
        MT = None if adjoints is None else np.asarray(adjoints, dtype=np.float64).reshape(-1, 3, 3)
        V = None if vectors is None else check_array(vectors, dtype=np.float64)
        MTV = None if adjoint_vectors is None else check_array(adjoint_vectors, dtype=np.float64)
        for name, a in (("adjoints", MT), ("vectors", V), ("adjoint_vectors", MTV)):
            if a is not None and a.shape[0] != X.shape[0]:
                raise ValueError(f"{name} has {a.shape[0]} rows, X has {X.shape[0]}")

        cfg = training.TrainConfig(self.epochs, self.batches_per_epoch, self.batch_size, self.lr_max, self.lr_min)
        rng = RngStream(self.random_state)
        model = training.train(self.method, TrainingSet(X, y, MT, V, MTV), cfg, rng, alpha=self.alpha)
        self.surrogate_ = model
        self.theta_ = model.theta
        self.phi_ = model.phi
        self.loss_curve_ = model.forward_loss
        self.adjoint_loss_curve_ = model.adjoint_loss
        self.n_features_in_ = mlp.N_STATE
        return self

    def predict(self, X):
        check_is_fitted(self, "theta_")
        return mlp.forward(self.theta_, self._states(X))

    def jacobian(self, X):
        """Network input Jacobians, (N, 3, 3)."""
        check_is_fitted(self, "theta_")
        return mlp.jacobian(self.theta_, self._states(X))

    def adjoint(self, X):
        """The surrogate's estimate of M^T at each state, (N, 3, 3)."""
        check_is_fitted(self, "theta_")
        return self.surrogate_.adjoint_matrix(self._states(X))

    def model_pair(self) -> fourdvar.ModelPair:
        check_is_fitted(self, "theta_")
        return fourdvar.surrogate_model(training.canonical_method(self.method), self.theta_, self.phi_)
