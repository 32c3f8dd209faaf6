"""Scikit-learn style front end for the online predictor.

OnlineStructuredPredictor wraps one (space, loss, regularizer, learner)
combination behind fit/partial_fit/predict.  Rows of X are the inputs
x_t, rows of Y are label vertices; partial_fit consumes them in order as
online rounds.  predict decodes scores with the randomized rule, drawing
from a counter-based generator so repeated fits with the same seed
reproduce the same outputs.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .config import builtin_triple
from .decoder import decode, plan
from .errors import ConfigurationError, InputError
from .learners import ProblemConstants, learner_from_json
from .validation import as_matrix

# decode keys for predict() start here; run() round keys stay below 2**62
PREDICT_KEY = 2 ** 62


class OnlineStructuredPredictor(BaseEstimator):
    """Online linear estimator with randomized structured decoding.

    Parameters
    ----------
    triple: built-in problem name (multiclass, multilabel, ranking,
        permutation, ordinal).
    size: structure size (d for most triples, n for ranking).
    mu: temperature for the ranking triple.
    learner: "ogd_const", "ogd_adaptive" or "param_free".
    eta: rate for ogd_const; None means the derived default.
    B: Frobenius radius for ogd_adaptive.
    epsilon: initial wealth for param_free.
    C: input norm bound used when deriving the default rate.
    seed: decode randomness seed.
    """

    def __init__(
        self,
        triple: str = "multiclass",
        size: int = 3,
        mu: float = 1.0,
        learner: str = "ogd_const",
        eta: float | None = None,
        B: float | None = None,
        epsilon: float = 1.0,
        C: float = 1.0,
        seed: int = 0,
    ):
        self.triple = triple
        self.size = size
        self.mu = mu
        self.learner = learner
        self.eta = eta
        self.B = B
        self.epsilon = epsilon
        self.C = C
        self.seed = seed

    def _components(self):
        kwargs = {"n" if self.triple == "ranking" else "d": self.size}
        if self.triple == "ranking":
            kwargs["mu"] = self.mu
        return builtin_triple(self.triple, **kwargs)

    def _setup(self, n_features: int) -> None:
        space, loss, reg = self._components()
        self.space_, self.loss_, self.regularizer_ = space, loss, reg
        self.constants_ = ProblemConstants.derive(space, loss, reg, C=self.C)
        desc = {"learner": self.learner, "eta": self.eta, "B": self.B,
                "epsilon": self.epsilon}
        self.learner_ = learner_from_json(desc, space.dim, n_features, self.constants_)
        self.n_features_in_ = n_features
        self.round_ = 0
        self.predict_calls_ = 0

    def _validate_round(self, x: np.ndarray, y: np.ndarray) -> None:
        nx = float(np.linalg.norm(x))
        if nx > self.C * (1.0 + 1e-9):
            raise InputError(f"input norm {nx:.6g} exceeds the bound C={self.C}")
        vertex = self.space_.nearest_vertex(y)
        if self.space_.distance(vertex, y) > 1e-9:
            raise InputError("labels must be vertices of the output set")

    def partial_fit(self, X, Y) -> "OnlineStructuredPredictor":
        X = as_matrix(X, None, "X")
        if not hasattr(self, "learner_"):
            self._setup(X.shape[1])
        Y = as_matrix(Y, (X.shape[0], self.space_.dim), "Y")
        if X.shape[1] != self.n_features_in_:
            raise InputError(
                f"X has {X.shape[1]} features, estimator was set up with "
                f"{self.n_features_in_}"
            )
        reg = self.regularizer_
        for x, y in zip(X, Y):
            self._validate_round(x, y)
            theta = self.learner_.scores(x)
            grad = reg.fy_gradient(theta, y)
            self.learner_.step(np.outer(grad, x))
            self.round_ += 1
        self.W_ = self.learner_.W
        return self

    def fit(self, X, Y) -> "OnlineStructuredPredictor":
        for attr in ("learner_", "W_"):
            if hasattr(self, attr):
                delattr(self, attr)
        return self.partial_fit(X, Y)

    def _check_fitted(self):
        if not hasattr(self, "learner_"):
            raise ConfigurationError("estimator is not fitted; call fit or partial_fit")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = as_matrix(X, (None, self.n_features_in_), "X")
        return X @ self.learner_.W.T

    def predict_mean(self, X) -> np.ndarray:
        """Hull-valued regularized predictions, one row per input."""
        self._check_fitted()
        scores = self.decision_function(X)
        return np.stack(
            [self.regularizer_.predict(theta).y_hat for theta in scores]
        )

    def predict(self, X) -> np.ndarray:
        """Vertex outputs from randomized decoding, one row per input."""
        self._check_fitted()
        scores = self.decision_function(X)
        out = np.empty((scores.shape[0], self.space_.dim))
        for i, theta in enumerate(scores):
            pl = plan(self.regularizer_, theta)
            rng = np.random.Generator(
                np.random.Philox(key=[self.seed, PREDICT_KEY + self.predict_calls_])
            )
            self.predict_calls_ += 1
            out[i] = decode(pl, rng)
        return out
