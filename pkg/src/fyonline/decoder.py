"""Randomized decoding of score vectors to structured outputs.

Given a score vector theta, the regularized prediction y_hat lives in the
hull of the output set.  Decoding flips a biased coin: with probability
1 - p it returns the vertex y_star nearest to y_hat, and with probability
p = min(1, 2*delta_star/nu) it samples a vertex from a convex decomposition
of y_hat, so the conditional mean of the sampled vertex is y_hat itself.
Because every built-in target loss is affine in its first argument, the
expected target loss of this rule has a closed form and the decoder never
needs Monte Carlo to report it.
"""

from __future__ import annotations

import numpy as np

from .frank_wolfe import ConvexCombination, decompose
from .regularizers import Prediction, Regularizer
from .spaces import OutputSpace
from .target_losses import TargetLoss
from .validation import as_vector


class DecodePlan:
    """Frozen per-round decoding state.

    Fields:
        theta: score vector the plan was built from.
        y_hat: regularized prediction, clamped to the hull.
        y_star: nearest vertex to y_hat in the space norm.
        delta_star: distance between y_hat and y_star in the space norm.
        p: exploration probability min(1, 2*delta_star/nu).

    The convex decomposition of y_hat is materialized lazily: plans whose
    exploration branch is never sampled (and every plan with delta_star = 0)
    skip the decomposition entirely.
    """

    __slots__ = ("space", "theta", "y_hat", "y_star", "delta_star", "p", "_combination")

    def __init__(
        self,
        space: OutputSpace,
        theta: np.ndarray,
        y_hat: np.ndarray,
        y_star: np.ndarray,
        delta_star: float,
        p: float,
        combination: ConvexCombination | None = None,
    ):
        self.space = space
        self.theta = theta
        self.y_hat = y_hat
        self.y_star = y_star
        self.delta_star = float(delta_star)
        self.p = float(p)
        self._combination = combination

    @property
    def decomposition(self) -> ConvexCombination:
        if self._combination is None:
            if self.delta_star == 0.0:
                self._combination = ConvexCombination(
                    vertices=[self.y_star], weights=np.array([1.0]), point=self.y_star
                )
            else:
                self._combination = decompose(self.space, self.y_hat)
        return self._combination

    def __repr__(self):
        return (
            f"DecodePlan(delta_star={self.delta_star:.6g}, p={self.p:.6g}, "
            f"dim={self.space.dim})"
        )


def plan(regularizer: Regularizer, theta, prediction: Prediction | None = None) -> DecodePlan:
    """Build the decoding plan for one score vector.

    When the regularized prediction is already available (the harness computes
    it once per round for the surrogate loss) pass it in to avoid a second
    solve.  A prediction carrying its own convex combination (iterative
    solvers produce one for free) is reused as the decomposition.
    """
    space = regularizer.space
    theta = as_vector(theta, space.dim, "theta")
    if prediction is None:
        prediction = regularizer.predict(theta)
    y_hat = space.check_hull_point(prediction.y_hat, "y_hat")
    y_star = space.nearest_vertex(y_hat)
    delta_star = space.distance(y_star, y_hat)
    p = min(1.0, 2.0 * delta_star / space.nu)
    combination = prediction.combination
    if delta_star == 0.0 and combination is None:
        combination = ConvexCombination(
            vertices=[y_star], weights=np.array([1.0]), point=y_star
        )
    return DecodePlan(space, theta, y_hat, y_star, delta_star, p, combination)


def decode(pl: DecodePlan, rng: np.random.Generator) -> np.ndarray:
    """Draw one vertex according to the plan.

    Consumes exactly two uniforms from rng regardless of the branch taken, so
    the stream position after a decode does not depend on the outcome.
    """
    draws = rng.random(2)
    if draws[0] < pl.p:
        idx = pl.decomposition.sample_index(draws[1])
        return np.array(pl.decomposition.vertices[idx], dtype=np.float64)
    return np.array(pl.y_star, dtype=np.float64)


def expected_target_loss(pl: DecodePlan, loss: TargetLoss, y) -> float:
    # affine target loss: E[L(y_tilde; y) | explore] = L(y_hat; y) exactly
    y = as_vector(y, pl.space.dim, "y")
    return (1.0 - pl.p) * loss.eval(pl.y_star, y) + pl.p * loss.eval(pl.y_hat, y)
