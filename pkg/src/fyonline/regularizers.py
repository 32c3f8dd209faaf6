"""Regularized score-to-hull predictions and their surrogate losses.

A regularizer ``Psi`` on the hull of an output space induces

* a prediction map ``predict(theta) = argmax_{p in hull} <theta, p> - Psi(p)``,
* a surrogate loss ``loss(theta, y) = [<theta, y_hat> - Psi(y_hat)] + Psi(y)
  - <theta, y>`` (computed through the solved prediction, one code path for
  every kind), and
* its gradient in ``theta``, the residual ``y_hat - theta``-side mismatch
  ``y_hat - y``.

Each kind carries ``lam``, the strong-convexity modulus of the unscaled loss
with respect to the space norm, and ``loss_scale``, a constant multiplier
applied to loss and gradient (used by the bit-scaled multiclass variant where
losses are measured in base 2).  The loss is nonnegative up to solver
tolerance; tiny negatives are clamped to zero inside a per-kind band.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from . import frank_wolfe
from .errors import ConfigurationError, ConvergenceError, InputError
from .frank_wolfe import ConvexCombination, QuadraticObjective
from .spaces import Birkhoff, Hypercube, OrdinalChain, OutputSpace, Simplex
from .validation import as_vector, check_positive

TAU_SINKHORN = 1e-10
SINKHORN_MAX_ITERS = 10_000
LOG_DOMAIN_THRESHOLD = 30.0
LN2 = math.log(2.0)


class Prediction:
    """A solved regularized prediction: the hull point and, when the solver
    produces one as a side effect, its vertex decomposition."""

    __slots__ = ("y_hat", "combination")

    def __init__(self, y_hat: np.ndarray, combination: ConvexCombination | None = None):
        self.y_hat = y_hat
        self.combination = combination


class Regularizer:
    kind: str = ""

    def __init__(self, space: OutputSpace, lam: float, loss_scale: float = 1.0):
        self.space = space
        self.lam = float(lam)
        self.loss_scale = float(loss_scale)
        self.norm = space.norm
        self._clamp_band = 1e-10

    def predict(self, theta) -> Prediction:
        raise NotImplementedError

    def psi(self, y) -> float:
        """Regularizer value at an explicit hull point."""
        raise NotImplementedError

    def fy_loss(self, theta, y, prediction: Prediction | None = None) -> float:
        theta = as_vector(theta, self.space.dim, "theta")
        y = as_vector(y, self.space.dim, "y")
        if prediction is None:
            prediction = self.predict(theta)
        y_hat = prediction.y_hat
        conjugate = float(theta @ y_hat) - self.psi(y_hat)
        value = conjugate + self.psi(y) - float(theta @ y)
        if -self._clamp_band <= value < 0.0:
            value = 0.0
        return value * self.loss_scale

    def fy_gradient(self, theta, y, prediction: Prediction | None = None) -> np.ndarray:
        theta = as_vector(theta, self.space.dim, "theta")
        y = as_vector(y, self.space.dim, "y")
        if prediction is None:
            prediction = self.predict(theta)
        return (prediction.y_hat - y) * self.loss_scale

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(lam={self.lam:.6g})"


class EntropySimplex(Regularizer):
    """Negative Shannon entropy on the simplex: softmax prediction.

    With ``log_base2=True`` the loss and gradient are scaled by ``1/ln 2``
    (losses in bits); the prediction map is unchanged.
    """

    kind = "entropy"

    def __init__(self, space: OutputSpace, log_base2: bool = False):
        if not isinstance(space, Simplex):
            raise ConfigurationError("entropy regularizer requires a simplex space")
        super().__init__(space, lam=1.0, loss_scale=(1.0 / LN2 if log_base2 else 1.0))
        self.log_base2 = bool(log_base2)

    def predict(self, theta) -> Prediction:
        theta = as_vector(theta, self.space.dim, "theta")
        z = theta - theta.max()
        e = np.exp(z)
        return Prediction(e / e.sum())

    def psi(self, y) -> float:
        y = np.asarray(y, dtype=np.float64)
        return float(np.sum(np.where(y > 0.0, y * np.log(np.clip(y, 1e-300, None)), 0.0)))

    def to_json(self):
        out = {"regularizer": "entropy"}
        if self.log_base2:
            out["log_base2"] = True
        return out


def _isotonic_decreasing(z: np.ndarray) -> np.ndarray:
    # pool-adjacent-violators for the nonincreasing constraint
    vals: list[float] = []
    counts: list[int] = []
    for x in -z:
        vals.append(float(x))
        counts.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            total = vals[-1] * counts[-1] + vals[-2] * counts[-2]
            cnt = counts[-1] + counts[-2]
            vals[-2:] = [total / cnt]
            counts[-2:] = [cnt]
    return -np.repeat(vals, counts)


class QuadraticRegularizer(Regularizer):
    """``(s/2) * ||y||_2^2``: prediction is the Euclidean projection of
    ``theta / s`` onto the hull, solved by the active-set solver to its duality
    gap.  Where the exact projection has a closed form (hypercube: clip; chain:
    decreasing isotonic regression then clip) the solve is warm-started there,
    so the gap check usually passes immediately.
    """

    kind = "squared_l2"

    def __init__(self, space: OutputSpace, scale: float = 1.0):
        if space.norm != "l2":
            raise ConfigurationError(
                "quadratic regularizer requires an l2-normed space (norm tags must agree)"
            )
        super().__init__(space, lam=check_positive(scale, "scale"))
        self.scale = float(scale)
        self._clamp_band = 1e-8

    def _warm_start(self, z: np.ndarray) -> ConvexCombination | None:
        if isinstance(self.space, Hypercube):
            proj = np.clip(z, 0.0, 1.0)
            return frank_wolfe._threshold_decompose(self.space.dim, proj)
        if isinstance(self.space, OrdinalChain):
            proj = np.clip(_isotonic_decreasing(z), 0.0, 1.0)
            return frank_wolfe._threshold_decompose(self.space.dim, proj)
        return None

    def predict(self, theta) -> Prediction:
        theta = as_vector(theta, self.space.dim, "theta")
        z = theta / self.scale
        comb = frank_wolfe.minimize_quadratic(
            self.space,
            QuadraticObjective(z, curvature=self.scale),
            init=self._warm_start(z),
        )
        return Prediction(comb.point, comb)

    def psi(self, y) -> float:
        y = np.asarray(y, dtype=np.float64)
        return 0.5 * self.scale * float(y @ y)

    def to_json(self):
        if self.scale == 1.0:
            return {"regularizer": "squared_l2"}
        return {"regularizer": "scaled_squared_l2", "scale": self.scale}


class ScaledEntropyBirkhoff(Regularizer):
    """``-(1/mu) * H`` over doubly stochastic matrices: matrix-scaling prediction.

    The prediction solves ``max <theta, P> + (1/mu) H(P)`` by alternately
    normalizing rows and columns of ``exp(mu * theta)``; iteration stops when
    both marginals deviate from one by at most ``TAU_SINKHORN``.  The scaling
    runs in the log domain when ``max |mu * theta| > 30``.
    """

    kind = "scaled_entropy"

    def __init__(self, space: OutputSpace, mu: float = 1.0):
        if not isinstance(space, Birkhoff):
            raise ConfigurationError("scaled entropy requires a birkhoff space")
        check_positive(mu, "mu")
        super().__init__(space, lam=1.0 / (space.n * mu))
        self.mu = float(mu)
        self._clamp_band = 1e-8

    def _scale_matrix(self, logits: np.ndarray) -> np.ndarray:
        n = self.space.n
        if np.abs(logits).max() <= LOG_DOMAIN_THRESHOLD:
            K = np.exp(logits)
            v = np.ones(n)
            for _ in range(SINKHORN_MAX_ITERS):
                u = 1.0 / (K @ v)
                v = 1.0 / (K.T @ u)
                P = (u[:, None] * K) * v[None, :]
                dev = max(
                    float(np.abs(P.sum(axis=1) - 1.0).max()),
                    float(np.abs(P.sum(axis=0) - 1.0).max()),
                )
                if dev <= TAU_SINKHORN:
                    return P
            raise ConvergenceError(
                f"matrix scaling failed to reach {TAU_SINKHORN:.0e} in "
                f"{SINKHORN_MAX_ITERS} iterations",
                residual=dev,
            )
        f = np.zeros(n)
        g = np.zeros(n)
        for _ in range(SINKHORN_MAX_ITERS):
            f = -logsumexp(logits + g[None, :], axis=1)
            g = -logsumexp(logits + f[:, None], axis=0)
            P = np.exp(f[:, None] + logits + g[None, :])
            dev = max(
                float(np.abs(P.sum(axis=1) - 1.0).max()),
                float(np.abs(P.sum(axis=0) - 1.0).max()),
            )
            if dev <= TAU_SINKHORN:
                return P
        raise ConvergenceError(
            f"log-domain matrix scaling failed to reach {TAU_SINKHORN:.0e} in "
            f"{SINKHORN_MAX_ITERS} iterations",
            residual=dev,
        )

    def predict(self, theta) -> Prediction:
        theta = as_vector(theta, self.space.dim, "theta")
        n = self.space.n
        P = self._scale_matrix(self.mu * theta.reshape(n, n))
        return Prediction(P.reshape(-1))

    def psi(self, y) -> float:
        y = np.asarray(y, dtype=np.float64)
        ent = np.sum(np.where(y > 0.0, y * np.log(np.clip(y, 1e-300, None)), 0.0))
        return float(ent) / self.mu

    def to_json(self):
        return {"regularizer": "scaled_entropy", "mu": self.mu}


class CrfEnumerable(Regularizer):
    """Gibbs-mixture prediction over an enumerable vertex set.

    ``predict`` weights every vertex by ``exp(<theta, y>)`` (normalized), so
    the decomposition comes for free; the loss is the log partition function
    minus the score of the truth.  Strong convexity holds with modulus
    ``1 / max_y ||y||_1^2`` w.r.t. the l1 norm; on the simplex this kind
    coincides with the entropic one.
    """

    kind = "crf"

    def __init__(self, space: OutputSpace):
        if space.norm != "l1":
            raise ConfigurationError(
                "the enumerable-mixture regularizer is l1-normed; "
                "use an l1-normed space (norm tags must agree)"
            )
        vertices = space.enumerate_vertices()  # raises CapacityError when too big
        max_l1 = float(np.abs(vertices).sum(axis=1).max())
        if max_l1 <= 0:
            raise ConfigurationError("crf regularizer needs a vertex with nonzero l1 norm")
        super().__init__(space, lam=1.0 / (max_l1 * max_l1))
        self.vertices = vertices

    def predict(self, theta) -> Prediction:
        theta = as_vector(theta, self.space.dim, "theta")
        scores = self.vertices @ theta
        z = scores - scores.max()
        w = np.exp(z)
        w = w / w.sum()
        y_hat = self.vertices.T @ w
        keep = w > frank_wolfe.WEIGHT_DROP
        wk = w[keep] / w[keep].sum()
        comb = ConvexCombination(self.vertices[keep], wk, self.vertices[keep].T @ wk)
        return Prediction(y_hat, comb)

    def fy_loss(self, theta, y, prediction: Prediction | None = None) -> float:
        # log partition minus truth score; the value function form of psi is
        # only available at solved predictions, so this kind owns its loss
        theta = as_vector(theta, self.space.dim, "theta")
        y = as_vector(y, self.space.dim, "y")
        value = float(logsumexp(self.vertices @ theta)) - float(theta @ y)
        if -self._clamp_band <= value < 0.0:
            value = 0.0
        return value

    def psi(self, y) -> float:
        raise NotImplementedError(
            "the enumerable-mixture regularizer has no pointwise psi; "
            "its loss is computed from the log partition function"
        )

    def to_json(self):
        return {"regularizer": "crf"}


def regularizer_from_json(space: OutputSpace, desc: dict) -> Regularizer:
    if not isinstance(desc, dict) or "regularizer" not in desc:
        raise InputError("regularizer descriptor must be a dict with a 'regularizer' field")
    kind = desc["regularizer"]
    if kind == "entropy":
        return EntropySimplex(space, log_base2=bool(desc.get("log_base2", False)))
    if kind == "squared_l2":
        return QuadraticRegularizer(space, scale=1.0)
    if kind == "scaled_squared_l2":
        try:
            return QuadraticRegularizer(space, scale=float(desc["scale"]))
        except KeyError:
            raise InputError("scaled_squared_l2 descriptor needs a 'scale' field") from None
    if kind == "scaled_entropy":
        try:
            return ScaledEntropyBirkhoff(space, mu=float(desc["mu"]))
        except KeyError:
            raise InputError("scaled_entropy descriptor needs a 'mu' field") from None
    if kind == "crf":
        return CrfEnumerable(space)
    raise ConfigurationError(f"unknown regularizer kind {kind!r}")
