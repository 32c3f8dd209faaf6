"""Target losses affine in the prediction argument.

Every loss has the form ``L(y'; y) = <y', V y + b> + c(y)`` with ``y'`` ranging
over the hull and ``y`` over the vertices, together with a Lipschitz constant
``gamma`` valid for hull arguments in the space norm:
``|L(y1; y) - L(y2; y)| <= gamma * ||y1 - y2||``.  Affinity in ``y'`` is what
lets the decoder evaluate expected losses of its mixtures in closed form.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InputError
from .spaces import Birkhoff, Hypercube, OrdinalChain, OutputSpace, Permutahedron, Simplex
from .validation import as_vector


class TargetLoss:
    """An affine-in-prediction loss ``<y', V y + b> + c(y)`` on a space."""

    def __init__(
        self,
        space: OutputSpace,
        V: np.ndarray,
        b: np.ndarray,
        gamma: float,
        c_fn: Callable[[np.ndarray], float] | None = None,
        name: str = "custom",
    ):
        d = space.dim
        self.space = space
        self.V = np.asarray(V, dtype=np.float64).reshape(d, d)
        self.b = as_vector(b, d, "b")
        self.gamma = float(gamma)
        if self.gamma <= 0 or not np.isfinite(self.gamma):
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        self.c_fn = c_fn if c_fn is not None else (lambda y: 0.0)
        self.name = name

    def coefficients(self, y) -> tuple[np.ndarray, float]:
        """Slope and offset of ``y' -> L(y'; y)`` for a fixed true vertex."""
        y = as_vector(y, self.space.dim, "y")
        return self.V @ y + self.b, float(self.c_fn(y))

    def eval(self, y_prime, y) -> float:
        y_prime = as_vector(y_prime, self.space.dim, "y_prime")
        slope, offset = self.coefficients(y)
        value = float(y_prime @ slope + offset)
        if -1e-12 <= value < 0.0:
            value = 0.0  # numerical guard only; keeps losses nonnegative
        return value

    def to_json(self) -> dict:
        if self.name != "custom":
            return {"loss": self.name}
        return {
            "loss": "custom",
            "V": self.V.tolist(),
            "b": self.b.tolist(),
            "gamma": self.gamma,
        }

    def __repr__(self):
        return f"TargetLoss({self.name!r}, gamma={self.gamma:.6g})"


def zero_one_loss(space: Simplex) -> TargetLoss:
    """``<y', 1 - y>`` on the simplex: 0/1 error against the label vertex.

    Differences of hull points sum to zero, so the slope's effective range is
    halved and ``gamma = 1/2`` w.r.t. the l1 norm.
    """
    d = space.dim
    return TargetLoss(space, -np.eye(d), np.ones(d), gamma=0.5, name="zero_one")


def hamming_loss(space: Hypercube) -> TargetLoss:
    """Per-coordinate disagreement rate on 0/1 vectors; ``gamma = 1/sqrt(d)``."""
    d = space.dim
    return TargetLoss(
        space,
        (-2.0 / d) * np.eye(d),
        np.full(d, 1.0 / d),
        gamma=1.0 / math.sqrt(d),
        c_fn=lambda y: float(np.sum(y)) / d,
        name="hamming",
    )


def rank_mismatch_loss(space: Birkhoff) -> TargetLoss:
    """``(1/n) <y', 1 - y>`` on matchings: fraction of misassigned rows.

    Hull differences have zero row sums and the truth has a single unit per
    row, giving ``gamma = 1/(2n)`` w.r.t. the l1 norm.
    """
    n = space.n
    d = space.dim
    return TargetLoss(
        space,
        (-1.0 / n) * np.eye(d),
        np.full(d, 1.0 / n),
        gamma=1.0 / (2.0 * n),
        name="rank_mismatch",
    )


def permutahedron_align_loss(space: Permutahedron) -> TargetLoss:
    """``(1/M) <y, y - y'>`` on rank vectors, ``M = d(d^2-1)/6``.

    Both arguments sum to ``d(d+1)/2``, so the loss equals
    ``(1/M) <y - mean, y - y'>`` and the tight Lipschitz constant is
    ``||y - mean||_2 / M = 1/sqrt(2M)``, attained at the full reversal.
    The maximum value is exactly 1, also at the reversal.
    """
    d = space.dim
    M = d * (d * d - 1) / 6.0
    sum_sq = d * (d + 1) * (2 * d + 1) / 6.0  # <y, y> for any rank vector
    loss = TargetLoss(
        space,
        (-1.0 / M) * np.eye(d),
        np.zeros(d),
        gamma=1.0 / math.sqrt(2.0 * M),
        c_fn=lambda y: sum_sq / M,
        name="permutahedron_align",
    )
    loss.M = M
    return loss


def ordinal_absolute_loss(space: OrdinalChain) -> TargetLoss:
    """Scaled absolute rank error on the chain; coincides with the per-coordinate
    disagreement form since chain vertices are monotone 0/1 vectors."""
    d = space.dim
    return TargetLoss(
        space,
        (-2.0 / d) * np.eye(d),
        np.full(d, 1.0 / d),
        gamma=1.0 / math.sqrt(d),
        c_fn=lambda y: float(np.sum(y)) / d,
        name="ordinal_absolute",
    )


_BUILTINS = {
    "zero_one": (Simplex, zero_one_loss),
    "hamming": (Hypercube, hamming_loss),
    "rank_mismatch": (Birkhoff, rank_mismatch_loss),
    "permutahedron_align": (Permutahedron, permutahedron_align_loss),
    "ordinal_absolute": (OrdinalChain, ordinal_absolute_loss),
}


def builtin_loss(space: OutputSpace, name: str) -> TargetLoss:
    try:
        required, factory = _BUILTINS[name]
    except KeyError:
        raise ConfigurationError(f"unknown loss {name!r}") from None
    if not isinstance(space, required):
        raise ConfigurationError(
            f"loss {name!r} is defined on {required.kind} spaces, got {space.kind}"
        )
    return factory(space)


def loss_from_json(space: OutputSpace, desc: dict) -> TargetLoss:
    """Build a loss from ``{"loss": name}`` or a custom affine descriptor."""
    if not isinstance(desc, dict) or "loss" not in desc:
        raise InputError("loss descriptor must be a dict with a 'loss' field")
    name = desc["loss"]
    if name != "custom":
        return builtin_loss(space, name)
    try:
        # the constant offset defaults to zero; the Lipschitz constant is
        # trusted as documented, not re-validated
        c_const = float(desc.get("c_const", 0.0))
        return TargetLoss(
            space,
            np.asarray(desc["V"], dtype=np.float64),
            np.asarray(desc["b"], dtype=np.float64),
            gamma=float(desc["gamma"]),
            c_fn=(lambda y: c_const),
            name="custom",
        )
    except KeyError as exc:
        raise InputError(f"custom loss descriptor is missing field {exc}") from None
