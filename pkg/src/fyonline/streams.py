"""Synthetic data streams for the online loop.

Every generator materializes the full (x_t, y_t) sequence up front so a run
is a pure function of (config, seed).  Inputs always satisfy ||x||_2 <= C and
labels are vertices of the configured output set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, GenerationError
from .spaces import OutputSpace, Simplex
from .validation import as_matrix

# Philox key word for stream materialization; round keys stay below 2**63
STREAM_KEY = 2 ** 63 + 11


@dataclass
class Stream:
    """Materialized input/label sequence with its planted generator."""

    space: OutputSpace
    xs: np.ndarray
    ys: np.ndarray
    C: float
    U_planted: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> int:
        return self.xs.shape[0]

    @property
    def n_features(self) -> int:
        return self.xs.shape[1]


@dataclass
class AdaptiveStream:
    """Adversary callback producing (x_t, y_t) from the learner's history.

    round_fn(t, W) is called with the 1-based round index and the learner's
    current matrix, before the learner sees anything about round t.
    """

    space: OutputSpace
    round_fn: object
    T: int
    n_features: int
    C: float
    U_planted: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def _ball_inputs(rng: np.random.Generator, T: int, n: int, C: float) -> np.ndarray:
    # uniform in the C-ball: Gaussian direction, radius C * u^(1/n)
    v = rng.standard_normal((T, n))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = C * rng.random((T, 1)) ** (1.0 / n)
    return v / norms * radii


def random_planted_matrix(
    space: OutputSpace, n_features: int, frob_norm: float, seed: int
) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=[seed, STREAM_KEY + 1]))
    U = rng.standard_normal((space.dim, n_features))
    nrm = float(np.linalg.norm(U))
    if nrm == 0.0:
        raise GenerationError("degenerate planted matrix")
    return U * (frob_norm / nrm)


def generate_linear_model_stream(
    space: OutputSpace,
    n_features: int,
    T: int,
    C: float = 1.0,
    U_true: np.ndarray | None = None,
    u_scale: float = 1.0,
    noise: float = 0.0,
    seed: int = 0,
) -> Stream:
    """I.i.d. ball inputs labeled by the highest-scoring vertex of U_true x.

    With probability noise the label is replaced by a uniformly random
    vertex (the space must be enumerable for that to be meaningful).
    """
    if T < 0:
        raise ConfigurationError("T must be non-negative")
    if not 0.0 <= noise <= 1.0:
        raise ConfigurationError(f"noise must lie in [0, 1], got {noise}")
    if U_true is None:
        U_true = random_planted_matrix(space, n_features, u_scale, seed)
    else:
        U_true = as_matrix(U_true, (space.dim, n_features), "U_true")
    rng = np.random.Generator(np.random.Philox(key=[seed, STREAM_KEY]))
    xs = _ball_inputs(rng, T, n_features, C)
    ys = np.empty((T, space.dim))
    for t in range(T):
        if noise > 0.0 and rng.random() < noise:
            ys[t] = space.random_vertex(rng)
        else:
            ys[t] = space.linear_oracle(-(U_true @ xs[t]))
    return Stream(space=space, xs=xs, ys=ys, C=C, U_planted=U_true, meta={"kind": "linear_model"})


def generate_separable_stream(
    space: OutputSpace,
    U0: np.ndarray,
    t0: float,
    T: int,
    C: float = 1.0,
    seed: int = 0,
    budget_factor: int = 1000,
) -> Stream:
    """Stream whose scores keep margin t0 from every decision frontier.

    Candidate inputs are drawn from the C-ball and rejected until the score
    vector U0 x has frontier distance >= t0; the label is the argmax vertex,
    so the emitted pairs incur zero target loss for the exact decoder.
    """
    if t0 < 0.0:
        raise ConfigurationError("margin t0 must be non-negative")
    U0 = as_matrix(U0, (space.dim, None), "U0")
    n = U0.shape[1]
    rng = np.random.Generator(np.random.Philox(key=[seed, STREAM_KEY]))
    xs = np.empty((T, n))
    ys = np.empty((T, space.dim))
    budget = budget_factor * max(T, 1)
    filled = 0
    while filled < T:
        if budget <= 0:
            raise GenerationError(
                f"rejection budget exhausted after filling {filled}/{T} rounds "
                f"(margin t0={t0} too large for this generator)"
            )
        budget -= 1
        x = _ball_inputs(rng, 1, n, C)[0]
        theta = U0 @ x
        if t0 > 0.0 and space.score_margin(theta) < t0:
            continue
        xs[filled] = x
        ys[filled] = space.linear_oracle(-theta)
        filled += 1
    return Stream(
        space=space, xs=xs, ys=ys, C=C, U_planted=U0,
        meta={"kind": "separable", "t0": t0},
    )


def lower_bound_round_count(d: int, T: int, B: float) -> int:
    """Number of hard rounds M = floor((B^2 - ln^2(dT)) / ln^2(2d))."""
    if d < 2 or T < 1:
        raise ConfigurationError("adversary needs d >= 2 and T >= 1")
    M = int(math.floor((B * B - math.log(d * T) ** 2) / math.log(2 * d) ** 2))
    if M < 1:
        raise ConfigurationError(
            f"B={B} too small for d={d}, T={T}: hard-round count M={M} < 1"
        )
    return M


def generate_lower_bound_stream(d: int, T: int, B: float, seed: int = 0) -> Stream:
    """Adversarial multiclass stream forcing regret growing like B^2/ln^2(d).

    Rounds t <= M+1 present fresh one-hot inputs e_t with uniformly random
    labels, so no learner can beat the uniform prediction on them; the
    comparator U' spends ln(2d) per hard round to keep its own loss small.
    After round M+1 the stream repeats a single resolved round.  The planted
    U' has squared Frobenius norm M ln^2(2d) + ln^2(dT) <= B^2.
    """
    M = lower_bound_round_count(d, T, B)
    if M + 1 > T:
        raise ConfigurationError(f"horizon T={T} shorter than M+1={M + 1}")
    space = Simplex(d)
    n = M + 1
    rng = np.random.Generator(np.random.Philox(key=[seed, STREAM_KEY]))
    labels = rng.integers(0, d, size=M + 1)
    xs = np.zeros((T, n))
    ys = np.zeros((T, d))
    for t in range(T):
        j = min(t, M)
        xs[t, j] = 1.0
        ys[t, labels[j]] = 1.0
    U = np.zeros((d, n))
    for t in range(M):
        U[labels[t], t] = math.log(2 * d)
    U[labels[M], M] = math.log(d * T)
    return Stream(
        space=space, xs=xs, ys=ys, C=1.0, U_planted=U,
        meta={"kind": "lower_bound", "M": M, "d": d, "B": B},
    )
