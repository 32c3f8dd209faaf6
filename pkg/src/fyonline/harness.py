"""Online interaction loop, regret accounting, and bound evaluation.

run() executes the full-information protocol: score, predict, decode, observe,
step.  Every round is checked against the per-round inequality
E[L] <= (1 - a) * S and logged; traces serialize to CSV with enough digits to
be byte-identical across reruns of the same (config, seed).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .decoder import decode, expected_target_loss, plan
from .errors import ConfigurationError, ConvergenceError, InputError
from .learners import Learner, ProblemConstants
from .regularizers import Regularizer
from .spaces import OutputSpace, Simplex
from .streams import AdaptiveStream, Stream
from .target_losses import TargetLoss
from .validation import as_matrix

CSV_HEADER = "t,target_realized,target_expected,surrogate_Wt,surrogate_U,grad_norm_sq"
LEMMA_SLACK = 1e-9


@dataclass
class RoundRecord:
    t: int
    target_realized: float
    target_expected: float
    surrogate_Wt: float
    surrogate_U: float
    grad_norm_sq: float


@dataclass
class RegretTrace:
    """Complete record of one run.

    Cumulative quantities are recomputed from the records so they cannot
    drift from the logged rows.
    """

    records: list
    xs: np.ndarray
    ys: np.ndarray
    w_bar: np.ndarray
    w_final: np.ndarray
    constants: ProblemConstants
    U_comparator: np.ndarray
    seed: int
    config_hash: str | None = None
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def T(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def cum_target_realized(self) -> float:
        return float(np.sum(self.column("target_realized")))

    @property
    def cum_target_expected(self) -> float:
        return float(np.sum(self.column("target_expected")))

    @property
    def cum_surrogate_Wt(self) -> float:
        return float(np.sum(self.column("surrogate_Wt")))

    @property
    def cum_surrogate_U(self) -> float:
        return float(np.sum(self.column("surrogate_U")))

    @property
    def realized_surrogate_regret(self) -> float:
        return self.cum_target_realized - self.cum_surrogate_U

    @property
    def expected_surrogate_regret(self) -> float:
        return self.cum_target_expected - self.cum_surrogate_U

    @property
    def learner_surrogate_regret(self) -> float:
        return self.cum_surrogate_Wt - self.cum_surrogate_U

    def prefix_expected_regret(self) -> np.ndarray:
        """Expected surrogate regret after each round (length T)."""
        return np.cumsum(self.column("target_expected")) - np.cumsum(
            self.column("surrogate_U")
        )


def run(
    loss: TargetLoss,
    regularizer: Regularizer,
    learner: Learner,
    stream: Stream | AdaptiveStream,
    seed: int = 0,
    comparator: np.ndarray | None = None,
    config_hash: str | None = None,
    force: bool = False,
) -> RegretTrace:
    """Execute the online protocol for the stream's full horizon.

    The decode draw of round t comes from an independent counter-based
    generator keyed by (seed, t), so the randomness of a round does not
    depend on the horizon or on other rounds.  Solver failures abort with
    the failing round index attached.
    """
    space = regularizer.space
    constants = ProblemConstants.derive(space, loss, regularizer, C=stream.C)
    warnings: list = []
    if not constants.gate_passes:
        if not force:
            constants.require_gate()
        warnings.append(
            {"type": "gate_override", "a": constants.a, "note": "bounds do not apply"}
        )
    adaptive = isinstance(stream, AdaptiveStream)
    T = stream.T
    n = stream.n_features
    if learner.n_outputs != space.dim or learner.n_features != n:
        raise ConfigurationError(
            f"learner shape ({learner.n_outputs}, {learner.n_features}) does not "
            f"match space dim {space.dim} and stream features {n}"
        )
    if comparator is None:
        comparator = stream.U_planted
    if comparator is None:
        comparator = np.zeros((space.dim, n))
    U = as_matrix(comparator, (space.dim, n), "comparator")

    records: list = []
    violations: list = []
    xs = np.empty((T, n))
    ys = np.empty((T, space.dim))
    w_sum = np.zeros((space.dim, n))
    one_minus_a = 1.0 - constants.a
    for t in range(1, T + 1):
        if adaptive:
            x, y = stream.round_fn(t, learner.W.copy())
            x = np.asarray(x, dtype=np.float64)
            y = np.asarray(y, dtype=np.float64)
        else:
            x = stream.xs[t - 1]
            y = stream.ys[t - 1]
        xs[t - 1] = x
        ys[t - 1] = y
        theta = learner.scores(x)
        try:
            pred = regularizer.predict(theta)
            pl = plan(regularizer, theta, pred)
            rng = np.random.Generator(np.random.Philox(key=[seed, t]))
            y_tilde = decode(pl, rng)
            target_realized = loss.eval(y_tilde, y)
            target_expected = expected_target_loss(pl, loss, y)
            surrogate_wt = regularizer.fy_loss(theta, y, pred)
            surrogate_u = regularizer.fy_loss(U @ x, y)
            grad_vec = regularizer.fy_gradient(theta, y, pred)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"round {t}: {exc}", residual=getattr(exc, "residual", float("nan"))
            ) from exc
        grad_norm_sq = float(np.dot(grad_vec, grad_vec) * np.dot(x, x))
        bound = one_minus_a * surrogate_wt + LEMMA_SLACK
        if target_expected > bound:
            violations.append(
                {
                    "type": "lemma1",
                    "t": t,
                    "expected_target": target_expected,
                    "bound": bound,
                }
            )
        w_sum += learner.W
        learner.step(np.outer(grad_vec, x))
        records.append(
            RoundRecord(
                t=t,
                target_realized=target_realized,
                target_expected=target_expected,
                surrogate_Wt=surrogate_wt,
                surrogate_U=surrogate_u,
                grad_norm_sq=grad_norm_sq,
            )
        )
    w_bar = w_sum / T if T else w_sum
    return RegretTrace(
        records=records,
        xs=xs,
        ys=ys,
        w_bar=w_bar,
        w_final=learner.W.copy(),
        constants=constants,
        U_comparator=U,
        seed=seed,
        config_hash=config_hash,
        violations=violations,
        warnings=warnings,
    )


def online_to_batch(
    trace: RegretTrace,
    loss: TargetLoss,
    regularizer: Regularizer,
    holdout: Stream,
    U: np.ndarray | None = None,
) -> dict:
    """Average the iterates and estimate the i.i.d. risk of the result.

    Reports the holdout expected target risk of decoding scores W_bar x,
    the comparator's holdout surrogate risk, and the risk bound
    comparator_risk + regret_constant / T.
    """
    if trace.T == 0:
        raise InputError("online_to_batch needs a non-empty run")
    if U is None:
        U = trace.U_comparator
    U = as_matrix(U, trace.w_bar.shape, "U")
    w_bar = trace.w_bar
    n_hold = holdout.T
    target_risks = np.empty(n_hold)
    comparator_risks = np.empty(n_hold)
    for i in range(n_hold):
        x = holdout.xs[i]
        y = holdout.ys[i]
        pl = plan(regularizer, w_bar @ x)
        target_risks[i] = expected_target_loss(pl, loss, y)
        comparator_risks[i] = regularizer.fy_loss(U @ x, y)
    u_sq = float(np.sum(U * U))
    constant = trace.constants.expected_regret_bound(u_sq)
    target_risk = float(np.mean(target_risks))
    comparator_risk = float(np.mean(comparator_risks))
    mc_band = 4.0 * float(np.std(target_risks)) / math.sqrt(n_hold)
    return {
        "T": trace.T,
        "holdout_n": n_hold,
        "w_bar_target_risk": target_risk,
        "comparator_surrogate_risk": comparator_risk,
        "regret_constant": constant,
        "risk_bound": comparator_risk + constant / trace.T,
        "mc_band": mc_band,
        "u_frob_sq": u_sq,
    }


def high_prob_eval(
    loss: TargetLoss,
    regularizer: Regularizer,
    learner: Learner,
    stream: Stream,
    n_runs: int,
    delta: float,
    seed: int = 0,
    U: np.ndarray | None = None,
) -> dict:
    """Tail behavior of realized regret over independent decode seeds.

    Full information makes the learning trajectory independent of the
    decode draws, so the estimator sequence is computed once and only the
    decoding is replayed n_runs times.  Reports the empirical (1 - delta)
    quantile of realized surrogate regret against the closed-form tail
    bound.
    """
    if n_runs < 1:
        raise ConfigurationError("n_runs must be positive")
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")
    space = regularizer.space
    constants = ProblemConstants.derive(space, loss, regularizer, C=stream.C)
    constants.require_gate()
    if U is None:
        U = stream.U_planted
    if U is None:
        raise ConfigurationError("no comparator available for the tail bound")
    U = as_matrix(U, (space.dim, stream.n_features), "U")

    plans = []
    cum_surrogate_u = 0.0
    cum_expected = 0.0
    for t in range(1, stream.T + 1):
        x = stream.xs[t - 1]
        y = stream.ys[t - 1]
        theta = learner.scores(x)
        pred = regularizer.predict(theta)
        pl = plan(regularizer, theta, pred)
        plans.append((pl, y))
        cum_surrogate_u += regularizer.fy_loss(U @ x, y)
        cum_expected += expected_target_loss(pl, loss, y)
        learner.step(np.outer(regularizer.fy_gradient(theta, y, pred), x))

    regrets = np.empty(n_runs)
    for r in range(n_runs):
        run_seed = seed + 1 + r
        total = 0.0
        for t, (pl, y) in enumerate(plans, start=1):
            rng = np.random.Generator(np.random.Philox(key=[run_seed, t]))
            total += loss.eval(decode(pl, rng), y)
        regrets[r] = total - cum_surrogate_u
    u_sq = float(np.sum(U * U))
    bound = constants.high_prob_excess(u_sq, delta)
    quantile = float(np.quantile(regrets, 1.0 - delta))
    return {
        "n_runs": n_runs,
        "delta": delta,
        "quantile": quantile,
        "bound": bound,
        "expected_regret": cum_expected - cum_surrogate_u,
        "cum_surrogate_U": cum_surrogate_u,
        "mean_regret": float(np.mean(regrets)),
        "max_regret": float(np.max(regrets)),
        "unreliable": n_runs < 10.0 / delta,
    }


def baseline_uniform_exploration_decode(
    pl, rng: np.random.Generator
) -> np.ndarray:
    """Prior decoding rule: explore uniformly instead of matching the mean.

    Same coin as the randomized decoder, but the exploration branch draws a
    uniformly random class.  Only defined on the probability simplex; used
    for constant-gap comparisons, not by the main pipeline.
    """
    if not isinstance(pl.space, Simplex):
        raise ConfigurationError("uniform-exploration baseline is simplex-only")
    draws = rng.random(2)
    if draws[0] < pl.p:
        d = pl.space.dim
        idx = min(int(draws[1] * d), d - 1)
        out = np.zeros(d)
        out[idx] = 1.0
        return out
    return np.array(pl.y_star, dtype=np.float64)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_float(x: float) -> str:
    return "%.17g" % x


def trace_to_csv(trace: RegretTrace) -> str:
    lines = [CSV_HEADER]
    for r in trace.records:
        lines.append(
            ",".join(
                [
                    str(r.t),
                    format_float(r.target_realized),
                    format_float(r.target_expected),
                    format_float(r.surrogate_Wt),
                    format_float(r.surrogate_U),
                    format_float(r.grad_norm_sq),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: RegretTrace, path: str) -> None:
    _atomic_write(path, trace_to_csv(trace))


def trace_to_json(trace: RegretTrace) -> str:
    rows = [
        {
            "t": r.t,
            "target_realized": r.target_realized,
            "target_expected": r.target_expected,
            "surrogate_Wt": r.surrogate_Wt,
            "surrogate_U": r.surrogate_U,
            "grad_norm_sq": r.grad_norm_sq,
        }
        for r in trace.records
    ]
    return json.dumps(rows, indent=2) + "\n"


def build_summary(trace: RegretTrace, extra_bounds: dict | None = None) -> dict:
    u_sq = float(np.sum(trace.U_comparator * trace.U_comparator))
    bound_constants = dict(trace.constants.as_dict())
    bound_constants["u_frob_sq"] = u_sq
    if trace.constants.gate_passes:
        bound_constants["expected_regret_bound"] = trace.constants.expected_regret_bound(u_sq)
    if extra_bounds:
        bound_constants.update(extra_bounds)
    return {
        "cumulative": {
            "target_realized": trace.cum_target_realized,
            "target_expected": trace.cum_target_expected,
            "surrogate_Wt": trace.cum_surrogate_Wt,
            "surrogate_U": trace.cum_surrogate_U,
            "realized_surrogate_regret": trace.realized_surrogate_regret,
            "expected_surrogate_regret": trace.expected_surrogate_regret,
            "learner_surrogate_regret": trace.learner_surrogate_regret,
        },
        "bound_constants": bound_constants,
        "violations": list(trace.violations),
        "warnings": list(trace.warnings),
        "metadata": {
            "T": trace.T,
            "seed": trace.seed,
            "config_hash": trace.config_hash,
        },
    }


def write_summary_json(summary: dict, path: str) -> None:
    _atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
