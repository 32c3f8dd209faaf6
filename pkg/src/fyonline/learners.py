"""Online linear estimators and their regret accounting.

A learner maintains a matrix W mapping inputs x to score vectors Wx.  After
each round it receives the surrogate-loss gradient G_t = (y_hat - y_t) x_t^T
(scaled like the surrogate) and updates W.  All learners start at W = 0.

ProblemConstants collects the scalars (gamma, lambda, nu, kappa, D) of a
(space, loss, regularizer) triple and derives from them the surrogate gap
a, the smoothness-style constant b, the default learning rate, and the
closed-form regret bounds the harness checks against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .regularizers import Regularizer
from .spaces import OutputSpace
from .target_losses import TargetLoss
from .validation import as_matrix

GATE_PREDICATE = "lambda > 4*gamma/nu"

# a vanishing surrogate gap can round to a positive float; the gate demands
# strictly more than rounding noise
GATE_ATOL = 1e-12

# wealth cap for the coin-betting learner; reached only under adversarially
# consistent gradients, where the unconstrained optimum is at infinity
MAX_WEALTH = 1e300


@dataclass(frozen=True)
class ProblemConstants:
    """Scalars of one (space, loss, regularizer) triple at input bound C.

    loss_scale folds a change of logarithm base (or any uniform rescaling of
    the surrogate) into the constants: a and b are stated for the scaled
    surrogate, so every bound formula below can be used verbatim on logged
    losses.
    """

    gamma: float
    lam: float
    nu: float
    kappa: float
    diameter: float
    C: float
    loss_scale: float
    a: float
    b: float

    @classmethod
    def derive(
        cls,
        space: OutputSpace,
        loss: TargetLoss,
        regularizer: Regularizer,
        C: float = 1.0,
    ) -> "ProblemConstants":
        if C <= 0 or not math.isfinite(C):
            raise ConfigurationError(f"input norm bound C must be positive, got {C}")
        w = regularizer.loss_scale
        lam = regularizer.lam
        a = 1.0 - 4.0 * loss.gamma / (lam * space.nu * w)
        b = 2.0 * C * C * space.kappa ** 2 * w / lam
        return cls(
            gamma=loss.gamma,
            lam=lam,
            nu=space.nu,
            kappa=space.kappa,
            diameter=space.diameter,
            C=float(C),
            loss_scale=w,
            a=a,
            b=b,
        )

    @property
    def gate_passes(self) -> bool:
        return self.a > GATE_ATOL

    def require_gate(self) -> None:
        if not self.gate_passes:
            raise ConfigurationError(
                f"surrogate gap is non-positive (a={self.a:.6g}): need "
                f"{GATE_PREDICATE}, got lambda*nu*scale={self.lam * self.nu * self.loss_scale:.6g} "
                f"<= 4*gamma={4.0 * self.gamma:.6g}"
            )

    @property
    def m(self) -> float:
        return min(0.5, self.a)

    def default_eta(self) -> float:
        """Learning rate (2/b) min(1/2, a); needs no knowledge of U."""
        self.require_gate()
        return (2.0 / self.b) * self.m

    def high_prob_eta(self) -> float:
        self.require_gate()
        return self.a / self.b

    def expected_regret_bound(self, u_frob_sq: float) -> float:
        """Horizon-independent bound on E[sum L_t] - sum S_t(U) at default eta."""
        self.require_gate()
        m = self.m
        return (1.0 - self.a) * self.b * u_frob_sq / (4.0 * (1.0 - m) * m)

    def high_prob_excess(self, u_frob_sq: float, delta: float) -> float:
        """Bound on realized sum L_t - sum S_t(U) holding w.p. >= 1 - delta."""
        self.require_gate()
        if not 0.0 < delta < 1.0:
            raise ConfigurationError(f"delta must lie in (0, 1), got {delta}")
        return (
            (1.0 - self.a) * self.b * u_frob_sq
            + self.gamma * self.diameter * math.log(1.0 / delta)
        ) / self.a

    def adaptive_regret_bound(self, B: float, cum_surrogate_U: float) -> float:
        """Comparator-loss-dependent bound for the self-tuned learner."""
        s = max(cum_surrogate_U, 0.0)
        return 2.0 * self.b * B * B + 2.0 * B * math.sqrt(2.0 * self.b * s)

    def as_dict(self) -> dict:
        out = {
            "gamma": self.gamma,
            "lambda": self.lam,
            "nu": self.nu,
            "kappa": self.kappa,
            "diameter": self.diameter,
            "C": self.C,
            "loss_scale": self.loss_scale,
            "a": self.a,
            "b": self.b,
        }
        if self.gate_passes:
            out["default_eta"] = self.default_eta()
        return out


class Learner:
    """Base online estimator; W has one row per output coordinate."""

    def __init__(self, n_outputs: int, n_features: int):
        if n_outputs < 1 or n_features < 1:
            raise ConfigurationError("estimator dimensions must be positive")
        self.n_outputs = int(n_outputs)
        self.n_features = int(n_features)
        self.W = np.zeros((self.n_outputs, self.n_features))

    def scores(self, x: np.ndarray) -> np.ndarray:
        return self.W @ x

    def step(self, G: np.ndarray) -> None:
        raise NotImplementedError


class OgdConstant(Learner):
    """Gradient descent at a fixed rate over unconstrained W."""

    def __init__(self, n_outputs: int, n_features: int, eta: float):
        super().__init__(n_outputs, n_features)
        if eta <= 0 or not math.isfinite(eta):
            raise ConfigurationError(f"eta must be positive, got {eta}")
        self.eta = float(eta)

    def step(self, G):
        self.W = self.W - self.eta * G


class OgdAdaptive(Learner):
    """Self-confident gradient descent on the Frobenius ball of radius B.

    The rate at round t is B / sqrt(2 * sum_{i<=t} ||G_i||_F^2); the sum
    includes the current gradient.  A round whose cumulative gradient norm
    is still zero performs no update.
    """

    def __init__(self, n_outputs: int, n_features: int, B: float):
        super().__init__(n_outputs, n_features)
        if B <= 0 or not math.isfinite(B):
            raise ConfigurationError(f"B must be positive, got {B}")
        self.B = float(B)
        self.sum_grad_sq = 0.0

    def step(self, G):
        self.sum_grad_sq += float(np.sum(G * G))
        if self.sum_grad_sq == 0.0:
            return
        eta = self.B / math.sqrt(2.0 * self.sum_grad_sq)
        W = self.W - eta * G
        nrm = math.sqrt(float(np.sum(W * W)))
        if nrm > self.B:
            W = W * (self.B / nrm)
        self.W = W


class ParameterFree(Learner):
    """Coin-betting learner needing no scale parameter.

    A scalar bettor with initial wealth epsilon wagers on the coin
    c_t = -<G_t, z_t> / max_i ||G_i||_F, where z_t is a separate direction
    iterate kept on the unit Frobenius ball by self-confident gradient
    steps.  The play is W_t = v_t z_t with stake v_t decided by the
    Krichevsky-Trofimov rule v_t = (sum_{i<t} c_i / t) * wealth_{t-1}.
    Zero gradients leave all state untouched.
    """

    def __init__(self, n_outputs: int, n_features: int, epsilon: float = 1.0):
        super().__init__(n_outputs, n_features)
        if epsilon <= 0 or not math.isfinite(epsilon):
            raise ConfigurationError(f"epsilon must be positive, got {epsilon}")
        self.epsilon = float(epsilon)
        self.wealth = float(epsilon)
        self.coin_sum = 0.0
        self.rounds = 0
        self.grad_max = 0.0
        self.dir_sum_sq = 0.0
        self.stake = 0.0
        self.z = np.zeros((self.n_outputs, self.n_features))

    def step(self, G):
        self.rounds += 1
        gn = math.sqrt(float(np.sum(G * G)))
        if gn == 0.0:
            return
        self.grad_max = max(self.grad_max, gn)
        c = -float(np.sum(G * self.z)) / self.grad_max
        c = min(1.0, max(-1.0, c))
        self.wealth = min(self.wealth + c * self.stake, MAX_WEALTH)
        self.coin_sum += c
        self.dir_sum_sq += gn * gn
        z = self.z - G / math.sqrt(self.dir_sum_sq)
        zn = math.sqrt(float(np.sum(z * z)))
        if zn > 1.0:
            z = z / zn
        self.z = z
        self.stake = (self.coin_sum / (self.rounds + 1.0)) * self.wealth
        self.W = self.stake * self.z


def learner_from_json(
    desc: dict,
    n_outputs: int,
    n_features: int,
    constants: ProblemConstants | None = None,
) -> Learner:
    """Build a learner from {"learner": kind, "eta"/"B"/"epsilon": value}.

    OgdConstant with no explicit eta uses the triple's default rate, which
    requires constants (and the gate passing).
    """
    kind = desc.get("learner")
    if kind == "ogd_const":
        eta = desc.get("eta")
        if eta is None:
            if constants is None:
                raise ConfigurationError("eta omitted and no constants to derive it")
            eta = constants.default_eta()
        return OgdConstant(n_outputs, n_features, float(eta))
    if kind == "ogd_adaptive":
        B = desc.get("B")
        if B is None:
            raise ConfigurationError("ogd_adaptive requires B")
        return OgdAdaptive(n_outputs, n_features, float(B))
    if kind == "param_free":
        return ParameterFree(n_outputs, n_features, float(desc.get("epsilon", 1.0)))
    raise ConfigurationError(f"unknown learner kind {kind!r}")


def regret_certificate(
    trace,
    U,
    regularizer: Regularizer,
    constants: ProblemConstants,
    eta: float | None = None,
    B: float | None = None,
    slack_per_round: float = 1e-6,
) -> dict:
    """Check the run's surrogate regret against its closed-form certificates.

    trace must expose xs, ys and per-round records with surrogate_Wt and
    grad_norm_sq (the harness trace does).  The comparator surrogate is
    re-evaluated here so any U can be certified, not just the planted one.

    Reports the realized surrogate regret sum_t (S_t(W_t) - S_t(U)), the
    gradient-descent certificate ||U||_F^2/(2 eta) + (eta/2) sum ||G_t||_F^2
    when eta is given, the comparator-loss certificate when B is given, and
    the gap budget a * sum_t S_t(U).  Each certificate gets additive slack
    slack_per_round * T before being flagged.
    """
    T = len(trace.records)
    k = regularizer.space.dim
    n = trace.xs.shape[1] if T else 0
    U = as_matrix(U, (k, n) if T else None, "U")
    cum_wt = sum(r.surrogate_Wt for r in trace.records)
    cum_u = 0.0
    for x, y in zip(trace.xs, trace.ys):
        cum_u += regularizer.fy_loss(U @ x, y)
    realized = cum_wt - cum_u
    u_sq = float(np.sum(U * U))
    slack = slack_per_round * max(T, 1)
    report = {
        "T": T,
        "u_frob_sq": u_sq,
        "cum_surrogate_Wt": cum_wt,
        "cum_surrogate_U": cum_u,
        "realized_surrogate_regret": realized,
        "gap_budget": constants.a * cum_u,
        "slack": slack,
        "violations": [],
    }
    if eta is not None:
        rhs = u_sq / (2.0 * eta) + 0.5 * eta * sum(r.grad_norm_sq for r in trace.records)
        report["gd_bound"] = rhs
        if realized > rhs + slack:
            report["violations"].append(
                {"certificate": "gd_bound", "regret": realized, "bound": rhs}
            )
    if B is not None:
        if math.sqrt(u_sq) > B + 1e-12:
            raise InputError(f"comparator Frobenius norm {math.sqrt(u_sq):.6g} exceeds B={B}")
        rhs = constants.adaptive_regret_bound(B, cum_u)
        report["adaptive_bound"] = rhs
        if realized > rhs + slack:
            report["violations"].append(
                {"certificate": "adaptive_bound", "regret": realized, "bound": rhs}
            )
    return report
