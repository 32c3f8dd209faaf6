"""Bundled property suites behind the `verify` CLI verb.

Each suite runs a documented number of randomized checks against an
independent reference (closed forms, brute-force enumeration, or the
bound formulas) and reports per-property pass/fail with worst-case slack
and a counterexample when one exists.  Components are injectable so a
deliberately broken implementation can be shown to fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import builtin_triple
from .decoder import expected_target_loss, plan
from .harness import run
from .learners import OgdConstant, ProblemConstants, regret_certificate
from .regularizers import CrfEnumerable, EntropySimplex
from .spaces import Birkhoff, Hypercube, OrdinalChain, OutputSpace, Permutahedron, Simplex
from .streams import generate_linear_model_stream, generate_lower_bound_stream
from .target_losses import builtin_loss

LEMMA_SLACK = 1e-9


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str
    counterexample: dict | None = None


@dataclass
class SuiteReport:
    suite: str
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def add(self, name, passed, detail, counterexample=None):
        self.results.append(PropertyResult(name, bool(passed), detail, counterexample))

    def lines(self) -> list:
        out = []
        for r in self.results:
            out.append(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
            if not r.passed and r.counterexample is not None:
                out.append(f"     counterexample: {r.counterexample}")
        return out


def small_triples() -> list:
    """The five built-in triples at enumeration-friendly sizes."""
    return [
        ("multiclass_d5", *builtin_triple("multiclass", d=5)),
        ("multilabel_d6", *builtin_triple("multilabel", d=6)),
        ("ranking_n3", *builtin_triple("ranking", n=3, mu=1.0)),
        ("permutation_d4", *builtin_triple("permutation", d=4)),
        ("ordinal_d6", *builtin_triple("ordinal", d=6)),
    ]


def random_hull_point(space: OutputSpace, rng: np.random.Generator) -> np.ndarray:
    if isinstance(space, Simplex):
        return rng.dirichlet(np.ones(space.dim))
    if isinstance(space, Hypercube):
        return rng.random(space.dim)
    if isinstance(space, OrdinalChain):
        return np.sort(rng.random(space.dim))[::-1].copy()
    # generic: a random convex combination of a handful of vertices
    k = min(2 * space.dim, 12)
    verts = np.stack([space.random_vertex(rng) for _ in range(k)])
    w = rng.dirichlet(np.ones(k))
    return w @ verts


_THETA_SCALES = (0.3, 1.0, 3.0, 10.0)
# Matrix-scaling predictions hit the solver's iteration cap on large logits,
# so the doubly stochastic kind samples from a narrower envelope.
_THETA_SCALES_SCALING = (0.3, 0.8, 1.4, 2.0)


def _theta_scales(reg) -> tuple:
    if reg.kind == "scaled_entropy":
        return _THETA_SCALES_SCALING
    return _THETA_SCALES


def suite_lemma1(seed: int = 0, n_pairs: int = 10000, triples=None) -> SuiteReport:
    """Expected decode loss vs surrogate on random (theta, y) pairs.

    Checks E[L(decode(theta)); y] <= (4 gamma / (lambda nu)) S(theta; y)
    with additive slack 1e-9, using the exact closed-form expectation.
    """
    report = SuiteReport("lemma1")
    triple_list = triples if triples is not None else small_triples()
    for idx, (label, space, loss, reg) in enumerate(triple_list):
        constants = ProblemConstants.derive(space, loss, reg)
        factor = 1.0 - constants.a
        scales = _theta_scales(reg)
        rng = np.random.Generator(np.random.Philox(key=[seed, idx]))
        worst = math.inf
        bad = None
        for i in range(n_pairs):
            theta = scales[i % len(scales)] * rng.standard_normal(space.dim)
            y = space.random_vertex(rng)
            pred = reg.predict(theta)
            pl = plan(reg, theta, pred)
            expected = expected_target_loss(pl, loss, y)
            surrogate = reg.fy_loss(theta, y, pred)
            slack = factor * surrogate + LEMMA_SLACK - expected
            if slack < worst:
                worst = slack
                if slack < 0.0 and bad is None:
                    bad = {"theta": theta.tolist(), "y": y.tolist(),
                           "expected": expected, "surrogate": surrogate}
        report.add(
            f"lemma1[{label}]",
            worst >= 0.0,
            f"{n_pairs} pairs, factor {factor:.6g}, worst slack {worst:.3e}",
            bad,
        )
    return report


def _gradient_kinds() -> list:
    kinds = [(label, space, reg) for label, space, _, reg in small_triples()]
    kinds.append(("crf_simplex_d5", Simplex(5), CrfEnumerable(Simplex(5))))
    return kinds


def suite_prop1(seed: int = 0, n_grad: int = 100, n_convexity: int = 10000) -> SuiteReport:
    """Gradient-is-residual and strong-convexity checks per regularizer kind."""
    report = SuiteReport("prop1")
    h = 1e-6
    for idx, (label, space, reg) in enumerate(_gradient_kinds()):
        scales = _theta_scales(reg)
        rng = np.random.Generator(np.random.Philox(key=[seed, idx]))
        worst = 0.0
        bad = None
        for i in range(n_grad):
            theta = scales[i % len(scales)] * rng.standard_normal(space.dim)
            y = space.random_vertex(rng)
            grad = reg.fy_gradient(theta, y)
            for j in range(space.dim):
                e = np.zeros(space.dim)
                e[j] = h
                fd = (reg.fy_loss(theta + e, y) - reg.fy_loss(theta - e, y)) / (2.0 * h)
                err = abs(fd - grad[j])
                if err > worst:
                    worst = err
                    if err > 1e-5:
                        bad = {"theta": theta.tolist(), "y": y.tolist(),
                               "coord": j, "fd": fd, "grad": grad[j]}
        report.add(
            f"gradient[{label}]",
            worst <= 1e-5,
            f"{n_grad} cases, max |fd - grad| = {worst:.3e}",
            bad,
        )

        lam_eff = reg.lam * reg.loss_scale
        worst = math.inf
        bad = None
        for i in range(n_convexity):
            theta = scales[i % len(scales)] * rng.standard_normal(space.dim)
            y = space.random_vertex(rng)
            pred = reg.predict(theta)
            s = reg.fy_loss(theta, y, pred)
            dist = space.distance(y, pred.y_hat)
            slack = s - 0.5 * lam_eff * dist * dist
            if slack < worst:
                worst = slack
                if slack < -1e-8 and bad is None:
                    bad = {"theta": theta.tolist(), "y": y.tolist(),
                           "surrogate": s, "dist": dist}
        report.add(
            f"strong_convexity[{label}]",
            worst >= -1e-8,
            f"{n_convexity} cases, worst slack {worst:.3e}",
            bad,
        )
    return report


def oracle_spaces() -> list:
    return [Simplex(8), Hypercube(8), Birkhoff(3), Permutahedron(5), OrdinalChain(8)]


def _tie_queries(space: OutputSpace) -> list:
    verts = space.enumerate_vertices()
    center = verts.mean(axis=0)
    mid = 0.5 * (verts[0] + verts[-1])
    return [center, mid]


def suite_oracles(seed: int = 0, n_queries: int = 1000, spaces=None) -> SuiteReport:
    """Vertex oracles against brute-force enumeration, tie-break included."""
    report = SuiteReport("oracles")
    for space in (spaces if spaces is not None else oracle_spaces()):
        rng = np.random.Generator(np.random.Philox(key=[seed, space.dim]))
        verts = space.enumerate_vertices()
        bad_nearest = None
        bad_oracle = None
        hull_queries = [random_hull_point(space, rng) for _ in range(n_queries)]
        hull_queries.extend(_tie_queries(space))
        for p in hull_queries:
            got = space.nearest_vertex(p)
            dists = np.array([space.distance(p, v) for v in verts])
            want = verts[int(np.argmin(dists))]  # argmin returns the first minimizer
            if not np.array_equal(got, want) and bad_nearest is None:
                bad_nearest = {"space": repr(space), "p": np.asarray(p).tolist(),
                               "got": got.tolist(), "want": want.tolist()}
        score_queries = [rng.standard_normal(space.dim) for _ in range(n_queries)]
        score_queries.append(np.zeros(space.dim))
        score_queries.append(np.round(rng.standard_normal(space.dim)))
        for c in score_queries:
            got = space.linear_oracle(c)
            scores = verts @ c
            want = verts[int(np.argmin(scores))]
            if not np.array_equal(got, want) and bad_oracle is None:
                bad_oracle = {"space": repr(space), "c": np.asarray(c).tolist(),
                              "got": got.tolist(), "want": want.tolist()}
        report.add(
            f"nearest_vertex[{space.kind}({space.dim})]",
            bad_nearest is None,
            f"{len(hull_queries)} queries vs {len(verts)} vertices",
            bad_nearest,
        )
        report.add(
            f"linear_oracle[{space.kind}({space.dim})]",
            bad_oracle is None,
            f"{len(score_queries)} queries vs {len(verts)} vertices",
            bad_oracle,
        )
    return report


def _bounds_run(name, triple_kwargs, T, u_scale, seed, report):
    space, loss, reg = builtin_triple(**triple_kwargs)
    constants = ProblemConstants.derive(space, loss, reg, C=1.0)
    stream = generate_linear_model_stream(
        space, n_features=space.dim, T=T, C=1.0, u_scale=u_scale, seed=seed
    )
    learner = OgdConstant(space.dim, stream.n_features, constants.default_eta())
    trace = run(loss, reg, learner, stream, seed=seed)
    u_sq = float(np.sum(stream.U_planted ** 2))
    bound = constants.expected_regret_bound(u_sq)
    prefix = trace.prefix_expected_regret()
    worst = float(np.max(prefix - bound))
    report.add(
        f"regret_bound[{name}]",
        worst <= 0.0 and not trace.violations,
        f"T={T}, bound {bound:.6g}, max prefix excess {worst:.3e}, "
        f"{len(trace.violations)} per-round violations",
    )
    cert = regret_certificate(
        trace, stream.U_planted, reg, constants, eta=learner.eta
    )
    cert_zero = regret_certificate(
        trace, np.zeros_like(stream.U_planted), reg, constants, eta=learner.eta
    )
    ok = not cert["violations"] and not cert_zero["violations"]
    report.add(
        f"gd_certificate[{name}]",
        ok,
        f"regret {cert['realized_surrogate_regret']:.6g} vs bound {cert['gd_bound']:.6g} "
        f"(planted U), {cert_zero['realized_surrogate_regret']:.6g} vs "
        f"{cert_zero['gd_bound']:.6g} (U=0)",
    )


def suite_bounds(seed: int = 0) -> SuiteReport:
    """Reduced-horizon regret bound and certificate checks on three triples."""
    report = SuiteReport("bounds")
    _bounds_run("multiclass_d3", {"name": "multiclass", "d": 3}, 1500, 1.0, seed, report)
    _bounds_run("multilabel_d25", {"name": "multilabel", "d": 25}, 1500, 2.0, seed, report)
    _bounds_run("ranking_n3", {"name": "ranking", "n": 3, "mu": 1.0}, 600, 1.0, seed, report)
    return report


def adversary_regret(d: int, T: int, B: float, label_seed: int) -> dict:
    """Expected-accounting regret of gradient descent on one adversary draw.

    The surrogate here is the natural-log logistic loss: the comparator's
    per-round loss ln(1 + (d-1)/(2d)) stays below the budget (1 - 1/d)/2
    that the M/4 floor requires, which fails for the base-2 scaling.
    Rounds after M + 1 repeat a resolved example and cannot change the
    first-M regret, so execution stops at M + 1.
    """
    stream = generate_lower_bound_stream(d, T, B, seed=label_seed)
    M = stream.meta["M"]
    space = stream.space
    loss = builtin_loss(space, "zero_one")
    reg = EntropySimplex(space, log_base2=False)
    short = type(stream)(
        space=space, xs=stream.xs[: M + 1], ys=stream.ys[: M + 1],
        C=stream.C, U_planted=stream.U_planted, meta=stream.meta,
    )
    learner = OgdConstant(space.dim, short.n_features, eta=0.25)
    trace = run(loss, reg, learner, short, seed=label_seed, force=True)
    prefix = trace.prefix_expected_regret()
    u = stream.U_planted
    u_sq = float(np.sum(u * u))
    return {
        "M": M,
        "regret_first_M": float(prefix[M - 1]),
        "u_frob_sq": u_sq,
        "u_identity_err": abs(
            u_sq - (M * math.log(2 * d) ** 2 + math.log(d * T) ** 2)
        ),
        "comparator_round_loss": float(trace.column("surrogate_U")[0]),
    }


def suite_adversary(
    seed: int = 0, n_label_seeds: int = 50, d: int = 2, T: int = 10000, B: float = 30.0
) -> SuiteReport:
    """Mean first-M regret of the hard stream against the M/4 floor."""
    report = SuiteReport("adversary")
    regrets = []
    M = None
    id_err = 0.0
    round_loss = 0.0
    for s in range(n_label_seeds):
        out = adversary_regret(d, T, B, label_seed=seed + s)
        regrets.append(out["regret_first_M"])
        M = out["M"]
        id_err = max(id_err, out["u_identity_err"])
        round_loss = max(round_loss, out["comparator_round_loss"])
    mean = float(np.mean(regrets))
    threshold = M / 4.0
    report.add(
        "adversary_regret",
        mean >= threshold,
        f"d={d}, B={B}, T={T}, M={M}: mean regret over first M rounds "
        f"{mean:.4f} >= threshold M/4 = {threshold:.4f} ({n_label_seeds} label seeds)",
    )
    report.add(
        "planted_norm_identity",
        id_err <= 1e-9,
        f"max |  ||U'||_F^2 - (M ln^2(2d) + ln^2(dT)) | = {id_err:.3e}",
    )
    budget = 0.5 * (1.0 - 1.0 / d)
    report.add(
        "comparator_round_loss",
        round_loss <= budget + 1e-12,
        f"per-round comparator loss {round_loss:.6f} <= (1 - 1/d)/2 = {budget:.6f}",
    )
    return report


SUITES = {
    "lemma1": suite_lemma1,
    "prop1": suite_prop1,
    "oracles": suite_oracles,
    "bounds": suite_bounds,
    "adversary": suite_adversary,
}
