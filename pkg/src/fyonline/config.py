"""Run configuration: JSON schema, built-in problem registry, hashing.

A run config is one JSON document:

    {
      "triple": {"name": "multiclass", "d": 3},
      "learner": {"learner": "ogd_const"},
      "stream": {"kind": "linear_model", "n_features": 4, "u_scale": 1.0},
      "T": 2000,
      "seed": 0,
      "C": 1.0,
      "output": "runs/demo"
    }

The "triple" shorthand expands to explicit "space", "loss" and "regularizer"
blocks; configs may also spell those out directly.  The config hash covers
the canonical JSON encoding of the document as given.
"""

from __future__ import annotations

import hashlib
import itertools
import json

import numpy as np

from .errors import ConfigurationError
from .learners import ProblemConstants, learner_from_json
from .regularizers import (
    EntropySimplex,
    QuadraticRegularizer,
    Regularizer,
    ScaledEntropyBirkhoff,
    regularizer_from_json,
)
from .spaces import (
    Birkhoff,
    Hypercube,
    OrdinalChain,
    OutputSpace,
    Permutahedron,
    Simplex,
    space_from_json,
)
from .streams import (
    Stream,
    generate_linear_model_stream,
    generate_lower_bound_stream,
    generate_separable_stream,
    random_planted_matrix,
)
from .target_losses import TargetLoss, builtin_loss, loss_from_json

TRIPLE_NAMES = ("multiclass", "multilabel", "ranking", "permutation", "ordinal")


def builtin_triple(name: str, **size) -> tuple[OutputSpace, TargetLoss, Regularizer]:
    """The five shipped (space, loss, regularizer) combinations.

    multiclass(d):    simplex, 0-1 loss, base-2 logistic prediction
    multilabel(d):    hypercube, Hamming, squared-l2 prediction
    ranking(n, mu):   Birkhoff, rank mismatch, entropy at temperature mu
    permutation(d):   permutahedron, alignment loss, squared-l2
    ordinal(d):       monotone chain, absolute error, squared-l2
    """
    if name == "multiclass":
        space = Simplex(int(size.get("d", 3)))
        return space, builtin_loss(space, "zero_one"), EntropySimplex(space, log_base2=True)
    if name == "multilabel":
        space = Hypercube(int(size.get("d", 25)))
        return space, builtin_loss(space, "hamming"), QuadraticRegularizer(space)
    if name == "ranking":
        space = Birkhoff(int(size.get("n", 3)))
        mu = float(size.get("mu", 1.0))
        return space, builtin_loss(space, "rank_mismatch"), ScaledEntropyBirkhoff(space, mu=mu)
    if name == "permutation":
        space = Permutahedron(int(size.get("d", 5)))
        return space, builtin_loss(space, "permutahedron_align"), QuadraticRegularizer(space)
    if name == "ordinal":
        space = OrdinalChain(int(size.get("d", 25)))
        return space, builtin_loss(space, "ordinal_absolute"), QuadraticRegularizer(space)
    raise ConfigurationError(
        f"unknown triple {name!r}; known: {', '.join(TRIPLE_NAMES)}"
    )


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Experiment:
    """Fully materialized run: components, stream, learner, and identity."""

    def __init__(self, cfg: dict, force: bool = False):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        self.seed = int(cfg.get("seed", 0))
        self.T = int(cfg.get("T", 1000))
        if self.T < 0:
            raise ConfigurationError("T must be non-negative")
        self.C = float(cfg.get("C", 1.0))
        self.output = cfg.get("output")

        if "triple" in cfg:
            tdesc = dict(cfg["triple"])
            name = tdesc.pop("name", None)
            space, loss, reg = builtin_triple(name, **tdesc)
        else:
            try:
                space = space_from_json(cfg["space"])
                loss = loss_from_json(space, cfg["loss"])
                reg = regularizer_from_json(space, cfg["regularizer"])
            except KeyError as exc:
                raise ConfigurationError(f"config missing block {exc}") from exc
        self.space, self.loss, self.regularizer = space, loss, reg

        self.constants = ProblemConstants.derive(space, loss, reg, C=self.C)
        self.force = bool(force)
        if not self.force:
            self.constants.require_gate()

        self.stream = self._build_stream(cfg.get("stream", {}))
        learner_desc = cfg.get("learner", {"learner": "ogd_const"})
        self.learner = learner_from_json(
            learner_desc, space.dim, self.stream.n_features,
            self.constants if self.constants.gate_passes else None,
        )
        self.learner_desc = learner_desc

    def _build_stream(self, desc: dict) -> Stream:
        kind = desc.get("kind", "linear_model")
        if kind == "linear_model":
            n = int(desc.get("n_features", self.space.dim))
            U_true = desc.get("U_true")
            if U_true is not None:
                U_true = np.asarray(U_true, dtype=np.float64)
            return generate_linear_model_stream(
                self.space,
                n_features=n,
                T=self.T,
                C=self.C,
                U_true=U_true,
                u_scale=float(desc.get("u_scale", 1.0)),
                noise=float(desc.get("noise", 0.0)),
                seed=self.seed,
            )
        if kind == "separable":
            n = int(desc.get("n_features", self.space.dim))
            U0 = desc.get("U0")
            if U0 is None:
                U0 = random_planted_matrix(
                    self.space, n, float(desc.get("u_scale", 1.0)), self.seed
                )
            else:
                U0 = np.asarray(U0, dtype=np.float64)
            return generate_separable_stream(
                self.space,
                U0,
                t0=float(desc.get("t0", 0.0)),
                T=self.T,
                C=self.C,
                seed=self.seed,
            )
        if kind == "lower_bound":
            if not isinstance(self.space, Simplex):
                raise ConfigurationError("the lower-bound stream is simplex-only")
            return generate_lower_bound_stream(
                d=self.space.dim,
                T=self.T,
                B=float(desc.get("B", 30.0)),
                seed=self.seed,
            )
        raise ConfigurationError(f"unknown stream kind {kind!r}")


def load_config(path: str) -> dict:
    with open(path, "r") as handle:
        try:
            cfg = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"config {path} must be a JSON object")
    return cfg


def expand_sweep(cfg: dict) -> list[tuple[str, dict]]:
    """Expand {"base": config, "grid": {key: [values...]}} into named runs.

    Grid keys address top-level config fields ("seed", "T") or dotted paths
    into nested blocks ("stream.u_scale").  The cartesian product is taken
    in sorted key order.
    """
    if "grid" not in cfg:
        return [("run_0", dict(cfg.get("base", cfg)))]
    base = cfg.get("base")
    if base is None:
        raise ConfigurationError("sweep config needs a \"base\" block")
    grid = cfg["grid"]
    keys = sorted(grid)
    runs = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        one = json.loads(json.dumps(base))
        parts = []
        for key, value in zip(keys, combo):
            node = one
            path = key.split(".")
            for step in path[:-1]:
                node = node.setdefault(step, {})
            node[path[-1]] = value
            parts.append(f"{path[-1]}={value}")
        runs.append((f"run_{i}_" + "_".join(parts), one))
    return runs
