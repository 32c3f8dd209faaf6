"""Command-line entry point.

Verbs:
    run        execute one experiment config, write trace + summary
    verify     run a bundled property suite (lemma1|prop1|oracles|bounds|adversary)
    sweep      fan a config grid out across worker threads
    constants  print the derived constants of a built-in triple

Exit codes: 0 success, 1 assertion/property violation, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import Experiment, builtin_triple, expand_sweep, load_config
from .errors import ConfigurationError, GenerationError, InputError
from .harness import (
    build_summary,
    format_float,
    high_prob_eval,
    run,
    trace_to_json,
    write_summary_json,
    write_trace_csv,
    _atomic_write,
)
from .learners import OgdAdaptive, OgdConstant, ProblemConstants, regret_certificate
from .verify import SUITES

THREADS_ENV = "FY_ONLINE_THREADS"


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    return os.cpu_count() or 1


def _execute(exp: Experiment, out_dir: str, fmt: str) -> tuple[dict, list]:
    trace = run(
        exp.loss,
        exp.regularizer,
        exp.learner,
        exp.stream,
        seed=exp.seed,
        config_hash=exp.hash,
        force=exp.force,
    )
    violations = list(trace.violations)
    extra = {}
    if isinstance(exp.learner, OgdConstant) and exp.constants.gate_passes:
        for tag, U in (
            ("planted", trace.U_comparator),
            ("zero", np.zeros_like(trace.U_comparator)),
        ):
            cert = regret_certificate(
                trace, U, exp.regularizer, exp.constants, eta=exp.learner.eta
            )
            extra[f"gd_bound_{tag}"] = cert["gd_bound"]
            for v in cert["violations"]:
                violations.append({**v, "comparator": tag})
    if isinstance(exp.learner, OgdAdaptive):
        u_norm = float(np.linalg.norm(trace.U_comparator))
        if u_norm <= exp.learner.B:
            cert = regret_certificate(
                trace, trace.U_comparator, exp.regularizer, exp.constants,
                B=exp.learner.B,
            )
            extra["adaptive_bound"] = cert["adaptive_bound"]
            violations.extend(cert["violations"])
    trace.violations = violations
    summary = build_summary(trace, extra_bounds=extra)
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "json":
        _atomic_write(os.path.join(out_dir, "trace.json"), trace_to_json(trace))
    else:
        write_trace_csv(trace, os.path.join(out_dir, "trace.csv"))
    write_summary_json(summary, os.path.join(out_dir, "summary.json"))
    return summary, violations


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    exp = Experiment(cfg, force=args.force)
    out_dir = args.out or exp.output or os.path.join("runs", exp.hash[:12])
    summary, violations = _execute(exp, out_dir, args.format)
    cum = summary["cumulative"]
    print(f"config hash: {exp.hash}")
    print(f"rounds: {summary['metadata']['T']}, seed: {summary['metadata']['seed']}")
    print(f"expected surrogate regret: {format_float(cum['expected_surrogate_regret'])}")
    print(f"realized surrogate regret: {format_float(cum['realized_surrogate_regret'])}")
    bounds = summary["bound_constants"]
    if "expected_regret_bound" in bounds:
        print(f"expected-regret bound: {format_float(bounds['expected_regret_bound'])}")
    if args.runs:
        hp = high_prob_eval(
            exp.loss, exp.regularizer,
            type(exp.learner)(exp.learner.n_outputs, exp.learner.n_features,
                              **_learner_kwargs(exp)),
            exp.stream, n_runs=args.runs, delta=args.delta, seed=exp.seed,
        )
        print(
            f"tail check ({args.runs} decode seeds, delta={args.delta}): "
            f"quantile {format_float(hp['quantile'])} vs bound {format_float(hp['bound'])}"
        )
        if hp["quantile"] > hp["bound"]:
            violations.append({"type": "tail_bound", **{k: hp[k] for k in ("quantile", "bound")}})
    print(f"artifacts: {out_dir}")
    if violations:
        print(f"{len(violations)} violation(s) recorded", file=sys.stderr)
        return 1
    return 0


def _learner_kwargs(exp: Experiment) -> dict:
    if isinstance(exp.learner, OgdConstant):
        return {"eta": exp.learner.eta}
    if isinstance(exp.learner, OgdAdaptive):
        return {"B": exp.learner.B}
    return {"epsilon": exp.learner.epsilon}


def cmd_verify(args) -> int:
    suite = SUITES[args.suite]
    report = suite(seed=args.seed if args.seed is not None else 0)
    for line in report.lines():
        print(line)
    print(f"suite {report.suite}: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    runs = expand_sweep(cfg)
    out_root = args.out or "sweep"
    workers = _worker_count()

    def one(item):
        name, rc = item
        exp = Experiment(rc, force=args.force)
        summary, violations = _execute(exp, os.path.join(out_root, name), args.format)
        return name, summary, violations

    failures = 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for name, summary, violations in pool.map(one, runs):
            cum = summary["cumulative"]
            status = "ok" if not violations else f"{len(violations)} violations"
            print(
                f"{name}: expected regret "
                f"{format_float(cum['expected_surrogate_regret'])} [{status}]"
            )
            failures += bool(violations)
    return 1 if failures else 0


def cmd_constants(args) -> int:
    size = {}
    if args.d is not None:
        size["d"] = args.d
    if args.n is not None:
        size["n"] = args.n
    if args.mu is not None:
        size["mu"] = args.mu
    space, loss, reg = builtin_triple(args.triple, **size)
    constants = ProblemConstants.derive(space, loss, reg, C=args.C)
    rows = [
        ("space", f"{space.kind}({space.dim})"),
        ("loss", loss.name),
        ("regularizer", type(reg).__name__),
        ("nu", constants.nu),
        ("gamma", constants.gamma),
        ("lambda", constants.lam),
        ("kappa", constants.kappa),
        ("diameter", constants.diameter),
        ("loss_scale", constants.loss_scale),
        ("C", constants.C),
        ("a", constants.a),
        ("b", constants.b),
    ]
    if constants.gate_passes:
        rows.append(("default_eta", constants.default_eta()))
        rows.append(("regret_bound_per_unit_U", constants.expected_regret_bound(1.0)))
    else:
        rows.append(("gate", f"FAILS (need lambda > 4*gamma/nu; a={constants.a:.6g})"))
    if getattr(loss, "M", None) is not None:
        rows.insert(2, ("loss_span_M", loss.M))
    for name, value in rows:
        if isinstance(value, float):
            value = "%.12g" % value
        print(f"{name:>24}  {value}")
    if space.vertex_count <= 2000:
        verts = space.enumerate_vertices()
        diffs_ok = _cross_check_constants(space, verts)
        print(f"{'enumeration_check':>24}  {'ok' if diffs_ok else 'MISMATCH'}")
        if not diffs_ok:
            return 1
    return 0


def _cross_check_constants(space, verts) -> bool:
    m = len(verts)
    min_dist = float("inf")
    max_dist = 0.0
    for i in range(m):
        diff = verts[i + 1 :] - verts[i]
        if not len(diff):
            continue
        if space.norm == "l1":
            dists = np.abs(diff).sum(axis=1)
        else:
            dists = np.sqrt((diff * diff).sum(axis=1))
        min_dist = min(min_dist, float(dists.min()))
        max_dist = max(max_dist, float(dists.max()))
    return (
        abs(min_dist - space.nu) <= 1e-9 * max(1.0, space.nu)
        and max_dist <= space.diameter + 1e-9
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fyonline",
        description="online structured prediction experiments with surrogate regret accounting",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--force", action="store_true",
                       help="run even if the constants gate fails (bounds no longer apply)")
    p_run.add_argument("--runs", type=int, default=None,
                       help="additionally replay this many decode seeds for a tail check")
    p_run.add_argument("--delta", type=float, default=0.1)
    p_run.set_defaults(fn=cmd_run)

    p_verify = sub.add_parser("verify", help="run a bundled property suite")
    p_verify.add_argument("suite", choices=sorted(SUITES))
    p_verify.add_argument("--seed", type=int, default=None)
    p_verify.set_defaults(fn=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="run a config grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--force", action="store_true")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_const = sub.add_parser("constants", help="print derived constants for a built-in triple")
    p_const.add_argument("--triple", required=True)
    p_const.add_argument("--d", type=int, default=None)
    p_const.add_argument("--n", type=int, default=None)
    p_const.add_argument("--mu", type=float, default=None)
    p_const.add_argument("--C", type=float, default=1.0)
    p_const.set_defaults(fn=cmd_constants)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigurationError, InputError, GenerationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
