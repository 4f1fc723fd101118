"""Command-line entry points.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
All JSON output uses 1-based node indices.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import conditions, experiments, io, representation, simulate
from ._backend import active_backend
from ._version import __version__
from .errors import NumericalError
from .model import CovarianceMatrix, Ordering
from .scoring import build_score_table
from .search import fit_exact, fit_greedy


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; we want 1
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="l0dag", description=__doc__)
    parser.add_argument("--version", action="version", version=f"l0dag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="generate a model and a dataset")
    sp.add_argument("--kind", required=True, choices=["ar1", "random"])
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--beta0", type=float, help="chain weight (kind ar1)")
    sp.add_argument("--s0", type=int, help="edge count (kind random)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--coef-lo", type=float, default=0.5)
    sp.add_argument("--coef-hi", type=float, default=1.0)
    sp.add_argument("--omega-lo", type=float)
    sp.add_argument("--omega-hi", type=float)
    sp.add_argument("--max-parents", type=int)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("represent", help="triangular representation at an ordering")
    sp.add_argument("--sigma", required=True)
    sp.add_argument("--pi", required=True, help='1-based ordering, e.g. "3,1,2"')
    sp.add_argument("--zero-tol", type=float)
    sp.add_argument("--n", type=int, help="mark the matrix as empirical with this n")
    sp.set_defaults(func=_cmd_represent)

    sp = sub.add_parser("fit", help="penalized structure fit")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="data CSV, one row per observation")
    src.add_argument("--sigma", help="covariance CSV")
    sp.add_argument("--n", type=int, help="sample size behind --sigma")
    sp.add_argument("--lambda2", type=float, required=True)
    sp.add_argument("--mode", choices=["profile", "equalvar"], default="profile")
    sp.add_argument("--max-parents", type=int, required=True)
    sp.add_argument("--method", choices=["exact", "greedy"], required=True)
    sp.add_argument("--restarts", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("check", help="condition checks on a covariance")
    sp.add_argument("--sigma", required=True)
    sp.add_argument("--n", type=int)
    sp.add_argument("--conditions", default="1,2,4,5,6,7")
    sp.add_argument(
        "--constants-from",
        choices=["sigma"],
        default="sigma",
        help="derive sigma0^2 and Lambda_min^2 from the input matrix",
    )
    sp.add_argument("--sigma0-sq", type=float, help="override sigma0^2")
    sp.add_argument("--alpha-tilde", type=float, help="override alpha~")
    sp.add_argument("--eta0", type=float, default=1.0)
    sp.add_argument("--eta1", type=float, default=0.0)
    sp.add_argument("--eta-omega", type=float, default=1.0)
    sp.add_argument("--alpha-star", type=float, default=0.3)
    sp.add_argument("--s0", type=int)
    sp.add_argument("--mode", choices=["auto", "exhaustive", "sampled"], default="auto")
    sp.add_argument("--population", action="store_true", help="treat --sigma as exact")
    sp.set_defaults(func=_cmd_check)

    sp = sub.add_parser("constants", help="closed-form tuning constants")
    sp.add_argument("--sigma0", type=float, required=True)
    sp.add_argument("--lambda-min", type=float, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--s0", type=int, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--t", type=float)
    sp.set_defaults(func=_cmd_constants)

    sp = sub.add_parser("experiment", help="run a config-driven experiment")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=".")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--gnuplot", action="store_true")
    sp.set_defaults(func=_cmd_experiment)
    return parser


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _load_sigma(path, n: int | None) -> CovarianceMatrix:
    matrix = io.read_matrix_csv(path)
    if n is None:
        return CovarianceMatrix(matrix=matrix)
    return CovarianceMatrix(matrix=matrix, kind="empirical", n=n)


def _cmd_simulate(args) -> None:
    omega_range = None
    if (args.omega_lo is None) != (args.omega_hi is None):
        raise ValueError("--omega-lo and --omega-hi must be given together")
    if args.omega_lo is not None:
        omega_range = (args.omega_lo, args.omega_hi)
    config = simulate.SimConfig(
        kind="ar1" if args.kind == "ar1" else "random_sparse",
        p=args.p,
        n=args.n,
        seed=args.seed,
        s0=args.s0,
        beta0=args.beta0,
        coef_range=(args.coef_lo, args.coef_hi),
        omega_range=omega_range,
        max_parents=args.max_parents,
    )
    model = simulate.model_for(config)
    data = simulate.sample_sem(model, args.n, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config_dict = {
        "kind": config.kind,
        "p": config.p,
        "n": config.n,
        "seed": config.seed,
        "s0": config.s0,
        "beta0": config.beta0,
        "coef_range": list(config.coef_range),
        "omega_range": None if omega_range is None else list(omega_range),
        "max_parents": config.max_parents,
    }
    io.write_json(out / "model.json", model.to_dict())
    io.write_matrix_csv(out / "data.csv", data.X)
    io.write_json(out / "config.json", config_dict)
    io.write_json(
        out / "manifest.json",
        io.build_manifest(config_dict, args.n, active_backend(), args.seed),
    )
    _emit({"out": str(out), "p": config.p, "n": config.n, "edges": model.s_edges})


def _cmd_represent(args) -> None:
    sigma = _load_sigma(args.sigma, args.n)
    pi = Ordering.from_one_based(int(v) for v in args.pi.split(","))
    model = representation.gram_schmidt_representation(sigma, pi, args.zero_tol)
    profile = representation.edge_profile(sigma, pi, args.zero_tol)
    _emit(
        {
            "model": model.to_dict(),
            "edge_profile": {
                "per_node": list(profile.per_node),
                "supports": [[v + 1 for v in s] for s in profile.supports],
                "total": profile.total,
            },
        }
    )


def _cmd_fit(args) -> None:
    if args.data is not None:
        X = io.read_matrix_csv(args.data)
        sigma = simulate.sample_covariance(X)
        n: int | None = X.shape[0]
    else:
        sigma = _load_sigma(args.sigma, args.n)
        n = args.n
    if args.method == "exact":
        table = build_score_table(
            sigma,
            n=n,
            lambda2=args.lambda2,
            mode=args.mode,
            max_parents=args.max_parents,
        )
        fit = fit_exact(table)
    else:
        fit = fit_greedy(
            sigma,
            n=n,
            lambda2=args.lambda2,
            mode=args.mode,
            max_parents=args.max_parents,
            restarts=args.restarts,
            seed=args.seed,
        )
    _emit(fit.to_dict())


def _cmd_check(args) -> None:
    wanted = set()
    for tok in args.conditions.split(","):
        tok = tok.strip()
        if tok not in ("1", "2", "4", "5", "6", "7"):
            raise ValueError(f"unknown condition {tok!r}; choose from 1,2,4,5,6,7")
        wanted.add(int(tok))
    sigma = _load_sigma(args.sigma, None if args.population else args.n)
    if {4, 5, 7}.intersection(wanted) and args.n is None:
        raise ValueError("conditions 4, 5 and 7 need --n")
    sigma0_sq = (
        args.sigma0_sq
        if args.sigma0_sq is not None
        else float(np.max(np.diag(sigma.matrix)))
    )
    checks = []
    constants: dict = {}
    advisory = sigma.kind == "empirical"

    def absorb(report, keep) -> None:
        checks.extend(c for c in report.checks if c.condition in keep)
        constants.update(report.constants)

    if {1, 2}.intersection(wanted):
        absorb(conditions.check_basic(sigma, sigma0_sq), wanted)
    if 4 in wanted:
        alpha_tilde = args.alpha_tilde
        if alpha_tilde is None:
            alpha_tilde = conditions.cond_edges_alpha(
                sigma0_sq, sigma.lambda_min_sq, args.eta0, args.eta1
            )
        absorb(conditions.check_degree(sigma, args.n, alpha_tilde, args.mode), wanted)
    if 5 in wanted:
        s0 = args.s0 if args.s0 is not None else sigma.p
        absorb(
            conditions.check_beta_min(
                sigma, args.n, s0, args.eta0, args.eta1, args.mode
            ),
            wanted,
        )
    if {6, 7}.intersection(wanted):
        need_7 = 7 in wanted
        report = conditions.check_omega_min(
            sigma,
            args.eta_omega,
            n=args.n if need_7 else None,
            alpha_star=args.alpha_star if need_7 else None,
            mode=args.mode,
        )
        absorb(report, wanted)
    merged = conditions.ConditionReport(
        checks=tuple(sorted(checks, key=lambda c: c.condition)),
        constants=constants,
        p=sigma.p,
        n=args.n,
        advisory=advisory,
    )
    _emit(merged.to_dict())


def _cmd_constants(args) -> None:
    tc = conditions.theorem_constants(
        args.sigma0, args.lambda_min, args.p, args.s0, args.n, args.t
    )
    _emit(tc.to_dict())


def _cmd_experiment(args) -> None:
    config = experiments.ExperimentConfig.from_dict(io.read_json(args.config))
    report = experiments.run_experiment(config, workers=args.workers)
    paths = experiments.write_outputs(report, args.out, gnuplot=args.gnuplot)
    _emit({"paths": paths, "aggregates": report.aggregates})


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"l0dag: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"l0dag: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
