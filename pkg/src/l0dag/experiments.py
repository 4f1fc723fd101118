"""Desk-scale empirical checks of the rate and recovery claims.

A config pins a generator (chain or random sparse DAG), an n grid, a
penalty rule, and a fit method. Every record is a pure function of
(config, n index, replication index); wall time lands in the `ms` column
only, so reruns and different worker counts reproduce the other columns
byte for byte.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from ._backend import active_backend
from .cpdag import cpdag_shd
from .model import CovarianceMatrix, DagModel, compatible_order, covariance_of
from .representation import gram_schmidt_representation
from .scoring import build_score_table
from .search import FitResult, fit_exact, fit_greedy
from .simulate import SimConfig, ar1_model, random_sparse_dag, sample_covariance, sample_sem

RECORD_COLUMNS = (
    "rep",
    "n",
    "p",
    "s0",
    "lambda2",
    "s_hat",
    "frob_err",
    "order_compatible",
    "support_exact",
    "shd",
    "ms",
)
# "s_hat comparable to s0" is reported as s_hat/s0 falling in this band
RATIO_BAND = (1.0 / 3.0, 3.0)

_REQUIRED_KEYS = {"kind", "p", "n_grid", "lambda2_rule", "mode", "method", "reps", "seed"}
_OPTIONAL_KEYS = {"s0", "beta0", "max_parents", "population"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated mirror of the experiment config JSON."""

    kind: str
    p: int
    n_grid: tuple[int, ...]
    lambda2_rule: dict
    mode: str
    method: str
    reps: int
    seed: int
    s0: int | None = None
    beta0: float | None = None
    max_parents: int | None = None
    population: bool = False

    def __post_init__(self):
        if self.kind not in ("rate", "equalvar"):
            raise ValueError(f"kind must be rate|equalvar, got {self.kind!r}")
        if self.mode not in ("profile", "equalvar"):
            raise ValueError(f"mode must be profile|equalvar, got {self.mode!r}")
        if self.method not in ("exact", "greedy"):
            raise ValueError(f"method must be exact|greedy, got {self.method!r}")
        if self.p < 2:
            raise ValueError(f"need p >= 2, got {self.p}")
        if self.reps < 1:
            raise ValueError(f"need reps >= 1, got {self.reps}")
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if not grid or any(n < 2 for n in grid):
            raise ValueError(f"n_grid must be non-empty with n >= 2, got {grid}")
        if (self.beta0 is None) == (self.s0 is None):
            raise ValueError("exactly one of beta0 (chain) or s0 (random DAG) is required")
        rule = dict(self.lambda2_rule)
        kind = rule.pop("type", None)
        if kind == "c_logp_over_n":
            if set(rule) != {"c"} or float(rule["c"]) < 0:
                raise ValueError(f"c_logp_over_n rule needs a c >= 0, got {self.lambda2_rule}")
        elif kind == "fixed":
            if set(rule) != {"value"} or float(rule["value"]) < 0:
                raise ValueError(f"fixed rule needs a value >= 0, got {self.lambda2_rule}")
        else:
            raise ValueError(f"lambda2_rule.type must be c_logp_over_n|fixed, got {kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - _REQUIRED_KEYS - _OPTIONAL_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = _REQUIRED_KEYS - set(d)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        return cls(
            kind=d["kind"],
            p=int(d["p"]),
            n_grid=tuple(d["n_grid"]),
            lambda2_rule=dict(d["lambda2_rule"]),
            mode=d["mode"],
            method=d["method"],
            reps=int(d["reps"]),
            seed=int(d["seed"]),
            s0=None if d.get("s0") is None else int(d["s0"]),
            beta0=None if d.get("beta0") is None else float(d["beta0"]),
            max_parents=None if d.get("max_parents") is None else int(d["max_parents"]),
            population=bool(d.get("population", False)),
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.p,
            "s0": self.s0,
            "beta0": self.beta0,
            "n_grid": list(self.n_grid),
            "lambda2_rule": dict(self.lambda2_rule),
            "mode": self.mode,
            "method": self.method,
            "reps": self.reps,
            "seed": self.seed,
            "max_parents": self.max_parents,
            "population": self.population,
        }

    def lambda2_for(self, n: int) -> float:
        if self.lambda2_rule["type"] == "fixed":
            return float(self.lambda2_rule["value"])
        return float(self.lambda2_rule["c"]) * float(np.log(self.p)) / n


@dataclass(frozen=True)
class Record:
    """One replication's metrics; column order mirrors RECORD_COLUMNS."""

    rep: int
    n: int
    p: int
    s0: int
    lambda2: float
    s_hat: int
    frob_err: float
    order_compatible: bool
    support_exact: bool
    shd: int
    ms: float

    def row(self) -> list:
        return [getattr(self, k) for k in RECORD_COLUMNS]


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config: ExperimentConfig
    records: tuple[Record, ...]
    aggregates: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "record_count": len(self.records),
            "aggregates": self.aggregates,
        }


def derived_seed(master: int, key: tuple[int, ...]) -> int:
    """A 128-bit stream seed for (master, key), stable across platforms."""
    state = np.random.SeedSequence(entropy=master, spawn_key=key).generate_state(
        4, np.uint32
    )
    return int.from_bytes(state.tobytes(), "little")


def frobenius_error(fit: FitResult, sigma0: CovarianceMatrix) -> float:
    """Squared distance of (B, Omega) to sigma0's representation at pi_hat."""
    if fit.model.p != sigma0.p:
        raise ValueError(f"dimension mismatch: p={fit.model.p} vs p={sigma0.p}")
    ref = gram_schmidt_representation(sigma0, fit.pi_hat)
    return float(
        np.sum(np.square(fit.model.B - ref.B))
        + np.sum(np.square(fit.model.omega - ref.omega))
    )


def true_model(config: ExperimentConfig, n_idx: int, rep: int) -> DagModel:
    """The generating model of one replication (fresh DAG per rep)."""
    if config.beta0 is not None:
        return ar1_model(config.p, config.beta0)
    sim = SimConfig(
        kind="random_sparse",
        p=config.p,
        n=config.n_grid[n_idx],
        seed=derived_seed(config.seed, (n_idx, rep, 0)),
        s0=config.s0,
        max_parents=config.max_parents,
    )
    return random_sparse_dag(sim)


def run_record(config: ExperimentConfig, n_idx: int, rep: int) -> Record:
    t0 = time.perf_counter()
    n = config.n_grid[n_idx]
    lam2 = config.lambda2_for(n)
    model = true_model(config, n_idx, rep)
    if config.kind == "equalvar" and not np.all(model.omega == 1.0):
        raise ValueError(
            "equal-variance experiments require unit noise variances; "
            "got a generator with omega != 1"
        )
    sigma0 = covariance_of(model)
    if config.population:
        sigma = sigma0
    else:
        data = sample_sem(
            model,
            n,
            np.random.SeedSequence(entropy=config.seed, spawn_key=(n_idx, rep, 1)),
        )
        sigma = sample_covariance(data)
    cap = config.max_parents if config.max_parents is not None else config.p - 1
    if config.method == "exact":
        table = build_score_table(
            sigma, n=n, lambda2=lam2, mode=config.mode, max_parents=cap
        )
        fit = fit_exact(table)
    else:
        fit = fit_greedy(
            sigma,
            n=n,
            lambda2=lam2,
            mode=config.mode,
            max_parents=cap,
            restarts=0,
            seed=derived_seed(config.seed, (n_idx, rep, 2)),
        )
    if config.kind == "equalvar":
        frob = float(np.sum(np.square(fit.model.B - model.B)))
    else:
        frob = frobenius_error(fit, sigma0)
    return Record(
        rep=rep,
        n=n,
        p=config.p,
        s0=model.s_edges,
        lambda2=lam2,
        s_hat=fit.s_hat,
        frob_err=frob,
        order_compatible=compatible_order(fit.pi_hat, model.B),
        support_exact=fit.model.edge_set() == model.edge_set(),
        shd=cpdag_shd(fit.model, model),
        ms=(time.perf_counter() - t0) * 1000.0,
    )


def _worker(task) -> Record:
    config, n_idx, rep = task
    return run_record(config, n_idx, rep)


def _run_records(config: ExperimentConfig, workers: int | None) -> tuple[Record, ...]:
    tasks = [
        (config, n_idx, rep)
        for n_idx in range(len(config.n_grid))
        for rep in range(config.reps)
    ]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker, tasks))
    else:
        records = [_worker(t) for t in tasks]
    # tasks are generated in (n index, rep) order and map preserves it
    return tuple(records)


def aggregate(records, band: tuple[float, float] = RATIO_BAND) -> dict:
    """Per-n medians and frequencies plus the log-log error slope.

    Recomputable from the records CSV alone: every input appears there
    verbatim.
    """
    per_n = []
    for n in sorted({r.n for r in records}):
        rs = [r for r in records if r.n == n]
        ok = [
            r.s_hat == 0
            if r.s0 == 0
            else band[0] <= r.s_hat / r.s0 <= band[1]
            for r in rs
        ]
        per_n.append(
            {
                "n": n,
                "median_frob_err": float(np.median([r.frob_err for r in rs])),
                "median_s_hat": float(np.median([r.s_hat for r in rs])),
                "median_shd": float(np.median([r.shd for r in rs])),
                "shat_ratio_freq": float(np.mean(ok)),
                "order_compatible_freq": float(np.mean([r.order_compatible for r in rs])),
                "support_exact_freq": float(np.mean([r.support_exact for r in rs])),
            }
        )
    slope = None
    meds = [(row["n"], row["median_frob_err"]) for row in per_n]
    if len(meds) >= 2 and all(m > 0 for _, m in meds):
        xs = np.log([n for n, _ in meds])
        ys = np.log([m for _, m in meds])
        slope = float(np.polyfit(xs, ys, 1)[0])
    return {
        "ratio_band": [band[0], band[1]],
        "per_n": per_n,
        "slope_log_err_vs_log_n": slope,
    }


def run_rate_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Error-vs-n study in the heterogeneous-variance setting."""
    if config.kind != "rate":
        raise ValueError(f"config.kind is {config.kind!r}, expected 'rate'")
    records = _run_records(config, workers)
    return ExperimentReport(config=config, records=records, aggregates=aggregate(records))


def run_equal_variance_experiment(
    config: ExperimentConfig, workers: int | None = None
) -> ExperimentReport:
    """Ordering/support recovery study with unit noise variances."""
    if config.kind != "equalvar":
        raise ValueError(f"config.kind is {config.kind!r}, expected 'equalvar'")
    records = _run_records(config, workers)
    return ExperimentReport(config=config, records=records, aggregates=aggregate(records))


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    if config.kind == "rate":
        return run_rate_experiment(config, workers)
    return run_equal_variance_experiment(config, workers)


def write_records_csv(path, records) -> None:
    lines = [",".join(RECORD_COLUMNS)]
    lines += [",".join(io.fmt(v) for v in r.row()) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_records_csv(path) -> tuple[Record, ...]:
    lines = Path(path).read_text().strip().split("\n")
    if lines[0] != ",".join(RECORD_COLUMNS):
        raise ValueError(f"unexpected records header: {lines[0]!r}")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(RECORD_COLUMNS):
            raise ValueError(f"malformed record row: {line!r}")
        out.append(
            Record(
                rep=int(parts[0]),
                n=int(parts[1]),
                p=int(parts[2]),
                s0=int(parts[3]),
                lambda2=float(parts[4]),
                s_hat=int(parts[5]),
                frob_err=float(parts[6]),
                order_compatible=bool(int(parts[7])),
                support_exact=bool(int(parts[8])),
                shd=int(parts[9]),
                ms=float(parts[10]),
            )
        )
    return tuple(out)


def write_outputs(report: ExperimentReport, out_dir, gnuplot: bool = False) -> dict:
    """records.csv + report.json + manifest.json (+ curve.dat), return paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": out / "records.csv",
        "report": out / "report.json",
        "manifest": out / "manifest.json",
    }
    write_records_csv(paths["records"], report.records)
    io.write_json(paths["report"], report.to_dict())
    io.write_json(
        paths["manifest"],
        io.build_manifest(
            report.config.to_dict(),
            len(report.records),
            active_backend(),
            report.config.seed,
        ),
    )
    if gnuplot:
        paths["curve"] = out / "curve.dat"
        rows = [
            f"{row['n']} {io.fmt(row['median_frob_err'])}"
            for row in report.aggregates["per_n"]
        ]
        paths["curve"].write_text("\n".join(rows) + "\n")
    return {k: str(v) for k, v in paths.items()}
