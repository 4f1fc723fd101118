"""Experiment configs, per-replication records, and their outputs.

Claims:
    - config parsing is strict (unknown keys, missing keys, bad rules) and
      the penalty rules evaluate to their formulas
    - records are pure functions of (config, n index, rep): reruns and
      worker counts only change the ms column
    - the CSV round-trips records exactly and aggregates recompute from the
      CSV alone
    - degenerate penalties behave as forced: a huge fixed penalty empties
      every fit, population input with a tiny penalty recovers supports
    - frobenius_error measures against the representation of the target at
      the fitted ordering
"""

import json

import numpy as np
import pytest

from l0dag import (
    CovarianceMatrix,
    ExperimentConfig,
    aggregate,
    covariance_of,
    frobenius_error,
    run_experiment,
)
from l0dag.experiments import (
    RECORD_COLUMNS,
    derived_seed,
    read_records_csv,
    run_record,
    true_model,
    write_outputs,
    write_records_csv,
)
from l0dag.search import fit_exact
from l0dag.scoring import build_score_table
from l0dag.simulate import ar1_model

BASE = {
    "kind": "rate",
    "p": 4,
    "n_grid": [100, 200],
    "lambda2_rule": {"type": "c_logp_over_n", "c": 2.0},
    "mode": "profile",
    "method": "exact",
    "reps": 3,
    "seed": 7,
    "beta0": 0.5,
}


def cfg(**over):
    d = dict(BASE)
    d.update(over)
    return ExperimentConfig.from_dict(d)


# -- config parsing ----------------------------------------------------------


def test_config_roundtrip_and_rules():
    c = cfg()
    assert c.n_grid == (100, 200)
    np.testing.assert_allclose(c.lambda2_for(100), 2.0 * np.log(4) / 100)
    fixed = cfg(lambda2_rule={"type": "fixed", "value": 0.25})
    assert fixed.lambda2_for(999) == 0.25
    back = ExperimentConfig.from_dict(c.to_dict())
    assert back == c


def test_config_rejects_unknown_and_missing_keys():
    with pytest.raises(ValueError, match="unknown"):
        cfg(extra=1)
    d = dict(BASE)
    del d["mode"]
    with pytest.raises(ValueError, match="missing"):
        ExperimentConfig.from_dict(d)


def test_config_rejects_bad_values():
    with pytest.raises(ValueError, match="kind"):
        cfg(kind="speed")
    with pytest.raises(ValueError, match="mode"):
        cfg(mode="aic")
    with pytest.raises(ValueError, match="method"):
        cfg(method="anneal")
    with pytest.raises(ValueError):
        cfg(n_grid=[1, 100])
    with pytest.raises(ValueError):
        cfg(reps=0)
    with pytest.raises(ValueError, match="exactly one"):
        cfg(s0=3)  # both beta0 and s0
    with pytest.raises(ValueError, match="exactly one"):
        cfg(beta0=None)
    with pytest.raises(ValueError, match="rule"):
        cfg(lambda2_rule={"type": "c_logp_over_n"})
    with pytest.raises(ValueError, match="rule"):
        cfg(lambda2_rule={"type": "fixed", "value": -1.0})
    with pytest.raises(ValueError, match="type"):
        cfg(lambda2_rule={"type": "sqrt"})


# -- seeds and generators ----------------------------------------------------


def test_derived_seed_is_stable_and_keyed():
    a = derived_seed(7, (0, 1, 2))
    assert a == derived_seed(7, (0, 1, 2))
    assert a != derived_seed(7, (0, 1, 3))
    assert a != derived_seed(8, (0, 1, 2))
    assert a.bit_length() <= 128


def test_true_model_chain_is_rep_independent():
    c = cfg()
    m0 = true_model(c, 0, 0)
    m1 = true_model(c, 1, 2)
    np.testing.assert_array_equal(m0.B, m1.B)


def test_true_model_random_redraws_per_rep():
    c = cfg(kind="equalvar", beta0=None, s0=4, p=5)
    a = true_model(c, 0, 0)
    b = true_model(c, 0, 1)
    assert a.s_edges == b.s_edges == 4
    assert not np.array_equal(a.B, b.B)


# -- records -----------------------------------------------------------------


def test_run_record_fields_and_determinism():
    c = cfg(reps=1)
    r1 = run_record(c, 0, 0)
    r2 = run_record(c, 0, 0)
    assert r1.n == 100 and r1.p == 4 and r1.s0 == 3
    np.testing.assert_allclose(r1.lambda2, 2.0 * np.log(4) / 100)
    # everything except wall time reproduces exactly
    assert [r1.row()[:-1]] == [r2.row()[:-1]]
    assert r1.ms > 0


def test_record_row_matches_columns():
    r = run_record(cfg(reps=1), 0, 0)
    assert len(r.row()) == len(RECORD_COLUMNS)
    assert r.row()[0] == r.rep
    assert r.row()[-1] == r.ms


def test_huge_penalty_empties_the_fit():
    c = cfg(lambda2_rule={"type": "fixed", "value": 1e6})
    r = run_record(c, 0, 0)
    assert r.s_hat == 0
    assert not r.support_exact


def test_population_equalvar_recovers_support():
    c = ExperimentConfig.from_dict(
        {
            "kind": "equalvar",
            "p": 5,
            "s0": 5,
            "n_grid": [100],
            "lambda2_rule": {"type": "fixed", "value": 1e-6},
            "mode": "equalvar",
            "method": "exact",
            "reps": 5,
            "seed": 3,
            "population": True,
        }
    )
    report = run_experiment(c)
    assert all(r.support_exact for r in report.records)
    assert all(r.shd == 0 for r in report.records)
    assert all(r.frob_err < 1e-12 for r in report.records)


def test_equalvar_rejects_heterogeneous_noise():
    c = ExperimentConfig.from_dict(
        {
            "kind": "equalvar",
            "p": 4,
            "beta0": 0.5,  # chain has omega != 1
            "n_grid": [50],
            "lambda2_rule": {"type": "fixed", "value": 0.1},
            "mode": "equalvar",
            "method": "exact",
            "reps": 1,
            "seed": 0,
        }
    )
    with pytest.raises(ValueError, match="unit noise"):
        run_record(c, 0, 0)


def test_frobenius_error_zero_at_truth():
    model = ar1_model(4, 0.5)
    sigma0 = covariance_of(model)
    fit = fit_exact(build_score_table(sigma0, lambda2=0.05, max_parents=2))
    assert frobenius_error(fit, sigma0) < 1e-16
    with pytest.raises(ValueError):
        frobenius_error(fit, CovarianceMatrix(np.eye(5)))


# -- parallel determinism and CSV --------------------------------------------


def test_worker_count_does_not_change_records(tmp_path):
    c = cfg(reps=2)
    serial = run_experiment(c, workers=None)
    parallel = run_experiment(c, workers=2)
    strip = lambda rs: [r.row()[:-1] for r in rs]
    assert strip(serial.records) == strip(parallel.records)
    # byte-level check through the CSV with the ms column removed
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    write_records_csv(pa, serial.records)
    write_records_csv(pb, parallel.records)
    drop_ms = lambda text: "\n".join(
        ",".join(line.split(",")[:-1]) for line in text.splitlines()
    )
    assert drop_ms(pa.read_text()) == drop_ms(pb.read_text())


def test_csv_roundtrip_exact(tmp_path):
    report = run_experiment(cfg(reps=2))
    path = tmp_path / "records.csv"
    write_records_csv(path, report.records)
    back = read_records_csv(path)
    assert back == report.records  # float repr round-trips float64 exactly
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    with pytest.raises(ValueError, match="header"):
        read_records_csv(bad)


def test_aggregates_recompute_from_csv(tmp_path):
    report = run_experiment(cfg(reps=3))
    path = tmp_path / "records.csv"
    write_records_csv(path, report.records)
    again = aggregate(read_records_csv(path))
    assert again == report.aggregates
    per_n = report.aggregates["per_n"]
    assert [row["n"] for row in per_n] == [100, 200]
    for row in per_n:
        for key in (
            "median_frob_err",
            "median_s_hat",
            "median_shd",
            "shat_ratio_freq",
            "order_compatible_freq",
            "support_exact_freq",
        ):
            assert key in row
    assert report.aggregates["slope_log_err_vs_log_n"] is not None


def test_aggregate_handles_zero_s0_band():
    from l0dag.experiments import Record

    rows = [
        Record(rep=0, n=10, p=3, s0=0, lambda2=0.1, s_hat=0, frob_err=1.0,
               order_compatible=True, support_exact=True, shd=0, ms=1.0),
        Record(rep=1, n=10, p=3, s0=0, lambda2=0.1, s_hat=2, frob_err=1.0,
               order_compatible=True, support_exact=False, shd=2, ms=1.0),
    ]
    agg = aggregate(rows)
    assert agg["per_n"][0]["shat_ratio_freq"] == 0.5
    assert agg["slope_log_err_vs_log_n"] is None  # single n


def test_kind_dispatch_guards():
    from l0dag.experiments import run_equal_variance_experiment, run_rate_experiment

    with pytest.raises(ValueError, match="rate"):
        run_equal_variance_experiment(cfg())
    c = cfg(kind="equalvar", mode="equalvar", beta0=None, s0=3)
    with pytest.raises(ValueError, match="equalvar"):
        run_rate_experiment(c)


# -- outputs -----------------------------------------------------------------


def test_write_outputs_files(tmp_path):
    report = run_experiment(cfg(reps=1))
    paths = write_outputs(report, tmp_path / "out", gnuplot=True)
    assert set(paths) == {"records", "report", "manifest", "curve"}
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["record_count"] == 2
    assert rep["config"]["p"] == 4
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["package"] == "l0dag"
    assert man["gaussian"] == "philox4x64-10+inverse-cdf"
    assert man["records"] == 2
    assert man["seed"] == 7
    assert len(man["config_sha256"]) == 64
    curve = (tmp_path / "out" / "curve.dat").read_text().splitlines()
    assert len(curve) == 2
    assert curve[0].startswith("100 ")
    # manifest has no timestamps: rerunning gives identical bytes
    paths2 = write_outputs(report, tmp_path / "out2", gnuplot=False)
    assert (tmp_path / "out" / "manifest.json").read_text() == (
        tmp_path / "out2" / "manifest.json"
    ).read_text()
