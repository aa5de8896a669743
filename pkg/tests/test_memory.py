import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from heavyhex_qec.experiments.fit import fit_scaling
from heavyhex_qec.experiments.memory import (
    SweepRow,
    estimate_crossing,
    per_round_error,
    per_round_rate,
    run_memory_experiment,
    synthetic_rows,
    threshold_sweep,
)
from heavyhex_qec.experiments.seeding import job_seed


def test_zero_noise_gives_zero_rate():
    row = run_memory_experiment(3, "Z", 0.0, shots=100, seed=1)
    assert row.failures == 0 and row.p_L == 0.0


def test_below_threshold_larger_code_is_better():
    d3 = run_memory_experiment(3, "Z", 1e-3, shots=20_000, seed=1)
    d5 = run_memory_experiment(5, "Z", 1e-3, shots=20_000, seed=2)
    assert d3.p_L > d5.p_L


def test_above_threshold_ordering_reverses():
    d3 = run_memory_experiment(3, "Z", 8e-3, shots=4000, seed=3)
    d5 = run_memory_experiment(5, "Z", 8e-3, shots=4000, seed=4)
    assert d5.p_L > d3.p_L


def test_memory_run_is_reproducible():
    a = run_memory_experiment(3, "X", 4e-3, shots=3000, seed=7)
    b = run_memory_experiment(3, "X", 4e-3, shots=3000, seed=7, workers=2)
    assert a == b
    assert run_memory_experiment(3, "X", 4e-3, shots=3000, seed=8) != a


@given(st.floats(1e-6, 0.2), st.integers(1, 15))
def test_per_round_rate_inverts_the_repeated_channel(p, r):
    p_shot = (1 - (1 - 2 * p) ** r) / 2
    assert math.isclose(per_round_rate(p_shot, r), p, rel_tol=1e-7)


def test_per_round_error_positive():
    assert per_round_error(0.1, 1000, 3) > 0
    assert per_round_rate(0.0, 5) == 0.0


@pytest.mark.parametrize("p_th,a", [(0.0031, 0.7), (0.0037, 1.0), (0.005, 0.8)])
def test_synthetic_crossing_recovered(p_th, a):
    rows = synthetic_rows([3, 5, 7], [0.002, 0.003, 0.004, 0.005, 0.006], p_th, 0.1, a)
    est = estimate_crossing(rows, "Z")
    assert est.status == "ok"
    assert abs(est.value - p_th) / p_th < 0.02


def test_no_crossing_reported():
    rows = synthetic_rows([3, 5], [0.001, 0.002], 0.01, 0.1, 1.0)
    est = estimate_crossing(rows, "Z")
    assert est.value is None and "no crossing" in est.status


def test_sweep_grid_validation():
    with pytest.raises(ValueError):
        threshold_sweep([3], [0.001, 0.002], 10)
    with pytest.raises(ValueError):
        threshold_sweep([3, 5], [0.001], 10)


def test_small_sweep_csv_shape():
    res = threshold_sweep([3, 5], [0.0, 0.004], 200, bases=("Z",), seed=3)
    lines = res.to_csv().splitlines()
    assert lines[0] == "basis,d,p,shots,failures,p_L,err,rounds,p_shot"
    assert len(lines) == 5
    assert all(r.p_L == 0 for r in res.rows if r.p == 0)


def test_fit_recovers_exact_parameters():
    rows = synthetic_rows([3, 5, 7], [5e-4, 1e-3, 1.5e-3, 2e-3], 0.0035, 0.1, 0.8)
    fit = fit_scaling(rows, 0.0035)
    assert abs(fit.C - 0.1) < 1e-6 and abs(fit.a - 0.8) < 1e-6
    assert not fit.non_scaling


def test_flat_data_flagged_non_scaling():
    rows = [SweepRow("Z", d, p, d, 10**6, 1000, 1e-3, 1e-3, 3e-5) for d in (3, 5, 7) for p in (5e-4, 1e-3, 2e-3)]
    fit = fit_scaling(rows, 0.004)
    assert abs(fit.a) < 1e-9 and fit.non_scaling


def test_fit_needs_two_distances_and_sub_threshold_rows():
    rows = synthetic_rows([3], [5e-4, 1e-3], 0.0035, 0.1, 0.8)
    with pytest.raises(ValueError):
        fit_scaling(rows, 0.0035)
    rows = synthetic_rows([3, 5], [5e-4, 4e-3], 0.0035, 0.1, 0.8)
    with pytest.raises(ValueError):
        fit_scaling(rows, 0.0035)


def test_fit_uncertainty_shrinks_with_statistics():
    rng = np.random.default_rng(0)

    def noisy(shots):
        rows = []
        for r in synthetic_rows([3, 5, 7], [5e-4, 1e-3, 2e-3], 0.0035, 0.1, 0.8, shots=shots):
            k = rng.binomial(shots, r.p_L)
            rows.append(SweepRow("Z", r.d, r.p, r.rounds, shots, k, k / shots, k / shots,
                                 math.sqrt(max(k, 1)) / shots))
        return fit_scaling(rows, 0.0035)

    assert noisy(10**8).a_err < noisy(10**6).a_err


def test_job_seeds_are_distinct_and_stable():
    seeds = {job_seed(1, "memory", b, d, p) for b in "ZX" for d in (3, 5, 7) for p in (0.002, 0.003)}
    assert len(seeds) == 12
    assert job_seed(1, "memory", "Z", 3, 0.002) == job_seed(1, "memory", "Z", 3, 0.002)
    assert job_seed(1, "x") != job_seed(2, "x")
