import math

import numpy as np
import pytest

from pwnorm import bases as B
from pwnorm.experiments import (
    CSV_HEADER,
    EXPERIMENTS,
    certify_discrete_partition,
    certify_example3,
    certify_example4,
    certify_example5,
    certify_example_lp,
    certify_theorem1,
    generated_bases,
    haar_hand_values,
    holds,
    khintchine_ratio,
    random_coefficients,
    rosenthal_ratio,
    run_experiment,
)
from pwnorm.stepfn import StepFunction


def test_holds_relations():
    assert holds(1.0, 1.0 + 1e-12, "equal", 1e-10)
    assert not holds(1.0, 1.1, "equal", 1e-10)
    assert holds(1.0, 1.0 - 1e-11, "leq", 1e-10)
    assert not holds(1.0, 0.9, "leq", 1e-10)
    assert holds(2.0, 1.0, "geq", 0)
    assert not holds(math.nan, 1.0, "equal", 1)
    with pytest.raises(ValueError):
        holds(1, 1, "lt", 0)


def test_random_coefficients_never_all_zero():
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert np.any(random_coefficients(rng, 3, sparsity=0.99))


def test_theorem1_reports_pass_on_every_generated_basis():
    for name, basis in generated_bases(4.0).items():
        r = certify_theorem1(basis, trials=20, seed=1)
        assert r.passed, name
        assert r.relation == "equal" and r.metadata["max_rel_discrepancy"] <= 1e-9
        assert r.metadata["checks"]["nested_samples_monotone"]


def test_example_lp_indicators_and_disjoint():
    ind = B.disjoint_indicators([(1, 0), (1, 1)], 4.0)
    r = certify_example_lp(ind, trials=30, seed=2)
    assert r.passed and "conditional_expectation_reduction" in r.metadata["checks"]
    fns = [StepFunction(2, [3, 1, 0, 0]), StepFunction(2, [0, 0, 1, -2])]
    r = certify_example_lp(B.disjointly_supported(fns, 3.0), trials=30, seed=2)
    assert r.passed and "conditional_expectation_reduction" not in r.metadata["checks"]
    with pytest.raises(ValueError):
        certify_example_lp(B.rademacher_basis(2, 4.0), trials=2)


def test_example3_hand_case():
    r = certify_example3([(1, 0), (1, 1)], 2, trials=30, seed=0, p=4.0)
    assert r.passed and r.N == 4
    assert r.metadata["checks"]["squares_independent_of_j"]


def test_example4_bounds_and_k_hat():
    r = certify_example4(B.rademacher_basis(3, 4.0), trials=30, seed=0)
    assert r.passed and r.relation == "leq"
    assert 0 < r.metadata["K_hat_min"] <= r.metadata["K_hat_max"] < math.inf
    with pytest.raises(ValueError):
        certify_example4(B.haar_basis(2, 4.0), trials=2)


def test_rosenthal_ratio_rademacher_single_term():
    basis = B.rademacher_basis(2, 4.0)
    assert rosenthal_ratio(np.array([2.0, 0.0]), basis) == pytest.approx(1.0, rel=1e-14)


def test_discrete_partition_with_brute_force():
    r = certify_discrete_partition(B.rademacher_basis(3, 3.0), trials=10, seed=0)
    assert r.passed
    assert len(r.metadata["brute_force"]) == 3
    for entry in r.metadata["brute_force"]:
        assert entry["grid"] == pytest.approx(entry["closed_form"], rel=1e-8)


def test_haar_hand_values_exact():
    assert max(haar_hand_values().values()) <= 1e-12


def test_example5_small():
    r = certify_example5(3, 4.0, trials=20, seed=0)
    assert r.passed
    m = r.metadata
    assert m["oracle_max_rel_discrepancy"] <= 1e-10
    assert 1.0 <= m["full_over_truncated_max"] < math.inf
    assert m["truncated_over_square_min"] > 0


def test_khintchine_rademacher_pair():
    r = khintchine_ratio(B.rademacher_basis(2, 4.0), trials=10, seed=0)
    assert r.passed and r.metadata["max_ell_2_discrepancy"] <= 1e-12
    r = khintchine_ratio(B.haar_basis(2, 4.0), trials=10, seed=0)
    assert r.passed and r.metadata["ratio_min"] > 0


def test_report_serialization():
    r = certify_example3([(1, 0), (1, 1)], 2, trials=5, seed=0, p=4.0)
    d = r.to_dict()
    assert d["pass"] is True and len(d["trials"]) == 5
    assert set(d) >= {"name", "p", "N", "lhs", "rhs", "ratio", "metadata"}
    rows = r.csv_rows()
    assert len(rows) == 5 and len(rows[0]) == len(CSV_HEADER)


def test_run_experiment_deterministic():
    for name in EXPERIMENTS:
        a = [r.to_dict() for r in run_experiment(name, 3.0, seed=5, trials=4, max_level=3)]
        b = [r.to_dict() for r in run_experiment(name, 3.0, seed=5, trials=4, max_level=3)]
        assert a == b
    with pytest.raises(KeyError):
        run_experiment("nope", 3.0, 0)
