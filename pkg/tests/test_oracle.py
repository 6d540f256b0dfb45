"""Sampling sources: ledger accounting, noise, tabulated files, planning."""

import numpy as np
import pytest

from expsum import (
    DimensionMismatchError,
    ExponentialModel,
    MissingSampleError,
    NoisyOracle,
    SyntheticOracle,
    TabulatedOracle,
    Term,
    budget_bound,
    evaluate,
    identity_basis,
    plan_points,
    recover_known_n,
)
from expsum.oracle import (
    read_points_file,
    read_samples_file,
    write_points_file,
    write_samples_file,
)

from helpers import reference_model, scenario_one_basis


def test_synthetic_oracle_single_term():
    model = ExponentialModel(2, (Term(1.0, (0.0, 0.0)),))
    oracle = SyntheticOracle(model)
    assert oracle.sample([3.0, -1.0]) == pytest.approx(1.0 + 0j)
    assert oracle.ledger.count == 1


def test_synthetic_oracle_reference_first_sample_is_coefficient_sum():
    oracle = SyntheticOracle(reference_model())
    value = oracle.sample(np.zeros(2))
    expected = sum(t.coefficient for t in reference_model().terms)
    assert value == pytest.approx(expected)


def test_oracle_rejects_wrong_dimension():
    oracle = SyntheticOracle(reference_model())
    with pytest.raises(DimensionMismatchError):
        oracle.sample([1.0])


def test_ledger_counts_known_n_run_exactly():
    oracle = SyntheticOracle(reference_model())
    recover_known_n(oracle, scenario_one_basis(), 4)
    assert oracle.ledger.count == 12


def test_noisy_oracle_zero_sigma_is_transparent():
    base = SyntheticOracle(reference_model())
    noisy = NoisyOracle(SyntheticOracle(reference_model()), sigma=0.0, seed=1)
    point = np.array([0.02, 0.01])
    assert noisy.sample(point) == base.sample(point)


def test_noisy_oracle_seeded_reproducibility():
    def draw():
        noisy = NoisyOracle(
            SyntheticOracle(reference_model()), sigma=1e-3, seed=42
        )
        return [noisy.sample(np.array([0.01 * s, 0.0])) for s in range(5)]

    assert draw() == draw()


def test_noisy_oracle_relative_scale():
    model = ExponentialModel(1, (Term(1000.0, (0.0,)),))
    noisy = NoisyOracle(SyntheticOracle(model), sigma=1e-3, seed=0, relative=True)
    value = noisy.sample(np.zeros(1))
    assert abs(value - 1000.0) < 10.0
    assert abs(value - 1000.0) > 1e-4


def test_tabulated_oracle_hit_and_miss():
    table = TabulatedOracle(2)
    table.add([0.25, 0.5], 1.0 + 2.0j)
    assert table.sample([0.25, 0.5]) == 1.0 + 2.0j
    # within match_tol of the stored point
    assert table.sample([0.25 + 5e-10, 0.5]) == 1.0 + 2.0j
    with pytest.raises(MissingSampleError) as err:
        table.sample([0.1, 0.1])
    assert "0.1" in str(err.value)


def test_samples_file_roundtrip(tmp_path):
    model = reference_model()
    points = [np.array([0.01 * s, 0.003 * s]) for s in range(6)]
    rows = [(tuple(p), evaluate(model, p)) for p in points]
    path = tmp_path / "samples.txt"
    write_samples_file(path, 2, rows)
    dim, parsed = read_samples_file(path)
    assert dim == 2
    assert len(parsed) == 6
    for (p0, v0), (p1, v1) in zip(rows, parsed):
        assert np.allclose(p0, p1)
        assert v0 == pytest.approx(v1)


def test_samples_file_comments_ignored(tmp_path):
    path = tmp_path / "samples.txt"
    path.write_text("# header comment\ndim=1\n0.0 1.0 0.5  # trailing\n")
    dim, rows = read_samples_file(path)
    assert dim == 1
    assert rows == [((0.0,), 1.0 + 0.5j)]


def test_points_file_roundtrip(tmp_path):
    points = [(0.0, 1.0), (2.0, -3.5)]
    path = tmp_path / "points.txt"
    write_points_file(path, 2, points)
    dim, parsed = read_points_file(path)
    assert dim == 2
    assert parsed == points


def test_plan_points_univariate_known_budget():
    basis = identity_basis(1)
    points = plan_points(basis, 2, "known_n")
    assert np.allclose(points, [[0.0], [1.0], [2.0], [3.0]])


def test_plan_points_known_matches_pipeline_requests():
    basis = scenario_one_basis()
    planned = {tuple(np.round(p, 12)) for p in plan_points(basis, 4, "known_n")}
    oracle = SyntheticOracle(reference_model())
    recover_known_n(oracle, basis, 4)
    requested = {
        tuple(np.round(p, 12)) for p, _ in oracle.ledger.entries
    }
    assert planned == requested
    assert len(planned) == 12


def test_plan_points_unknown_length_equals_budget_bound():
    basis = scenario_one_basis()
    points = plan_points(basis, 4, "unknown_n_worst_case")
    assert len(points) == budget_bound(2, 4)


def test_plan_points_unknown_covers_adaptive_collision_run():
    # every point an adaptive run requests under default schedules must be
    # in the plan, otherwise offline sample collection cannot work
    from expsum import RecoveryConfig, recover_unknown_n
    from expsum.synth import collision_instance, random_basis

    for seed, sizes, dim in ((0, (2, 2), 2), (1, (3, 1), 2), (2, (2, 1), 3)):
        rng = np.random.default_rng(7000 + seed)
        basis = random_basis(dim, rng)
        model = collision_instance(dim, rng, basis, pile_sizes=sizes)
        n = model.n_terms
        planned = {
            tuple(np.round(p, 10))
            for p in plan_points(basis, n, "unknown_n_worst_case")
        }
        oracle = SyntheticOracle(model)
        recover_unknown_n(oracle, basis, RecoveryConfig(max_terms=8))
        requested = {
            tuple(np.round(p, 10)) for p, _ in oracle.ledger.entries
        }
        assert requested <= planned
