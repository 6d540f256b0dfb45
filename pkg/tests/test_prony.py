"""Univariate engine: sparsity detection, node fits, logs, coefficients."""

import numpy as np
import pytest

from expsum import (
    EquidistantSequence,
    InvalidNodeError,
    RankMismatchError,
    SparsityUndetectedError,
    SyntheticOracle,
    detect_sparsity,
    fit_coefficients,
    fit_nodes,
    fit_sequence,
    take_logs,
)
from expsum.oracle import SequenceStream

from helpers import reference_model, scenario_two_basis


def _sequence(values, step=(1.0,), origin=None):
    if origin is None:
        origin = tuple(0.0 for _ in step)
    return EquidistantSequence(tuple(values), tuple(step), origin)


def _planted_sequence(logs, coeffs, count):
    logs = np.asarray(logs, dtype=complex)
    coeffs = np.asarray(coeffs, dtype=complex)
    return _sequence(
        [coeffs @ np.exp(logs * s) for s in range(count)]
    )


class _CountingSupplier:
    def __init__(self, values):
        self.values = list(values)
        self.calls = 0

    def __call__(self, s):
        self.calls = max(self.calls, s + 1)
        return self.values[s]


def test_detect_sparsity_constant_sequence():
    supplier = _CountingSupplier([3.0] * 10)
    decision = detect_sparsity(supplier, max_terms=4)
    assert decision.rank == 1
    assert decision.confident
    assert supplier.calls == 3


def test_detect_sparsity_reference_collision_scenario_uses_seven_samples():
    oracle = SyntheticOracle(reference_model())
    stream = SequenceStream(
        oracle, np.zeros(2), scenario_two_basis().direction(0)
    )
    decision = detect_sparsity(stream.value_at, max_terms=6)
    assert decision.rank == 3
    assert oracle.ledger.count == 7


def test_detect_sparsity_random_four_term_model_consumes_nine_samples():
    rng = np.random.default_rng(10)
    logs = rng.standard_normal(4) * 0.2 + 1j * rng.uniform(-2, 2, 4)
    coeffs = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    seq = _planted_sequence(logs, coeffs, 16)
    supplier = _CountingSupplier(seq.values)
    decision = detect_sparsity(supplier, max_terms=7)
    assert decision.rank == 4
    assert decision.confident
    assert supplier.calls == 9


def test_detect_sparsity_exhaustion_raises():
    rng = np.random.default_rng(11)
    logs = rng.standard_normal(5) * 0.2 + 1j * rng.uniform(-2, 2, 5)
    coeffs = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    seq = _planted_sequence(logs, coeffs, 16)
    with pytest.raises(SparsityUndetectedError):
        detect_sparsity(_CountingSupplier(seq.values), max_terms=3)


def test_fit_nodes_single_term():
    seq = _sequence([2.0, 2.0 * np.e, 2.0 * np.e**2])
    nodes = fit_nodes(seq, 1)
    assert np.allclose(nodes, [np.e])


def test_fit_nodes_reference_base_logs():
    oracle = SyntheticOracle(reference_model())
    stream = SequenceStream(oracle, np.zeros(2), np.array([0.01, 0.01]))
    stream.ensure(8)
    nodes = fit_nodes(stream.sequence(), 4)
    logs = np.sort_complex(take_logs(nodes))
    expected = np.sort_complex(
        np.array(
            [
                0.005 + 0.03142j,
                0.016 + 0.5404j,
                -0.004 + 1.005j,
                -0.125 + 0.3456j,
            ]
        )
    )
    assert np.allclose(logs, expected, atol=5e-4)


def test_fit_nodes_methods_agree_and_match_planted():
    rng = np.random.default_rng(12)
    logs = rng.standard_normal(3) * 0.2 + 1j * rng.uniform(-2, 2, 3)
    coeffs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    seq = _planted_sequence(logs, coeffs, 6)
    eig_nodes = np.sort_complex(fit_nodes(seq, 3, "generalized_eig"))
    poly_nodes = np.sort_complex(fit_nodes(seq, 3, "hankel_polynomial"))
    planted = np.sort_complex(np.exp(logs))
    assert np.allclose(eig_nodes, poly_nodes, atol=1e-6)
    assert np.allclose(eig_nodes, planted, rtol=1e-8)


def test_fit_nodes_wrong_nu_raises_rank_mismatch():
    seq = _planted_sequence([0.1], [2.0], 8)
    with pytest.raises(RankMismatchError):
        fit_nodes(seq, 3, "generalized_eig")
    with pytest.raises(RankMismatchError):
        fit_nodes(seq, 3, "hankel_polynomial")


def test_take_logs_unit_node():
    assert np.allclose(take_logs([1.0]), [0.0])


def test_take_logs_reference_value_roundtrip():
    z = 0.005 + 0.03142j
    assert np.allclose(take_logs([np.exp(z)]), [z])


def test_take_logs_branch_cut_convention():
    assert np.allclose(take_logs([-1.0]), [1j * np.pi])


def test_take_logs_zero_node_rejected():
    with pytest.raises(InvalidNodeError):
        take_logs([0.0])


def test_take_logs_exp_roundtrip_inside_strip():
    rng = np.random.default_rng(13)
    logs = rng.standard_normal(64) + 1j * rng.uniform(-np.pi * 0.999, np.pi * 0.999, 64)
    assert np.allclose(take_logs(np.exp(logs)), logs)


def test_fit_coefficients_single_unit_node():
    seq = _sequence([5.0, 5.0])
    coeffs = fit_coefficients([0.0], seq)
    assert np.allclose(coeffs, [5.0])


def test_fit_coefficients_square_mode_matches_least_squares_on_exact_data():
    rng = np.random.default_rng(14)
    logs = rng.standard_normal(4) * 0.2 + 1j * rng.uniform(-2, 2, 4)
    coeffs = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    seq = _planted_sequence(logs, coeffs, 8)
    ls = fit_coefficients(logs, seq, mode="least_squares")
    for k in (0, 2, 4):
        sq = fit_coefficients(logs, seq, mode="square_k", k=k)
        assert np.allclose(sq, ls, atol=1e-9)
        assert np.allclose(sq, coeffs, rtol=1e-8)


def test_fit_coefficients_reference_alpha1():
    oracle = SyntheticOracle(reference_model())
    stream = SequenceStream(oracle, np.zeros(2), np.array([0.01, 0.01]))
    stream.ensure(8)
    seq = stream.sequence()
    nodes = fit_nodes(seq, 4)
    logs = take_logs(nodes)
    coeffs = fit_coefficients(logs, seq)
    # alpha paired with the node whose log is closest to the first base log
    j = int(np.argmin(np.abs(logs - (0.005 + 0.03142j))))
    expected = 1.7 * np.exp(1j * 2 * np.pi * 0.1)
    assert abs(coeffs[j] - expected) / abs(expected) < 5e-4


def test_roundtrip_random_admissible_models():
    # nodes separated, moduli of coefficients in [0.1, 10]: 2n samples
    # reproduce the sequence parameters to high accuracy
    rng = np.random.default_rng(15)
    for trial in range(25):
        n = int(rng.integers(1, 9))
        while True:
            logs = rng.uniform(-0.3, 0.3, n) + 1j * rng.uniform(
                -0.98 * np.pi, 0.98 * np.pi, n
            )
            nodes = np.exp(logs)
            if n == 1:
                break
            gaps = np.abs(nodes[:, None] - nodes[None, :])
            np.fill_diagonal(gaps, np.inf)
            if gaps.min() >= 1e-3:
                break
        moduli = np.exp(rng.uniform(np.log(0.1), np.log(10), n))
        coeffs = moduli * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        seq = _planted_sequence(logs, coeffs, 2 * n)
        fit = fit_sequence(seq, n)
        order_got = np.argsort(np.asarray(fit.logs).imag)
        order_want = np.argsort(logs.imag)
        got_logs = np.asarray(fit.logs)[order_got]
        got_coeffs = np.asarray(fit.coefficients)[order_got]
        assert np.allclose(got_logs, logs[order_want], atol=1e-6)
        assert np.allclose(got_coeffs, coeffs[order_want], rtol=1e-6, atol=1e-8)
