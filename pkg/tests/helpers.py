"""Shared test utilities: the bundled reference instance and model comparison."""

import numpy as np
from scipy.optimize import linear_sum_assignment

from expsum import DirectionBasis, ExponentialModel, Term, canonicalize

TP = 2 * np.pi


def reference_model() -> ExponentialModel:
    """The bundled 4-term bivariate demonstration model."""
    return ExponentialModel(
        2,
        (
            Term(1.7 * np.exp(1j * TP / 10), (-0.5, 1 + 1j * TP * 0.5)),
            Term(
                1.1 * np.exp(1j * TP / 20),
                (0.1 + 1j * TP * 3.4, 1.5 + 1j * TP * 5.2),
            ),
            Term(0.9, (0.1 + 1j * TP * 3.4, -0.5 + 1j * TP * 12.6)),
            Term(
                9.2 * np.exp(1j * TP / 2),
                (-2.5 + 1j * TP * 23.2, -10 + 1j * TP * 82.3),
            ),
        ),
    )


def scenario_one_basis() -> DirectionBasis:
    return DirectionBasis(2, ((0.01, 0.01), (-0.01, 0.01)))


def scenario_two_basis() -> DirectionBasis:
    return DirectionBasis(2, ((0.03, 0.0), (0.0, 0.01)))


def model_error(model_a: ExponentialModel, model_b: ExponentialModel) -> float:
    """Worst relative error between optimally matched terms of two models.

    Terms are paired by optimal assignment on the exponent-vector distance
    matrix; the reported error is the maximum over exponent-vector errors
    (relative to the exponent norm) and coefficient errors.
    """
    a = canonicalize(model_a)
    b = canonicalize(model_b)
    assert a.dimension == b.dimension
    if a.n_terms != b.n_terms:
        return float("inf")
    ea, eb = a.exponent_matrix(), b.exponent_matrix()
    cost = np.linalg.norm(ea[:, None, :] - eb[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    ca, cb = a.coefficients(), b.coefficients()
    worst = 0.0
    for r, c in zip(rows, cols):
        scale = max(float(np.linalg.norm(ea[r])), 1e-12)
        worst = max(worst, float(cost[r, c]) / scale)
        worst = max(worst, abs(ca[r] - cb[c]) / max(abs(ca[r]), 1e-12))
    return worst


def fold_to_principal(model: ExponentialModel, basis: DirectionBasis) -> ExponentialModel:
    """The representative of the model identifiable from this sampling geometry.

    Each inner product's imaginary part is reduced into the principal strip
    (-pi, pi] and the exponents are reassembled.  Sampling along integer
    multiples of the directions cannot distinguish a model from its folded
    representative, so recovered models are compared against this fold.
    """
    exponents = model.exponent_matrix()
    matrix = basis.matrix()
    inner = exponents @ matrix.T
    im = np.mod(inner.imag + np.pi, 2 * np.pi) - np.pi
    im = np.where(np.isclose(im, -np.pi), np.pi, im)
    folded = inner.real + 1j * im
    phis = np.linalg.solve(matrix, folded.T).T
    return canonicalize(
        ExponentialModel(
            model.dimension,
            tuple(
                Term(t.coefficient, tuple(row))
                for t, row in zip(model.terms, phis)
            ),
        )
    )
