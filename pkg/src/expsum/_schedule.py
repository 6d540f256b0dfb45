"""Sample-budget arithmetic shared by the oracle planner and the drivers."""

from __future__ import annotations

import numpy as np

from .errors import InputError

# Engineering constant multiplying the worst-case data-complexity term.
# Covers the factor-of-two Prony pairs, the +1 rank certifications, and the
# drag-along cost of advancing every pile's schedule together.
BUDGET_CONSTANT = 4


def budget_bound(d: int, n: int, constant: int = BUDGET_CONSTANT) -> int:
    """Default sample cap for an adaptive run: C (d+1) max_nu nu (n - nu + 1)."""
    if d < 1 or n < 1:
        raise InputError("budget_bound needs d >= 1 and n >= 1")
    worst = max(nu * (n - nu + 1) for nu in range(1, n + 1))
    return constant * (d + 1) * worst


def unknown_n_plan(basis, n_hint: int):
    """Deterministic superset of the points an adaptive run may request.

    Enumerates the default schedules (base direction, then each level's
    accumulated-direction grid, advancing s across levels round-robin) and
    pads by extending the same grids until exactly ``budget_bound(d,
    n_hint)`` points are listed.
    """
    d = basis.dimension
    cap = budget_bound(d, n_hint)
    base = basis.direction(0)

    def level_point(i, kappa, s):
        weights = basis.weights_for(i)
        accumulated = np.zeros(d)
        for m, w in enumerate(weights):
            accumulated = accumulated + w * basis.direction(m)
        return kappa * accumulated + s * basis.direction(i)

    points = [s * base for s in range(2 * n_hint + 1)]
    schedules = []
    for i in range(1, d):
        kappas = basis.multipliers_for(i, n_hint)
        schedules.append((i, kappas))
    s = 0
    while len(points) < cap:
        s += 1
        advanced = False
        for i, kappas in schedules:
            for kappa in kappas:
                if len(points) >= cap:
                    return points
                points.append(level_point(i, kappa, s))
                advanced = True
        if not advanced:
            # univariate: keep extending the base grid
            points.append((2 * n_hint + s) * base)
    return points
