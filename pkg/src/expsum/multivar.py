"""Multivariate recovery drivers.

Two entry points:

* :func:`recover_known_n` -- the fixed-budget path.  When the base direction
  separates all n terms, the model is recovered from exactly (d+1) n samples:
  2 n equidistant base samples plus n shifted samples per extra direction.

* :func:`recover_unknown_n` -- the adaptive path.  Term count is detected
  from the Hankel rank of the base sequence; projections that collide along
  the base direction form piles that are split level by level with one new
  shift direction each, growing per-pile Hankel matrices until their ranks
  are certain.  Aggregated pile coefficients accumulate across levels through
  the running inner-product sums used as nodes of each level's shift systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from ._schedule import BUDGET_CONSTANT, budget_bound
from .errors import (
    BudgetExceededError,
    CancellationSuspectedError,
    CollisionDetectedError,
    DimensionMismatchError,
    InputError,
    PencilDegenerateError,
    RankDeficiencyError,
    RankMismatchError,
    SingularMatrixError,
    SparsityUndetectedError,
)
from .linalg import RankDecision
from .model import DirectionBasis, ExponentialModel, Term, canonicalize, evaluate
from .oracle import Oracle, SequenceStream
from .prony import (
    DEFAULT_NODE_TOL,
    detect_sparsity,
    fit_coefficients,
    fit_nodes,
    take_logs,
)

__all__ = [
    "RecoveryConfig",
    "PileState",
    "LevelState",
    "RecoveryReport",
    "recover_known_n",
    "recover_unknown_n",
    "solve_shift_system",
    "assemble_exponents",
    "disentangle_pile",
    "cancellation_rescue",
    "budget_bound",
    "BUDGET_CONSTANT",
]

# A recovered base coefficient below this fraction of the largest one makes
# the shift-ratio logs unreliable; the run aborts with a cancellation error.
CANCELLATION_RTOL = 1e-12


@dataclass(frozen=True)
class RecoveryConfig:
    """Tunable knobs of the recovery drivers.

    ``collision_rel_tol`` is deliberately stricter than ``rank_rel_tol``:
    the fixed-budget driver only needs to tell structural rank deficiency
    (singular values at roundoff level) from benign ill-conditioning.
    """

    rank_rel_tol: float = linalg.DEFAULT_RANK_RTOL
    gap_factor: float = linalg.DEFAULT_GAP_FACTOR
    node_tol: float = DEFAULT_NODE_TOL
    collision_rel_tol: float = 1e-10
    merge_tol: float = 1e-9
    max_terms: int = 16
    budget_cap: int | None = None
    node_method: str = "generalized_eig"
    coefficient_mode: str = "least_squares"
    rescue_k_max: int = 0
    rescue_epsilon_scale: float = 1e-2
    seed: int = 0
    max_level_retries: int = 4
    level_condition_limit: float = 1e12

    def __post_init__(self):
        positive = {
            "rank_rel_tol": self.rank_rel_tol,
            "gap_factor": self.gap_factor,
            "node_tol": self.node_tol,
            "collision_rel_tol": self.collision_rel_tol,
            "rescue_epsilon_scale": self.rescue_epsilon_scale,
            "level_condition_limit": self.level_condition_limit,
        }
        for name, value in positive.items():
            if value <= 0:
                raise InputError(f"{name} must be positive, got {value}")
        if self.merge_tol < 0:
            raise InputError("merge_tol must be >= 0")
        if self.max_terms < 1:
            raise InputError("max_terms must be >= 1")
        if self.budget_cap is not None and self.budget_cap < 1:
            raise InputError("budget_cap must be >= 1 when set")
        if self.rescue_k_max < 0:
            raise InputError("rescue_k_max must be >= 0")
        if self.node_method not in ("generalized_eig", "hankel_polynomial"):
            raise InputError(f"unknown node method: {self.node_method!r}")
        if self.coefficient_mode not in ("least_squares", "square_k"):
            raise InputError(
                f"unknown coefficient mode: {self.coefficient_mode!r}"
            )

    def to_dict(self) -> dict:
        return {
            "rank_rel_tol": self.rank_rel_tol,
            "gap_factor": self.gap_factor,
            "node_tol": self.node_tol,
            "collision_rel_tol": self.collision_rel_tol,
            "merge_tol": self.merge_tol,
            "max_terms": self.max_terms,
            "budget_cap": self.budget_cap,
            "node_method": self.node_method,
            "coefficient_mode": self.coefficient_mode,
            "rescue_k_max": self.rescue_k_max,
            "rescue_epsilon_scale": self.rescue_epsilon_scale,
            "seed": self.seed,
            "max_level_retries": self.max_level_retries,
            "level_condition_limit": self.level_condition_limit,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RecoveryConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class PileState:
    """A group of terms indistinguishable up to the current level."""

    level: int
    pile_index: int
    inner_products: tuple[complex, ...]
    coefficient_sum: complex
    member_count: int | None = None


@dataclass(frozen=True)
class LevelState:
    """Snapshot after one identification level.

    ``split_ranks`` holds the detected rank of each pile that was processed
    at this level (empty at level 0, where piles are created rather than
    split).  ``omegas`` are the accumulated inner products that served as
    node logarithms for this level's shift systems.
    """

    level: int
    pile_count: int
    omegas: tuple[complex, ...]
    piles: tuple[PileState, ...]
    split_ranks: tuple[int, ...] = ()


@dataclass(frozen=True)
class RecoveryReport:
    """Recovered model plus accounting and diagnostics."""

    model: ExponentialModel
    samples_used: int
    per_level: tuple[LevelState, ...]
    rank_confidences: tuple[RankDecision, ...]
    warnings: tuple[str, ...]
    detected_n: int
    conservation_rel_err: float
    max_residual_rel: float

    def to_dict(self) -> dict:
        return {
            "detected_n": self.detected_n,
            "samples_used": self.samples_used,
            "conservation_rel_err": self.conservation_rel_err,
            "max_residual_rel": self.max_residual_rel,
            "warnings": list(self.warnings),
            "per_level": [
                {
                    "level": lv.level,
                    "pile_count": lv.pile_count,
                    "split_ranks": list(lv.split_ranks),
                    "piles": [
                        {
                            "inner_products": [
                                [z.real, z.imag] for z in p.inner_products
                            ],
                            "coefficient_sum": [
                                p.coefficient_sum.real,
                                p.coefficient_sum.imag,
                            ],
                            "member_count": p.member_count,
                        }
                        for p in lv.piles
                    ],
                }
                for lv in self.per_level
            ],
            "rank_confidences": [
                {
                    "rank": rd.rank,
                    "confident": rd.confident,
                    "singular_values": list(rd.singular_values),
                }
                for rd in self.rank_confidences
            ],
            "model": self.model.to_dict(),
        }


def solve_shift_system(logs, multipliers, shift_samples) -> np.ndarray:
    """Solve the exponential Vandermonde system pairing shifts to base nodes.

    The matrix entry (l, j) is exp(multipliers[l] * logs[j]); the solution
    components stay positionally paired with the base node logarithms.
    """
    matrix = linalg.vandermonde(logs, multipliers)
    try:
        return linalg.solve(matrix, shift_samples)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            "shift system is singular (repeated nodes or unlucky "
            "multipliers); re-draw the multipliers",
            sigma_min=exc.sigma_min,
            sigma_max=exc.sigma_max,
        ) from exc


def assemble_exponents(log_rows, basis: DirectionBasis) -> np.ndarray:
    """Solve the d x d direction system for each term's exponent vector.

    ``log_rows[j]`` holds the term's inner products with every direction in
    order; the result rows are the exponent vectors phi_j.
    """
    rows = np.asarray(log_rows, dtype=complex)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] != basis.dimension:
        raise DimensionMismatchError(
            f"need {basis.dimension} inner products per term, "
            f"got {rows.shape[1]}"
        )
    return np.linalg.solve(basis.matrix(), rows.T).T


def disentangle_pile(pile_sequence, r: int):
    """Split a pile sequence into r sub-nodes and coefficient aggregates.

    The sequence holds equidistant samples of the pile's aggregated
    coefficient function along the current shift direction.  Its Hankel
    pencil yields the r distinguishable sub-nodes; the matching aggregates
    solve the pile's own r x r Vandermonde system, so they sum to the
    pile's leading sequence value.

    Raises :class:`PencilDegenerateError` when the pencil is singular,
    which means r was overestimated; retry with r - 1.
    """
    seq = np.asarray(pile_sequence, dtype=complex)
    if r < 1:
        raise InputError("pile rank must be >= 1")
    if seq.ndim != 1 or len(seq) < 2 * r:
        raise InputError(
            f"need at least {2 * r} sequence values for rank {r}, "
            f"got {len(seq)}"
        )
    if r == 1:
        scale = float(np.max(np.abs(seq)))
        if scale == 0.0:
            raise PencilDegenerateError("pile sequence is identically zero")
        for t in range(len(seq) - 1):
            if abs(seq[t]) > 1e-14 * scale:
                return (
                    np.array([seq[t + 1] / seq[t]]),
                    np.array([seq[0]]),
                )
        raise PencilDegenerateError("pile sequence has no usable ratio")
    h0 = linalg.hankel(seq, r, r)
    h1 = linalg.hankel(seq[1:], r, r)
    sub_nodes = linalg.generalized_eigenvalues(h1, h0)
    sub_logs = take_logs(sub_nodes)
    sub_coeffs = linalg.solve(
        linalg.vandermonde(sub_logs, np.arange(r, dtype=float)), seq[:r]
    )
    return sub_nodes, sub_coeffs


def default_rescue_epsilon(direction, scale: float = 1e-2, seed: int = 0) -> np.ndarray:
    """Seeded pseudo-random parallel-shift vector with norm scale*||direction||."""
    direction = np.asarray(direction, dtype=float)
    rng = np.random.default_rng(seed)
    for _ in range(16):
        eps = rng.standard_normal(direction.size)
        norm = np.linalg.norm(eps)
        if norm == 0:
            continue
        eps = eps / norm * scale * np.linalg.norm(direction)
        if direction.size == 1 or _not_parallel(direction, eps):
            return eps
    raise InputError("could not draw a shift vector independent of direction")


def _not_parallel(direction, eps) -> bool:
    stacked = np.vstack([direction, eps])
    sv = np.linalg.svd(stacked, compute_uv=False)
    return sv[-1] > 1e-12 * sv[0]


def cancellation_rescue(
    oracle: Oracle,
    direction,
    epsilon,
    k_max: int,
    nu_prev: int,
    max_terms: int | None = None,
    rel_tol: float = linalg.DEFAULT_RANK_RTOL,
    gap_factor: float = linalg.DEFAULT_GAP_FACTOR,
) -> RankDecision:
    """Probe parallel shifts of the base line for terms hidden by cancellation.

    Samples f(k * epsilon + s * direction) for k = 1..k_max (k = 0 degenerates
    to the original line), re-runs the incremental rank detection per shift,
    and returns the best decision seen: a shifted line re-weights each pile's
    aggregated coefficient, so a pile whose coefficients summed to zero
    reappears.  The base rank is either confirmed or revised upward.
    """
    decision, _ = _rescue_probe(
        oracle, direction, epsilon, k_max, nu_prev, max_terms,
        rel_tol, gap_factor,
    )
    return decision


def _rescue_probe(oracle, direction, epsilon, k_max, nu_prev, max_terms,
                  rel_tol, gap_factor, charge=None):
    direction = np.asarray(direction, dtype=float)
    eps = np.asarray(epsilon, dtype=float)
    if k_max < 0:
        raise InputError("k_max must be >= 0")
    if k_max >= 1 and not _not_parallel(direction, eps):
        raise InputError("epsilon must not be parallel to the direction")
    if max_terms is None:
        max_terms = nu_prev + 4
    shifts = range(1, k_max + 1) if k_max >= 1 else [0]
    best = None
    best_stream = None
    for k in shifts:
        stream = SequenceStream(oracle, k * eps, direction)
        value_at = stream.value_at
        if charge is not None:
            def value_at(s, _stream=stream):
                if s >= len(_stream.values):
                    charge(s + 1 - len(_stream.values))
                return _stream.value_at(s)
        try:
            decision = detect_sparsity(value_at, max_terms, rel_tol, gap_factor)
        except SparsityUndetectedError:
            decision = RankDecision(max_terms, (), 0.0, False)
        if best is None or (decision.confident, decision.rank) > (
            best.confident, best.rank
        ):
            best = decision
            best_stream = stream
    return best, best_stream


def _node_sort_order(logs) -> np.ndarray:
    nodes = np.exp(np.asarray(logs, dtype=complex))
    keys = [(z.real, z.imag) for z in nodes]
    return np.array(sorted(range(len(keys)), key=keys.__getitem__), dtype=int)


def _merge_close_nodes(logs, coeffs, node_tol):
    """Cluster logs whose nodes sit closer than node_tol * max|node|."""
    nodes = np.exp(np.asarray(logs, dtype=complex))
    scale = float(np.max(np.abs(nodes)))
    groups: list[list[int]] = []
    for j in range(len(nodes)):
        for group in groups:
            if abs(nodes[group[0]] - nodes[j]) <= node_tol * scale:
                group.append(j)
                break
        else:
            groups.append([j])
    if len(groups) == len(nodes):
        return np.asarray(logs, dtype=complex), np.asarray(coeffs, dtype=complex), False
    merged_logs = np.array([logs[g[0]] for g in groups], dtype=complex)
    merged_coeffs = np.array(
        [np.sum([coeffs[j] for j in g]) for g in groups], dtype=complex
    )
    return merged_logs, merged_coeffs, True


def _relative_residuals(model, entries):
    if not entries:
        return 0.0
    values = np.array([v for _, v in entries])
    floor = 1e-12 * float(np.max(np.abs(values) + 1e-300))
    worst = 0.0
    for point, value in entries:
        predicted = evaluate(model, point)
        worst = max(worst, abs(predicted - value) / max(abs(value), floor))
    return worst


def _check_oracle(oracle, basis):
    if oracle.dimension != basis.dimension:
        raise DimensionMismatchError(
            f"oracle dimension {oracle.dimension} != basis dimension "
            f"{basis.dimension}"
        )


def recover_known_n(
    oracle: Oracle,
    basis: DirectionBasis,
    n: int,
    config: RecoveryConfig | None = None,
) -> RecoveryReport:
    """Recover an n-term model from exactly (d+1) n samples.

    Requires the base direction to separate all n terms; a rank deficiency
    or a pair of nearly coincident nodes raises
    :class:`CollisionDetectedError`, directing the caller to
    :func:`recover_unknown_n`.
    """
    if config is None:
        config = RecoveryConfig()
    if n < 1:
        raise InputError("n must be >= 1")
    _check_oracle(oracle, basis)
    d = basis.dimension
    start = oracle.ledger.count
    warnings: list[str] = []

    base = SequenceStream(oracle, np.zeros(d), basis.direction(0))
    base.ensure(2 * n)
    seq = base.sequence()
    values = seq.array()

    decision = linalg.numerical_rank(
        linalg.hankel(values, n, n), config.collision_rel_tol, config.gap_factor
    )
    if decision.rank < n:
        raise CollisionDetectedError(
            f"base direction separates only {decision.rank} of {n} terms; "
            "use recover_unknown_n",
            nu=decision.rank,
        )

    try:
        nodes = fit_nodes(seq, n, config.node_method)
    except RankMismatchError as exc:
        raise CollisionDetectedError(
            f"node fit failed at rank {n} ({exc}); use recover_unknown_n",
            nu=decision.rank,
        ) from exc
    if n > 1:
        scale = float(np.max(np.abs(nodes)))
        gaps = np.abs(nodes[:, None] - nodes[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() <= config.node_tol * scale:
            raise CollisionDetectedError(
                "two base nodes nearly coincide; use recover_unknown_n",
                nu=n - 1,
            )
    order = _node_sort_order(take_logs(nodes))
    nodes = nodes[order]
    logs = take_logs(nodes)
    alphas = fit_coefficients(logs, seq, mode=config.coefficient_mode)

    inner_rows = [list(logs)]
    levels = [
        LevelState(
            level=0,
            pile_count=n,
            omegas=tuple(logs),
            piles=tuple(
                PileState(0, j, (logs[j],), complex(alphas[j]), 1)
                for j in range(n)
            ),
        )
    ]

    alpha_scale = float(np.max(np.abs(alphas)))
    base_dir = basis.direction(0)
    for i in range(1, d):
        kappas = basis.multipliers_for(i, n)
        shift = basis.direction(i)
        shift_values = np.array(
            [oracle.sample(k * base_dir + shift) for k in kappas]
        )
        aggregates = solve_shift_system(logs, kappas, shift_values)
        tiny = np.abs(alphas) < CANCELLATION_RTOL * alpha_scale
        if np.any(tiny):
            raise CancellationSuspectedError(
                "a recovered base coefficient is vanishingly small; the "
                "shift ratios are unreliable (suspect coefficient "
                "cancellation)"
            )
        inner_rows.append(list(take_logs(aggregates / alphas)))
        per_term = list(zip(*inner_rows))
        levels.append(
            LevelState(
                level=i,
                pile_count=n,
                omegas=tuple(logs),
                piles=tuple(
                    PileState(i, j, tuple(per_term[j]), complex(alphas[j]), 1)
                    for j in range(n)
                ),
            )
        )

    log_rows = np.array(list(zip(*inner_rows)), dtype=complex)
    phis = assemble_exponents(log_rows, basis)
    model = canonicalize(
        ExponentialModel(
            d,
            tuple(Term(complex(alphas[j]), tuple(phis[j])) for j in range(n)),
        ),
        merge_tol=config.merge_tol,
    )

    entries = oracle.ledger.since(start)
    f0 = values[0]
    conservation = abs(np.sum(alphas) - f0) / max(abs(f0), 1e-300)
    return RecoveryReport(
        model=model,
        samples_used=oracle.ledger.count - start,
        per_level=tuple(levels),
        rank_confidences=(decision,),
        warnings=tuple(warnings),
        detected_n=model.n_terms,
        conservation_rel_err=float(conservation),
        max_residual_rel=float(_relative_residuals(model, entries)),
    )


@dataclass
class _Pile:
    inner: tuple[complex, ...]
    coeff: complex


def recover_unknown_n(
    oracle: Oracle,
    basis: DirectionBasis,
    config: RecoveryConfig | None = None,
) -> RecoveryReport:
    """Adaptive recovery with unknown term count and colliding projections."""
    if config is None:
        config = RecoveryConfig()
    _check_oracle(oracle, basis)
    d = basis.dimension
    rng = np.random.default_rng(config.seed)
    start = oracle.ledger.count
    cap = config.budget_cap
    if cap is None:
        cap = budget_bound(d, config.max_terms)
    warnings: list[str] = []
    rank_decisions: list[RankDecision] = []
    levels: list[LevelState] = []

    def spent() -> int:
        return oracle.ledger.count - start

    def charge(count: int) -> None:
        if spent() + count > cap:
            raise BudgetExceededError(
                f"sample budget cap {cap} would be exceeded "
                f"(spent {spent()}, requesting {count} more)",
                samples_used=spent(),
                partial={
                    "levels_completed": len(levels),
                    "pile_counts": [lv.pile_count for lv in levels],
                },
            )

    base_dir = basis.direction(0)
    base = SequenceStream(oracle, np.zeros(d), base_dir)

    def charged_base(s: int) -> complex:
        if s >= len(base.values):
            charge(s + 1 - len(base.values))
        return base.value_at(s)

    decision0 = detect_sparsity(
        charged_base, config.max_terms, config.rank_rel_tol, config.gap_factor
    )
    rank_decisions.append(decision0)
    nu = decision0.rank
    if not decision0.confident:
        warnings.append(
            f"base rank {nu} is not confident; continuing with best guess"
        )

    fit_stream = base
    if config.rescue_k_max > 0:
        epsilon = default_rescue_epsilon(
            base_dir, config.rescue_epsilon_scale, config.seed
        )
        rescue_decision, rescue_stream = _rescue_probe(
            oracle, base_dir, epsilon, config.rescue_k_max, nu,
            config.max_terms, config.rank_rel_tol, config.gap_factor,
            charge=charge,
        )
        rank_decisions.append(rescue_decision)
        if rescue_decision.rank > nu:
            warnings.append(
                f"cancellation rescue raised the term count {nu} -> "
                f"{rescue_decision.rank}"
            )
            nu = rescue_decision.rank
            fit_stream = rescue_stream

    if len(fit_stream.values) < 2 * nu:
        charge(2 * nu - len(fit_stream.values))
        fit_stream.ensure(2 * nu)
    nodes = fit_nodes(fit_stream.sequence(), nu, config.node_method)
    logs = take_logs(nodes)

    # pile coefficient sums always come from the unshifted base line
    if len(base.values) < 2 * nu:
        charge(2 * nu - len(base.values))
        base.ensure(2 * nu)
    coeff_sums = fit_coefficients(
        logs, base.sequence(), mode=config.coefficient_mode
    )
    logs, coeff_sums, merged = _merge_close_nodes(
        logs, coeff_sums, config.node_tol
    )
    if merged:
        nu = len(logs)
        warnings.append(
            f"nearly coincident base nodes merged; continuing with {nu} piles"
        )

    order = _node_sort_order(logs)
    piles = [
        _Pile((complex(logs[j]),), complex(coeff_sums[j])) for j in order
    ]
    f0 = base.values[0]
    conservation = abs(np.sum(coeff_sums) - f0) / max(abs(f0), 1e-300)
    levels.append(
        LevelState(
            level=0,
            pile_count=len(piles),
            omegas=tuple(p.inner[0] for p in piles),
            piles=tuple(
                PileState(0, j, p.inner, p.coeff) for j, p in enumerate(piles)
            ),
        )
    )

    for i in range(1, d):
        nu_prev = len(piles)
        shift = basis.direction(i)
        kappas = basis.multipliers_for(i, nu_prev)
        weights = basis.weights_for(i)
        matrix = None
        for attempt in range(config.max_level_retries + 1):
            omegas = np.array(
                [
                    np.sum([w * p.inner[m] for m, w in enumerate(weights)])
                    for p in piles
                ],
                dtype=complex,
            )
            candidate = linalg.vandermonde(omegas, kappas)
            if linalg.condition_estimate(candidate) <= config.level_condition_limit:
                matrix = candidate
                break
            if attempt % 2 == 0:
                kappas = _redraw_multipliers(rng, nu_prev)
            else:
                weights = _perturb_weights(rng, weights)
            warnings.append(
                f"level {i} shift system ill-conditioned; retry {attempt + 1}"
            )
        if matrix is None:
            raise SingularMatrixError(
                f"level {i} shift system stayed singular after "
                f"{config.max_level_retries} retries"
            )
        accumulated = np.zeros(d)
        for m, w in enumerate(weights):
            accumulated = accumulated + w * basis.direction(m)

        sequences = [[p.coeff] for p in piles]
        certified = [False] * nu_prev
        ranks = [0] * nu_prev
        fallbacks: list[RankDecision | None] = [None] * nu_prev
        max_pile = config.max_terms - nu_prev + 1
        s = 0
        m_size = 0
        while not all(certified):
            m_size += 1
            if m_size > max_pile:
                # out of room: settle for the best deficiency seen, if any
                for j in range(nu_prev):
                    if certified[j]:
                        continue
                    if fallbacks[j] is None or fallbacks[j].rank == 0:
                        raise SparsityUndetectedError(
                            f"a pile at level {i} exceeds the remaining "
                            f"term budget ({max_pile}); raise max_terms"
                        )
                    certified[j] = True
                    ranks[j] = fallbacks[j].rank
                    rank_decisions.append(fallbacks[j])
                    warnings.append(
                        f"pile {j} at level {i}: accepting non-confident "
                        f"rank {fallbacks[j].rank} at the size cap"
                    )
                break
            for _ in range(2):
                s += 1
                charge(nu_prev)
                column = np.array(
                    [
                        oracle.sample(k * accumulated + s * shift)
                        for k in kappas
                    ]
                )
                solved = linalg.solve(matrix, column)
                for j in range(nu_prev):
                    sequences[j].append(complex(solved[j]))
            # pile matrices share one noise floor (they come from the same
            # solves), so rank thresholds use the level's largest scale
            pile_svs = [
                np.linalg.svd(
                    linalg.hankel(sequences[j], m_size + 1, m_size + 1),
                    compute_uv=False,
                )
                for j in range(nu_prev)
            ]
            level_scale = max(float(sv[0]) for sv in pile_svs)
            for j in range(nu_prev):
                if certified[j]:
                    continue
                pile_decision = linalg.rank_from_singular_values(
                    pile_svs[j],
                    config.rank_rel_tol,
                    config.gap_factor,
                    scale=level_scale,
                )
                if pile_decision.rank == 0:
                    # an all-zero window can hide terms; keep growing, and
                    # at the size cap fall back to a single merged term
                    fallbacks[j] = fallbacks[j] or pile_decision
                    if m_size == max_pile:
                        certified[j] = True
                        ranks[j] = 1
                        rank_decisions.append(pile_decision)
                        warnings.append(
                            f"pile {j} at level {i} stayed below the noise "
                            "floor; treating it as a single term"
                        )
                    continue
                if pile_decision.rank <= m_size:
                    if pile_decision.confident:
                        certified[j] = True
                        ranks[j] = pile_decision.rank
                        rank_decisions.append(pile_decision)
                    elif m_size == max_pile:
                        certified[j] = True
                        ranks[j] = pile_decision.rank
                        rank_decisions.append(pile_decision)
                        warnings.append(
                            f"pile {j} at level {i}: accepting non-confident "
                            f"rank {pile_decision.rank}"
                        )
                    else:
                        fallbacks[j] = pile_decision

        new_piles: list[_Pile] = []
        for j, pile in enumerate(piles):
            r = ranks[j]
            seq = np.asarray(sequences[j], dtype=complex)
            try:
                sub_nodes, sub_coeffs = disentangle_pile(seq, r)
            except PencilDegenerateError:
                if r <= 1:
                    raise
                warnings.append(
                    f"pile {j} at level {i}: pencil degenerate at rank {r}, "
                    f"retrying with {r - 1}"
                )
                r -= 1
                ranks[j] = r
                sub_nodes, sub_coeffs = disentangle_pile(seq, r)
            sub_logs = take_logs(sub_nodes)
            sub_logs, sub_coeffs, merged = _merge_close_nodes(
                sub_logs, sub_coeffs, config.node_tol
            )
            if merged:
                warnings.append(
                    f"pile {j} at level {i}: coincident sub-nodes merged"
                )
            for w, a in zip(sub_logs, sub_coeffs):
                new_piles.append(_Pile(pile.inner + (complex(w),), complex(a)))
        new_piles.sort(
            key=lambda p: tuple(x for z in p.inner for x in (z.real, z.imag))
        )
        piles = new_piles
        levels.append(
            LevelState(
                level=i,
                pile_count=len(piles),
                omegas=tuple(complex(o) for o in omegas),
                piles=tuple(
                    PileState(i, j, p.inner, p.coeff)
                    for j, p in enumerate(piles)
                ),
                split_ranks=tuple(ranks),
            )
        )

    log_rows = np.array([p.inner for p in piles], dtype=complex)
    phis = assemble_exponents(log_rows, basis)
    provisional = canonicalize(
        ExponentialModel(
            d,
            tuple(
                Term(p.coeff, tuple(phis[j])) for j, p in enumerate(piles)
            ),
        ),
        merge_tol=config.merge_tol,
    )

    # final coefficients: least squares over every sample this run consumed
    entries = oracle.ledger.since(start)
    points = np.array([p for p, _ in entries], dtype=float)
    observed = np.array([v for _, v in entries], dtype=complex)
    design = np.exp(points @ provisional.exponent_matrix().T)
    try:
        final_alphas = linalg.solve_least_squares(
            design, observed, rcond=config.rank_rel_tol
        )
        model = canonicalize(
            ExponentialModel(
                d,
                tuple(
                    Term(complex(a), t.exponent)
                    for a, t in zip(final_alphas, provisional.terms)
                ),
            ),
            merge_tol=config.merge_tol,
        )
    except RankDeficiencyError:
        warnings.append(
            "final coefficient refit was rank deficient; keeping the "
            "pile aggregates"
        )
        model = provisional

    return RecoveryReport(
        model=model,
        samples_used=spent(),
        per_level=tuple(levels),
        rank_confidences=tuple(rank_decisions),
        warnings=tuple(warnings),
        detected_n=model.n_terms,
        conservation_rel_err=float(conservation),
        max_residual_rel=float(_relative_residuals(model, entries)),
    )


def _redraw_multipliers(rng, count: int) -> np.ndarray:
    for _ in range(32):
        draw = rng.uniform(0.0, count, size=count)
        if len(np.unique(np.round(draw, 12))) == count:
            return draw
    raise SingularMatrixError("could not draw distinct shift multipliers")


def _perturb_weights(rng, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float).copy()
    if weights.size > 1:
        weights[1:] *= 1.0 + rng.uniform(-0.1, 0.1, size=weights.size - 1)
    else:
        weights *= 1.0 + rng.uniform(0.05, 0.15)
    return weights
