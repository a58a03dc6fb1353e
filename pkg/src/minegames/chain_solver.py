"""Exact long-run analysis of the truncated lead chain.

``stationary`` solves pi P = pi on the cap-truncated chain with a sparse
direct solve (residual required <= 1e-12) and reports the stationary mass
sitting on the cap boundary as ``tail_mass``.  Transience is detected
empirically: if the tail mass exceeds ``tol`` at the requested cap, the cap is
doubled once, and the chain is flagged transient when the tail mass still
exceeds ``tol`` there.  For transient parameter points the long-run relative
revenue of the insightful pool tends to 1, so callers report that sentinel
instead of calling ``expected_rewards``.

``h1`` and ``h2`` are the closed-form per-step reward rates, relative to the
consensus-state probability pi_(0,0): the selfish pool's exact rate, and a
strict lower bound on the insightful pool's rate.  On the equal-power diagonal
h2 > h1, which is the analytic heart of the dominance result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import model
from .errors import (
    DomainError,
    InvalidPowerError,
    InvalidTruncationError,
    NumericalFailureError,
    TransientRegimeError,
)
from .model import LeadState, PowerSplit, RewardTriple

__all__ = [
    "StationaryResult",
    "ExpectedRewards",
    "DominancePoint",
    "stationary",
    "expected_rewards",
    "relative_revenue",
    "h1",
    "h2",
    "dominance_report",
    "DEFAULT_CAP",
    "DEFAULT_TAIL_TOL",
]

DEFAULT_CAP = 80
DEFAULT_TAIL_TOL = 1e-9
_RESIDUAL_REQ = 1e-12


@dataclass(frozen=True)
class StationaryResult:
    """Stationary distribution of the truncated chain.

    ``pi`` maps each reachable state (coordinates <= cap) to its probability.
    ``tail_mass`` is the total mass on cap-boundary states; ``transient`` is
    set when that mass exceeded the tolerance at two successive caps.  ``cap``
    is the truncation actually used for ``pi`` (the doubled one if the first
    solve looked suspicious); ``residual`` is the final ||pi P - pi||_inf.
    """

    pi: dict[LeadState, float]
    tail_mass: float
    transient: bool
    cap: int
    residual: float


@dataclass(frozen=True)
class ExpectedRewards:
    """Per-step expected rewards and the normalized relative revenues."""

    er: RewardTriple
    rrev: tuple[float, float, float]


@dataclass(frozen=True)
class DominancePoint:
    alpha: float
    rrev_selfish: float
    rrev_insightful: float
    gap: float
    transient: bool


class _CompiledChain:
    """Powers-independent structure of the truncated chain, cached per cap.

    Transition sparsity, probability classes and reward row classes do not
    depend on (alpha, beta); only their numeric values do.  Compiling once
    per cap makes repeated solves (sweeps, bisections) cheap.
    """

    _KIND_ORDER = [
        model.ProbKind.HONEST,
        model.ProbKind.ALPHA,
        model.ProbKind.BETA,
        model.ProbKind.NOT_ALPHA,
        model.ProbKind.NOT_BETA,
        model.ProbKind.SURE,
    ]

    def __init__(self, cap: int):
        self.cap = cap
        self.states = model.reachable_states(cap)
        self.index = {s: i for i, s in enumerate(self.states)}
        kind_id = {k: i for i, k in enumerate(self._KIND_ORDER)}
        probe = PowerSplit(0.25, 0.25)  # values unused; structure only
        src, dst, kinds, rows = [], [], [], []
        for t in model.enumerate_transitions(probe, cap):
            src.append(self.index[t.source])
            dst.append(self.index[t.target])
            kinds.append(kind_id[t.kind])
            rows.append(t.row)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.kinds = np.asarray(kinds, dtype=np.int64)
        rows = np.asarray(rows, dtype=np.int64)
        # transitions grouped by reward class (row numbers sharing a vector)
        self.reward_groups = [
            (np.flatnonzero(np.isin(rows, rownos)), key)
            for key, rownos in [
                ("h1", [1]), ("s2", [8]), ("s1", [9]), ("i2", [15, 22, 23]),
                ("i1", [17, 18, 24]), ("tie_x", [4]), ("tie_xy", [6]), ("tie_y", [13]),
            ]
        ]
        self.boundary = np.asarray(
            [s.x.blocks == cap or s.y.blocks == cap for s in self.states], dtype=bool
        )

    def prob_values(self, powers: PowerSplit) -> np.ndarray:
        table = np.asarray([k.value_at(powers) for k in self._KIND_ORDER])
        return table[self.kinds]

    @staticmethod
    def reward_vectors(powers: PowerSplit) -> dict[str, np.ndarray]:
        a, b = powers.alpha, powers.beta
        h = powers.honest
        return {
            "h1": np.array([1.0, 0.0, 0.0]),
            "s2": np.array([0.0, 2.0, 0.0]),
            "s1": np.array([0.0, 1.0, 0.0]),
            "i2": np.array([0.0, 0.0, 2.0]),
            "i1": np.array([0.0, 0.0, 1.0]),
            "tie_x": np.array([(3 - 3 * a - b) / 2, (1 + 3 * a - b) / 2, b]),
            "tie_xy": np.array([h, (1 + 3 * a - b) / 2, (1 - a + 3 * b) / 2]),
            "tie_y": np.array([(3 - 2 * a - 3 * b) / 2, a, (1 + 3 * b) / 2]),
        }


_CHAIN_CACHE: dict[int, _CompiledChain] = {}


def _compiled_chain(cap: int) -> _CompiledChain:
    if cap not in _CHAIN_CACHE:
        _CHAIN_CACHE[cap] = _CompiledChain(cap)
    return _CHAIN_CACHE[cap]


def _solve_truncated(powers: PowerSplit, cap: int) -> tuple[dict, float, float]:
    """Direct sparse solve of pi P = pi at one cap; returns (pi, tail, residual)."""
    cc = _compiled_chain(cap)
    n = len(cc.states)
    vals = cc.prob_values(powers)

    # A = (P - I)^T with the last equation replaced by sum(pi) = 1.
    keep = cc.dst != n - 1
    rows = np.concatenate([cc.dst[keep], np.arange(n - 1), np.full(n, n - 1)])
    cols = np.concatenate([cc.src[keep], np.arange(n - 1), np.arange(n)])
    data = np.concatenate([vals[keep], -np.ones(n - 1), np.ones(n)])
    A = sp.csc_matrix((data, (rows, cols)), shape=(n, n))
    b = np.zeros(n)
    b[n - 1] = 1.0
    try:
        pi = spla.spsolve(A, b)
    except Exception as exc:  # singular factorization and friends
        raise NumericalFailureError(
            f"stationary solve failed at cap={cap}, powers={powers}: {exc}"
        ) from exc

    pi = np.clip(pi, 0.0, None)
    total = pi.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericalFailureError(
            f"stationary solve returned non-normalizable vector at cap={cap}"
        )
    pi /= total

    PT = sp.csr_matrix((vals, (cc.dst, cc.src)), shape=(n, n))
    residual = float(np.max(np.abs(PT @ pi - pi)))
    if residual > _RESIDUAL_REQ:
        # Polish with power iteration; the chain is aperiodic (self-loop at (0,0)).
        for _ in range(20000):
            pi = PT @ pi
            pi /= pi.sum()
            residual = float(np.max(np.abs(PT @ pi - pi)))
            if residual <= _RESIDUAL_REQ:
                break
        else:
            raise NumericalFailureError(
                f"stationary residual {residual:.3e} > {_RESIDUAL_REQ} "
                f"at cap={cap}, powers={powers}"
            )

    tail = float(pi[cc.boundary].sum())
    return {s: float(pi[i]) for i, s in enumerate(cc.states)}, tail, residual


def stationary(
    powers: PowerSplit, cap: int = DEFAULT_CAP, tol: float = DEFAULT_TAIL_TOL
) -> StationaryResult:
    """Stationary distribution of the cap-truncated chain, transience-checked."""
    if cap < 10:
        raise InvalidTruncationError(f"cap must be >= 10, got {cap}")
    if not (0.0 < tol <= 1e-3):
        raise InvalidTruncationError(f"tail tolerance must lie in (0, 1e-3], got {tol}")
    if not (powers.alpha > 0.0 and powers.beta > 0.0):
        raise InvalidPowerError("stationary analysis needs alpha > 0 and beta > 0")

    pi, tail, residual = _solve_truncated(powers, cap)
    if tail <= tol:
        return StationaryResult(pi, tail, False, cap, residual)

    # Suspicious tail: double the cap once and re-check before declaring.
    pi2, tail2, residual2 = _solve_truncated(powers, 2 * cap)
    return StationaryResult(pi2, tail2, tail2 > tol, 2 * cap, residual2)


def expected_rewards(stat: StationaryResult, powers: PowerSplit) -> ExpectedRewards:
    """Per-step expected reward vector under ``stat`` and its normalization."""
    if stat.transient:
        raise TransientRegimeError(
            "chain flagged transient; insightful relative revenue tends to 1"
        )
    cc = _compiled_chain(stat.cap)
    pi = np.asarray([stat.pi[s] for s in cc.states])
    flow = pi[cc.src] * cc.prob_values(powers)
    vectors = cc.reward_vectors(powers)
    er = np.zeros(3)
    for idx, key in cc.reward_groups:
        er += flow[idx].sum() * vectors[key]
    total = er.sum()
    if total <= 0:
        raise NumericalFailureError("zero total expected reward")
    rrev = tuple(float(v) for v in er / total)
    return ExpectedRewards(er=RewardTriple(*(float(v) for v in er)), rrev=rrev)


def relative_revenue(
    powers: PowerSplit, cap: int = DEFAULT_CAP, tol: float = DEFAULT_TAIL_TOL
) -> ExpectedRewards:
    """Convenience: stationary solve + expected rewards in one call."""
    return expected_rewards(stationary(powers, cap, tol), powers)


def h1(alpha: float, beta: float) -> float:
    """Selfish pool's per-step expected reward divided by pi_(0,0).

    Closed form; pole at alpha = 1/2.
    """
    if not 0.0 <= alpha < 0.5:
        raise DomainError(f"h1 needs alpha in [0, 1/2), got {alpha}")
    if not 0.0 <= beta <= 1.0 - alpha:
        raise DomainError(f"h1 needs a valid power split, got beta={beta}")
    return (
        alpha * (1 - alpha + beta) * (1 + 3 * alpha - beta) / 2
        + alpha**2 * (1 - alpha - beta)
        + 2 * alpha**2
        + alpha**3 / (1 - 2 * alpha)
    )


def h2(alpha: float, beta: float) -> float:
    """Lower bound on the insightful pool's per-step reward over pi_(0,0).

    Closed form; pole at beta = 1/2.
    """
    if not 0.0 <= beta < 0.5:
        raise DomainError(f"h2 needs beta in [0, 1/2), got {beta}")
    if not 0.0 <= alpha <= 1.0 - beta:
        raise DomainError(f"h2 needs a valid power split, got alpha={alpha}")
    return (
        alpha * beta * (1 - alpha - beta)
        + 2 * alpha * beta * (1 - alpha + 3 * beta) / 2
        + beta * (1 - alpha - beta) * (1 + 3 * beta) / 2
        + 2 * beta**2
        + beta**3 / (1 - 2 * beta)
    )


def dominance_report(
    alpha_grid,
    cap: int = DEFAULT_CAP,
    tol: float = DEFAULT_TAIL_TOL,
) -> list[DominancePoint]:
    """Selfish vs insightful relative revenue along the equal-power diagonal.

    Transient grid points are reported with the rrev_insightful -> 1 sentinel
    instead of a stationary average.
    """
    out = []
    for alpha in alpha_grid:
        if not 0.0 < alpha < 0.5:
            raise DomainError(f"dominance grid must lie in (0, 1/2), got {alpha}")
        powers = PowerSplit(alpha, alpha)
        stat = stationary(powers, cap, tol)
        if stat.transient:
            out.append(DominancePoint(alpha, 0.0, 1.0, 1.0, True))
            continue
        rr = expected_rewards(stat, powers).rrev
        out.append(DominancePoint(alpha, rr[1], rr[2], rr[2] - rr[1], False))
    return out
