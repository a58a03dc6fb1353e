"""Block-level Monte Carlo simulation of the three mining pools.

Two engines cross-validate each other: ``simulate_three_pool`` runs the
block-level system (branches, tie races, integer credits), while
``simulate_markov_walk`` walks the lead-state transition table directly and
credits expected rewards.  With the strategic profile (selfish present,
insightful) their revenue distributions are statistically identical.
``simulate_selfish_baseline`` is the classic two-player attacker-vs-honest
setting with tie-break parameter gamma.

Time is one block-generation event per step; propagation delays and
transaction fees are out of model.  Revenue is relative: a pool's credited
main-chain blocks over all main-chain blocks.  Standard errors are
batch-means estimates (64 batches), which absorb the within-round correlation
of block credits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _engines, chain_solver
from .errors import NumericalFailureError, SolverBracketError, TransientRegimeError
from .model import PowerSplit, RewardTriple

__all__ = [
    "InsightfulMode",
    "StrategyProfile3",
    "SimConfig",
    "RevenueReport",
    "Parity",
    "ThresholdPoint",
    "simulate_three_pool",
    "simulate_markov_walk",
    "simulate_selfish_baseline",
    "threshold_sweep",
    "derive_stream",
]

derive_stream = _engines.derive_stream

DEFAULT_STEPS = 10_000_000


class InsightfulMode(str, enum.Enum):
    HONEST = "honest"
    INSIGHTFUL = "insightful"


@dataclass(frozen=True)
class StrategyProfile3:
    """Which strategic behaviors are switched on for the alpha / beta pools."""

    selfish_present: bool = True
    insightful_mode: InsightfulMode = InsightfulMode.INSIGHTFUL


@dataclass(frozen=True)
class SimConfig:
    """One reproducible run: powers, number of block events, seed, gamma.

    ``gamma`` is honored by the selfish baseline only; the three-pool engines
    use the uniform 1/2 tie split the transition table is built on.
    """

    powers: PowerSplit
    steps: int = DEFAULT_STEPS
    seed: int = 0
    gamma: float = 0.5

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0,1], got {self.gamma}")


@dataclass(frozen=True)
class RevenueReport:
    """Credited blocks and relative revenue per pool (honest, selfish, insightful)."""

    blocks_main_chain: int
    credited: RewardTriple
    rrev: tuple[float, float, float]
    stderr_rrev: tuple[float, float, float]

    def __post_init__(self):
        if self.blocks_main_chain > 0 and abs(sum(self.rrev) - 1.0) > 1e-12:
            raise NumericalFailureError(f"relative revenues sum to {sum(self.rrev)}")


def _nbatch(steps: int) -> int:
    return max(1, min(64, steps // 100))


def _report(cred: np.ndarray, blocks_per_batch: np.ndarray | None = None) -> RevenueReport:
    """Assemble a RevenueReport from per-batch credit rows.

    For integer credit arrays the main-chain length is their exact sum; for
    the expected-reward walk the per-batch integer block counts are supplied
    separately and the float credit total must agree with them to rounding.
    """
    totals = cred.sum(axis=0)
    if blocks_per_batch is None:
        blocks_per_batch = cred.sum(axis=1)
        blocks = int(totals.sum())
    else:
        blocks = int(blocks_per_batch.sum())
        drift = abs(float(totals.sum()) - blocks)
        if drift > 1e-6 * max(1.0, blocks):
            raise NumericalFailureError(
                f"credited rewards drifted from block count by {drift}"
            )
    if blocks == 0:
        zero = (0.0, 0.0, 0.0)
        return RevenueReport(0, RewardTriple(0, 0, 0), zero, zero)

    rrev = tuple(float(v) / blocks for v in totals)
    nonempty = blocks_per_batch > 0
    nb = int(nonempty.sum())
    stderr = []
    for i in range(3):
        if nb >= 4:
            ratios = cred[nonempty, i] / blocks_per_batch[nonempty]
            stderr.append(float(np.std(ratios, ddof=1) / math.sqrt(nb)))
        else:
            stderr.append(math.sqrt(max(rrev[i] * (1 - rrev[i]), 0.0) / blocks))
    return RevenueReport(blocks, RewardTriple(*(float(v) for v in totals)), rrev, tuple(stderr))


def simulate_three_pool(config: SimConfig, profile: StrategyProfile3) -> RevenueReport:
    """Block-level run; every main-chain block credited exactly once (integers)."""
    state, inc = derive_stream(config.seed)
    cred = _engines.three_pool_kernel(
        config.powers.alpha,
        config.powers.beta,
        config.steps,
        state,
        inc,
        profile.selfish_present,
        profile.insightful_mode is InsightfulMode.INSIGHTFUL,
        _nbatch(config.steps),
    )
    return _report(cred.astype(np.float64))


def simulate_markov_walk(config: SimConfig) -> RevenueReport:
    """Walk the transition table directly (expected-reward credits)."""
    state, inc = derive_stream(config.seed)
    cred, blocks = _engines.walk_kernel(
        config.powers.alpha,
        config.powers.beta,
        config.steps,
        state,
        inc,
        _nbatch(config.steps),
    )
    return _report(cred, blocks.astype(np.float64))


def simulate_selfish_baseline(config: SimConfig) -> RevenueReport:
    """Two-player classic withholding attacker (power alpha) vs honest rest.

    The attacker occupies the selfish slot of the report; the insightful slot
    is identically zero.
    """
    state, inc = derive_stream(config.seed)
    cred2 = _engines.baseline_kernel(
        config.powers.alpha,
        config.gamma,
        config.steps,
        state,
        inc,
        _nbatch(config.steps),
    )
    cred = np.zeros((cred2.shape[0], 3), dtype=np.float64)
    cred[:, 0] = cred2[:, 0]
    cred[:, 1] = cred2[:, 1]
    return _report(cred)


class Parity(str, enum.Enum):
    """How the insightful pool's revenue is compared against the selfish pool's."""

    RELATIVE = "relative"
    UNIT_RELATIVE = "unit-relative"


@dataclass(frozen=True)
class ThresholdPoint:
    alpha: float
    beta_star: float | None  # None when the metric never turns positive
    parity: Parity


def _parity_metric(rrev, alpha: float, beta: float, parity: Parity) -> float:
    if parity is Parity.UNIT_RELATIVE:
        return rrev[2] / beta - rrev[1] / alpha
    return rrev[2] - rrev[1]


def threshold_sweep(
    alpha_grid,
    parity: Parity = Parity.RELATIVE,
    steps: int = DEFAULT_STEPS,
    seed: int = 0,
    probe: str = "analytic",
    cap: int = chain_solver.DEFAULT_CAP,
    beta_tol: float = 1e-4,
    beta_floor: float = 1e-3,
) -> list[ThresholdPoint]:
    """Smallest insightful power beating the selfish pool, per alpha.

    Each probe evaluates the parity metric at one (alpha, beta) point, by the
    exact solver (default) or by a Monte Carlo walk (``probe="sim"``, which is
    what ``steps``/``seed`` are for); beta_star is located by bisection over
    beta in [beta_floor, alpha].
    """
    if probe not in ("analytic", "sim"):
        raise ValueError(f"probe must be 'analytic' or 'sim', got {probe}")
    parity = Parity(parity)

    probe_count = 0

    def metric(alpha: float, beta: float) -> float:
        nonlocal probe_count
        probe_count += 1
        if probe == "analytic":
            try:
                rrev = chain_solver.relative_revenue(PowerSplit(alpha, beta), cap).rrev
            except TransientRegimeError:
                rrev = (0.0, 0.0, 1.0)  # insightful revenue tends to 1
        else:
            cfg = SimConfig(
                PowerSplit(alpha, beta),
                steps=steps,
                seed=_engines.splitmix64(seed + probe_count),
            )
            rrev = simulate_markov_walk(cfg).rrev
        return _parity_metric(rrev, alpha, beta, parity)

    out = []
    for alpha in alpha_grid:
        lo, hi = beta_floor, float(alpha)
        if hi <= lo:
            raise SolverBracketError(f"alpha={alpha} leaves no beta range above {beta_floor}")
        if metric(alpha, hi) <= 0.0:
            out.append(ThresholdPoint(float(alpha), None, parity))
            continue
        if metric(alpha, lo) > 0.0:
            out.append(ThresholdPoint(float(alpha), lo, parity))
            continue
        while hi - lo > beta_tol:
            mid = 0.5 * (lo + hi)
            if metric(alpha, mid) > 0.0:
                hi = mid
            else:
                lo = mid
        out.append(ThresholdPoint(float(alpha), hi, parity))
    return out
