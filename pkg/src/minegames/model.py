"""State space and exact transition/reward table of the three-pool mining chain.

The system has an honest pool, a block-withholding ("selfish") pool with
power ``alpha``, and a spy-assisted counter-withholding ("insightful") pool
with power ``beta``.  Between consensus points it evolves as a Markov reward
process over two lead coordinates:

* ``x`` -- the selfish pool's hidden lead over the honest public chain,
* ``y`` -- the insightful pool's hidden lead over the selfish side.

Each coordinate is 0 (no hidden blocks), ``k >= 1`` (hidden lead of k
blocks), or the tie marker 0' (two equal-length public branches whose winner
is decided by the next block).  One transition corresponds to one
block-generation event.  Rewards are expected block credits
(honest, selfish, insightful) per transition; tie resolutions are credited in
expectation, which is why some entries are fractional.  Every reward vector
still sums to an integer (0, 1 or 2): the number of main-chain blocks that
the transition settles.  That integer is kept on each transition as
``blocks`` so exact conservation can be checked without float accumulation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import (
    InvalidPowerError,
    InvalidTruncationError,
    UnreachableStateError,
)

__all__ = [
    "PowerSplit",
    "Lead",
    "ZERO",
    "TIE",
    "LeadState",
    "RewardTriple",
    "ProbKind",
    "Transition",
    "transitions_from",
    "reachable_states",
    "enumerate_transitions",
    "sample_step",
]


@dataclass(frozen=True)
class PowerSplit:
    """Hashing-power fractions of the selfish (alpha) and insightful (beta) pools.

    The honest pool holds the remainder ``1 - alpha - beta``, which must be
    strictly positive.  Zero alpha/beta are admitted so degenerate
    (honest-only) simulations can be expressed; the analytic operations that
    need the open domain (0, 1/2) enforce it themselves.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha >= 0.0 and self.beta >= 0.0):
            raise InvalidPowerError(f"negative power: alpha={self.alpha}, beta={self.beta}")
        if not self.alpha + self.beta < 1.0:
            raise InvalidPowerError(
                f"honest power must be positive: alpha+beta={self.alpha + self.beta}"
            )

    @property
    def honest(self) -> float:
        return 1.0 - self.alpha - self.beta

    def require_dominance_domain(self) -> None:
        """Both strategic pools strictly inside (0, 1/2)."""
        if not (0.0 < self.alpha < 0.5 and 0.0 < self.beta < 0.5):
            raise InvalidPowerError(
                f"need 0 < alpha < 1/2 and 0 < beta < 1/2, got ({self.alpha}, {self.beta})"
            )


@dataclass(frozen=True)
class Lead:
    """One lead coordinate: 0, the tie marker 0', or k >= 1 hidden blocks."""

    blocks: int
    is_tie: bool = False

    def __post_init__(self):
        if self.blocks < 0:
            raise UnreachableStateError(f"negative lead {self.blocks}")
        if self.is_tie and self.blocks != 0:
            raise UnreachableStateError("tie marker carries no blocks")

    @staticmethod
    def ahead(k: int) -> "Lead":
        if k < 1:
            raise UnreachableStateError(f"ahead() needs k >= 1, got {k}")
        return Lead(k)

    def sort_key(self) -> tuple[int, int]:
        # 0 < 0' < 1 < 2 < ...
        return (self.blocks, 1 if self.is_tie else 0)

    def __repr__(self):
        return "0'" if self.is_tie else str(self.blocks)


ZERO = Lead(0)
TIE = Lead(0, is_tie=True)


def _lead(v) -> Lead:
    """Coerce int / "tie" / Lead into a Lead (convenience for constructors)."""
    if isinstance(v, Lead):
        return v
    if v == "0'":
        return TIE
    return Lead(int(v))


@dataclass(frozen=True)
class LeadState:
    """Joint chain state (x, y).  Only table-reachable combinations construct.

    Reachable shapes: (0,0); (k,0) k>=1; (0',0); (1,0'); (0,0'); (0,1);
    (x,y) with integer x >= 0 and y >= 2; (0',y) with y >= 2.
    In particular (0',0') never arises and is rejected.
    """

    x: Lead
    y: Lead

    def __post_init__(self):
        x, y = self.x, self.y
        if x.is_tie and y.is_tie:
            raise UnreachableStateError("(0',0') is never produced by the table")
        if y.is_tie:
            if not (not x.is_tie and x.blocks in (0, 1)):
                raise UnreachableStateError(f"y=0' only pairs with x in {{0,1}}, got x={x!r}")
            return
        if y.blocks == 1:
            if x.is_tie or x.blocks != 0:
                raise UnreachableStateError(f"y=1 only pairs with x=0, got x={x!r}")
            return
        if y.blocks == 0:
            return  # (0,0), (k,0), (0',0) all fine
        # y >= 2: any integer x >= 0 or the tie marker

    def sort_key(self):
        return (self.y.sort_key(), self.x.sort_key())

    def __repr__(self):
        return f"({self.x!r},{self.y!r})"


def state(x, y) -> LeadState:
    """Shorthand constructor: ``state(2, 0)``, ``state("0'", 3)`` ..."""
    return LeadState(_lead(x), _lead(y))


@dataclass(frozen=True)
class RewardTriple:
    """Expected block credits (honest, selfish, insightful) of one transition."""

    honest: float
    selfish: float
    insightful: float

    def __post_init__(self):
        if min(self.honest, self.selfish, self.insightful) < 0.0:
            raise ValueError(f"negative reward component in {self}")

    def total(self) -> float:
        return self.honest + self.selfish + self.insightful

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.honest, self.selfish, self.insightful)


_R0 = RewardTriple(0.0, 0.0, 0.0)


class ProbKind(enum.Enum):
    """Symbolic class of a transition probability (exact stochasticity checks)."""

    HONEST = "1-alpha-beta"
    ALPHA = "alpha"
    BETA = "beta"
    NOT_ALPHA = "1-alpha"
    NOT_BETA = "1-beta"
    SURE = "1"

    def value_at(self, powers: PowerSplit) -> float:
        if self is ProbKind.HONEST:
            return powers.honest
        if self is ProbKind.ALPHA:
            return powers.alpha
        if self is ProbKind.BETA:
            return powers.beta
        if self is ProbKind.NOT_ALPHA:
            return 1.0 - powers.alpha
        if self is ProbKind.NOT_BETA:
            return 1.0 - powers.beta
        return 1.0


@dataclass(frozen=True)
class Transition:
    """One table row instantiated at a source state.

    ``row`` is the table row number (1..24), the fixed ordering contract for
    the single-step sampler.  ``blocks`` is the integer main-chain growth
    settled by the transition (= reward total, exactly).  ``truncated`` marks
    rows redirected to a self-loop by the enumeration cap.
    """

    source: LeadState
    target: LeadState
    prob: float
    reward: RewardTriple
    row: int
    kind: ProbKind
    blocks: int
    truncated: bool = False


def _rows_for(s: LeadState, powers: PowerSplit) -> list[tuple]:
    """Applicable table rows at ``s``: (row#, kind, target, reward, blocks).

    Returned in row-number order.  Targets are built symbolically, so this
    works on the unbounded chain.
    """
    a, b = powers.alpha, powers.beta
    h = powers.honest
    x, y = s.x, s.y

    # Round-settling expected reward vectors (each sums to 2 blocks).
    r_tie_x = RewardTriple((3 - 3 * a - b) / 2, (1 + 3 * a - b) / 2, b)  # row 4
    r_tie_xy = RewardTriple(h, (1 + 3 * a - b) / 2, (1 - a + 3 * b) / 2)  # row 6
    r_tie_y = RewardTriple((3 - 2 * a - 3 * b) / 2, a, (1 + 3 * b) / 2)  # row 13

    if y.is_tie:
        if x.blocks == 1:  # (1,0')
            return [(6, ProbKind.SURE, state(0, 0), r_tie_xy, 2)]
        return [(13, ProbKind.SURE, state(0, 0), r_tie_y, 2)]  # (0,0')

    if x.is_tie:
        if y.blocks == 0:  # (0',0)
            return [(4, ProbKind.SURE, state(0, 0), r_tie_x, 2)]
        if y.blocks == 2:  # (0',2)
            return [
                (16, ProbKind.BETA, state("0'", 3), _R0, 0),
                (23, ProbKind.NOT_BETA, state(0, 0), RewardTriple(0, 0, 2), 2),
            ]
        # (0',y), y >= 3
        return [
            (16, ProbKind.BETA, state("0'", y.blocks + 1), _R0, 0),
            (24, ProbKind.NOT_BETA, state(0, y.blocks - 1), RewardTriple(0, 0, 1), 1),
        ]

    xv, yv = x.blocks, y.blocks

    if yv == 0:
        if xv == 0:  # (0,0)
            return [
                (1, ProbKind.HONEST, state(0, 0), RewardTriple(1, 0, 0), 1),
                (2, ProbKind.ALPHA, state(1, 0), _R0, 0),
                (10, ProbKind.BETA, state(0, 1), _R0, 0),
            ]
        if xv == 1:  # (1,0)
            return [
                (3, ProbKind.HONEST, state("0'", 0), _R0, 0),
                (5, ProbKind.BETA, state(1, "0'"), _R0, 0),
                (7, ProbKind.ALPHA, state(2, 0), _R0, 0),
            ]
        if xv == 2:  # (2,0)
            return [
                (7, ProbKind.ALPHA, state(3, 0), _R0, 0),
                (8, ProbKind.NOT_ALPHA, state(0, 0), RewardTriple(0, 2, 0), 2),
            ]
        # (x,0), x >= 3
        return [
            (7, ProbKind.ALPHA, state(xv + 1, 0), _R0, 0),
            (9, ProbKind.NOT_ALPHA, state(xv - 1, 0), RewardTriple(0, 1, 0), 1),
        ]

    if yv == 1:  # (0,1)
        return [
            (11, ProbKind.ALPHA, state(1, "0'"), _R0, 0),
            (12, ProbKind.HONEST, state(0, "0'"), _R0, 0),
            (14, ProbKind.BETA, state(0, 2), _R0, 0),
        ]

    if yv == 2:
        if xv == 0:  # (0,2)
            return [
                (15, ProbKind.NOT_BETA, state(0, 0), RewardTriple(0, 0, 2), 2),
                (16, ProbKind.BETA, state(0, 3), _R0, 0),
            ]
        # (x,2), x >= 1
        if xv == 1:
            settle = (19, ProbKind.HONEST, state("0'", 2), _R0, 0)
        elif xv == 2:
            settle = (20, ProbKind.HONEST, state(0, 2), _R0, 0)
        else:
            settle = (21, ProbKind.HONEST, state(xv - 1, 2), _R0, 0)
        return [
            (16, ProbKind.BETA, state(xv, 3), _R0, 0),
            settle,
            (22, ProbKind.ALPHA, state(0, 0), RewardTriple(0, 0, 2), 2),
        ]

    # y >= 3
    if xv == 0:
        return [
            (16, ProbKind.BETA, state(0, yv + 1), _R0, 0),
            (17, ProbKind.HONEST, state(0, yv - 1), RewardTriple(0, 0, 1), 1),
            (18, ProbKind.ALPHA, state(1, yv - 1), RewardTriple(0, 0, 1), 1),
        ]
    if xv == 1:
        settle = (19, ProbKind.HONEST, state("0'", yv), _R0, 0)
    elif xv == 2:
        settle = (20, ProbKind.HONEST, state(0, yv), _R0, 0)
    else:
        settle = (21, ProbKind.HONEST, state(xv - 1, yv), _R0, 0)
    return [
        (16, ProbKind.BETA, state(xv, yv + 1), _R0, 0),
        (18, ProbKind.ALPHA, state(xv + 1, yv - 1), RewardTriple(0, 0, 1), 1),
        settle,
    ]


def transitions_from(s: LeadState, powers: PowerSplit) -> list[Transition]:
    """All outgoing transitions of ``s`` on the unbounded chain, row order."""
    out = []
    for row, kind, target, reward, blocks in _rows_for(s, powers):
        out.append(
            Transition(
                source=s,
                target=target,
                prob=kind.value_at(powers),
                reward=reward,
                row=row,
                kind=kind,
                blocks=blocks,
            )
        )
    return out


def reachable_states(cap: int) -> list[LeadState]:
    """Every reachable state with both coordinates <= cap, in canonical order."""
    if cap < 3:
        raise InvalidTruncationError(f"cap must be >= 3, got {cap}")
    states = [state(0, 0)]
    states += [state(k, 0) for k in range(1, cap + 1)]
    states += [state("0'", 0), state(0, 1), state(1, "0'"), state(0, "0'")]
    for yv in range(2, cap + 1):
        states.append(state("0'", yv))
        states += [state(xv, yv) for xv in range(0, cap + 1)]
    return states


def _exceeds_cap(s: LeadState, cap: int) -> bool:
    return s.x.blocks > cap or s.y.blocks > cap


def enumerate_transitions(powers: PowerSplit, cap: int) -> list[Transition]:
    """Instantiate the whole table on the cap-truncated state space.

    Transitions that would push a coordinate past ``cap`` are replaced by a
    self-loop carrying the same probability and reward, so each row of the
    truncated chain stays stochastic and no credited reward is lost.
    """
    if cap < 3:
        raise InvalidTruncationError(f"cap must be >= 3, got {cap}")
    out = []
    for s in reachable_states(cap):
        for t in transitions_from(s, powers):
            if _exceeds_cap(t.target, cap):
                t = Transition(
                    source=s,
                    target=s,
                    prob=t.prob,
                    reward=t.reward,
                    row=t.row,
                    kind=t.kind,
                    blocks=t.blocks,
                    truncated=True,
                )
            out.append(t)
    return out


def sample_step(
    s: LeadState, powers: PowerSplit, rand: float
) -> tuple[LeadState, RewardTriple]:
    """Draw the successor of ``s`` from one uniform variate in [0, 1).

    Rows are scanned in table order, so a fixed ``rand`` always picks the
    same row: seeded walks are bit-reproducible.  The final row absorbs any
    float slack in the cumulative probabilities.
    """
    if not (0.0 <= rand < 1.0):
        raise ValueError(f"rand must lie in [0,1), got {rand}")
    rows = transitions_from(s, powers)
    acc = 0.0
    for t in rows[:-1]:
        acc += t.prob
        if rand < acc:
            return t.target, t.reward
    last = rows[-1]
    return last.target, last.reward
