"""The n-pool mining game: every pool either mines honestly or withholds.

Each pool watches all others through spies, so withholding is detected and
refined-honest pools deterministically stick with the honest branch on ties.
A withholding ("insightful") pool of power m runs the hide-and-release fork
chain on its own; its expected reward rate is f(m) = m^2 (2-3m)/(1-2m) from
its fork plus a share of the blocks other withholders' forks hand out, while
an honest pool earns its power plus the same shared term.  Since every pool's
reward carries one common factor, relative revenue only needs these rates.

Pure Nash equilibria come in three shapes: everyone honest (largest pool at
most 1/3), exactly the largest pool withholding (second pool at most g(m1)),
or exactly the two largest withholding.  ``classify_equilibrium`` returns the
witness; ``brute_force_nash`` enumerates all 2^n profiles through ``is_nash``
as an independent oracle.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

from .errors import DomainError, GameSizeError, InvalidPowerError

__all__ = [
    "Strategy",
    "GameInstance",
    "EquilibriumKind",
    "EquilibriumType",
    "BestResponse",
    "f",
    "g",
    "h",
    "expected_rewards_profile",
    "classify_equilibrium",
    "is_nash",
    "brute_force_nash",
    "fork_chain_stationary",
]

_POWER_SUM_TOL = 1e-12
_INDIFFERENCE_TOL = 1e-12


class Strategy(str, enum.Enum):
    RHONEST = "rhonest"
    INSIGHTFUL = "insightful"


def f(y: float) -> float:
    """Expected reward rate of a lone withholding pool's fork chain."""
    if not 0.0 <= y < 0.5:
        raise DomainError(f"f needs y in [0, 1/2), got {y}")
    return y * y * (2 - 3 * y) / (1 - 2 * y)


def g(y: float) -> float:
    """Power boundary for the second pool's withholding decision."""
    if not 0.0 <= y <= 0.5:
        raise DomainError(f"g needs y in [0, 1/2], got {y}")
    return (-(y**3) + 2 * y * y + y - 1) / (2 * y * y + 4 * y - 3)


def h(m1: float, m2: float) -> float:
    """Upper power bound below which a third pool never joins two withholders."""
    if not (0.0 < m2 <= m1 <= 0.5):
        raise DomainError(f"h needs 0 < m2 <= m1 <= 1/2, got ({m1}, {m2})")
    num = (
        1
        - m1
        - 2 * m1**2
        + m1**3
        - m2
        + 4 * m1**2 * m2
        - 2 * m1**3 * m2
        - 2 * m2**2
        + 4 * m1 * m2**2
        + m2**3
        - 2 * m1 * m2**3
    )
    den = (
        3
        - 4 * m1
        - 2 * m1**2
        - 4 * m2
        + 4 * m1 * m2
        + 4 * m1**2 * m2
        - 2 * m2**2
        + 4 * m1 * m2**2
    )
    return num / den


def _check_powers(powers) -> tuple[float, ...]:
    powers = tuple(float(m) for m in powers)
    if not powers or min(powers) <= 0.0:
        raise InvalidPowerError(f"powers must be positive, got {powers}")
    if abs(sum(powers) - 1.0) > _POWER_SUM_TOL:
        raise InvalidPowerError(f"powers must sum to 1, got sum={sum(powers)!r}")
    return powers


@dataclass(frozen=True)
class GameInstance:
    """Pool powers (caller order, summing to 1) plus a strategy per pool."""

    powers: tuple[float, ...]
    profile: tuple[Strategy, ...]

    def __post_init__(self):
        object.__setattr__(self, "powers", _check_powers(self.powers))
        object.__setattr__(self, "profile", tuple(Strategy(s) for s in self.profile))
        if len(self.profile) != len(self.powers):
            raise InvalidPowerError("profile and powers must have equal length")


def expected_rewards_profile(instance: GameInstance) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-pool expected rewards (up to the common factor) and relative revenues.

    Withholding pools need power strictly below 1/2 (f has a pole there).
    """
    shared = 0.0
    for m, s in zip(instance.powers, instance.profile):
        if s is Strategy.INSIGHTFUL:
            if m >= 0.5:
                raise DomainError(f"withholding pool with power {m} >= 1/2")
            shared += 2 * m * (1 - m)
    er = []
    for m, s in zip(instance.powers, instance.profile):
        base = f(m) if s is Strategy.INSIGHTFUL else m
        er.append(base + m * shared)
    total = sum(er)
    return tuple(er), tuple(v / total for v in er)


class EquilibriumKind(enum.Enum):
    ALL_HONEST = 0
    ONE_INSIGHTFUL = 1
    TWO_INSIGHTFUL = 2


@dataclass(frozen=True)
class EquilibriumType:
    """Equilibrium class plus its witness profile in caller pool order.

    ``boundary_tie`` marks exact boundary cases (m1 = 1/3 or m2 = g(m1)) where
    the adjacent class is an equilibrium too; the witness returned is the one
    with fewer withholders.
    """

    kind: EquilibriumKind
    witness: tuple[Strategy, ...]
    boundary_tie: bool = False


def classify_equilibrium(powers) -> EquilibriumType:
    """Equilibrium classification by the f/g power boundaries (m1 <= 1/2)."""
    powers = _check_powers(powers)
    order = sorted(range(len(powers)), key=lambda i: -powers[i])
    m1 = powers[order[0]]
    if m1 > 0.5:
        raise DomainError(f"classification needs the largest pool <= 1/2, got {m1}")

    def witness(k: int) -> tuple[Strategy, ...]:
        prof = [Strategy.RHONEST] * len(powers)
        for i in order[:k]:
            prof[i] = Strategy.INSIGHTFUL
        return tuple(prof)

    third = 1.0 / 3.0
    if m1 < third:
        return EquilibriumType(EquilibriumKind.ALL_HONEST, witness(0))
    if m1 == third:
        return EquilibriumType(EquilibriumKind.ALL_HONEST, witness(0), boundary_tie=True)
    if len(powers) == 1:
        return EquilibriumType(EquilibriumKind.ONE_INSIGHTFUL, witness(1))
    m2 = powers[order[1]]
    boundary = g(m1)
    if m2 < boundary:
        return EquilibriumType(EquilibriumKind.ONE_INSIGHTFUL, witness(1))
    if m2 == boundary:
        return EquilibriumType(EquilibriumKind.ONE_INSIGHTFUL, witness(1), boundary_tie=True)
    return EquilibriumType(EquilibriumKind.TWO_INSIGHTFUL, witness(2))


@dataclass(frozen=True)
class BestResponse:
    """One pool's deviation check: relative revenue as played vs flipped."""

    pool: int
    played: Strategy
    rrev: float
    rrev_flipped: float

    @property
    def improves(self) -> bool:
        return self.rrev_flipped > self.rrev + _INDIFFERENCE_TOL


def is_nash(instance: GameInstance) -> tuple[bool, list[BestResponse]]:
    """True iff no pool strictly gains by unilaterally flipping its strategy."""
    _, rrev = expected_rewards_profile(instance)
    report = []
    for i, played in enumerate(instance.profile):
        flipped = list(instance.profile)
        flipped[i] = (
            Strategy.RHONEST if played is Strategy.INSIGHTFUL else Strategy.INSIGHTFUL
        )
        _, rrev_flip = expected_rewards_profile(GameInstance(instance.powers, tuple(flipped)))
        report.append(BestResponse(i, played, rrev[i], rrev_flip[i]))
    return (not any(r.improves for r in report)), report


def brute_force_nash(powers, max_pools: int = 16) -> set[tuple[Strategy, ...]]:
    """All pure equilibria by exhausting the 2^n profiles (oracle for tests)."""
    powers = _check_powers(powers)
    n = len(powers)
    if n > max_pools:
        raise GameSizeError(f"{n} pools exceeds the enumeration limit {max_pools}")
    if max(powers) >= 0.5:
        raise DomainError("exhaustive search needs every pool strictly below 1/2")
    out = set()
    for profile in itertools.product((Strategy.RHONEST, Strategy.INSIGHTFUL), repeat=n):
        ok, _ = is_nash(GameInstance(powers, profile))
        if ok:
            out.add(profile)
    return out


def fork_chain_stationary(m: float, max_lead: int = 10) -> dict[str, float]:
    """Stationary ratios pi_s / pi_0 of a lone withholder's fork chain.

    Keys: "0" (consensus), "0'" (tie), "1", "2", ... up to ``max_lead``.
    """
    if not 0.0 < m < 0.5:
        raise DomainError(f"fork chain needs 0 < m < 1/2, got {m}")
    out = {"0": 1.0, "0'": m * (1 - m)}
    ratio = m / (1 - m)
    for i in range(1, max_lead + 1):
        out[str(i)] = m * ratio ** (i - 1)
    return out
