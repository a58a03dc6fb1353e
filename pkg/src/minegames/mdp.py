"""Optimal insightful-mining as an average-reward-ratio decision problem.

The insightful pool chooses among Adopt / OverrideSelfish / Wait / Match
while the honest pool follows the protocol and the selfish pool runs classic
withholding.  A state is (l_h, l_s, l_i, fork): the honest-side public chain,
the selfish branch (-1 when the selfish pool mines with the honest pool), the
insightful private branch, and a flag recording the latest publication event
(match is feasible only when fork != irrelevant and l_i >= l_h).  Rewards are
pairs (r_other, r_i): main-chain blocks settled for honest+selfish combined,
and for the insightful pool.  Crediting is lazy: branch blocks are paid out
when the insightful pool's action (or a branch collapse) settles them, so
every main-chain block is counted exactly once.

The objective is the long-run ratio r_i / (r_i + r_other).  A bisection over
rho transforms it into standard average-reward MDPs with per-step reward
(1-rho) * r_i - rho * r_other, solved by relative value iteration; the root
of the optimal gain is the optimal relative revenue rho*.

Two generalizations of the raw transition table, both using
l_s* := l_h when l_s = -1 (else l_s): OverrideSelfish conditions and pays with
l_s* (overriding "-1 blocks" would discard public blocks uncredited), and
Adopt gets a fallback row for l_i >= l_h with l_s <= l_i — credit (l_s*, 0),
reset to (0,0,0) — so adopting is possible from every non-trivial state.
Adopt is withheld only at the two zero states where it would be a zero-reward
self-loop.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._engines import derive_stream, splitmix64
from .errors import (
    InvalidTruncationError,
    NumericalFailureError,
    PolicyError,
    SolverBracketError,
)
from .model import PowerSplit

__all__ = [
    "Fork",
    "MdpAction",
    "MdpState",
    "MdpTransition",
    "InsightfulMdp",
    "Policy",
    "PolicyValue",
    "build_mdp",
    "value_iteration",
    "solve_arr",
    "evaluate_policy",
    "export_policy",
    "parse_policy",
]


class Fork(enum.IntEnum):
    IRRELEVANT = 0
    RELEVANT = 1
    ACTIVE = 2


class MdpAction(enum.IntEnum):
    # order is the deterministic tie-break for greedy policies
    ADOPT = 0
    OVERRIDE_SELFISH = 1
    WAIT = 2
    MATCH = 3


class Prob(enum.Enum):
    """Symbolic probability class, for exact stochasticity checks."""

    ALPHA = "alpha"
    BETA = "beta"
    HONEST = "1-alpha-beta"
    HALF_HONEST = "(1-alpha-beta)/2"
    SURE = "1"

    def value_at(self, powers: PowerSplit) -> float:
        if self is Prob.ALPHA:
            return powers.alpha
        if self is Prob.BETA:
            return powers.beta
        if self is Prob.HONEST:
            return powers.honest
        if self is Prob.HALF_HONEST:
            return powers.honest / 2.0
        return 1.0


@dataclass(frozen=True, order=True)
class MdpState:
    l_h: int
    l_s: int  # -1: selfish pool mines with the honest pool
    l_i: int
    fork: Fork

    def __post_init__(self):
        if self.l_h < 0 or self.l_i < 0 or self.l_s < -1:
            raise ValueError(f"bad state {self}")

    @property
    def ls_star(self) -> int:
        return self.l_h if self.l_s == -1 else self.l_s


INITIAL_STATE = MdpState(0, -1, 0, Fork.IRRELEVANT)


@dataclass(frozen=True)
class MdpTransition:
    target: MdpState
    kind: Prob
    r_other: int
    r_i: int


def _is_zero_state(s: MdpState) -> bool:
    return s.l_h == 0 and s.l_i == 0 and s.l_s in (-1, 0)


def _adopt(s: MdpState) -> list[MdpTransition]:
    irr = Fork.IRRELEVANT
    if s.l_i < s.l_h:
        return [MdpTransition(MdpState(0, s.ls_star - s.l_h, 0, irr), Prob.SURE, s.l_h, 0)]
    if s.l_s >= 0 and s.l_s == s.l_i + 1:
        return [MdpTransition(MdpState(0, 0, 0, irr), Prob.SURE, s.l_s, 0)]
    if s.l_s >= 0 and s.l_s >= s.l_i + 2 and s.l_i > 0:
        return [MdpTransition(MdpState(0, s.l_s - s.l_i, 0, irr), Prob.SURE, s.l_i, 0)]
    # fallback: concede to the others' best branch.  This also covers the
    # carry row with l_i = 0 (nothing published to settle against), which
    # taken literally would be a zero-reward self-loop and, at l_s = max_len,
    # an absorbing trap.
    return [MdpTransition(MdpState(0, 0, 0, irr), Prob.SURE, s.ls_star, 0)]


def _override(s: MdpState) -> list[MdpTransition]:
    ls = s.ls_star
    return [
        MdpTransition(MdpState(0, 0, s.l_i - ls - 1, Fork.IRRELEVANT), Prob.SURE, 0, ls + 1)
    ]


def _block_rows(s: MdpState, matched: bool) -> list[MdpTransition]:
    """The three block-event rows shared by Wait and Match.

    ``matched`` switches on the half/half split of the honest-block row when
    the selfish side has no lead (the insightful pool has published an
    equal-length branch, so honest power is split between the two).
    """
    rows = []
    rel = Fork.RELEVANT
    # selfish block
    if s.l_s == -1:
        rows.append(MdpTransition(MdpState(s.l_h + 1, s.l_h + 1, s.l_i, rel), Prob.ALPHA, 0, 0))
    else:
        rows.append(MdpTransition(MdpState(s.l_h, s.l_s + 1, s.l_i, rel), Prob.ALPHA, 0, 0))
    # insightful block
    nfork = Fork.ACTIVE if s.fork == Fork.ACTIVE else Fork.IRRELEVANT
    rows.append(MdpTransition(MdpState(s.l_h, s.l_s, s.l_i + 1, nfork), Prob.BETA, 0, 0))
    # honest block
    if s.ls_star <= s.l_h:
        if matched:
            rows.append(
                MdpTransition(
                    MdpState(1, 1, s.l_i - s.l_h, rel), Prob.HALF_HONEST, 0, s.l_h
                )
            )
            rows.append(
                MdpTransition(
                    MdpState(s.l_h + 1, s.l_h + 1, s.l_i, rel), Prob.HALF_HONEST, 0, 0
                )
            )
        else:
            rows.append(
                MdpTransition(MdpState(s.l_h + 1, s.l_h + 1, s.l_i, rel), Prob.HONEST, 0, 0)
            )
    elif s.l_s == s.l_h + 1:
        rows.append(MdpTransition(MdpState(s.l_h + 1, -1, s.l_i, rel), Prob.HONEST, 0, 0))
    elif s.l_s == s.l_h + 2:
        rows.append(MdpTransition(MdpState(s.l_s, s.l_s, s.l_i, rel), Prob.HONEST, 0, 0))
    else:
        rows.append(MdpTransition(MdpState(s.l_h + 1, s.l_s, s.l_i, rel), Prob.HONEST, 0, 0))
    return rows


def transitions(s: MdpState, action: MdpAction) -> list[MdpTransition]:
    """Raw transition rows for (state, action), before truncation masking."""
    if action == MdpAction.ADOPT:
        return _adopt(s)
    if action == MdpAction.OVERRIDE_SELFISH:
        return _override(s)
    if action == MdpAction.WAIT:
        return _block_rows(s, matched=False)
    return _block_rows(s, matched=True)


def _in_bounds(s: MdpState, max_len: int) -> bool:
    return s.l_h <= max_len and s.l_s <= max_len and s.l_i <= max_len


def feasible_actions(s: MdpState, max_len: int) -> list[MdpAction]:
    """Actions allowed at ``s``: intrinsic feasibility plus the truncation rule.

    At the cap an action is dropped when any of its successors would exceed
    ``max_len``, which forces Adopt / OverrideSelfish at saturated states.
    """
    out = []
    if not _is_zero_state(s):
        out.append(MdpAction.ADOPT)
    if s.l_i > s.ls_star:
        out.append(MdpAction.OVERRIDE_SELFISH)
    for action in (MdpAction.WAIT, MdpAction.MATCH):
        if action == MdpAction.MATCH and (s.fork == Fork.IRRELEVANT or s.l_i < s.l_h):
            continue
        if all(_in_bounds(t.target, max_len) for t in transitions(s, action)):
            out.append(action)
    return out


@dataclass
class InsightfulMdp:
    """Explicit truncated decision problem, reachable states only."""

    powers: PowerSplit
    max_len: int
    states: list[MdpState]
    index: dict[MdpState, int]
    actions: list[list[MdpAction]]  # per state
    rows: dict[tuple[int, MdpAction], list[MdpTransition]]

    @property
    def n_states(self) -> int:
        return len(self.states)


def build_mdp(powers: PowerSplit, max_len: int) -> InsightfulMdp:
    """Instantiate all rows over the reachable, cap-truncated state space."""
    if max_len < 3:
        raise InvalidTruncationError(f"max_len must be >= 3, got {max_len}")

    seen = {INITIAL_STATE}
    frontier = [INITIAL_STATE]
    rows: dict[tuple[MdpState, MdpAction], list[MdpTransition]] = {}
    acts: dict[MdpState, list[MdpAction]] = {}
    while frontier:
        s = frontier.pop()
        fa = feasible_actions(s, max_len)
        if not fa:
            raise NumericalFailureError(f"no feasible action at {s}")
        acts[s] = fa
        for a in fa:
            ts = transitions(s, a)
            rows[(s, a)] = ts
            for t in ts:
                if t.target not in seen:
                    seen.add(t.target)
                    frontier.append(t.target)

    states = sorted(seen)
    index = {s: i for i, s in enumerate(states)}
    return InsightfulMdp(
        powers=powers,
        max_len=max_len,
        states=states,
        index=index,
        actions=[acts[s] for s in states],
        rows={(index[s], a): ts for (s, a), ts in rows.items()},
    )


@dataclass(frozen=True)
class Policy:
    """A feasible action for every reachable state of a truncated MDP."""

    max_len: int
    actions: dict[MdpState, MdpAction]

    def action_at(self, s: MdpState) -> MdpAction:
        try:
            return self.actions[s]
        except KeyError:
            raise PolicyError(f"policy has no action for reachable state {s}") from None


class _Compiled:
    """Per-action sparse transition matrices and expected reward vectors."""

    def __init__(self, mdp: InsightfulMdp):
        n = mdp.n_states
        self.n = n
        self.feasible = np.zeros((n, len(MdpAction)), dtype=bool)
        self.P = []
        self.er_i = np.zeros((n, len(MdpAction)))
        self.er_other = np.zeros((n, len(MdpAction)))
        for a in MdpAction:
            rows_idx, cols, vals = [], [], []
            for i, s in enumerate(mdp.states):
                if a not in mdp.actions[i]:
                    continue
                self.feasible[i, a] = True
                for t in mdp.rows[(i, a)]:
                    p = t.kind.value_at(mdp.powers)
                    rows_idx.append(i)
                    cols.append(mdp.index[t.target])
                    vals.append(p)
                    self.er_i[i, a] += p * t.r_i
                    self.er_other[i, a] += p * t.r_other
            self.P.append(sp.csr_matrix((vals, (rows_idx, cols)), shape=(n, n)))


_DAMPING = 0.9  # aperiodicity transformation weight (gains are rescaled back)


def value_iteration(
    mdp: InsightfulMdp,
    rho: float,
    eps: float = 1e-8,
    max_iter: int = 200_000,
    v0: np.ndarray | None = None,
    compiled: _Compiled | None = None,
) -> tuple[float, Policy, np.ndarray]:
    """Relative value iteration on the rho-transformed standard MDP.

    Per-step reward is (1-rho)*r_i - rho*r_other.  Returns the optimal gain
    (per original step), the greedy policy (ties broken by action order), and
    the final relative value vector (reusable as a warm start).
    """
    c = compiled if compiled is not None else _Compiled(mdp)
    n = c.n
    v = np.zeros(n) if v0 is None else v0.copy()
    w = (1.0 - rho) * c.er_i - rho * c.er_other  # (n, actions)

    q = np.empty((n, len(MdpAction)))
    tau = _DAMPING
    for _ in range(max_iter):
        for a in MdpAction:
            q[:, a] = tau * (w[:, a] + c.P[a] @ v) + (1.0 - tau) * v
        q[~c.feasible] = -np.inf
        v_new = q.max(axis=1)
        delta = v_new - v
        span = float(delta.max() - delta.min())
        v = v_new - v_new[0]  # keep values anchored
        if span <= eps * tau:
            gain = float(delta.max() + delta.min()) / (2.0 * tau)
            greedy = q.argmax(axis=1)
            policy = Policy(
                mdp.max_len,
                {s: MdpAction(int(greedy[i])) for i, s in enumerate(mdp.states)},
            )
            return gain, policy, v
    raise NumericalFailureError(
        f"value iteration did not reach span {eps} within {max_iter} sweeps (rho={rho})"
    )


def solve_arr(
    mdp: InsightfulMdp, tol: float = 1e-5
) -> tuple[float, Policy]:
    """Optimal long-run revenue ratio rho* and its greedy policy, by bisection.

    The optimal gain of the transformed MDP is non-increasing in rho and
    crosses zero at the optimal ratio; the bracket is narrowed until it is
    tol-wide and the mid gain is within tol of zero.
    """
    if not 0.0 < tol <= 1e-3:
        raise InvalidTruncationError(f"tol must lie in (0, 1e-3], got {tol}")
    c = _Compiled(mdp)
    eps = tol * 0.1

    g_lo, _, v = value_iteration(mdp, 0.0, eps, compiled=c)
    if g_lo <= 0.0:
        return 0.0, value_iteration(mdp, 0.0, eps, compiled=c)[1]
    g_hi, _, v = value_iteration(mdp, 1.0, eps, v0=v, compiled=c)
    if g_hi >= 0.0:
        raise SolverBracketError("transformed gain does not change sign on [0, 1]")

    lo, hi = 0.0, 1.0
    gain = g_lo
    policy = None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gain, policy, v = value_iteration(mdp, mid, eps, v0=v, compiled=c)
        if gain > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol and abs(gain) <= tol:
            return mid, policy
    raise SolverBracketError(f"bisection stalled: bracket=({lo}, {hi}), gain={gain}")


@dataclass(frozen=True)
class PolicyValue:
    """Monte Carlo estimate of a policy's long-run revenue ratio."""

    rrev: float
    stderr: float
    reward_insightful: float
    reward_other: float
    steps: int


def evaluate_policy(
    policy: Policy,
    powers: PowerSplit,
    steps: int = 1_000_000,
    seed: int = 0,
    mdp: InsightfulMdp | None = None,
) -> PolicyValue:
    """Roll the fixed policy through the transition rows and estimate its ratio."""
    if mdp is None:
        mdp = build_mdp(powers, policy.max_len)

    # per-state sampling tables under the policy
    cum, succ, rew_i, rew_o = [], [], [], []
    for i, s in enumerate(mdp.states):
        a = policy.action_at(s)
        if a not in mdp.actions[i]:
            raise PolicyError(f"action {a.name} infeasible at {s}")
        ts = mdp.rows[(i, a)]
        probs = np.array([t.kind.value_at(powers) for t in ts])
        cum.append(np.cumsum(probs))
        succ.append([mdp.index[t.target] for t in ts])
        rew_i.append([t.r_i for t in ts])
        rew_o.append([t.r_other for t in ts])

    st, ic = derive_stream(splitmix64(seed) ^ 0x6D6470, 0)
    st, ic = int(st), int(ic)
    mask64 = (1 << 64) - 1
    nbatch = max(1, min(64, steps // 100))
    bat = np.zeros((nbatch, 2))

    cum = [list(c) for c in cum]  # python floats: the loop below is pure python
    cur = mdp.index[INITIAL_STATE]
    for t in range(steps):
        old = st
        st = (old * 6364136223846793005 + ic) & mask64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        u = (((xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))) & 0xFFFFFFFF) / 4294967296.0
        row = cum[cur]
        k = 0
        while k < len(row) - 1 and u >= row[k]:
            k += 1
        b = t * nbatch // steps
        bat[b, 0] += rew_i[cur][k]
        bat[b, 1] += rew_o[cur][k]
        cur = succ[cur][k]

    ri, ro = bat.sum(axis=0)
    total = ri + ro
    if total <= 0:
        return PolicyValue(0.0, 0.0, ri, ro, steps)
    rrev = ri / total
    tot_b = bat.sum(axis=1)
    mask = tot_b > 0
    if mask.sum() >= 4:
        ratios = bat[mask, 0] / tot_b[mask]
        stderr = float(np.std(ratios, ddof=1) / math.sqrt(mask.sum()))
    else:
        stderr = math.sqrt(max(rrev * (1 - rrev), 0.0) / max(total, 1.0))
    return PolicyValue(float(rrev), stderr, float(ri), float(ro), steps)


def export_policy(policy: Policy) -> str:
    """Flat text table: one line per state "l_h l_s l_i fork action"."""
    lines = [f"# max_len={policy.max_len}"]
    for s in sorted(policy.actions):
        a = policy.actions[s]
        lines.append(f"{s.l_h} {s.l_s} {s.l_i} {s.fork.name.lower()} {a.name.lower()}")
    return "\n".join(lines) + "\n"


def parse_policy(text: str) -> Policy:
    """Inverse of ``export_policy``."""
    actions: dict[MdpState, MdpAction] = {}
    max_len = 0
    declared = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "max_len=" in line:
                declared = int(line.split("max_len=")[1].split()[0])
            continue
        lh, ls, li, fork_name, action_name = line.split()
        s = MdpState(int(lh), int(ls), int(li), Fork[fork_name.upper()])
        actions[s] = MdpAction[action_name.upper()]
        max_len = max(max_len, s.l_h, s.l_s, s.l_i)
    return Policy(declared if declared is not None else max_len, actions)
