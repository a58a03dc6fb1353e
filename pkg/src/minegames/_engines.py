"""Numba-compiled Monte Carlo kernels (one block-generation event per step).

Three engines share the conventions here:

* ``walk``        -- a direct random walk over the lead-state transition table,
                     crediting each row's expected reward vector.
* ``three_pool``  -- a block-level simulation of the honest / selfish /
                     insightful pools with integer credits per actual branch
                     outcomes (tie races are sampled, not averaged).
* ``baseline``    -- the classic two-player block-withholding attacker vs an
                     honest rest with tie-break parameter gamma.

Randomness comes from an inline PCG32 stream (seeded via SplitMix64, one
stream per (seed, shard) pair), so results are bit-reproducible across
platforms and worker counts.  Credits are accumulated per batch; the batch of
a credit is decided by the step that settles it, so per-batch totals stay
exact integers for the block-level engines.

Pool ids: 0 = honest, 1 = selfish, 2 = insightful/victim.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint32, uint64

_MASK64 = (1 << 64) - 1
_PCG_MULT = np.uint64(6364136223846793005)
_INV_2_32 = 1.0 / 4294967296.0


def splitmix64(x: int) -> int:
    """One SplitMix64 output for 64-bit integer x (pure Python, seeding only)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream(seed: int, shard: int = 0) -> tuple[np.uint64, np.uint64]:
    """PCG32 (state, inc) for a (seed, shard) pair; shards never collide in inc."""
    base = splitmix64(seed & _MASK64)
    state = splitmix64((base + shard * 0x9E3779B97F4A7C15) & _MASK64)
    inc = splitmix64(state) | 1
    return np.uint64(state), np.uint64(inc)


@njit(inline="always")
def _pcg_next(state, inc):
    old = state
    state = old * _PCG_MULT + inc
    xorshifted = uint32(((old >> uint64(18)) ^ old) >> uint64(27))
    rot = uint32(old >> uint64(59))
    out = uint32((xorshifted >> rot) | (xorshifted << ((uint32(32) - rot) & uint32(31))))
    return state, out


@njit(inline="always")
def _u01(state, inc):
    state, out = _pcg_next(state, inc)
    return state, np.float64(out) * _INV_2_32


@njit(cache=True, nogil=True)
def walk_kernel(alpha, beta, steps, state, inc, nbatch):
    """Random walk over the transition table; expected-reward credits.

    Returns (credits[nbatch, 3] float64, blocks[nbatch] int64); blocks come
    from the per-row integer totals, so their sum is exact.
    """
    h = 1.0 - alpha - beta
    cred = np.zeros((nbatch, 3), dtype=np.float64)
    blocks = np.zeros(nbatch, dtype=np.int64)

    # expected reward vectors of the three tie resolutions
    tx_h, tx_s, tx_i = (3 - 3 * alpha - beta) / 2, (1 + 3 * alpha - beta) / 2, beta
    txy_h, txy_s, txy_i = h, (1 + 3 * alpha - beta) / 2, (1 - alpha + 3 * beta) / 2
    ty_h, ty_s, ty_i = (3 - 2 * alpha - 3 * beta) / 2, alpha, (1 + 3 * beta) / 2

    x = 0  # -1 encodes the x tie marker
    y = 0  # -1 encodes the y tie marker
    for t in range(steps):
        b = t * nbatch // steps
        state, u = _u01(state, inc)
        if y == -1:
            if x == 1:
                cred[b, 0] += txy_h
                cred[b, 1] += txy_s
                cred[b, 2] += txy_i
            else:
                cred[b, 0] += ty_h
                cred[b, 1] += ty_s
                cred[b, 2] += ty_i
            blocks[b] += 2
            x, y = 0, 0
        elif x == -1:
            if y == 0:
                cred[b, 0] += tx_h
                cred[b, 1] += tx_s
                cred[b, 2] += tx_i
                blocks[b] += 2
                x, y = 0, 0
            elif y == 2:
                if u < beta:
                    y = 3
                else:
                    cred[b, 2] += 2.0
                    blocks[b] += 2
                    x, y = 0, 0
            else:
                if u < beta:
                    y += 1
                else:
                    cred[b, 2] += 1.0
                    blocks[b] += 1
                    x, y = 0, y - 1
        elif y == 0:
            if x == 0:
                if u < h:
                    cred[b, 0] += 1.0
                    blocks[b] += 1
                elif u < h + alpha:
                    x = 1
                else:
                    y = 1
            elif x == 1:
                if u < h:
                    x = -1
                elif u < h + beta:
                    y = -1
                else:
                    x = 2
            elif x == 2:
                if u < alpha:
                    x = 3
                else:
                    cred[b, 1] += 2.0
                    blocks[b] += 2
                    x = 0
            else:
                if u < alpha:
                    x += 1
                else:
                    cred[b, 1] += 1.0
                    blocks[b] += 1
                    x -= 1
        elif y == 1:
            if u < alpha:
                x, y = 1, -1
            elif u < alpha + h:
                x, y = 0, -1
            else:
                y = 2
        elif y == 2:
            if x == 0:
                if u < 1.0 - beta:
                    cred[b, 2] += 2.0
                    blocks[b] += 2
                    y = 0
                else:
                    y = 3
            else:
                if u < beta:
                    y = 3
                elif u < beta + h:
                    if x == 1:
                        x = -1
                    elif x == 2:
                        x = 0
                    else:
                        x -= 1
                else:
                    cred[b, 2] += 2.0
                    blocks[b] += 2
                    x, y = 0, 0
        else:  # y >= 3
            if x == 0:
                if u < beta:
                    y += 1
                elif u < beta + h:
                    cred[b, 2] += 1.0
                    blocks[b] += 1
                    y -= 1
                else:
                    cred[b, 2] += 1.0
                    blocks[b] += 1
                    x, y = 1, y - 1
            else:
                if u < beta:
                    y += 1
                elif u < beta + alpha:
                    cred[b, 2] += 1.0
                    blocks[b] += 1
                    x, y = x + 1, y - 1
                else:
                    if x == 1:
                        x = -1
                    elif x == 2:
                        x = 0
                    else:
                        x -= 1
    return cred, blocks


# three_pool_kernel phases
_CONSENSUS = 0
_SELFISH_LED = 1
_RACE = 2
_INSIGHTFUL_LED = 3


@njit(cache=True, nogil=True)
def three_pool_kernel(alpha, beta, steps, state, inc, selfish_active, insightful_active, nbatch):
    """Block-level three-pool run; integer credits[nbatch, 3].

    ``selfish_active`` / ``insightful_active`` switch the alpha / beta pools
    between their strategic behavior and plain honest mining.  Honest pools
    split 1/2 on public ties; the insightful pool deterministically mines
    against the selfish branch while the selfish pool leads.
    """
    cred = np.zeros((nbatch, 3), dtype=np.int64)

    phase = _CONSENSUS
    s_hidden = 0  # selfish-led: hidden selfish branch length
    pub_h = 0  # selfish-led: honest-owned blocks on the public branch
    pub_i = 0  # selfish-led: insightful-owned blocks on the public branch
    race_a = 0  # race: owner of the withholder-side branch (1 block)
    race_b = 0  # race: owner of the other branch (1 block)
    i_hidden = 0  # insightful-led: hidden insightful branch length
    others = 0  # insightful-led: best others-side chain length
    xsub = 0  # insightful-led: selfish sub-lead; -1 encodes an others tie

    for t in range(steps):
        b = t * nbatch // steps
        state, u = _u01(state, inc)
        if u < 1.0 - alpha - beta:
            miner = 0
        elif u < 1.0 - beta:
            miner = 1
        else:
            miner = 2

        if phase == _CONSENSUS:
            if miner == 1 and selfish_active:
                phase = _SELFISH_LED
                s_hidden = 1
                pub_h = 0
                pub_i = 0
            elif miner == 2 and insightful_active:
                phase = _INSIGHTFUL_LED
                i_hidden = 1
                others = 0
                xsub = 0
            else:
                cred[b, miner] += 1

        elif phase == _SELFISH_LED:
            if miner == 1:
                s_hidden += 1
            else:
                if miner == 0:
                    pub_h += 1
                else:
                    pub_i += 1
                lead = s_hidden - (pub_h + pub_i)
                if lead == 0:
                    # both branches have length 1 (lead-1 states are only
                    # entered fresh); next block decides the round
                    phase = _RACE
                    race_a = 1
                    race_b = miner
                elif lead == 1:
                    # caught up from lead 2: reveal everything, win outright
                    cred[b, 1] += s_hidden
                    phase = _CONSENSUS

        elif phase == _RACE:
            if miner == race_a:
                side_a = True
            elif miner == race_b and (miner != 0) and not (miner == 1 and not selfish_active) and not (miner == 2 and not insightful_active):
                # a withholder mines its own revealed branch; honest owners
                # still split uniformly below
                side_a = False
            elif miner == 2 and insightful_active:
                side_a = race_a != 1  # against the selfish side
            elif miner == 1 and selfish_active:
                # selfish pool without a branch in this race splits uniformly
                state, v = _u01(state, inc)
                side_a = v < 0.5
            else:
                state, v = _u01(state, inc)
                side_a = v < 0.5
            if side_a:
                cred[b, race_a] += 1
            else:
                cred[b, race_b] += 1
            cred[b, miner] += 1
            phase = _CONSENSUS

        else:  # _INSIGHTFUL_LED
            if miner == 2:
                i_hidden += 1
            else:
                grew = False
                if miner == 1 and selfish_active:
                    # hidden selfish block: the spy sees it, so it counts
                    # toward the others-side best chain immediately
                    if xsub == -1:
                        xsub = 0
                    else:
                        xsub += 1
                    others += 1
                    grew = True
                else:
                    if xsub == -1:
                        xsub = 0
                        others += 1
                        grew = True
                    elif xsub == 0:
                        others += 1
                        grew = True
                    elif xsub == 1:
                        xsub = -1  # selfish reveals; others now tied
                    elif xsub == 2:
                        xsub = 0  # selfish branch wins the others race
                    else:
                        xsub -= 1
                if grew:
                    lead = i_hidden - others
                    if lead == 1:
                        cred[b, 2] += i_hidden
                        phase = _CONSENSUS
                    elif lead == 0:
                        # i_hidden == 1: reveal creates a 1-vs-1 race
                        phase = _RACE
                        if miner == 1 and selfish_active:
                            race_a = 1
                            race_b = 2
                        else:
                            race_a = 2
                            race_b = miner
    return cred


@njit(cache=True, nogil=True)
def baseline_kernel(alpha, gamma, steps, state, inc, nbatch):
    """Classic two-player block withholding vs honest rest; credits[nbatch, 2].

    Column 0 is the honest rest, column 1 the attacker.  ``gamma`` is the
    fraction of honest power that mines on the attacker branch during a tie.
    """
    cred = np.zeros((nbatch, 2), dtype=np.int64)
    phase = _CONSENSUS
    s_hidden = 0
    pub = 0

    for t in range(steps):
        b = t * nbatch // steps
        state, u = _u01(state, inc)
        attacker = u < alpha

        if phase == _CONSENSUS:
            if attacker:
                phase = _SELFISH_LED
                s_hidden = 1
                pub = 0
            else:
                cred[b, 0] += 1

        elif phase == _SELFISH_LED:
            if attacker:
                s_hidden += 1
            else:
                pub += 1
                lead = s_hidden - pub
                if lead == 0:
                    phase = _RACE
                elif lead == 1:
                    cred[b, 1] += s_hidden
                    phase = _CONSENSUS

        else:  # _RACE: 1-block attacker branch vs 1-block honest branch
            if attacker:
                cred[b, 1] += 2
            else:
                state, v = _u01(state, inc)
                if v < gamma:
                    cred[b, 1] += 1
                    cred[b, 0] += 1
                else:
                    cred[b, 0] += 2
            phase = _CONSENSUS
    return cred
