"""Incentive analysis of spy-assisted block withholding in proof-of-work mining.

Modules by concern:

* ``model``        -- lead-state space and the exact transition/reward table
* ``chain_solver`` -- truncated stationary solves, closed forms, dominance
* ``simulator``    -- Monte Carlo engines and threshold sweeps
* ``game``         -- the n-pool honest-vs-withholding game and its equilibria
* ``mdp``          -- optimal withholding response as an average-reward-ratio MDP
* ``cli``          -- batch subcommands over all of the above
"""

__version__ = "0.1.0"

from . import chain_solver, game, mdp, model, simulator  # noqa: F401
from .model import Lead, LeadState, PowerSplit, RewardTriple  # noqa: F401
