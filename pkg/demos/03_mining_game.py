#!/usr/bin/env python3
"""The n-pool game: who withholds in equilibrium?

Every pool spies on every other, so each can either mine (refined) honestly
or run the withholding strategy itself.  Pure Nash equilibria come in exactly
three shapes, decided by the two largest powers:

* everyone honest                 iff m1 <= 1/3
* only the largest withholds      iff m1 >= 1/3 and m2 <= g(m1)
* the two largest withhold        iff m1 >= 1/3 and m2 >= g(m1)

The brute-force oracle enumerates all 2^n profiles as a check, and the
revenue table shows the third pools' dilemma: they never join in.
"""

from minegames import game
from minegames.game import GameInstance, Strategy

H, I = Strategy.RHONEST, Strategy.INSIGHTFUL

EXAMPLES = [
    (0.30, 0.30, 0.20, 0.20),
    (0.40, 0.20, 0.20, 0.20),
    (0.45, 0.35, 0.20),
    (0.34, 0.33, 0.33),
]


def main():
    for powers in EXAMPLES:
        eq = game.classify_equilibrium(powers)
        _, rrev = game.expected_rewards_profile(GameInstance(powers, eq.witness))
        marks = "".join("I" if s is I else "H" for s in eq.witness)
        found = game.brute_force_nash(powers)
        print(f"powers {powers}")
        print(f"  equilibrium type: {eq.kind.name.lower()}  witness {marks}"
              f"{'  (boundary tie)' if eq.boundary_tie else ''}")
        print(f"  relative revenue: {tuple(round(x, 4) for x in rrev)}")
        print(f"  brute-force equilibria over 2^{len(powers)} profiles: "
              f"{sorted(''.join('I' if s is I else 'H' for s in p) for p in found)}")
        print()

    print("the g boundary for the second pool, m1 from 0.34 to 0.48:")
    print("  " + "  ".join(f"g({a:.2f})={game.g(a):.4f}" for a in (0.34, 0.38, 0.42, 0.46)))

    print("\nwhy a third pool never joins: with two withholders at (0.40, 0.35),")
    m1, m2 = 0.40, 0.35
    print(f"  any third pool with power <= h(m1, m2) = {game.h(m1, m2):.4f} prefers honesty,")
    print(f"  and h >= 1 - m1 - m2 = {1 - m1 - m2:.4f}, the whole remaining power.")


if __name__ == "__main__":
    main()
