"""Rank bounds along three chains with very different behaviour.

A free group keeps gaining generators at the rate the Schreier count
predicts, Z^2 never needs more than two, and the finite lamplighter
quotients show a mod-2 abelianization that grows with the index.

Run: python demos/rank_gradients.py
"""

from rankgrad.chains import derived_p_chain, lamplighter_chain
from rankgrad.presentations import parse_presentation
from rankgrad.rank import rank_gradient


def show(title, report):
    print(f"\n{title}")
    print(f"  {'level':>5} {'index':>8} {'d(H) in':>10} {'r_lower':>9} {'r_upper':>9}")
    for rec in report.levels:
        b = rec.bounds
        print(f"  {rec.level:>5} {rec.index:>8} {f'[{b.lower}, {b.upper}]':>10} "
              f"{str(rec.r_lower):>9} {str(rec.r_upper):>9}")


# In a free group every finite-index subgroup is free and the Schreier count
# is exact, so (d(H) - 1) / index is 1 at every level.
free = parse_presentation("gens a b; rels ;")
show("F2, derived 2-series", rank_gradient(derived_p_chain(free, 2, 2)))

# Z^2: every level is again a copy of Z^2.  Tietze moves bring the
# Reidemeister-Schreier presentation down to two generators, so the upper
# bound shrinks like 1/index.
torus = parse_presentation("gens a b; rels [a,b];")
show("Z^2, derived 2-series", rank_gradient(derived_p_chain(torus, 2, 4)))

# Lamplighter quotients C2 wr C8 mapped onto C2, C4, C8.  The mod-2
# abelianization of the kernel at level n has rank at least 2^n.
show("lamplighter quotients (mod-2 lower bounds)", rank_gradient(lamplighter_chain(3), mode=2))
