"""From a Følner box to a generating set of a deep subgroup of Z^2.

Step 1 covers the finite quotient by translates of a box and pads the
result to a transversal.  Each refinement step multiplies the transversal
by a transversal of a deeper level that is almost invariant under the
Schreier elements of the current boundary.  The boundary Schreier elements
of the final transversal generate the level, which bounds its rank.

Run: python demos/folner_transversals.py   (about 15 s)
"""

from rankgrad.amenable import (
    C_STEP, folner_box, schreier_generators_from_transversal, weiss_iterate, weiss_step1,
)
from rankgrad.chains import derived_p_chain
from rankgrad.groups import FreeAbelianModel
from rankgrad.presentations import parse_presentation

torus = parse_presentation("gens a b; rels [a,b];")
model = FreeAbelianModel(2)
chain = derived_p_chain(torus, 2, 7)

# A 28 x 28 box has boundary 56 for |S| |A| = 1568, comfortably below 0.1/e.
T = weiss_step1(chain, folner_box([28, 28]), model)
print(f"step 1: level {T.level}, |T| = {T.index}, boundary {T.boundary}, epsilon {T.epsilon_achieved:.5f}"
      f" (target {C_STEP:.4f})")
for check in T.checks:
    print(f"  {'ok ' if check['holds'] else 'BAD'} {check['inequality']}: {check['lhs']:.1f} <= {check['rhs']:.1f}")

seq = weiss_iterate(chain, T, 3, budget=1 << 21)
for k, Tk in enumerate(seq[1:], start=1):
    print(f"refinement {k}: level {Tk.level}, |T| = {Tk.index}, epsilon {Tk.epsilon_achieved:.5f}")

gens = schreier_generators_from_transversal(chain, seq[-1])
print(f"\n{gens.rank_upper} distinct Schreier elements generate a subgroup of index {gens.index}")
print(f"rank gradient upper bound at this level: {float(gens.r_upper):.3e} ({gens.certificate} certificate)")
for y in gens.distinct:
    print("  ", y)
