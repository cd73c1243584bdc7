"""Looking for a coset set with a small boundary, and the splitting it induces.

On a cycle an arc is optimal, so the search finds a 24-arc on Z/64 with
two boundary edges.  The same machinery on Z^2 cuts the relator paths into
the two sides and reads off a pushout presentation with the same
abelianization as the subgroup.

Run: python demos/splitting_search.py
"""

from rankgrad.amalgam import index_condition_probe, search_almost_invariant, split
from rankgrad.chains import derived_p_chain
from rankgrad.linalg import abelian_invariants
from rankgrad.presentations import parse_presentation
from rankgrad.schreier import build_graph, reidemeister_schreier

line = parse_presentation("gens a; rels ;")
chain = derived_p_chain(line, 2, 6)
g = build_graph(chain[6])
w = search_almost_invariant(g, 3 / 8, eps=0.1, level=6)
print(f"Z/64: |A| = {len(w.A)}, boundary {w.boundary}, threshold {float(w.boundary_threshold)},"
      f" hypotheses met: {w.hypotheses_met}")

torus = parse_presentation("gens a b; rels [a,b];")
chain = derived_p_chain(torus, 2, 3)
g = build_graph(chain[3])
sp = reidemeister_schreier(g)
w = search_almost_invariant(g, 0.3, eps=0.5, level=3)
d = split(sp, g, w.A)
print(f"\nZ^2 level 3 (index {g.vertex_count}): |A| = {len(w.A)}, boundary {w.boundary}")
print(f"generators: {len(d.X1)} inside, {len(d.X2)} outside, {len(d.X3)} shared")
print(f"relators: {len(d.R1)} touch A, {len(d.R2)} touch the complement")
n = sp.generator_count
print("abelianization of the pushout:", abelian_invariants(d.pushout().relation_rows(), n))
print("abelianization of the subgroup:", abelian_invariants(sp.relation_rows(), n))
probe = index_condition_probe(d, g)
print("index of the shared part:", probe["index_H3_in_H1"], "/", probe["index_H3_in_H2"])
