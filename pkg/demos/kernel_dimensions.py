"""Normalized kernel dimensions over finite quotients, and the Følner side.

For A = 1 - a on Z the kernel over Z/n is the constants, so dim ker / n
goes to zero along any chain.  The same number appears as m - H from the
ranks h(Omega) over intervals.  On Z^2 the window ranks over an almost
invariant transversal squeeze the image dimension over the quotient.

Run: python demos/kernel_dimensions.py
"""

from rankgrad.amenable import folner_box, folner_interval, weiss_step1
from rankgrad.chains import derived_p_chain
from rankgrad.groups import FreeAbelianModel
from rankgrad.lueck import approx_sequence, ow_limit_estimate, parse_matrix, sandwich
from rankgrad.presentations import parse_presentation

line = parse_presentation("gens a; rels ;")
for field in ("Q", "F2"):
    A = parse_matrix(f"matrix K={field} n=1 m=1\n(1,1) = 1 - a\n", ["a"])
    for p in (2, 3):
        seq = approx_sequence(A, derived_p_chain(line, p, 5))
        vals = ", ".join(str(v) for v in seq.values)
        print(f"{field}, chain {p}^n Z: {vals}")
    model = FreeAbelianModel(1)
    ow = ow_limit_estimate(A, [[model.from_word(w) for w in folner_interval(2 ** k)] for k in range(1, 7)], model)
    print(f"{field}, intervals: h/|Omega| -> {ow.H}, so m - H = {ow.kernel_limit}\n")

# The sandwich on Z^2 with a transversal of (16 Z)^2 built from an 8 x 8 box.
torus = parse_presentation("gens a b; rels [a,b];")
model = FreeAbelianModel(2)
chain = derived_p_chain(torus, 2, 4)
T = weiss_step1(chain, folner_box([8, 8]), model, ratio=3, delta=0.13)
for text in ("1 - a", "1 - a - b + a*b"):
    A = parse_matrix(f"matrix K=Q n=1 m=1\n(1,1) = {text}\n", ["a", "b"])
    r = sandwich(A, chain[T.level], T.elements(), model)
    print(f"[{text}] on |T| = {r['size']}: h = {r['h']} >= dim Im = {r['dim_image']} >= inner = {r['inner']}"
          f" >= h - n|dT| = {r['lower']}")
