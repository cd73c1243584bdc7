import itertools
import random

import numpy as np
import pytest
from conftest import random_perm
from sympy.combinatorics import Permutation, PermutationGroup
from sympy.combinatorics.fp_groups import FpGroup
from sympy.combinatorics.free_groups import free_group

from rankgrad.chains import lamplighter_presentation
from rankgrad.cosets import (
    BudgetExhausted, CosetTable, InconsistentHomomorphism, SubgroupSpec, enumerate_cosets, kernel_table,
    parse_permutation, parse_subgroup_spec, perm_of_word, stabilizer_table, tables_isomorphic,
)
from rankgrad.presentations import Presentation, parse_presentation


def sympy_index(p: Presentation, words):
    """Subgroup index from sympy's own coset enumeration."""
    F, *gens = free_group(",".join(p.generators))

    def elt(w):
        e = F.identity
        for x in w:
            e = e * (gens[abs(x) - 1] if x > 0 else gens[abs(x) - 1] ** -1)
        return e

    G = FpGroup(F, [elt(r) for r in p.relators])
    C = G.coset_enumeration([elt(w) for w in words])
    C.compress()
    return len(C.table)


def check_table(t: CosetTable, p: Presentation):
    n = t.coset_count
    for i in range(t.generator_count):
        assert sorted(t.action[i]) == list(range(n))
    assert t.failing_relator() is None
    # BFS tree is consistent with the action
    for v in range(1, n):
        x = int(t.parent_letter[v])
        assert t.act((x,), int(t.parent[v])) == v
        assert t.act(t.transversal_word(v), 0) == v


def test_f2_kernel_onto_klein_four():
    p = parse_presentation("gens a b; rels ;")
    t = kernel_table(p, [(1, 0, 3, 2), (2, 3, 0, 1)])
    assert t.coset_count == 4 and t.is_normal()
    check_table(t, p)


def test_z2_even_lattice():
    p = parse_presentation("gens a b; rels [a,b];")
    spec = parse_subgroup_spec("sub gens a^2 b^2", p)
    t = enumerate_cosets(p, spec)
    assert t.coset_count == 4 == sympy_index(p, spec.words)
    check_table(t, p)


def test_modular_group_kernel_onto_c6():
    p = parse_presentation("gens x y; rels x^2 y^3;")
    # x -> order 2, y -> order 3 in C6 acting on itself
    t = kernel_table(p, [tuple((i + 3) % 6 for i in range(6)), tuple((i + 2) % 6 for i in range(6))])
    assert t.coset_count == 6
    check_table(t, p)


@pytest.mark.parametrize("text, images, index", [
    ("gens a b; rels ;", [(1, 0), (1, 0)], 2),
    ("gens a; rels ;", [(1, 2, 3, 4, 0)], 5),
])
def test_small_kernels(text, images, index):
    p = parse_presentation(text)
    assert kernel_table(p, images).coset_count == index


def test_wreath_product_quotient_has_order_64():
    # C2 wr C4 acting on {positions} x {0,1}: t rotates, a flips the bit over position 0
    p = lamplighter_presentation(2)
    t_img = tuple(((k // 2 + 1) % 4) * 2 + k % 2 for k in range(8))
    a_img = tuple(k ^ 1 if k // 2 == 0 else k for k in range(8))
    t = kernel_table(p, [a_img, t_img])
    assert t.coset_count == 64
    assert PermutationGroup([Permutation(list(a_img)), Permutation(list(t_img))]).order() == 64
    check_table(t, p)


def test_inconsistent_images_rejected():
    p = parse_presentation("gens x; rels x^2;")
    with pytest.raises(InconsistentHomomorphism):
        kernel_table(p, [(1, 2, 0)])


def test_budget_exhaustion_reports_partial():
    p = parse_presentation("gens a b; rels [a,b];")
    with pytest.raises(BudgetExhausted) as info:
        enumerate_cosets(p, SubgroupSpec.generated_by([(1,)]), budget=50)
    assert info.value.partial > 0


def test_todd_coxeter_matches_sympy_on_random_subgroups():
    rng = random.Random(4)
    p = parse_presentation("gens a b; rels a^4 b^3 (ab)^2;")  # S4
    for _ in range(15):
        words = [tuple(rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 5))) for _ in range(rng.randint(1, 2))]
        t = enumerate_cosets(p, SubgroupSpec.generated_by(words))
        assert t.coset_count == sympy_index(p, words)
        check_table(t, p)
        for w in words:
            assert t.fixes_base(w)


def test_perm_spec_enumeration_agrees_with_direct_table():
    rng = random.Random(8)
    p = parse_presentation("gens a b; rels ;")
    for _ in range(10):
        images = [random_perm(rng, 6), random_perm(rng, 6)]
        for spec in (SubgroupSpec.kernel(images), SubgroupSpec.stabilizer(images, 0)):
            direct = spec.direct_table(p)
            assert tables_isomorphic(direct, enumerate_cosets(p, spec))
        order = PermutationGroup([Permutation(list(im)) for im in images]).order()
        assert kernel_table(p, images).coset_count == order


def test_stabilizer_index_is_orbit_length():
    p = parse_presentation("gens a b; rels ;")
    images = [(1, 0, 2, 3, 4), (0, 2, 1, 3, 4)]
    t = stabilizer_table(p, images, 0)
    assert t.coset_count == 3


def test_transversal_is_shortlex_minimal():
    p = parse_presentation("gens a b; rels a^4 b^3 (ab)^2;")
    t = enumerate_cosets(p, SubgroupSpec.generated_by([(1,)]))
    order = [1, -1, 2, -2]
    best = {0: ()}
    # brute force: first word in shortlex (by length, then letter order) reaching each coset
    for length in range(1, 6):
        for w in itertools.product(order, repeat=length):
            if any(w[i] == -w[i + 1] for i in range(length - 1)):
                continue
            v = t.act(w, 0)
            if v not in best:
                best[v] = w
    for v in range(t.coset_count):
        rep = t.transversal_word(v)
        assert len(rep) == len(best[v])


def test_parse_permutation_and_word_images():
    assert parse_permutation("(1,2)(3,4,5)", 5) == (1, 0, 3, 4, 2)
    images = [(1, 0, 2), (0, 2, 1)]
    # application order: the rightmost letter acts first
    assert perm_of_word((1, 2), images) == tuple(images[0][images[1][k]] for k in range(3))


def test_word_perm_is_an_action():
    p = parse_presentation("gens a b; rels ;")
    t = kernel_table(p, [(1, 2, 0, 3), (0, 1, 3, 2)])
    u, v = (1, 2), (-2, 1, 1)
    assert np.array_equal(t.word_perm(u + v), t.word_perm(u)[t.word_perm(v)])


def test_refinement_map_detects_nesting():
    p = parse_presentation("gens a; rels ;")
    t4 = kernel_table(p, [(1, 2, 3, 0)])
    t2 = kernel_table(p, [(1, 0)])
    t3 = kernel_table(p, [(1, 2, 0)])
    f = t4.refinement_map(t2)
    assert f is not None
    # BFS numbering is 1, a, a^-1, a^2
    assert [int(x) for x in f] == [len(t4.transversal_word(v)) % 2 for v in range(4)]
    assert t3.refinement_map(t2) is None
