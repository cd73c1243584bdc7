import random

import pytest
from conftest import random_perm
from sympy.combinatorics import Permutation, PermutationGroup

from rankgrad.cosets import CosetTable
from rankgrad.groups import FiniteGroup, FreeAbelianModel, FreeGroupModel


def test_free_group_model():
    m = FreeGroupModel(2)
    g = m.from_word((1, 2, -2, 1))
    assert g == (1, 1)
    assert m.mul(g, m.inv(g)) == m.identity()
    assert m.to_word(g) == (1, 1)


def test_free_abelian_model_roundtrip():
    m = FreeAbelianModel(3)
    g = m.from_word((1, 2, -1, 3, 3))
    assert g == (0, 1, 2)
    assert m.from_word(m.to_word(g)) == g
    assert m.mul(g, m.inv(g)) == m.identity()


def test_finite_group_from_permutations_matches_sympy():
    rng = random.Random(3)
    for _ in range(10):
        imgs = [random_perm(rng, 5) for _ in range(2)]
        G = FiniteGroup.from_permutations(imgs)
        assert G.order == PermutationGroup([Permutation(list(p)) for p in imgs]).order()
        # associativity and inverses on a sample
        for a in range(0, G.order, max(1, G.order // 7)):
            assert G.mul(a, G.inv(a)) == 0
            for b in range(0, G.order, max(1, G.order // 5)):
                c = (a + b) % G.order
                assert G.mul(G.mul(a, b), c) == G.mul(a, G.mul(b, c))


def test_words_evaluate_consistently():
    G = FiniteGroup.from_permutations([(1, 2, 0, 3), (1, 0, 3, 2)])
    for g in range(G.order):
        assert G.from_word(G.to_word(g)) == g
    u, v = (1, 2, 2), (-1, 2)
    assert G.from_word(u + v) == G.mul(G.from_word(u), G.from_word(v))


def test_cyclic_and_validation():
    G = FiniteGroup.cyclic(7)
    assert G.mul(3, 5) == 1 and G.inv(3) == 4
    with pytest.raises(ValueError):
        FiniteGroup([[1, 0], [0, 1]])


def test_non_normal_table_rejected():
    # stabilizer of a point in S3 acting on 3 points
    action = [[1, 0, 2], [1, 2, 0]]
    t = CosetTable.from_action(action, None, check_relators=False)
    with pytest.raises(ValueError):
        FiniteGroup.from_table(t)
