import math
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rankgrad.amenable import (
    C_STEP, DELTA, QuotientGroup, WeissPreconditionError, boundary_count, boundary_pairs, cover_greedy,
    epsilon_of, folner_box, folner_interval, optimal_cover, schreier_generators_from_transversal,
    weiss_iterate, weiss_step1, weiss_step2,
)
from rankgrad.amenable import _cosets_of
from rankgrad.chains import cyclic_images, derived_p_chain, nested_kernel_chain
from rankgrad.cosets import SubgroupSpec, enumerate_cosets
from rankgrad.groups import FiniteGroup, FreeAbelianModel, FreeGroupModel
from rankgrad.presentations import parse_presentation

Z = parse_presentation("gens a; rels ;")
Z2 = parse_presentation("gens a b; rels [a,b];")


def brute_boundary(A, S, model):
    members = Counter(A)
    return sum(1 for a in A for s in S if members[model.mul(s, a)] == 0)


def test_constants():
    assert DELTA == pytest.approx(0.0367879, rel=1e-5)
    assert C_STEP == pytest.approx(0.8130135, rel=1e-6)


def test_box_boundary_arithmetic():
    m = FreeAbelianModel(2)
    box = [m.from_word(w) for w in folner_box([6, 6])]
    S = [m.from_word((1,)), m.from_word((2,))]
    assert boundary_count(box, S, m) == 12
    assert epsilon_of(12, 2, 36) == Fraction(1, 6)


words = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=6)


@settings(max_examples=60)
@given(st.lists(words, min_size=1, max_size=12), words)
def test_boundary_is_right_translation_invariant(ws, g):
    m = FreeGroupModel(2)
    A = list(dict.fromkeys(m.from_word(w) for w in ws))
    S = [m.from_word((1,)), m.from_word((2,)), m.from_word((-1,))]
    gg = m.from_word(g)
    Ag = [m.mul(a, gg) for a in A]
    assert boundary_count(A, S, m) == boundary_count(Ag, S, m) == brute_boundary(A, S, m)
    assert len(boundary_pairs(A, S, m)) == boundary_count(A, S, m)


def test_cover_cyclic_ten():
    G = FiniteGroup.cyclic(10)
    r = cover_greedy(G, [0, 1, 2], 4)
    assert r.covered >= math.ceil(10 * (1 - 0.7 ** 4)) == 8
    assert optimal_cover(G, [0, 1, 2], 4) >= r.covered


def test_cover_full_set():
    G = FiniteGroup.cyclic(6)
    assert cover_greedy(G, range(6), 1).coverage == 1


def small_groups():
    rng = random.Random(0)
    groups = [FiniteGroup.cyclic(n) for n in (2, 5, 7, 12)]
    while len(groups) < 10:
        imgs = [tuple(rng.sample(range(4), 4)) for _ in range(2)]
        G = FiniteGroup.from_permutations(imgs)
        if G.order > 1:
            groups.append(G)
    return groups


def test_random_covers_meet_bound_and_optimum():
    rng = random.Random(1)
    for G in small_groups():
        n = G.order
        for _ in range(4):
            A = rng.sample(range(n), rng.randint(1, n))
            k = rng.randint(1, 4)
            r = cover_greedy(G, A, k)
            assert r.coverage >= 1 - (1 - Fraction(len(A), n)) ** k
            if n <= 12:
                assert r.covered <= optimal_cover(G, A, k)
            kk = -(-n // len(A))
            assert cover_greedy(G, A, kk).coverage > 1 - 1 / math.e


def test_quotient_group_matches_finite_group():
    p = parse_presentation("gens a b; rels a^4 b^3 (ab)^2;")
    t = enumerate_cosets(p, SubgroupSpec.generated_by([]))
    Q = QuotientGroup(t)
    F = FiniteGroup.from_table(t)
    for g in range(0, 24, 5):
        for h in range(0, 24, 7):
            assert Q.mul(g, h) == F.mul(g, h)


def test_quotient_group_needs_normal_table():
    p = parse_presentation("gens a b; rels a^4 b^3 (ab)^2;")
    t = enumerate_cosets(p, SubgroupSpec.generated_by([(1,)]))
    with pytest.raises(ValueError):
        QuotientGroup(t)


@pytest.fixture(scope="module")
def z_step1():
    c = derived_p_chain(Z, 2, 9)
    return c, weiss_step1(c, folner_interval(28), FreeAbelianModel(1))


def test_interval_step1(z_step1):
    c, T = z_step1
    assert T.level == 9 and T.index == 512
    assert T.epsilon_achieved <= C_STEP
    assert T.epsilon == Fraction(1, 512)
    assert all(ch["holds"] for ch in T.checks)
    assert T.elements()[0] == (0,)


def test_interval_step2_doubles(z_step1):
    c, T1 = z_step1
    seq = weiss_iterate(c, T1, 2)
    for T in seq[1:]:
        assert T.epsilon == Fraction(1, 2 ** T.level)
        exps = sorted(e[0] for e in T.elements())
        assert exps == list(range(exps[0], exps[0] + T.index))
        assert all(ch["holds"] for ch in T.checks)


def test_cyclic_generating_set(z_step1):
    c, T = z_step1
    gs = schreier_generators_from_transversal(c, T)
    assert gs.distinct == [(512,)] or gs.distinct == [(-512,)]
    assert gs.certificate == "direct" and gs.rank_upper == 1


def test_box_generating_set_size():
    c = derived_p_chain(Z2, 2, 7)
    T = weiss_step1(c, folner_box([28, 28]), FreeAbelianModel(2))
    n = T.level
    gs = schreier_generators_from_transversal(c, T)
    assert len(gs.multiset) <= 4 * 2 ** n
    assert gs.r_upper_multiset <= Fraction(4 * 2 ** n, 4 ** n)
    # each generator lies in the level subgroup (2^n Z)^2
    assert all(x % 2 ** n == 0 for y in gs.distinct for x in y)


def test_non_invariant_input_rejected():
    c = derived_p_chain(Z, 2, 4)
    with pytest.raises(ValueError):
        weiss_step1(c, folner_interval(10), FreeAbelianModel(1))


def test_no_level_large_enough():
    c = nested_kernel_chain(Z, [cyclic_images(4), cyclic_images(16)])
    with pytest.raises(WeissPreconditionError):
        weiss_step1(c, folner_interval(28), FreeAbelianModel(1))


def test_step2_needs_boundary(z_step1):
    c, T = z_step1
    from dataclasses import replace

    empty = replace(T, schreier=[])
    with pytest.raises(ValueError):
        weiss_step2(c, empty)


def test_export_matches_letter_by_letter(rng):
    chain = derived_p_chain(Z2, 2, 4)
    model = FreeAbelianModel(2)
    T = weiss_step1(chain, folner_box([4, 4]), model, ratio=3, delta=0.5)
    table = chain[T.level]
    lines = T.export(table, Z2.generators).splitlines()
    assert len(lines) == table.coset_count
    for c, line in enumerate(lines):
        w = parse_presentation(f"gens a b; rels {line if line != '1' else ''};").relators
        assert table.act(w[0] if w else (), 0) == c
    # large exponents go through the cycle jump, not letter by letter
    els = [(rng.randint(-3000, 3000), rng.randint(-3000, 3000)) for _ in range(50)]
    assert _cosets_of(table, els, model) == [table.act(model.to_word(e), 0) for e in els]
