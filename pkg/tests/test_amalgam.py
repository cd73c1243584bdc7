import pytest
from conftest import classify_by_walking, random_split_instances, snf_oracle

from rankgrad.amalgam import (
    index_condition_probe, optimal_subset, search_almost_invariant, split, witness, witness_json,
)
from rankgrad.chains import cyclic_images, nested_kernel_chain
from rankgrad.cosets import kernel_table
from rankgrad.presentations import parse_presentation
from rankgrad.schreier import build_graph, reidemeister_schreier

F2 = parse_presentation("gens a b; rels ;")
Z = parse_presentation("gens a; rels ;")
Z2 = parse_presentation("gens a b; rels [a,b];")


def test_random_splits_match_walk_and_abelianization():
    for p, table, A in random_split_instances(25, seed=1):
        g = build_graph(table)
        sp = reidemeister_schreier(g)
        d = split(sp, g, A)
        assert (set(d.X1), set(d.X2), set(d.X3), set(d.R1), set(d.R2)) == classify_by_walking(p, table, g, A)
        ncols = sp.generator_count
        assert snf_oracle(d.pushout().relation_rows(), ncols) == snf_oracle(sp.relation_rows(), ncols)
        assert d.S1 | d.S2 == set(range(1, ncols + 1)) and d.S1 & d.S2 == d.S3


def test_free_group_split_uses_boundary_labels_only():
    g = build_graph(kernel_table(F2, [(1, 2, 3, 0), (0, 1, 3, 2)]))
    sp = reidemeister_schreier(g)
    A = [0, 1]
    d = split(sp, g, A)
    assert not d.R1 and not d.R2
    labels = {int(g.edge_gen[s, v]) for v, s in d.boundary} - {0}
    assert set(d.X3) == labels
    report = index_condition_probe(d, g)
    if not d.trivial:
        assert report["index_H3_in_H1"] == "infinite"


def test_z2_single_vertex_relator_classes():
    table = kernel_table(Z2, [(1, 0, 3, 2), (2, 3, 0, 1)])
    g = build_graph(table)
    sp = reidemeister_schreier(g)
    d = split(sp, g, [0])
    # the commutator path from t visits t, b t, ab t, a t, which is every coset of the Klein quotient
    assert len(d.R1) == 4 and len(d.R2) == 4


def test_split_rejects_improper_sets():
    g = build_graph(kernel_table(Z, cyclic_images(4)))
    sp = reidemeister_schreier(g)
    for A in ([], [0, 1, 2, 3]):
        with pytest.raises(ValueError):
            split(sp, g, A)


def test_trivial_amalgam_flagged():
    table = kernel_table(Z, cyclic_images(6))
    g = build_graph(table)
    sp = reidemeister_schreier(g)
    d = split(sp, g, [0])
    assert d.trivial and not d.X1
    assert index_condition_probe(d, g)["trivial_amalgam"]


def test_export_lists_three_factors():
    table = kernel_table(Z2, [(1, 0, 3, 2), (2, 3, 0, 1)])
    g = build_graph(table)
    d = split(reidemeister_schreier(g), g, [0, 1])
    text = d.export()
    assert text.count("gens") == 3 and "# T3" in text


def test_arc_on_cycle_of_64():
    c = nested_kernel_chain(Z, [cyclic_images(64)])
    g = build_graph(c[1])
    w = search_almost_invariant(g, 3 / 8, eps=0.1, effort=64, level=1)
    assert len(w.A) == 24 and w.boundary == 2 and w.L == 0
    assert w.hypotheses_met and w.boundary_threshold == 12


def test_expanding_quotient_has_no_witness():
    # F2 onto A4 (index 12): every Schreier graph boundary is even and nonzero
    a = (1, 2, 0, 3)
    b = (1, 0, 3, 2)
    table = kernel_table(F2, [a, b])
    g = build_graph(table)
    assert table.coset_count == 12
    for size in (4, 5):
        best, A = optimal_subset(g, size)
        assert not witness(g, A).hypotheses_met
    assert not search_almost_invariant(g, 0.4, eps=0.1).hypotheses_met


def test_search_matches_exhaustive_on_small_graphs():
    # a heuristic in general, but on graphs this small the swaps reach the optimum
    for p, table, _ in random_split_instances(12, seed=5, max_index=12):
        g = build_graph(table)
        if g.vertex_count < 4:
            continue
        size = g.vertex_count // 3
        best, _ = optimal_subset(g, size)
        w = search_almost_invariant(g, size / g.vertex_count, eps=0.5, effort=64)
        assert w.boundary == best


def test_two_vertex_graph():
    g = build_graph(kernel_table(Z, cyclic_images(2)))
    w = search_almost_invariant(g, 0.5, eps=1.0)
    assert len(w.A) == 1 and w.boundary == 2


def test_x3_estimate():
    table = kernel_table(Z, cyclic_images(8))
    w = witness(build_graph(table), [0])
    assert w.X3_bound == w.boundary * 1
    # substitution with one boundary edge and L = 4
    from rankgrad.amalgam import TrichotomyWitness

    assert TrichotomyWitness(None, (0,), 8, 1, 4, 2, 0.1).X3_bound == 17


def test_witness_json_is_sorted():
    g = build_graph(kernel_table(Z, cyclic_images(8)))
    text = witness_json(witness(g, [0, 1, 2]))
    assert '"boundary": 2' in text
