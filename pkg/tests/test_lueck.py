from fractions import Fraction

import numpy as np
import pytest
import sympy
from conftest import circulant_kernel_dim, rank_oracle

from rankgrad.amenable import folner_box, folner_interval, weiss_step1
from rankgrad.chains import cyclic_images, derived_p_chain, nested_kernel_chain
from rankgrad.cosets import SubgroupSpec, enumerate_cosets
from rankgrad.groups import FreeAbelianModel
from rankgrad.lueck import (
    Field, GroupAlgebraMatrix, MatrixSyntaxError, SparseMatrix, approx_sequence, bounded_generation_probe,
    folner_h, kernel_dim, matrix_rank, ow_limit_estimate, parse_matrix, pushforward, sandwich,
)
from rankgrad.presentations import parse_presentation

Z = parse_presentation("gens a; rels ;")
Z2 = parse_presentation("gens a b; rels [a,b];")
F2 = parse_presentation("gens a b; rels ;")
Q, GF2 = Field(0), Field(2)


def one_by_one(text, field="Q", gens=("a",)):
    return parse_matrix(f"matrix K={field} n=1 m=1\n(1,1) = {text}\n", gens)


def test_field_parsing():
    assert Field.parse("Q") == Q and Field.parse("F2") == GF2
    with pytest.raises(ValueError):
        Field.parse("F4")


def test_parse_terms():
    A = parse_matrix("matrix K=Q n=2 m=1\n(1,1) = 1 - a\n(2,1) = 3*a^-1*b + 1/2*b\n", ["a", "b"])
    assert A.entries[(0, 0)] == {(): 1, (1,): -1}
    assert A.entries[(1, 0)] == {(-1, 2): 3, (2,): Fraction(1, 2)}
    assert parse_matrix(A.format(), ["a", "b"]).entries == A.entries


@pytest.mark.parametrize("text", [
    "matrix K=Q n=1\n(1,1) = a\n",
    "matrix K=Q n=1 m=1\n(2,1) = a\n",
    "matrix K=Q n=1 m=1\n(1,1) = c\n",
    "",
])
def test_parse_errors(text):
    with pytest.raises(MatrixSyntaxError):
        parse_matrix(text, ["a", "b"])


def test_finite_field_reduces_coefficients():
    A = one_by_one("2 + a", "F2")
    assert A.entries[(0, 0)] == {(1,): 1}


def test_kernel_dim_basics():
    zero = SparseMatrix(3, 4, [{} for _ in range(4)], Q)
    assert kernel_dim(zero) == 4
    ident = SparseMatrix(5, 5, [{k: 1} for k in range(5)], GF2)
    assert kernel_dim(ident) == 0


def test_pushforward_of_identity_and_difference():
    t = nested_kernel_chain(Z, [cyclic_images(8)])[1]
    assert kernel_dim(pushforward(one_by_one("1"), t)) == 0
    M = pushforward(one_by_one("1 - a"), t)
    assert kernel_dim(M) == 1
    D = np.array(M.dense(), dtype=object)
    perm = t.word_perm((1,))
    C = np.zeros((8, 8), dtype=object)
    for v in range(8):
        C[perm[v], v] = 1
    assert (D == np.eye(8, dtype=object) - C).all()


@pytest.mark.parametrize("coeffs, text", [
    ([1, 1], "1 + a"),
    ([1, 0, 1], "1 + a^2"),
    ([1, 1, 1], "1 + a + a^2"),
    ([1, -1], "1 - a"),
    ([2, 0, 0, 1], "2 + a^3"),
])
@pytest.mark.parametrize("p", [0, 2, 3])
def test_circulants_against_polynomial_gcd(coeffs, text, p):
    A = one_by_one(text, f"F{p}" if p else "Q")
    for n in (4, 6, 9, 12, 16):
        t = nested_kernel_chain(Z, [cyclic_images(n)])[1]
        reduced = [c % p for c in coeffs] if p else coeffs
        assert kernel_dim(pushforward(A, t)) == circulant_kernel_dim(reduced, n, p)


def test_rank_matches_oracle_on_torus():
    A = parse_matrix("matrix K=Q n=2 m=2\n(1,1) = 1 - a\n(1,2) = b\n(2,1) = a*b - 1\n(2,2) = 2\n", ["a", "b"])
    t = derived_p_chain(Z2, 2, 2)[2]
    M = pushforward(A, t)
    rows = [{j: v for j, v in enumerate(r) if v} for r in M.dense()]
    assert matrix_rank(M) == rank_oracle(rows, M.ncols)


def test_pushforward_needs_normal_level():
    p = parse_presentation("gens a b; rels a^4 b^3 (ab)^2;")
    t = enumerate_cosets(p, SubgroupSpec.generated_by([(1,)]))
    with pytest.raises(ValueError):
        pushforward(one_by_one("1 - a", gens=("a", "b")), t)


def test_torus_product_kernel():
    # (1 - a)(1 - b) on (Z/m)^2 has rank (m-1)^2
    A = one_by_one("1 - a - b + a*b", gens=("a", "b"))
    c = nested_kernel_chain(Z2, [_torus(3), _torus(6)])
    for level, m in ((1, 3), (2, 6)):
        assert kernel_dim(pushforward(A, c[level])) == m * m - (m - 1) ** 2


def _torus(m):
    from rankgrad.chains import torus_images

    return torus_images(m)


def test_approx_sequences():
    A = one_by_one("1 - a")
    s2 = approx_sequence(A, derived_p_chain(Z, 2, 6))
    assert s2.values == [Fraction(1, 2 ** k) for k in range(1, 7)]
    s3 = approx_sequence(A, derived_p_chain(Z, 3, 4))
    assert s3.values == [Fraction(1, 3 ** k) for k in range(1, 5)]
    assert abs(s2.estimate - s3.estimate) < 0.2
    zero = GroupAlgebraMatrix(1, 1, {}, Q)
    assert approx_sequence(zero, derived_p_chain(Z, 2, 3)).values == [1, 1, 1]
    csv = s2.to_csv().splitlines()
    assert csv[-1].endswith("0.015625")


def test_folner_h():
    m = FreeAbelianModel(1)
    omega = [m.from_word(w) for w in folner_interval(7)]
    assert folner_h(one_by_one("1"), omega, m) == 7
    assert folner_h(one_by_one("1 - a"), omega, m) == 7
    assert folner_h(GroupAlgebraMatrix(1, 1, {}, Q), omega, m) == 0
    # the banded k x (k+1) matrix oracle
    band = sympy.Matrix(8, 7, lambda i, j: 1 if i == j else -1 if i == j + 1 else 0)
    assert band.rank() == 7


def test_ow_estimates():
    m = FreeAbelianModel(1)
    family = [[m.from_word(w) for w in folner_interval(2 ** k)] for k in range(1, 6)]
    est = ow_limit_estimate(one_by_one("1 - a"), family, m)
    assert est.H == 1 and est.kernel_limit == 0
    est = ow_limit_estimate(GroupAlgebraMatrix(1, 1, {}, Q), family, m)
    assert est.kernel_limit == 1
    two_q = ow_limit_estimate(one_by_one("2"), family, m)
    two_2 = ow_limit_estimate(GroupAlgebraMatrix(1, 1, {(0, 0): {(): 2}}, GF2), family, m)
    assert two_q.kernel_limit == 0 and two_2.kernel_limit == 1


def test_sandwich_on_torus_box_transversal():
    c = derived_p_chain(Z2, 2, 4)
    model = FreeAbelianModel(2)
    T = weiss_step1(c, folner_box([8, 8]), model, ratio=3, delta=0.13)
    for text in ("1 - a", "1 - a - b + a*b"):
        for field in ("Q", "F2"):
            A = one_by_one(text, field, ("a", "b"))
            r = sandwich(A, c[T.level], T.elements(), model)
            assert r["holds"], r
            assert r["h"] >= r["dim_image"] >= r["inner"] >= r["lower"]


def test_sandwich_rejects_non_transversal():
    c = derived_p_chain(Z2, 2, 1)
    model = FreeAbelianModel(2)
    with pytest.raises(ValueError):
        sandwich(one_by_one("1 - a", gens=("a", "b")), c[1], [(0, 0), (1, 0)], model)


def test_bounded_generation_probe():
    rep = bounded_generation_probe(derived_p_chain(Z, 2, 4), 1)
    assert not rep["violations"] and all(r["r"] == 1 for r in rep["levels"])
    rep = bounded_generation_probe(derived_p_chain(Z2, 2, 4), 2)
    assert not rep["violations"] and all(r["r"] == 2 for r in rep["levels"])
    assert rep["levels"][-1]["ratio"] < 0.01
    rep = bounded_generation_probe(derived_p_chain(F2, 2, 2), 2)
    assert rep["violations"][0] == 1 and rep["levels"][1]["r"] == 5
    assert "not a product of 2 cyclic" in rep["message"]
