import random

import numpy as np
import pytest
import sympy
from conftest import dense, rank_oracle, snf_oracle

from rankgrad.linalg import (
    abelian_invariants, quotient_map_mod_p, rank, rank_mod_p, rank_rational, relation_rows,
    rref_mod_p, smith_normal_form,
)


def random_rows(rng, nrows, ncols, density=0.4, lo=-3, hi=3):
    rows = []
    for _ in range(nrows):
        r = {}
        for j in range(ncols):
            if rng.random() < density:
                v = rng.randint(lo, hi)
                if v:
                    r[j] = v
        rows.append(r)
    return rows


@pytest.mark.parametrize("p", [0, 2, 3, 5])
def test_rank_matches_sympy(p):
    rng = random.Random(p)
    for _ in range(60):
        nr, nc = rng.randint(1, 9), rng.randint(1, 9)
        rows = random_rows(rng, nr, nc)
        assert rank(rows, p) == rank_oracle(rows, nc, p)


def test_rank_low_rank_products():
    rng = random.Random(7)
    for _ in range(20):
        k = rng.randint(1, 4)
        A = sympy.randMatrix(8, k, -2, 2, seed=rng.randint(0, 10**6))
        B = sympy.randMatrix(k, 10, -2, 2, seed=rng.randint(0, 10**6))
        M = A * B
        rows = [{j: int(M[i, j]) for j in range(10) if M[i, j]} for i in range(8)]
        assert rank_rational(rows) == M.rank() <= k


def test_rref_is_reduced_and_spans():
    rng = random.Random(11)
    for _ in range(40):
        rows = random_rows(rng, 7, 8, lo=0, hi=4)
        basis = rref_mod_p(rows, 5)
        pivots = sorted(basis)
        for c in pivots:
            assert basis[c][c] % 5 == 1
            for c2 in pivots:
                if c2 != c:
                    assert basis[c].get(c2, 0) % 5 == 0
        assert len(basis) == rank_oracle(rows, 8, 5)
        # every input row is a combination of the basis rows
        for r in rows:
            rest = {j: v % 5 for j, v in r.items() if v % 5}
            for c in pivots:
                f = rest.get(c, 0)
                if f:
                    for j, v in basis[c].items():
                        rest[j] = (rest.get(j, 0) - f * v) % 5
            assert not any(rest.values())


def test_smith_normal_form_transforms():
    rng = random.Random(3)
    for _ in range(40):
        m, n = rng.randint(1, 5), rng.randint(1, 5)
        M = [[rng.randint(-6, 6) for _ in range(n)] for _ in range(m)]
        diag, U, V = smith_normal_form(M)
        D = np.array(U, dtype=object) @ np.array(M, dtype=object) @ np.array(V, dtype=object)
        for i in range(m):
            for j in range(n):
                assert D[i, j] == (diag[i] if i == j and i < len(diag) else 0)
        assert abs(sympy.Matrix(U).det()) == 1 and abs(sympy.Matrix(V).det()) == 1
        nz = [d for d in diag if d]
        assert all(b % a == 0 for a, b in zip(nz, nz[1:]))


def test_abelian_invariants_match_sympy():
    rng = random.Random(5)
    for _ in range(60):
        nc = rng.randint(1, 6)
        rows = random_rows(rng, rng.randint(0, 6), nc, lo=-4, hi=4)
        assert abelian_invariants(rows, nc) == snf_oracle(rows, nc)


def test_relation_rows_of_commutator():
    rows = relation_rows([(1, 2, -1, -2), (1, 1)], 2)
    assert dense(rows, 2) == [[0, 0], [2, 0]]
    assert abelian_invariants(rows, 2) == (1, [2])


def test_quotient_map_kills_rowspace():
    rng = random.Random(9)
    for _ in range(30):
        rows = random_rows(rng, 4, 6, lo=0, hi=2)
        r, images = quotient_map_mod_p(rows, 6, 3)
        assert r == 6 - rank_mod_p(rows, 3)
        for row in rows:
            img = [sum(v * images[j][i] for j, v in row.items()) % 3 for i in range(r)]
            assert not any(img)
