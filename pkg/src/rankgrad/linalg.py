"""Exact linear algebra: Smith normal form over Z and ranks over F_p and Q.

Sparse vectors are ``dict[int, int]`` mapping a column to a nonzero entry.
Nothing in here touches floating point.
"""

from __future__ import annotations

import heapq
from math import gcd
from typing import Iterable, Mapping, Sequence

__all__ = [
    "smith_normal_form",
    "abelian_invariants",
    "abelianization_rank_from_relations",
    "rank_mod_p",
    "rank_rational",
    "rank",
    "rref_mod_p",
    "quotient_map_mod_p",
    "relation_rows",
]

SparseVec = dict[int, int]


def relation_rows(relators: Iterable[Sequence[int]], generator_count: int) -> list[SparseVec]:
    """Exponent-sum rows of a relator list (the abelianized relation matrix)."""
    rows = []
    for r in relators:
        row: SparseVec = {}
        for x in r:
            c = abs(x) - 1
            if c >= generator_count:
                raise ValueError(f"letter {x} outside {generator_count} generators")
            v = row.get(c, 0) + (1 if x > 0 else -1)
            if v:
                row[c] = v
            else:
                del row[c]
        rows.append(row)
    return rows


# --------------------------------------------------------------------------
# Smith normal form (dense, with transforms)

def smith_normal_form(matrix: Sequence[Sequence[int]]):
    """Return ``(diag, U, V)`` with ``U @ M @ V`` diagonal and ``diag[i] | diag[i+1]``.

    ``U`` and ``V`` are unimodular.  Pivots are chosen by minimal absolute
    value to keep intermediate entries small.
    """
    A = [list(map(int, row)) for row in matrix]
    m = len(A)
    n = len(A[0]) if m else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst += q * row_src
        if q:
            rd, rs = A[dst], A[src]
            for k in range(n):
                if rs[k]:
                    rd[k] += q * rs[k]
            ud, us = U[dst], U[src]
            for k in range(m):
                if us[k]:
                    ud[k] += q * us[k]

    def add_col(dst, src, q):  # col_dst += q * col_src
        if q:
            for row in A:
                if row[src]:
                    row[dst] += q * row[src]
            for row in V:
                if row[src]:
                    row[dst] += q * row[src]

    diag = []
    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                a = row[j]
                if a and (best is None or abs(a) < best[0]):
                    best = (abs(a), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = A[t][t]
            clean = True
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // p))
                    if A[i][t]:
                        clean = False
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // p))
                    if A[t][j]:
                        clean = False
            if not clean:
                # move the smallest leftover in row/column t onto the pivot
                cand = [(abs(A[i][t]), i, t) for i in range(t + 1, m) if A[i][t]]
                cand += [(abs(A[t][j]), t, j) for j in range(t + 1, n) if A[t][j]]
                _, i, j = min(cand)
                if i != t:
                    swap_rows(t, i)
                else:
                    swap_cols(t, j)
                continue
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
        diag.append(A[t][t])
    return diag, U, V


def _dense_invariants(rows: list[SparseVec], cols: list[int]) -> list[int]:
    if not rows or not cols:
        return []
    pos = {c: k for k, c in enumerate(cols)}
    dense = [[0] * len(cols) for _ in rows]
    for i, row in enumerate(rows):
        for c, v in row.items():
            dense[i][pos[c]] = v
    diag, _, _ = smith_normal_form(dense)
    return [d for d in diag if d]


def abelian_invariants(rows: Iterable[Mapping[int, int]], ncols: int) -> tuple[int, list[int]]:
    """Return ``(free_rank, torsion)`` of ``Z^ncols / rowspace``.

    Unit pivots are eliminated sparsely first; whatever remains goes
    through the dense Smith normal form.  ``torsion`` lists invariant
    factors greater than one.
    """
    work: dict[int, SparseVec] = {}
    colrows: dict[int, set[int]] = {}
    for k, row in enumerate(rows):
        row = {c: v for c, v in row.items() if v}
        if not row:
            continue
        work[k] = row
        for c in row:
            colrows.setdefault(c, set()).add(k)
    units = 0
    while True:
        pivot = None
        for k in sorted(work, key=lambda k: (len(work[k]), k)):
            row = work[k]
            c = next((c for c in sorted(row) if abs(row[c]) == 1), None)
            if c is not None:
                pivot = (k, c)
                break
        if pivot is None:
            break
        k, c = pivot
        prow = work.pop(k)
        sign = prow[c]
        for c2 in prow:
            colrows[c2].discard(k)
        for k2 in list(colrows.get(c, ())):
            row = work[k2]
            q = row[c] * sign  # row -= q * prow clears column c
            for c2, v in prow.items():
                nv = row.get(c2, 0) - q * v
                if nv:
                    if c2 not in row:
                        colrows.setdefault(c2, set()).add(k2)
                    row[c2] = nv
                elif c2 in row:
                    del row[c2]
                    colrows[c2].discard(k2)
            if not row:
                del work[k2]
        colrows.pop(c, None)
        units += 1
    remaining_cols = sorted(c for c, ks in colrows.items() if ks)
    diag = _dense_invariants(list(work.values()), remaining_cols)
    nonzero = units + len(diag)
    return ncols - nonzero, [d for d in diag if d > 1]


def abelianization_rank_from_relations(rows, ncols: int) -> int:
    free, torsion = abelian_invariants(rows, ncols)
    return free + len(torsion)


# --------------------------------------------------------------------------
# ranks over fields

def _rank_gf2(vectors: Iterable[Mapping[int, int]]) -> int:
    basis: dict[int, int] = {}
    for vec in vectors:
        x = 0
        for c, v in vec.items():
            if v % 2:
                x ^= 1 << c
        while x:
            low = (x & -x).bit_length() - 1
            b = basis.get(low)
            if b is None:
                basis[low] = x
                break
            x ^= b
    return len(basis)


def rank_mod_p(vectors: Iterable[Mapping[int, int]], p: int) -> int:
    """Rank over F_p of a family of sparse integer vectors."""
    if p == 2:
        return _rank_gf2(vectors)
    basis: dict[int, SparseVec] = {}  # pivot column -> row with leading entry 1
    for vec in vectors:
        x = {c: v % p for c, v in vec.items() if v % p}
        while x:
            piv = min(x)
            b = basis.get(piv)
            if b is None:
                inv = pow(x[piv], -1, p)
                basis[piv] = {c: v * inv % p for c, v in x.items()}
                break
            f = x[piv]
            for c, v in b.items():
                nv = (x.get(c, 0) - f * v) % p
                if nv:
                    x[c] = nv
                else:
                    x.pop(c, None)
    return len(basis)


def rank_rational(vectors: Iterable[Mapping[int, int]]) -> int:
    """Rank over Q by fraction-free elimination on integer vectors.

    Every reduction step is ``x <- b[piv]*x - x[piv]*b`` followed by division
    by the content, so entries stay integral and small.
    """
    basis: dict[int, SparseVec] = {}
    for vec in vectors:
        x = {c: int(v) for c, v in vec.items() if v}
        while x:
            piv = min(x)
            b = basis.get(piv)
            if b is None:
                g = 0
                for v in x.values():
                    g = gcd(g, v)
                basis[piv] = {c: v // g for c, v in x.items()}
                break
            bp, xp = b[piv], x[piv]
            y = {c: bp * v for c, v in x.items()}
            for c, v in b.items():
                nv = y.get(c, 0) - xp * v
                if nv:
                    y[c] = nv
                else:
                    y.pop(c, None)
            g = 0
            for v in y.values():
                g = gcd(g, v)
                if g == 1:
                    break
            x = {c: v // g for c, v in y.items()} if g > 1 else y
    return len(basis)


def rank(vectors: Iterable[Mapping[int, int]], p: int = 0) -> int:
    """Rank over F_p (``p`` prime) or over Q (``p == 0``)."""
    return rank_rational(vectors) if p == 0 else rank_mod_p(vectors, p)


def rref_mod_p(rows: Iterable[Mapping[int, int]], p: int) -> dict[int, SparseVec]:
    """Reduced row echelon form over F_p as ``{pivot column: row}``.

    Rows are first brought to echelon form, reducing each incoming row only
    at the pivot columns it actually meets (tracked with a heap), then
    back-substituted from the largest pivot down.
    """
    echelon: dict[int, SparseVec] = {}
    for vec in rows:
        x = {c: v % p for c, v in vec.items() if v % p}
        _reduce_by(x, echelon, p)
        if not x:
            continue
        piv = min(x)
        inv = pow(x[piv], -1, p)
        echelon[piv] = {c: v * inv % p for c, v in x.items()}
    basis: dict[int, SparseVec] = {}
    for piv in sorted(echelon, reverse=True):
        x = echelon[piv]
        for c in [c for c in x if c != piv and c in basis]:
            f = x.pop(c, 0)
            if f:
                for c2, v in basis[c].items():
                    if c2 == c:
                        continue
                    nv = (x.get(c2, 0) - f * v) % p
                    if nv:
                        x[c2] = nv
                    else:
                        x.pop(c2, None)
        basis[piv] = x
    return basis


def _reduce_by(x: dict[int, int], echelon: Mapping[int, SparseVec], p: int):
    heap = [c for c in x if c in echelon]
    heapq.heapify(heap)
    while heap:
        c = heapq.heappop(heap)
        f = x.get(c)
        if not f:
            continue
        for c2, v in echelon[c].items():
            old = x.get(c2)
            nv = ((old or 0) - f * v) % p
            if nv:
                if old is None and c2 in echelon:
                    heapq.heappush(heap, c2)
                x[c2] = nv
            elif old is not None:
                del x[c2]


def quotient_map_mod_p(rows: Iterable[Mapping[int, int]], ncols: int, p: int) -> tuple[int, list[list[int]]]:
    """Coordinates of ``F_p^ncols / rowspace``.

    Returns ``(r, images)`` where ``images[k]`` is the image of the k-th unit
    vector in ``F_p^r``; coordinates are indexed by the non-pivot columns.
    """
    basis = rref_mod_p(rows, p)
    free = [c for c in range(ncols) if c not in basis]
    slot = {c: i for i, c in enumerate(free)}
    images = []
    for c in range(ncols):
        img = [0] * len(free)
        if c in slot:
            img[slot[c]] = 1
        else:
            for c2, v in basis[c].items():
                if c2 != c:
                    img[slot[c2]] = (-v) % p
        images.append(img)
    return len(free), images
