"""Schreier graphs, transversals, edge labels and Reidemeister-Schreier.

An oriented edge is a pair ``(v, s)`` going from coset ``v`` to ``s . v``
(``s`` a 0-based generator index).  Its label is the subgroup element
``T(v, s) = t_{sv}^-1 s t_v``; the label is trivial exactly on tree edges.
Non-tree edges are numbered ``1..K`` in ``(v, s)`` order and those numbers
are the generators of the Reidemeister-Schreier presentation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .cosets import CosetTable
from .linalg import relation_rows
from .presentations import Presentation, Word, format_word, inverse, reduce

__all__ = [
    "SchreierGraph",
    "SubgroupPresentation",
    "build_graph",
    "rewrite_relator",
    "edge_path",
    "reidemeister_schreier",
    "vertex_boundary",
]


@dataclass(eq=False)
class SchreierGraph:
    table: CosetTable
    parent: np.ndarray = field(repr=False)
    parent_letter: np.ndarray = field(repr=False)
    edge_gen: np.ndarray = field(repr=False)
    nontree_edges: list[tuple[int, int]] = field(repr=False)

    @property
    def vertex_count(self) -> int:
        return self.table.coset_count

    @property
    def generator_count(self) -> int:
        return self.table.generator_count

    @property
    def edge_count(self) -> int:
        return self.vertex_count * self.generator_count

    @property
    def nontree_count(self) -> int:
        return len(self.nontree_edges)

    @property
    def tree_edges(self) -> list[tuple[int, int]]:
        d = self.generator_count
        return [(v, s) for s in range(d) for v in range(self.vertex_count) if self.edge_gen[s, v] == 0]

    def is_tree_edge(self, v: int, s: int) -> bool:
        return self.edge_gen[s, v] == 0

    @cached_property
    def transversal(self) -> list[Word]:
        words: list[Word | None] = [None] * self.vertex_count
        words[0] = ()
        for v in self._tree_order:
            if v:
                words[v] = (int(self.parent_letter[v]),) + words[int(self.parent[v])]
        return words

    @cached_property
    def _tree_order(self) -> list[int]:
        children: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for v in range(1, self.vertex_count):
            children[int(self.parent[v])].append(v)
        order, k = [0], 0
        while k < len(order):
            order.extend(children[order[k]])
            k += 1
        return order

    def target(self, v: int, s: int) -> int:
        return int(self.table.action[s, v])

    def label_word(self, v: int, s: int) -> Word:
        """The label ``t_{sv}^-1 s t_v`` as a reduced word in the ambient generators."""
        t = self.transversal
        return reduce(inverse(t[self.target(v, s)]) + (s + 1,) + t[v])

    def generator_word(self, k: int) -> Word:
        """Ambient word of the ``k``-th (1-based) presentation generator."""
        return self.label_word(*self.nontree_edges[k - 1])

    def export(self) -> str:
        """One line per oriented edge: ``vertex generator target tree labelword``."""
        names = self.table.origin.generators if self.table.origin else [f"g{i + 1}" for i in range(self.generator_count)]
        lines = []
        for v in range(self.vertex_count):
            for s in range(self.generator_count):
                tree = int(self.edge_gen[s, v] == 0)
                lines.append(f"{v} {names[s]} {self.target(v, s)} {tree} {format_word(self.label_word(v, s), names)}")
        return "\n".join(lines) + "\n"


def _tree_from_order(table: CosetTable, letter_order: Sequence[int]):
    n = table.coset_count
    parent = np.full(n, -1, dtype=np.int64)
    letter = np.zeros(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue, k = [0], 0
    while k < len(queue):
        v = queue[k]
        k += 1
        for x in letter_order:
            w = int(table.letter_perm(x)[v])
            if not seen[w]:
                seen[w] = True
                parent[w] = v
                letter[w] = x
                queue.append(w)
    return parent, letter


def build_graph(table: CosetTable, letter_order: Sequence[int] | None = None) -> SchreierGraph:
    """Schreier graph with the BFS spanning tree.

    The default tree is the one recorded in the table (BFS from coset 0,
    letters tried in the order ``g1, g1^-1, g2, ...``), whose transversal is
    shortlex-minimal.  ``letter_order`` selects a different BFS tie-break.
    """
    if letter_order is None:
        parent, letter = table.parent, table.parent_letter
    else:
        parent, letter = _tree_from_order(table, letter_order)
    d, n = table.action.shape
    edge_gen = np.ones((d, n), dtype=np.int64)
    for v in range(1, n):
        x = int(letter[v])
        if x > 0:
            edge_gen[x - 1, int(parent[v])] = 0
        else:
            edge_gen[-x - 1, v] = 0
    nontree = [(v, s) for v in range(n) for s in range(d) if edge_gen[s, v]]
    for k, (v, s) in enumerate(nontree, start=1):
        edge_gen[s, v] = k
    return SchreierGraph(table, parent, letter, edge_gen, nontree)


def edge_path(g: SchreierGraph, r: Sequence[int], t: int) -> list[tuple[int, int, int]]:
    """Edges traversed by ``r`` from vertex ``t`` in application order.

    Each entry is ``(v, s, sign)``: the edge ``(v, s)`` crossed forwards
    (``sign = 1``) or backwards (``sign = -1``).
    """
    act, inv = g.table.action, g.table.inverse_action
    cur = t
    path = []
    for x in reversed(r):
        if x > 0:
            path.append((cur, x - 1, 1))
            cur = int(act[x - 1, cur])
        else:
            prev = int(inv[-x - 1, cur])
            path.append((prev, -x - 1, -1))
            cur = prev
    return path


def rewrite_relator(g: SchreierGraph, r: Sequence[int], t: int) -> Word:
    """``t^-1 r t`` rewritten as ``T(e_l)...T(e_1)`` over the non-tree edge symbols."""
    out = []
    for v, s, sign in edge_path(g, r, t):
        k = int(g.edge_gen[s, v])
        if k:
            out.append(sign * k)
    return reduce(reversed(out))


@dataclass(frozen=True)
class SubgroupPresentation:
    """Reidemeister-Schreier presentation of a finite-index subgroup.

    Relators are kept one per pair ``(r, t)``, including those that rewrite
    to the empty word, so ``provenance[i] = (relator index, vertex)``.
    """

    generator_count: int
    relators: tuple[Word, ...]
    provenance: tuple[tuple[int, int], ...] = ()

    def relation_rows(self):
        return relation_rows(self.relators, self.generator_count)

    def as_presentation(self) -> Presentation:
        names = tuple(f"e{k}" for k in range(1, self.generator_count + 1))
        return Presentation(names, self.relators)

    @property
    def nonempty_relators(self) -> list[Word]:
        return [r for r in self.relators if r]


def reidemeister_schreier(g: SchreierGraph) -> SubgroupPresentation:
    origin = g.table.origin
    rels: list[Word] = []
    prov = []
    relators = origin.relators if origin is not None else ()
    if relators and g.vertex_count > 2000:
        rels, prov = _rewrite_all_vectorized(g, relators)
    else:
        for i, r in enumerate(relators):
            for t in range(g.vertex_count):
                rels.append(rewrite_relator(g, r, t))
                prov.append((i, t))
    return SubgroupPresentation(g.nontree_count, tuple(rels), tuple(prov))


def _rewrite_all_vectorized(g: SchreierGraph, relators):
    """Rewrite every relator at every vertex at once with numpy."""
    act, inv = g.table.action, g.table.inverse_action
    n = g.vertex_count
    rels: list[Word] = []
    prov = []
    for i, r in enumerate(relators):
        cur = np.arange(n)
        cols = []
        for x in reversed(r):
            if x > 0:
                cols.append(g.edge_gen[x - 1, cur])
                cur = act[x - 1, cur]
            else:
                cur = inv[-x - 1, cur]
                cols.append(-g.edge_gen[-x - 1, cur])
        mat = np.stack(cols[::-1], axis=1)
        for t in range(n):
            row = mat[t]
            rels.append(reduce(int(k) for k in row[row != 0]))
            prov.append((i, t))
    return rels, prov


def vertex_boundary(g: SchreierGraph, A: Iterable[int]) -> list[tuple[int, int]]:
    """Oriented edges ``(v, s)`` with exactly one endpoint in ``A``."""
    inside = np.zeros(g.vertex_count, dtype=bool)
    inside[list(A)] = True
    out = []
    for v in range(g.vertex_count):
        for s in range(g.generator_count):
            if inside[v] != inside[int(g.table.action[s, v])]:
                out.append((v, s))
    return out
