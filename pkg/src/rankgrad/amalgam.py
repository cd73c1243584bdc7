"""Splitting a subgroup presentation along a set of cosets.

Given the Reidemeister-Schreier presentation of ``H`` on the non-tree edges
of its Schreier graph and a vertex set ``A``, the relators ``r_t`` are
sorted by whether their edge path touches ``A`` (``R1``) or its complement
(``R2``).  The generators fall into three classes:

* ``X3``: edges of the boundary of ``A``, and every non-tree edge of a
  relator path that crosses the boundary;
* ``X1``: the remaining edges with both ends in ``A``;
* ``X2``: the remaining edges with both ends outside ``A``.

``<X1 u X3 | R1>`` and ``<X2 u X3 | R2>`` then glue along ``<X3 | R1 n R2>``
to a presentation of ``H``.  Paths are read with all their edges, tree
edges included, and a generator "appears" in a relator when its edge lies on
the path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

import numpy as np

from .cosets import BudgetExhausted, SubgroupSpec, enumerate_cosets
from .linalg import abelian_invariants
from .presentations import Presentation, format_presentation
from .schreier import SchreierGraph, SubgroupPresentation, edge_path, vertex_boundary

__all__ = [
    "SplitDatum",
    "TrichotomyWitness",
    "split",
    "witness",
    "search_almost_invariant",
    "optimal_subset",
    "index_condition_probe",
    "witness_json",
]


@dataclass
class SplitDatum:
    A: frozenset[int]
    index: int
    R1: frozenset[int]
    R2: frozenset[int]
    X1: frozenset[int]
    X2: frozenset[int]
    X3: frozenset[int]
    boundary: list[tuple[int, int]]
    sp: SubgroupPresentation = field(repr=False)
    orphans: frozenset[int] = frozenset()

    @property
    def S1(self) -> frozenset[int]:
        return self.X1 | self.X3

    @property
    def S2(self) -> frozenset[int]:
        return self.X2 | self.X3

    @property
    def S3(self) -> frozenset[int]:
        return self.X3

    @property
    def R3(self) -> frozenset[int]:
        return self.R1 & self.R2

    @property
    def trivial(self) -> bool:
        """One side adds no generators, so the amalgam is trivial."""
        return not self.X1 or not self.X2

    def factor(self, which: int) -> Presentation:
        """``T1``, ``T2`` or ``T3`` with generators named ``e<k>`` after the edge numbers."""
        gens = sorted({1: self.S1, 2: self.S2, 3: self.S3}[which])
        rels = sorted({1: self.R1, 2: self.R2, 3: self.R3}[which])
        pos = {k: i + 1 for i, k in enumerate(gens)}
        words = []
        for i in rels:
            r = self.sp.relators[i]
            if r:
                words.append(tuple(pos[abs(x)] if x > 0 else -pos[abs(x)] for x in r))
        return Presentation(tuple(f"e{k}" for k in gens), tuple(words))

    def pushout(self) -> SubgroupPresentation:
        """``<S1 u S2 | R1 u R2>`` over the original generator numbering."""
        rels = tuple(self.sp.relators[i] for i in sorted(self.R1 | self.R2))
        return SubgroupPresentation(self.sp.generator_count, rels)

    def export(self) -> str:
        parts = []
        for k, label in ((1, "T1"), (2, "T2"), (3, "T3")):
            parts.append(f"# {label}\n{format_presentation(self.factor(k))}\n")
        parts.append(f"# amalgamated along {' '.join(f'e{k}' for k in sorted(self.S3)) or '(nothing)'}\n")
        return "".join(parts)

    def as_dict(self) -> dict:
        return {
            "A": sorted(self.A),
            "index": self.index,
            "R1": len(self.R1), "R2": len(self.R2), "R3": len(self.R3),
            "X1": sorted(self.X1), "X2": sorted(self.X2), "X3": sorted(self.X3),
            "orphans": sorted(self.orphans),
            "boundary_edges": len(self.boundary),
            "trivial": self.trivial,
        }


def split(sp: SubgroupPresentation, g: SchreierGraph, A: Iterable[int]) -> SplitDatum:
    A = frozenset(int(v) for v in A)
    n = g.vertex_count
    if not A or len(A) >= n or min(A) < 0 or max(A) >= n:
        raise ValueError("A must be a nonempty proper subset of the vertices")
    act = g.table.action
    inside = np.zeros(n, dtype=bool)
    inside[list(A)] = True
    origin = g.table.origin
    R = origin.relators if origin is not None else ()
    if len(sp.relators) != len(R) * n:
        raise ValueError("subgroup presentation does not match the graph")
    provenance = sp.provenance or tuple((i, t) for i in range(len(R)) for t in range(n))

    boundary = vertex_boundary(g, A)
    X3: set[int] = set()
    for v, s in boundary:
        k = int(g.edge_gen[s, v])
        if k:
            X3.add(k)
    R1, R2 = set(), set()
    appears: set[int] = set()
    for idx, (i, t) in enumerate(provenance):
        path = edge_path(g, R[i], t)
        touch_in = touch_out = False
        crosses = False
        gens = set()
        for v, s, _ in path:
            w = int(act[s, v])
            a, b = inside[v], inside[w]
            touch_in |= a or b
            touch_out |= (not a) or (not b)
            crosses |= a != b
            k = int(g.edge_gen[s, v])
            if k:
                gens.add(k)
        if not path:
            # the empty relator's path is the single vertex t
            touch_in, touch_out = bool(inside[t]), not inside[t]
        if touch_in:
            R1.add(idx)
        if touch_out:
            R2.add(idx)
        if crosses:
            X3 |= gens
        appears |= gens
    X1, X2 = set(), set()
    for k, (v, s) in enumerate(g.nontree_edges, start=1):
        if k in X3:
            continue
        a, b = inside[v], inside[int(act[s, v])]
        if a and b:
            X1.add(k)
        elif not a and not b:
            X2.add(k)
        else:
            X3.add(k)
    orphans = frozenset(set(range(1, g.nontree_count + 1)) - appears)
    datum = SplitDatum(A, n, frozenset(R1), frozenset(R2), frozenset(X1), frozenset(X2), frozenset(X3),
                       boundary, sp, orphans)
    _check_split(datum)
    return datum


def _check_split(d: SplitDatum):
    all_gens = set(range(1, d.sp.generator_count + 1))
    if d.S1 | d.S2 != all_gens or d.S1 & d.S2 != d.S3:
        raise AssertionError("generator classes do not partition the generators")
    if d.R1 | d.R2 != set(range(len(d.sp.relators))):
        raise AssertionError("some relator lies in neither part")
    push = abelian_invariants(d.pushout().relation_rows(), d.sp.generator_count)
    orig = abelian_invariants(d.sp.relation_rows(), d.sp.generator_count)
    if push != orig:
        raise AssertionError("pushout abelianization differs from the subgroup's")


# --------------------------------------------------------------------------
# witnesses and search

@dataclass
class TrichotomyWitness:
    level: int | None
    A: tuple[int, ...]
    index: int
    boundary: int
    L: int
    generator_count: int
    eps: float

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.A), self.index)

    @property
    def lower_size(self) -> Fraction:
        return Fraction(self.index, 4)

    @property
    def upper_size(self) -> Fraction:
        return Fraction(self.index, 2)

    @property
    def boundary_threshold(self) -> Fraction:
        return Fraction(len(self.A), 2 * (1 + self.L ** 2))

    @property
    def size_ok(self) -> bool:
        return self.lower_size < len(self.A) < self.upper_size

    @property
    def boundary_ok(self) -> bool:
        return self.boundary < self.boundary_threshold

    @property
    def hypotheses_met(self) -> bool:
        return self.size_ok and self.boundary_ok

    @property
    def almost_invariant(self) -> bool:
        return self.boundary < self.eps * len(self.A)

    @property
    def X2_bound(self) -> int:
        comp = self.index - len(self.A)
        return (self.generator_count - 1) * comp + 1

    @property
    def X3_bound(self) -> int:
        return self.boundary * (1 + self.L ** 2)

    def key(self):
        return (not self.hypotheses_met, self.boundary, self.A)

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "A": list(self.A),
            "size": len(self.A),
            "index": self.index,
            "density": float(self.density),
            "boundary": self.boundary,
            "index_over_4": float(self.lower_size),
            "index_over_2": float(self.upper_size),
            "boundary_threshold": float(self.boundary_threshold),
            "X2_bound": self.X2_bound,
            "X3_bound": self.X3_bound,
            "size_ok": self.size_ok,
            "boundary_ok": self.boundary_ok,
            "almost_invariant": self.almost_invariant,
            "hypotheses_met": self.hypotheses_met,
        }


def witness(g: SchreierGraph, A: Iterable[int], level: int | None = None, eps: float = 0.0) -> TrichotomyWitness:
    origin = g.table.origin
    L = origin.total_relator_length if origin is not None else 0
    A = tuple(sorted(set(int(v) for v in A)))
    return TrichotomyWitness(level, A, g.vertex_count, len(vertex_boundary(g, A)), L, g.generator_count, eps)


def _neighbours(g: SchreierGraph) -> list[list[int]]:
    """Undirected adjacency with multiplicity, in generator order ``s, s^-1``."""
    act, inv = g.table.action, g.table.inverse_action
    d, n = act.shape
    return [[int(x) for s in range(d) for x in (act[s, v], inv[s, v])] for v in range(n)]


def _ball(nbrs, seed: int, size: int) -> list[int]:
    seen = {seed}
    order = [seed]
    k = 0
    while len(order) < size and k < len(order):
        for w in nbrs[order[k]]:
            if w not in seen:
                seen.add(w)
                order.append(w)
                if len(order) == size:
                    break
        k += 1
    return order


def _improve(g: SchreierGraph, nbrs, A: set[int], rounds: int) -> set[int]:
    """Greedy size-preserving swaps that strictly shrink the boundary; ties to the lowest indices."""
    n = g.vertex_count
    inside = np.zeros(n, dtype=bool)
    inside[list(A)] = True
    for _ in range(rounds):
        # change in boundary edges when a single vertex flips side
        delta = {}
        frontier = set()
        for v in range(n):
            cross = sum(1 for w in nbrs[v] if inside[w] != inside[v] and w != v)
            same = sum(1 for w in nbrs[v] if inside[w] == inside[v] and w != v)
            if cross:
                frontier.add(v)
                for w in nbrs[v]:
                    frontier.add(w)
            delta[v] = same - cross
        best = None
        outs = sorted(v for v in frontier if inside[v])
        ins = sorted(v for v in frontier if not inside[v])
        for u in outs:
            for w in ins:
                # an edge u-w stays crossing when both flip but each delta counted it
                change = delta[u] + delta[w] + 2 * sum(1 for x in nbrs[u] if x == w)
                if change < 0 and (best is None or change < best[0]):
                    best = (change, u, w)
        if best is None:
            break
        _, u, w = best
        inside[u] = False
        inside[w] = True
    return set(int(v) for v in np.nonzero(inside)[0])


def search_almost_invariant(g: SchreierGraph, alpha: float, eps: float, effort: int = 64,
                            level: int | None = None) -> TrichotomyWitness:
    """Best set of size ``round(alpha * index)`` found from ball seeds plus greedy swaps.

    Seeds are tried in vertex order, at most ``effort`` of them, with at most
    ``effort`` swap rounds each.  Candidates are compared by
    ``(hypotheses not met, |boundary|, sorted A)``.  A failed search only
    means no certificate was found.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = g.vertex_count
    size = min(max(1, round(alpha * n)), n - 1) if n > 1 else 1
    if n < 2:
        raise ValueError("the graph needs at least two vertices")
    nbrs = _neighbours(g)
    best = None
    for seed in range(min(n, effort)):
        A = set(_ball(nbrs, seed, size))
        A = _improve(g, nbrs, A, effort)
        w = witness(g, A, level, eps)
        if best is None or w.key() < best.key():
            best = w
    return best


def optimal_subset(g: SchreierGraph, size: int) -> tuple[int, tuple[int, ...]]:
    """Minimum boundary over all vertex sets of the given size (small graphs only)."""
    n = g.vertex_count
    act = g.table.action
    edges = [(v, int(act[s, v])) for s in range(g.generator_count) for v in range(n)]
    best = None
    for A in combinations(range(n), size):
        inside = set(A)
        b = sum(1 for v, w in edges if (v in inside) != (w in inside))
        if best is None or b < best[0]:
            best = (b, A)
    return best


# --------------------------------------------------------------------------
# index evidence

def index_condition_probe(d: SplitDatum, g: SchreierGraph, bound: int = 4, budget: int = 20_000) -> dict:
    """Evidence that ``H3`` has index at least ``bound`` in ``H1`` and ``H2``.

    Reports the generator counts against the size estimates of the
    argument.  When all relators are trivial the factors are free on their
    generators and a proper subset of a basis has infinite index.
    Otherwise ``<S3>`` is coset-enumerated inside ``T1`` and ``T2`` within
    ``budget``; exhausting it leaves the question open.
    """
    origin = g.table.origin
    L = origin.total_relator_length if origin is not None else 0
    dG = g.generator_count
    comp = d.index - len(d.A)
    report: dict = {
        "X1": len(d.X1), "X2": len(d.X2), "X3": len(d.X3),
        "X2_bound": (dG - 1) * comp + 1,
        "X3_bound": len(d.boundary) * (1 + L ** 2),
        "X2_within": len(d.X2) <= (dG - 1) * comp + 1,
        "X3_within": len(d.X3) <= len(d.boundary) * (1 + L ** 2),
        "trivial_amalgam": d.trivial,
        "bound": bound,
    }
    free = not any(d.sp.relators)
    for which, Sk in ((1, d.S1), (2, d.S2)):
        key = f"index_H3_in_H{which}"
        if Sk == d.S3:
            report[key] = 1
            report[key + "_method"] = "equal generating sets"
            continue
        if free:
            report[key] = "infinite"
            report[key + "_method"] = "proper free factor"
            continue
        T = d.factor(which)
        pos = {int(name[1:]): i + 1 for i, name in enumerate(T.generators)}
        spec = SubgroupSpec.generated_by([(pos[k],) for k in sorted(d.S3)])
        try:
            table = enumerate_cosets(T, spec, budget)
            report[key] = table.coset_count
            report[key + "_method"] = "coset enumeration in the factor presentation"
        except BudgetExhausted as exc:
            report[key] = None
            report[key + "_method"] = f"undecided: {exc}"
    vals = [report["index_H3_in_H1"], report["index_H3_in_H2"]]
    report["condition_met"] = all(v == "infinite" or (isinstance(v, int) and v >= bound) for v in vals)
    return report


def witness_json(w: TrichotomyWitness, d: SplitDatum | None = None) -> str:
    rec = {"witness": w.as_dict()}
    if d is not None:
        rec["split"] = d.as_dict()
    return json.dumps(rec, sort_keys=True, indent=2)
