"""Multiset boundaries, covering by translates and almost-invariant transversals.

Boundaries are taken with respect to a generating multiset ``S`` acting by
left multiplication::

    boundary_S(A) = {(a, s a) : a in A, s in S, s a not in A}

counted with multiplicity.  Elements of the (infinite) ambient group are
handled through a :class:`~rankgrad.groups.GroupModel`; cosets through the
chain levels.

The transversal construction runs in two steps.  Step 1 turns a Følner set
``A`` into a transversal of some level by covering the finite quotient with
translates of ``A``.  Step 2 takes a transversal ``T1`` of ``G_k``, collects
the Schreier elements of its boundary pairs (a generating multiset ``S1``
of ``G_k``), finds a transversal ``T2`` of a deeper level ``G_l`` inside
``G_k`` that is almost invariant for ``S1``, and returns ``T = T1 T2``.
Boundary pairs of ``T`` correspond one to one with boundary pairs of ``T2``
for ``S1``, so invariance improves by the factor achieved by ``T2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Sequence

import numpy as np

from .chains import Chain
from .cosets import CosetTable
from .groups import FreeAbelianModel, GroupModel
from .presentations import Word, format_word

__all__ = [
    "DELTA",
    "C_STEP",
    "WeissPreconditionError",
    "QuotientGroup",
    "CoverResult",
    "InvariantTransversal",
    "SchreierGeneratingSet",
    "boundary_pairs",
    "boundary_count",
    "epsilon_of",
    "cover_greedy",
    "optimal_cover",
    "weiss_step1",
    "weiss_step2",
    "weiss_iterate",
    "schreier_generators_from_transversal",
    "folner_interval",
    "folner_box",
]

DELTA = 0.1 / math.e
C_STEP = 2.21 / math.e


class WeissPreconditionError(ValueError):
    """No materialized level satisfies the construction's hypotheses; extend the chain."""


# --------------------------------------------------------------------------
# boundaries

def boundary_pairs(A: Sequence[Hashable], S: Sequence[Hashable], model: GroupModel) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)`` with ``S[j] A[i]`` outside ``A`` (``A`` treated as a set for membership)."""
    members = set(A)
    out = []
    for i, a in enumerate(A):
        for j, s in enumerate(S):
            if model.mul(s, a) not in members:
                out.append((i, j))
    return out


def boundary_count(A: Sequence[Hashable], S: Sequence[Hashable], model: GroupModel) -> int:
    members = set(A)
    total = 0
    for s in S:
        mul = model.mul
        total += sum(1 for a in A if mul(s, a) not in members)
    return total


def epsilon_of(boundary: int, s_size: int, a_size: int) -> Fraction:
    """The invariance ``|boundary| / (|S| |A|)`` as an exact fraction."""
    return Fraction(boundary, s_size * a_size)


def folner_interval(n: int, generator: int = 1) -> list[Word]:
    """``{g^0, ..., g^(n-1)}``."""
    return [(generator,) * k for k in range(n)]


def folner_box(sides: Sequence[int]) -> list[Word]:
    """Box ``{a1^i1 a2^i2 ... : 0 <= i_j < sides[j]}`` in a free abelian group."""
    words: list[Word] = [()]
    for g, n in enumerate(sides, start=1):
        words = [w + (g,) * k for w in words for k in range(n)]
    return words


# --------------------------------------------------------------------------
# finite quotients and covering

class QuotientGroup:
    """The group ``G / N`` of a normal coset table, elements being cosets.

    Multiplication uses the left action of coset representatives, so no
    Cayley table is ever materialized.
    """

    def __init__(self, table: CosetTable):
        if not table.is_normal():
            raise ValueError("coset table is not normal; its cosets do not form a group")
        self.table = table
        self._perms: dict[int, np.ndarray] = {}

    @property
    def order(self) -> int:
        return self.table.coset_count

    def __len__(self) -> int:
        return self.order

    def left_perm(self, g: int) -> np.ndarray:
        p = self._perms.get(g)
        if p is None:
            p = self.table.word_perm(self.table.transversal_word(g))
            self._perms[g] = p
        return p

    def mul(self, g: int, h: int) -> int:
        return int(self.table.act(self.table.transversal_word(g), h))


@dataclass
class CoverResult:
    X: list[int]
    covered: int
    order: int
    size_A: int
    k: int
    gains: list[int] = field(default_factory=list)

    @property
    def coverage(self) -> Fraction:
        return Fraction(self.covered, self.order)

    @property
    def bound(self) -> Fraction:
        """``1 - (1 - mu(A))^k``."""
        return 1 - (1 - Fraction(self.size_A, self.order)) ** self.k

    @property
    def meets_bound(self) -> bool:
        return self.coverage >= self.bound


def cover_greedy(G, A: Sequence[int], k: int) -> CoverResult:
    """Greedily pick ``k`` elements ``g`` maximizing the new part of ``A g``.

    ``G`` needs ``order`` and ``left_perm(a)`` (the map ``g -> a g``).  Ties go
    to the lowest element index.  Each round the averaging argument
    guarantees some ``g`` with ``|Ag minus B| >= |A| (1 - |B|/|G|)``; the
    greedy gain is asserted to reach it.
    """
    A = list(dict.fromkeys(int(a) for a in A))
    if not A:
        raise ValueError("A must be nonempty")
    n = G.order
    L = np.stack([G.left_perm(a) for a in A])  # L[i, g] = A[i] g
    covered = np.zeros(n, dtype=bool)
    X: list[int] = []
    gains = []
    for _ in range(k):
        counts = (~covered)[L].sum(axis=0)
        g = int(np.argmax(counts))
        gain = int(counts[g])
        b = int(covered.sum())
        if gain * n < len(A) * (n - b):
            raise AssertionError("greedy step fell below the averaging guarantee")
        X.append(g)
        gains.append(gain)
        covered[L[:, g]] = True
    result = CoverResult(X, int(covered.sum()), n, len(A), k, gains)
    if not result.meets_bound:
        raise AssertionError("greedy cover below 1 - (1 - mu(A))^k")
    return result


def optimal_cover(G, A: Sequence[int], k: int) -> int:
    """``max |AX|`` over all ``X`` of size ``k``, by exhaustion (small groups only)."""
    A = list(dict.fromkeys(int(a) for a in A))
    n = G.order
    L = np.stack([G.left_perm(a) for a in A])
    cols = [frozenset(int(x) for x in L[:, g]) for g in range(n)]
    best = 0
    for X in combinations(range(n), min(k, n)):
        best = max(best, len(frozenset().union(*(cols[g] for g in X))))
        if best == n:
            break
    return best


# --------------------------------------------------------------------------
# transversals

@dataclass(eq=False)
class InvariantTransversal:
    """A transversal of ``G_level`` in ``G`` with its measured invariance.

    Step-1 transversals store their elements indexed by coset.  Step-2
    transversals are stored as the product ``parent * factor``; ``elements``
    materializes them on demand.
    """

    level: int
    index: int
    S: list
    boundary: int
    schreier: list  # Schreier elements of the boundary pairs, with repetition
    model: GroupModel = field(repr=False)
    by_coset: list | None = field(default=None, repr=False)
    parent: "InvariantTransversal | None" = field(default=None, repr=False)
    factor: list | None = field(default=None, repr=False)
    checks: list[dict] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.index

    @property
    def epsilon(self) -> Fraction:
        return epsilon_of(self.boundary, len(self.S), self.index)

    @property
    def epsilon_achieved(self) -> float:
        return float(self.epsilon)

    def elements(self) -> list:
        if self.by_coset is not None:
            return list(self.by_coset)
        mul = self.model.mul
        base = self.parent.elements()
        return [mul(t1, t2) for t2 in self.factor for t1 in base]

    def coset_indexed(self, table: CosetTable) -> list:
        """Elements ordered by their coset in ``table`` (the level's table)."""
        if self.by_coset is not None:
            return list(self.by_coset)
        out: list = [None] * self.index
        elements = self.elements()
        for t, c in zip(elements, _cosets_of(table, elements, self.model)):
            if out[c] is not None:
                raise AssertionError("two elements of the transversal share a coset")
            out[c] = t
        return out

    def report(self, epsilon_bound: float | None = None) -> dict:
        return {
            "level": self.level,
            "size": self.index,
            "boundary": self.boundary,
            "epsilon_achieved": self.epsilon_achieved,
            "epsilon_bound": epsilon_bound,
        }

    def export(self, table: CosetTable, names: Sequence[str]) -> str:
        """One word per line, in coset order."""
        if isinstance(self.model, FreeAbelianModel):
            fmt = lambda t: _format_exponents(t, names)
        else:
            fmt = lambda t: format_word(self.model.to_word(t), names)
        return "".join(fmt(t) + "\n" for t in self.coset_indexed(table))


def _format_exponents(g: Sequence[int], names: Sequence[str]) -> str:
    parts = [names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(g) if e]
    return "*".join(parts) or "1"


def _cosets_of(table: CosetTable, elements, model) -> list[int]:
    if isinstance(model, FreeAbelianModel) and len(elements):
        # apply each generator power to all elements at once, last generator first
        exps = np.asarray(elements, dtype=np.int64).reshape(len(elements), -1)
        pts = np.zeros(len(elements), dtype=np.int64)
        for i in reversed(range(exps.shape[1])):
            pts = table.power_of_letter(i + 1, exps[:, i], pts)
        return pts.tolist()
    return [table.act(model.to_word(e), 0) for e in elements]


def weiss_step1(chain: Chain, A_words: Sequence[Sequence[int]], model: GroupModel,
                S_words: Sequence[Sequence[int]] | None = None, *, delta: float = DELTA,
                ratio: int = 10, c: float = C_STEP, max_depth: int | None = None,
                budget: int | None = None) -> InvariantTransversal:
    """Turn a ``delta``-invariant set into a ``c``-invariant transversal.

    The level used is the first one where ``A`` maps injectively and the
    index exceeds ``ratio * |A|``; the chain is extended up to ``max_depth``
    when needed.  The greedy cover uses ``ceil(index / |A|)`` translates.
    The padded transversal is right-translated so that it contains the
    identity, which leaves its boundary unchanged.
    """
    d = chain.presentation.generator_count
    if S_words is None:
        S_words = [(i,) for i in range(1, d + 1)]
    S = [model.from_word(w) for w in S_words]
    A = [model.from_word(w) for w in A_words]
    if len(set(A)) != len(A):
        raise ValueError("the Følner set lists an element twice")
    bA = boundary_count(A, S, model)
    if bA > delta * len(S) * len(A):
        raise ValueError(f"A is not delta-invariant: boundary {bA} > {delta:.5f} * {len(S)} * {len(A)}")

    j = None
    n = 0
    while j is None:
        if n > chain.depth:
            if max_depth is not None and n <= max_depth and chain.builder is not None:
                chain.extend(n, budget)
            if n > chain.depth:
                raise WeissPreconditionError(
                    f"no level up to {chain.depth} has index > {ratio}*|A| with A injective; extend the chain")
        table = chain[n]
        if table.coset_count > ratio * len(A) and chain.normal_flags[n]:
            cos = _cosets_of(table, A, model)
            if len(set(cos)) == len(A):
                j = n
                break
        n += 1

    table = chain[j]
    index = table.coset_count
    G = QuotientGroup(table)
    Abar = _cosets_of(table, A, model)
    k = -(-index // len(A))
    cover = cover_greedy(G, Abar, k)
    if not cover.coverage > 1 - 1 / math.e:
        raise AssertionError("cover does not reach 1 - 1/e")

    reps = [model.from_word(w) for w in table.transversal()]
    B: dict[int, Hashable] = {}
    for x in cover.X:
        for a, abar in zip(A, Abar):
            coset = int(G.left_perm(abar)[x])
            if coset not in B:
                B[coset] = model.mul(a, reps[x])
    T = [B.get(v, reps[v]) for v in range(index)]
    shift = model.inv(T[0])
    T = [model.mul(t, shift) for t in T]
    if _cosets_of(table, T, model) != list(range(index)):
        raise AssertionError("padded set is not a transversal")

    pairs = boundary_pairs(T, S, model)
    bT = len(pairs)
    eps = bT / (len(S) * index)

    # re-evaluate the inequalities of the construction on this instance
    AX = [model.mul(a, reps[x]) for x in cover.X for a in A]
    AX_set = set(AX)
    bAX = sum(1 for s in S for t in AX if model.mul(s, t) not in AX_set)
    B_list = list(B.values())
    bB = boundary_count(B_list, S, model)
    sS, sA, sX, sB = len(S), len(A), len(cover.X), len(B_list)
    checks = [
        _check("|dB| <= |d(AX)| + |S|(|AX|-|B|)", bB, bAX + sS * (sA * sX - sB)),
        _check("|d(AX)| <= delta |S||A||X|", bAX, delta * sS * sA * sX),
        _check("|AX|-|B| <= |A||X|/e", sA * sX - sB, sA * sX / math.e),
        _check("|A||X| <= |G/G_j| + |A|", sA * sX, index + sA),
        _check("|dB| <= 1.21/(e-1) |S||B|", bB, 1.21 / (math.e - 1) * sS * sB),
        _check("|dT| <= |dB| + |S|(|T|-|B|)", bT, bB + sS * (index - sB)),
        _check("|dT| <= 2.21/e |S||T|", bT, c * sS * index),
    ]
    if eps > c:
        raise AssertionError(f"step 1 transversal is only {eps:.4f}-invariant, above {c:.4f}")
    schreier = _schreier_multiset(table, T, S, S_words, pairs, model)
    return InvariantTransversal(j, index, S, bT, schreier, model, by_coset=T, checks=checks)


def _check(name: str, lhs, rhs) -> dict:
    return {"inequality": name, "lhs": float(lhs), "rhs": float(rhs), "holds": bool(lhs <= rhs + 1e-9)}


def _schreier_multiset(table, T, S, S_words, pairs, model) -> list:
    """``(~(s t))^-1 s t`` for each boundary pair ``(t, s t)`` of a coset-indexed transversal."""
    out = []
    for i, j in pairs:
        st = model.mul(S[j], T[i])
        target = table.act(S_words[j], i)
        out.append(model.mul(model.inv(T[target]), st))
    return out


def weiss_step2(chain: Chain, T1: InvariantTransversal, *, c: float = C_STEP, effort: int = 4,
                brute_force_cap: int = 1 << 21, inner=None, budget: int | None = None) -> InvariantTransversal:
    """One refinement step ``T = T1 T2``.

    ``T2`` is a transversal of ``G_l`` in ``G_k`` (``k = T1.level``) read off a
    breadth-first search of the cosets of ``G_l`` inside ``G_k`` under the
    Schreier multiset ``S1`` of ``T1``'s boundary; levels ``l = k+1, k+2, ...``
    are tried (at most ``effort`` of them) until ``T2`` is ``c``-invariant
    for ``S1``.  ``inner(chain, k, l, S1)`` may supply ``T2`` instead.

    The boundary of ``T`` is counted through ``T2`` and, when
    ``|T| <= brute_force_cap``, also directly in the ambient group.
    """
    model = T1.model
    S1 = T1.schreier
    if not S1:
        raise ValueError("T1 has empty boundary; a finite transversal of an infinite group cannot")
    k = T1.level
    distinct = list(dict.fromkeys(S1))
    words = {h: model.to_word(h) for h in distinct}
    for l in range(k + 1, k + 1 + effort):
        if l > chain.depth:
            chain.extend(l, budget)
            if l > chain.depth:
                raise WeissPreconditionError(
                    f"chain stops at level {chain.depth}; cannot reach level {l} ({chain.truncated})")
        table = chain[l]
        size = table.coset_count // chain[k].coset_count
        if inner is not None:
            T2, cosets = inner(chain, k, l, S1)
        else:
            T2, cosets = _bfs_transversal(table, distinct, words, model, size)
        pos = {cv: i for i, cv in enumerate(cosets)}
        T2set = set(T2)
        pairs = []
        for j, h in enumerate(S1):
            for i, t2 in enumerate(T2):
                if model.mul(h, t2) not in T2set:
                    pairs.append((i, j))
        bd = len(pairs)
        if bd <= c * len(S1) * len(T2):
            break
    else:
        raise WeissPreconditionError(f"no c-invariant T2 found within {effort} levels below {k}")

    schreier = []
    for i, j in pairs:
        h = S1[j]
        ht2 = model.mul(h, T2[i])
        target = pos[table.act(words[h], cosets[i])]
        schreier.append(model.mul(model.inv(T2[target]), ht2))

    sigma = T1.epsilon
    result = InvariantTransversal(l, table.coset_count, T1.S, bd, schreier, model, parent=T1, factor=T2)
    nS = len(T1.S)
    checks = [
        _check("|dS1(T2)| <= c |S1||T2|", bd, c * len(S1) * len(T2)),
        _check("|S1| <= sigma |S||T1|", len(S1), sigma * nS * T1.index),
        _check("|dS(T)| <= c sigma |S||T|", bd, c * sigma * nS * result.index),
    ]
    if result.index <= brute_force_cap:
        T = result.elements()
        if len(set(T)) != len(T):
            raise AssertionError("T1 T2 has repeated elements")
        direct = boundary_count(T, T1.S, model)
        checks.append(_check("|dS(T1T2)| <= |dS1(T2)|", direct, bd))
        checks.append({"inequality": "|dS(T1T2)| == |dS1(T2)|", "lhs": direct, "rhs": bd, "holds": direct == bd})
        if direct > bd:
            raise AssertionError(f"product inequality fails: {direct} > {bd}")
    result.checks = checks
    return result


def _bfs_transversal(table: CosetTable, gens: list, words: dict, model, size: int):
    """Breadth-first representatives of the cosets reachable from 0 under ``gens`` and inverses."""
    steps = [(h, words[h]) for h in gens] + [(model.inv(h), tuple(-x for x in reversed(words[h]))) for h in gens]
    reps = [model.identity()]
    cosets = [0]
    seen = {0}
    q = 0
    while q < len(reps) and len(reps) < size:
        t, cv = reps[q], cosets[q]
        for h, w in steps:
            nv = table.act(w, cv)
            if nv not in seen:
                seen.add(nv)
                reps.append(model.mul(h, t))
                cosets.append(nv)
        q += 1
    if len(reps) != size:
        raise AssertionError(f"Schreier elements reach {len(reps)} of {size} cosets")
    return reps, cosets


def weiss_iterate(chain: Chain, T: InvariantTransversal, iterations: int, **kwargs) -> list[InvariantTransversal]:
    """Apply step 2 repeatedly; returns ``[T, T', T'', ...]``."""
    out = [T]
    for _ in range(iterations):
        out.append(weiss_step2(chain, out[-1], **kwargs))
    return out


# --------------------------------------------------------------------------
# generating sets

@dataclass
class SchreierGeneratingSet:
    level: int
    index: int
    multiset: list
    distinct: list
    bound: float
    certificate: str

    @property
    def rank_upper(self) -> int:
        return len(self.distinct)

    @property
    def r_upper(self) -> Fraction:
        return Fraction(max(self.rank_upper, 1) - 1, self.index)

    @property
    def r_upper_multiset(self) -> Fraction:
        return Fraction(max(len(self.multiset), 1) - 1, self.index)


def schreier_generators_from_transversal(chain: Chain, T: InvariantTransversal,
                                         certify_cap: int = 1 << 17) -> SchreierGeneratingSet:
    """The Schreier elements of the boundary pairs of ``T``, with a generation certificate.

    Below ``certify_cap`` cosets the set is replayed against the
    Reidemeister-Schreier generators: walking the BFS tree of the level,
    each shortlex representative is rewritten as a product of returned
    elements times the corresponding element of ``T``.  Larger step-2
    transversals are certified inductively: the parent set generates
    ``G_k``, ``T2`` is a transversal of ``G_l`` in ``G_k`` containing 1, and
    the returned set is exactly the nontrivial Schreier labels of ``T2``.
    """
    model = T.model
    table = chain[T.level]
    multiset = list(T.schreier)
    distinct = list(dict.fromkeys(multiset))
    for y in distinct:
        if table.act(model.to_word(y), 0) != 0:
            raise AssertionError("a Schreier element lies outside the level subgroup")
    bound = float(T.epsilon) * len(T.S) * T.index
    if len(multiset) > bound + 1e-9:
        raise AssertionError("more Schreier elements than the invariance bound allows")
    if T.index <= certify_cap:
        _certify_direct(table, T, model)
        cert = "direct"
    elif T.parent is not None:
        parent = schreier_generators_from_transversal(chain, T.parent, certify_cap)
        if T.factor[0] != model.identity():
            raise AssertionError("T2 does not contain the identity")
        cert = f"inductive({parent.certificate})"
    else:
        raise AssertionError("transversal too large to certify directly and has no factorization")
    return SchreierGeneratingSet(T.level, T.index, multiset, distinct, bound, cert)


def _certify_direct(table: CosetTable, T: InvariantTransversal, model):
    by = T.coset_indexed(table)
    if by[0] != model.identity():
        raise AssertionError("transversal does not contain the identity")
    members = {t: v for v, t in enumerate(by)}
    d = table.generator_count
    gens = [model.from_word((s + 1,)) for s in range(d)]
    if T.S != gens:
        # only generator sets S are replayed against the coset graph
        return
    ys = set(T.schreier)
    ident = model.identity()

    def label(v: int, s: int):
        st = model.mul(gens[s], by[v])
        if st in members:
            if members[st] != int(table.action[s, v]):
                raise AssertionError("element of T sits in the wrong coset")
            return ident
        y = model.mul(model.inv(by[int(table.action[s, v])]), st)
        if y not in ys:
            raise AssertionError("boundary label missing from the Schreier set")
        return y

    # u_v = T[v]^-1 t_v, rebuilt from returned elements along the BFS tree
    tsh = [ident] * table.coset_count
    u = [ident] * table.coset_count
    for layer in table._levels[1:]:
        for v in layer.tolist():
            w = int(table.parent[v])
            x = int(table.parent_letter[v])
            s = abs(x) - 1
            tsh[v] = model.mul(gens[s] if x > 0 else model.inv(gens[s]), tsh[w])
            if x > 0:
                u[v] = model.mul(label(w, s), u[w])
            else:
                u[v] = model.mul(model.inv(label(v, s)), u[w])
            if u[v] != model.mul(model.inv(by[v]), tsh[v]):
                raise AssertionError(f"replay of coset {v} does not match the transversal")
