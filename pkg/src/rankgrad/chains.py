"""Chains of finite-index subgroups, the coset tree and its shadow measure.

Level 0 of every chain is the whole group.  Each further level is a
:class:`~rankgrad.cosets.CosetTable`, and adjacent levels are linked by the
refinement map ``gG_{n+1} -> gG_n``, which is checked to commute with
every generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .cosets import BudgetExhausted, CosetTable, SubgroupSpec, default_budget, kernel_table
from .linalg import quotient_map_mod_p
from .presentations import Presentation, Word, commutator, power
from .schreier import build_graph, reidemeister_schreier

__all__ = [
    "Chain",
    "ChainError",
    "CosetTree",
    "derived_p_chain",
    "nested_kernel_chain",
    "nested_chain",
    "coset_tree",
    "trivial_intersection_evidence",
    "trivial_level",
    "lift_by_abelianization",
    "lamplighter_presentation",
    "lamplighter_chain",
    "cyclic_images",
    "torus_images",
]


class ChainError(ValueError):
    """Supplied levels are not nested."""


def trivial_level(p: Presentation) -> CosetTable:
    return CosetTable.from_action(np.zeros((p.generator_count, 1), dtype=np.int64), p)


@dataclass(eq=False)
class Chain:
    """A materialized prefix of ``G = G_0 > G_1 > ...``.

    ``builder`` produces level ``n + 1`` from the chain so far; it is
    ``None`` for chains given by a fixed list of levels.  ``truncated``
    records why construction stopped early, if it did.
    """

    presentation: Presentation
    levels: list[CosetTable] = field(default_factory=list)
    refinements: list[np.ndarray | None] = field(default_factory=list)
    normal_flags: list[bool] = field(default_factory=list)
    builder: Callable[["Chain", int], CosetTable] | None = None
    description: str = ""
    truncated: str | None = None

    def __post_init__(self):
        if not self.levels:
            self._append(trivial_level(self.presentation))

    @property
    def depth(self) -> int:
        """Index of the deepest materialized level."""
        return len(self.levels) - 1

    @property
    def indices(self) -> list[int]:
        return [t.coset_count for t in self.levels]

    def __getitem__(self, n: int) -> CosetTable:
        return self.levels[n]

    def __len__(self) -> int:
        return len(self.levels)

    def _append(self, table: CosetTable):
        if self.levels:
            f = table.refinement_map(self.levels[-1])
            if f is None:
                raise ChainError(
                    f"level {len(self.levels)} (index {table.coset_count}) does not refine "
                    f"level {len(self.levels) - 1} (index {self.levels[-1].coset_count})")
        else:
            f = None
        self.levels.append(table)
        self.refinements.append(f)
        self.normal_flags.append(table.is_normal())

    def extend(self, depth: int, budget: int | None = None) -> "Chain":
        """Materialize levels up to ``depth``; stops and records a marker on budget exhaustion."""
        if budget is None:
            budget = default_budget()
        if self.builder is not None:
            self.truncated = None  # a later call may bring a larger budget
        while self.depth < depth and self.truncated is None:
            if self.builder is None:
                self.truncated = f"no builder to extend beyond level {self.depth}"
                break
            try:
                table = self.builder(self, budget)
            except BudgetExhausted as exc:
                self.truncated = f"level {self.depth + 1}: {exc}"
                break
            self._append(table)
        return self


# --------------------------------------------------------------------------
# derived p-series

def lift_by_abelianization(table: CosetTable, prime: int, budget: int | None = None) -> CosetTable:
    """Coset table of ``H' H^p`` where ``H`` is the subgroup of ``table``.

    The cosets of ``H' H^p`` are pairs ``(v, x)`` with ``v`` a coset of ``H``
    and ``x`` in ``H / H' H^p = F_p^r``; a generator acts by
    ``(v, x) -> (s.v, x + phi(T(v, s)))`` where ``T(v, s)`` is the Schreier
    label and ``phi`` the abelianization mod ``p`` of the Reidemeister-Schreier
    presentation.
    """
    if budget is None:
        budget = default_budget()
    g = build_graph(table)
    sp = reidemeister_schreier(g)
    r, images = quotient_map_mod_p(sp.relation_rows(), sp.generator_count, prime)
    n = table.coset_count
    size = prime ** r
    if n * size > budget:
        raise BudgetExhausted(
            f"next level would have index {n} * {prime}^{r} = {n * size}, over budget {budget}", n * size)
    weights = prime ** np.arange(r, dtype=np.int64)
    codes = np.arange(size, dtype=np.int64)
    digits = (codes[:, None] // weights[None, :]) % prime if r else np.zeros((size, 0), dtype=np.int64)
    d = table.generator_count
    edge_img = np.zeros((d, n, r), dtype=np.int64)  # phi(T(v, s))
    for k, (v, s) in enumerate(g.nontree_edges, start=1):
        edge_img[s, v] = images[k - 1]
    action = np.empty((d, n * size), dtype=np.int64)
    for s in range(d):
        # coset id = code * n + v
        shifted = (digits[:, None, :] + edge_img[s][None, :, :]) % prime  # (size, n, r)
        new_code = shifted @ weights
        action[s] = (new_code * n + table.action[s][None, :]).ravel()
    return CosetTable.from_action(action, table.origin, check_relators=False)


def derived_p_chain(p: Presentation, prime: int, depth: int, budget: int | None = None) -> Chain:
    """``G_{n+1} = G_n' G_n^p``, built up to ``depth`` or until the budget stops it."""
    if prime < 2 or any(prime % q == 0 for q in range(2, int(prime ** 0.5) + 1)):
        raise ValueError(f"{prime} is not prime")

    def build(chain: Chain, cap: int) -> CosetTable:
        return lift_by_abelianization(chain.levels[-1], prime, cap)

    chain = Chain(p, builder=build, description=f"derived p={prime}")
    return chain.extend(depth, budget)


# --------------------------------------------------------------------------
# chains from supplied subgroups

def nested_chain(p: Presentation, specs: Sequence[SubgroupSpec | CosetTable]) -> Chain:
    """Chain whose levels ``1..len(specs)`` are the given subgroups; nesting is checked."""
    chain = Chain(p, description="supplied levels")
    for spec in specs:
        table = spec if isinstance(spec, CosetTable) else spec.direct_table(p) if spec.kind == "perm" else None
        if table is None:
            from .cosets import enumerate_cosets

            table = enumerate_cosets(p, spec)
        chain._append(table)
    return chain


def nested_kernel_chain(p: Presentation, homs: Sequence[Sequence[Sequence[int]]]) -> Chain:
    """Chain of kernels of the given permutation representations."""
    return nested_chain(p, [kernel_table(p, images) for images in homs])


def cyclic_images(n: int, generator_count: int = 1) -> list[tuple[int, ...]]:
    """Every generator maps to the ``n``-cycle."""
    cyc = tuple((i + 1) % n for i in range(n))
    return [cyc] * generator_count


def torus_images(n: int) -> list[tuple[int, ...]]:
    """``a, b`` acting as the two unit translations of ``(Z/n)^2`` on ``2n`` points."""
    a = tuple(list(range(1, n)) + [0] + list(range(n, 2 * n)))
    b = tuple(list(range(n)) + list(range(n + 1, 2 * n)) + [n])
    return [a, b]


def lamplighter_presentation(n: int) -> Presentation:
    """Finite presentation of ``C_2 wr C_{2^n}`` on ``a`` (lamp) and ``t`` (shift)."""
    m = 2 ** n
    a, t = (1,), (2,)
    rels = [power(a, 2), power(t, m)]
    for k in range(1, m // 2 + 1):
        rels.append(commutator(a, power(t, k) + a + power(t, -k)))
    return Presentation(("a", "t"), tuple(rels))


def lamplighter_chain(depth: int) -> Chain:
    """Kernels of ``C_2 wr C_{2^depth} -> C_{2^n}`` (``a -> 1``, ``t -> 1``-shift) for ``n <= depth``."""
    p = lamplighter_presentation(depth)
    homs = []
    for n in range(1, depth + 1):
        m = 2 ** n
        homs.append([tuple(range(m)), tuple((i + 1) % m for i in range(m))])
    chain = nested_kernel_chain(p, homs)
    chain.description = f"lamplighter quotient C2 wr C{2 ** depth}"
    return chain


# --------------------------------------------------------------------------
# coset tree and evidence

@dataclass
class CosetTree:
    sizes: list[int]
    parents: list[np.ndarray | None]
    branching: list[int | None]

    def measure(self, level: int) -> Fraction:
        """Shadow measure of any vertex at ``level``."""
        return Fraction(1, self.sizes[level])

    def children(self, level: int, v: int) -> list[int]:
        return [int(w) for w in np.nonzero(self.parents[level + 1] == v)[0]]


def coset_tree(chain: Chain) -> CosetTree:
    """Tree of cosets across levels; parents come from the refinement maps."""
    parents: list[np.ndarray | None] = [None]
    branching: list[int | None] = [None]
    for n in range(1, len(chain.levels)):
        f = chain.refinements[n]
        counts = np.bincount(f, minlength=chain.levels[n - 1].coset_count)
        if counts.min() != counts.max():
            raise ChainError(f"level {n - 1} vertices have unequal numbers of children")
        parents.append(f)
        branching.append(int(counts[0]))
    return CosetTree([t.coset_count for t in chain.levels], parents, branching)


def trivial_intersection_evidence(chain: Chain, words: Sequence[Word]) -> list[dict]:
    """For each word, the first built level whose action moves coset 0, if any."""
    report = []
    for w in words:
        first = None
        for n, table in enumerate(chain.levels):
            if table.act(w, 0) != 0:
                first = n
                break
        report.append({
            "word": chain.presentation.format(w),
            "length": len(w),
            "separated_at": first,
            "levels_built": chain.depth,
        })
    return report
