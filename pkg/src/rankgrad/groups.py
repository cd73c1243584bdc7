"""Element arithmetic for the groups used in boundary computations.

Coset tables only see a group through a finite quotient.  Counting the
boundary of a finite subset of an infinite group needs a way to decide
when two words give the same element; a :class:`GroupModel` supplies that
as a normal form.  Models here cover free groups, free abelian groups and
finite groups, which is what the Følner constructions are run on.
"""

from __future__ import annotations

from typing import Hashable, Protocol, Sequence

import numpy as np

from .cosets import CosetTable, _regular_action
from .presentations import Word, reduce

__all__ = ["GroupModel", "FreeGroupModel", "FreeAbelianModel", "FiniteGroup"]


class GroupModel(Protocol):
    """Normal forms for group elements.

    Elements are hashable values; two words are equal in the group exactly
    when ``from_word`` returns equal values.
    """

    generator_count: int

    def identity(self) -> Hashable: ...

    def mul(self, g, h) -> Hashable: ...

    def inv(self, g) -> Hashable: ...

    def from_word(self, w: Sequence[int]) -> Hashable: ...

    def to_word(self, g) -> Word: ...


class FreeGroupModel:
    """Free group: elements are freely reduced words."""

    def __init__(self, rank: int):
        self.generator_count = rank

    def identity(self) -> Word:
        return ()

    def mul(self, g: Word, h: Word) -> Word:
        return reduce(g + h)

    def inv(self, g: Word) -> Word:
        return tuple(-x for x in reversed(g))

    def from_word(self, w) -> Word:
        return reduce(w, self.generator_count)

    def to_word(self, g: Word) -> Word:
        return g


class FreeAbelianModel:
    """Free abelian group on the generators: elements are exponent vectors."""

    def __init__(self, rank: int):
        self.generator_count = rank

    def identity(self) -> tuple[int, ...]:
        return (0,) * self.generator_count

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def from_word(self, w):
        v = [0] * self.generator_count
        for x in w:
            v[abs(x) - 1] += 1 if x > 0 else -1
        return tuple(v)

    def to_word(self, g) -> Word:
        out: list[int] = []
        for i, e in enumerate(g):
            out.extend([i + 1 if e > 0 else -(i + 1)] * abs(e))
        return tuple(out)


class FiniteGroup:
    """A finite group on elements ``0..n-1`` with 0 the identity.

    ``table[g, h]`` is the product ``gh``.  When built from generator data
    the group also works as a :class:`GroupModel`.
    """

    def __init__(self, table, generators: Sequence[int] = (), words: Sequence[Word] | None = None):
        self.table = np.asarray(table, dtype=np.int64)
        n = self.table.shape[0]
        if self.table.shape != (n, n):
            raise ValueError("multiplication table must be square")
        if not np.array_equal(self.table[0], np.arange(n)) or not np.array_equal(self.table[:, 0], np.arange(n)):
            raise ValueError("element 0 must be the identity")
        self.generators = [int(g) for g in generators]
        self.generator_count = len(self.generators)
        self.words = list(words) if words is not None else None
        self._inverse = np.argmax(self.table == 0, axis=1)

    @classmethod
    def from_table(cls, table: CosetTable) -> "FiniteGroup":
        """The quotient group of a table whose subgroup is normal."""
        if not table.is_normal():
            raise ValueError("the subgroup is not normal, so its cosets do not form a group")
        n = table.coset_count
        perms = [table.action[i] for i in range(table.generator_count)]
        # R[c, w] = t_w . c is the coset of the product (t_w)(t_c)
        R = table.propagate(perms, np.arange(n))
        gens = [int(table.action[i, 0]) for i in range(table.generator_count)]
        return cls(R.T, gens, table.transversal())

    @classmethod
    def from_permutations(cls, images: Sequence[Sequence[int]]) -> "FiniteGroup":
        """The permutation group generated by ``images``."""
        action = _regular_action([np.asarray(im, dtype=np.int64) for im in images])
        return cls.from_table(CosetTable.from_action(action))

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        a = np.arange(n)
        return cls((a[:, None] + a[None, :]) % n, [1 % n] if n > 1 else [0])

    @property
    def order(self) -> int:
        return int(self.table.shape[0])

    def __len__(self) -> int:
        return self.order

    def left_perm(self, a: int) -> np.ndarray:
        """``g -> a g`` as an index array."""
        return self.table[a]

    def right_perm(self, a: int) -> np.ndarray:
        """``g -> g a`` as an index array."""
        return self.table[:, a]

    # GroupModel interface
    def identity(self) -> int:
        return 0

    def mul(self, g: int, h: int) -> int:
        return int(self.table[g, h])

    def inv(self, g: int) -> int:
        return int(self._inverse[g])

    def from_word(self, w) -> int:
        g = 0
        for x in reversed(w):
            s = self.generators[abs(x) - 1]
            g = int(self.table[s if x > 0 else self._inverse[s], g])
        return g

    def to_word(self, g: int) -> Word:
        if self.words is None:
            raise ValueError("no word representatives recorded for this group")
        return self.words[g]
