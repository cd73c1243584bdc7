"""Finite-index subgroups as complete coset tables.

A :class:`CosetTable` stores the left action ``s . gH = sgH`` of every
generator on the left cosets of a subgroup ``H``.  Coset 0 is ``H`` itself
and the remaining cosets are numbered in breadth-first discovery order,
exploring letters in the order ``g1, g1^-1, g2, g2^-1, ...``.  The BFS tree
is kept (``parent``, ``parent_letter``) and gives the Schreier transversal:
the representative of coset ``v`` is ``parent_letter[v]`` followed by the
representative of ``parent[v]``.

Tables come from Todd-Coxeter enumeration (HLT with lookahead) or
directly from a permutation action (kernel or point stabilizer).
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .presentations import Presentation, Word, format_word, inverse, parse_word, reduce

__all__ = [
    "BudgetExhausted",
    "InconsistentHomomorphism",
    "CosetTable",
    "SubgroupSpec",
    "default_budget",
    "enumerate_cosets",
    "kernel_table",
    "stabilizer_table",
    "parse_subgroup_spec",
    "parse_permutation",
    "perm_of_word",
    "tables_isomorphic",
]

DEFAULT_BUDGET = 200_000


def default_budget() -> int:
    return int(os.environ.get("RANKGRAD_COSET_BUDGET", DEFAULT_BUDGET))


class BudgetExhausted(RuntimeError):
    """The coset budget ran out before the table closed.

    This only says the index was not certified finite within the budget;
    ``partial`` is the number of live cosets when enumeration stopped.
    """

    def __init__(self, message: str, partial: int):
        super().__init__(message)
        self.partial = partial


class InconsistentHomomorphism(ValueError):
    """Permutation images do not satisfy the relators."""


# --------------------------------------------------------------------------
# letters and permutations

def _letter_codes(d: int) -> list[int]:
    return [x for i in range(1, d + 1) for x in (i, -i)]


def _syllables_right_to_left(word: Sequence[int]):
    """Maximal runs ``(letter, count)`` starting from the right end."""
    i = len(word) - 1
    while i >= 0:
        x = word[i]
        j = i
        while j >= 0 and word[j] == x:
            j -= 1
        yield x, i - j
        i = j


@dataclass(eq=False)
class CosetTable:
    """Complete coset table of a subgroup ``H`` of ``<S | R>``."""

    action: np.ndarray
    origin: Presentation | None = None
    parent: np.ndarray = field(default=None, repr=False)
    parent_letter: np.ndarray = field(default=None, repr=False)
    depth: np.ndarray = field(default=None, repr=False)

    @classmethod
    def from_action(cls, action, origin: Presentation | None = None, *, root: int = 0,
                    check_relators: bool = True) -> "CosetTable":
        """Canonically renumber an action so that ``root`` becomes coset 0.

        Raises ``ValueError`` if some generator is not a bijection or the
        action is not transitive.
        """
        act = np.asarray(action, dtype=np.int64)
        if act.ndim != 2:
            raise ValueError("action must have shape (generators, cosets)")
        d, n = act.shape
        for i in range(d):
            if not np.array_equal(np.sort(act[i]), np.arange(n)):
                raise ValueError(f"generator {i + 1} does not act as a bijection")
        inv = np.empty_like(act)
        for i in range(d):
            inv[i, act[i]] = np.arange(n)
        order, par, let, dep = _bfs(act, inv, root)
        if order.size != n:
            raise ValueError(f"action is not transitive: {order.size} of {n} cosets reachable from {root}")
        new = np.empty(n, dtype=np.int64)
        new[order] = np.arange(n)
        renamed = np.empty_like(act)
        for i in range(d):
            renamed[i, new] = new[act[i]]
        parent = np.where(par >= 0, new[np.maximum(par, 0)], -1)
        table = cls(renamed, origin, parent, let, dep)
        if origin is not None:
            if origin.generator_count != d:
                raise ValueError("action and presentation disagree on the number of generators")
            if check_relators:
                bad = table.failing_relator()
                if bad is not None:
                    raise InconsistentHomomorphism(
                        f"relator {origin.format(bad[0])} moves coset {bad[1]}")
        return table

    # -- basic data ------------------------------------------------------
    @property
    def coset_count(self) -> int:
        return int(self.action.shape[1])

    index = coset_count

    @property
    def generator_count(self) -> int:
        return int(self.action.shape[0])

    @cached_property
    def inverse_action(self) -> np.ndarray:
        inv = np.empty_like(self.action)
        n = self.coset_count
        for i in range(self.generator_count):
            inv[i, self.action[i]] = np.arange(n)
        return inv

    def letter_perm(self, x: int) -> np.ndarray:
        return self.action[x - 1] if x > 0 else self.inverse_action[-x - 1]

    @cached_property
    def _cycles(self) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
        """Per generator: flattened cycles, cycle start, cycle length and position of each coset."""
        out = []
        n = self.coset_count
        ident = np.arange(n, dtype=np.int64)
        for i in range(self.generator_count):
            p = self.action[i]
            # pointer jumping: rep = smallest coset on the cycle
            rep, jump = ident.copy(), p.copy()
            for _ in range(max(1, int(n).bit_length())):
                rep = np.minimum(rep, rep[jump])
                jump = jump[jump]
            # list ranking backwards from the representative gives positions
            q = self.inverse_action[i]
            at_rep = rep == ident
            pos = np.where(at_rep, 0, 1)
            nxt = np.where(at_rep, ident, q)
            for _ in range(max(1, int(n).bit_length())):
                pos = pos + pos[nxt]
                nxt = nxt[nxt]
            length = np.bincount(rep, minlength=n)[rep]
            flat = np.lexsort((pos, rep))
            start = np.empty(n, dtype=np.int64)
            start[flat] = np.arange(n) - pos[flat]
            out.append((flat, start, length, pos))
        return out

    def power_of_letter(self, x: int, k: int, points):
        """``x^k`` applied to ``points`` (an int or array) by jumping along cycles."""
        flat, start, length, pos = self._cycles[abs(x) - 1]
        e = k if x > 0 else -k
        return flat[start[points] + (pos[points] + e) % length[points]]

    def act(self, word: Sequence[int], v=0):
        """Coset ``word . v``; letters are applied from the right end.

        ``v`` may be an array of cosets.  Runs of a repeated letter cost
        one cycle lookup, so long powers are cheap.
        """
        scalar = np.ndim(v) == 0
        pts = np.asarray(v, dtype=np.int64)
        for x, k in _syllables_right_to_left(word):
            if k == 1:
                pts = self.letter_perm(x)[pts]
            else:
                pts = self.power_of_letter(x, k, pts)
        return int(pts) if scalar else pts

    def word_perm(self, word: Sequence[int]) -> np.ndarray:
        """The permutation of cosets induced by ``word``."""
        return self.act(word, np.arange(self.coset_count, dtype=np.int64))

    def transversal_word(self, v: int) -> Word:
        letters = []
        while v != 0:
            letters.append(int(self.parent_letter[v]))
            v = int(self.parent[v])
        return tuple(letters)

    def transversal(self) -> list[Word]:
        words: list[Word] = [()] * self.coset_count
        for v in range(1, self.coset_count):
            words[v] = (int(self.parent_letter[v]),) + words[int(self.parent[v])]
        return words

    def is_tree_edge(self, v: int, s: int) -> bool:
        """Whether the oriented edge ``(v, s.v)`` (``s`` 0-based) is in the BFS tree."""
        w = int(self.action[s, v])
        if w != 0 and self.parent[w] == v and self.parent_letter[w] == s + 1:
            return True
        return v != 0 and self.parent[v] == w and self.parent_letter[v] == -(s + 1)

    @cached_property
    def tree_mask(self) -> np.ndarray:
        """Boolean ``(d, N)`` array marking tree edges ``(v, s)``."""
        mask = np.zeros(self.action.shape, dtype=bool)
        for v in range(1, self.coset_count):
            x = int(self.parent_letter[v])
            if x > 0:
                mask[x - 1, int(self.parent[v])] = True
            else:
                mask[-x - 1, v] = True
        return mask

    # -- checks ------------------------------------------------------------
    def failing_relator(self) -> tuple[Word, int] | None:
        if self.origin is None:
            return None
        ident = np.arange(self.coset_count)
        for r in self.origin.relators:
            perm = self.word_perm(r)
            bad = np.nonzero(perm != ident)[0]
            if bad.size:
                return r, int(bad[0])
        return None

    def fixes_base(self, word: Sequence[int]) -> bool:
        return self.act(word, 0) == 0

    def propagate(self, perms: Sequence[np.ndarray], start) -> np.ndarray:
        """Evaluate transversal words in another action.

        Returns ``R`` with ``R[..., v] = t_v . start`` where ``t_v`` is the
        representative of coset ``v`` and ``perms[i]`` is the action of
        generator ``i`` on the other domain.  ``start`` may be an array, in
        which case the result is evaluated for every entry at once.
        """
        start = np.asarray(start, dtype=np.int64)
        inv = [np.argsort(p) for p in perms]
        out = np.empty(start.shape + (self.coset_count,), dtype=np.int64)
        out[..., 0] = start
        levels = self._levels
        for layer in levels[1:]:
            par = self.parent[layer]
            let = self.parent_letter[layer]
            for x in np.unique(let):
                sel = layer[let == x]
                p = perms[x - 1] if x > 0 else inv[-x - 1]
                out[..., sel] = p[out[..., self.parent[sel]]]
        return out

    @cached_property
    def _levels(self) -> list[np.ndarray]:
        dep = self.depth
        order = np.argsort(dep, kind="stable")
        bounds = np.searchsorted(dep[order], np.arange(int(dep.max()) + 2))
        return [order[bounds[k]:bounds[k + 1]] for k in range(len(bounds) - 1)]

    def is_normal(self) -> bool:
        """Certify normality of ``H``.

        ``H`` is generated by the Schreier labels ``t_{sv}^-1 s t_v``; it is
        normal iff every conjugate ``s h s^-1`` (``s`` a generator or inverse)
        fixes coset 0, i.e. every label fixes the cosets ``s^-1 . 0``.
        """
        if "_normal" in self.__dict__:
            return self.__dict__["_normal"]
        perms = [self.action[i] for i in range(self.generator_count)]
        targets = sorted({int(self.action[i, 0]) for i in range(self.generator_count)}
                         | {int(self.inverse_action[i, 0]) for i in range(self.generator_count)})
        targets = [c for c in targets if c != 0]
        ok = True
        if targets:
            R = self.propagate(perms, np.array(targets))
            for i in range(self.generator_count):
                a = self.action[i]
                if not np.array_equal(a[R], R[:, a]):
                    ok = False
                    break
        self.__dict__["_normal"] = ok
        return ok

    def is_regular_on(self, c: int) -> bool:
        R = self.propagate([self.action[i] for i in range(self.generator_count)], np.array([c]))
        return all(np.array_equal(self.action[i][R], R[:, self.action[i]]) for i in range(self.generator_count))

    def refinement_map(self, coarser: "CosetTable") -> np.ndarray | None:
        """The surjection ``gH -> gK`` onto a coarser table, if ``H <= K``.

        Returns ``f`` with ``f[v]`` the coarse coset under fine coset ``v``,
        or ``None`` when no generator-equivariant map sending 0 to 0 exists.
        """
        if coarser.generator_count != self.generator_count or self.coset_count % coarser.coset_count:
            return None
        perms = [coarser.action[i] for i in range(coarser.generator_count)]
        f = self.propagate(perms, 0)
        for i in range(self.generator_count):
            if not np.array_equal(coarser.action[i][f], f[self.action[i]]):
                return None
        return f

    def dump(self) -> str:
        names = self.origin.generators if self.origin else [f"g{i + 1}" for i in range(self.generator_count)]
        lines = [f"cosets {self.coset_count}"]
        for i, name in enumerate(names):
            lines.append(f"{name} " + " ".join(str(int(v)) for v in self.action[i]))
        return "\n".join(lines)


def _bfs(act: np.ndarray, inv: np.ndarray, root: int):
    """Vectorized BFS; discovery order is queue order, then letter order."""
    d, n = act.shape
    codes = _letter_codes(d)
    perms = [act[x - 1] if x > 0 else inv[-x - 1] for x in codes]
    codes_arr = np.array(codes, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    order = [np.array([root], dtype=np.int64)]
    parent = np.full(n, -1, dtype=np.int64)
    letter = np.zeros(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    frontier = order[0]
    k = 0
    while frontier.size:
        k += 1
        imgs = np.stack([p[frontier] for p in perms], axis=1).ravel()
        pars = np.repeat(frontier, len(perms))
        lets = np.tile(codes_arr, frontier.size)
        fresh = ~seen[imgs]
        imgs, pars, lets = imgs[fresh], pars[fresh], lets[fresh]
        _, first = np.unique(imgs, return_index=True)
        first.sort()
        frontier = imgs[first]
        seen[frontier] = True
        parent[frontier] = pars[first]
        letter[frontier] = lets[first]
        depth[frontier] = k
        if frontier.size:
            order.append(frontier)
    order = np.concatenate(order)
    # depth/parent/letter are indexed by the old labels; reorder to new labels
    return order, parent[order], letter[order], depth[order]


def tables_isomorphic(a: CosetTable, b: CosetTable) -> bool:
    """Isomorphism of coset tables fixing coset 0."""
    if a.coset_count != b.coset_count or a.generator_count != b.generator_count:
        return False
    f = a.refinement_map(b)
    return f is not None and np.unique(f).size == a.coset_count


# --------------------------------------------------------------------------
# Todd-Coxeter (HLT with lookahead)

class _Full(Exception):
    pass


class _Enumerator:
    def __init__(self, ncol: int, budget: int):
        self.ncol = ncol
        self.table: list[list[int]] = [[-1] * ncol]
        self.p = [0]
        self.live = 1
        self.budget = budget
        self.defined = 1

    def rep(self, c: int) -> int:
        p = self.p
        r = c
        while p[r] != r:
            r = p[r]
        while p[c] != r:
            p[c], c = r, p[c]
        return r

    def merge(self, a: int, b: int, queue: list[int]):
        a, b = self.rep(a), self.rep(b)
        if a == b:
            return
        if a > b:
            a, b = b, a
        self.p[b] = a
        self.live -= 1
        queue.append(b)

    def coincidence(self, a: int, b: int):
        T = self.table
        queue: list[int] = []
        self.merge(a, b, queue)
        i = 0
        while i < len(queue):
            e = queue[i]
            i += 1
            row = T[e]
            for x in range(self.ncol):
                f = row[x]
                if f < 0:
                    continue
                xi = x ^ 1
                T[f][xi] = -1
                e1, f1 = self.rep(e), self.rep(f)
                if T[e1][x] >= 0:
                    self.merge(f1, T[e1][x], queue)
                elif T[f1][xi] >= 0:
                    self.merge(e1, T[f1][xi], queue)
                else:
                    T[e1][x] = f1
                    T[f1][xi] = e1

    def define(self, c: int, x: int):
        if self.live >= self.budget:
            raise _Full
        T = self.table
        new = len(T)
        T.append([-1] * self.ncol)
        self.p.append(new)
        self.live += 1
        self.defined += 1
        T[c][x] = new
        T[new][x ^ 1] = c

    def scan(self, c: int, w: list[int], fill: bool) -> bool:
        """Scan ``w`` at coset ``c``; returns True if anything was learned."""
        T = self.table
        f = b = c
        i, j = 0, len(w) - 1
        while True:
            while i <= j and T[f][w[i]] >= 0:
                f = T[f][w[i]]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                    return True
                return False
            while j >= i and T[b][w[j] ^ 1] >= 0:
                b = T[b][w[j] ^ 1]
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return True
            if i == j:
                T[f][w[i]] = b
                T[b][w[i] ^ 1] = f
                return True
            if not fill:
                return False
            self.define(f, w[i])

    def lookahead(self, rels: list[list[int]]):
        while True:
            learned = False
            c = 0
            while c < len(self.table):
                if self.p[c] == c:
                    for r in rels:
                        if self.scan(c, r, fill=False):
                            learned = True
                        if self.p[c] != c:
                            break
                c += 1
            if not learned:
                return


def _columns(word: Sequence[int]) -> list[int]:
    # right-action scanning of the reversed word realizes the left action
    return [2 * (x - 1) if x > 0 else 2 * (-x - 1) + 1 for x in reversed(word)]


def _todd_coxeter(p: Presentation, subgroup_words: Sequence[Word], budget: int) -> np.ndarray:
    d = p.generator_count
    rels = [_columns(r) for r in p.relators]
    subs = [_columns(h) for h in subgroup_words if h]
    en = _Enumerator(2 * d, budget)

    def guarded(step):
        while True:
            try:
                step()
                return
            except _Full:
                en.lookahead(rels)
                if en.live >= budget:
                    raise BudgetExhausted(
                        f"coset budget {budget} exhausted; index not certified finite within budget",
                        en.live) from None

    for h in subs:
        guarded(lambda h=h: en.scan(0, h, fill=True))
    c = 0
    while c < len(en.table):
        if en.p[c] == c:
            def process(c=c):
                for r in rels:
                    en.scan(c, r, fill=True)
                    if en.p[c] != c:
                        return
                for x in range(2 * d):
                    if en.p[c] == c and en.table[c][x] < 0:
                        en.define(c, x)
            guarded(process)
        c += 1

    live = [c for c in range(len(en.table)) if en.p[c] == c]
    pos = {c: k for k, c in enumerate(live)}
    action = np.empty((d, len(live)), dtype=np.int64)
    for k, c in enumerate(live):
        row = en.table[c]
        for i in range(d):
            t = row[2 * i]
            if t < 0:
                raise RuntimeError("internal error: incomplete coset table after enumeration")
            action[i, k] = pos[en.rep(t)]
    return action


# --------------------------------------------------------------------------
# permutation actions

def parse_permutation(text: str, degree: int) -> tuple[int, ...]:
    """Parse disjoint cycles with 1-based points, e.g. ``(1,2)(3,4,5)``."""
    perm = list(range(degree))
    text = text.strip()
    if text in ("", "()", "1", "id"):
        return tuple(perm)
    if not re.fullmatch(r"(\([0-9,\s]+\))+", text):
        raise ValueError(f"malformed cycle notation {text!r}")
    seen = set()
    for cyc in re.findall(r"\(([0-9,\s]+)\)", text):
        pts = [int(t) - 1 for t in re.split(r"[,\s]+", cyc.strip()) if t]
        for q in pts:
            if not 0 <= q < degree:
                raise ValueError(f"point {q + 1} outside degree {degree}")
            if q in seen:
                raise ValueError(f"point {q + 1} repeated in cycle notation")
            seen.add(q)
        for a, b in zip(pts, pts[1:] + pts[:1]):
            perm[a] = b
    return tuple(perm)


def perm_of_word(word: Sequence[int], images: Sequence[Sequence[int]]) -> tuple[int, ...]:
    """Image of a word under ``generator i -> images[i-1]`` (composition of maps)."""
    n = len(images[0])
    inv = [np.argsort(np.asarray(im)) for im in images]
    perm = np.arange(n)
    for x in reversed(word):
        perm = (np.asarray(images[x - 1]) if x > 0 else inv[-x - 1])[perm]
    return tuple(int(v) for v in perm)


def _check_images(p: Presentation, images: Sequence[Sequence[int]]) -> list[np.ndarray]:
    if len(images) != p.generator_count:
        raise ValueError(f"expected {p.generator_count} generator images, got {len(images)}")
    arrs = []
    for i, im in enumerate(images):
        a = np.asarray(im, dtype=np.int64)
        if a.ndim != 1 or not np.array_equal(np.sort(a), np.arange(a.size)):
            raise ValueError(f"image of generator {p.generators[i]} is not a permutation")
        arrs.append(a)
    if len({a.size for a in arrs}) != 1:
        raise ValueError("generator images have different degrees")
    for r in p.relators:
        if perm_of_word(r, arrs) != tuple(range(arrs[0].size)):
            raise InconsistentHomomorphism(f"relator {p.format(r)} does not map to the identity")
    return arrs


def _orbit(point: int, arrs: list[np.ndarray]) -> list[int]:
    seen = {point}
    stack = [point]
    while stack:
        q = stack.pop()
        for a in arrs:
            for r in (int(a[q]), int(np.nonzero(a == q)[0][0])):
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
    return sorted(seen)


def _base(arrs: list[np.ndarray]) -> list[int]:
    n = arrs[0].size
    commuting = all(np.array_equal(a[b], b[a]) for i, a in enumerate(arrs) for b in arrs[i + 1:])
    if commuting:
        # an abelian group acts regularly on each of its orbits
        base, covered = [], set()
        for q in range(n):
            if q not in covered:
                orb = _orbit(q, arrs)
                covered.update(orb)
                if len(orb) > 1:
                    base.append(q)
        return base
    from sympy.combinatorics import Permutation, PermutationGroup

    G = PermutationGroup([Permutation([int(v) for v in a]) for a in arrs])
    G.schreier_sims()
    return [int(b) for b in G.base]


def _regular_action(arrs: list[np.ndarray]) -> np.ndarray:
    """Left regular action of the generated group, elements keyed by base images."""
    d = len(arrs)
    n = arrs[0].size
    base = _base(arrs)
    if not base:
        return np.zeros((d, 1), dtype=np.int64)
    b = len(base)
    codes = _letter_codes(d)
    inv = [np.argsort(a) for a in arrs]
    perms = [arrs[x - 1] if x > 0 else inv[-x - 1] for x in codes]
    if n ** b <= 1 << 26:
        weights = n ** np.arange(b, dtype=np.int64)
        index = np.full(n ** b, -1, dtype=np.int64)
        states = [np.array([base], dtype=np.int64)]
        index[int(states[0][0] @ weights)] = 0
        count = 1
        frontier = states[0]
        while frontier.size:
            imgs = np.concatenate([p[frontier][:, None, :] for p in perms], axis=1).reshape(-1, b)
            keys = imgs @ weights
            fresh = index[keys] < 0
            keys, imgs = keys[fresh], imgs[fresh]
            _, first = np.unique(keys, return_index=True)
            first.sort()
            frontier = imgs[first]
            index[keys[first]] = np.arange(count, count + first.size)
            count += first.size
            if frontier.size:
                states.append(frontier)
        allstates = np.concatenate(states)
        keys_all = allstates @ weights
        action = np.empty((d, count), dtype=np.int64)
        for i in range(d):
            action[i] = index[arrs[i][allstates] @ weights]
        del keys_all
        return action
    lookup = {tuple(base): 0}
    elems = [tuple(base)]
    k = 0
    while k < len(elems):
        g = elems[k]
        for p in perms:
            h = tuple(int(p[y]) for y in g)
            if h not in lookup:
                lookup[h] = len(elems)
                elems.append(h)
        k += 1
    action = np.empty((d, len(elems)), dtype=np.int64)
    for i, a in enumerate(arrs):
        for k, g in enumerate(elems):
            action[i, k] = lookup[tuple(int(a[y]) for y in g)]
    return action


def kernel_table(p: Presentation, images: Sequence[Sequence[int]], *, budget: int | None = None) -> CosetTable:
    """Coset table of the kernel of ``generator i -> images[i-1]``.

    Cosets are the elements of the image group, acted on by left
    multiplication; the table is therefore regular and certified normal.
    """
    arrs = _check_images(p, images)
    action = _regular_action(arrs)
    if budget is not None and action.shape[1] > budget:
        raise BudgetExhausted(f"image group has {action.shape[1]} elements, over budget {budget}",
                              action.shape[1])
    table = CosetTable.from_action(action, p, check_relators=False)
    table.__dict__["_normal"] = True
    return table


def stabilizer_table(p: Presentation, images: Sequence[Sequence[int]], point: int) -> CosetTable:
    """Coset table of the stabilizer of ``point`` (0-based) in the action."""
    arrs = _check_images(p, images)
    orb = _orbit(point, arrs)
    pos = {q: k for k, q in enumerate(orb)}
    action = np.array([[pos[int(a[q])] for q in orb] for a in arrs], dtype=np.int64).reshape(len(arrs), len(orb))
    return CosetTable.from_action(action, p, root=pos[point], check_relators=False)


def schreier_labels(table: CosetTable) -> list[Word]:
    """Nontrivial Schreier generators ``t_{sv}^-1 s t_v`` over non-tree edges."""
    words = table.transversal()
    labels = []
    mask = table.tree_mask
    for v in range(table.coset_count):
        for s in range(table.generator_count):
            if not mask[s, v]:
                w = int(table.action[s, v])
                labels.append(reduce(inverse(words[w]) + (s + 1,) + words[v]))
    return labels


# --------------------------------------------------------------------------
# subgroup specifications

@dataclass(frozen=True)
class SubgroupSpec:
    """A finite-index subgroup, given by generating words or a permutation action.

    ``kind`` is ``"words"`` or ``"perm"``; for permutation specs ``point`` is
    the 0-based stabilized point, or ``None`` for the full kernel.
    """

    kind: str
    words: tuple[Word, ...] = ()
    images: tuple[tuple[int, ...], ...] = ()
    point: int | None = None

    @classmethod
    def generated_by(cls, words: Sequence[Sequence[int]]) -> "SubgroupSpec":
        return cls("words", tuple(tuple(w) for w in words))

    @classmethod
    def kernel(cls, images: Sequence[Sequence[int]]) -> "SubgroupSpec":
        return cls("perm", images=tuple(tuple(int(v) for v in im) for im in images))

    @classmethod
    def stabilizer(cls, images: Sequence[Sequence[int]], point: int) -> "SubgroupSpec":
        return cls("perm", images=tuple(tuple(int(v) for v in im) for im in images), point=point)

    @property
    def degree(self) -> int:
        return len(self.images[0]) if self.images else 0

    def direct_table(self, p: Presentation) -> CosetTable:
        if self.kind != "perm":
            raise ValueError("only permutation specs have a direct table")
        if self.point is None:
            return kernel_table(p, self.images)
        return stabilizer_table(p, self.images, self.point)


def parse_subgroup_spec(text: str, p: Presentation) -> SubgroupSpec:
    """Parse ``sub gens <word>+`` or ``sub perm degree=<n> <gen>=<cycles>+ [stab=<pt>|kernel]``."""
    toks = text.split()
    if len(toks) < 2 or toks[0] != "sub":
        raise ValueError("subgroup spec must start with 'sub gens' or 'sub perm'")
    if toks[1] == "gens":
        if len(toks) < 3:
            raise ValueError("'sub gens' needs at least one word")
        return SubgroupSpec.generated_by([parse_word(t, p.generators) for t in toks[2:]])
    if toks[1] != "perm":
        raise ValueError(f"unknown subgroup spec kind {toks[1]!r}")
    return parse_perm_images(toks[2:], p, allow_mode=True)


def parse_perm_images(toks: Sequence[str], p: Presentation, allow_mode: bool = False) -> SubgroupSpec:
    degree = None
    assigned: dict[str, str] = {}
    point = None
    for tok in toks:
        if tok.startswith("degree="):
            degree = int(tok.split("=", 1)[1])
        elif allow_mode and tok == "kernel":
            point = None
        elif allow_mode and tok.startswith("stab="):
            point = int(tok.split("=", 1)[1]) - 1
        elif "=" in tok:
            name, cyc = tok.split("=", 1)
            if name not in p.generators:
                raise ValueError(f"undeclared generator {name!r} in permutation spec")
            assigned[name] = cyc
        else:
            raise ValueError(f"unexpected token {tok!r} in permutation spec")
    if degree is None or degree < 1:
        raise ValueError("permutation spec needs degree=<n>")
    images = tuple(parse_permutation(assigned.get(name, "()"), degree) for name in p.generators)
    if point is not None and not 0 <= point < degree:
        raise ValueError(f"stabilized point {point + 1} outside degree {degree}")
    return SubgroupSpec("perm", images=images, point=point)


def enumerate_cosets(p: Presentation, spec: SubgroupSpec, budget: int | None = None) -> CosetTable:
    """Complete coset table for ``spec`` by Todd-Coxeter enumeration.

    Permutation specs are enumerated from the Schreier generators of the
    permutation action, so the result is an independent check of the
    direct construction.  Raises :class:`BudgetExhausted` if more than
    ``budget`` live cosets are needed.
    """
    if budget is None:
        budget = default_budget()
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if spec.kind == "words":
        words = [reduce(w, p.generator_count) for w in spec.words]
    elif spec.kind == "perm":
        words = schreier_labels(spec.direct_table(p))
    else:
        raise ValueError(f"invalid subgroup spec kind {spec.kind!r}")
    action = _todd_coxeter(p, words, budget)
    table = CosetTable.from_action(action, p, check_relators=False)
    bad = table.failing_relator()
    if bad is not None:
        raise RuntimeError(f"internal error: relator {p.format(bad[0])} fails at coset {bad[1]}")
    for w in words:
        if table.act(w, 0) != 0:
            raise RuntimeError(f"internal error: subgroup generator {p.format(w)} moves coset 0")
    return table


def format_table_word(table: CosetTable, w: Sequence[int]) -> str:
    return format_word(w, table.origin.generators)
