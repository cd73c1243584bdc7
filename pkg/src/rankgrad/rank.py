"""Bounds on the rank ``d(H)`` of finite-index subgroups and rank gradients.

The rank of a subgroup is not computable in general, so every level gets
an interval ``[lower, upper]``:

* lower bounds come from the abelianization (over Z, or over F_p),
* upper bounds from Tietze simplification of the Reidemeister-Schreier
  presentation and from the Schreier index formula.

``r(G, H) = (d(H) - 1) / |G : H|`` is reported as exact fractions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .chains import Chain
from .linalg import abelian_invariants, rank_mod_p, relation_rows
from .presentations import Word, cyclic_reduce, inverse, reduce
from .schreier import SubgroupPresentation, build_graph, reidemeister_schreier

__all__ = [
    "RankBounds",
    "LevelRecord",
    "RankGradientReport",
    "abelianization_rank",
    "tietze_upper",
    "rank_bounds",
    "rank_gradient",
    "free_product_rank",
    "amalgam_rank_bound",
    "closed_form_bounds",
]

NIELSEN_SCHREIER = "nielsen-schreier exact"
TIETZE = "tietze"
SCHREIER = "schreier count"
ABELIANIZATION = "abelianization rank"
MOD_P = "mod-p rank"
TRIVIAL = "trivial"


@dataclass(frozen=True)
class RankBounds:
    lower: int
    upper: int
    lower_method: str
    upper_method: str

    def __post_init__(self):
        if self.lower > self.upper:
            raise AssertionError(f"rank bounds crossed: lower {self.lower} > upper {self.upper}")

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


def abelianization_rank(sp: SubgroupPresentation, mode: str | int = "integer") -> int:
    """Minimal number of generators of ``H^ab`` (``mode="integer"``) or
    the F_p-dimension of ``H / H' H^p`` (``mode=p``)."""
    rows = sp.relation_rows()
    if mode == "integer":
        free, torsion = abelian_invariants(rows, sp.generator_count)
        return free + len(torsion)
    p = int(mode)
    return sp.generator_count - rank_mod_p(rows, p)


# --------------------------------------------------------------------------
# Tietze simplification

def _substitute(r: Word, x: int, image: Word) -> Word:
    inv_image = inverse(image)
    out: list[int] = []
    for y in r:
        if y == x:
            out.extend(image)
        elif y == -x:
            out.extend(inv_image)
        else:
            out.append(y)
    return cyclic_reduce(reduce(out))


def _canonical(r: Word) -> Word:
    # a relator, its cyclic rotations and its inverse all say the same thing
    best = r
    for w in (r, inverse(r)):
        for i in range(len(w)):
            rot = w[i:] + w[:i]
            if rot < best:
                best = rot
    return best


def tietze_upper(sp: SubgroupPresentation, budget: int = 100_000) -> tuple[int, SubgroupPresentation]:
    """Simplify by Tietze moves and return ``(generator count, presentation)``.

    Pass list, repeated until nothing changes or ``budget`` eliminations
    have been made:

    1. cyclically reduce relators and drop empty and repeated ones
       (repeats up to rotation and inversion),
    2. pick the shortest relator containing some generator exactly once
       (preferring the generator with the fewest occurrences elsewhere),
       solve it for that generator, substitute everywhere and drop both.

    The result still presents the same group, so its generator count is an
    upper bound for ``d(H)``.
    """
    rels: list[Word] = []
    seen: set[Word] = set()
    for r in sp.relators:
        r = cyclic_reduce(r)
        if r:
            c = _canonical(r)
            if c not in seen:
                seen.add(c)
                rels.append(r)
    alive = set(range(1, sp.generator_count + 1))
    occurrences: dict[int, set[int]] = {}
    slots: dict[int, Word] = dict(enumerate(rels))
    for i, r in slots.items():
        for y in r:
            occurrences.setdefault(abs(y), set()).add(i)
    eliminations = 0
    while eliminations < budget:
        choice = None
        for i in sorted(slots, key=lambda i: (len(slots[i]), i)):
            r = slots[i]
            counts: dict[int, int] = {}
            for y in r:
                counts[abs(y)] = counts.get(abs(y), 0) + 1
            cands = [g for g, k in counts.items() if k == 1]
            if cands:
                g = min(cands, key=lambda g: (len(occurrences.get(g, ())), g))
                choice = (i, g)
                break
        if choice is None:
            break
        i, g = choice
        r = slots.pop(i)
        for y in r:
            occurrences[abs(y)].discard(i)
        pos = next(k for k, y in enumerate(r) if abs(y) == g)
        # r = u g^e v = 1  gives  g^e = u^-1 v^-1, so g = (v u)^-e
        rest = r[pos + 1:] + r[:pos]
        image = inverse(rest) if r[pos] > 0 else rest
        image = reduce(image)
        for j in sorted(occurrences.get(g, ())):
            old = slots[j]
            for y in old:
                occurrences[abs(y)].discard(j)
            new = _substitute(old, g, image)
            if new:
                slots[j] = new
                for y in new:
                    occurrences.setdefault(abs(y), set()).add(j)
            else:
                del slots[j]
        occurrences.pop(g, None)
        alive.discard(g)
        eliminations += 1
    # renumber surviving generators
    order = sorted(alive)
    pos_of = {g: k + 1 for k, g in enumerate(order)}
    out = []
    seen = set()
    for i in sorted(slots):
        r = tuple(pos_of[abs(y)] * (1 if y > 0 else -1) for y in slots[i])
        c = _canonical(r)
        if c not in seen:
            seen.add(c)
            out.append(r)
    simplified = SubgroupPresentation(len(order), tuple(out))
    return len(order), simplified


# --------------------------------------------------------------------------
# per-level bounds

def rank_bounds(sp: SubgroupPresentation, *, ambient_generators: int, index: int, free: bool = False,
                mode: str | int = "integer", tietze_budget: int = 100_000,
                inherited_upper: int | None = None) -> RankBounds:
    """Interval for ``d(H)`` from a Reidemeister-Schreier presentation.

    ``free`` declares the ambient presentation relator-free, in which case
    the Nielsen-Schreier count is exact.  ``inherited_upper`` is an upper
    bound already known from a coarser level.
    """
    schreier = (ambient_generators - 1) * index + 1
    if free:
        if sp.nonempty_relators:
            raise ValueError("free ambient group but the subgroup presentation has relators")
        return RankBounds(sp.generator_count, sp.generator_count, NIELSEN_SCHREIER, NIELSEN_SCHREIER)
    lower = abelianization_rank(sp, mode)
    lower_method = ABELIANIZATION if mode == "integer" else MOD_P
    if lower == 0:
        lower_method = TRIVIAL
    upper, _ = tietze_upper(sp, tietze_budget)
    upper_method = TIETZE
    for value, method in ((schreier, SCHREIER), (inherited_upper, SCHREIER)):
        if value is not None and value < upper:
            upper, upper_method = value, method
    if upper < lower:
        raise AssertionError(f"upper bound {upper} below abelianization lower bound {lower}")
    return RankBounds(lower, upper, lower_method, upper_method)


@dataclass
class LevelRecord:
    level: int
    index: int
    bounds: RankBounds | None
    r_lower: Fraction | None
    r_upper: Fraction | None
    error: str | None = None

    def as_dict(self) -> dict:
        b = self.bounds
        return {
            "level": self.level,
            "index": self.index,
            "lower": b.lower if b else None,
            "upper": b.upper if b else None,
            "r_lower": _fmt(self.r_lower),
            "r_upper": _fmt(self.r_upper),
            "methods": {"lower": b.lower_method, "upper": b.upper_method} if b else None,
            "error": self.error,
        }


def _fmt(x: Fraction | None):
    return None if x is None else str(x)


@dataclass
class RankGradientReport:
    levels: list[LevelRecord] = field(default_factory=list)
    description: str = ""
    truncated: str | None = None

    @property
    def headline(self) -> tuple[Fraction, Fraction] | None:
        """``[r_lower, r_upper]`` at the deepest level that has bounds.

        ``r_upper`` is non-increasing along the chain, so the upper end is
        the best upper estimate; the lower end is the last level's value and
        says nothing about deeper levels.
        """
        done = [rec for rec in self.levels if rec.bounds is not None]
        if not done:
            return None
        return done[-1].r_lower, min(rec.r_upper for rec in done)

    def as_dict(self) -> dict:
        h = self.headline
        return {
            "chain": self.description,
            "levels": [rec.as_dict() for rec in self.levels],
            "headline": {"r_lower": _fmt(h[0]), "r_upper": _fmt(h[1]),
                         "r_lower_float": float(h[0]), "r_upper_float": float(h[1])} if h else None,
            "truncated": self.truncated,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "index", "lower", "upper", "r_lower", "r_upper", "lower_method", "upper_method"])
        for rec in self.levels:
            b = rec.bounds
            w.writerow([rec.level, rec.index, b.lower if b else "", b.upper if b else "",
                        _fmt(rec.r_lower) or "", _fmt(rec.r_upper) or "",
                        b.lower_method if b else "", b.upper_method if b else ""])
        return buf.getvalue()


def rank_gradient(chain: Chain, *, mode: str | int = "integer", tietze_budget: int = 100_000,
                  max_index: int | None = None) -> RankGradientReport:
    """Rank bounds at every materialized level of ``chain``.

    The upper bound of each level is propagated to the next one through
    ``d(H_{n+1}) - 1 <= (d(H_n) - 1) |H_n : H_{n+1}|``, which makes
    ``r_upper`` non-increasing.
    """
    p = chain.presentation
    free = not p.relators
    report = RankGradientReport(description=chain.description, truncated=chain.truncated)
    prev: RankBounds | None = None
    prev_index = None
    for n, table in enumerate(chain.levels):
        index = table.coset_count
        if max_index is not None and index > max_index:
            report.levels.append(LevelRecord(n, index, None, None, None, f"index {index} over limit {max_index}"))
            continue
        inherited = None
        if prev is not None:
            inherited = (prev.upper - 1) * (index // prev_index) + 1
        sp = reidemeister_schreier(build_graph(table))
        b = rank_bounds(sp, ambient_generators=p.generator_count, index=index, free=free,
                        mode=mode, tietze_budget=tietze_budget, inherited_upper=inherited)
        report.levels.append(LevelRecord(n, index, b, Fraction(b.lower - 1, index), Fraction(b.upper - 1, index)))
        prev, prev_index = b, index
    return report


# --------------------------------------------------------------------------
# closed forms

def _check_divides(n: int, **parts: int):
    for name, k in parts.items():
        if k < 1 or n % k:
            raise ValueError(f"{name}={k} must be a positive divisor of n={n}")


def free_product_rank(n: int, k1: int, k2: int, d1: int, d2: int) -> tuple[int, Fraction]:
    """``d(N)`` for a normal subgroup of index ``n`` in a free product ``G1 * G2``.

    ``k_j = |G_j : N cap G_j|`` and ``d_j = d(N cap G_j)``.  Returns the rank
    and ``(d(N) - 1) / n``.
    """
    _check_divides(n, k1=k1, k2=k2)
    d = (n // k1) * d1 + (n // k2) * d2 + n - n // k1 - n // k2 + 1
    return d, Fraction(d - 1, n)


def amalgam_rank_bound(n: int, k1: int, k2: int, a: int, d1: int, d2: int) -> tuple[int, Fraction]:
    """Upper bound for ``d(N)`` in an amalgam ``G1 *_A G2``, ``a = |A : A cap N|``.

    Returns the bound and ``(bound - 1) / n``, which equals
    ``(d1 - 1)/k1 + (d2 - 1)/k2 + 1/a``.
    """
    _check_divides(n, k1=k1, k2=k2, a=a)
    bound = (n // k1) * d1 + (n // k2) * d2 + n // a - n // k1 - n // k2 + 1
    return bound, Fraction(bound - 1, n)


def _log(x: float, base: float | str) -> float:
    if base == 2:
        return math.log2(x)
    if base == "e":
        return math.log(x)
    return math.log(x, base)


def closed_form_bounds(kind: str, *, log_base: float | str = 2, **params) -> float:
    """Evaluate one of the closed-form bounds.

    * ``finite-normal``: ``d / a`` bounds ``r`` when a finite normal
      subgroup of order ``a`` meets the level trivially.
    * ``soluble``: ``d/b + (1 + (2d+1) log b) / b`` with ``b = |A : A cap G_j|``.
    * ``module-gen``: ``t + (2d+1) log b`` generators for a submodule of
      index ``b`` in a ``t``-generated module.
    """
    if kind == "finite-normal":
        return params["d"] / params["a"]
    if kind == "soluble":
        d, b = params["d"], params["b"]
        return d / b + (1 + (2 * d + 1) * _log(b, log_base)) / b
    if kind == "module-gen":
        t, d, b = params["t"], params["d"], params["b"]
        return t + (2 * d + 1) * _log(b, log_base)
    raise ValueError(f"unknown bound kind {kind!r}")
