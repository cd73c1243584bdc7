"""Kernel dimensions of group-algebra matrices over finite quotients.

A matrix ``A`` over ``K[G]`` acts on column vectors ``b`` in ``K[G]^m`` by
left multiplication, ``(Ab)_i = sum_j A_ij b_j``.  Over a normal level the
same formula defines a ``K``-linear map on ``K[G/N]^m``; its kernel
dimension divided by the index is the sequence studied here.  On finite
windows of ``G`` itself, ``h(Omega)`` is the dimension of the image of the
vectors supported on ``Omega``.

All ranks are exact: sparse elimination over ``F_p`` or over ``Q``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

from .chains import Chain
from .cosets import CosetTable
from .groups import GroupModel
from .linalg import rank_mod_p, rank_rational
from .presentations import Word, format_word, parse_word, reduce
from .schreier import build_graph, reidemeister_schreier

__all__ = [
    "Field",
    "GroupAlgebraMatrix",
    "MatrixSyntaxError",
    "SparseMatrix",
    "KernelDimSequence",
    "parse_matrix",
    "pushforward",
    "kernel_dim",
    "matrix_rank",
    "approx_sequence",
    "folner_h",
    "ow_limit_estimate",
    "sandwich",
    "bounded_generation_probe",
]


class MatrixSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Field:
    """``F_p`` for a prime ``p``, or ``Q`` when ``p == 0``."""

    p: int = 0

    def __post_init__(self):
        if self.p and (self.p < 2 or any(self.p % q == 0 for q in range(2, math.isqrt(self.p) + 1))):
            raise ValueError(f"{self.p} is not prime")
        if self.p >= 2 ** 31:
            raise ValueError("characteristic must be below 2^31")

    @classmethod
    def parse(cls, text: str) -> "Field":
        t = text.strip()
        if t in ("Q", "QQ"):
            return cls(0)
        m = re.fullmatch(r"F_?(\d+)", t)
        if not m:
            raise ValueError(f"unknown field {text!r}; use Q or Fp with p prime")
        return cls(int(m.group(1)))

    def __str__(self) -> str:
        return f"F{self.p}" if self.p else "Q"

    def coerce(self, c) -> Fraction | int:
        c = Fraction(c)
        if not self.p:
            # integers stay ints so the common all-integer case avoids Fraction arithmetic
            return c.numerator if c.denominator == 1 else c
        if c.denominator % self.p == 0:
            raise ValueError(f"coefficient {c} is undefined in {self}")
        return c.numerator * pow(c.denominator, -1, self.p) % self.p

    def is_zero(self, c) -> bool:
        return c == 0


@dataclass
class SparseMatrix:
    """Column-sparse matrix: ``columns[k]`` maps row index to entry."""

    nrows: int
    ncols: int
    columns: list[dict[int, Fraction | int]]
    field: Field

    def dense(self) -> list[list]:
        out = [[0] * self.ncols for _ in range(self.nrows)]
        for k, col in enumerate(self.columns):
            for r, v in col.items():
                out[r][k] = v
        return out


def _integral(col: dict, field: Field) -> dict[int, int]:
    if field.p:
        return {r: int(v) for r, v in col.items() if v % field.p}
    if all(type(v) is int for v in col.values()):
        return {r: v for r, v in col.items() if v}
    den = 1
    for v in col.values():
        den = den * Fraction(v).denominator // math.gcd(den, Fraction(v).denominator)
    return {r: int(Fraction(v) * den) for r, v in col.items() if v}


def matrix_rank(M: SparseMatrix) -> int:
    cols = (_integral(c, M.field) for c in M.columns)
    return rank_mod_p(cols, M.field.p) if M.field.p else rank_rational(cols)


def kernel_dim(M: SparseMatrix) -> int:
    """``ncols - rank``."""
    return M.ncols - matrix_rank(M)


@dataclass
class GroupAlgebraMatrix:
    """``n x m`` matrix whose entries are finite sums ``sum c * word``.

    ``entries[(i, j)]`` (0-based) maps reduced words to nonzero coefficients.
    """

    n: int
    m: int
    entries: dict[tuple[int, int], dict[Word, Fraction | int]]
    field: Field
    generators: tuple[str, ...] = ()

    def __post_init__(self):
        clean = {}
        for (i, j), terms in self.entries.items():
            if not (0 <= i < self.n and 0 <= j < self.m):
                raise ValueError(f"entry ({i + 1},{j + 1}) outside a {self.n}x{self.m} matrix")
            acc: dict[Word, Fraction | int] = {}
            for w, c in terms.items():
                w = reduce(w)
                acc[w] = self.field.coerce(Fraction(acc.get(w, 0)) + Fraction(c))
            acc = {w: c for w, c in acc.items() if c != 0}
            if acc:
                clean[(i, j)] = acc
        self.entries = clean

    @classmethod
    def scalar(cls, terms: dict[Sequence[int], object], field: Field, generators=()) -> "GroupAlgebraMatrix":
        """A ``1 x 1`` matrix."""
        return cls(1, 1, {(0, 0): {tuple(w): c for w, c in terms.items()}}, field, tuple(generators))

    @property
    def support(self) -> set[Word]:
        return {w for terms in self.entries.values() for w in terms}

    def format(self) -> str:
        names = self.generators or tuple(f"g{i}" for i in range(1, 1 + max((abs(x) for w in self.support for x in w), default=0)))
        lines = [f"matrix K={self.field} n={self.n} m={self.m}"]
        for (i, j) in sorted(self.entries):
            terms = " + ".join(f"{c}*{format_word(w, names)}" for w, c in sorted(self.entries[(i, j)].items()))
            lines.append(f"({i + 1},{j + 1}) = {terms}")
        return "\n".join(lines) + "\n"

    def window_matrix(self, omega: Sequence[Hashable], model: GroupModel):
        """The map on vectors supported on ``omega``; returns ``(matrix, window)``.

        Columns are ``(j, t)`` for ``t`` in ``omega``; rows ``(i, x)`` for ``x``
        in the window ``supp(A) . omega``, listed in first-seen order.
        """
        omega = list(dict.fromkeys(omega))
        gam = {w: model.from_word(w) for w in self.support}
        window: dict[Hashable, int] = {}
        for t in omega:
            window.setdefault(t, len(window))
        cols = []
        for j in range(self.m):
            for t in omega:
                col: dict[int, object] = {}
                for i in range(self.n):
                    for w, c in self.entries.get((i, j), {}).items():
                        r = window.setdefault(model.mul(gam[w], t), len(window))
                        col[(i, r)] = _add(col.get((i, r), 0), c, self.field)
                cols.append(col)
        size = len(window)
        flat = [{i * size + r: v for (i, r), v in col.items() if v != 0} for col in cols]
        return SparseMatrix(self.n * size, self.m * len(omega), flat, self.field), window


def _add(a, b, field: Field):
    if field.p:
        return (a + b) % field.p
    s = a + b
    return s.numerator if type(s) is Fraction and s.denominator == 1 else s


_HEADER = re.compile(r"\s*matrix\s+K=(\S+)\s+n=(\d+)\s+m=(\d+)\s*$")
_ENTRY = re.compile(r"\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*=\s*(.+?)\s*$")
_COEFF = re.compile(r"\s*([+-]?\s*\d+(?:/\d+)?)\s*\*\s*(.+?)\s*$")
_SCALAR = re.compile(r"\s*([+-]?\s*\d+(?:/\d+)?)\s*$")


def parse_matrix(text: str, generators: Sequence[str]) -> GroupAlgebraMatrix:
    """Parse ``matrix K=<Q|Fp> n=<n> m=<m>`` followed by ``(i,j) = c*word + ...`` lines.

    Indices are 1-based; the word ``1`` is the identity; a term without
    ``c*`` has coefficient 1, ``- word`` means coefficient -1 and a bare
    number ``c`` is ``c*1``.
    """
    lines = [(k, ln.split("#", 1)[0]) for k, ln in enumerate(text.splitlines(), start=1)]
    lines = [(k, ln) for k, ln in lines if ln.strip()]
    if not lines:
        raise MatrixSyntaxError("empty matrix file")
    k0, head = lines[0]
    m = _HEADER.match(head)
    if not m:
        raise MatrixSyntaxError(f"line {k0}: expected 'matrix K=<Q|Fp> n=<n> m=<m>'")
    try:
        field = Field.parse(m.group(1))
    except ValueError as exc:
        raise MatrixSyntaxError(f"line {k0}: {exc}") from None
    n, mm = int(m.group(2)), int(m.group(3))
    entries: dict[tuple[int, int], dict[Word, Fraction]] = {}
    for k, ln in lines[1:]:
        e = _ENTRY.match(ln)
        if not e:
            raise MatrixSyntaxError(f"line {k}: expected '(i,j) = terms'")
        i, j = int(e.group(1)) - 1, int(e.group(2)) - 1
        if not (0 <= i < n and 0 <= j < mm):
            raise MatrixSyntaxError(f"line {k}: entry ({i + 1},{j + 1}) outside {n}x{mm}")
        terms = entries.setdefault((i, j), {})
        for sign, term in _split_terms(e.group(3)):
            cm = _COEFF.match(term) or _SCALAR.match(term)
            if cm and cm.lastindex == 1:
                coeff, wtext = Fraction(cm.group(1).replace(" ", "")) * sign, "1"
            elif cm:
                coeff = Fraction(cm.group(1).replace(" ", "")) * sign
                wtext = cm.group(2)
            else:
                coeff, wtext = Fraction(sign), term
            try:
                w = () if wtext.strip() == "1" else parse_word(wtext, generators)
            except ValueError as exc:
                raise MatrixSyntaxError(f"line {k}: {exc}") from None
            terms[w] = terms.get(w, 0) + coeff
    try:
        return GroupAlgebraMatrix(n, mm, entries, field, tuple(generators))
    except ValueError as exc:
        raise MatrixSyntaxError(str(exc)) from None


def _split_terms(text: str):
    """Split on top-level ``+``/``-`` (not inside exponents or brackets)."""
    out = []
    depth = 0
    sign, start = 1, 0
    t = text.strip()
    for pos, ch in enumerate(t):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch in "+-" and depth == 0 and pos > start and t[pos - 1] not in "^*" and t[start:pos].strip():
            out.append((sign, t[start:pos].strip()))
            sign, start = (1 if ch == "+" else -1), pos + 1
    last = t[start:].strip()
    if last.startswith("-") and not _COEFF.match(last):
        sign, last = -sign, last[1:].strip()
    out.append((sign, last))
    return out


# --------------------------------------------------------------------------
# finite quotients

def pushforward(A: GroupAlgebraMatrix, level: CosetTable) -> SparseMatrix:
    """The image of ``A`` over ``K[G/N]`` for a normal level, as an ``(n N) x (m N)`` matrix.

    Column ``j N + v`` has entry ``c`` at row ``i N + (gamma . v)`` for every
    term ``c * gamma`` of ``A_ij``.
    """
    if not level.is_normal():
        raise ValueError("level is not normal; the quotient is not a group")
    N = level.coset_count
    perms = {w: level.word_perm(w) for w in A.support}
    cols: list[dict[int, object]] = [dict() for _ in range(A.m * N)]
    for (i, j), terms in sorted(A.entries.items()):
        for w, c in terms.items():
            img = perms[w]
            for v in range(N):
                r = i * N + int(img[v])
                col = cols[j * N + v]
                nv = _add(col.get(r, 0), c, A.field)
                if nv:
                    col[r] = nv
                else:
                    col.pop(r, None)
    return SparseMatrix(A.n * N, A.m * N, cols, A.field)


@dataclass
class KernelDimSequence:
    levels: list[int]
    indices: list[int]
    dims: list[int]
    m: int
    field: Field

    @property
    def values(self) -> list[Fraction]:
        return [Fraction(d, n) for d, n in zip(self.dims, self.indices)]

    @property
    def estimate(self) -> Fraction:
        return self.values[-1]

    @property
    def spread(self) -> Fraction:
        tail = self.values[len(self.values) // 2:]
        return max(tail) - min(tail)

    def as_dict(self) -> dict:
        return {
            "field": str(self.field),
            "levels": [
                {"level": l, "index": n, "dim_ker": d, "value": str(v), "value_float": float(v)}
                for l, n, d, v in zip(self.levels, self.indices, self.dims, self.values)
            ],
            "estimate": {"value": str(self.estimate), "value_float": float(self.estimate),
                         "spread": float(self.spread)},
        }

    def to_csv(self) -> str:
        rows = ["level,index,dim_ker,value"]
        rows += [f"{l},{n},{d},{float(v)!r}" for l, n, d, v in zip(self.levels, self.indices, self.dims, self.values)]
        return "\n".join(rows) + "\n"


def approx_sequence(A: GroupAlgebraMatrix, chain: Chain, first_level: int = 1) -> KernelDimSequence:
    """``dim ker A_i / index`` for every materialized level from ``first_level``."""
    levels, indices, dims = [], [], []
    for i in range(first_level, len(chain.levels)):
        if not chain.normal_flags[i]:
            raise ValueError(f"level {i} is not normal")
        M = pushforward(A, chain[i])
        levels.append(i)
        indices.append(chain[i].coset_count)
        dims.append(kernel_dim(M))
        if not 0 <= dims[-1] <= A.m * indices[-1]:
            raise AssertionError("kernel dimension out of range")
    if not levels:
        raise ValueError("chain has no levels to evaluate")
    return KernelDimSequence(levels, indices, dims, A.m, A.field)


# --------------------------------------------------------------------------
# finite windows of the group

def folner_h(A: GroupAlgebraMatrix, omega: Sequence[Hashable], model: GroupModel) -> int:
    """``dim {A b : supp b_j in omega}``; ``omega`` holds model elements."""
    M, _ = A.window_matrix(omega, model)
    return matrix_rank(M)


@dataclass
class OWEstimate:
    sizes: list[int]
    h: list[int]
    m: int

    @property
    def ratios(self) -> list[Fraction]:
        return [Fraction(h, s) for h, s in zip(self.h, self.sizes)]

    @property
    def H(self) -> Fraction:
        return self.ratios[-1]

    @property
    def kernel_limit(self) -> Fraction:
        """``m - H``."""
        return self.m - self.H

    def as_dict(self) -> dict:
        return {"sizes": self.sizes, "h": self.h, "ratios": [float(r) for r in self.ratios],
                "H": float(self.H), "m_minus_H": float(self.kernel_limit)}


def ow_limit_estimate(A: GroupAlgebraMatrix, family: Sequence[Sequence[Hashable]], model: GroupModel) -> OWEstimate:
    """``h(Omega_i) / |Omega_i|`` along a Følner family, and ``m - H`` from its last term."""
    sizes, hs = [], []
    for omega in family:
        omega = list(dict.fromkeys(omega))
        sizes.append(len(omega))
        hs.append(folner_h(A, omega, model))
    return OWEstimate(sizes, hs, A.m)


def sandwich(A: GroupAlgebraMatrix, level: CosetTable, T: Sequence[Hashable], model: GroupModel) -> dict:
    """Compare ``h(T)``, ``dim Im A_j`` and the part of the image living on ``T``.

    ``T`` is a transversal of the normal level ``level``.  Vectors supported
    on ``T`` whose image is also supported on ``T`` inject into the image
    over the quotient, so ``h(T) >= dim Im A_j >= inner``.  The image of
    vectors on ``T`` leaves ``T`` only at points ``gamma t`` with ``t`` on the
    boundary for ``S = generators + supp(A)``, so ``inner >= h(T) - n |dS(T)|``.
    """
    from .amenable import boundary_count

    T = list(T)
    if len(set(T)) != len(T) or len(T) != level.coset_count:
        raise ValueError("T is not a transversal of the level")
    M, window = A.window_matrix(T, model)
    h = matrix_rank(M)
    N = len(window)
    inside = set(range(len(T)))  # T occupies the first window slots
    out_rows = {i * N + r for i in range(A.n) for r in range(N) if r not in inside}
    M_out = SparseMatrix(M.nrows, M.ncols, [{r: v for r, v in c.items() if r in out_rows} for c in M.columns], M.field)
    # dim ker(M_out) - dim ker(M)
    inner = h - matrix_rank(M_out)
    image = matrix_rank(pushforward(A, level))
    d = level.generator_count
    S = [model.from_word((s,)) for s in range(1, d + 1)]
    ident = model.identity()
    for w in sorted(A.support):
        g = model.from_word(w)
        if g != ident and g not in S:
            S.append(g)
    bd = boundary_count(T, S, model)
    slack = A.n * bd
    return {
        "size": len(T),
        "h": h,
        "dim_image": image,
        "inner": inner,
        "boundary": bd,
        "S_size": len(S),
        "epsilon": bd / len(T),
        "lower": h - slack,
        "holds": h >= image >= inner >= h - slack,
    }


# --------------------------------------------------------------------------
# bounded generation

def bounded_generation_probe(chain: Chain, t: int) -> dict:
    """Mod-2 ranks of ``G_i / G_i' G_i^2`` against ``t + (t - 1) log2 |G/G_i|``.

    A rank above the bound contradicts the declared number ``t`` of cyclic
    factors; such levels are listed under ``violations``.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    records = []
    violations = []
    for i, table in enumerate(chain.levels):
        if not chain.normal_flags[i]:
            raise ValueError(f"level {i} is not normal")
        sp = reidemeister_schreier(build_graph(table))
        r = sp.generator_count - rank_mod_p(sp.relation_rows(), 2)
        n = table.coset_count
        bound = t + (t - 1) * math.log2(n)
        ok = r <= bound + 1e-12
        records.append({"level": i, "index": n, "r": r, "bound": bound, "ratio": r / n, "within_bound": ok})
        if not ok:
            violations.append(i)
    return {"t": t, "levels": records, "violations": violations,
            "message": (f"mod-2 rank exceeds the bound at level {violations[0]}; "
                        f"the group is not a product of {t} cyclic subgroups") if violations else "consistent"}
