"""Words over a signed generator alphabet and finitely presented groups.

A word is a tuple of nonzero integers: ``i`` stands for the ``i``-th
generator (1-based) and ``-i`` for its inverse.  Words are written left to
right and act on left cosets from the right end first, so the path traced
by ``x_1 x_2 ... x_k`` starting at a coset applies ``x_k`` first.

The text format is::

    gens a b;            # generator names
    rels [a,b] a^2;      # relators, whitespace separated

A word is a whitespace-free product of names, powers ``name^k``,
commutators ``[u,v]`` (expanded as ``u v u^-1 v^-1``), parenthesised
sub-words ``(u)^k`` and an optional ``*`` between factors.  ``1`` denotes
the empty word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

Word = tuple[int, ...]

__all__ = [
    "Word",
    "Presentation",
    "PresentationSyntaxError",
    "reduce",
    "inverse",
    "cyclic_reduce",
    "normalize_relator",
    "exponent_sums",
    "parse_presentation",
    "parse_word",
    "format_word",
    "format_presentation",
    "commutator",
    "power",
]


class PresentationSyntaxError(ValueError):
    """Raised for malformed presentation text; carries a 1-based position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def reduce(letters: Iterable[int], alphabet_size: int | None = None) -> Word:
    """Freely reduce a letter sequence with a single left-to-right stack pass."""
    out: list[int] = []
    for x in letters:
        x = int(x)
        if x == 0 or (alphabet_size is not None and abs(x) > alphabet_size):
            raise ValueError(f"letter {x} out of range for alphabet of size {alphabet_size}")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse(w: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(w))


def cyclic_reduce(w: Sequence[int]) -> Word:
    w = reduce(w)
    i, j = 0, len(w) - 1
    while i < j and w[i] == -w[j]:
        i += 1
        j -= 1
    return tuple(w[i:j + 1])


def normalize_relator(w: Sequence[int]) -> Word:
    return cyclic_reduce(w)


def power(w: Sequence[int], k: int) -> Word:
    if k < 0:
        return reduce(inverse(w) * (-k))
    return reduce(tuple(w) * k)


def commutator(u: Sequence[int], v: Sequence[int]) -> Word:
    return reduce(tuple(u) + tuple(v) + inverse(u) + inverse(v))


def exponent_sums(w: Sequence[int], generator_count: int) -> list[int]:
    sums = [0] * generator_count
    for x in w:
        sums[abs(x) - 1] += 1 if x > 0 else -1
    return sums


@dataclass(frozen=True)
class Presentation:
    """A finite presentation ``<S | R>`` with normalized relators.

    Relators are freely and cyclically reduced and empty ones are dropped;
    duplicates are kept because relator multiplicities enter the amalgam
    estimates.
    """

    generators: tuple[str, ...]
    relators: tuple[Word, ...] = ()
    total_relator_length: int = field(init=False)

    def __post_init__(self):
        d = len(self.generators)
        if d < 1:
            raise ValueError("a presentation needs at least one generator")
        if len(set(self.generators)) != d:
            raise ValueError("duplicate generator names")
        rels = []
        for r in self.relators:
            r = normalize_relator(reduce(r, d))
            if r:
                rels.append(r)
        object.__setattr__(self, "relators", tuple(rels))
        object.__setattr__(self, "total_relator_length", sum(len(r) for r in rels))

    @classmethod
    def free(cls, rank: int, names: Sequence[str] | None = None) -> "Presentation":
        if names is None:
            names = _default_names(rank)
        return cls(tuple(names), ())

    @property
    def generator_count(self) -> int:
        return len(self.generators)

    @property
    def relator_lengths(self) -> list[int]:
        return [len(r) for r in self.relators]

    def word(self, text: str) -> Word:
        return parse_word(text, self.generators)

    def format(self, w: Sequence[int]) -> str:
        return format_word(w, self.generators)

    def __str__(self) -> str:
        return format_presentation(self)


def _default_names(rank: int) -> tuple[str, ...]:
    if rank <= 26:
        return tuple("abcdefghijklmnopqrstuvwxyz"[:rank])
    return tuple(f"x{i}" for i in range(1, rank + 1))


# --------------------------------------------------------------------------
# parsing

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(r"-?[0-9]+")


class _Source:
    def __init__(self, text: str):
        self.text = text

    def position(self, offset: int) -> tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        start = self.text.rfind("\n", 0, offset) + 1
        return line, offset - start + 1

    def error(self, message: str, offset: int) -> PresentationSyntaxError:
        return PresentationSyntaxError(message, *self.position(offset))


def _strip_comments(text: str) -> str:
    # keeps offsets stable so error positions refer to the original text
    return re.sub(r"#[^\n]*", lambda m: " " * len(m.group(0)), text)


class _WordParser:
    def __init__(self, src: _Source, text: str, base: int, names: Sequence[str]):
        self.src = src
        self.text = text
        self.base = base
        self.pos = 0
        self.index = {name: i + 1 for i, name in enumerate(names)}
        self.by_length = sorted(names, key=len, reverse=True)

    def fail(self, message: str):
        raise self.src.error(message, self.base + self.pos)

    def parse(self) -> Word:
        w = self.product(closing=())
        if self.pos != len(self.text):
            self.fail(f"unexpected character {self.text[self.pos]!r}")
        return w

    def product(self, closing: tuple[str, ...]) -> Word:
        letters: list[int] = []
        while self.pos < len(self.text) and self.text[self.pos] not in closing:
            if self.text[self.pos] == "*" and letters:
                self.pos += 1
            letters.extend(self.factor())
        return reduce(letters)

    def factor(self) -> Word:
        t = self.text
        if self.pos >= len(t):
            self.fail("unexpected end of word")
        c = t[self.pos]
        if c == "[":
            self.pos += 1
            u = self.product(closing=(",",))
            self.expect(",")
            v = self.product(closing=("]",))
            self.expect("]")
            atom = commutator(u, v)
        elif c == "(":
            self.pos += 1
            atom = self.product(closing=(")",))
            self.expect(")")
        elif c == "1" and not _atom_follows_digit(t, self.pos):
            self.pos += 1
            atom = ()
        elif c.isalpha() or c == "_":
            atom = self.name()
        else:
            self.fail(f"unexpected character {c!r}")
        if self.pos < len(t) and t[self.pos] == "^":
            self.pos += 1
            m = _INT_RE.match(t, self.pos)
            if not m:
                self.fail("expected an integer exponent after '^'")
            k = int(m.group(0))
            if k == 0:
                self.fail("exponent must be nonzero")
            self.pos = m.end()
            atom = power(atom, k)
        return atom

    def name(self) -> Word:
        t = self.text
        for name in self.by_length:
            if t.startswith(name, self.pos):
                self.pos += len(name)
                return (self.index[name],)
        m = _NAME_RE.match(t, self.pos)
        self.fail(f"undeclared generator {m.group(0)!r}")

    def expect(self, ch: str):
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            self.fail(f"expected {ch!r}")
        self.pos += 1


def _atom_follows_digit(text: str, pos: int) -> bool:
    return pos + 1 < len(text) and text[pos + 1].isdigit()


def parse_word(text: str, names: Sequence[str]) -> Word:
    """Parse a single word written with the given generator names."""
    src = _Source(text)
    return _WordParser(src, text.strip(), 0, names).parse()


def _tokens(src: _Source, text: str, start: int, end: int):
    for m in re.finditer(r"\S+", text[start:end]):
        yield m.group(0), start + m.start()


def parse_presentation(text: str) -> Presentation:
    """Parse ``gens <name>+ ; rels <word>* ;``.

    >>> parse_presentation("gens a b; rels [a,b];").total_relator_length
    4
    """
    src = _Source(text)
    body = _strip_comments(text)
    statements = []
    start = 0
    for m in re.finditer(";", body):
        statements.append((start, m.start()))
        start = m.end()
    if body[start:].strip():
        raise src.error("missing ';' at end of statement", start + len(body[start:].rstrip()))
    if len(statements) != 2:
        raise src.error(f"expected 'gens ...;' and 'rels ...;', found {len(statements)} statements", 0)

    (gs, ge), (rs, re_) = statements
    gtoks = list(_tokens(src, body, gs, ge))
    if not gtoks or gtoks[0][0] != "gens":
        raise src.error("expected 'gens'", gtoks[0][1] if gtoks else gs)
    names = []
    for tok, off in gtoks[1:]:
        if not _NAME_RE.fullmatch(tok):
            raise src.error(f"invalid generator name {tok!r}", off)
        if tok in names:
            raise src.error(f"duplicate generator {tok!r}", off)
        names.append(tok)
    if not names:
        raise src.error("no generators declared", gtoks[0][1])

    rtoks = list(_tokens(src, body, rs, re_))
    if not rtoks or rtoks[0][0] != "rels":
        raise src.error("expected 'rels'", rtoks[0][1] if rtoks else rs)
    rels = [_WordParser(src, tok, off, names).parse() for tok, off in rtoks[1:]]
    return Presentation(tuple(names), tuple(rels))


# --------------------------------------------------------------------------
# formatting

def format_word(w: Sequence[int], names: Sequence[str]) -> str:
    """Format a word; syllables are separated by ``*`` so parsing is unambiguous."""
    if not w:
        return "1"
    parts = []
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        x, k = w[i], j - i
        e = k if x > 0 else -k
        name = names[abs(x) - 1]
        parts.append(name if e == 1 else f"{name}^{e}")
        i = j
    return "*".join(parts)


def format_presentation(p: Presentation) -> str:
    rels = " ".join(format_word(r, p.generators) for r in p.relators)
    sep = " " if rels else ""
    return f"gens {' '.join(p.generators)}; rels{sep}{rels};"
