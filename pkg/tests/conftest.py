"""Shared oracles.  They deliberately avoid the package's own linear algebra."""

import random
import sys

import pytest
import sympy
from sympy.matrices.normalforms import smith_normal_form
from sympy.polys.domains import ZZ, GF
from sympy.polys.matrices import DomainMatrix


def dense(rows, ncols):
    return [[int(r.get(j, 0)) for j in range(ncols)] for r in rows]


def snf_oracle(rows, ncols):
    """``(free rank, nontrivial torsion)`` of ``Z^ncols / rowspace`` via sympy."""
    rows = [r for r in dense(rows, ncols) if any(r)]
    if not rows:
        return ncols, []
    D = smith_normal_form(sympy.Matrix(rows), domain=ZZ)
    diag = [abs(int(D[i, i])) for i in range(min(D.shape))]
    nonzero = [d for d in diag if d]
    return ncols - len(nonzero), sorted(d for d in nonzero if d > 1)


def rank_oracle(rows, ncols, p=0):
    rows = [r for r in dense(rows, ncols) if any(r)]
    if not rows:
        return 0
    if p == 0:
        return sympy.Matrix(rows).rank()
    return DomainMatrix([[GF(p)(x) for x in r] for r in rows], (len(rows), ncols), GF(p)).rank()


def random_perm(rng, n):
    p = list(range(n))
    rng.shuffle(p)
    return tuple(p)


@pytest.fixture
def rng():
    return random.Random(20261016)


SPLIT_PRESENTATIONS = [
    "gens a b; rels ;",
    "gens a b; rels [a,b];",
    "gens x y; rels x^2 y^3;",
    "gens a b; rels a^4 b^3 (ab)^2;",
    "gens a b c; rels [a,b] c^2;",
    "gens x y; rels x^2*y^-2;",
]


def random_split_instances(count, seed, max_index=64):
    """``(presentation, table, A)`` triples from random finite-index subgroups.

    Subgroups come from random generating words, from point stabilizers of
    random permutations (free presentations) and from derived-series levels.
    """
    from rankgrad.chains import derived_p_chain
    from rankgrad.cosets import BudgetExhausted, SubgroupSpec, enumerate_cosets, stabilizer_table
    from rankgrad.presentations import parse_presentation

    rng = random.Random(seed)
    derived = []
    for text in SPLIT_PRESENTATIONS:
        p = parse_presentation(text)
        for prime in (2, 3):
            c = derived_p_chain(p, prime, 3, budget=max_index)
            derived += [(p, t) for t in c.levels[1:] if t.coset_count <= max_index]
    out = []
    small = 0
    while len(out) < count:
        how = rng.random()
        if how < 0.3:
            p, table = rng.choice(derived)
        elif how < 0.6:
            p = parse_presentation(rng.choice(SPLIT_PRESENTATIONS[:1] + ["gens a b c; rels ;"]))
            deg = rng.randint(3, max_index)
            images = [random_perm(rng, deg) for _ in range(p.generator_count)]
            table = stabilizer_table(p, images, 0)
        else:
            p = parse_presentation(rng.choice(SPLIT_PRESENTATIONS))
            d = p.generator_count
            letters = [x for i in range(1, d + 1) for x in (i, -i)]
            words = [tuple(rng.choice(letters) for _ in range(rng.randint(1, 4)))
                     for _ in range(rng.randint(1, d + 1))]
            try:
                table = enumerate_cosets(p, SubgroupSpec.generated_by(words), budget=400)
            except BudgetExhausted:
                continue
        n = table.coset_count
        if not 2 <= n <= max_index:
            continue
        if n <= 4:
            if small * 5 >= count:
                continue
            small += 1
        A = rng.sample(range(n), rng.randint(1, n - 1))
        out.append((p, table, A))
    return out


def circulant_kernel_dim(coeffs, n, p=0):
    """``dim ker f(C)`` for the ``n``-cycle ``C``: the degree of ``gcd(f, x^n - 1)``.

    ``coeffs[k]`` is the coefficient of ``a^k`` (k >= 0) in ``f``.
    """
    x = sympy.symbols("x")
    f = sum(c * x ** k for k, c in enumerate(coeffs))
    kw = {"modulus": p} if p else {"domain": "QQ"}
    F = sympy.Poly(f, x, **kw)
    if F.is_zero:
        return n
    return sympy.gcd(F, sympy.Poly(x ** n - 1, x, **kw)).degree()


def classify_by_walking(p, table, g, A):
    """Independent re-derivation of the relator and generator classes."""
    A = set(A)
    n = table.coset_count
    label = {}
    for k, (v, s) in enumerate(g.nontree_edges, start=1):
        label[(v, s)] = k
    X3 = set()
    for v in range(n):
        for s in range(table.generator_count):
            w = table.act((s + 1,), v)
            if (v in A) != (w in A) and (v, s) in label:
                X3.add(label[(v, s)])
    R1, R2 = set(), set()
    idx = 0
    for r in p.relators:
        for t in range(n):
            visited = [t]
            used = set()
            crossing = False
            cur = t
            for x in reversed(r):
                nxt = table.act((x,), cur)
                edge = (cur, x - 1) if x > 0 else (nxt, -x - 1)
                if edge in label:
                    used.add(label[edge])
                crossing |= (cur in A) != (nxt in A)
                visited.append(nxt)
                cur = nxt
            if any(v in A for v in visited):
                R1.add(idx)
            if any(v not in A for v in visited):
                R2.add(idx)
            if crossing:
                X3 |= used
            idx += 1
    X1 = {k for (v, s), k in label.items() if k not in X3 and v in A and table.act((s + 1,), v) in A}
    X2 = {k for (v, s), k in label.items() if k not in X3 and v not in A and table.act((s + 1,), v) not in A}
    return X1, X2, X3, R1, R2


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(verdicts):
        terminalreporter.write_line(verdicts[k])
