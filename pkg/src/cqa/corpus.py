"""Named example queries and random or exhaustive generators for testing."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from typing import Iterator

from .attackgraph import CycleShape
from .jointree import is_acyclic
from .querylang import Atom, Query, Term, parse_query
from .uncertaindb import Fact, UncertainDatabase

CONFERENCE_DB_TEXT = """\
@relation C 3 2
@relation R 2 1
C KDD 2017 Rome
C PODS 2016 Paris
C PODS 2016 Rome
R KDD A
R KDD B
R PODS A
"""

ROME_A = parse_query("C(x,y;'Rome') & R(x;'A')")
Q1 = parse_query("R(u,'a';x) & S(y;x,z) & T(x;y) & P(x;z)")
Q0 = parse_query("R0(x;y) & S0(y,z;x)")
PAIR = parse_query("R1(x;y) & R2(y;x)")
THREE_CYCLES = parse_query(
    "R1(x,u1;u2,z) & R2(x,u2;u1,z) & R3(x,y,u3;u4) & R4(x,y,u4;u3)"
    " & R5(y,u5;u6) & R6(y,u6;u5)"
)


def cycle_query(k: int, with_all_key: bool = True) -> Query:
    return CycleShape.standard(k, with_all_key).query()


# --------------------------------------------------------------------------
# random queries


def random_acyclic_query(rng: random.Random, max_atoms: int = 5, max_vars: int = 6,
                         max_arity: int = 4, constant_rate: float = 0.0) -> Query:
    """A self-join-free acyclic query grown as a tree: each new atom copies
    some variables of an earlier atom and adds fresh ones.

    Sharing with one earlier atom only keeps the hypergraph acyclic; picking
    parents at random yields stars, paths and everything in between.
    """
    n = rng.randint(1, max_atoms)
    used: list[str] = []
    atoms_vars: list[list[str]] = []
    atoms = []
    for i in range(n):
        arity = rng.randint(1, max_arity)
        chosen: list[str] = []
        if atoms_vars:
            parent = rng.choice(atoms_vars)
            share = rng.randint(0, min(len(parent), arity))
            chosen = rng.sample(parent, share)
        while len(chosen) < arity:
            fresh_ok = len(used) < max_vars
            if rng.random() < constant_rate:
                chosen.append(rng.choice(["'a'", "'b'"]))
            elif fresh_ok and (not chosen or rng.random() < 0.7):
                v = f"v{len(used)}"
                used.append(v)
                chosen.append(v)
            elif chosen:
                chosen.append(rng.choice(chosen))
            else:
                chosen.append("'a'")
        rng.shuffle(chosen)
        atoms_vars.append([t for t in chosen if not t.startswith("'")])
        key_len = rng.randint(1, len(chosen))
        terms = [Term.const(t.strip("'")) if t.startswith("'") else Term.var(t) for t in chosen]
        atoms.append(Atom(f"R{i}", tuple(terms[:key_len]), tuple(terms[key_len:])))
    q = Query(tuple(atoms))
    assert is_acyclic(q)
    return q


def random_query(rng: random.Random, max_atoms: int = 4, max_vars: int = 5,
                 max_arity: int = 3) -> Query:
    """Unconstrained self-join-free query; may be cyclic."""
    names = [f"v{i}" for i in range(rng.randint(1, max_vars))]
    atoms = []
    for i in range(rng.randint(1, max_atoms)):
        arity = rng.randint(1, max_arity)
        terms = tuple(Term.var(rng.choice(names)) for _ in range(arity))
        k = rng.randint(1, arity)
        atoms.append(Atom(f"R{i}", terms[:k], terms[k:]))
    return Query(tuple(atoms))


def random_weak_cycle_query(rng: random.Random, max_pairs: int = 2, max_extra: int = 2) -> Query:
    """Pairs of atoms that swap a key and a non-key variable, sharing some
    common key variables, plus a few extra atoms hanging off the shared ones.

    Not every draw has only weak, terminal cycles; callers filter.
    """
    shared = [f"s{i}" for i in range(rng.randint(0, 2))]
    atoms = []
    n = 0

    def add(key, nonkey):
        nonlocal n
        atoms.append(Atom(f"R{n}", tuple(map(Term.var, key)), tuple(map(Term.var, nonkey))))
        n += 1

    for i in range(rng.randint(1, max_pairs)):
        xs = rng.sample(shared, rng.randint(0, len(shared)))
        u, w = f"u{i}", f"w{i}"
        extra = [rng.choice(shared)] if shared and rng.random() < 0.3 else []
        add(xs + [u], [w] + extra)
        add(xs + [w], [u])
    for j in range(rng.randint(0, max_extra)):
        if not shared:
            break
        key = rng.sample(shared, rng.randint(1, len(shared)))
        nonkey = [f"e{j}"] if rng.random() < 0.5 else []
        if rng.random() < 0.3:
            nonkey.append(rng.choice(shared))
        add(key, nonkey)
    return Query(tuple(atoms))


# --------------------------------------------------------------------------
# random databases


def _ground(atom: Atom, val: dict[str, str]) -> Fact:
    def value(t):
        return val[t.name] if t.is_var else t.name

    return Fact(atom.relation, tuple(map(value, atom.key)), tuple(map(value, atom.nonkey)))


def random_database(rng: random.Random, q: Query, max_facts: int = 12, domain: int = 6,
                    embed_rate: float = 0.5) -> UncertainDatabase:
    """Facts over q's relations: a mix of whole embeddings of q (so the
    query has a chance to hold) and loose facts that create conflicts."""
    dom = [str(i) for i in range(rng.randint(1, domain))]
    target = rng.randint(0, max_facts)
    facts: set[Fact] = set()
    atoms = q.sorted_atoms()
    if not atoms:
        return UncertainDatabase.of((), {})
    attempts = 0
    while len(facts) < target and attempts < 10 * max_facts:
        attempts += 1
        if rng.random() < embed_rate and len(facts) + len(atoms) <= target:
            val = {v: rng.choice(dom) for v in sorted(q.vars)}
            facts.update(_ground(a, val) for a in atoms)
        else:
            a = rng.choice(atoms)
            existing = [f for f in facts if f.relation == a.relation]
            if existing and rng.random() < 0.6:
                # a conflicting fact: same key, fresh non-key values
                base = rng.choice(existing)
                if not base.nonkey:
                    continue
                nonkey = tuple(rng.choice(dom) for _ in base.nonkey)
                facts.add(Fact(a.relation, base.key, nonkey))
            else:
                val = {v: rng.choice(dom) for v in a.vars}
                facts.add(_ground(a, val))
    return UncertainDatabase.of(facts, q.signatures)


def random_bid(rng: random.Random, q: Query, max_facts: int = 10, domain: int = 4,
               denominator: int = 4):
    """A BID database over a random database for q.  Each block draws its
    members' probabilities as multiples of 1/denominator summing to at most
    one, and about half the blocks sum to exactly one."""
    from .probdb import BIDDatabase

    db = random_database(rng, q, max_facts=max_facts, domain=domain)
    prob = {}
    for block in db.blocks:
        total = denominator if rng.random() < 0.5 else rng.randint(0, denominator)
        cuts = sorted(rng.randint(0, total) for _ in range(len(block) - 1))
        parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
        for f, n in zip(block, parts):
            prob[f] = Fraction(n, denominator)
    return BIDDatabase(db, prob)


# --------------------------------------------------------------------------
# exhaustive enumeration


def _canonical(shapes, terms_per_atom) -> tuple:
    """Smallest rendering over atom orders that keep the shape order, with
    variables renamed by first occurrence."""
    groups = [list(g) for _, g in itertools.groupby(range(len(shapes)), key=lambda i: shapes[i])]
    best = None
    for perms in itertools.product(*(itertools.permutations(g) for g in groups)):
        order = [i for p in perms for i in p]
        names: dict[str, int] = {}
        rendered = []
        for i in order:
            rendered.append(tuple(names.setdefault(t, len(names)) for t in terms_per_atom[i]))
        key = tuple(zip((shapes[i] for i in order), rendered))
        if best is None or key < best:
            best = key
    return best


def _rg_strings(length: int, max_vars: int, start: int = 0) -> Iterator[tuple[int, ...]]:
    """Restricted-growth strings: each entry is at most one more than the
    largest entry before it."""
    def rec(prefix, top):
        if len(prefix) == length:
            yield tuple(prefix)
            return
        for v in range(min(top + 2, max_vars)):
            prefix.append(v)
            yield from rec(prefix, max(top, v))
            prefix.pop()

    yield from rec([], start - 1)


def enumerate_queries(max_atoms: int = 3, max_arity: int = 3, max_vars: int = 4,
                      acyclic_only: bool = True) -> list[Query]:
    """Every self-join-free, constant-free query within the bounds, one per
    class under renaming of variables and relations."""
    shapes = [(n, k) for n in range(1, max_arity + 1) for k in range(1, n + 1)]
    seen = set()
    out = []
    for m in range(1, max_atoms + 1):
        for combo in itertools.combinations_with_replacement(shapes, m):
            total = sum(n for n, _ in combo)
            for rg in _rg_strings(total, max_vars):
                terms, pos = [], 0
                for n, _ in combo:
                    terms.append(rg[pos:pos + n])
                    pos += n
                canon = _canonical(combo, terms)
                if canon in seen:
                    continue
                seen.add(canon)
                atoms = []
                for i, ((n, k), ts) in enumerate(canon):
                    vs = tuple(Term.var(f"x{t}") for t in ts)
                    atoms.append(Atom(f"R{i}", vs[:k], vs[k:]))
                q = Query(tuple(atoms))
                if acyclic_only and not is_acyclic(q):
                    continue
                out.append(q)
    return out
