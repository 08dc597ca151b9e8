"""Executable hardness gadgets.

``strong_cycle_reduce`` turns a database for the two-atom query
``R0(x;y) & S0(y,z;x)`` into a database for any acyclic query whose attack
graph has a strong cycle, preserving the certain answer and the number of
repairs.  ``all_key_extension`` pads a database with every all-key fact over
its active domain.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping
from urllib.parse import quote

from .attackgraph import attack_graph, find_strong_two_cycle
from .errors import PreconditionViolated, SchemaMismatch
from .querylang import Atom, Query, Signature, key_closure, key_closure_plus, parse_query
from .uncertaindb import Fact, Repair, UncertainDatabase, embeddings, purify, repairs

BASE_QUERY = parse_query("R0(x;y) & S0(y,z;x)")
BASE_SCHEMA = {"R0": Signature(2, 1), "S0": Signature(3, 2)}
FIXED_CONSTANT = "d"


class Region(enum.IntEnum):
    """Where a variable sits relative to K(F), K(G) and K+(F)."""

    BOTH_KEYS = 1      # K(F) & K(G)            -> d
    F_ONLY = 2         # K(F) - K(G)            -> x
    G_OUTSIDE = 3      # K(G) - K+(F)           -> <y,z>
    G_INSIDE = 4       # (K(G) & K+(F)) - K(F)  -> y
    F_PLUS_ONLY = 5    # K+(F) - (K(F) | K(G))  -> <x,y>
    NEITHER = 6        # everything else        -> <x,y,z>


def composite(*parts: str) -> str:
    """Injective constant naming for pairs and triples of values."""
    return f"p{len(parts)}(" + ",".join(quote(p, safe="") for p in parts) + ")"


def regions(q: Query, f: Atom, g: Atom) -> dict[str, Region]:
    kf, kg, kfp = key_closure(f, q), key_closure(g, q), key_closure_plus(f, q)
    out = {}
    for u in sorted(q.vars):
        if u in kf and u in kg:
            out[u] = Region.BOTH_KEYS
        elif u in kf:
            out[u] = Region.F_ONLY
        elif u in kg and u not in kfp:
            out[u] = Region.G_OUTSIDE
        elif u in kg:
            out[u] = Region.G_INSIDE
        elif u in kfp:
            out[u] = Region.F_PLUS_ONLY
        else:
            out[u] = Region.NEITHER
    return out


def _region_value(region: Region, theta: Mapping[str, str]) -> str:
    x, y, z = theta["x"], theta["y"], theta["z"]
    if region is Region.BOTH_KEYS:
        return FIXED_CONSTANT
    if region is Region.F_ONLY:
        return x
    if region is Region.G_OUTSIDE:
        return composite(y, z)
    if region is Region.G_INSIDE:
        return y
    if region is Region.F_PLUS_ONLY:
        return composite(x, y)
    return composite(x, y, z)


def orient_strong_pair(q: Query, f: Atom, g: Atom) -> tuple[Atom, Atom]:
    """Return (F, G) with F->G strong and G->F present; raise otherwise."""
    graph = attack_graph(q)
    fg, gf = graph.edge(f, g), graph.edge(g, f)
    if fg is None or gf is None:
        raise PreconditionViolated(f"{f} and {g} do not attack each other")
    if not fg.weak:
        return f, g
    if not gf.weak:
        return g, f
    raise PreconditionViolated(f"the cycle between {f} and {g} is weak")


def rv_valuation(theta: Mapping[str, str], q: Query, f: Atom, g: Atom) -> dict[str, str]:
    f, g = orient_strong_pair(q, f, g)
    reg = regions(q, f, g)
    return {u: _region_value(r, theta) for u, r in reg.items()}


def _ground(atom: Atom, val: Mapping[str, str]) -> Fact:
    def value(t):
        return val[t.name] if t.is_var else t.name

    return Fact(atom.relation, tuple(map(value, atom.key)), tuple(map(value, atom.nonkey)))


@dataclass(frozen=True)
class StrongCycleReduction:
    """Everything needed to translate repairs: the oriented pair, the region
    of each variable, the purified input and its embeddings."""

    query: Query
    f: Atom
    g: Atom
    regions: dict
    source: UncertainDatabase
    valuations: tuple
    database: UncertainDatabase

    def rv(self, theta: Mapping[str, str]) -> dict[str, str]:
        return {u: _region_value(r, theta) for u, r in self.regions.items()}

    def image(self, atom: Atom, theta: Mapping[str, str]) -> Fact:
        return _ground(atom, self.rv(theta))

    def map_repair(self, r0: Repair | Iterable[Fact]) -> Repair:
        facts = frozenset(r0.facts if isinstance(r0, Repair) else r0)
        if not Repair(facts, self.source).is_repair_of(self.source):
            raise PreconditionViolated("argument is not a repair of the purified source database")
        f0, g0 = BASE_QUERY.atom("R0"), BASE_QUERY.atom("S0")
        out = set()
        for theta in self.valuations:
            if _ground(f0, theta) in facts:
                out.add(self.image(self.f, theta))
            if _ground(g0, theta) in facts:
                out.add(self.image(self.g, theta))
        for h in self.query:
            if h not in (self.f, self.g):
                out.update(self.image(h, theta) for theta in self.valuations)
        return Repair(frozenset(out), self.database)


def reduction_context(db0: UncertainDatabase, q: Query, f: Atom | None = None,
                      g: Atom | None = None) -> StrongCycleReduction:
    for rel, sig in db0.schema.items():
        if BASE_SCHEMA.get(rel) != sig:
            raise SchemaMismatch(f"relation {rel} with signature {sig} is not R0<2,1> or S0<3,2>")
    if f is None or g is None:
        pair = find_strong_two_cycle(attack_graph(q))
        if pair is None:
            raise PreconditionViolated(f"the attack graph of {q} has no strong cycle")
        f, g = pair
    f, g = orient_strong_pair(q, f, g)
    reg = regions(q, f, g)
    pure = purify(db0, BASE_QUERY)
    vals = tuple(sorted(
        (dict(sorted(t.items())) for t in embeddings(pure.facts, BASE_QUERY)),
        key=lambda t: tuple(t.values()),
    ))
    facts = set()
    for theta in vals:
        rv = {u: _region_value(r, theta) for u, r in reg.items()}
        facts.update(_ground(h, rv) for h in q)
    db = UncertainDatabase.of(facts, q.signatures)
    return StrongCycleReduction(q, f, g, reg, pure, vals, db)


def strong_cycle_reduce(db0: UncertainDatabase, q: Query, f: Atom | None = None,
                        g: Atom | None = None) -> UncertainDatabase:
    return reduction_context(db0, q, f, g).database


def map_repair(r0: Repair | Iterable[Fact], ctx: StrongCycleReduction) -> Repair:
    return ctx.map_repair(r0)


def all_key_extension(db: UncertainDatabase, smaller: Query, q: Query) -> UncertainDatabase:
    """Add every fact over the active domain for the all-key atoms of q that
    are missing from ``smaller``; the certain answer for ``smaller`` on db
    equals the certain answer for q on the result."""
    extra_atoms = [a for a in q if a not in smaller]
    for a in extra_atoms:
        if not a.signature.all_key:
            raise PreconditionViolated(f"{a} is not all-key")
    for a in smaller:
        if a not in q:
            raise PreconditionViolated(f"{a} does not occur in the larger query")
    dom = sorted(db.active_domain())
    facts = list(db.facts)
    for a in extra_atoms:
        for vals in itertools.product(dom, repeat=a.signature.arity):
            facts.append(Fact(a.relation, vals))
    schema = dict(db.schema)
    schema.update({a.relation: a.signature for a in extra_atoms})
    return UncertainDatabase.of(facts, schema)
