"""Uncertain databases: facts, blocks, repairs, query evaluation and purification.

File format (UTF-8)::

    # comment
    @relation C 3 2
    @relation R 2 1
    C PODS 2016 Rome
    R KDD A

``@relation NAME ARITY KEYLEN`` declares a relation; every other nonblank line
is a fact, the relation name followed by its values.  Values are opaque
whitespace-free tokens.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import DatabaseFormatError
from .querylang import Atom, Query, Signature

Valuation = dict[str, str]
BlockId = tuple[str, tuple[str, ...]]


@dataclass(frozen=True, order=True)
class Fact:
    relation: str
    key: tuple[str, ...]
    nonkey: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "key", tuple(map(str, self.key)))
        object.__setattr__(self, "nonkey", tuple(map(str, self.nonkey)))
        if not self.key:
            raise ValueError("a fact needs at least one key value")

    @classmethod
    def of(cls, relation: str, *values: str, key_length: int = 1) -> Fact:
        return cls(relation, values[:key_length], values[key_length:])

    @property
    def values(self) -> tuple[str, ...]:
        return self.key + self.nonkey

    @property
    def block_id(self) -> BlockId:
        return (self.relation, self.key)

    @property
    def signature(self) -> Signature:
        return Signature(len(self.values), len(self.key))

    def key_equal(self, other: Fact) -> bool:
        return self.block_id == other.block_id

    def to_line(self) -> str:
        return " ".join((self.relation,) + self.values)

    def __str__(self) -> str:
        inner = ",".join(self.key)
        if self.nonkey:
            inner += ";" + ",".join(self.nonkey)
        return f"{self.relation}({inner})"

    def __repr__(self) -> str:
        return f"Fact<{self}>"


@dataclass(frozen=True)
class UncertainDatabase:
    """An immutable set of facts over a schema, partitioned into blocks."""

    facts: frozenset[Fact]
    schema: Mapping[str, Signature] = field(default_factory=dict)
    _blocks: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        facts = frozenset(self.facts)
        schema = dict(self.schema)
        for f in facts:
            sig = schema.setdefault(f.relation, f.signature)
            if sig != f.signature:
                raise DatabaseFormatError(
                    f"fact {f} does not match signature {sig} of {f.relation}"
                )
        blocks: dict[BlockId, list[Fact]] = {}
        for f in sorted(facts):
            blocks.setdefault(f.block_id, []).append(f)
        object.__setattr__(self, "facts", facts)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "_blocks", {b: tuple(fs) for b, fs in sorted(blocks.items())})

    @classmethod
    def of(cls, facts: Iterable[Fact], schema: Mapping[str, Signature] | None = None):
        return cls(frozenset(facts), dict(schema or {}))

    def __iter__(self) -> Iterator[Fact]:
        return iter(sorted(self.facts))

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, fact: object) -> bool:
        return fact in self.facts

    def __bool__(self) -> bool:
        return bool(self.facts)

    @property
    def blocks(self) -> list[tuple[Fact, ...]]:
        """Blocks sorted by (relation, key); facts inside sorted too."""
        return list(self._blocks.values())

    def block(self, fact_or_id: Fact | BlockId) -> tuple[Fact, ...]:
        bid = fact_or_id.block_id if isinstance(fact_or_id, Fact) else fact_or_id
        return self._blocks.get(bid, ())

    def is_consistent(self) -> bool:
        return all(len(b) == 1 for b in self._blocks.values())

    def active_domain(self) -> set[str]:
        return {v for f in self.facts for v in f.values}

    def facts_of(self, relation: str) -> list[Fact]:
        return sorted(f for f in self.facts if f.relation == relation)

    def with_facts(self, facts: Iterable[Fact]) -> UncertainDatabase:
        return UncertainDatabase(self.facts | frozenset(facts), self.schema)

    def without_facts(self, facts: Iterable[Fact]) -> UncertainDatabase:
        return UncertainDatabase(self.facts - frozenset(facts), self.schema)

    def without_blocks(self, block_ids: Iterable[BlockId]) -> UncertainDatabase:
        drop = set(block_ids)
        return UncertainDatabase(
            frozenset(f for f in self.facts if f.block_id not in drop), self.schema
        )

    def restrict(self, relations: Iterable[str]) -> UncertainDatabase:
        keep = set(relations)
        return UncertainDatabase(
            frozenset(f for f in self.facts if f.relation in keep),
            {r: s for r, s in self.schema.items() if r in keep},
        )


@dataclass(frozen=True)
class Repair:
    facts: frozenset[Fact]
    parent: UncertainDatabase = field(repr=False, compare=False)

    def __iter__(self) -> Iterator[Fact]:
        return iter(sorted(self.facts))

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, fact: object) -> bool:
        return fact in self.facts

    def is_repair_of(self, db: UncertainDatabase) -> bool:
        """Consistent, inside ``db`` and hitting every block of ``db`` once."""
        if not self.facts <= db.facts:
            return False
        ids = [f.block_id for f in self.facts]
        return len(ids) == len(set(ids)) and set(ids) == set(db._blocks)


def repair_count(db: UncertainDatabase) -> int:
    return math.prod(len(b) for b in db.blocks)


def repairs(db: UncertainDatabase) -> Iterator[Repair]:
    """All repairs, lazily, in mixed-radix order over the sorted blocks."""
    for choice in itertools.product(*db.blocks):
        yield Repair(frozenset(choice), db)


# --------------------------------------------------------------------------
# query evaluation


def _unify(atom: Atom, fact: Fact, theta: Mapping[str, str]) -> Valuation | None:
    if atom.relation != fact.relation or len(atom.key) != len(fact.key):
        return None
    if len(atom.nonkey) != len(fact.nonkey):
        return None
    out = dict(theta)
    for term, value in zip(atom.terms, fact.values):
        if term.is_var:
            bound = out.setdefault(term.name, value)
            if bound != value:
                return None
        elif term.name != value:
            return None
    return out


def _index(world: Iterable[Fact]) -> dict[str, list[Fact]]:
    idx: dict[str, list[Fact]] = {}
    for f in world:
        idx.setdefault(f.relation, []).append(f)
    return idx


def _search(idx, atoms: list[Atom], theta: Valuation) -> Iterator[Valuation]:
    if not atoms:
        yield theta
        return
    best = None
    for i, a in enumerate(atoms):
        cands = []
        for f in idx.get(a.relation, ()):
            ext = _unify(a, f, theta)
            if ext is not None:
                cands.append(ext)
        if best is None or len(cands) < len(best[1]):
            best = (i, cands)
            if not cands:
                return
    i, cands = best
    rest = atoms[:i] + atoms[i + 1:]
    for ext in cands:
        yield from _search(idx, rest, ext)


def embeddings(world: Iterable[Fact], q: Query, theta: Mapping[str, str] | None = None):
    """Every valuation over vars(q) extending ``theta`` that maps q into ``world``."""
    return _search(_index(world), list(q.atoms), dict(theta or {}))


def find_valuation(world: Iterable[Fact], q: Query) -> Valuation | None:
    return next(embeddings(world, q), None)


def satisfies(world: Iterable[Fact], q: Query) -> bool:
    return find_valuation(world, q) is not None


def is_embeddable(fact: Fact, world: Iterable[Fact], q: Query) -> bool:
    """Is there a valuation theta with fact in theta(q) and theta(q) inside world?"""
    idx = _index(world)
    for atom in q:
        theta = _unify(atom, fact, {})
        if theta is not None and next(_search(idx, list(q.without(atom)), theta), None) is not None:
            return True
    return False


def purify_trace(db: UncertainDatabase, q: Query) -> tuple[UncertainDatabase, list[Fact]]:
    """Purify and report, in removal order, one non-embeddable fact per removed block.

    Adding those facts back to a falsifying repair of the result gives a
    falsifying repair of the input.
    """
    removed: list[Fact] = []
    current = db
    while True:
        bad: dict[BlockId, Fact] = {}
        for f in sorted(current.facts):
            if f.block_id not in bad and not is_embeddable(f, current.facts, q):
                bad[f.block_id] = f
        if not bad:
            return current, removed
        removed.extend(bad.values())
        current = current.without_blocks(bad)


def purify(db: UncertainDatabase, q: Query) -> UncertainDatabase:
    return purify_trace(db, q)[0]


def is_purified(db: UncertainDatabase, q: Query) -> bool:
    return all(is_embeddable(f, db.facts, q) for f in db.facts)


def lift_repair(facts: Iterable[Fact], removed: Iterable[Fact]) -> frozenset[Fact]:
    return frozenset(facts) | frozenset(removed)


# --------------------------------------------------------------------------
# files


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _parse_lines(text: str):
    """Yield (line number, text) for lines that are not blank after comments go."""
    for no, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if line:
            yield no, line


def parse_database(text: str) -> UncertainDatabase:
    db, _ = _parse(text, with_probabilities=False)
    return db


def _parse(text: str, with_probabilities: bool):
    schema: dict[str, Signature] = {}
    fact_lines = []
    for no, line in _parse_lines(text):
        if line.startswith("@"):
            parts = line.split()
            if parts[0] != "@relation" or len(parts) != 4:
                raise DatabaseFormatError(f"bad schema line {line!r}", no)
            name = parts[1]
            try:
                sig = Signature(int(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise DatabaseFormatError(str(exc), no) from None
            if schema.setdefault(name, sig) != sig:
                raise DatabaseFormatError(f"relation {name} declared twice differently", no)
        else:
            fact_lines.append((no, line))
    facts = []
    probs = {}
    for no, line in fact_lines:
        prob = None
        if with_probabilities:
            m = re.match(r"^(.*\S)\s+:\s*(\S+)$", line)
            if m:
                line = m.group(1)
                try:
                    prob = Fraction(m.group(2))
                except (ValueError, ZeroDivisionError):
                    raise DatabaseFormatError(f"bad probability {m.group(2)!r}", no) from None
        name, *values = line.split()
        if name not in schema:
            raise DatabaseFormatError(f"unknown relation {name}", no)
        sig = schema[name]
        if len(values) != sig.arity:
            raise DatabaseFormatError(
                f"{name} has arity {sig.arity} but {len(values)} values were given", no
            )
        fact = Fact(name, tuple(values[: sig.key_length]), tuple(values[sig.key_length:]))
        if with_probabilities and fact in probs and probs[fact] != prob:
            raise DatabaseFormatError(f"conflicting probabilities for {fact}", no)
        facts.append(fact)
        probs[fact] = prob
    return UncertainDatabase(frozenset(facts), schema), probs


def _check_token(v: str) -> str:
    if not v or any(c.isspace() for c in v) or "#" in v:
        raise DatabaseFormatError(f"value {v!r} cannot be written to a database file")
    return v


def dump_database(db: UncertainDatabase, suffix=None) -> str:
    """Canonical text: schema lines by relation name, then facts in order.

    ``suffix`` maps a fact to extra text appended after it (used for
    probabilities).
    """
    lines = [f"@relation {r} {s.arity} {s.key_length}" for r, s in sorted(db.schema.items())]
    for f in db:
        for v in f.values:
            _check_token(v)
        line = f.to_line()
        if suffix is not None:
            line += suffix(f)
        lines.append(line)
    return "\n".join(lines) + "\n" if lines else ""


def load_database(path: str | Path) -> UncertainDatabase:
    return parse_database(Path(path).read_text(encoding="utf-8"))


def save_database(db: UncertainDatabase, path: str | Path) -> None:
    Path(path).write_text(dump_database(db), encoding="utf-8")
