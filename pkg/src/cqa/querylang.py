"""Conjunctive queries with primary keys: data model, parser, printer, FD closures.

Query text syntax::

    R(u,'a';x) & S(y;x,z) & T(x;y)

Key terms come before ``;``; an atom without ``;`` is all-key.  Variables are
bare identifiers starting with a lowercase letter, constants are single-quoted
strings or bare numerals.  The empty query is written as an empty string or
``{}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import QuerySyntaxError, SignatureConflict

VARIABLE = "variable"
CONSTANT = "constant"

_VAR_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_NUMERAL_RE = re.compile(r"-?[0-9]+(\.[0-9]+)?\Z")


@dataclass(frozen=True, order=True)
class Term:
    kind: str
    name: str

    def __post_init__(self):
        if self.kind not in (VARIABLE, CONSTANT):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if not self.name:
            raise ValueError("term name must be nonempty")
        if self.kind == VARIABLE and not _VAR_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")

    @classmethod
    def var(cls, name: str) -> Term:
        return cls(VARIABLE, name)

    @classmethod
    def const(cls, name: str) -> Term:
        return cls(CONSTANT, str(name))

    @property
    def is_var(self) -> bool:
        return self.kind == VARIABLE

    def __repr__(self) -> str:
        return f"Term.{'var' if self.is_var else 'const'}({self.name!r})"

    def __str__(self) -> str:
        if self.is_var or _NUMERAL_RE.match(self.name):
            return self.name
        escaped = self.name.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"


@dataclass(frozen=True, order=True)
class Signature:
    arity: int
    key_length: int

    def __post_init__(self):
        if not 1 <= self.key_length <= self.arity:
            raise ValueError(f"invalid signature <{self.arity},{self.key_length}>")

    @property
    def all_key(self) -> bool:
        return self.arity == self.key_length

    def __str__(self) -> str:
        return f"<{self.arity},{self.key_length}>"


@dataclass(frozen=True, order=True)
class Atom:
    relation: str
    key: tuple[Term, ...]
    nonkey: tuple[Term, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "key", tuple(self.key))
        object.__setattr__(self, "nonkey", tuple(self.nonkey))
        if not self.key:
            raise ValueError(f"atom over {self.relation} has an empty primary key")

    @property
    def signature(self) -> Signature:
        return Signature(len(self.key) + len(self.nonkey), len(self.key))

    @property
    def terms(self) -> tuple[Term, ...]:
        return self.key + self.nonkey

    @property
    def key_vars(self) -> frozenset[str]:
        return frozenset(t.name for t in self.key if t.is_var)

    @property
    def vars(self) -> frozenset[str]:
        return frozenset(t.name for t in self.terms if t.is_var)

    def substitute(self, mapping: Mapping[str, str]) -> Atom:
        """Replace variables by constants according to ``mapping``."""

        def sub(t: Term) -> Term:
            if t.is_var and t.name in mapping:
                return Term.const(mapping[t.name])
            return t

        return Atom(self.relation, tuple(map(sub, self.key)), tuple(map(sub, self.nonkey)))

    def __repr__(self) -> str:
        return f"Atom<{self}>"

    def __str__(self) -> str:
        inner = ",".join(map(str, self.key))
        if self.nonkey:
            inner += ";" + ",".join(map(str, self.nonkey))
        return f"{self.relation}({inner})"


@dataclass(frozen=True, eq=False)
class Query:
    """A Boolean conjunctive query: a finite set of atoms.

    ``atoms`` keeps first-occurrence order (duplicates dropped); equality and
    hashing are set-based.
    """

    atoms: tuple[Atom, ...] = ()
    _signatures: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        seen: dict[Atom, None] = {}
        sigs: dict[str, Signature] = {}
        for a in self.atoms:
            sig = a.signature
            old = sigs.setdefault(a.relation, sig)
            if old != sig:
                raise SignatureConflict(
                    f"relation {a.relation} used with signatures {old} and {sig}"
                )
            seen.setdefault(a, None)
        object.__setattr__(self, "atoms", tuple(seen))
        object.__setattr__(self, "_signatures", sigs)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: object) -> bool:
        return atom in self.atoms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Query):
            return NotImplemented
        return frozenset(self.atoms) == frozenset(other.atoms)

    def __hash__(self) -> int:
        return hash(frozenset(self.atoms))

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Query({render(self)!r})"

    @property
    def signatures(self) -> Mapping[str, Signature]:
        return dict(self._signatures)

    @property
    def vars(self) -> frozenset[str]:
        out: set[str] = set()
        for a in self.atoms:
            out |= a.vars
        return frozenset(out)

    @property
    def constants(self) -> frozenset[str]:
        return frozenset(t.name for a in self.atoms for t in a.terms if not t.is_var)

    @property
    def relations(self) -> tuple[str, ...]:
        return tuple(sorted(self._signatures))

    def atom(self, relation: str) -> Atom:
        """The unique atom over ``relation`` (self-join-free queries)."""
        found = [a for a in self.atoms if a.relation == relation]
        if len(found) != 1:
            raise KeyError(f"{len(found)} atoms over relation {relation}")
        return found[0]

    def without(self, atom: Atom) -> Query:
        return Query(tuple(a for a in self.atoms if a != atom))

    def substitute(self, mapping: Mapping[str, str]) -> Query:
        return Query(tuple(a.substitute(mapping) for a in self.atoms))

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self.atoms, key=lambda a: (a.relation, str(a)))


def has_self_join(q: Query) -> bool:
    return len({a.relation for a in q}) != len(q)


# --------------------------------------------------------------------------
# parsing and printing


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            found = self.peek() or "end of input"
            raise QuerySyntaxError(f"expected {ch!r}, found {found!r}", self.pos)
        self.pos += 1

    def identifier(self) -> str:
        self.skip_ws()
        m = re.compile(r"[A-Za-z_][A-Za-z0-9_]*").match(self.text, self.pos)
        if not m:
            raise QuerySyntaxError("expected identifier", self.pos)
        self.pos = m.end()
        return m.group()

    def term(self) -> Term:
        self.skip_ws()
        start = self.pos
        ch = self.peek()
        if ch == "'":
            self.pos += 1
            buf = []
            while True:
                if self.pos >= len(self.text):
                    raise QuerySyntaxError("unterminated string constant", start)
                c = self.text[self.pos]
                if c == "\\" and self.pos + 1 < len(self.text):
                    buf.append(self.text[self.pos + 1])
                    self.pos += 2
                    continue
                self.pos += 1
                if c == "'":
                    break
                buf.append(c)
            if not buf:
                raise QuerySyntaxError("empty string constant", start)
            return Term.const("".join(buf))
        m = re.compile(r"-?[0-9]+(\.[0-9]+)?").match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Term.const(m.group())
        m = re.compile(r"[A-Za-z_][A-Za-z0-9_]*").match(self.text, self.pos)
        if m and _VAR_RE.match(m.group()):
            self.pos = m.end()
            return Term.var(m.group())
        if m:
            raise QuerySyntaxError(
                f"{m.group()!r} is not a variable (variables start lowercase; quote constants)",
                start,
            )
        raise QuerySyntaxError("expected a term", start)

    def term_list(self) -> list[Term]:
        terms = [self.term()]
        while self.peek() == ",":
            self.pos += 1
            terms.append(self.term())
        return terms

    def atom(self) -> Atom:
        rel = self.identifier()
        self.expect("(")
        key = self.term_list()
        nonkey: list[Term] = []
        if self.peek() == ";":
            self.pos += 1
            nonkey = self.term_list()
        self.expect(")")
        return Atom(rel, tuple(key), tuple(nonkey))


def parse_query(text: str) -> Query:
    """Parse query text; signatures are inferred from atom shapes."""
    sc = _Scanner(text)
    if sc.peek() == "":
        return Query(())
    if sc.peek() == "{":
        sc.pos += 1
        sc.expect("}")
        if sc.peek():
            raise QuerySyntaxError("unexpected input after '{}'", sc.pos)
        return Query(())
    atoms = [sc.atom()]
    while sc.peek() == "&":
        sc.pos += 1
        atoms.append(sc.atom())
    if sc.peek():
        raise QuerySyntaxError(f"unexpected {sc.peek()!r}", sc.pos)
    return Query(tuple(atoms))


def render(q: Query) -> str:
    """Canonical text: atoms sorted by relation name, joined by `` & ``."""
    if not len(q):
        return "{}"
    return " & ".join(str(a) for a in q.sorted_atoms())


# --------------------------------------------------------------------------
# functional dependencies


class FD(NamedTuple):
    lhs: frozenset[str]
    rhs: frozenset[str]

    def __str__(self) -> str:
        return f"{''.join(sorted(self.lhs)) or '{}'}->{''.join(sorted(self.rhs))}"


def fd_set(q: Query | Iterable[Atom]) -> frozenset[FD]:
    """One dependency key(F) -> vars(F) per atom F."""
    return frozenset(FD(a.key_vars, a.vars) for a in q)


def attribute_closure(attrs: Iterable[str], fds: Iterable[FD]) -> frozenset[str]:
    closure = set(attrs)
    pending = list(fds)
    changed = True
    while changed:
        changed = False
        rest = []
        for fd in pending:
            if fd.lhs <= closure:
                if not fd.rhs <= closure:
                    closure |= fd.rhs
                    changed = True
            else:
                rest.append(fd)
        pending = rest
    return frozenset(closure)


def _check_member(atom: Atom, q: Query) -> None:
    if atom not in q:
        raise ValueError(f"{atom} is not an atom of {q}")


def key_closure(atom: Atom, q: Query) -> frozenset[str]:
    """Closure of key(F) under the dependencies of the *other* atoms."""
    _check_member(atom, q)
    return attribute_closure(atom.key_vars, fd_set(q.without(atom))) & q.vars


def key_closure_plus(atom: Atom, q: Query) -> frozenset[str]:
    """Closure of key(F) under the dependencies of all atoms, F included."""
    _check_member(atom, q)
    return attribute_closure(atom.key_vars, fd_set(q)) & q.vars
