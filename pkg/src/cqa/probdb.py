"""Block-independent-disjoint probabilistic databases.

Blocks are independent events; facts inside a block are mutually exclusive,
and a block may also contribute no fact at all with the leftover probability.
All arithmetic uses :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Mapping

from .errors import DatabaseFormatError, ResourceLimitExceeded, SelfJoin
from .querylang import Query, has_self_join
from .solvers import repair_limit, solve
from .uncertaindb import Fact, UncertainDatabase, _parse, dump_database, satisfies


@dataclass(frozen=True)
class BIDDatabase:
    base: UncertainDatabase
    prob: Mapping[Fact, Fraction]

    def __post_init__(self):
        prob = {f: Fraction(p) for f, p in self.prob.items()}
        if set(prob) != set(self.base.facts):
            raise ValueError("every fact needs exactly one probability")
        for f, p in prob.items():
            if not 0 <= p <= 1:
                raise ValueError(f"probability {p} of {f} is outside [0,1]")
        for block in self.base.blocks:
            if sum(prob[f] for f in block) > 1:
                raise ValueError(f"block of {block[0]} has total probability above 1")
        object.__setattr__(self, "prob", prob)

    @classmethod
    def uniform(cls, db: UncertainDatabase) -> BIDDatabase:
        """Each block sums to one, split evenly: worlds with positive
        probability are exactly the repairs, all equally likely."""
        return cls(db, {f: Fraction(1, len(b)) for b in db.blocks for f in b})

    def block_mass(self, block) -> Fraction:
        return sum((self.prob[f] for f in block), Fraction(0))

    def world_count(self) -> int:
        return math.prod(len(b) + 1 for b in self.base.blocks)


def worlds(pdb: BIDDatabase) -> Iterator[tuple[frozenset[Fact], Fraction]]:
    """Possible worlds with positive probability, paired with that probability."""
    options = []
    for block in pdb.base.blocks:
        opts = [((f,), pdb.prob[f]) for f in block if pdb.prob[f] > 0]
        rest = 1 - pdb.block_mass(block)
        if rest > 0:
            opts.append(((), rest))
        options.append(opts)
    for combo in itertools.product(*options):
        p = Fraction(1)
        facts = []
        for chosen, weight in combo:
            p *= weight
            facts.extend(chosen)
        yield frozenset(facts), p


def prob_bruteforce(pdb: BIDDatabase, q: Query, limit: int | None = None) -> Fraction:
    bound = repair_limit(limit)
    n = pdb.world_count()
    if n > bound:
        raise ResourceLimitExceeded(f"{n} possible worlds exceed the limit of {bound}")
    total = Fraction(0)
    for world, p in worlds(pdb):
        if satisfies(world, q):
            total += p
    return total


def certain_blocks_restrict(pdb: BIDDatabase) -> UncertainDatabase:
    """Keep exactly the blocks whose probabilities add up to one."""
    keep = [f for b in pdb.base.blocks if pdb.block_mass(b) == 1 for f in b]
    return UncertainDatabase.of(keep, pdb.base.schema)


def prob_is_one(pdb: BIDDatabase, q: Query, method: str = "auto") -> bool:
    """Decide Pr(q) = 1 through a certain-answer computation, without
    enumerating worlds.

    Facts of probability zero occur in no world of positive probability, so
    they are dropped before the blocks of mass one are selected.
    """
    support = {f: p for f, p in pdb.prob.items() if p > 0}
    trimmed = BIDDatabase(UncertainDatabase.of(support, pdb.base.schema), support)
    return solve(certain_blocks_restrict(trimmed), q, method).certain


# --------------------------------------------------------------------------
# safety


@dataclass(frozen=True)
class SafetyStep:
    rule: str
    query: Query
    detail: str = ""

    def __str__(self) -> str:
        text = f"{self.rule} on {self.query}"
        return f"{text} [{self.detail}]" if self.detail else text


@dataclass
class SafetyTrace:
    safe: bool
    steps: list[SafetyStep] = field(default_factory=list)


def _components(q: Query) -> list[Query]:
    """Connected components of the variable-sharing graph, in atom order."""
    atoms = q.sorted_atoms()
    comp = list(range(len(atoms)))

    def find(i):
        while comp[i] != i:
            comp[i] = comp[comp[i]]
            i = comp[i]
        return i

    for i, j in itertools.combinations(range(len(atoms)), 2):
        if atoms[i].vars & atoms[j].vars:
            comp[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i, a in enumerate(atoms):
        groups.setdefault(find(i), []).append(a)
    return [Query(tuple(g)) for g in groups.values()]


def _fresh_constant(q: Query) -> str:
    taken = q.constants
    for n in itertools.count():
        name = "c" if n == 0 else f"c{n}"
        if name not in taken:
            return name


def _safe(q: Query, steps: list[SafetyStep]) -> bool:
    if len(q) == 1 and not q.vars:
        steps.append(SafetyStep("SE1", q))
        return True
    parts = _components(q)
    if len(parts) > 1:
        steps.append(SafetyStep("SE2", q, " | ".join(map(str, parts))))
        results = [_safe(p, steps) for p in parts]
        return all(results)
    common = frozenset.intersection(*(a.key_vars for a in q)) if len(q) else frozenset()
    if common:
        x = min(common)
        a = _fresh_constant(q)
        steps.append(SafetyStep("SE3", q, f"{x} := {a}"))
        return _safe(q.substitute({x: a}), steps)
    for atom in q.sorted_atoms():
        if not atom.key_vars and atom.vars:
            x = min(atom.vars)
            a = _fresh_constant(q)
            steps.append(SafetyStep("SE4", q, f"{x} := {a}"))
            return _safe(q.substitute({x: a}), steps)
    return False


def is_safe(q: Query) -> SafetyTrace:
    if has_self_join(q):
        raise SelfJoin(f"{q} has a self-join")
    steps: list[SafetyStep] = []
    return SafetyTrace(_safe(q, steps), steps)


# --------------------------------------------------------------------------
# files


def parse_bid(text: str) -> BIDDatabase:
    """Database text where a fact line may end in ``: p/q``; a fact without
    one gets 1/(size of its block)."""
    db, given = _parse(text, with_probabilities=True)
    prob = {}
    for block in db.blocks:
        for f in block:
            p = given.get(f)
            prob[f] = Fraction(1, len(block)) if p is None else p
    try:
        return BIDDatabase(db, prob)
    except ValueError as exc:
        raise DatabaseFormatError(str(exc)) from None


def load_bid(path: str | Path) -> BIDDatabase:
    return parse_bid(Path(path).read_text(encoding="utf-8"))


def dump_bid(pdb: BIDDatabase) -> str:
    return dump_database(pdb.base, suffix=lambda f: f" : {pdb.prob[f]}")
