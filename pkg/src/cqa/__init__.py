"""Certain query answering for self-join-free conjunctive queries under primary keys."""

from .attackgraph import (
    AttackGraph,
    Complexity,
    ComplexityVerdict,
    all_cycles_weak_and_terminal,
    attack_graph,
    classify_complexity,
    find_strong_two_cycle,
    match_cycle_query,
)
from .errors import (
    CQAError,
    CyclicQuery,
    DatabaseFormatError,
    PreconditionViolated,
    QuerySyntaxError,
    ResourceLimitExceeded,
    SchemaMismatch,
    SelfJoin,
    SignatureConflict,
)
from .jointree import JoinTree, build_join_tree, is_acyclic, path_labels
from .probdb import BIDDatabase, is_safe, prob_bruteforce, prob_is_one
from .querylang import (
    Atom,
    Query,
    Signature,
    Term,
    attribute_closure,
    fd_set,
    has_self_join,
    key_closure,
    key_closure_plus,
    parse_query,
    render,
)
from .reductions import map_repair, reduction_context, rv_valuation, strong_cycle_reduce
from .solvers import (
    CertainAnswer,
    certain_bruteforce,
    certain_ck,
    certain_cycle_query,
    certain_terminal_weak,
    count_satisfying_repairs,
    solve,
)
from .uncertaindb import (
    Fact,
    Repair,
    UncertainDatabase,
    load_database,
    parse_database,
    purify,
    repair_count,
    repairs,
    satisfies,
    save_database,
)

__version__ = "0.1.0"
