"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class CQAError(Exception):
    """Base class for every error raised by this package."""


class QuerySyntaxError(CQAError):
    """Query text does not conform to the grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.message = message
        self.position = position


class SignatureConflict(CQAError):
    """A relation name is used with two different shapes."""


class DatabaseFormatError(CQAError):
    """A database file is malformed (bad line, arity mismatch, unknown relation)."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class SelfJoin(CQAError):
    """The operation requires a self-join-free query."""


class CyclicQuery(CQAError):
    """The operation requires an acyclic query (one that has a join tree)."""


class PreconditionViolated(CQAError):
    """An algorithm was invoked outside the class of queries it is correct for."""


class SchemaMismatch(CQAError):
    """A database does not have the schema an algorithm expects."""


class ResourceLimitExceeded(CQAError):
    """An exponential enumeration would exceed its configured bound."""
