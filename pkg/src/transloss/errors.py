"""Exception hierarchy.

Two families matter to callers: :class:`InputError` for documents and source
text that fail to parse or validate, and :class:`PreconditionError` for valid
inputs on which a metric is undefined. The CLI maps them to distinct exit codes.
"""

from __future__ import annotations


class TranslossError(Exception):
    """Base class for every error raised by this package."""


class InputError(TranslossError, ValueError):
    """Malformed or invalid input (exit code 2 in the CLI)."""

    offset: int | None = None


class PreconditionError(TranslossError):
    """A metric precondition is violated (exit code 3 in the CLI)."""


# graph documents

class MalformedDocument(InputError):
    pass


class DuplicateNodeId(InputError):
    def __init__(self, node_id: str):
        super().__init__(f"duplicate node id {node_id!r}")
        self.node_id = node_id


class DanglingEdge(InputError):
    def __init__(self, src: str, dst: str):
        super().__init__(f"edge {src!r} -> {dst!r} references a missing node")
        self.src = src
        self.dst = dst


class UnknownKind(InputError):
    def __init__(self, value: object):
        super().__init__(f"unknown kind {value!r}")
        self.value = value


# mapping and metrics

class MappingReferencesUnknownNode(InputError):
    def __init__(self, node_id: str, side: str):
        super().__init__(f"mapping references {node_id!r}, which is not a node of the {side} graph")
        self.node_id = node_id
        self.side = side


class GraphTooLarge(PreconditionError):
    def __init__(self, limit: int, size: int):
        super().__init__(f"graph has {size} nodes; exhaustive search is limited to {limit}")
        self.limit = limit
        self.size = size


class DirectionMismatch(PreconditionError):
    pass


class OutOfRange(PreconditionError, ValueError):
    pass


# lexing and splitting

class LexError(InputError):
    """Base for lexer failures; ``offset`` is the byte offset of the construct."""

    what = "construct"

    def __init__(self, offset: int):
        super().__init__(f"unterminated {self.what} starting at byte {offset}")
        self.offset = offset


class UnterminatedString(LexError):
    what = "quoted literal"


class UnterminatedComment(LexError):
    what = "block comment"


class UnterminatedDollarQuote(LexError):
    what = "dollar-quoted body"


class UnbalancedBlock(InputError):
    def __init__(self, offset: int, message: str = "unbalanced BEGIN/CASE/END block"):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


# chunk and text metrics

class FileSetMismatch(PreconditionError):
    pass


class UnsortedBoundaries(InputError):
    pass


class EmptyDenominator(PreconditionError):
    pass


# retrieval

class EmptyIndex(PreconditionError):
    pass


class UnknownSeed(InputError):
    def __init__(self, node_id: str):
        super().__init__(f"seed {node_id!r} is not a node of the graph")
        self.node_id = node_id


class BadGlob(InputError):
    pass


class BadPredicate(InputError):
    pass
