"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

from collections.abc import Iterable

from .errors import InputError
from .lexer import Dialect


def check_texts(X, name: str = "X") -> list[bytes]:
    """Accept one text or an iterable of ``str``/``bytes`` documents; return bytes."""
    if isinstance(X, (str, bytes)):
        X = [X]
    if not isinstance(X, Iterable):
        raise InputError(f"{name} must be a sequence of str or bytes, got {type(X).__name__}")
    out = []
    for i, doc in enumerate(X):
        if isinstance(doc, str):
            out.append(doc.encode("utf-8"))
        elif isinstance(doc, (bytes, bytearray)):
            out.append(bytes(doc))
        else:
            raise InputError(f"{name}[{i}] must be str or bytes, got {type(doc).__name__}")
    return out


def check_dialect(value) -> Dialect:
    try:
        return Dialect.parse(value)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def check_positive_int(name: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise InputError(f"{name} must be a positive integer, got {value!r}")
    return value


def check_same_length(name_a: str, a, name_b: str, b) -> None:
    if a is not None and b is not None and len(a) != len(b):
        raise InputError(f"{name_a} has {len(a)} items but {name_b} has {len(b)}")
