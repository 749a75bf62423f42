"""Common utility methods."""

from __future__ import annotations

__all__ = ('DisaggError', 'format_ids', 'relative_difference',
           'type_name')

from typing import Any, Callable, Iterable

_MAX_LISTED_IDS = 10


class DisaggError(Exception):
    """Base class of every error raised by the library."""


def format_ids(ids: Iterable[Any], limit: int = _MAX_LISTED_IDS) -> str:
    """
    Render identifiers for an error message.

    Only the first `limit` identifiers are listed, followed by a count of
    the remaining ones.

    :param ids: Identifiers
    :param limit: Maximum number of listed identifiers
    :return: Comma separated identifiers
    """
    ids = list(ids)
    listed = ', '.join(repr(i) for i in ids[:limit])
    if len(ids) > limit:
        return f'{listed} (+{len(ids) - limit} more)'
    return listed


def relative_difference(x: float, y: float) -> float:
    """
    Symmetric relative difference of two numbers.

    :param x: First number
    :param y: Second number
    :return: ``|x - y| / max(|x|, |y|)``, ``0`` if both are zero
    """
    scale = max(abs(x), abs(y))
    if scale == 0:
        return 0.0
    return abs(x - y) / scale


def type_name(obj: Any) -> str:
    """
    Create nice type name.

    If passing an instance rather than a type, take the instance's type.

    :param obj: Instance or type
    :return: Nice type name
    """
    if not isinstance(obj, Callable):
        obj = type(obj)
    if obj.__module__ == 'builtins':
        return obj.__name__
    return f'{obj.__module__}.{obj.__qualname__}'
