"""Serialisation tools for persisting parameters, reports and manifests."""

from __future__ import annotations

__all__ = ('dumps', 'JSON', 'jsonify', 'JSONMixin', 'JSONType', 'loads',
           'read_json', 'write_json')

import dataclasses
from enum import Enum
import functools
import logging
import math
import os
from typing import (Any, Dict, List, Mapping, Sequence, Type, TypeVar,
                    Union, cast)

import numpy as np
import orjson

from pydisagg.utils import type_name

logger = logging.getLogger(__name__)

T = TypeVar('T')

_JT3 = Union[str, int, float, bool, None, Dict[str, Any], List[Any]]
_JT2 = Union[str, int, float, bool, None, Dict[str, _JT3], List[_JT3]]
_JT1 = Union[str, int, float, bool, None, Dict[str, _JT2], List[_JT2]]
_JT0 = Union[str, int, float, bool, None, Dict[str, _JT1], List[_JT1]]
JSONType = Union[str, int, float, bool, None, Dict[str, _JT0], List[_JT0]]
JSON = Dict[str, JSONType]

PathLike = Union[str, 'os.PathLike[str]']


class JSONMixin:
    """Dataclass mixin for JSON serialisation and deserialisation."""

    def to_json(self) -> JSON:
        """
        Generate serialisable JSON structure.

        :return: Serialisable JSON structure
        """
        return cast(JSON, jsonify(self))

    @classmethod
    def from_json(cls: Type[T], json: Mapping[str, Any]) -> T:
        """
        Deserialise original dataclass from JSON structure.

        Keys that are not fields of the dataclass are ignored.

        :param json: Serialisable JSON structure
        :return: Deserialised original dataclass
        """
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(json) - names
        if unknown:
            logger.warning('Ignoring unknown keys for %s: %s',
                           type_name(cls), ', '.join(sorted(unknown)))
        return cls(**{k: v for k, v in json.items() if k in names})


# Dispatcher functions share a signature.
# pylint: disable=unused-argument


@functools.singledispatch
def jsonify(obj: Any) -> JSONType:
    """
    "JSON-ify" object.

    Converts dataclasses, enums, numpy arrays and numpy scalars into
    plain JSON types, field order preserved.

    :param obj: Python object
    :return: "JSON-ified" object
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonify(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if not isinstance(obj, (str, int, bool)) and obj is not None:
        logger.warning('Unsupported type in jsonify: %s (%r)',
                       type_name(obj), obj)
    return obj


@jsonify.register
def _jsonify_float(obj: float) -> JSONType:
    if not math.isfinite(obj):
        raise ValueError(f'Cannot serialise non-finite float {obj!r}')
    return obj


@jsonify.register(np.generic)
def _jsonify_numpy_scalar(obj: np.generic) -> JSONType:
    return jsonify(obj.item())


@jsonify.register(np.ndarray)
def _jsonify_numpy_array(obj: np.ndarray) -> JSONType:
    return [jsonify(o) for o in obj.tolist()]


@jsonify.register(Enum)
def _jsonify_enum(obj: Enum) -> JSONType:
    return jsonify(obj.value)


@jsonify.register(list)
@jsonify.register(tuple)
def _jsonify_sequence(obj: Sequence[Any]) -> JSONType:
    return [jsonify(o) for o in obj]


@jsonify.register(dict)
def _jsonify_mapping(obj: Mapping[Any, Any]) -> JSONType:
    return {str(k): jsonify(v) for k, v in obj.items()}


def dumps(obj: Any) -> bytes:
    """
    Serialise to indented JSON bytes.

    :param obj: Python object
    :return: UTF-8 JSON with a trailing newline
    """
    return orjson.dumps(jsonify(obj),
                        option=orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE)


def loads(data: Union[bytes, str]) -> Any:
    """
    Deserialise JSON.

    :param data: JSON document
    :return: Plain JSON types
    """
    return orjson.loads(data)


def write_json(path: PathLike, obj: Any) -> None:
    """
    Write an object as a JSON file.

    :param path: Output path
    :param obj: Python object
    """
    with open(path, 'wb') as f:
        f.write(dumps(obj))
    logger.debug('Wrote %s', path)


def read_json(path: PathLike) -> Any:
    """
    Read a JSON file.

    :param path: Input path
    :return: Plain JSON types
    """
    with open(path, 'rb') as f:
        return loads(f.read())
