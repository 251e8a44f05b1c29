"""Canonical JSON encoding: sorted keys, 17 significant digits, infinities as strings."""

import json
import logging
import math
from enum import Enum
from typing import Any

import numpy as np

from svicert.config import FORMAT_VERSION
from svicert.utils import format_float

logger = logging.getLogger(__name__)


class ConfigValidationError(ValueError):
    """Raised when an input file fails validation; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    return value


def _encode(value: Any, indent: int, level: int) -> str:
    value = _plain(value)
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)

    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        text = format_float(value)
        return json.dumps(text) if math.isinf(value) or math.isnan(value) else text
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(key), ensure_ascii=False)}: {_encode(value[key], indent, level + 1)}"
                 for key in sorted(value, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        encoded = [_encode(item, indent, level + 1) for item in value]
        if all(not isinstance(_plain(item), (dict, list)) for item in value):
            return "[" + ", ".join(encoded) + "]"
        return "[\n" + ",\n".join(pad + item for item in encoded) + "\n" + close + "]"
    raise TypeError(f"Cannot encode {type(value).__name__}")


def canonical_dumps(document: Any, indent: int = 2) -> str:
    """Deterministic JSON text for ``document``."""
    return _encode(document, indent, 0) + "\n"


def loads(text: str) -> Any:
    return json.loads(text)


def number(value: Any, field: str) -> float:
    """Float from a JSON number or one of the strings "inf", "-inf"."""
    if isinstance(value, bool):
        raise ConfigValidationError(field, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str) and value in ("inf", "-inf", "nan"):
        return float(value)
    raise ConfigValidationError(field, f"expected a number, got {value!r}")


def number_array(value: Any, field: str, ndim: int) -> np.ndarray:
    """Nested lists of numbers as a float array with ``ndim`` dimensions."""
    def convert(item, depth):
        if depth == 0:
            return number(item, field)
        if not isinstance(item, list):
            raise ConfigValidationError(field, f"expected a {ndim}-d array")
        return [convert(entry, depth - 1) for entry in item]

    array = np.array(convert(value, ndim), dtype=float)
    if array.ndim != ndim and array.size:
        raise ConfigValidationError(field, f"expected a {ndim}-d array, got shape {array.shape}")
    return array


def integer(value: Any, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(field, f"expected an integer, got {value!r}")
    return value


def read_document(path: str, expected_format: str) -> dict:
    """Load a versioned document and check its format tag."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            document = json.load(handle)
    except FileNotFoundError:
        raise ConfigValidationError("path", f"file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigValidationError("json", f"{path} is not valid JSON ({e})")

    if not isinstance(document, dict):
        raise ConfigValidationError("format", "top level must be an object")
    if document.get("format") != expected_format:
        raise ConfigValidationError("format", f"expected {expected_format!r}, got {document.get('format')!r}")
    if document.get("version") != FORMAT_VERSION:
        raise ConfigValidationError("version", f"unsupported version {document.get('version')!r}")
    return document


def write_document(path: str, document: Any) -> str:
    text = canonical_dumps(document)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.debug(f"Wrote {path}")
    return text
