"""JSON persistence: schema validation, reproducible float output, run records."""

from __future__ import annotations

import hashlib
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from importlib.metadata import PackageNotFoundError, version

import numpy as np
from jsonschema import Draft202012Validator
from referencing import Registry, Resource

SCHEMA_VERSION = "v1"
SCHEMA_NAMES = ("polycone", "upperset", "problem", "setops")


class SchemaError(ValueError):
    """Input failed schema validation; the message names the offending field."""


@lru_cache(maxsize=None)
def _registry():
    root = resources.files("selfbound") / "schemas" / SCHEMA_VERSION
    pairs = []
    schemas = {}
    for name in SCHEMA_NAMES:
        doc = json.loads((root / f"{name}.json").read_text())
        schemas[name] = doc
        pairs.append((doc["$id"], Resource.from_contents(doc)))
    return Registry().with_resources(pairs), schemas


def schema(name):
    return _registry()[1][name]


def validate(data, name):
    """Validate ``data`` against a named schema; raise SchemaError on failure."""
    registry, schemas = _registry()
    validator = Draft202012Validator(schemas[name], registry=registry)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            msg = "zero vector is not allowed" if err.validator == "not" else err.message
            lines.append(f"{where}: {msg}")
        raise SchemaError(f"{name} schema violation:\n  " + "\n  ".join(lines))


def read_json(path):
    """Load a JSON file, reporting decode errors with line and column."""
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


# ------------------------------------------------------------------ output


def _plain(obj):
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _fmt_float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0.0:
        return "0.0"
    text = format(x, ".17g")
    return text if any(ch in text for ch in ".en") else text + ".0"


def dumps(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits.

    Keys keep insertion order, so equal inputs give byte-identical output.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return dumps(_plain(obj), indent, _level)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


def spec_hash(data):
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def tool_version():
    try:
        return version("selfbound")
    except PackageNotFoundError:
        return "unknown"


@dataclass
class RunRecord:
    spec_hash: str
    command: str
    config: dict
    outputs: dict = field(default_factory=dict)
    wall_time: float = 0.0
    tool_version: str = field(default_factory=tool_version)
    python: str = field(default_factory=platform.python_version)

    def to_dict(self):
        return asdict(self)
