"""Report envelopes, JSON serialization and plane CSV output.

Every report is a JSON object with a fixed envelope (schema version, tool
version, command, seed, arithmetic mode, input digest, resolved config)
and a command-specific ``result``.  Reports are validated against
:data:`REPORT_SCHEMA` before they are written.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .errors import WrongArity

SCHEMA_VERSION = "1.0"

RESULT_KEYS = {
    "enum": ["root", "count", "trees"],
    "poly": ["root", "value", "backend"],
    "decompose": ["pinned", "vectors"],
    "coplanarity": ["certificate"],
    "conjecture": ["certificate"],
    "stationary": ["probabilities"],
    "currents": ["currents", "balance_ok"],
    "linearity": ["coefficients"],
    "simulate": ["replicas", "currents"],
    "selftest": ["checks", "passed"],
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "tool", "version", "command", "seed", "arithmetic", "input", "config",
                 "result"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "tool": {"const": "treesurgeon"},
        "version": {"type": "string"},
        "command": {"enum": sorted(RESULT_KEYS)},
        "seed": {"type": ["integer", "null"]},
        "arithmetic": {"enum": ["exact", "float"]},
        "input": {
            "type": ["object", "null"],
            "required": ["name", "sha256"],
            "properties": {
                "name": {"type": "string"},
                "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
            },
        },
        "config": {"type": "object"},
        "result": {"type": "object"},
    },
    "allOf": [
        {
            "if": {"properties": {"command": {"const": cmd}}},
            "then": {"properties": {"result": {"required": keys}}},
        }
        for cmd, keys in RESULT_KEYS.items()
    ],
}


def digest(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def to_jsonable(x):
    """Plain JSON types; fractions become ``"p/q"`` strings, non-finite floats strings."""
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in x]
    if x is None or isinstance(x, str):
        return x
    if hasattr(x, "to_dict"):
        return to_jsonable(x.to_dict())
    return str(x)


def make_report(command: str, result: dict, *, version: str, seed, arithmetic: str,
                input_info: dict | None, config: dict) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": "treesurgeon",
        "version": version,
        "command": command,
        "seed": seed,
        "arithmetic": arithmetic,
        "input": input_info,
        "config": config,
        "result": result,
    }
    doc = to_jsonable(doc)
    validate(doc)
    return doc


def validate(doc: dict) -> None:
    """Raise :class:`jsonschema.ValidationError` if ``doc`` breaks the schema."""
    jsonschema.validate(doc, REPORT_SCHEMA)


def dumps(doc: dict, lines: bool = False) -> str:
    return json.dumps(doc, separators=(",", ":")) if lines else json.dumps(doc, indent=2)


def write_report(doc: dict, path: str | Path | None, stream=None, lines: bool = False) -> None:
    """Validate then write to ``path`` (or ``stream`` if no path)."""
    validate(doc)
    text = dumps(doc, lines) + "\n"
    if path is None:
        stream.write(text)
    else:
        mode = "a" if lines else "w"
        with open(path, mode) as fh:
            fh.write(text)


def plane_csv(g, cert_pinned, points, sigma) -> str:
    """Per-root tree vectors then the plane normal, as CSV text.

    ``points`` is a list of ``(root, [avoid, use +, use -])`` and
    ``sigma`` a :class:`~treesurgeon.coplanarity.SigmaVector`.
    """
    if len(cert_pinned) != 1:
        raise WrongArity(f"plane data needs exactly one pinned pair, got {len(cert_pinned)}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["root", "avoid", "forward", "backward"])
    for root, vec in points:
        w.writerow([g.labels[root], *(to_jsonable(x) for x in vec)])
    w.writerow(["normal", *(to_jsonable(x) for x in sigma.as_vector())])
    return buf.getvalue()
