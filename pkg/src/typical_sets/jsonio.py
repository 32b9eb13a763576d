"""JSON readers and writers for the interchange documents.

Exact values travel as ``"p/q"`` strings and floats as JSON numbers.  Writers
sort keys and end with a newline so that equal objects give equal bytes.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction

from .avoidance import AvoidanceCertificate, Constraint
from .category import NowhereDenseScheme
from .errors import MalformedScheme
from .funcspace import PLFunction
from .geom_core import EXACT, FLOAT, FinitePointSet


class MalformedDocument(ValueError):
    """A JSON document does not have the expected shape."""


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def enc(x):
    """Wire form of one scalar: strings for exact values, numbers for floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    raise TypeError(f"cannot encode {type(x).__name__}")


def dec(x):
    if isinstance(x, bool) or x is None:
        raise MalformedDocument(f"not a scalar: {x!r}")
    if isinstance(x, (str, int)):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as e:
            raise MalformedDocument(f"bad rational {x!r}") from e
    if isinstance(x, float):
        return x
    raise MalformedDocument(f"not a scalar: {x!r}")


def _field(obj, key):
    if not isinstance(obj, dict) or key not in obj:
        raise MalformedDocument(f"missing field {key!r}")
    return obj[key]


# --------------------------------------------------------------------------
# point sets


def point_set_to_json(E: FinitePointSet):
    return {"dim": E.dim, "backend": E.backend, "points": [[enc(c) for c in p] for p in E.points]}


def point_set_from_json(obj) -> FinitePointSet:
    dim = _field(obj, "dim")
    backend = _field(obj, "backend")
    if backend not in (EXACT, FLOAT):
        raise MalformedDocument(f"unknown backend {backend!r}")
    pts = _field(obj, "points")
    if not isinstance(pts, list):
        raise MalformedDocument("points must be a list")
    rows = []
    for p in pts:
        if not isinstance(p, list):
            raise MalformedDocument(f"point {p!r} is not a list")
        row = [dec(c) for c in p]
        if backend == FLOAT:
            row = [float(c) for c in row]
        elif any(isinstance(c, float) for c in row):
            raise MalformedDocument("float coordinate in an exact point set")
        rows.append(row)
    return FinitePointSet.of(rows, dim, backend)


# --------------------------------------------------------------------------
# schemes and PL functions


def scheme_to_json(A: NowhereDenseScheme):
    if A.kind == "finite":
        return {"kind": "finite", "dim": A.dim, "points": [[enc(c) for c in p] for p in A.points.points]}
    return {"kind": "dyadic", "dim": A.dim, "depth": A.depth, "selected": sorted(list(i) for i in A.selected)}


def scheme_from_json(obj) -> NowhereDenseScheme:
    kind = _field(obj, "kind")
    if kind == "finite":
        pts = [[dec(c) for c in p] for p in _field(obj, "points")]
        return NowhereDenseScheme.finite(pts, obj.get("dim"))
    if kind == "dyadic":
        selected = _field(obj, "selected")
        dim = obj.get("dim") or (len(selected[0]) if selected else None)
        if dim is None:
            raise MalformedScheme("empty dyadic scheme needs an explicit dim")
        return NowhereDenseScheme.dyadic(_field(obj, "depth"), selected, dim)
    raise MalformedScheme(f"unknown scheme kind {kind!r}")


def function_from_json(obj) -> PLFunction:
    return PLFunction(
        [dec(b) for b in _field(obj, "breakpoints")], [dec(v) for v in _field(obj, "values")]
    )


# --------------------------------------------------------------------------
# certificates


def _num(x):
    return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x


def certificate_to_json(cert: AvoidanceCertificate):
    return {
        "kind": "avoidance-certificate",
        "level": cert.level,
        "dim": cert.dim,
        "gamma": point_set_to_json(cert.gamma),
        "eps": enc(cert.margin),
        "constraint": cert.constraint.to_json(),
        "metadata": {
            "seed": cert.seed,
            "tau": _num(cert.tau),
            "flags": list(cert.flags),
            "min_pair_gap": _num(cert.min_pair_gap),
            "min_tuple_gap": _num(cert.min_tuple_gap),
            "terms": {k: _num(v) for k, v in cert.terms.items()},
        },
    }


def certificate_from_json(obj) -> AvoidanceCertificate:
    meta = obj.get("metadata", {})

    def _f(x):
        return math.inf if x is None else x

    return AvoidanceCertificate(
        level=_field(obj, "level"),
        dim=_field(obj, "dim"),
        gamma=point_set_from_json(_field(obj, "gamma")),
        margin=dec(_field(obj, "eps")),
        constraint=Constraint.from_json(_field(obj, "constraint")),
        min_pair_gap=_f(meta.get("min_pair_gap")),
        min_tuple_gap=_f(meta.get("min_tuple_gap")),
        terms={k: _f(v) for k, v in meta.get("terms", {}).items()},
        tau=meta.get("tau"),
        seed=meta.get("seed"),
        flags=tuple(meta.get("flags", ())),
    )
