"""JSON round-tripping for structures, sign maps and circle points."""
from __future__ import annotations

import json
from fractions import Fraction

from .circle import CirclePoint
from .hypertournaments import SignMap
from .structures import FiniteStructure, Signature, StructureError


def structure_to_dict(s):
    sig = s.signature
    return {
        "signature": {
            "relations": [{"name": n, "arity": a} for n, a in sig.relations],
            "functions": [{"name": f} for f in sig.functions],
        },
        "universe": list(s.universe),
        "relations": {n: [list(t) for t in sorted(s.relations[n])] for n in sig.relation_names},
        "functions": {f: {str(k): v for k, v in sorted(s.functions[f].items())} for f in sig.functions},
    }


def _need(d, key, typ):
    if key not in d:
        raise StructureError(f"missing field {key!r}")
    if not isinstance(d[key], typ):
        raise StructureError(f"field {key!r} has the wrong type")
    return d[key]


def structure_from_dict(d):
    if not isinstance(d, dict):
        raise StructureError("structure must be a JSON object")
    sd = _need(d, "signature", dict)
    rels = []
    for r in sd.get("relations", []):
        a = r.get("arity")
        if not isinstance(a, int) or isinstance(a, bool) or a < 1:
            raise StructureError(f"bad arity for relation {r.get('name')!r}")
        rels.append((r["name"], a))
    funs = [f["name"] for f in sd.get("functions", [])]
    sig = Signature(tuple(rels), tuple(funs))
    uni = _need(d, "universe", list)
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in uni):
        raise StructureError("universe must be a list of integers")
    relations = d.get("relations", {})
    functions = {f: {int(k): v for k, v in m.items()} for f, m in d.get("functions", {}).items()}
    return FiniteStructure(sig, uni, relations, functions)


def signmap_to_dict(m):
    return {"kind": "signmap", "n": m.n,
            "values": [[list(k), v] for k, v in sorted(m.values.items())]}


def signmap_from_dict(d):
    m = SignMap(int(d["n"]))
    for k, v in d["values"]:
        m[tuple(k)] = int(v)
    return m


def point_to_dict(p):
    q = Fraction(p.q)
    return {"kind": "circlepoint", "q": f"{q.numerator}/{q.denominator}", "k": p.k, "n": p.n}


def point_from_dict(d):
    try:
        return CirclePoint(Fraction(d["q"]), int(d["k"]), int(d["n"]))
    except (KeyError, ValueError, ZeroDivisionError) as e:
        raise StructureError(f"bad circle point: {e}") from None


def to_jsonable(obj):
    if isinstance(obj, FiniteStructure):
        return structure_to_dict(obj)
    if isinstance(obj, SignMap):
        return signmap_to_dict(obj)
    if isinstance(obj, CirclePoint):
        return point_to_dict(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def from_jsonable(d):
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind == "signmap":
        return signmap_from_dict(d)
    if kind == "circlepoint" or (kind is None and isinstance(d, dict) and {"q", "k", "n"} <= set(d)):
        return point_from_dict(d)
    if kind in (None, "structure"):
        return structure_from_dict(d)
    raise StructureError(f"unknown kind {kind!r}")


def dumps(obj, **kw):
    return json.dumps(to_jsonable(obj), sort_keys=True, **kw)


def loads(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise StructureError(f"malformed JSON: {e}") from None
    return from_jsonable(data)


def load_structure(path):
    with open(path) as fh:
        obj = loads(fh.read())
    if not isinstance(obj, FiniteStructure):
        raise StructureError(f"{path} does not hold a structure")
    return obj


def save(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps(obj, indent=1))
        fh.write("\n")
