"""Shipped JSON fixtures: h4, cycle4, witness_s2, witness_s3."""
from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources

from ..io import from_jsonable, point_from_dict, point_to_dict, structure_to_dict

NAMES = ("h4", "cycle4", "witness_s2", "witness_s3")


def path(name):
    return resources.files(__name__).joinpath(f"{name}.json")


def raw(name):
    if name not in NAMES:
        raise KeyError(name)
    return json.loads(path(name).read_text())


def load(name):
    """A structure for h4/cycle4; a dict with decoded parts for witnesses."""
    data = raw(name)
    if data.get("kind") == "witness":
        return {
            "n": data["n"],
            "q": Fraction(data["q"]),
            "a_points": [point_from_dict(p) for p in data["a_points"]],
            "f_a": [[point_from_dict(a), point_from_dict(b)] for a, b in data["f_a"]],
            "b_point": point_from_dict(data["b_point"]),
            "obstructions": [from_jsonable(s) for s in data["obstructions"]],
        }
    return from_jsonable(data)


def witness_dict(w):
    return {
        "kind": "witness",
        "n": w.n,
        "q": f"{w.q.numerator}/{w.q.denominator}",
        "a_points": [point_to_dict(p) for p in w.a_points],
        "f_a": [[point_to_dict(a), point_to_dict(b)] for a, b in w.f_a.items()],
        "b_point": point_to_dict(w.b_point),
        "obstructions": [structure_to_dict(s) for s in w.obstructions],
    }


def regenerate(directory):
    """Rewrite the fixture files from the library constructions."""
    from pathlib import Path

    from ..circle import no_dense_conjugacy_witness
    from ..hypertournaments import h4
    from ..partite import cycle4

    d = Path(directory)
    items = {"h4": structure_to_dict(h4()), "cycle4": structure_to_dict(cycle4()),
             "witness_s2": witness_dict(no_dense_conjugacy_witness(2)),
             "witness_s3": witness_dict(no_dense_conjugacy_witness(3))}
    for name, data in items.items():
        (d / f"{name}.json").write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
