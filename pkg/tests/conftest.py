import itertools
import random

import pytest

from fraisse.structures import FiniteStructure, Signature

DIGRAPH = Signature((("E", 2),))


def tournament(n, rng):
    edges = []
    for u, v in itertools.combinations(range(n), 2):
        edges.append((u, v) if rng.random() < 0.5 else (v, u))
    return FiniteStructure(DIGRAPH, range(n), {"E": edges})


def digraph(universe, edges):
    return FiniteStructure(DIGRAPH, universe, {"E": edges})


@pytest.fixture
def rng():
    return random.Random(12345)


def random_member(spec, m, rng, start=0):
    """Random class member on start..start+m-1, grown by one-point steps."""
    s = FiniteStructure(spec.signature, [])
    for i in range(m):
        exts = [e for e, _ in spec.one_point_extensions(s, new_id=start + i)]
        s = rng.choice(exts)
    return s
