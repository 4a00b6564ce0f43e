import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from fraisse.classes import get_class
from fraisse.structures import FiniteStructure, PartialIso, StructureError, Violation, check_partial_iso
from fraisse.zoo import (P3_SIG, check_coloured_poset, check_dn, check_f_class, colour_of, coloured_sig,
                         dn_amalgam, dn_independent, label_permutation, p3_attach_apex, p3_twist,
                         p3_untwist, sigma_involution, tau)

from conftest import random_member


def labelled(n, colours, edges):
    rels = {f"C{i}": [(v,) for v, c in colours.items() if c == i] for i in range(n)}
    rels["E"] = edges
    return FiniteStructure(coloured_sig(n), sorted(colours), rels)


def test_dn_membership():
    s = labelled(2, {0: 0, 1: 1}, [(0, 1)])
    assert not isinstance(check_dn(s), Violation)
    same_colour_edge = labelled(2, {0: 0, 1: 0}, [(0, 1)])
    assert isinstance(check_dn(same_colour_edge), Violation)
    two_parts_one_colour = labelled(2, {0: 0, 1: 0, 2: 1}, [(0, 2), (2, 1)])
    assert not isinstance(check_dn(two_parts_one_colour), Violation)


def test_dn_independence_examples():
    s = labelled(2, {0: 0, 1: 1}, [(0, 1)])
    assert dn_independent(s, [], [0], [1])
    assert not dn_independent(s, [], [1], [0])
    same = labelled(2, {0: 0, 1: 0}, [])
    assert dn_independent(same, [], [0], [1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_dn_amalgam_independent(seed):
    rng = random.Random(seed)
    spec = get_class("dn3")
    A = random_member(spec, rng.randint(0, 2), rng)
    B, C = A, A
    for i in range(rng.randint(1, 2)):
        B = rng.choice([e for e, _ in spec.one_point_extensions(B, new_id=10 + i)])
    for i in range(rng.randint(1, 2)):
        C = rng.choice([e for e, _ in spec.one_point_extensions(C, new_id=20 + i)])
    out = dn_amalgam(B, C)
    assert not isinstance(check_dn(out, 3), Violation)
    assert dn_independent(out, A.universe, B.universe, C.universe)


def test_label_permutation():
    s = labelled(2, {0: 0, 1: 1}, [(0, 1)])
    t = labelled(2, {5: 1, 6: 0}, [(5, 6)])
    assert label_permutation(s, s, {0: 0, 1: 1}) == {0: 0, 1: 1}
    assert label_permutation(s, t, {0: 5, 1: 6}) == {0: 1, 1: 0}
    u = labelled(2, {0: 0, 1: 0, 2: 1}, [(0, 2), (1, 2)])
    with pytest.raises(StructureError):
        label_permutation(u, u, {0: 0, 1: 2})


SG = get_class("semigeneric").signature


def test_f_class():
    c4 = FiniteStructure(SG, range(4), {"E": [(0, 1), (1, 2), (2, 3), (3, 0)]})
    assert not isinstance(check_f_class(c4), Violation)
    sig = sigma_involution(c4)
    assert sig.map == {0: 2, 2: 0, 1: 3, 3: 1} and sig.is_valid()
    three = FiniteStructure(SG, range(4), {"E": [(0, 1), (0, 3), (2, 1), (3, 2)]})
    assert isinstance(check_f_class(three), Violation)
    single = FiniteStructure(SG, range(2), {"E": [(0, 1)]})
    assert not isinstance(check_f_class(single), Violation)
    with pytest.raises(StructureError):
        sigma_involution(single)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_f_full_parts_have_two_out_edges(seed):
    rng = random.Random(seed)
    s = random_member(get_class("f"), 6, rng)
    r = check_f_class(s)
    full = [P for P in r.parts if len(P) == 2]
    for P, Q in itertools.permutations(full, 2):
        assert sum(s.holds("E", (p, q)) for p in P for q in Q) == 2


def poset(colours, less):
    rels = {f"C{i}": [(v,) for v, c in colours.items() if c == i] for i in range(3)}
    rels["E"] = less
    return FiniteStructure(P3_SIG, sorted(colours), rels)


def test_twist_examples():
    o = poset({0: 0, 1: 1}, [])
    h = p3_twist(o)
    assert tau(h, 0, 1) == 1 and h.holds("E", (1, 0))
    o = poset({0: 1, 1: 1}, [(0, 1)])
    assert p3_twist(o).relations["E"] == o.relations["E"]


def test_twist_rejects_non_poset():
    bad = poset({0: 0, 1: 1, 2: 2}, [(0, 1), (1, 2)])
    with pytest.raises(StructureError):
        p3_twist(bad)


def random_poset(n, rng):
    # random linear extension with random comparabilities, closed transitively
    order = list(range(n))
    rng.shuffle(order)
    less = set()
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < .4:
            less.add((order[i], order[j]))
    changed = True
    while changed:
        changed = False
        for (a, b), (c, e) in itertools.product(list(less), repeat=2):
            if b == c and (a, e) not in less:
                less.add((a, e))
                changed = True
    return poset({v: rng.randrange(3) for v in range(n)}, sorted(less))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10 ** 6))
def test_untwist_inverts_twist(n, seed):
    o = random_poset(n, random.Random(seed))
    assert check_coloured_poset(o) is None
    assert p3_untwist(p3_twist(o)) == o


def test_untwist_reports_violation():
    # a directed 3-cycle in one colour cannot come from a poset
    h = poset({0: 0, 1: 0, 2: 0}, [(0, 1), (1, 2), (2, 0)])
    assert isinstance(p3_untwist(h), Violation)


def test_apex_table():
    h = p3_twist(poset({0: 0, 1: 1, 2: 2}, []))
    out = p3_attach_apex(h, apex=9)
    assert tau(out, 9, 0) == 0
    assert out.holds("E", (1, 9))
    assert out.holds("E", (9, 2))
