import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from fraisse.structures import (FiniteStructure, PartialIso, Signature, StructureError,
                                canonical_key, check_partial_iso, closure_of,
                                enumerate_embeddings, equalizing_tuple_search,
                                extend_partial_iso, isomorphic, qftp)

from conftest import DIGRAPH, digraph, tournament

CYCLE3 = digraph(range(3), [(0, 1), (1, 2), (2, 0)])


def test_signature_rejects_duplicates_and_bad_arity():
    with pytest.raises(StructureError):
        Signature((("E", 2), ("E", 3)))
    with pytest.raises(StructureError):
        Signature((("E", 0),))


def test_structure_validates_tuples_and_functions():
    with pytest.raises(StructureError):
        digraph(range(2), [(0, 5)])
    with pytest.raises(StructureError):
        digraph(range(2), [(0, 1, 1)])
    sig = Signature((("E", 2),), ("f",))
    with pytest.raises(StructureError):
        FiniteStructure(sig, range(2), {}, {"f": {0: 1}})


def test_closure_follows_functions():
    sig = Signature((), ("f",))
    s = FiniteStructure(sig, range(4), {}, {"f": {0: 1, 1: 2, 2: 2, 3: 3}})
    assert closure_of(s, [0]) == (0, 1, 2)
    assert s.induced([0]).universe == (0, 1, 2)


def test_qftp_single_point_over_empty():
    t = qftp(CYCLE3, (0,))
    assert t.length == 1 and not t.relations


def test_qftp_equal_when_both_dominate_base():
    s = digraph(range(4), [(2, 0), (3, 0), (2, 1), (3, 1), (2, 3)])
    assert qftp(s, (2,), (0, 1)) == qftp(s, (3,), (0, 1))
    m = {0: 0, 1: 1, 2: 3}
    assert check_partial_iso(s, s, m) is None


def test_qftp_path_direction_matters():
    s = digraph(range(3), [(0, 2), (2, 1)])
    assert qftp(s, (0,), (2,)) != qftp(s, (1,), (2,))


def test_qftp_unknown_element():
    with pytest.raises(StructureError):
        qftp(CYCLE3, (7,))


def test_embedding_counts():
    one = digraph([0], [])
    assert len(enumerate_embeddings(one, tournament(3, random.Random(1)))) == 3
    edge = digraph(range(2), [(0, 1)])
    assert len(enumerate_embeddings(edge, CYCLE3)) == 3
    assert enumerate_embeddings(edge, digraph(range(2), [])) == []


def test_embedding_signature_mismatch():
    other = FiniteStructure(Signature((("F", 2),)), [0], {})
    with pytest.raises(StructureError):
        enumerate_embeddings(other, CYCLE3)


def test_extend_partial_iso_in_cycle():
    p = PartialIso(CYCLE3, CYCLE3, {0: 1})
    assert extend_partial_iso(p, 1) == [2]
    assert extend_partial_iso(PartialIso(CYCLE3, CYCLE3, {}), 0) == [0, 1, 2]
    full = PartialIso(CYCLE3, CYCLE3, {0: 0, 1: 1, 2: 2})
    with pytest.raises(StructureError):
        extend_partial_iso(full, 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 6), st.integers(0, 10 ** 6))
def test_extension_matches_type_transport(n, seed):
    # w extends p exactly when the one-point types correspond under p
    rng = random.Random(seed)
    s = tournament(n, rng)
    dom = rng.sample(range(n), 2)
    for img in itertools.permutations(range(n), 2):
        m = dict(zip(dom, img))
        if check_partial_iso(s, s, m) is not None:
            continue
        p = PartialIso(s, s, m)
        v = next(x for x in range(n) if x not in m)
        got = extend_partial_iso(p, v)
        want = []
        for w in range(n):
            if w in img:
                continue
            src = {(a, b) for a in dom + [v] for b in dom + [v] if s.holds("E", (a, b))}
            mm = dict(m)
            mm[v] = w
            if all(s.holds("E", (mm[a], mm[b])) for a, b in src) and \
                    all(s.holds("E", (a, b)) == s.holds("E", (mm[a], mm[b]))
                        for a in dom + [v] for b in dom + [v] if a != b):
                want.append(w)
        assert got == want
        break


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10 ** 6))
def test_qftp_equality_iff_partial_iso(n, seed):
    rng = random.Random(seed)
    s = tournament(n + 2, rng)
    params = (0,)
    for t1, t2 in itertools.product(itertools.permutations(range(1, n + 2), 2), repeat=2):
        m = {0: 0, t1[0]: t2[0], t1[1]: t2[1]}
        if len(set(m.values())) < 3:
            continue
        same = qftp(s, t1, params) == qftp(s, t2, params)
        assert same == (check_partial_iso(s, s, m) is None)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10 ** 6))
def test_canonical_key_is_isomorphism_invariant(n, seed):
    rng = random.Random(seed)
    s = tournament(n, rng)
    perm = list(range(n))
    rng.shuffle(perm)
    t = s.rename({i: 10 + perm[i] for i in range(n)})
    assert isomorphic(s, t)
    assert canonical_key(s) == canonical_key(t)


def test_equalizing_search_finds_empty_tuple_for_automorphic_points():
    r = equalizing_tuple_search(CYCLE3, (0,), (1,), 2, lambda s: [])
    assert r.found and r.tuple == ()


def test_equalizing_search_reports_exhaustion():
    s = digraph(range(2), [(0, 1)])
    # in a 2-point structure nothing separates 0 from 1 only by extending it
    r = equalizing_tuple_search(s, (0,), (1,), 0, lambda s: [], length=1)
    assert r.status == "exhausted"


def test_equalizing_search_rejects_overlap():
    with pytest.raises(StructureError):
        equalizing_tuple_search(CYCLE3, (0,), (0,), 1, lambda s: [])
