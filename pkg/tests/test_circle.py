import itertools
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from fraisse.circle import (CirclePoint, ColouredChain, Cut, LocalOrderConfig, Unsat, alpha,
                            angle_compare, chain_map_ok, circle_realizable, cuts_of_hat,
                            eval_relation, extend_in_cut, in_cut, is_partial_iso_points,
                            no_dense_conjugacy_witness, pi_bounds, point_in_cut, s_index,
                            sdd2_edges, sector_fold, sector_unfold, sign_rpi)
from fraisse.structures import FiniteStructure, StructureError

mpmath.mp.dps = 50


def P(q, k=0, n=2):
    return CirclePoint(Fraction(q), k, n)


def test_pi_bounds_bracket_pi():
    mpmath.mp.dps = 200
    for level in (0, 1, 5, 20):
        lo, hi = pi_bounds(level)
        assert mpmath.mpf(lo.numerator) / lo.denominator < mpmath.pi
        assert mpmath.pi < mpmath.mpf(hi.numerator) / hi.denominator
    assert pi_bounds(20)[1] - pi_bounds(20)[0] < Fraction(1, 10 ** 30)
    mpmath.mp.dps = 50


def test_sign_rpi_basic():
    assert sign_rpi(0, 0) == 0
    assert sign_rpi(Fraction(22, 7), -1) == 1
    assert sign_rpi(Fraction(223, 71), -1) == -1
    assert sign_rpi(-3, 1) == 1


def test_angle_compare_examples():
    u, v = P(0), P(1)
    assert angle_compare(u, v, 0) == 1
    assert angle_compare(u, v, 1) == -1
    assert s_index(u, v) == 0
    # antipode: exactly pi
    assert angle_compare(u, u.shift(1), 1) == 0
    assert s_index(u, u.shift(1)) is None
    assert s_index(P(0), P(4)) == 1


def test_point_equality_is_exact():
    assert P(2) == P(Fraction(4, 2))
    assert P(2, 1) != P(2, 0)
    assert P(1, 3) == P(1, 1)


def _numeric_alpha(u, v):
    tu = mpmath.mpf(u.q.numerator) / u.q.denominator + 2 * mpmath.pi * u.k / u.n
    tv = mpmath.mpf(v.q.numerator) / v.q.denominator + 2 * mpmath.pi * v.k / v.n
    return (tv - tu) % (2 * mpmath.pi)


def test_angle_compare_agrees_with_numerics():
    rng = random.Random(7)
    checked = 0
    for _ in range(2000):
        n = rng.choice((2, 3, 4))
        u = CirclePoint(Fraction(rng.randint(-10 ** 4, 10 ** 4), rng.randint(1, 100)), rng.randrange(n), n)
        v = CirclePoint(Fraction(rng.randint(-10 ** 4, 10 ** 4), rng.randint(1, 100)), rng.randrange(n), n)
        j = rng.randrange(n + 1)
        diff = _numeric_alpha(u, v) - 2 * mpmath.pi * j / n
        if abs(diff) > 1e-6:
            assert angle_compare(u, v, j) == (1 if diff > 0 else -1)
            checked += 1
    assert checked > 1500


@settings(max_examples=200, deadline=None)
@given(st.fractions(-50, 50, max_denominator=60), st.fractions(-50, 50, max_denominator=60),
       st.integers(2, 4))
def test_s_laws(q1, q2, n):
    u, v = CirclePoint(q1, 0, n), CirclePoint(q2, 0, n)
    if u == v:
        return
    j = s_index(u, v)
    assert j is not None
    assert s_index(v, u) == n - 1 - j


def test_eval_relation_examples():
    one = eval_relation(LocalOrderConfig(2, [P(0)]))
    assert all(not one.relations[r] for r in one.signature.relation_names)
    tri = LocalOrderConfig(2, [P(0), P(2), P(4)])
    s = eval_relation(tri)
    ids = {p: tri.index(p) for p in tri.points}
    for a, b in ((0, 2), (2, 4), (4, 0)):
        assert s.holds("S0", (ids[P(a)], ids[P(b)]))
    pair = eval_relation(LocalOrderConfig(2, [P(0), P(0, 1)]))
    assert not pair.relations["S0"] and not pair.relations["S1"]


def test_cuts_of_hat_counts():
    assert len(cuts_of_hat(LocalOrderConfig(2, [P(0)]))) == 2
    c = cuts_of_hat(LocalOrderConfig(2, [P(0), P(1)]))
    assert len(c) == 4
    assert len(cuts_of_hat(LocalOrderConfig(2, [P(0), P(2), P(4)]))) == 6
    for cut in c:
        mid = point_in_cut(cut)
        assert in_cut(mid, cut)


def test_extend_in_cut_identity_and_rotation():
    c = LocalOrderConfig(2, [P(0), P(1)])
    ident = {p: p for p in c.points}
    for cut in cuts_of_hat(c):
        rec = extend_in_cut(c, ident, cut, cut)
        assert rec.certified
    r = Fraction(1, 3)
    rot = {p: CirclePoint(p.q + r, p.k, 2) for p in c.points}
    for cut in cuts_of_hat(c):
        img = Cut(CirclePoint(cut.u.q + r, cut.u.k, 2), CirclePoint(cut.v.q + r, cut.v.k, 2))
        rec = extend_in_cut(c, rot, cut, img)
        assert rec.certified
        b1 = CirclePoint(rec.b0.q + r, 0, 2)
        assert rec.certify(rot, rec.b0, b1)


def test_extend_in_cut_mismatch():
    c = LocalOrderConfig(2, [P(0), P(1)])
    ident = {p: p for p in c.points}
    cuts = cuts_of_hat(c)
    with pytest.raises(StructureError):
        extend_in_cut(c, ident, cuts[0], cuts[1])


def test_extension_window_random_configs():
    # every realisable one-point extension of a small substructure has a
    # rational witness inside the matching cut
    rng = random.Random(11)
    for n in (2, 3):
        pts = sorted({CirclePoint(Fraction(rng.randint(0, 600), 97), 0, n) for _ in range(12)},
                     key=lambda p: p.q)
        cfg = LocalOrderConfig(n, pts)
        for _ in range(6):
            sub = LocalOrderConfig(n, rng.sample(list(cfg.points), 3))
            for cut in cuts_of_hat(sub):
                w = point_in_cut(cut)
                if any(w.q == p.q for p in sub.points):
                    continue
                ext = eval_relation(LocalOrderConfig(n, list(sub.points) + [w]))
                r = circle_realizable(ext, n)
                assert not isinstance(r, Unsat)
                assert eval_relation(r.config) is not None


def test_sector_unfold_examples():
    a = P(0)
    ch = sector_unfold(a, LocalOrderConfig(2, [a, P(2)]))
    assert ch.items == (P(2),) and ch.colours == (0,)
    ch = sector_unfold(a, LocalOrderConfig(2, [a, P(2), P(4)]))
    assert ch.items == (P(4, 1), P(2)) and ch.colours == (1, 0)
    assert len(sector_unfold(a, LocalOrderConfig(2, []))) == 0


@settings(max_examples=300, deadline=None)
@given(st.lists(st.fractions(-30, 30, max_denominator=40), min_size=0, max_size=6, unique=True),
       st.integers(2, 4))
def test_unfold_fold_round_trip(qs, n):
    a = CirclePoint(0, 0, n)
    pts = [CirclePoint(q, 0, n) for q in qs if q != 0]
    cfg = LocalOrderConfig(n, pts)
    ch = sector_unfold(a, cfg)
    assert set(sector_fold(a, ch).points) == set(cfg.points)
    assert sector_unfold(a, sector_fold(a, ch)) == ch


# both colours show up: 4 and 5 lie past pi
POOL = [Fraction(x) for x in (0, 2, 3, 4, 5)] + [Fraction(1, 2)]


def test_partial_iso_iff_chain_map_exhaustive():
    # maps fixing a: partial iso of the circle fragment <=> the unfolded map
    # is order and colour preserving
    n = 2
    a = CirclePoint(0, 0, n)
    others = [CirclePoint(q, 0, n) for q in POOL if q != 0]
    count = 0
    for size in range(1, 5):
        for dom in itertools.combinations(others, size):
            for img in itertools.permutations(others, size):
                f = dict(zip(dom, img))
                f[a] = a
                c1 = LocalOrderConfig(n, dom)
                c2 = LocalOrderConfig(n, img)
                ch1, ch2 = sector_unfold(a, c1), sector_unfold(a, c2)
                pos1 = {w.shift(-k): w for w, k in zip(ch1.items, ch1.colours)}
                pos2 = {w.shift(-k): w for w, k in zip(ch2.items, ch2.colours)}
                um = {pos1[x]: pos2[y] for x, y in f.items() if x != a}
                assert is_partial_iso_points(f) == chain_map_ok(ch1, ch2, um)
                count += 1
    assert count > 1000


def test_circle_realizable_witness_triple():
    s = eval_relation(LocalOrderConfig(2, [P(0), P(2), P(4)]))
    r = circle_realizable(s, 2)
    assert not isinstance(r, Unsat)
    assert eval_relation(r.config) == s


def test_circle_realizable_empty_and_obstruction():
    e = FiniteStructure(eval_relation(LocalOrderConfig(2, [])).signature, [], {})
    assert not isinstance(circle_realizable(e, 2), Unsat)
    w = no_dense_conjugacy_witness(2)
    for s in w.obstructions:
        assert isinstance(circle_realizable(s, 2), Unsat)


def test_circle_realizable_rejects_bad_converse():
    sig = eval_relation(LocalOrderConfig(2, [])).signature
    s = FiniteStructure(sig, range(2), {"S0": [(0, 1), (1, 0)]})
    with pytest.raises(StructureError):
        circle_realizable(s, 2)


def test_sdd2_edges():
    c = LocalOrderConfig(2, [P(0), P(0, 1)])
    g = sdd2_edges(c)
    assert not g.relations["E"]
    c = LocalOrderConfig(2, [P(0), P(1), P(0, 1), P(1, 1)])
    g = sdd2_edges(c)
    i = {p: c.index(p) for p in c.points}
    for u, v in ((P(0), P(1)), (P(1), P(0, 1)), (P(0, 1), P(1, 1)), (P(1, 1), P(0))):
        assert g.holds("E", (i[u], i[v]))
    # sigma (antipode) is an automorphism
    sig = {i[p]: i[p.shift(1)] for p in c.points}
    assert all(g.holds("E", (sig[u], sig[v])) for u, v in g.relations["E"])


@pytest.mark.parametrize("n,q", [(2, Fraction(2)), (3, Fraction(19, 10))])
def test_no_dense_conjugacy_witness(n, q):
    w = no_dense_conjugacy_witness(n)
    assert w.q == q
    assert len(w.a_points) == n + 1
    assert is_partial_iso_points(w.f_a)
    f2 = {x: w.f_a[w.f_a[x]] for x in w.f_a}
    assert is_partial_iso_points(f2)
    for s in w.obstructions:
        assert isinstance(circle_realizable(s, n), Unsat)
    cyc = eval_relation(LocalOrderConfig(n, w.a_points))
    r = circle_realizable(cyc, n)
    assert not isinstance(r, Unsat) and eval_relation(r.config) == cyc


def test_witness_rejects_small_n():
    with pytest.raises(ValueError):
        no_dense_conjugacy_witness(1)
