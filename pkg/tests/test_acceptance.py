"""Acceptance suite: one test per criterion, each printing a single
PASS/FAIL line with its runtime against the limit."""
import itertools
import random
import time
from fractions import Fraction

import mpmath
import pytest

from fraisse import circle, fixtures, io
from fraisse import hypertournaments as ht
from fraisse import partite as pt
from fraisse.circle import CirclePoint, LocalOrderConfig
from fraisse.classes import get_class
from fraisse.cli import main
from fraisse.independence import audit_axioms, audit_freeness, get_predicate, mutate
from fraisse.limits import (alt_obstruction_note, build, free_swir_commutator, kr_jep_check,
                            moves_maximally_verify, nontrivial_auto, srho_commutator,
                            tn_swap_witness, verify_extension_property)
from fraisse.structures import FiniteStructure, Violation, canonical_key
from fraisse.transversal import double_transversal, generic_transversal_vs_image
from fraisse.zoo import P3_SIG, colour_of, p3_attach_apex, p3_twist, tau


@pytest.fixture
def criterion(capsys):
    def run(num, limit, fn):
        t0 = time.perf_counter()
        ok, detail = fn()
        dt = time.perf_counter() - t0
        fast = dt < limit
        verdict = "PASS" if ok and fast else "FAIL"
        with capsys.disabled():
            print(f"\ncriterion {num:>2}: {verdict}  {detail}  [{dt:.1f}s / {limit}s]")
        assert ok, detail
        assert fast, f"took {dt:.1f}s, limit {limit}s"
    return run


# ---------------------------------------------------------------- 1

def c1():
    h = fixtures.load("h4")
    if not isinstance(ht.check_hypertournament(h, "R", 3), ht.SignMap):
        return False, "H4 rejected"
    rel = set(h.relations["R"])
    rejected = total = 0
    for trip in itertools.combinations(h.universe, 3):
        orbit = [t for t in rel if set(t) == set(trip)]
        for t in orbit:
            bad = (rel - {t}) | {t[::-1]}
            total += 1
            m = FiniteStructure(h.signature, h.universe, {"R": bad})
            rejected += isinstance(ht.check_hypertournament(m, "R", 3), Violation)
    return rejected == total == 12, f"H4 accepted; {rejected}/{total} one-orbit flips rejected"


def test_c1_h4(criterion):
    criterion(1, 1, c1)


# ---------------------------------------------------------------- 2

def _grow(spec, A, ids):
    out, frontier = [A], [A]
    for i in ids:
        frontier = [e for s in frontier for e, _ in spec.one_point_extensions(s, new_id=i)]
        out += frontier
    return out


def _amalgams_ok(spec):
    n = 0
    for a in range(3):
        for A in spec.structures(a):
            Bs, Cs = _grow(spec, A, [10, 11]), _grow(spec, A, [20, 21])
            for B in Bs:
                for C in Cs:
                    out = spec.amalgamate(B, C)
                    n += 1
                    if (spec.check(out) is not None or out.induced(B.universe) != B
                            or out.induced(C.universe) != C or len(out) != len(B) + len(C) - a):
                        return False, n
    return True, n


def _3in4_ok():
    spec = get_class("semigeneric")
    n = 0
    for m in range(2, 5):
        reps = {}
        for X in spec.structures(m):
            reps.setdefault(canonical_key(X), X)
        for X in reps.values():
            exts = [e for e, _ in spec.one_point_extensions(X, new_id=m)]
            for eb in exts:
                us = [u for u in X.universe if pt.perp(eb, u, m)]
                if not us:
                    continue
                for ec in exts:
                    vs = [v for v in X.universe if pt.perp(ec, v, m)]
                    if not vs or pt.perp(X, us[0], vs[0]):
                        continue
                    b, c = m, m + 1
                    edges = set(eb.relations["E"]) | {tuple(c if x == m else x for x in e)
                                                      for e in ec.relations["E"]}
                    s = pt.build(pt.SG_SIG, range(m + 2), edges)
                    alive = [val for val in (0, 1) if not isinstance(
                        pt.check_semigeneric(pt.build(pt.SG_SIG, range(m + 2), edges | {(b, c) if val else (c, b)})),
                        Violation)]
                    n += 1
                    if alive != [pt.amalgam_3in4(s, b, c)]:
                        return False, n
    return True, n


def c2():
    ok3, n3 = _amalgams_ok(get_class("t3"))
    oks, ns = _amalgams_ok(get_class("semigeneric"))
    ok4, n4 = _3in4_ok()
    return ok3 and oks and ok4, f"T3 {n3} amalgams, semigeneric {ns} amalgams, 3in4 {n4} inputs unique"


def test_c2_amalgamation(criterion):
    criterion(2, 60, c2)


# ---------------------------------------------------------------- 3

AUDITS = [("delta", "multi"), ("srho", "srho"), ("rationals-order", "q1"),
          ("random-tournament", "t2"), ("labelled-partite", "dn3")]


def c3():
    parts, ok = [], True
    for kind, cname in AUDITS:
        spec = get_class(cname)
        lim = build(spec, 200, seed=0)
        pred = get_predicate(kind, spec=getattr(spec, "spec", None))
        rep = audit_axioms(pred, spec, lim, (2, 2, 2), universe=8)
        low = min(a.instances for a in rep.axioms.values())
        mrep = audit_axioms(mutate(pred), spec, lim, (2, 2, 2), universe=8, ex_cap=5)
        caught = [n for n in ("Sta", "Mon-R", "Mon-L") if mrep.axioms[n].failures]
        ok &= rep.passed and low >= 50 and bool(caught)
        parts.append(f"{kind} min {low}, mutant fails {'/'.join(caught) or 'nothing'}")
    return ok, "; ".join(parts)


def test_c3_audits(criterion):
    criterion(3, 120, c3)


# ---------------------------------------------------------------- 4

def c4():
    out, ok = [], True
    for kind, cname in (("free-amalgam", "random-graph"), ("delta", "multi"), ("labelled-partite", "dn3")):
        spec = get_class(cname)
        lim = build(spec, 200)
        n, cx = audit_freeness(get_predicate(kind, spec=getattr(spec, "spec", None)), lim)
        ok &= cx is None and n > 0
        out.append(f"{kind} free ({n})")
    q = build(get_class("q1"), 200)
    n, cx = audit_freeness(get_predicate("rationals-order"), q)
    shape = False
    if cx is not None and len(cx["A"]) == len(cx["B"]) == len(cx["C"]) == 1:
        (a,), (b,), (c,) = cx["A"], cx["B"], cx["C"]
        lt = lambda x, y: q.host.holds("L", (x, y))
        shape = lt(c, a) and lt(a, b)
    ok &= shape
    out.append(f"rationals fails, b>a>c: {shape}")
    n, cx = audit_freeness(get_predicate("srho"), build(get_class("srho"), 200))
    ok &= cx is not None
    out.append(f"srho fails: {cx is not None}")
    return ok, "; ".join(out)


def test_c4_freeness(criterion):
    criterion(4, 30, c4)


# ---------------------------------------------------------------- 5

def c5():
    A, fa, B, fb = tn_swap_witness(3)
    r = kr_jep_check(get_class("t3"), A, fa, B, fb, 4)
    ok = r.status == "exhausted" and bool(alt_obstruction_note(3))
    bits = [f"T3 pair exhausted at 4 ({r.searched} tried)"]
    for n, q in ((2, Fraction(2)), (3, Fraction(19, 10))):
        w = circle.no_dense_conjugacy_witness(n)
        unsat = all(isinstance(circle.circle_realizable(s, n), circle.Unsat) for s in w.obstructions)
        cyc = circle.eval_relation(LocalOrderConfig(n, w.a_points))
        real = circle.circle_realizable(cyc, n)
        back = not isinstance(real, circle.Unsat) and circle.eval_relation(real.config) == cyc
        ok &= unsat and back and w.q == q
        bits.append(f"S({n}) q={w.q}: obstructions unsat {unsat}, cycle realised {back}")
    return ok, "; ".join(bits)


def test_c5_no_dense_conjugacy(criterion):
    criterion(5, 30, c5)


# ---------------------------------------------------------------- 6

def c6():
    left = pt.build(pt.SG_SIG, [0, 2, 4], [])
    obs = pt.stationarity_obstruction_search(get_class("semigeneric"), (0, 2), left, pt.cycle4())
    swap = {0: 2, 2: 0, 1: 3, 3: 1}
    ok = obs is not None and len(obs.candidates) == 2
    if ok:
        k0, k1 = obs.candidates
        moved = {(swap.get(x, x), swap.get(y, y)) for x, y in k0.relations["E"]}
        ok = swap in obs.moved_by and moved == set(k1.relations["E"])
    t2 = get_class("t2")
    right = FiniteStructure(t2.signature, range(3), {"R": [(0, 1), (1, 2), (0, 2)]})
    tl = FiniteStructure(t2.signature, [0, 1, 5], {"R": [(0, 1), (5, 0), (5, 1)]})
    none = pt.stationarity_obstruction_search(t2, (0, 1), tl, right) is None
    return ok and none, f"cycle: 2 candidates swapped by v0<->v2,v1<->v3: {ok}; tournament: none {none}"


def test_c6_obstruction(criterion):
    criterion(6, 10, c6)


# ---------------------------------------------------------------- 7

def _alpha(u, v):
    tu = mpmath.mpf(u.q.numerator) / u.q.denominator + 2 * mpmath.pi * u.k / u.n
    tv = mpmath.mpf(v.q.numerator) / v.q.denominator + 2 * mpmath.pi * v.k / v.n
    return (tv - tu) % (2 * mpmath.pi)


POOL = [Fraction(x) for x in (0, 2, 3, 4, 5)] + [Fraction(1, 2)]


def c7():
    mpmath.mp.dps = 50
    rng = random.Random(2024)
    agree = checked = 0
    for _ in range(10 ** 4):
        n = rng.choice((2, 3, 4))
        u = CirclePoint(Fraction(rng.randint(-10 ** 4, 10 ** 4), rng.randint(1, 100)), rng.randrange(n), n)
        v = CirclePoint(Fraction(rng.randint(-10 ** 4, 10 ** 4), rng.randint(1, 100)), rng.randrange(n), n)
        j = rng.randrange(n + 1)
        diff = _alpha(u, v) - 2 * mpmath.pi * j / n
        if abs(diff) > 1e-6:
            checked += 1
            agree += circle.angle_compare(u, v, j) == (1 if diff > 0 else -1)
    trips = 0
    for _ in range(10 ** 3):
        n = rng.choice((2, 3, 4))
        qs = {Fraction(rng.randint(-300, 300), rng.randint(1, 40)) for _ in range(rng.randint(0, 6))} - {0}
        a = CirclePoint(0, 0, n)
        cfg = LocalOrderConfig(n, [CirclePoint(q, rng.randrange(n), n) for q in qs])
        ch = circle.sector_unfold(a, cfg)
        trips += (set(circle.sector_fold(a, ch).points) == set(cfg.points)
                  and circle.sector_unfold(a, circle.sector_fold(a, ch)) == ch)
    n = 2
    a = CirclePoint(0, 0, n)
    others = [CirclePoint(q, 0, n) for q in POOL if q != 0]
    maps = match = 0
    for size in range(1, 5):
        for dom in itertools.combinations(others, size):
            for img in itertools.permutations(others, size):
                f = dict(zip(dom, img))
                f[a] = a
                ch1 = circle.sector_unfold(a, LocalOrderConfig(n, dom))
                ch2 = circle.sector_unfold(a, LocalOrderConfig(n, img))
                pos1 = {w.shift(-k): w for w, k in zip(ch1.items, ch1.colours)}
                pos2 = {w.shift(-k): w for w, k in zip(ch2.items, ch2.colours)}
                um = {pos1[x]: pos2[y] for x, y in f.items() if x != a}
                maps += 1
                match += circle.is_partial_iso_points(f) == circle.chain_map_ok(ch1, ch2, um)
    ok = agree == checked > 9000 and trips == 1000 and match == maps
    return ok, f"angle_compare {agree}/{checked}; unfold/fold {trips}/1000; chain maps {match}/{maps}"


def test_c7_circle_exactness(criterion):
    criterion(7, 30, c7)


# ---------------------------------------------------------------- 8

def c8():
    bits, ok = [], True
    for kind in ("t2", "t3", "q2", "semigeneric", "srho", "dn3"):
        spec = get_class(kind)
        lim = build(spec, 300, seed=0)
        rep = verify_extension_property(lim, 3)
        valid = spec.check(lim.window(12)) is None
        ok &= rep.passed and valid
        bits.append(f"{kind} {rep.problems}p/{rep.realized_by_extension}x")
    return ok, "k=3 " + ", ".join(bits)


def test_c8_extension_property(criterion):
    criterion(8, 60, c8)


# ---------------------------------------------------------------- 9

def c9():
    # the window is the construction's own: exterior types with |A| <= 2
    # and length <= 2, in enumeration order, one per stage
    lim = build(get_class("multi"), 200, seed=0)
    res = free_swir_commutator(lim, nontrivial_auto(lim), 5)
    rep = moves_maximally_verify(lim, res.f, res.pred, res.types, "free", res.witnesses)
    small = all(len(A) <= 2 and len(ref) <= 2 for A, ref in res.types)
    ok1 = res.revalidate() and rep.passed and rep.types == 5 and small
    lim2 = build(get_class("srho"), 200, seed=0)
    res2 = srho_commutator(lim2, nontrivial_auto(lim2, "move"), 3)
    rep2 = moves_maximally_verify(lim2, res2.f, res2.pred, res2.types, "srho", res2.witnesses)
    ok2 = res2.revalidate() and rep2.passed and rep2.types >= 3
    return ok1 and ok2, (f"T(2,3) R {rep.passed_R}/{rep.types} L {rep.passed_L}/{rep.types}; "
                         f"S_rho R {rep2.passed_R}/{rep2.types} L {rep2.passed_L}/{rep2.types}")


def test_c9_maximal_moves(criterion):
    criterion(9, 120, c9)


# ---------------------------------------------------------------- 10

def _solved_ok(host, stages):
    for st in stages[1:]:
        if not st.solved:
            return False
        for prob, (r, b) in st.solved:
            if not pt.perp(host, r, b):
                return False
            for x, dr, db in prob.pattern:
                if pt.d(host, r, x) != dr or pt.d(host, b, x) != db:
                    return False
    return True


def c10():
    bits, ok = [], True
    for name, fn in (("step2", generic_transversal_vs_image), ("step3", double_transversal)):
        lim = build(get_class("semigeneric"), 40, seed=0)
        g = nontrivial_auto(lim, "swap-cycle")
        res = fn(lim, g, 5)
        checks = sum(len(st.checks) for st in res.stages)
        solved = _solved_ok(lim.host, res.stages)
        ok &= res.passed and len(res.stages) == 6 and solved
        bits.append(f"{name}: {checks} invariant checks hold, problems realised {solved}")
    return ok, "; ".join(bits)


def test_c10_transversals(criterion):
    criterion(10, 60, c10)


# ---------------------------------------------------------------- 11

def posets(n):
    """Every strict partial order on range(n), as frozensets of pairs."""
    out = [frozenset()]
    for x in range(n):
        nxt = []
        pts = range(x)
        for less in out:
            for k in range(x + 1):
                for down in itertools.combinations(pts, k):
                    D = set(down)
                    if any((y, d) in less and y not in D for d in D for y in pts):
                        continue
                    rest = [p for p in pts if p not in D]
                    for j in range(len(rest) + 1):
                        for up in itertools.combinations(rest, j):
                            U = set(up)
                            if any((u, y) in less and y not in U for u in U for y in pts):
                                continue
                            if any((d, u) not in less for d in D for u in U):
                                continue
                            nxt.append(less | {(d, x) for d in D} | {(x, u) for u in U})
        out = nxt
    return out


def coloured(n, cols, less):
    rels = {f"C{i}": [(v,) for v in range(n) if cols[v] == i] for i in range(3)}
    rels["E"] = sorted(less)
    return FiniteStructure(P3_SIG, range(n), rels)


def c11():
    counts = [len(posets(n)) for n in range(6)]
    if counts != [1, 1, 3, 19, 219, 4231]:
        return False, f"poset counts {counts}"
    ok, checked = True, 0
    for n in range(1, 6):
        P = posets(n)
        # one colouring per colour multiset; relabelling points covers the rest
        for cols in itertools.combinations_with_replacement(range(3), n):
            table = {less: frozenset(p3_twist(coloured(n, cols, less)).relations["E"]) for less in P}
            # f = identity: order equal iff twist equal
            ok &= len(set(table.values())) == len(table)
            # colour-preserving bijections are generated by swaps inside a colour block,
            # and twisting commutes with each of them
            for i in range(n - 1):
                if cols[i] != cols[i + 1]:
                    continue
                sw = {v: v for v in range(n)}
                sw[i], sw[i + 1] = i + 1, i
                for less, tk in table.items():
                    checked += 1
                    img = frozenset((sw[a], sw[b]) for a, b in less)
                    ok &= table[img] == frozenset((sw[a], sw[b]) for a, b in tk)
    # small sizes straight from the statement, every pair and bijection
    direct = 0
    for n in range(1, 4):
        for cols in itertools.product(range(3), repeat=n):
            P = [coloured(n, cols, less) for less in posets(n)]
            H = [p3_twist(o) for o in P]
            for (o1, h1), (o2, h2) in itertools.product(zip(P, H), repeat=2):
                for perm in itertools.permutations(range(n)):
                    if any(cols[perm[v]] != cols[v] for v in range(n)):
                        continue
                    direct += 1
                    iso_o = {(perm[a], perm[b]) for a, b in o1.relations["E"]} == set(o2.relations["E"])
                    iso_h = {(perm[a], perm[b]) for a, b in h1.relations["E"]} == set(h2.relations["E"])
                    ok &= iso_o == iso_h
    # apex: tau(v, b) follows the colour of b, which is what twisting an
    # extra colour-0 point incomparable to everything produces
    apex = 0
    for n in range(0, 5):
        for cols in itertools.product(range(3), repeat=n):
            for less in posets(n):
                h = p3_twist(coloured(n, cols, less))
                out = p3_attach_apex(h, apex=n)
                want = p3_twist(coloured(n + 1, list(cols) + [0], less))
                apex += 1
                ok &= set(out.relations["E"]) == set(want.relations["E"])
                ok &= all(tau(out, n, b) == (0, 1, -1)[colour_of(h, b, 3)] for b in range(n))
    return ok, f"{checked} generator checks, {direct} direct bijections, {apex} apex cases"


def test_c11_twist(criterion):
    criterion(11, 30, c11)


# ---------------------------------------------------------------- 12

def _commands(tmp):
    o = tmp / "o.json"
    io.save(coloured(3, [0, 1, 2], [(0, 1)]), o)
    cyc = tmp / "cyc.json"
    w = circle.no_dense_conjugacy_witness(2)
    io.save(circle.eval_relation(LocalOrderConfig(2, w.a_points)), cyc)
    return [
        ["check-class", "--class", "w", "--input", str(fixtures.path("h4"))],
        ["check-class", "--class", "semigeneric", "--input", str(fixtures.path("cycle4"))],
        ["swir-audit", "--swir", "random-tournament", "--stage", "200"],
        ["swir-audit", "--swir", "rationals-order", "--stage", "120", "--freeness", "--mutate"],
        ["witness", "no-dense-conjugacy", "--structure", "t3", "--bound", "4"],
        ["witness", "no-dense-conjugacy", "--structure", "s3"],
        ["witness", "no-swir"],
        ["limit", "verify", "--class", "semigeneric", "--steps", "120"],
        ["auto", "commutator", "--class", "t2"],
        ["maximal-moves", "--class", "srho", "--stages", "3"],
        ["maximal-moves", "--class", "multi", "--stages", "5"],
        ["transversal", "--mode", "step2"],
        ["transversal", "--mode", "step3"],
        ["circle", "realize", "--input", str(cyc), "--n", "2"],
        ["p3", "twist", "--input", str(o)],
    ]


def c12(tmp):
    same = 0
    cmds = _commands(tmp)
    for cmd in cmds:
        outs = []
        for _ in range(2):
            p = tmp / "rep.json"
            main(["--seed", "7", "--report", str(p)] + cmd)
            outs.append(p.read_bytes())
        same += outs[0] == outs[1]
    return same == len(cmds), f"{same}/{len(cmds)} reports byte-identical on rerun"


def test_c12_determinism(criterion, tmp_path):
    criterion(12, 300, lambda: c12(tmp_path))
