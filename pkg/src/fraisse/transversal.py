"""Transversals of the semigeneric limit and the red-blue constructions.

A triple (A, T, U) is good when T and U are disjoint transversals of A
(each part of A holds exactly one point of each).  A red-blue problem over a
good triple adds one new part {r, b} with r joining T and b joining U.

The two constructions grow chains of good triples inside a LazyLimit while
a lazy automorphism g is queried; every stage is re-checked.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import partite as pt
from .limits import BudgetExhausted, ConstructionError, IdentityAuto, default_budgets
from .structures import FiniteStructure, Signature, canonical_key

RED, BLUE = 1 << 42, (1 << 42) + 1
TRIPLE_SIG = Signature((("E", 2), ("T", 1), ("U", 1)))


@dataclass(frozen=True)
class RedBlueProblem:
    D: tuple                 # the subobject (sorted host points)
    pattern: tuple           # ((x, d(r,x), d(b,x)), ...) for x in D

    def extension(self, s):
        """The red-blue extension as a structure on D + {RED, BLUE}."""
        base = s.induced(self.D)
        edges = set(base.relations["E"])
        for x, dr, db in self.pattern:
            edges.add((RED, x) if dr else (x, RED))
            edges.add((BLUE, x) if db else (x, BLUE))
        return pt.build(pt.SG_SIG, list(self.D) + [RED, BLUE], edges)


def is_good(s, A, T, U):
    """(A, T, U) with T, U disjoint transversals of A; returns a reason or None."""
    A, T, U = set(A), set(T), set(U)
    if not (T <= A and U <= A):
        return "T or U leaves A"
    if T & U:
        return "T and U meet"
    for P in pt.parts_of(s, sorted(A)):
        if len(T & set(P)) != 1 or len(U & set(P)) != 1:
            return f"part {P} does not meet T and U once"
    return None


def subobjects(s, A, T, U):
    """Subsets D of A such that (D, T|D, U|D) is good, by (|D|, D)."""
    parts = pt.parts_of(s, sorted(A))
    opts = []
    for P in parts:
        t = next(x for x in P if x in T)
        u = next(x for x in P if x in U)
        extra = [x for x in P if x not in (t, u)]
        ch = [()]
        for k in range(len(extra) + 1):
            for e in itertools.combinations(extra, k):
                ch.append((t, u) + e)
        opts.append(ch)
    out = set()
    for pick in itertools.product(*opts):
        out.add(tuple(sorted(x for c in pick for x in c)))
    return sorted(out, key=lambda D: (len(D), D))


def patterns(s, D):
    """Parity-valid orientation patterns of a new part {r, b} against D."""
    parts = pt.parts_of(s, sorted(D)) if D else []
    per_part = []
    for P in parts:
        first, rest = P[0], P[1:]
        ch = []
        for dr0, db0 in itertools.product((1, 0), repeat=2):
            for drs in itertools.product((1, 0), repeat=len(rest)):
                row = [(first, dr0, db0)]
                for x, dr in zip(rest, drs):
                    # d(r,x) + d(r,first) + d(b,x) + d(b,first) even
                    row.append((x, dr, (dr0 + db0 + dr) % 2))
                ch.append(row)
        per_part.append(ch)
    for pick in itertools.product(*per_part):
        yield tuple(sorted(x for row in pick for x in row))


def red_blue_enumerate(s, A, T, U, size_bound=None, up_to_iso=True):
    """Red-blue extensions of subobjects of (A, T, U), ordered by (|D|, D,
    pattern); with up_to_iso the labelled extensions (D + {r, b}, T + r,
    U + b) are deduplicated by an exhaustive isomorphism key."""
    out = []
    keys = set()
    for D in subobjects(s, A, T, U):
        if size_bound is not None and len(D) > size_bound:
            continue
        for pat in patterns(s, D):
            prob = RedBlueProblem(D, pat)
            if up_to_iso:
                ext = prob.extension(s)
                rels = {"E": ext.relations["E"],
                        "T": [(x,) for x in D if x in T] + [(RED,)],
                        "U": [(x,) for x in D if x in U] + [(BLUE,)]}
                k = canonical_key(FiniteStructure(TRIPLE_SIG, ext.universe, rels))
                if k in keys:
                    continue
                keys.add(k)
            out.append(prob)
    return out


def realises(s, A, T, U, prob):
    """Some r in T, b in U (inside A) form a new part over D matching the pattern."""
    D = set(prob.D)
    want = {x: (dr, db) for x, dr, db in prob.pattern}
    for r in sorted(set(T) & set(A)):
        if r in D or any(pt.perp(s, r, x) for x in D):
            continue
        for b in sorted(set(U) & set(A)):
            if b in D or not pt.perp(s, r, b) or r == b:
                continue
            if all(pt.d(s, r, x) == dr and pt.d(s, b, x) == db for x, (dr, db) in want.items()):
                return r, b
    return None


class Schedule:
    """E_n: concatenated segments; segment k lists the problems over
    subobjects of (A_k, T_k, U_k) that are not subobjects of stage k-1.
    Only a prefix is ever materialised."""

    def __init__(self, s):
        self.s = s
        self.items = [RedBlueProblem((), ())]
        self.gens = []
        self.keys = {(((), ()))}

    def add_stage(self, A, T, U, prevA):
        A, T, U, prevA = tuple(A), set(T), set(U), set(prevA)
        s = self.s

        def gen():
            for D in subobjects(s, A, T, U):
                if set(D) <= prevA:
                    continue
                for pat in patterns(s, D):
                    if (D, pat) in self.keys:
                        continue
                    self.keys.add((D, pat))
                    yield RedBlueProblem(D, pat)
        self.gens.append(gen())

    def get(self, i):
        while len(self.items) <= i:
            if not self.gens:
                raise IndexError(i)
            try:
                self.items.append(next(self.gens[0]))
            except StopIteration:
                self.gens.pop(0)
        return self.items[i]


@dataclass
class StageRecord:
    n: int
    v: int
    case: str
    A: tuple
    T: tuple
    U: tuple
    W: tuple = ()
    solved: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def as_dict(self):
        return {"n": self.n, "v": self.v, "case": self.case, "A": list(self.A), "T": list(self.T),
                "U": list(self.U), "W": list(self.W),
                "solved": [[list(p.D), [list(x) for x in p.pattern], list(rb)] for p, rb in self.solved],
                "checks": self.checks}


@dataclass
class ChainResult:
    mode: str
    stages: list
    schedule: Schedule
    schedule2: Schedule = None

    @property
    def passed(self):
        return all(all(v for v in st.checks.values()) for st in self.stages)

    def as_dict(self):
        return {"mode": self.mode, "passed": self.passed, "stages": [st.as_dict() for st in self.stages]}


# ---------------------------------------------------------------- helpers

def _fresh_in_part(limit, v):
    """A new point perp to v (so in P_v)."""
    return limit.fresh_point([v], lambda name, t: False)


def _candidates(limit, v, budget):
    host = limit.host
    yield from list(host.part_members(v))
    for _ in range(budget):
        yield _fresh_in_part(limit, v)


def _step2_ok(g, A, T, U):
    gT = {g.apply(t) for t in T}
    giU = {g.apply_inv(u) for u in U}
    A = set(A)
    return (gT & A) <= set(U) and (giU & A) <= set(T) and not (gT & giU)


def _step3_ok(g, A, U, W):
    gU = {g.apply(u) for u in U}
    giW = {g.apply_inv(w) for w in W}
    A = set(A)
    return (gU & A) <= set(W) and (giW & A) <= set(U)


def find_moved_parts(limit, g, m, window=None, budget=None):
    """m distinct parts P with gP != P, each with a certificate (w, gw)."""
    host = limit.host
    budget = default_budgets()[0] if budget is None else budget
    found = []
    seen = set()
    n = host.size if window is None else min(window, host.size)
    for w in range(n):
        if host.part[w] in seen:
            continue
        gw = g.apply(w)
        if gw != w and not pt.perp(host, w, gw):
            found.append((w, gw))
            seen.add(host.part[w])
            if len(found) >= m:
                return found
    # recipe: u, u' with u, u', gu, gu' distinct; {u, u', gu} -> w -> gu'
    tries = 0
    while len(found) < m:
        tries += 1
        if tries > budget:
            raise BudgetExhausted("find_moved_parts", {"found": len(found)})
        pool = [u for u in range(host.size) if g.apply(u) != u][:12]
        made = False
        for u, u2 in itertools.combinations(pool, 2):
            gu, gu2 = g.apply(u), g.apply(u2)
            if len({u, u2, gu, gu2}) < 4:
                continue
            base = sorted({u, u2, gu, gu2})
            if any(pt.perp(host, x, y) for x, y in itertools.combinations(base, 2)):
                continue
            ins = {u, u2, gu}

            def relfn(name, t, _ins=ins, _o=gu2):
                x = host.size - 1
                a, b = t
                if b == x:
                    return a in _ins
                return b == _o
            w = limit.fresh_point(base, relfn)
            gw = g.apply(w)
            if gw != w and not pt.perp(host, w, gw) and host.part[w] not in seen:
                found.append((w, gw))
                seen.add(host.part[w])
                made = True
                break
        if not made and not pool:
            raise ConstructionError("g fixes the window pointwise")
    return found


def support_in_part(limit, g, v, k=5, budget=None):
    """k points of P_v moved by g (fresh ones as needed)."""
    host = limit.host
    budget = default_budgets()[0] if budget is None else budget
    out = [w for w in host.part_members(v) if g.apply(w) != w]
    tries = 0
    while len(out) < k:
        tries += 1
        if tries > budget:
            raise BudgetExhausted("support_in_part")
        w = _fresh_in_part(limit, v)
        if g.apply(w) != w:
            out.append(w)
    return out[:k]


def realize_in_general_position(limit, g, U, V, ref, budget=None):
    """Realise tp(ref / U) by b with b and gb disjoint, b avoiding U, V and
    g^-1 of them, every coordinate outside the parts of U lying in a part
    P with gP != P, and gb_i in a part different from all of b U V."""
    host = limit.host
    budget = default_budgets()[0] if budget is None else budget
    U = sorted(U)
    V = set(V)
    zone = set(U) | V
    zone |= {g.apply(x) for x in list(zone)} | {g.apply_inv(x) for x in list(zone)}
    b = []
    for j, r in enumerate(ref):
        typed = {u: pt.d(host, r, u) for u in U}
        for k in range(j):
            typed[b[k]] = pt.d(host, r, ref[k])
        mate = next((z for z, val in typed.items() if val is None), None)
        for _ in range(budget):
            base = sorted(set(U) | set(b))

            def relfn(name, t, _typed=typed):
                x = host.size - 1
                a, c = t
                if a == x:
                    return _typed[c] == 1
                return _typed[a] == 0
            x = limit.fresh_point(base, relfn)
            gx = g.apply(x)
            if gx == x or gx in b or x in zone or gx in zone:
                continue
            if any(g.apply(y) == x for y in b):
                continue
            if mate is None or mate not in U:
                # new part relative to U: it must be moved and its image must
                # stay away from everything named so far
                if pt.perp(host, x, gx):
                    continue
                near = set(b) | zone | {x}
                if any(pt.perp(host, gx, z) for z in near):
                    continue
            b.append(x)
            break
        else:
            raise BudgetExhausted("realize_in_general_position", {"coordinate": j})
    return tuple(b)


def _rb_point(limit, base, vals, partner=None):
    """Fresh point over base with d(x, z) = vals[z]; perp to partner."""
    host = limit.host

    def relfn(name, t):
        x = host.size - 1
        a, c = t
        other = c if a == x else a
        if other == partner:
            return False
        want = vals[other]
        return want == 1 if a == x else want == 0
    return limit.fresh_point(sorted(base), relfn)


def _solve_rb(limit, g, At, prob, budget):
    """(r, b): a new part over At solving prob as in the construction."""
    host = limit.host
    ext = prob.extension(host)
    left = host.induced(At)
    am = pt.strong_amalgam_semigeneric(left, ext)
    zone = set(At) | {g.apply(x) for x in At} | {g.apply_inv(x) for x in At}
    rv = {z: pt.d(am, RED, z) for z in At}
    bv = {z: pt.d(am, BLUE, z) for z in At}
    for _ in range(budget):
        r = _rb_point(limit, At, rv)
        gr, gir = g.apply(r), g.apply_inv(r)
        if pt.perp(host, r, gr) or any(pt.perp(host, gr, z) or pt.perp(host, gir, z) or z in (gr, gir)
                                       for z in zone):
            continue
        for _ in range(budget):
            bv2 = dict(bv)
            b = _rb_point(limit, set(At) | {r}, bv2, partner=r)
            if g.apply(r) != g.apply_inv(b):
                return r, b
        break
    raise BudgetExhausted("red-blue problem", {"D": prob.D})


# ---------------------------------------------------------------- step 2

def generic_transversal_vs_image(limit, g, steps, budget=None):
    """Chain (A_n, T_n, U_n) with g(T_n) n A_n in U_n, g^-1(U_n) n A_n in
    T_n, g(T_n) and g^-1(U_n) disjoint; stage n absorbs v_{n-1} and solves
    the (n-1)th scheduled red-blue problem."""
    if isinstance(g, IdentityAuto) or (hasattr(g, "fwd") and all(v == w for v, w in g.fwd.items())):
        raise ConstructionError("g must not be the identity")
    host = limit.host
    budget = default_budgets()[0] if budget is None else budget
    A, T, U = [], [], []
    sched = Schedule(host)
    stages = [StageRecord(0, -1, "start", (), (), ())]
    for n in range(1, steps + 1):
        v = n - 1
        while host.size <= v:
            limit.step()
        prevA = list(A)
        case, At, Tt, Ut = _absorb2(limit, g, A, T, U, v, budget)
        prob = sched.get(n - 1)
        r, b = _solve_rb(limit, g, At, prob, budget)
        A, T, U = At + [r, b], Tt + [r], Ut + [b]
        sched.add_stage(A, T, U, prevA)
        rec = StageRecord(n, v, case, tuple(A), tuple(T), tuple(U))
        rec.solved.append((prob, (r, b)))
        rec.checks = {
            "i": set(range(n)) <= set(A),
            "ii": _step2_ok(g, A, T, U),
            "iii": _schedule_ok(host, sched, A, T, U),
            "iv": realises(host, A, T, U, prob) is not None,
            "good": is_good(host, A, T, U) is None,
            "chain": set(prevA) <= set(A),
        }
        stages.append(rec)
        if not all(rec.checks.values()):
            raise ConstructionError(f"stage {n}: {rec.checks}")
    return ChainResult("step2", stages, sched)


def _schedule_ok(s, sched, A, T, U, which="U"):
    for p in sched.items:
        if not set(p.D) <= set(A):
            return False
        if is_good(s, p.D, set(T) & set(p.D), set(U) & set(p.D)) is not None:
            return False
        if p.pattern not in set(patterns(s, p.D)):
            return False
    return True


def _absorb2(limit, g, A, T, U, v, budget):
    host = limit.host
    if v in A:
        return "inside", list(A), list(T), list(U)
    P = set(host.part_members(v))
    if P & set(A):
        return "old-part", A + [v], list(T), list(U)
    gv = g.apply(v)
    if pt.perp(host, v, gv):
        # gP = P: w in P moved by g, w into T and gw into U
        for w in _candidates(limit, v, budget):
            gw = g.apply(w)
            if gw == w:
                continue
            At = _uniq(A + [v, w, gw])
            if _step2_ok(g, At, T + [w], U + [gw]):
                return "fixed-part", At, T + [w], U + [gw]
        raise BudgetExhausted("absorb (gP = P)", {"v": v})
    # gP != P: prefer r in g^-1(U), b in g(T), as in the construction
    giU = [x for x in (g.apply_inv(u) for u in U) if x in P]
    gT = [x for x in (g.apply(t) for t in T) if x in P]
    members = list(host.part_members(v))
    rs = giU + [x for x in members if x not in giU]
    bs = gT + [x for x in members if x not in gT]
    fresh = []
    for k in range(budget):
        for r in rs + fresh:
            for b in bs + fresh:
                if r == b:
                    continue
                At = _uniq(A + [v, r, b])
                if _step2_ok(g, At, T + [r], U + [b]):
                    return "moved-part", At, T + [r], U + [b]
        fresh.append(_fresh_in_part(limit, v))
    raise BudgetExhausted("absorb (gP != P)", {"v": v})


def _uniq(xs):
    return list(dict.fromkeys(xs))


# ---------------------------------------------------------------- step 3

def double_transversal(limit, g, steps, budget=None):
    """Chains (A_n, T_n, U_n), (A_n, T_n, W_n) with g(U_n) n A_n in W_n and
    g^-1(W_n) n A_n in U_n, both red-blue schedules advanced each stage."""
    if isinstance(g, IdentityAuto) or (hasattr(g, "fwd") and all(v == w for v, w in g.fwd.items())):
        raise ConstructionError("g must not be the identity")
    host = limit.host
    budget = default_budgets()[0] if budget is None else budget
    A, T, U, W = [], [], [], []
    E, E2 = Schedule(host), Schedule(host)
    stages = [StageRecord(0, -1, "start", (), (), (), ())]
    for n in range(1, steps + 1):
        v = n - 1
        while host.size <= v:
            limit.step()
        prevA = list(A)
        case, A, T, U, W = _absorb3(limit, g, A, T, U, W, v, budget)
        # problem from E over (A, T, U)
        prob = E.get(n - 1)
        r, b = _solve_rb(limit, g, A, prob, budget)
        bp = None
        for cand in [b] + [x for x in host.part_members(r) if x not in (r, b)] + [None] * budget:
            if cand is None:
                cand = _fresh_in_part(limit, r)
            if cand != r and g.apply_inv(cand) != g.apply(b) and \
                    _step3_ok(g, _uniq(A + [r, b, cand]), U + [b], W + [cand]):
                bp = cand
                break
        if bp is None:
            raise BudgetExhausted("b' for E", {"stage": n})
        A, T, U, W = _uniq(A + [r, b, bp]), T + [r], U + [b], W + [bp]
        # problem from E' over (A, T, W)
        prob2 = E2.get(n - 1)
        r2, b2p = _solve_rb(limit, g, A, prob2, budget)
        b2 = None
        for cand in [b2p] + [x for x in host.part_members(r2) if x not in (r2, b2p)] + [None] * budget:
            if cand is None:
                cand = _fresh_in_part(limit, r2)
            if cand != r2 and g.apply(cand) != g.apply_inv(b2p) and \
                    _step3_ok(g, _uniq(A + [r2, b2p, cand]), U + [cand], W + [b2p]):
                b2 = cand
                break
        if b2 is None:
            raise BudgetExhausted("b for E'", {"stage": n})
        A, T, U, W = _uniq(A + [r2, b2, b2p]), T + [r2], U + [b2], W + [b2p]
        E.add_stage(A, T, U, prevA)
        E2.add_stage(A, T, W, prevA)
        rec = StageRecord(n, v, case, tuple(A), tuple(T), tuple(U), tuple(W))
        rec.solved.append((prob, (r, b)))
        rec.solved.append((prob2, (r2, b2p)))
        rec.checks = {
            "i": set(range(n)) <= set(A),
            "ii": _step3_ok(g, A, U, W),
            "iii": _schedule_ok(host, E, A, T, U) and _schedule_ok(host, E2, A, T, W),
            "iv": realises(host, A, T, U, prob) is not None and realises(host, A, T, W, prob2) is not None,
            "good": is_good(host, A, T, U) is None and is_good(host, A, T, W) is None,
            "chain": set(prevA) <= set(A),
        }
        stages.append(rec)
        if not all(rec.checks.values()):
            raise ConstructionError(f"stage {n}: {rec.checks}")
    return ChainResult("step3", stages, E, E2)


def _absorb3(limit, g, A, T, U, W, v, budget):
    host = limit.host
    if v in A:
        return "inside", list(A), list(T), list(U), list(W)
    P = set(host.part_members(v))
    if P & set(A):
        return "old-part", A + [v], list(T), list(U), list(W)
    gv = g.apply(v)
    members = list(host.part_members(v))
    fresh = []
    if pt.perp(host, v, gv):
        # gP = P: b in P, b' = gb, r another point of P
        for k in range(budget):
            for b in members + fresh:
                bp = g.apply(b)
                for r in members + fresh:
                    if r in (b, bp):
                        continue
                    At = _uniq(A + [v, r, b, bp])
                    if _step3_ok(g, At, U + [b], W + [bp]):
                        return "fixed-part", At, T + [r], U + [b], W + [bp]
            fresh.append(_fresh_in_part(limit, v))
        raise BudgetExhausted("absorb (gP = P)", {"v": v})
    giW = [x for x in (g.apply_inv(w) for w in W) if x in P]
    gU = [x for x in (g.apply(u) for u in U) if x in P]
    for k in range(budget):
        bs = giW + [x for x in members + fresh if x not in giW]
        bps = gU + [x for x in members + fresh if x not in gU]
        for b in bs:
            for bp in bps:
                for r in members + fresh:
                    if r in (b, bp):
                        continue
                    At = _uniq(A + [v, r, b, bp])
                    if _step3_ok(g, At, U + [b], W + [bp]):
                        return "moved-part", At, T + [r], U + [b], W + [bp]
        fresh.append(_fresh_in_part(limit, v))
    raise BudgetExhausted("absorb (gP != P)", {"v": v})
