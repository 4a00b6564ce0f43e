"""Lazy Fraisse limits, lazy automorphisms and the commutator constructions.

A LazyLimit wraps a host (see classes.py) and a FIFO of extension problems.
One step adds one point, solving the earliest problem the host does not
already realise.  Automorphisms are partial maps on the host that grow by
back-and-forth: the image of a new point is the least existing realisation
of the transported type, or a fresh point when there is none.
"""
from __future__ import annotations

import itertools
import os
from collections import deque
from dataclasses import dataclass, field

from . import partite as pt
from .independence import get_predicate
from .structures import (FiniteStructure, StructureError, closure_of,
                         enumerate_embeddings, qftp)

QUERY_BUDGET = 64
CONSTRUCTION_BUDGET = 4096


def default_budgets():
    """(per query, per construction); FRAISSE_BUDGET="q" or "q,c" overrides."""
    raw = os.environ.get("FRAISSE_BUDGET")
    if not raw:
        return QUERY_BUDGET, CONSTRUCTION_BUDGET
    parts = [int(x) for x in raw.split(",")]
    if len(parts) == 1:
        return parts[0], max(parts[0], CONSTRUCTION_BUDGET)
    return parts[0], parts[1]


class BudgetExhausted(RuntimeError):
    def __init__(self, what, detail=None):
        super().__init__(f"budget exhausted: {what}")
        self.what = what
        self.detail = detail


class ConstructionError(RuntimeError):
    pass


# ---------------------------------------------------------------- matching

def _bfs_new(s, start, known):
    """Points reached from start by the functions of s, not in known,
    in breadth-first order (start first)."""
    out = [start]
    seen = set(known) | {start}
    todo = deque([start])
    fs = s.signature.functions
    while todo:
        v = todo.popleft()
        for f in fs:
            w = s.func(f, v)
            if w not in seen:
                seen.add(w)
                out.append(w)
                todo.append(w)
    return out


def _relations_agree(src, dst, m, new):
    """Compare every tuple over dom(m) that contains a point of `new`."""
    pts = list(m)
    newset = set(new)
    order = {v: i for i, v in enumerate(pts)}
    for name in src.signature.relation_names:
        r = src.signature.arity(name)
        for combo in itertools.combinations(pts, r):
            if not newset.intersection(combo):
                continue
            for t in itertools.permutations(combo):
                if src.holds(name, t) != dst.holds(name, tuple(m[x] for x in t)):
                    return False
    return True


def extend_match(src, dst, m, v, w):
    """If m + (closure of v -> closure of w) is a partial isomorphism, return
    the added pairs as a dict, else None.  m must be closed and injective."""
    S = _bfs_new(src, v, m)
    img = set(m.values())
    if w in img:
        return None
    W = _bfs_new(dst, w, img)
    if len(S) != len(W):
        return None
    new = dict(zip(S, W))
    full = dict(m)
    full.update(new)
    for f in src.signature.functions:
        for s in S:
            if full.get(src.func(f, s)) != dst.func(f, full[s]):
                return None
    if len(S) == 1 and src is dst and hasattr(dst, "fast_match"):
        return new if dst.fast_match(v, list(m), w, m) else None
    if _relations_agree_fast(src, dst, full, S):
        return new
    return None


def _relations_agree_fast(src, dst, full, S):
    # tuples touching S; only combinations with a new point are scanned
    pts = list(full)
    Sset = set(S)
    for name in src.signature.relation_names:
        r = src.signature.arity(name)
        others = [p for p in pts if p not in Sset]
        for k in range(1, min(r, len(S)) + 1):
            for news in itertools.combinations(S, k):
                for olds in itertools.combinations(others, r - k):
                    for t in itertools.permutations(news + olds):
                        if src.holds(name, t) != dst.holds(name, tuple(full[x] for x in t)):
                            return False
    return True


# ---------------------------------------------------------------- the limit

@dataclass
class ExtensionProblem:
    base: tuple
    ext: FiniteStructure
    gen: int

    def target(self):
        return qftp(self.ext, (self.gen,), self.base)


SENTINEL = 1 << 40


class LazyLimit:
    def __init__(self, spec, seed=0, max_base=2, widen_cap=4, widen_window=8):
        self.spec = spec
        self.seed = seed
        self.max_base = max_base
        self.base_size = max_base
        self._done = {}
        self.widen_cap = widen_cap
        self.widen_window = widen_window
        self.host = spec.make_host(seed)
        self.queue = deque()
        self.seen_bases = set()
        self.next_point = 0
        self.stage = 0
        self.log = []
        self.extensions = 0
        self._enqueue_base(())

    # -- schedule
    def _enqueue_base(self, X):
        X = tuple(sorted(X))
        if X in self.seen_bases:
            return
        self.seen_bases.add(X)
        base = self.host.induced(X)
        for ext, gen in self.spec.one_point_extensions(base, new_id=SENTINEL):
            self.queue.append(ExtensionProblem(X, ext, gen))

    def _enqueue_point(self, m):
        earlier = range(m)
        done = self._done.setdefault(m, set())
        for k in range(0, self.max_base):
            if k in done or (k >= self.base_size and m >= self.widen_window):
                continue
            done.add(k)
            for S in itertools.combinations(earlier, k):
                self._enqueue_base(closure_of(self.host, S + (m,)))

    def problems_for(self, X):
        X = tuple(closure_of(self.host, X))
        return [ExtensionProblem(X, ext, gen)
                for ext, gen in self.spec.one_point_extensions(self.host.induced(X), new_id=SENTINEL)]

    # -- realisation
    def find_realization(self, base, ext, gen, exclude=()):
        base = tuple(base)
        m = {b: b for b in base}
        skip = set(exclude) | set(base)
        if not ext.signature.functions:
            pats = self._patterns(base, ext, gen)
            holds = self.host.holds
            for y in range(self.host.size):
                if y in skip:
                    continue
                if all(holds(name, tuple(y if x == gen else x for x in t)) == v for name, t, v in pats):
                    return y
            return None
        for y in range(self.host.size):
            if y in skip:
                continue
            if extend_match(ext, self.host, m, gen, y) is not None:
                return y
        return None

    def _patterns(self, base, ext, gen):
        alt = getattr(self.host, "alternating", False)
        out = []
        for name in ext.signature.relation_names:
            r = ext.signature.arity(name)
            for combo in itertools.combinations(base, r - 1):
                if alt:
                    out.append((name, combo + (gen,), ext.holds(name, combo + (gen,))))
                    continue
                for t in itertools.permutations(combo + (gen,)):
                    out.append((name, t, ext.holds(name, t)))
        return out

    def realize(self, base, ext):
        to_host = self.host.add_structure(ext, base)
        self.extensions += 1
        self._check_incremental([to_host[v] for v in ext.universe if v not in set(base)], base)
        return to_host

    def _check_incremental(self, new, base):
        pts = set(new) | set(base)
        extra = [v for v in range(max(0, self.host.size - 8), self.host.size)]
        pts |= set(extra)
        pts = closure_of(self.host, pts)
        if len(pts) > 14:
            pts = closure_of(self.host, set(new) | set(base) | set(extra[-3:]))
        bad = self.spec.check(self.host.induced(pts))
        if bad is not None:
            raise AssertionError(f"limit left its class at stage {self.stage}: {bad}")

    def step(self):
        """Add one point for the earliest unrealised problem.  Returns the
        solved problem, or None if nothing was pending."""
        while True:
            if not self.queue:
                if self.next_point >= self.host.size:
                    # everything scheduled is realised: widen the bases
                    # (larger bases only inside the first widen_window points)
                    if self.max_base >= min(self.host.size, self.widen_window) or self.max_base >= self.widen_cap:
                        return None
                    self.max_base += 1
                    self.next_point = 0
                    continue
                self._enqueue_point(self.next_point)
                self.next_point += 1
                continue
            p = self.queue.popleft()
            if self.find_realization(p.base, p.ext, p.gen) is not None:
                continue
            to_host = self.realize(p.base, p.ext)
            self.stage += 1
            self.log.append((self.stage, p.base, to_host[p.gen]))
            return p

    def run(self, steps):
        for _ in range(steps):
            if self.step() is None:
                break
        return self

    # -- views
    @property
    def size(self):
        return self.host.size

    def window(self, k=None):
        k = self.host.size if k is None else min(k, self.host.size)
        return self.host.induced(range(k))

    def fresh_point(self, base, relfn, funcs=None):
        """Add one point over the closed set base; relfn decides its
        relations to base.  Returns its id."""
        self.extensions += 1
        (x,) = self.host.add_points(base, 1, relfn, funcs)
        return x


def build(spec, steps, seed=0, max_base=2):
    return LazyLimit(spec, seed, max_base).run(steps)


@dataclass
class ExtensionReport:
    k: int
    window: int
    bases: int = 0
    problems: int = 0
    realized_existing: int = 0
    realized_by_extension: int = 0
    failures: list = field(default_factory=list)
    budget: int = 0

    @property
    def passed(self):
        return not self.failures

    def as_dict(self):
        return {"k": self.k, "window": self.window, "bases": self.bases, "problems": self.problems,
                "realized_existing": self.realized_existing,
                "realized_by_extension": self.realized_by_extension,
                "failures": [list(f) for f in self.failures], "budget": self.budget,
                "passed": self.passed}


def verify_extension_property(limit, k, budget=None, window=8):
    """Every one-point extension of every base of size <= k inside the first
    `window` points is realised in the host, or gets realised within
    `budget` further points."""
    budget = default_budgets()[1] if budget is None else budget
    rep = ExtensionReport(k, window, budget=budget)
    w = min(window, limit.size)
    bases = set()
    for size in range(0, k + 1):
        for S in itertools.combinations(range(w), size):
            bases.add(tuple(closure_of(limit.host, S)))
    used = 0
    for X in sorted(bases, key=lambda b: (len(b), b)):
        rep.bases += 1
        for p in limit.problems_for(X):
            rep.problems += 1
            if limit.find_realization(p.base, p.ext, p.gen) is not None:
                rep.realized_existing += 1
                continue
            if used >= budget:
                rep.failures.append((X, "budget"))
                continue
            to_host = limit.realize(p.base, p.ext)
            used += 1
            y = to_host[p.gen]
            if extend_match(p.ext, limit.host, {b: b for b in p.base}, p.gen, y) is None:
                rep.failures.append((X, "realisation does not match"))
            else:
                rep.realized_by_extension += 1
    return rep


# ---------------------------------------------------------------- automorphisms

class Auto:
    """Common interface: apply, apply_inv."""

    def __call__(self, v):
        return self.apply(v)

    def apply_all(self, vs):
        return tuple(self.apply(v) for v in vs)

    def apply_inv_all(self, vs):
        return tuple(self.apply_inv(v) for v in vs)


class IdentityAuto(Auto):
    def __init__(self, limit):
        self.limit = limit
        self.host = limit.host

    def apply(self, v):
        return v

    def apply_inv(self, v):
        return v


class LazyAutomorphism(Auto):
    def __init__(self, limit, seed_map=None, budget=None, name="g"):
        self.limit = limit
        self.host = limit.host
        self.fwd = {}
        self.bwd = {}
        self.name = name
        self.budget = default_budgets()[0] if budget is None else budget
        self.extensions = 0
        if seed_map:
            self.set_pairs(seed_map)

    def __repr__(self):
        return f"LazyAutomorphism({self.name}, {len(self.fwd)} points)"

    def set_pairs(self, mapping):
        """Add explicit pairs (closure included by the caller); each pair is
        checked against everything already defined."""
        items = [(v, w) for v, w in mapping.items() if v not in self.fwd]
        for v, w in items:
            if w in self.bwd:
                raise StructureError(f"{w} already has a preimage")
        m = dict(self.fwd)
        for v, w in items:
            m[v] = w
        for i, (v, w) in enumerate(items):
            part = dict(self.fwd)
            part.update(dict(items[:i]))
            full = dict(part)
            full[v] = w
            for f in self.host.signature.functions:
                fv = self.host.func(f, v)
                if fv in m and m[fv] != self.host.func(f, w):
                    raise StructureError(f"{f} not respected at {v}")
            if not _relations_agree_fast(self.host, self.host, full, [v]):
                raise StructureError(f"pair {v}->{w} does not extend the map")
        for v, w in items:
            self.fwd[v] = w
            self.bwd[w] = v

    def apply(self, v):
        if v in self.fwd:
            return self.fwd[v]
        self._extend(self.fwd, self.bwd, v)
        return self.fwd[v]

    def apply_inv(self, w):
        if w in self.bwd:
            return self.bwd[w]
        self._extend(self.bwd, self.fwd, w)
        return self.bwd[w]

    def _extend(self, mp, inv, v):
        host = self.host
        if v not in host:
            raise StructureError(f"unknown element {v}")
        S = _bfs_new(host, v, mp)
        img = set(mp.values())
        for w in range(host.size):
            if w in img:
                continue
            new = extend_match(host, host, mp, v, w)
            if new is not None:
                for a, b in new.items():
                    mp[a] = b
                    inv[b] = a
                return
        if self.extensions >= self.budget:
            raise BudgetExhausted(f"{self.name}: image of {v}", {"point": v})
        self.extensions += 1
        base = sorted(img)
        start = host.size
        ids = {s: start + i for i, s in enumerate(S)}

        def back(x):
            if x in inv:
                return inv[x]
            for s, i in ids.items():
                if i == x:
                    return s
            raise KeyError(x)

        def relfn(name, tup):
            return host.holds(name, tuple(back(x) for x in tup))

        funcs = {}
        for f in host.signature.functions:
            funcs[f] = {}
            for s in S:
                fs = host.func(f, s)
                funcs[f][ids[s]] = mp[fs] if fs in mp else ids[fs]
        self.limit.extensions += 1
        host.add_points(base, len(S), relfn, funcs)
        for s in S:
            mp[s] = ids[s]
            inv[ids[s]] = s

    def check_coherent(self):
        for v, w in self.fwd.items():
            if self.bwd.get(w) != v:
                return False
        return len(self.fwd) == len(self.bwd)


class Word(Auto):
    def __init__(self, fn, fn_inv, label):
        self._f = fn
        self._g = fn_inv
        self.label = label

    def apply(self, v):
        return self._f(v)

    def apply_inv(self, v):
        return self._g(v)

    def __repr__(self):
        return f"Word({self.label})"


def lazy_apply(g, v):
    return g.apply(v)


def lazy_invert(g):
    return Word(g.apply_inv, g.apply, f"{_label(g)}^-1")


def lazy_compose(g, h):
    """g after h."""
    return Word(lambda v: g.apply(h.apply(v)), lambda v: h.apply_inv(g.apply_inv(v)),
                f"{_label(g)}{_label(h)}")


def lazy_commutator(g, h):
    """[g, h] = g^-1 h^-1 g h."""
    return lazy_compose(lazy_invert(g), lazy_compose(lazy_invert(h), lazy_compose(g, h)))


def _label(g):
    return getattr(g, "label", None) or getattr(g, "name", "?")


# ---------------------------------------------------------------- types by reference

def transported_realization_relfn(host, src_map, ref, ids):
    """relfn for fresh points realising the type of `ref` over dom(src_map)
    transported by src_map.  ids: ref point -> new host id."""
    back = {w: v for v, w in src_map.items()}
    for r, i in ids.items():
        back[i] = r

    def relfn(name, tup):
        return host.holds(name, tuple(back[x] for x in tup))
    return relfn


def realize_type_fresh(limit, params_map, ref):
    """Fresh realisation of tp(ref / dom(params_map)) moved by params_map.
    ref must be closed over dom(params_map).  Returns the new tuple."""
    host = limit.host
    S = []
    for r in ref:
        for x in _bfs_new(host, r, set(params_map) | set(S)):
            if x not in S and x not in params_map:
                S.append(x)
    start = host.size
    ids = {s: start + i for i, s in enumerate(S)}
    relfn = transported_realization_relfn(host, params_map, ref, ids)
    funcs = {}
    for f in host.signature.functions:
        funcs[f] = {}
        for s in S:
            fs = host.func(f, s)
            funcs[f][ids[s]] = params_map[fs] if fs in params_map else ids[fs]
    limit.extensions += 1
    host.add_points(sorted(set(params_map.values())), len(S), relfn, funcs)
    return tuple(ids[r] if r in ids else params_map[r] for r in ref)


def realizations(limit, params_map, ref, exclude=(), existing=True):
    """Existing tuples c with params_map + (ref -> c) a partial iso (closed
    under functions), in lexicographic order."""
    host = limit.host
    used = set(params_map.values()) | set(exclude)

    def rec(i, m):
        if i == len(ref):
            yield tuple(m[r] for r in ref)
            return
        r = ref[i]
        if r in m:
            yield from rec(i + 1, m)
            return
        for y in range(host.size):
            if y in used or y in m.values():
                continue
            new = extend_match(host, host, m, r, y)
            if new is None or set(new.values()) & used:
                continue
            m2 = dict(m)
            m2.update(new)
            yield from rec(i + 1, m2)

    if existing:
        yield from rec(0, dict(params_map))


def realisation_disjoint(limit, g, V, A, ref, budget=None):
    """Realisation b of tp(ref / A) with b and g(b) disjoint and both
    avoiding V.  Coordinates are fixed one at a time as in the induction:
    first any realisation avoiding the forbidden set, then if g fixes it,
    fresh realisations of its type over the enlarged set until one moves."""
    host = limit.host
    budget = default_budgets()[0] if budget is None else budget
    A = tuple(closure_of(host, A))
    m = {a: a for a in A}
    b = []
    V = set(V)
    tries = 0
    for i, r in enumerate(ref):
        if r in m:
            b.append(m[r])
            continue
        if r in ref[:i]:
            b.append(b[ref.index(r)])
            continue
        forbid = set(V) | {g.apply(x) for x in b} | {g.apply_inv(x) for x in b} \
            | {g.apply_inv(x) for x in V} | set(b)
        # c realising the type over A + b so far, outside forbid
        chosen = None
        for cand in _one_point_candidates(limit, m, r):
            c = cand[r]
            if set(cand.values()) & forbid:
                continue
            gc = g.apply(c)
            if gc == c or gc in V or gc in b or c in [g.apply(x) for x in b]:
                continue
            chosen = cand
            break
        while chosen is None:
            tries += 1
            if tries > budget:
                raise BudgetExhausted("realisation_disjoint", {"coordinate": i})
            cand = _fresh_one_point(limit, m, r)
            c = cand[r]
            gc = g.apply(c)
            if gc == c or gc in V or gc in b or c in [g.apply(x) for x in b]:
                continue
            chosen = cand
        m.update(chosen)
        b.append(chosen[r])
    return tuple(b)


def _one_point_candidates(limit, m, r, cap=400):
    host = limit.host
    used = set(m.values())
    n = 0
    for y in range(host.size):
        if y in used:
            continue
        new = extend_match(host, host, m, r, y)
        if new is not None and not (set(new.values()) & used):
            yield new
            n += 1
            if n >= cap:
                return


def _fresh_one_point(limit, m, r):
    host = limit.host
    S = _bfs_new(host, r, m)
    start = host.size
    ids = {s: start + i for i, s in enumerate(S)}
    relfn = transported_realization_relfn(host, m, S, ids)
    funcs = {}
    for f in host.signature.functions:
        funcs[f] = {}
        for s in S:
            fs = host.func(f, s)
            funcs[f][ids[s]] = m[fs] if fs in m else ids[fs]
    limit.extensions += 1
    host.add_points(sorted(set(m.values())), len(S), relfn, funcs)
    return {s: ids[s] for s in S}


# ---------------------------------------------------------------- type windows

def exterior_types(limit, window=4, max_params=2, max_len=2, count=None):
    """Representatives (A, ref) of exterior types over subsets of the first
    `window` points, ordered by (|A|, |x|, A, code).  ref is a tuple of host
    points outside A, closed over A.  Stops after `count` types."""
    host = limit.host
    w = min(window, host.size)
    out = []
    seen = set()
    pool = list(range(min(host.size, 40)))
    for k in range(0, max_params + 1):
        for L in range(1, max_len + 1):
            for S in itertools.combinations(range(w), k):
                A = tuple(closure_of(host, S))
                if len(A) != len(set(S)) and host.signature.functions and len(A) > max_params + 2:
                    continue
                found = []
                for ref in itertools.permutations([v for v in pool if v not in A], L):
                    if set(closure_of(host, set(A) | set(ref))) != set(A) | set(ref):
                        continue
                    t = qftp(host, ref, A)
                    if (A, t) in seen:
                        continue
                    seen.add((A, t))
                    found.append((_type_code(t), A, ref))
                found.sort()
                out.extend((A, ref) for _, A, ref in found)
                if count is not None and len(out) >= count:
                    return out[:count]
    return out


def _type_code(t):
    return (sorted(map(repr, t.relations)), sorted(map(repr, t.functions)))


# ---------------------------------------------------------------- commutators

@dataclass
class Witness:
    stage: int
    kind: str            # "R" or "L"
    A: tuple
    b: tuple
    image: tuple         # f(b) for R, f^-1(b) or f(b') for L
    c: tuple = ()
    d: tuple = ()
    check: bool = False


@dataclass
class CommutatorResult:
    g: object
    h: LazyAutomorphism
    f: object
    witnesses: list
    types: list
    pred: object

    def revalidate(self):
        host = self.h.host
        for w in self.witnesses:
            if w.kind == "R":
                ok = self.pred.eval(host, w.A, w.b, w.image)
                again = self.f.apply_all(w.b) == w.image
            else:
                ok = self.pred.eval(host, w.A, w.image, w.b)
                if self.pred.kind == "srho":
                    again = self.f.apply_all(w.b) == w.image
                else:
                    again = self.f.apply_inv_all(w.b) == w.image
            if not (ok and again):
                return False
        return True


def _ensure_h(h, g, A, v):
    h.apply(v)
    h.apply_inv(v)
    for a in A:
        h.apply(g.apply(a))
        ha = h.apply(a)
        h.apply_inv(g.apply(ha))


def _pulled_back(host, phi_inv_of, image_pts, extra_src, first_id):
    """Structure on dom(phi) + fresh ids, isomorphic to host on
    image_pts + extra_src via phi^-1 (for image_pts) and fresh ids (extra)."""
    pts = list(image_pts) + list(extra_src)
    ren = {}
    for p in image_pts:
        ren[p] = phi_inv_of[p]
    for i, p in enumerate(extra_src):
        ren[p] = first_id + i
    s = host.induced(pts)
    return s.rename(ren), ren


def free_swir_commutator(limit, g, stages, pred_kind="delta", window=4, budget=None):
    """Build h stage by stage so that [g,h] moves the first `stages`
    exterior types almost R-maximally and [g,h]^-1 almost L-maximally."""
    host = limit.host
    if isinstance(g, IdentityAuto):
        raise ConstructionError("g must not be the identity")
    pred = get_predicate(pred_kind, spec=getattr(limit.spec, "spec", None))
    types = exterior_types(limit, window=window, count=stages)
    if len(types) < stages:
        raise ConstructionError("not enough exterior types in the window")
    h = LazyAutomorphism(limit, name="h", budget=budget or 10 ** 6)
    f = lazy_commutator(g, h)
    wit = []
    for i, (A, ref) in enumerate(types):
        _ensure_h(h, g, A, i)
        U = sorted(h.fwd)
        V = set(U) | {g.apply_inv(u) for u in U}
        b = realisation_disjoint(limit, g, V, A, ref)
        # c realises h . tp(b / U)
        hU = {u: h.fwd[u] for u in U}
        V2 = {g.apply_inv(x) for x in hU.values()}
        c = realisation_disjoint_map(limit, g, V2, hU, b)
        h.set_pairs(dict(zip(b, c)))
        gb = g.apply_all(b)
        gc = g.apply_all(c)
        Ub = sorted(set(U) | set(b))
        left = host.induced(set(Ub) | set(gb))
        phi_inv = {h.fwd[x]: x for x in Ub}
        img_pts = [h.fwd[x] for x in Ub]
        extra = [x for x in closure_of(host, set(img_pts) | set(gc)) if x not in set(img_pts)]
        right, ren = _pulled_back(host, phi_inv, img_pts, extra, SENTINEL)
        amal = limit.spec.amalgamate(left, right)
        to_host = limit.realize(sorted(left.universe), amal)
        dmap = {to_host[ren[x]]: x for x in extra}
        h.set_pairs(dmap)
        d = tuple(to_host[ren[x]] for x in gc)
        fb = f.apply_all(b)
        finv_b = f.apply_inv_all(b)
        okR = pred.eval(host, A, b, fb)
        okL = pred.eval(host, A, finv_b, b)
        wit.append(Witness(i, "R", A, b, fb, c, d, okR))
        wit.append(Witness(i, "L", A, b, finv_b, c, d, okL))
        if not (okR and okL):
            raise ConstructionError(f"stage {i}: independence not reached")
    return CommutatorResult(g, h, f, wit, types, pred)


def realisation_disjoint_map(limit, g, V, params_map, ref, budget=None):
    """Realisation c of params_map . tp(ref / dom(params_map)) with c and
    g(c) disjoint and c avoiding V (fresh points, retried until moved)."""
    budget = default_budgets()[0] if budget is None else budget
    for _ in range(budget):
        c = realize_type_fresh(limit, params_map, ref)
        gc = g.apply_all(c)
        if set(c) & set(gc) or set(c) & set(V):
            continue
        return c
    raise BudgetExhausted("realisation of transported type")


# ---- the rho-expansion version

def _srho_fresh(limit, Z, ref_map, pref, funcs):
    """Fresh point x over closed Z with d(x, z) for typed z given by
    ref_map (value 1/0/None) and, for other z, the preferred value pref(z)
    adjusted per part so that the parity condition holds."""
    host = limit.host
    d = lambda u, v: pt.d(host, u, v)
    mate = next((z for z, val in ref_map.items() if val is None), None)
    vals = dict(ref_map)
    rest = [z for z in Z if z not in vals]
    parts = {}
    for z in rest:
        parts.setdefault(host.part[z], []).append(z)
    for pid, members in parts.items():
        typed = [z for z, val in ref_map.items() if val is not None and host.part[z] == pid]
        if mate is None:
            for z in members:
                vals[z] = pref(z)
            continue
        if mate is not None and host.part[mate] == pid:
            for z in members:
                vals[z] = None
            continue
        if typed:
            kappa = ref_map[typed[0]] ^ d(mate, typed[0])
        else:
            anchor = sorted(members, key=lambda z: (0 if pref(z, strong=True) is not None else 1, z))[0]
            kappa = pref(anchor) ^ d(mate, anchor)
        for z in members:
            vals[z] = d(mate, z) ^ kappa

    def relfn(name, tup):
        u, v = tup
        x = host.size - 1
        if u == x:
            return vals[v] == 1
        return vals[u] == 0

    base = sorted(Z)
    (x,) = host.add_points(base, 1, relfn, funcs)
    limit.extensions += 1
    return x


def srho_commutator(limit, g, stages, window=4, budget=None, attempts=12):
    """Alternating stages: even stages give b with b indep_A [g,h] b, odd
    stages give b' with [g,h] b' indep_A b'."""
    host = limit.host
    if isinstance(g, IdentityAuto):
        raise ConstructionError("g must not be the identity")
    pred = get_predicate("srho")
    types = exterior_types(limit, window=window, count=stages)
    if len(types) < stages:
        raise ConstructionError("not enough exterior types in the window")
    h = LazyAutomorphism(limit, name="h", budget=budget or 10 ** 6)
    f = lazy_commutator(g, h)
    wit = []
    rho = lambda v: host.func("rho", v)
    for i, (A, ref) in enumerate(types):
        for kind in ("R", "L"):
            stage = 2 * i + (0 if kind == "R" else 1)
            # (alpha)
            _ensure_h(h, g, A, i)
            fA = [f.apply(a) for a in A]
            fiA = [f.apply_inv(a) for a in A]
            for x in list(A) + fA + fiA:
                h.apply(x)
            for x in list(A) + fA:
                h.apply(g.apply(x))
            ok = False
            for attempt in range(attempts):
                U = sorted(h.fwd)
                b = _srho_b(limit, g, f, A, ref, U, kind)
                if b is None:
                    continue
                res = _srho_finish(limit, g, h, f, A, U, b, kind)
                if res is None:
                    continue
                c, d, image, good = res
                if good:
                    wit.append(Witness(stage, kind, tuple(A), b, image, c, d, True))
                    ok = True
                    break
            if not ok:
                raise ConstructionError(f"stage {stage}: no witness after {attempts} attempts")
    return CommutatorResult(g, h, f, wit, types, pred)


def _srho_b(limit, g, f, A, ref, U, kind):
    """Fresh b realising tp(ref / A), (beta)-conditions as defaults."""
    host = limit.host
    d = lambda u, v: pt.d(host, u, v)
    rho = lambda v: host.func("rho", v)
    Aset = set(A)
    PA = {host.part[a] for a in A}
    fiA_parts = {host.part[f.apply_inv(a)] for a in A}
    Ug = set(U) | {g.apply_inv(u) for u in U}
    Z = sorted(closure_of(host, Ug | Aset))
    built = {}
    # representatives first, so rho of every coordinate is already placed
    order = sorted(dict.fromkeys(ref), key=lambda r: (rho(r) != r, ref.index(r)))
    for r in order:
        typed = {}
        for a in A:
            typed[a] = d(r, a)
        for r2, x2 in built.items():
            typed[x2] = d(r, r2)
        in_PA = host.part[r] in PA
        targets = set()
        if not in_PA:
            for rp in ref:
                if host.part[rp] in PA and host.part[rp] not in fiA_parts:
                    targets.add(f.apply(rho(rp)))

        def pref(z, strong=False, _r=r, _in=in_PA, _t=targets):
            if z in _t:
                return 1 if kind == "R" else 0
            if strong:
                return None
            if _in:
                return d(rho(_r), z) if host.part[z] not in PA else d(_r, rho(z)) if rho(z) in Aset else 1
            if host.part[z] in PA and rho(z) in Aset:
                return d(_r, rho(z))
            return 1
        rr = rho(r)
        if rr in Aset:
            fv = rr
        elif rr in built:
            fv = built[rr]
        elif rr == r:
            fv = None
        else:
            return None
        x_id = host.size
        funcs = {"rho": {x_id: fv if fv is not None else x_id}}
        if "sigma" in host.signature.functions:
            return None
        built[r] = _srho_fresh(limit, Z + sorted(built.values()), typed, pref, funcs)
    b = [built[r] for r in ref]
    gb = g.apply_all(b)
    if set(b) & set(gb):
        return None
    # b outside P_A must avoid the parts of U, g^-1 U and g^-1 b
    gib = {g.apply_inv(x) for x in b}
    avoid = {host.part[x] for x in Ug | gib}
    for x in b:
        if host.part[x] not in PA and host.part[x] in avoid:
            return None
    return tuple(b)


def _srho_finish(limit, g, h, f, A, U, b, kind):
    host = limit.host
    hU = {u: h.fwd[u] for u in U}
    c = None
    for _ in range(8):
        cc = realize_type_fresh(limit, hU, b)
        gcc = g.apply_all(cc)
        if set(cc) & set(gcc) or set(gcc) & set(hU.values()):
            continue
        hA_parts = {host.part[h.fwd[a]] for a in A}
        near = set(hU.values()) | set(cc)
        near_parts = {host.part[x] for x in near}
        if any(host.part[x] not in hA_parts and host.part[gx] in near_parts for x, gx in zip(cc, gcc)):
            continue
        c = cc
        break
    if c is None:
        return None
    h.set_pairs(dict(zip(b, c)))
    gb = g.apply_all(b)
    gc = g.apply_all(c)
    Ub = sorted(set(U) | set(b))
    left = host.induced(set(Ub) | set(gb))
    phi_inv = {h.fwd[x]: x for x in Ub}
    img_pts = [h.fwd[x] for x in Ub]
    extra = [x for x in closure_of(host, set(img_pts) | set(gc)) if x not in set(img_pts)]
    right, ren = _pulled_back(host, phi_inv, img_pts, extra, SENTINEL)
    if kind == "R":
        amal = limit.spec.amalgamate(left, right)
    else:
        amal = limit.spec.amalgamate(right, left)
    to_host = limit.realize(sorted(left.universe), amal)
    h.set_pairs({to_host[ren[x]]: x for x in extra})
    d = tuple(to_host[ren[x]] for x in gc)
    fb = f.apply_all(b)
    pred = get_predicate("srho")
    if kind == "R":
        good = pred.eval(host, A, b, fb)
    else:
        good = pred.eval(host, A, fb, b)
    return c, d, fb, good


@dataclass
class MoveReport:
    mode: str
    types: int = 0
    passed_R: int = 0
    passed_L: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures and self.types > 0

    def as_dict(self):
        return {"mode": self.mode, "types": self.types, "passed_R": self.passed_R,
                "passed_L": self.passed_L, "failures": [list(map(list, f[:2])) + [f[2]] for f in self.failures],
                "passed": self.passed}


def moves_maximally_verify(limit, f, pred, types, mode="free", witnesses=(), search=200):
    """For each (A, ref) look for an R-witness b (b indep_A f b) and an
    L-witness: in "free" mode for f^-1 (f^-1 b indep_A b), in "srho" mode
    for f itself (f b indep_A b).  Logged witnesses are tried first, then
    existing realisations of the type."""
    host = limit.host
    rep = MoveReport(mode)
    logged = {}
    for w in witnesses:
        logged.setdefault((tuple(w.A), w.kind), []).append(w.b)
    for A, ref in types:
        rep.types += 1
        m = {a: a for a in closure_of(host, A)}
        t = qftp(host, ref, A)

        def cands(kind):
            for b in logged.get((tuple(A), kind), []):
                if qftp(host, b, A) == t:
                    yield b
            n = 0
            for b in realizations(limit, m, tuple(ref)):
                yield b
                n += 1
                if n >= search:
                    return

        okR = okL = False
        for b in cands("R"):
            try:
                if pred.eval(host, A, b, f.apply_all(b)):
                    okR = True
                    break
            except BudgetExhausted:
                break
        for b in cands("L"):
            try:
                if mode == "free":
                    if pred.eval(host, A, f.apply_inv_all(b), b):
                        okL = True
                        break
                else:
                    if pred.eval(host, A, f.apply_all(b), b):
                        okL = True
                        break
            except BudgetExhausted:
                break
        rep.passed_R += okR
        rep.passed_L += okL
        if not (okR and okL):
            rep.failures.append((tuple(A), tuple(ref), "R" if not okR else "L"))
    return rep


# ---------------------------------------------------------------- KR joint embedding

@dataclass
class JepResult:
    status: str              # "found" or "exhausted"
    bound: int
    structure: object = None
    f_c: dict = None
    e_a: dict = None
    e_b: dict = None
    searched: int = 0
    note: str = ""

    @property
    def found(self):
        return self.status == "found"


def _pi_ok(s, f):
    from .structures import check_partial_iso
    return check_partial_iso(s, s, f) is None


def kr_jep_check(spec, A, f_a, B, f_b, bound, disjoint=True):
    """Search members C of the class with |C| <= bound, embeddings e_A, e_B
    and a partial automorphism f_C of C with e_A f_A = f_C e_A and
    e_B f_B = f_C e_B.  With disjoint=True the images of A and B are
    required to be disjoint."""
    if not _pi_ok(A, f_a) or not _pi_ok(B, f_b):
        raise StructureError("inputs are not partial automorphisms")
    low = len(A) + len(B) if disjoint else max(len(A), len(B))
    searched = 0
    for m in range(low, bound + 1):
        for C in spec.structures(m):
            for ea in enumerate_embeddings(A, C):
                for eb in enumerate_embeddings(B, C):
                    searched += 1
                    if disjoint and set(ea.map.values()) & set(eb.map.values()):
                        continue
                    fc = {}
                    okk = True
                    for e, fx in ((ea.map, f_a), (eb.map, f_b)):
                        for v, w in fx.items():
                            x, y = e[v], e[w]
                            if fc.get(x, y) != y:
                                okk = False
                            fc[x] = y
                    if not okk or len(set(fc.values())) != len(fc):
                        continue
                    if _pi_ok(C, fc):
                        return JepResult("found", bound, C, fc, dict(ea.map), dict(eb.map), searched)
    return JepResult("exhausted", bound, searched=searched,
                     note=f"no joint embedding with at most {bound} points")


def tn_swap_witness(n=3):
    """(A, f_A): an (n-1)-point set with a transposition (an odd permutation
    of the points of any n-set containing them); (B, f_B): one point fixed."""
    from .hypertournaments import MultiSpec
    spec = MultiSpec((n,))
    A = FiniteStructure(spec.signature, range(n - 1))
    f_a = {i: i for i in range(n - 1)}
    f_a[0], f_a[1] = 1, 0
    B = FiniteStructure(spec.signature, [0])
    return A, f_a, B, {0: 0}


def alt_obstruction_note(n=3):
    return (f"any {n}-set containing the swapped pair and the fixed point would carry an "
            f"odd permutation as an automorphism, but {n}-sets only have even ones; "
            f"so bound {n} already suffices")


# ---------------------------------------------------------------- seeds

def part_swap_seed(limit):
    """On a semigeneric host: a directed 4-cycle a->b->a'->b'->a with parts
    {a,a'}, {b,b'}, and the rotation a->b->a'->b'->a."""
    host = limit.host
    a = limit.fresh_point([], lambda n, t: False)
    ap = limit.fresh_point([a], lambda n, t: False)
    b = limit.fresh_point([a, ap], lambda n, t: t in ((a, host.size - 1), (host.size - 1, ap)))
    bp = limit.fresh_point([a, ap, b], lambda n, t: t in ((ap, host.size - 1), (host.size - 1, a)))
    assert pt.perp(host, b, bp), "4-cycle parts"
    return {a: b, b: ap, ap: bp, bp: a}


def part_move_seed(limit):
    """On an S_rho host: two red points a, b in different parts and the map a -> b."""
    host = limit.host
    reds = [v for v in range(host.size) if host.func("rho", v) == v]
    for a, b in itertools.combinations(reds, 2):
        return {a: b}
    raise ConstructionError("need two parts in the window")


def nontrivial_auto(limit, seed_kind="swap"):
    """A deterministic non-identity lazy automorphism seeded on the window."""
    host = limit.host
    if seed_kind == "swap-cycle":
        return LazyAutomorphism(limit, part_swap_seed(limit), name="g", budget=10 ** 6)
    if seed_kind == "move":
        return LazyAutomorphism(limit, part_move_seed(limit), name="g", budget=10 ** 6)
    for v in range(host.size):
        for w in range(v + 1, host.size):
            if extend_match(host, host, {}, v, w) is not None:
                return LazyAutomorphism(limit, {v: w}, name="g", budget=10 ** 6)
    raise ConstructionError("no pair of points with the same type")
