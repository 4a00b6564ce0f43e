"""Finite structures, quantifier-free types, embeddings and partial isomorphisms.

Anything with `signature`, `holds`, `func`, `closure` and `rel_tuples` can be
used where a structure is read (FiniteStructure, and the lazy hosts in
classes.py).
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    relations: tuple = ()   # ((name, arity), ...)
    functions: tuple = ()   # (name, ...)

    def __post_init__(self):
        rels = tuple((str(n), int(a)) for n, a in self.relations)
        funs = tuple(str(f) for f in self.functions)
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "functions", funs)
        names = [n for n, _ in rels] + list(funs)
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in {names}")
        for n, a in rels:
            if a < 1:
                raise StructureError(f"relation {n} has arity {a}")

    def arity(self, name):
        for n, a in self.relations:
            if n == name:
                return a
        raise StructureError(f"unknown relation {name}")

    @property
    def relation_names(self):
        return tuple(n for n, _ in self.relations)


@dataclass(frozen=True)
class Violation:
    kind: str
    witness: tuple
    message: str = ""

    def __bool__(self):
        # a violation is never "ok"
        return False


class FiniteStructure:
    def __init__(self, signature, universe, relations=None, functions=None):
        self.signature = signature
        self.universe = tuple(sorted(set(int(v) for v in universe)))
        uni = set(self.universe)
        rels = {}
        relations = relations or {}
        for name, arity in signature.relations:
            tups = frozenset(tuple(int(x) for x in t) for t in relations.get(name, ()))
            for t in tups:
                if len(t) != arity:
                    raise StructureError(f"tuple {t} has wrong arity for {name}")
                if not set(t) <= uni:
                    raise StructureError(f"tuple {t} leaves the universe")
            rels[name] = tups
        for name in relations:
            if name not in rels:
                raise StructureError(f"unknown relation {name}")
        funs = {}
        functions = functions or {}
        for name in signature.functions:
            m = {int(k): int(v) for k, v in functions.get(name, {}).items()}
            if set(m) != uni or not set(m.values()) <= uni:
                raise StructureError(f"function {name} is not total on the universe")
            funs[name] = m
        for name in functions:
            if name not in funs:
                raise StructureError(f"unknown function {name}")
        self.relations = rels
        self.functions = funs
        self._uni = uni
        self._hash = None

    # -- read protocol
    def holds(self, name, tup):
        return tuple(tup) in self.relations[name]

    def func(self, name, v):
        return self.functions[name][v]

    def __contains__(self, v):
        return v in self._uni

    def __len__(self):
        return len(self.universe)

    def rel_tuples(self, name, points=None):
        if points is None:
            return sorted(self.relations[name])
        pts = set(points)
        return sorted(t for t in self.relations[name] if set(t) <= pts)

    def rel_tuples_with(self, name, points, focus):
        pts, foc = set(points), set(focus)
        return sorted(t for t in self.relations[name] if set(t) <= pts and foc & set(t))

    def closure(self, points):
        return closure_of(self, points)

    def induced(self, points):
        pts = self.closure(points)
        rels = {n: self.rel_tuples(n, pts) for n in self.signature.relation_names}
        funs = {f: {v: self.functions[f][v] for v in pts} for f in self.signature.functions}
        return FiniteStructure(self.signature, pts, rels, funs)

    def rename(self, mapping):
        """Copy along an injective renaming of ids (missing ids are kept)."""
        m = lambda v: mapping.get(v, v)
        rels = {n: [tuple(m(x) for x in t) for t in ts] for n, ts in self.relations.items()}
        funs = {f: {m(k): m(v) for k, v in fm.items()} for f, fm in self.functions.items()}
        out = FiniteStructure(self.signature, [m(v) for v in self.universe], rels, funs)
        if len(out.universe) != len(self.universe):
            raise StructureError("renaming is not injective")
        return out

    def with_tuples(self, name, extra):
        rels = {n: set(ts) for n, ts in self.relations.items()}
        rels[name] |= set(tuple(t) for t in extra)
        return FiniteStructure(self.signature, self.universe, rels, self.functions)

    def key(self):
        return (
            self.signature,
            self.universe,
            tuple((n, tuple(sorted(self.relations[n]))) for n in self.signature.relation_names),
            tuple((f, tuple(sorted(self.functions[f].items()))) for f in self.signature.functions),
        )

    def __eq__(self, other):
        return isinstance(other, FiniteStructure) and self.key() == other.key()

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self):
        body = ", ".join(f"{n}={sorted(self.relations[n])}" for n in self.signature.relation_names)
        return f"FiniteStructure({list(self.universe)}; {body})"


def empty_structure(signature):
    return FiniteStructure(signature, [])


def closure_of(s, points):
    """Close a set of points under the unary functions of s (BFS)."""
    seen = set(points)
    fs = s.signature.functions
    if not fs:
        return tuple(sorted(seen))
    todo = deque(sorted(seen))
    while todo:
        v = todo.popleft()
        for f in fs:
            w = s.func(f, v)
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return tuple(sorted(seen))


def rel_tuples_over(s, name, points):
    """Tuples of s in relation `name` with all entries in points (any reader)."""
    return s.rel_tuples(name, points)


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class QfType:
    params: tuple
    positions: tuple
    relations: frozenset
    functions: frozenset

    @property
    def length(self):
        return len(self.positions)


def qftp(s, tup, params=()):
    """Quantifier-free type of tup over params (params are closed first).

    Parameters keep their identity, the other points are named by the order
    in which they show up when closing the tuple.  Since tuple positions are
    designated this naming is canonical without any search.
    """
    tup = tuple(tup)
    for v in list(tup) + list(params):
        if v not in s:
            raise StructureError(f"unknown element {v}")
    par = closure_of(s, params)
    pset = set(par)
    label = {p: ("p", p) for p in par}
    order = []
    todo = deque()
    for v in tup:
        if v not in label:
            label[v] = ("x", len(order))
            order.append(v)
            todo.append(v)
    fs = s.signature.functions
    while todo:
        v = todo.popleft()
        for f in fs:
            w = s.func(f, v)
            if w not in label:
                label[w] = ("x", len(order))
                order.append(w)
                todo.append(w)
    pts = list(par) + order
    rels = []
    for name in s.signature.relation_names:
        for t in s.rel_tuples_with(name, pts, order):
            rels.append((name, tuple(label[x] for x in t)))
    funs = []
    for f in fs:
        for v in order:
            funs.append((f, label[v], label[s.func(f, v)]))
    return QfType(par, tuple(label[v] for v in tup), frozenset(rels), frozenset(funs))


def type_structure(t, signature, first_new):
    """Realise a QfType as a FiniteStructure: parameters keep their ids,
    the new points get ids first_new, first_new+1, ...  Only the relations
    touching new points are included, so this is meant to be merged with
    the base.  Returns (tuple, relations dict, functions dict)."""
    def ev(lab):
        return lab[1] if lab[0] == "p" else first_new + lab[1]
    rels = {n: [] for n in signature.relation_names}
    for name, lt in t.relations:
        rels[name].append(tuple(ev(x) for x in lt))
    funs = {f: {} for f in signature.functions}
    for f, a, b in t.functions:
        funs[f][ev(a)] = ev(b)
    return tuple(ev(x) for x in t.positions), rels, funs


# ---------------------------------------------------------------- maps

class PartialIso:
    def __init__(self, source, target, mapping):
        self.source = source
        self.target = target
        self.map = dict(mapping)

    def __repr__(self):
        return f"PartialIso({dict(sorted(self.map.items()))})"

    @property
    def domain(self):
        return tuple(sorted(self.map))

    @property
    def image(self):
        return tuple(sorted(self.map.values()))

    def inverse(self):
        return PartialIso(self.target, self.source, {w: v for v, w in self.map.items()})

    def compose(self, other):
        """self after other."""
        m = {v: self.map[w] for v, w in other.map.items() if w in self.map}
        return PartialIso(other.source, self.target, m)

    def check(self):
        return check_partial_iso(self.source, self.target, self.map)

    def is_valid(self):
        return self.check() is None

    def is_total(self):
        return set(self.map) == set(self.source.universe)


def check_partial_iso(src, tgt, m, focus=None):
    """None if m is a partial isomorphism, else a Violation.

    With focus given, only tuples containing focus (a source point) are
    scanned; the rest is assumed already checked."""
    vals = list(m.values())
    if len(set(vals)) != len(vals):
        return Violation("not-injective", tuple(sorted(m.items())), "map is not injective")
    for v, w in m.items():
        if v not in src or w not in tgt:
            return Violation("unknown-element", (v, w), "point outside the universes")
    dom = list(m)
    img = vals
    inv = {w: v for v, w in m.items()}
    for name in src.signature.relation_names:
        for t in src.rel_tuples(name, dom):
            if focus is not None and focus not in t:
                continue
            if not tgt.holds(name, tuple(m[x] for x in t)):
                return Violation("not-preserved", (name, t), f"{name}{t} is not preserved")
        wf = m[focus] if focus is not None else None
        for t in tgt.rel_tuples(name, img):
            if wf is not None and wf not in t:
                continue
            if not src.holds(name, tuple(inv[x] for x in t)):
                return Violation("not-reflected", (name, t), f"{name}{t} is not reflected")
    for f in src.signature.functions:
        for v in dom:
            fv = src.func(f, v)
            if fv in m:
                if focus is not None and focus not in (v, fv):
                    continue
                if tgt.func(f, m[v]) != m[fv]:
                    return Violation("function", (f, v), f"{f} not respected at {v}")
        for w in img:
            fw = tgt.func(f, w)
            if fw in inv and src.func(f, inv[w]) != inv[fw]:
                return Violation("function", (f, w), f"{f} not reflected at {w}")
    return None


def extend_partial_iso(p, v):
    """All w with p + {v -> w} a partial isomorphism."""
    if v in p.map:
        raise StructureError(f"{v} already in the domain")
    if v not in p.source:
        raise StructureError(f"unknown element {v}")
    used = set(p.map.values())
    out = []
    for w in p.target.universe:
        if w in used:
            continue
        m = dict(p.map)
        m[v] = w
        if check_partial_iso(p.source, p.target, m, focus=v) is None:
            out.append(w)
    return out


def enumerate_embeddings(a, b, limit=None):
    """All embeddings a -> b, lexicographic in the images of a's points."""
    if a.signature != b.signature:
        raise StructureError("signature mismatch")
    pts = a.universe
    out = []

    def rec(i, m):
        if limit is not None and len(out) >= limit:
            return
        if i == len(pts):
            out.append(PartialIso(a, b, dict(m)))
            return
        v = pts[i]
        used = set(m.values())
        for w in b.universe:
            if w in used:
                continue
            m[v] = w
            if check_partial_iso(a, b, m, focus=v) is None:
                rec(i + 1, m)
            del m[v]

    rec(0, {})
    return out


def find_isomorphism(a, b):
    if len(a) != len(b):
        return None
    embs = enumerate_embeddings(a, b, limit=1)
    return embs[0] if embs else None


def isomorphic(a, b):
    return find_isomorphism(a, b) is not None


def canonical_key(s):
    """Isomorphism-invariant key by brute force over orderings (small s only)."""
    best = None
    n = len(s.universe)
    for perm in itertools.permutations(s.universe):
        ren = {v: i for i, v in enumerate(perm)}
        k = s.rename(ren).key()
        if best is None or k < best:
            best = k
    return best if best is not None else s.key()


# ---------------------------------------------------------------- equalizing

@dataclass
class SearchResult:
    status: str          # "found" or "exhausted"
    tuple: tuple = None
    structure: object = None
    explored: int = 0
    note: str = ""

    @property
    def found(self):
        return self.status == "found"


def equalizing_tuple_search(s, a, b, k, extender, length=None):
    """Look for c with qftp(a+c) == qftp(b+c) over the empty set.

    Existing tuples of s are tried first; then s is grown through
    extender(s) -> iterable of (structure, new_point), up to k new points.
    Exhaustion of the bound is reported as such, never as impossibility.
    """
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise StructureError("tuples must have equal length")
    if set(a) & set(b):
        raise StructureError("tuples must be disjoint")
    lengths = [length] if length is not None else list(range(0, k + 1))
    explored = 0

    def scan(st, must=None):
        nonlocal explored
        for L in lengths:
            for c in itertools.permutations(st.universe, L):
                if must is not None and must not in c:
                    continue
                explored += 1
                if qftp(st, a + c) == qftp(st, b + c):
                    return c
        return None

    c = scan(s)
    if c is not None:
        return SearchResult("found", c, s, explored)

    def dfs(st, depth):
        if depth == k:
            return None
        for st2, new in extender(st):
            c = scan(st2, must=new)
            if c is not None:
                return st2, c
            r = dfs(st2, depth + 1)
            if r is not None:
                return r
        return None

    r = dfs(s, 0)
    if r is None:
        return SearchResult("exhausted", None, s, explored, f"no tuple within {k} new points")
    return SearchResult("found", r[1], r[0], explored)
