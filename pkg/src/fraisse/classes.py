"""Class specifications (membership, one-point extensions, canonical
amalgams) and the mutable hosts that hold a growing approximation of each
limit.

A host never materialises every tuple: relations it has not been told about
are read off a seeded hash, which is a legal completion for the free-ish
classes, and for the parity classes the completion rule of the strong
amalgam is applied eagerly when a point is added.
"""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

from . import hypertournaments as ht
from . import partite as pt
from . import zoo
from .structures import (FiniteStructure, Signature, StructureError, Violation,
                         closure_of)

MASK = (1 << 64) - 1


def mix64(z):
    z = (z + 0x9E3779B97F4A7C15) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def hbit(seed, *xs):
    h = mix64(seed & MASK)
    for x in xs:
        h = mix64(h ^ (x & MASK))
    return (h >> 17) & 1


# ---------------------------------------------------------------- hosts

class Host:
    """Growing structure on ids 0..size-1."""

    def __init__(self, signature, seed=0):
        self.signature = signature
        self.seed = seed
        self.size = 0
        self.funs = {f: [] for f in signature.functions}
        self.rng = random.Random(seed)

    @property
    def universe(self):
        return range(self.size)

    def __contains__(self, v):
        return isinstance(v, int) and 0 <= v < self.size

    def __len__(self):
        return self.size

    def func(self, name, v):
        return self.funs[name][v]

    def closure(self, points):
        return closure_of(self, points)

    def rel_tuples(self, name, points=None):
        pts = sorted(self.universe if points is None else points)
        r = self.signature.arity(name)
        return [t for t in itertools.permutations(pts, r) if self.holds(name, t)]

    def rel_tuples_with(self, name, points, focus):
        foc = set(focus)
        return [t for t in self.rel_tuples(name, points) if foc & set(t)]

    def induced(self, points):
        pts = self.closure(points)
        rels = {n: self.rel_tuples(n, pts) for n in self.signature.relation_names}
        funs = {f: {v: self.funs[f][v] for v in pts} for f in self.signature.functions}
        return FiniteStructure(self.signature, pts, rels, funs)

    def snapshot(self):
        return self.induced(self.universe)

    def add_points(self, base, count, relfn, funcs=None):
        """Add `count` points over the closed set `base`.  relfn(name, tup)
        decides tuples inside base + new points that contain a new point;
        funcs[f][new_id] gives function values.  Returns the new ids."""
        base = set(base)
        ids = list(range(self.size, self.size + count))
        self.size += count
        for f in self.signature.functions:
            self.funs[f].extend([None] * count)
        self._grow(count)
        for i, x in enumerate(ids):
            self._attach(x, sorted(base | set(ids[:i])), relfn)
        for f in self.signature.functions:
            for x in ids:
                self.funs[f][x] = funcs[f][x]
        return ids

    def add_structure(self, ext, base):
        """Realise ext (a structure on base plus new ids) over base."""
        base = sorted(base)
        new = [v for v in ext.universe if v not in set(base)]
        start = self.size
        to_host = {v: v for v in base}
        for i, v in enumerate(new):
            to_host[v] = start + i
        to_ext = {h: e for e, h in to_host.items()}

        def relfn(name, tup):
            return ext.holds(name, tuple(to_ext[x] for x in tup))

        funcs = {f: {to_host[v]: to_host[ext.func(f, v)] for v in new} for f in self.signature.functions}
        self.add_points(base, len(new), relfn, funcs)
        return to_host

    def _grow(self, count):
        pass

    def _attach(self, x, base, relfn):
        raise NotImplementedError


class MultiHost(Host):
    alternating = True
    def __init__(self, spec, seed=0):
        super().__init__(spec.signature, seed)
        self.spec = spec
        self.index = {name: i for i, name in enumerate(spec.names)}
        self.signs = [dict() for _ in spec.names]
        # point -> (relfn, base, first id of its batch).  Tuples are decided
        # on first read, so a point over a big base costs O(|base|) memory
        self.pending = {}

    def sign(self, i, key):
        v = self.signs[i].get(key)
        if v is None:
            rec = self.pending.get(key[-1])
            if rec is not None and all(y in rec[1] or y >= rec[2] for y in key[:-1]):
                name = self.spec.names[i]
                # key is sorted so key[-1] is the newest point; relfn wants it last
                v = 1 if rec[0](name, key) else -1
            else:
                v = 1 if hbit(self.seed, i, *key) else -1
            self.signs[i][key] = v
        return v

    def holds(self, name, tup):
        if len(set(tup)) < len(tup):
            return False
        key, s = ht.sort_sign(tup)
        return self.sign(self.index[name], key) * s == 1

    def add_points(self, base, count, relfn, funcs=None):
        start = self.size
        bset = frozenset(base)
        self.size += count
        for f in self.signature.functions:
            self.funs[f].extend(funcs[f][x] for x in range(start, self.size))
        for x in range(start, self.size):
            self.pending[x] = (relfn, bset, start)
        return list(range(start, self.size))

    def fast_match(self, v, dom, w, fmap):
        for i, (name, r) in enumerate(zip(self.spec.names, self.spec.arities)):
            for combo in itertools.combinations(dom, r - 1):
                if self.holds(name, combo + (v,)) != self.holds(name, tuple(fmap[c] for c in combo) + (w,)):
                    return False
        return True


class WHost(Host):
    """H4-free 3-hypertournament, all triples stored."""
    alternating = True

    def __init__(self, seed=0, name="R"):
        super().__init__(Signature(((name, 3),)), seed)
        self.name = name
        self.signs = {}

    def holds(self, name, tup):
        if len(set(tup)) < 3:
            return False
        key, s = ht.sort_sign(tup)
        return self.signs[key] * s == 1

    def _attach(self, x, base, relfn):
        bset = set(base)
        order = list(base) + [w for w in range(x) if w not in bset]
        for i in range(len(order)):
            for j in range(i + 1, len(order)):
                y, z = order[i], order[j]
                tup = (y, z, x)
                if y in bset and z in bset:
                    val = 1 if relfn(self.name, tup) else -1
                else:
                    val = 1
                key, s = ht.sort_sign(tup)
                self.signs[key] = val * s


class GraphHost(Host):
    def __init__(self, seed=0):
        super().__init__(Signature((("E", 2),)), seed)
        self.edges = {}

    def holds(self, name, tup):
        u, v = tup
        if u == v:
            return False
        key = (u, v) if u < v else (v, u)
        e = self.edges.get(key)
        if e is None:
            e = bool(hbit(self.seed, *key))
        return e

    def _attach(self, x, base, relfn):
        for b in base:
            self.edges[(b, x)] = relfn("E", (b, x))


class QHost(Host):
    def __init__(self, n, seed=0):
        super().__init__(q_signature(n), seed)
        self.n = n
        self.pos = []
        self.col = []

    def _grow(self, count):
        self.pos.extend([None] * count)
        self.col.extend([None] * count)

    def holds(self, name, tup):
        if name == "L":
            u, v = tup
            return self.pos[u] < self.pos[v]
        return self.col[tup[0]] == int(name[1:])

    def _attach(self, x, base, relfn):
        below = [self.pos[b] for b in base if relfn("L", (b, x))]
        above = [self.pos[b] for b in base if relfn("L", (x, b))]
        lo = max(below) if below else None
        hi = min(above) if above else None
        inner = sorted(p for p in self.pos[:x] if p is not None
                       and (lo is None or p > lo) and (hi is None or p < hi))
        bounds = [lo] + inner + [hi]
        j = self.rng.randrange(len(bounds) - 1)
        a, b = bounds[j], bounds[j + 1]
        if a is None and b is None:
            p = Fraction(0)
        elif a is None:
            p = b - 1
        elif b is None:
            p = a + 1
        else:
            p = (a + b) / 2
        self.pos[x] = p
        cs = [i for i in range(self.n) if relfn(f"C{i}", (x,))]
        self.col[x] = cs[0]


class PartiteHost(Host):
    """Oriented graphs whose non-adjacency is an equivalence.  mode is one
    of "sg" (parity condition), "dn" (labelled parts), "f" (parts of size
    at most two with the partner rule)."""

    def __init__(self, signature, mode, seed=0, ncol=0):
        super().__init__(signature, seed)
        self.mode = mode
        self.ncol = ncol
        self.out = set()
        self.part = []
        self.members = {}
        self.colour = []
        self._next_part = 0

    def _grow(self, count):
        self.part.extend([None] * count)
        self.colour.extend([None] * count)

    def holds(self, name, tup):
        if name == "E":
            return tup in self.out
        return self.colour[tup[0]] == int(name[1:])

    def d(self, u, v):
        if (u, v) in self.out:
            return 1
        if (v, u) in self.out:
            return 0
        return None

    def part_members(self, v):
        return self.members[self.part[v]]

    def _set(self, x, w, val):
        self.out.add((x, w) if val else (w, x))

    def _attach(self, x, base, relfn):
        if self.mode == "dn":
            c = [i for i in range(self.ncol) if relfn(f"C{i}", (x,))][0]
            self.colour[x] = c
            pid = c
        else:
            pid = None
            for b in base:
                if not relfn("E", (x, b)) and not relfn("E", (b, x)):
                    pid = self.part[b]
                    break
            if pid is None:
                pid = ("p", self._next_part)
                self._next_part += 1
        mem = self.members.setdefault(pid, [])
        xp = mem[0] if mem else None
        self.part[x] = pid
        mem.append(x)
        bset = set(base)
        for b in base:
            if self.part[b] != pid:
                self._set(x, b, relfn("E", (x, b)))
        kappa = {}
        if self.mode == "sg" and xp is not None:
            for b in base:
                if self.part[b] != pid and self.part[b] not in kappa:
                    kappa[self.part[b]] = self.d(x, b) ^ self.d(xp, b)
        for w in range(x):
            if w in bset or self.part[w] == pid:
                continue
            if self.mode == "sg":
                if xp is None:
                    val = hbit(self.seed, x, w)
                else:
                    q = self.part[w]
                    if q not in kappa:
                        kappa[q] = hbit(self.seed, x, w) ^ self.d(xp, w)
                    val = self.d(xp, w) ^ kappa[q]
            elif self.mode == "dn":
                val = hbit(self.seed, x, w)
            else:
                if xp is not None:
                    val = 1 - self.d(xp, w)
                else:
                    others = [u for u in self.part_members(w) if u != w]
                    wp = others[0] if others else None
                    if wp is not None and (wp in bset or wp < w):
                        val = 1 - self.d(x, wp)
                    else:
                        val = hbit(self.seed, x, w)
            self._set(x, w, val)

    def fast_match(self, v, dom, w, fmap):
        for u in dom:
            if self.d(v, u) != self.d(w, fmap[u]):
                return False
        if self.mode == "dn" and self.colour[v] != self.colour[w]:
            return False
        return True


# ---------------------------------------------------------------- class specs

def q_signature(n):
    return Signature((("L", 2),) + tuple((f"C{i}", 1) for i in range(n)))


def _new_id(S, new_id):
    if new_id is not None:
        return new_id
    return max(S.universe) + 1 if S.universe else 0


class ClassSpec:
    kind = "abstract"
    signature = None

    def check(self, s):
        raise NotImplementedError

    def is_member(self, s):
        return self.check(s) is None

    def one_point_extensions(self, S, new_id=None):
        raise NotImplementedError

    def amalgamate(self, B, C):
        raise NotImplementedError

    def make_host(self, seed=0):
        raise NotImplementedError

    def structures(self, m):
        """Every member on universe 0..m-1 (labelled, deduplicated)."""
        level = [FiniteStructure(self.signature, [])]
        out = {}
        while level:
            nxt = {}
            for S in level:
                if len(S) == m:
                    out[S.key()] = S
                    continue
                for ext, _ in self.one_point_extensions(S, new_id=len(S)):
                    if len(ext) <= m and sorted(ext.universe) == list(range(len(ext))):
                        nxt[ext.key()] = ext
            level = list(nxt.values())
        return [out[k] for k in sorted(out)]

    def __repr__(self):
        return f"ClassSpec({self.kind})"


class HyperClass(ClassSpec):
    def __init__(self, spec, h4free=False, kind=None):
        self.spec = spec
        self.h4free = h4free
        self.signature = spec.signature
        self.kind = kind or ("w" if h4free else "multi")

    def check(self, s):
        r = ht.check_multi(s, self.spec)
        if isinstance(r, Violation):
            return r
        if self.h4free:
            e = ht.check_h4_free(s, self.spec.names[0])
            if e is not None:
                return Violation("h4", tuple(sorted(e.map.values())), "H4 embeds")
        return None

    def one_point_extensions(self, S, new_id=None):
        x = _new_id(S, new_id)
        maps = ht.check_multi(S, self.spec)
        if isinstance(maps, Violation):
            raise StructureError(f"base not in class: {maps.message}")
        slots = []
        for name, r in zip(self.spec.names, self.spec.arities):
            for combo in itertools.combinations(S.universe, r - 1):
                slots.append((name, combo + (x,)))
        out = []
        for signs in itertools.product((1, -1), repeat=len(slots)):
            rels = {name: set(S.relations[name]) for name in self.spec.names}
            for (name, tup), sg in zip(slots, signs):
                for p in itertools.permutations(range(len(tup))):
                    if ht.perm_sign(p) * sg == 1:
                        rels[name].add(tuple(tup[i] for i in p))
            ext = FiniteStructure(self.signature, list(S.universe) + [x], rels)
            if self.h4free and ht.check_h4_free(ext, self.spec.names[0]) is not None:
                continue
            out.append((ext, x))
        return out

    def amalgamate(self, B, C):
        if self.h4free:
            return ht.w_amalgam(None, B, C, self.spec.names[0])
        if self.spec.delta is not None:
            return ht.canonical_amalgam_delta(self.spec, None, B, C)
        out = None
        parts = []
        for name in self.spec.names:
            sub_sig = Signature(((name, self.signature.arity(name)),))
            b = FiniteStructure(sub_sig, B.universe, {name: B.relations[name]})
            c = FiniteStructure(sub_sig, C.universe, {name: C.relations[name]})
            parts.append(ht.free_amalgam_tn(None, b, c, name))
        rels = {name: p.relations[name] for name, p in zip(self.spec.names, parts)}
        return FiniteStructure(self.signature, parts[0].universe, rels)

    def make_host(self, seed=0):
        if self.h4free:
            return WHost(seed, self.spec.names[0])
        return MultiHost(self.spec, seed)


class GraphClass(ClassSpec):
    kind = "random-graph"
    signature = Signature((("E", 2),))

    def check(self, s):
        for (u, v) in s.relations["E"]:
            if u == v:
                return Violation("loop", (u,), "loop")
            if (v, u) not in s.relations["E"]:
                return Violation("asymmetric", (u, v), "edge relation is not symmetric")
        return None

    def one_point_extensions(self, S, new_id=None):
        x = _new_id(S, new_id)
        out = []
        for bits in itertools.product((0, 1), repeat=len(S)):
            edges = set(S.relations["E"])
            for b, on in zip(S.universe, bits):
                if on:
                    edges |= {(b, x), (x, b)}
            out.append((FiniteStructure(self.signature, list(S.universe) + [x], {"E": edges}), x))
        return out

    def amalgamate(self, B, C):
        A = sorted(set(B.universe) & set(C.universe))
        if B.induced(A) != C.induced(A):
            raise StructureError("B and C disagree on their common part")
        return FiniteStructure(self.signature, sorted(set(B.universe) | set(C.universe)),
                               {"E": set(B.relations["E"]) | set(C.relations["E"])})

    def make_host(self, seed=0):
        return GraphHost(seed)


def q_order(s):
    """Points of an L-structure listed in increasing order."""
    return sorted(s.universe, key=lambda v: sum(1 for w in s.universe if s.holds("L", (w, v))))


class QClass(ClassSpec):
    def __init__(self, n):
        self.n = n
        self.kind = f"q{n}"
        self.signature = q_signature(n)

    def check(self, s):
        pts = s.universe
        for v in pts:
            if s.holds("L", (v, v)):
                return Violation("reflexive", (v,), "order not strict")
            if sum(1 for i in range(self.n) if s.holds(f"C{i}", (v,))) != 1:
                return Violation("colour", (v,), "not exactly one colour")
        for u, v in itertools.combinations(pts, 2):
            if s.holds("L", (u, v)) == s.holds("L", (v, u)):
                return Violation("total", (u, v), "order not total and antisymmetric")
        for u, v, w in itertools.permutations(pts, 3):
            if s.holds("L", (u, v)) and s.holds("L", (v, w)) and not s.holds("L", (u, w)):
                return Violation("transitive", (u, v, w), "order not transitive")
        return None

    def one_point_extensions(self, S, new_id=None):
        x = _new_id(S, new_id)
        order = q_order(S)
        out = []
        for gap in range(len(order) + 1):
            for c in range(self.n):
                rels = {name: set(S.relations[name]) for name in self.signature.relation_names}
                for i, v in enumerate(order):
                    rels["L"].add((v, x) if i < gap else (x, v))
                rels[f"C{c}"].add((x,))
                out.append((FiniteStructure(self.signature, list(S.universe) + [x], rels), x))
        return out

    def amalgamate(self, B, C):
        bset, cset = set(B.universe), set(C.universe)
        A = sorted(bset & cset)
        if B.induced(A) != C.induced(A):
            raise StructureError("B and C disagree on their common part")

        def key(v, X, side):
            below = sum(1 for a in A if X.holds("L", (a, v)))
            rank = sum(1 for w in X.universe if X.holds("L", (w, v)))
            return (below, 0 if v in set(A) else 1, side, rank)

        keys = {v: key(v, B, 0) for v in bset}
        keys.update({v: key(v, C, 1) for v in cset - bset})
        for a in A:
            keys[a] = (sum(1 for w in A if B.holds("L", (w, a))), 0, 0, 0)
        order = sorted(keys, key=keys.get)
        rels = {name: set(B.relations[name]) | set(C.relations[name])
                for name in self.signature.relation_names if name != "L"}
        rels["L"] = {(order[i], order[j]) for i in range(len(order)) for j in range(i + 1, len(order))}
        return FiniteStructure(self.signature, order, rels)

    def make_host(self, seed=0):
        return QHost(self.n, seed)


class PartiteClass(ClassSpec):
    def __init__(self, kind, n=0):
        self.kind = kind
        self.n = n
        if kind == "semigeneric":
            self.signature = pt.SG_SIG
        elif kind == "srho":
            self.signature = pt.RHO_SIG
        elif kind == "srhosigma":
            self.signature = pt.RHOSIGMA_SIG
        elif kind == "dn":
            self.signature = zoo.coloured_sig(n)
        elif kind == "f":
            self.signature = pt.SG_SIG
        else:
            raise ValueError(kind)

    def check(self, s):
        if self.kind == "semigeneric":
            r = pt.check_semigeneric(s)
        elif self.kind == "srho":
            r = pt.check_srho(s)
        elif self.kind == "srhosigma":
            r = pt.check_srhosigma(s)
        elif self.kind == "dn":
            r = zoo.check_dn(s, self.n)
        else:
            r = zoo.check_f_class(s)
        return r if isinstance(r, Violation) else None

    def _raw(self, S, x, choice, funcs=None, extra=()):
        rels = {name: set(S.relations[name]) for name in self.signature.relation_names}
        for b, v in zip(S.universe, choice):
            if v == 1:
                rels["E"].add((x, b))
            elif v == 0:
                rels["E"].add((b, x))
        for name, t in extra:
            rels[name].add(t)
        uni = list(S.universe) + [x] + [w for w in (funcs or {}).get("_new", ()) if w != x]
        fdata = None
        if self.signature.functions:
            fdata = {f: dict(S.functions[f]) for f in self.signature.functions}
            for f in self.signature.functions:
                fdata[f].update(funcs[f])
        return FiniteStructure(self.signature, uni, rels, fdata)

    def one_point_extensions(self, S, new_id=None):
        x = _new_id(S, new_id)
        out = []
        if self.kind == "dn":
            for c in range(self.n):
                free = [b for b in S.universe if not S.holds(f"C{c}", (b,))]
                for bits in itertools.product((1, 0), repeat=len(free)):
                    ch = dict(zip(free, bits))
                    choice = [ch.get(b) for b in S.universe]
                    ext = self._raw(S, x, choice, extra=[(f"C{c}", (x,))])
                    if self.check(ext) is None:
                        out.append((ext, x))
            return out
        for choice in itertools.product((1, 0, None), repeat=len(S)):
            joined = [b for b, v in zip(S.universe, choice) if v is None]
            funcs = None
            if self.kind == "srho":
                funcs = {"rho": {x: S.func("rho", joined[0]) if joined else x}}
            elif self.kind == "srhosigma":
                if not joined:
                    continue
                funcs = {"rho": {x: S.func("rho", joined[0])}, "sigma": {x: S.func("sigma", joined[0])}}
            ext = self._raw(S, x, choice, funcs)
            if self.check(ext) is None:
                out.append((ext, x))
        if self.kind == "srhosigma":
            y = x + 1
            for red in (True, False):
                r, bl = (x, y) if red else (y, x)
                funcs = {"rho": {x: r, y: r}, "sigma": {x: bl, y: bl}}
                for cx in itertools.product((1, 0), repeat=len(S)):
                    for cy in itertools.product((1, 0), repeat=len(S)):
                        rels = {"E": set(S.relations["E"])}
                        for b, v in zip(S.universe, cx):
                            rels["E"].add((x, b) if v else (b, x))
                        for b, v in zip(S.universe, cy):
                            rels["E"].add((y, b) if v else (b, y))
                        fdata = {f: dict(S.functions[f]) for f in ("rho", "sigma")}
                        for f in fdata:
                            fdata[f].update(funcs[f])
                        ext = FiniteStructure(self.signature, list(S.universe) + [x, y], rels, fdata)
                        if self.check(ext) is None:
                            out.append((ext, x))
        return out

    def amalgamate(self, B, C):
        if self.kind == "semigeneric":
            return pt.strong_amalgam_semigeneric(B, C)
        if self.kind in ("srho", "srhosigma"):
            return pt.srho_canonical_amalgam(B, C)
        if self.kind == "dn":
            return zoo.dn_amalgam(B, C)
        return zoo.f_amalgam(B, C)

    def make_host(self, seed=0):
        mode = {"semigeneric": "sg", "srho": "sg", "srhosigma": "sg", "dn": "dn", "f": "f"}[self.kind]
        return PartiteHost(self.signature, mode, seed, ncol=self.n)


def get_class(kind, **kw):
    """Factory: tn (n), multi (arities, delta), tournament, random-graph,
    q (n), semigeneric, srho, srhosigma, dn (n), f, w."""
    kind = kind.lower()
    if kind in ("tn", "t"):
        n = kw.get("n", 3)
        return HyperClass(ht.MultiSpec((n,)), kind=f"t{n}")
    if kind.startswith("t") and kind[1:].isdigit():
        n = int(kind[1:])
        return HyperClass(ht.MultiSpec((n,), delta=0 if n == 2 else None), kind=f"t{n}")
    if kind in ("tournament", "random-tournament"):
        return HyperClass(ht.MultiSpec((2,), delta=0), kind="t2")
    if kind == "multi":
        arities = tuple(kw.get("arities", (2, 3)))
        delta = kw.get("delta", 0)
        return HyperClass(ht.MultiSpec(arities, delta=delta),
                          kind="multi-" + "-".join(map(str, arities)))
    if kind in ("random-graph", "graph", "free"):
        return GraphClass()
    if kind == "q" or (kind.startswith("q") and kind[1:].isdigit()):
        n = kw.get("n", int(kind[1:]) if kind[1:] else 1)
        return QClass(n)
    if kind in ("semigeneric", "srho", "srhosigma", "f"):
        return PartiteClass(kind)
    if kind == "dn" or (kind.startswith("dn") and kind[2:].isdigit()):
        n = kw.get("n", int(kind[2:]) if kind[2:] else 3)
        return PartiteClass("dn", n)
    if kind == "w":
        return HyperClass(ht.MultiSpec((3,)), h4free=True)
    raise ValueError(f"unknown class {kind}")
