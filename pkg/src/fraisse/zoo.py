"""Class checkers for labelled n-partite tournaments, the double-partite
class behind F, and the three-coloured twist."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .partite import E, check_partite, d, parts_of, perp
from .structures import FiniteStructure, PartialIso, Signature, StructureError, Violation


def coloured_sig(n):
    return Signature(((E, 2),) + tuple((f"C{i}", 1) for i in range(n)))


def colour_of(s, v, n):
    cs = [i for i in range(n) if s.holds(f"C{i}", (v,))]
    return cs[0] if len(cs) == 1 else None


def n_colours(s):
    return sum(1 for name in s.signature.relation_names if name.startswith("C") and name[1:].isdigit())


# ---------------------------------------------------------------- D'_n

@dataclass
class LabelledPartite:
    structure: FiniteStructure
    parts: list
    colour: dict


def check_dn(s, n=None):
    n = n if n is not None else n_colours(s)
    bad = check_partite(s)
    if bad is not None:
        return bad
    colour = {}
    for v in s.universe:
        c = colour_of(s, v, n)
        if c is None:
            return Violation("colour", (v,), f"{v} does not carry exactly one colour")
        colour[v] = c
    for u, v in itertools.combinations(s.universe, 2):
        if (colour[u] == colour[v]) != perp(s, u, v):
            return Violation("label", (u, v), "parts and colours do not match")
    return LabelledPartite(s, parts_of(s), colour)


def dn_independent(s, A, B, C):
    A, B, C = set(A), set(B) | set(A), set(C) | set(A)
    bn, cn = B - A, C - A
    if bn & cn:
        return False
    for b in bn:
        for c in cn:
            if not perp(s, b, c) and not s.holds(E, (b, c)):
                return False
    return True


def dn_amalgam(B, C):
    bset, cset = set(B.universe), set(C.universe)
    A = sorted(bset & cset)
    if B.induced(A) != C.induced(A):
        raise StructureError("B and C disagree on their common part")
    n = n_colours(B)
    rels = {name: set(B.relations[name]) | set(C.relations[name]) for name in B.signature.relation_names}
    for b in sorted(bset - cset):
        for c in sorted(cset - bset):
            if colour_of(B, b, n) != colour_of(C, c, n):
                rels[E].add((b, c))
    return FiniteStructure(B.signature, sorted(bset | cset), rels)


def label_permutation(src, tgt, mapping):
    """Partial permutation of colours induced by a map between labelled
    partite structures."""
    n = n_colours(src)
    out = {}
    for v, w in sorted(mapping.items()):
        i, j = colour_of(src, v, n), colour_of(tgt, w, n)
        if out.get(i, j) != j:
            raise StructureError(f"colour {i} is sent to both {out[i]} and {j}")
        out[i] = j
    if len(set(out.values())) != len(out):
        raise StructureError("two colours are merged")
    return out


# ---------------------------------------------------------------- F

@dataclass
class DoublePartite:
    structure: FiniteStructure
    parts: list


def check_f_class(s):
    bad = check_partite(s)
    if bad is not None:
        return bad
    parts = parts_of(s)
    for P in parts:
        if len(P) > 2:
            return Violation("part-size", P, "a part has more than two points")
    for P in parts:
        if len(P) != 2:
            continue
        v, v2 = P
        for u in s.universe:
            if u in P:
                continue
            if s.holds(E, (u, v)) != s.holds(E, (v2, u)):
                return Violation("partner", (u, v, v2), f"{u}->{v} does not match {v2}->{u}")
    return DoublePartite(s, parts)


def partner(s, v):
    P = [w for w in s.universe if w != v and perp(s, v, w)]
    return P[0] if P else None


def sigma_involution(s):
    r = check_f_class(s)
    if isinstance(r, Violation):
        raise StructureError(r.message)
    m = {}
    for P in r.parts:
        if len(P) != 2:
            raise StructureError(f"part {P} is not full")
        m[P[0]], m[P[1]] = P[1], P[0]
    p = PartialIso(s, s, m)
    bad = p.check()
    if bad is not None:
        raise AssertionError(f"sigma is not an automorphism: {bad}")
    return p


def f_amalgam(B, C):
    bset, cset = set(B.universe), set(C.universe)
    A = sorted(bset & cset)
    if B.induced(A) != C.induced(A):
        raise StructureError("B and C disagree on their common part")
    edges = set(B.relations[E]) | set(C.relations[E])
    known = {}

    def val(x, y):
        if (x, y) in edges:
            return 1
        if (y, x) in edges:
            return 0
        return None

    for b in sorted(bset - cset):
        for c in sorted(cset - bset):
            bp, cp = partner(B, b), partner(C, c)
            v = None
            if bp is not None and val(bp, c) is not None:
                v = 1 - val(bp, c)
            elif cp is not None and val(b, cp) is not None:
                v = 1 - val(b, cp)
            else:
                v = 1
            edges.add((b, c) if v else (c, b))
    out = FiniteStructure(B.signature, sorted(bset | cset), {E: edges})
    bad = check_f_class(out)
    if isinstance(bad, Violation):
        raise AssertionError(f"F amalgam invalid: {bad}")
    return out


# ---------------------------------------------------------------- P(3)

P3_SIG = coloured_sig(3)
# tau values: 0 perp, 1 means a <- b, -1 means a -> b
TAU_TO_EDGE = {0: None, 1: "in", -1: "out"}


def tau(s, a, b):
    if s.holds(E, (a, b)):
        return -1
    if s.holds(E, (b, a)):
        return 1
    return 0


def _rep3(x):
    x %= 3
    return -1 if x == 2 else x


def _colours(s, n=3):
    col = {}
    for i in range(n):
        for (v,) in s.relations.get(f"C{i}", ()):
            col[v] = None if v in col else i
    return col


def check_coloured_poset(s):
    col = _colours(s)
    for v in s.universe:
        if col.get(v) is None:
            return Violation("colour", (v,), f"{v} does not carry exactly one colour")
    less = s.relations[E]
    above = {}
    for u, v in less:
        if u == v:
            return Violation("reflexive", (v,), "order is not strict")
        if (v, u) in less:
            return Violation("antisymmetry", (u, v), "order is not antisymmetric")
        above.setdefault(u, []).append(v)
    for u, v in less:
        for w in above.get(v, ()):
            if (u, w) not in less:
                return Violation("transitivity", (u, v, w), "order is not transitive")
    return None


def _shift(s, sign):
    n = 3
    col = _colours(s, n)
    rel = s.relations[E]
    edges = []
    for a, b in itertools.combinations(s.universe, 2):
        t = -1 if (a, b) in rel else 1 if (b, a) in rel else 0
        if col.get(a) != col.get(b):
            t = _rep3(t + sign * (col[b] - col[a]))
        if t == -1:
            edges.append((a, b))
        elif t == 1:
            edges.append((b, a))
    rels = {f"C{i}": [(v,) for v in s.universe if col.get(v) == i] for i in range(n)}
    rels[E] = edges
    return FiniteStructure(P3_SIG, s.universe, rels)


def p3_twist(o):
    bad = check_coloured_poset(o)
    if bad is not None:
        raise StructureError(f"not a coloured poset: {bad.message}")
    return _shift(o, 1)


def p3_untwist(h):
    o = _shift(h, -1)
    bad = check_coloured_poset(o)
    if bad is not None:
        return bad
    return o


def p3_attach_apex(h, apex=None):
    """Add a fresh point v with tau(v, b) = colour of b."""
    if n_colours(h) < 3:
        raise StructureError("apex needs a 3-coloured structure")
    v = apex if apex is not None else (max(h.universe) + 1 if h.universe else 0)
    rels = {name: set(h.relations[name]) for name in h.signature.relation_names}
    for b in h.universe:
        t = _rep3(colour_of(h, b, 3))
        if t == -1:
            rels[E].add((v, b))
        elif t == 1:
            rels[E].add((b, v))
    return FiniteStructure(h.signature, list(h.universe) + [v], rels)
