"""Omega-partite tournaments: the semigeneric parity condition, its
amalgams, the rho-expansion and its independence relation, and the
stationarity obstruction search."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .structures import (FiniteStructure, Signature, StructureError, Violation,
                         closure_of, enumerate_embeddings)

E = "E"
SG_SIG = Signature(((E, 2),))
RHO_SIG = Signature(((E, 2),), ("rho",))
RHOSIGMA_SIG = Signature(((E, 2),), ("rho", "sigma"))


def d(s, u, v):
    """1 if u -> v, 0 if v -> u, None if u and v are not adjacent."""
    if s.holds(E, (u, v)):
        return 1
    if s.holds(E, (v, u)):
        return 0
    return None


def perp(s, u, v):
    return u == v or d(s, u, v) is None


def parts_of(s, points=None):
    """Partition of the points into perp-classes (assumes perp is an
    equivalence; check_partite verifies that)."""
    pts = list(s.universe if points is None else points)
    parts = []
    for v in pts:
        for P in parts:
            if perp(s, v, P[0]):
                P.append(v)
                break
        else:
            parts.append([v])
    return [tuple(P) for P in parts]


def part_of(s, v, points=None):
    pts = s.universe if points is None else points
    return tuple(w for w in pts if perp(s, v, w))


@dataclass
class PartiteTournament:
    structure: FiniteStructure
    parts: list

    def part(self, v):
        for P in self.parts:
            if v in P:
                return P
        raise KeyError(v)


def check_partite(s):
    pts = s.universe
    for u in pts:
        if s.holds(E, (u, u)):
            return Violation("loop", (u,), f"loop at {u}")
    for u, v in itertools.combinations(pts, 2):
        if s.holds(E, (u, v)) and s.holds(E, (v, u)):
            return Violation("symmetric", (u, v), f"edges both ways between {u} and {v}")
    for u, v, w in itertools.permutations(pts, 3):
        if perp(s, u, v) and perp(s, v, w) and not perp(s, u, w):
            return Violation("perp-not-transitive", (u, v, w), "non-adjacency is not an equivalence")
    return None


def parity_violation(s, parts=None):
    parts = parts if parts is not None else parts_of(s)
    for P, Q in itertools.combinations(parts, 2):
        for u, u2 in itertools.combinations(P, 2):
            for v, v2 in itertools.combinations(Q, 2):
                tot = d(s, u, v) + d(s, u, v2) + d(s, u2, v) + d(s, u2, v2)
                if tot % 2:
                    return Violation("parity", (u, u2, v, v2),
                                     f"odd out-edge count from {{{u},{u2}}} to {{{v},{v2}}}")
    return None


def check_semigeneric(s):
    """PartiteTournament if s is in the semigeneric class, else a Violation."""
    bad = check_partite(s)
    if bad is not None:
        return bad
    parts = parts_of(s)
    bad = parity_violation(s, parts)
    if bad is not None:
        return bad
    return PartiteTournament(s, parts)


def check_rho(s, fname="rho"):
    """rho picks one point of each part and is constant on the part."""
    for v in s.universe:
        r = s.func(fname, v)
        if not perp(s, v, r):
            return Violation("rho-outside-part", (v, r), f"{fname}({v}) not in the part of {v}")
        if s.func(fname, r) != r:
            return Violation("rho-not-idempotent", (v, r), f"{fname} not constant on the part of {v}")
    return None


def check_srho(s):
    r = check_semigeneric(s)
    if isinstance(r, Violation):
        return r
    return check_rho(s) or r


def check_srhosigma(s):
    r = check_srho(s)
    if isinstance(r, Violation):
        return r
    bad = check_rho(s, "sigma")
    if bad is not None:
        return bad
    for v in s.universe:
        if s.func("sigma", v) == s.func("rho", v):
            return Violation("sigma-equals-rho", (v,), f"sigma and rho agree on the part of {v}")
    return r


def build(sig, universe, edges, funcs=None):
    return FiniteStructure(sig, universe, {E: edges}, funcs)


def edges_of(s):
    return set(s.relations[E])


# ---------------------------------------------------------------- parity helpers

def part_equiv(s, P, v):
    """The partition of P by the value of d(u, v)."""
    P = tuple(P)
    if v in P:
        raise ValueError("v must lie outside P")
    blocks = {}
    for u in P:
        val = d(s, u, v)
        if val is None:
            raise ValueError(f"{v} is not adjacent to {u}")
        blocks.setdefault(val, []).append(u)
    return sorted(tuple(b) for b in blocks.values())


def amalgam_3in4(s, b, c):
    """Unique orientation of bc in a two-part configuration: b is perp to a
    point u of one part, c to a point v of the other."""
    # bc is the missing edge, so each side is checked on its own
    pts = [w for w in s.universe if w not in (b, c)]
    for side in (pts + [b], pts + [c]):
        bad = check_semigeneric(s.induced(side))
        if isinstance(bad, Violation):
            raise StructureError(f"input is not parity-valid: {bad.message}")
    if d(s, b, c) is not None:
        raise StructureError("b and c are already joined")
    us = [w for w in pts if perp(s, w, b)]
    vs = [w for w in pts if perp(s, w, c)]
    if not us or not vs:
        raise StructureError("b and c must each lie in a part of the base")
    u, v = us[0], vs[0]
    if d(s, b, v) is None or d(s, u, c) is None:
        raise StructureError("b and c lie in the same part")
    return d(s, u, c) ^ (d(s, b, v) != d(s, u, v))


def _merge(B, C, sig):
    bset, cset = set(B.universe), set(C.universe)
    A = sorted(bset & cset)
    if B.induced(A) != C.induced(A):
        raise StructureError("B and C disagree on their common part")
    edges = edges_of(B) | edges_of(C)
    funcs = {}
    for f in sig.functions:
        m = dict(B.functions[f])
        m.update(C.functions[f])
        funcs[f] = m
    return A, sorted(bset - cset), sorted(cset - bset), edges, funcs


def strong_amalgam_semigeneric(B, C, log=None):
    """Strong amalgam of B and C over their intersection: b perp c when some
    base point is perp to both, forced by a parity square when one exists,
    b -> c otherwise."""
    A, bn, cn, edges, funcs = _merge(B, C, B.signature)
    uni = sorted(set(B.universe) | set(C.universe))
    cur = build(B.signature, uni, edges, funcs or None)
    known = {}

    def dd(x, y):
        if (x, y) in known:
            return known[(x, y)]
        if (y, x) in known:
            v = known[(y, x)]
            return None if v is None else 1 - v
        if x in B and y in B or x in C and y in C:
            return d(cur, x, y)
        return "?"

    for b in bn:
        for c in cn:
            if any(perp(B, a, b) and perp(C, a, c) for a in A):
                known[(b, c)] = None
    for b in bn:
        for c in cn:
            if (b, c) in known:
                continue
            forced = None
            bp = [x for x in uni if x != b and dd(b, x) is None]
            cp = [y for y in uni if y != c and dd(c, y) is None]
            for x in bp:
                for y in cp:
                    vals = (dd(b, y), dd(x, c), dd(x, y))
                    if "?" in vals or None in vals:
                        continue
                    forced = (vals[0] + vals[1] + vals[2]) % 2
                    break
                if forced is not None:
                    break
            if forced is None:
                forced = 1
                if log is not None:
                    log.append(("default", b, c))
            known[(b, c)] = forced
    for (b, c), v in known.items():
        if v == 1:
            edges.add((b, c))
        elif v == 0:
            edges.add((c, b))
    out = build(B.signature, uni, edges, funcs or None)
    bad = check_semigeneric(out)
    if isinstance(bad, Violation):
        raise AssertionError(f"amalgam broke parity: {bad}")
    return out


# ---------------------------------------------------------------- S_rho

def rho_closure(s, pts):
    return closure_of(s, pts)


def srho_independent(s, A, B, C):
    """B independent from C over A for the rho-expansion."""
    A = set(closure_of(s, A))
    B = set(closure_of(s, set(B) | A))
    C = set(closure_of(s, set(C) | A))
    bn, cn = B - A, C - A
    if bn & cn:
        return False
    partsA = {s.func("rho", a) for a in A}
    for b in bn:
        for c in cn:
            rb, rc = s.func("rho", b), s.func("rho", c)
            inb, inc = rb in partsA, rc in partsA
            if not inb and not inc:
                if not s.holds(E, (b, c)):
                    return False
            elif inb and not inc:
                if d(s, b, c) != d(s, rb, c):
                    return False
            elif inc and not inb:
                if d(s, b, c) != d(s, b, rc):
                    return False
    return True


def srho_canonical_amalgam(B, C):
    """Amalgam of rho-expansions over their intersection satisfying the
    three clauses of the independence relation."""
    A, bn, cn, edges, funcs = _merge(B, C, B.signature)
    Aset = set(A)
    for X in (B, C):
        bad = check_rho(X)
        if bad is not None:
            raise StructureError(f"input is not a rho-expansion: {bad.message}")
    for b in bn:
        rb = B.func("rho", b)
        for c in cn:
            rc = C.func("rho", c)
            inb, inc = rb in Aset, rc in Aset
            if not inb and not inc:
                val = 1
            elif inb and not inc:
                val = d(C, rb, c)
            elif inc and not inb:
                val = d(B, b, rc)
            elif rb == rc:
                val = None
            else:
                val = (d(B, b, rc) + d(C, rb, c) + d(B, rb, rc)) % 2
            if val == 1:
                edges.add((b, c))
            elif val == 0:
                edges.add((c, b))
    uni = sorted(set(B.universe) | set(C.universe))
    out = build(B.signature, uni, edges, funcs)
    bad = check_srho(out)
    if isinstance(bad, Violation):
        raise AssertionError(f"rho amalgam invalid: {bad}")
    if "sigma" in B.signature.functions:
        bad = check_srhosigma(out)
        if isinstance(bad, Violation):
            raise AssertionError(f"rho-sigma amalgam invalid: {bad}")
    return out


# ---------------------------------------------------------------- obstruction

@dataclass
class Obstruction:
    candidates: list      # completions (FiniteStructure)
    moved_by: list        # for each candidate, a symmetry (dict) moving it
    symmetries: list


def stationarity_obstruction_search(cls, base, left, right):
    """cls: ClassSpec.  base: ids.  left: structure on base + {x} (x the
    single new point).  right: structure containing base.  Returns an
    Obstruction when every completion is moved by some symmetry, else None."""
    base = tuple(sorted(base))
    (x,) = [v for v in left.universe if v not in base]
    rnew = [v for v in right.universe if v not in base]
    if not rnew:
        return None
    if x in right:
        raise StructureError("the left point must be fresh")
    cands = []
    for ext, gen in cls.one_point_extensions(right, new_id=x):
        if ext.induced(list(base) + [x]) == left:
            cands.append(ext)
    # symmetries of right mapping base onto base and fixing the left type
    syms = []
    for emb in enumerate_embeddings(right, right):
        m = emb.map
        if set(m[v] for v in base) != set(base):
            continue
        mm = dict((v, m[v]) for v in base)
        mm[x] = x
        if _is_auto(left, mm):
            syms.append(dict(m))
    moved = []
    for K in cands:
        mover = None
        for m in syms:
            mm = dict(m)
            mm[x] = x
            if not _is_auto(K, mm):
                mover = m
                break
        if mover is None:
            return None
        moved.append(mover)
    if not cands:
        return None
    return Obstruction(cands, moved, syms)


def _is_auto(s, m):
    for name in s.signature.relation_names:
        for t in s.rel_tuples(name):
            if not s.holds(name, tuple(m[v] for v in t)):
                return False
    for f in s.signature.functions:
        for v in s.universe:
            if m[s.func(f, v)] != s.func(f, m[v]):
                return False
    return True


def cycle4():
    """The directed 4-cycle v0 -> v1 -> v2 -> v3 -> v0."""
    return build(SG_SIG, range(4), [(0, 1), (1, 2), (2, 3), (3, 0)])
