"""Sign maps and hypertournaments (several arities at once), the product
formula amalgam, stabiliser reducts and the H4-free class."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import factorial

from .structures import (FiniteStructure, Signature, StructureError, Violation,
                         enumerate_embeddings)


def perm_sign(perm):
    """+1 for an even permutation of 0..n-1, -1 for an odd one."""
    perm = tuple(perm)
    if sorted(perm) != list(range(len(perm))):
        raise ValueError(f"not a permutation: {perm}")
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return -1 if inv % 2 else 1


def sort_sign(tup):
    """(ascending tuple, sign of the permutation that sorts tup)."""
    # arities 2 and 3 are almost every call, so skip the generic loop
    if len(tup) == 2:
        a, b = tup
        return ((a, b), 1) if a < b else ((b, a), -1)
    if len(tup) == 3:
        a, b, c = tup
        inv = (a > b) + (a > c) + (b > c)
        return tuple(sorted(tup)), (-1 if inv & 1 else 1)
    inv = sum(1 for i in range(len(tup)) for j in range(i + 1, len(tup)) if tup[i] > tup[j])
    return tuple(sorted(tup)), (-1 if inv % 2 else 1)


class SignMap:
    """Alternating +-1 map on n-tuples of distinct points, stored on
    ascending representatives."""

    def __init__(self, n, values=None):
        if n < 2:
            raise ValueError("arity must be at least 2")
        self.n = n
        self.values = {}
        for t, v in (values or {}).items():
            self[t] = v

    def __setitem__(self, tup, v):
        if v not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        key, s = sort_sign(tuple(tup))
        if len(set(key)) != len(key) or len(key) != self.n:
            raise ValueError(f"bad tuple {tup}")
        self.values[key] = v * s

    def __getitem__(self, tup):
        key, s = sort_sign(tuple(tup))
        return self.values[key] * s

    def get(self, tup, default=None):
        key, s = sort_sign(tuple(tup))
        if key not in self.values:
            return default
        return self.values[key] * s

    def __contains__(self, tup):
        return tuple(sorted(tup)) in self.values

    def __eq__(self, other):
        return isinstance(other, SignMap) and self.n == other.n and self.values == other.values

    def __repr__(self):
        return f"SignMap(n={self.n}, {len(self.values)} sets)"

    def tuples(self):
        """All tuples with value +1."""
        for key, v in sorted(self.values.items()):
            for p in itertools.permutations(range(self.n)):
                if perm_sign(p) * v == 1:
                    yield tuple(key[i] for i in p)


def check_hypertournament(s, name, n):
    """SignMap for relation `name` of s, or a Violation naming a bad n-set."""
    if s.signature.arity(name) != n:
        raise ValueError(f"relation {name} does not have arity {n}")
    groups = {}
    for t in s.relations[name]:
        if len(set(t)) != len(t):
            raise ValueError(f"tuple {t} has repeated entries")
        key, sg = sort_sign(t)
        groups.setdefault(key, []).append(sg)
    half = factorial(n) // 2
    sm = SignMap(n)
    for key in itertools.combinations(s.universe, n):
        sgs = groups.get(key, [])
        if len(sgs) != half or len(set(sgs)) != 1:
            return Violation("not-alternating", key,
                             f"{name} on {set(key)} is not a single Alt_{n} orbit")
        sm.values[key] = sgs[0]
    return sm


def hypertournament_from_sign_fn(universe, n, f, name="R"):
    sig = Signature(((name, n),))
    return FiniteStructure(sig, universe, {name: list(_tuples_from_fn(universe, n, f))})


def _tuples_from_fn(universe, n, f):
    for key in itertools.combinations(sorted(universe), n):
        v = f(key)
        for p in itertools.permutations(range(n)):
            if perm_sign(p) * v == 1:
                yield tuple(key[i] for i in p)


@dataclass(frozen=True)
class MultiSpec:
    arities: tuple
    delta: int = None
    names: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "arities", tuple(self.arities))
        if any(a < 2 for a in self.arities):
            raise ValueError("arities must be at least 2")
        if self.names is None:
            names = ("R",) if len(self.arities) == 1 else tuple(f"R{i}" for i in range(len(self.arities)))
            object.__setattr__(self, "names", names)
        if self.delta is not None and self.arities[self.delta] != 2:
            raise ValueError("the distinguished index must have arity 2")

    @property
    def signature(self):
        return Signature(tuple(zip(self.names, self.arities)))

    @property
    def delta_name(self):
        return None if self.delta is None else self.names[self.delta]


def check_multi(s, spec):
    out = {}
    for name, n in zip(spec.names, spec.arities):
        r = check_hypertournament(s, name, n)
        if isinstance(r, Violation):
            return r
        out[name] = r
    return out


def from_sign_maps(spec, universe, maps):
    rels = {name: list(maps[name].tuples()) for name in spec.names}
    return FiniteStructure(spec.signature, universe, rels)


def _agree_on_base(B, C):
    A = sorted(set(B.universe) & set(C.universe))
    if B.induced(A) != C.induced(A):
        raise StructureError("B and C disagree on their common part")
    return A


def canonical_amalgam_delta(spec, A, B, C):
    """Amalgam over A with b -> c in the delta reduct for new b, c, and
    every mixed tuple signed by the product of its pairwise delta signs."""
    if spec.delta is None:
        raise ValueError("spec has no distinguished binary relation")
    base = _agree_on_base(B, C)
    if A is not None and set(A.universe) != set(base):
        raise StructureError("B and C must intersect exactly in A")
    mb, mc = check_multi(B, spec), check_multi(C, spec)
    for m in (mb, mc):
        if isinstance(m, Violation):
            raise StructureError(f"input is not a hypertournament: {m.message}")
    bset, cset = set(B.universe), set(C.universe)
    dname = spec.delta_name

    def dsign(x, y):
        if x in bset and y in bset:
            return mb[dname][(x, y)]
        if x in cset and y in cset:
            return mc[dname][(x, y)]
        return 1 if x in bset else -1

    uni = sorted(bset | cset)
    maps = {}
    for name, n in zip(spec.names, spec.arities):
        sm = SignMap(n)
        for key in itertools.combinations(uni, n):
            ks = set(key)
            if ks <= bset:
                sm.values[key] = mb[name].values[key]
            elif ks <= cset:
                sm.values[key] = mc[name].values[key]
            else:
                v = 1
                for i in range(n):
                    for j in range(i + 1, n):
                        v *= dsign(key[i], key[j])
                sm.values[key] = v
        maps[name] = sm
    return from_sign_maps(spec, uni, maps)


def free_amalgam_tn(A, B, C, name="R"):
    """Default T_n completion: mixed ascending tuples get +1."""
    _agree_on_base(B, C)
    n = B.signature.arity(name)
    mb, mc = check_hypertournament(B, name, n), check_hypertournament(C, name, n)
    bset, cset = set(B.universe), set(C.universe)
    uni = sorted(bset | cset)
    sm = SignMap(n)
    for key in itertools.combinations(uni, n):
        ks = set(key)
        if ks <= bset:
            sm.values[key] = mb.values[key]
        elif ks <= cset:
            sm.values[key] = mc.values[key]
        else:
            sm.values[key] = 1
    return FiniteStructure(B.signature, uni, {name: list(sm.tuples())})


def stabiliser_reduct(s, n, A, orderings=None, name="R"):
    """Reduct of an n-hypertournament to the complement of the n-2 points A:
    one relation per subset of A (in the chosen ordering), holding on v
    exactly when (u, v) is an edge."""
    A = tuple(A)
    if len(A) != n - 2:
        raise ValueError(f"need {n - 2} parameters, got {len(A)}")
    if len(set(A)) != len(A):
        raise ValueError("parameters must be distinct")
    orderings = orderings or {}
    rest = [v for v in s.universe if v not in A]
    rels, sig = {}, []
    for r in range(len(A), -1, -1):
        for sub in itertools.combinations(sorted(A), r):
            u = tuple(orderings.get(frozenset(sub), sub))
            rname = name + "".join(f"_{x}" for x in u)
            k = n - len(u)
            sig.append((rname, k))
            rels[rname] = [v for v in itertools.permutations(rest, k) if s.holds(name, u + v)]
    return FiniteStructure(Signature(tuple(sig)), rest, rels)


def reduct_spec(reduct):
    return MultiSpec(tuple(a for _, a in reduct.signature.relations),
                     names=tuple(n for n, _ in reduct.signature.relations))


# ---------------------------------------------------------------- H4

H4_EDGES = ((0, 1, 3), (1, 2, 3), (2, 0, 3), (0, 2, 1))


def cyclic_closure(t):
    return [t[i:] + t[:i] for i in range(len(t))]


def h4(name="R"):
    tups = [c for t in H4_EDGES for c in cyclic_closure(t)]
    return FiniteStructure(Signature(((name, 3),)), range(4), {name: tups})


def check_h4_free(s, name="R"):
    """None if H4 does not embed in s, else one embedding."""
    embs = enumerate_embeddings(h4(name), s, limit=1)
    return embs[0] if embs else None


def w_amalgam(A, B, C, name="R"):
    """Amalgam for H4-free 3-hypertournaments, built from one-point steps
    that add (x, b, c) for every x already present."""
    _agree_on_base(B, C)
    bset, cset = set(B.universe), set(C.universe)
    base = bset & cset
    bnew = sorted(bset - base)
    cnew = sorted(cset - base)
    tups = set(B.relations[name]) | set(C.relations[name])
    border = {b: i for i, b in enumerate(bnew)}
    corder = {c: i for i, c in enumerate(cnew)}
    for b in bnew:
        for c in cnew:
            for x in sorted(base) + bnew + cnew:
                if x in (b, c):
                    continue
                if x in border:
                    lo, hi = sorted((x, b), key=border.get)
                    t = (lo, hi, c)
                elif x in corder:
                    lo, hi = sorted((x, c), key=corder.get)
                    t = (lo, b, hi)
                else:
                    t = (x, b, c)
                if t in tups or any(cc in tups for cc in cyclic_closure(t)):
                    continue
                tups.update(cyclic_closure(t))
    return FiniteStructure(B.signature, sorted(bset | cset), {name: tups})
