"""Concrete independence predicates and an exhaustive axiom auditor.

eval(s, A, B, C) reads "B independent from C over A", with B and C taken
together with A and closed under the functions of s.  s is any reader: a
FiniteStructure or a host.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import partite as pt
from .structures import FiniteStructure, closure_of, qftp

KINDS = ("free-amalgam", "rationals-order", "random-tournament", "delta", "srho", "labelled-partite")
ALIASES = {"multi-hypertournament-delta": "delta", "multi-hypertournament-δ": "delta", "δ": "delta",
           "free": "free-amalgam", "rationals": "rationals-order", "tournament": "random-tournament",
           "dn": "labelled-partite"}


def _sides(s, A, B, C):
    A = set(closure_of(s, A))
    B = set(closure_of(s, set(B) | A))
    C = set(closure_of(s, set(C) | A))
    return A, B - A, C - A


def _free(s, A, B, C, drop=False):
    A, bn, cn = _sides(s, A, B, C)
    if bn & cn:
        return False
    if drop:
        return True
    name = s.signature.relation_names[0]
    return not any(s.holds(name, (b, c)) or s.holds(name, (c, b)) for b in bn for c in cn)


def _rationals(s, A, B, C, drop=False):
    A, bn, cn = _sides(s, A, B, C)
    if bn & cn:
        return False
    if drop:
        return True
    lt = lambda x, y: s.holds("L", (x, y))
    for b in bn:
        for c in cn:
            if any((lt(b, a) and lt(a, c)) or (lt(c, a) and lt(a, b)) for a in A):
                continue
            if not lt(b, c):
                return False
    return True


def _delta_names(s, spec):
    if spec is not None:
        return list(zip(spec.names, spec.arities)), spec.delta_name
    rels = [(n, s.signature.arity(n)) for n in s.signature.relation_names]
    dname = next(n for n, r in rels if r == 2)
    return rels, dname


def _delta(s, A, B, C, spec=None, drop=False):
    """b -> c in the binary reduct; every other mixed tuple carries the
    product of the pairwise binary signs."""
    A, bn, cn = _sides(s, A, B, C)
    if bn & cn:
        return False
    rels, dname = _delta_names(s, spec)
    for b in bn:
        for c in cn:
            if not s.holds(dname, (b, c)):
                return False
    if drop:
        return True
    pts = sorted(A | bn | cn)

    def sgn(name, key):
        return 1 if s.holds(name, key) else -1

    for name, r in rels:
        if r == 2:
            continue
        for key in itertools.combinations(pts, r):
            ks = set(key)
            if not (ks & bn and ks & cn):
                continue
            v = 1
            for i in range(r):
                for j in range(i + 1, r):
                    v *= sgn(dname, (key[i], key[j]))
            if sgn(name, key) != v:
                return False
    return True


def _tournament(s, A, B, C, drop=False):
    A, bn, cn = _sides(s, A, B, C)
    if bn & cn:
        return False
    if drop:
        return True
    name = s.signature.relation_names[0]
    return all(s.holds(name, (b, c)) for b in bn for c in cn)


def _srho(s, A, B, C, drop=False):
    if not drop:
        return pt.srho_independent(s, A, B, C)
    # mutant: the clause for b in an old part, c in a new one is dropped
    A, bn, cn = _sides(s, A, B, C)
    if bn & cn:
        return False
    partsA = {s.func("rho", a) for a in A}
    for b in bn:
        for c in cn:
            inb, inc = s.func("rho", b) in partsA, s.func("rho", c) in partsA
            if not inb and not inc and not s.holds(pt.E, (b, c)):
                return False
            if inc and not inb and pt.d(s, b, c) != pt.d(s, b, s.func("rho", c)):
                return False
    return True


def _dn(s, A, B, C, drop=False):
    A, bn, cn = _sides(s, A, B, C)
    if bn & cn:
        return False
    if drop:
        return True
    return all(pt.perp(s, b, c) or s.holds(pt.E, (b, c)) for b in bn for c in cn)


@dataclass
class IndependencePredicate:
    kind: str
    params: dict = field(default_factory=dict)
    mutant: bool = False

    def eval(self, s, A, B, C):
        A, B, C = tuple(A), tuple(B), tuple(C)
        k = self.kind
        if k == "free-amalgam":
            return _free(s, A, B, C, self.mutant)
        if k == "rationals-order":
            return _rationals(s, A, B, C, self.mutant)
        if k == "random-tournament":
            return _tournament(s, A, B, C, self.mutant)
        if k == "delta":
            return _delta(s, A, B, C, self.params.get("spec"), self.mutant)
        if k == "srho":
            return _srho(s, A, B, C, self.mutant)
        if k == "labelled-partite":
            return _dn(s, A, B, C, self.mutant)
        raise ValueError(k)

    __call__ = eval


def get_predicate(kind, spec=None, mutant=False):
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown independence kind {kind}")
    params = {"spec": spec} if spec is not None else {}
    return IndependencePredicate(kind, params, mutant)


def mutate(pred):
    """The same predicate with one defining clause dropped."""
    return IndependencePredicate(pred.kind, dict(pred.params), True)


def eval_pred(pred, window, A, B, C):
    return pred.eval(window, A, B, C)


# ---------------------------------------------------------------- auditing

FLOOR = 50


@dataclass
class AxiomResult:
    name: str
    instances: int = 0
    failures: list = field(default_factory=list)
    floor: int = FLOOR

    @property
    def status(self):
        if self.failures:
            return "fail"
        if self.instances == 0:
            return "vacuous"
        if self.instances < self.floor:
            return "thin"
        return "pass"

    def as_dict(self):
        return {"axiom": self.name, "status": self.status, "instances": self.instances,
                "failures": [_jsonable(f) for f in self.failures[:5]]}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [_jsonable(v) for v in items]
    return x


@dataclass
class AuditReport:
    kind: str
    window: tuple
    universe: int
    seed: int
    axioms: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(a.status == "pass" for a in self.axioms.values())

    def failures(self):
        return {n: a.failures for n, a in self.axioms.items() if a.failures}

    def as_dict(self):
        return {"kind": self.kind, "window": list(self.window), "universe": self.universe,
                "seed": self.seed, "passed": self.passed,
                "axioms": [a.as_dict() for a in self.axioms.values()]}


def _closed_subsets(s, pts, k):
    out = set()
    for size in range(k + 1):
        for S in itertools.combinations(pts, size):
            out.add(tuple(closure_of(s, S)))
    return sorted(out, key=lambda x: (len(x), x))


def _triples(s, pts, sizes, overlap=False):
    """(A, Bn, Cn): A closed with |A| <= a, Bn, Cn tuples of new points with
    their closures over A, sizes <= b, c."""
    a, b, c = sizes
    for A in _closed_subsets(s, pts, a):
        rest = [p for p in pts if p not in A]
        bs = [t for k in range(0, b + 1) for t in itertools.combinations(rest, k)]
        cs = [t for k in range(0, c + 1) for t in itertools.combinations(rest, k)]
        for Bn in bs:
            Bc = set(closure_of(s, set(A) | set(Bn))) - set(A)
            for Cn in cs:
                Cc = set(closure_of(s, set(A) | set(Cn))) - set(A)
                if bool(Bc & Cc) != overlap:
                    continue
                yield A, Bn, Cn


def window_points(limit_or_struct, universe):
    host = getattr(limit_or_struct, "host", limit_or_struct)
    n = min(universe, len(host.universe) if hasattr(host, "universe") else len(host))
    pts = list(host.universe)[:n]
    return host, tuple(closure_of(host, pts))


def audit_axioms(pred, spec, limit, sizes=(2, 2, 2), universe=8, floor=FLOOR, ex_cap=80, seed=0):
    """Check Inv (as qftp-dependence), Ex (constructively), Sta, Mon (both
    sides), Tr, base triviality and disjointness on triples drawn from the
    first `universe` points of the limit."""
    host, pts = window_points(limit, universe)
    win = host.induced(pts)
    rep = AuditReport(pred.kind, tuple(sizes), len(pts), seed)
    ax = {n: AxiomResult(n, floor=floor) for n in
          ("Inv", "Ex", "Sta", "Mon-R", "Mon-L", "Tr", "base", "disjoint")}
    rep.axioms = ax
    ev = lambda A, B, C: pred.eval(win, A, B, C)

    # Inv: the value depends only on the joint type of (A, B, C)
    seen = {}
    indep = []
    by_AB = {}
    for A, Bn, Cn in _triples(win, pts, sizes):
        val = ev(A, Bn, Cn)
        key = (len(A), len(Bn), len(Cn), qftp(win, A + Bn + Cn))
        if key in seen:
            ax["Inv"].instances += 1
            if seen[key][0] != val:
                ax["Inv"].failures.append({"first": seen[key][1], "second": (A, Bn, Cn),
                                           "values": [seen[key][0], val]})
        else:
            seen[key] = (val, (A, Bn, Cn))
        if val:
            indep.append((A, Bn, Cn))
            by_AB.setdefault((A, Bn), []).append(Cn)

    # disjointness and base triviality
    for A, Bn, Cn in _triples(win, pts, sizes, overlap=True):
        ax["disjoint"].instances += 1
        if ev(A, Bn, Cn):
            ax["disjoint"].failures.append({"A": A, "B": Bn, "C": Cn})
    for A in _closed_subsets(win, pts, sizes[0]):
        rest = [p for p in pts if p not in A]
        for k in range(1, sizes[1] + 1):
            for Bn in itertools.combinations(rest, k):
                ax["base"].instances += 1
                if not ev(A, Bn, ()) or not ev(A, (), Bn) or not ev(A, Bn, A):
                    ax["base"].failures.append({"A": A, "B": Bn})

    # Sta: equal types over A, both independent from B -> same joint type
    for (A, Bn), Cs in by_AB.items():
        groups = {}
        for Cn in Cs:
            if not Cn:
                continue
            groups.setdefault(qftp(win, Cn, A), []).append(Cn)
        for t, group in groups.items():
            if len(group) < 2:
                continue
            ref = qftp(win, Bn + group[0], A)
            for C2 in group[1:]:
                ax["Sta"].instances += 1
                if qftp(win, Bn + C2, A) != ref:
                    ax["Sta"].failures.append({"A": A, "B": Bn, "C": group[0], "C'": C2})

    # Mon and Tr via two-point right/left sides
    for A, Bn, Cn in _triples(win, pts, sizes):
        if len(Cn) == 2:
            c1, c2 = Cn
            A1 = tuple(closure_of(win, set(A) | {c1}))
            if c2 in A1:
                continue
            whole = ev(A, Bn, Cn)
            split = ev(A, Bn, (c1,)) and ev(A1, Bn, (c2,))
            if whole:
                ax["Mon-R"].instances += 1
                if not split:
                    ax["Mon-R"].failures.append({"A": A, "B": Bn, "C": Cn})
            if split:
                ax["Tr"].instances += 1
                if not whole:
                    ax["Tr"].failures.append({"A": A, "B": Bn, "C": Cn, "side": "right"})
        if len(Bn) == 2:
            b1, b2 = Bn
            A1 = tuple(closure_of(win, set(A) | {b1}))
            if b2 in A1:
                continue
            whole = ev(A, Bn, Cn)
            split = ev(A, (b1,), Cn) and ev(A1, (b2,), Cn)
            if whole:
                ax["Mon-L"].instances += 1
                if not split:
                    ax["Mon-L"].failures.append({"A": A, "B": Bn, "C": Cn})
            if split:
                ax["Tr"].instances += 1
                if not whole:
                    ax["Tr"].failures.append({"A": A, "B": Bn, "C": Cn, "side": "left"})

    # Ex: amalgamate B and a renamed copy of C over A, realise it in the
    # limit, and check the copy is independent with the same type over A
    if spec is not None and hasattr(limit, "realize"):
        n = 0
        for A, Bn, Cn in _triples(win, pts, sizes):
            if not Bn or not Cn or n >= ex_cap:
                continue
            n += 1
            _ex_instance(pred, spec, limit, A, Bn, Cn, ax["Ex"])
    return rep


def _ex_instance(pred, spec, limit, A, Bn, Cn, res):
    host = limit.host
    B = host.induced(set(A) | set(Bn))
    Cpts = closure_of(host, set(A) | set(Cn))
    fresh = 1 << 41
    ren = {v: (v if v in set(A) else fresh + i) for i, v in enumerate(Cpts)}
    C = host.induced(Cpts).rename(ren)
    am = spec.amalgamate(B, C)
    res.instances += 1
    if spec.check(am) is not None:
        res.failures.append({"A": A, "B": Bn, "C": Cn, "why": "amalgam not in class"})
        return
    to_host = limit.realize(sorted(B.universe), am)
    C2 = tuple(to_host[ren[c]] for c in Cn)
    if qftp(host, C2, A) != qftp(host, Cn, A) or not pred.eval(host, A, Bn, C2):
        res.failures.append({"A": A, "B": Bn, "C": Cn, "realised": C2})


def audit_freeness(pred, limit, sizes=(2, 1, 1), universe=8, lower="generators"):
    """B indep_A C (raw B, C) must imply B indep_A' C for every closed A'
    between (B u C) n A and A.  With lower="generators" the bottom is taken
    over the raw points of B and C; lower="closed" intersects their closures
    instead.  Only matters for signatures with functions.
    Returns (instances, counterexample or None)."""
    host, pts = window_points(limit, universe)
    win = host.induced(pts)
    a, b, c = sizes
    n = 0
    for A in _closed_subsets(win, pts, a):
        if not A:
            continue
        for Bs in _raw_sets(win, pts, b):
            for Cs in _raw_sets(win, pts, c):
                if not pred.eval(win, A, Bs, Cs):
                    continue
                if lower == "closed":
                    lo = set(closure_of(win, set(Bs) | set(Cs))) & set(A)
                else:
                    lo = (set(Bs) | set(Cs)) & set(A)
                for k in range(len(A) + 1):
                    for Ap in itertools.combinations(A, k):
                        if not lo <= set(Ap) or set(closure_of(win, Ap)) != set(Ap):
                            continue
                        n += 1
                        if not pred.eval(win, Ap, Bs, Cs):
                            return n, {"A": A, "A'": Ap, "B": Bs, "C": Cs}
    return n, None


def _raw_sets(s, pts, k):
    for size in range(1, k + 1):
        for S in itertools.combinations(pts, size):
            yield S


def audit_symmetry(pred, limit, sizes=(2, 1, 1), universe=8):
    """Look for B indep_A C without C indep_A B."""
    host, pts = window_points(limit, universe)
    win = host.induced(pts)
    n = 0
    for A, Bn, Cn in _triples(win, pts, sizes):
        if not Bn or not Cn:
            continue
        n += 1
        if pred.eval(win, A, Bn, Cn) != pred.eval(win, A, Cn, Bn):
            return n, {"A": A, "B": Bn, "C": Cn}
    return n, None


def recheck(pred, s, cert):
    """Re-evaluate a stored counterexample; True if it still shows the failure."""
    return pred.eval(s, cert["A"], cert["B"], cert["C"])


def amalgam_coherence(pred, spec, s, A, Bn, Cn):
    """The operator output makes the two sides independent."""
    B = s.induced(set(A) | set(Bn))
    Cpts = closure_of(s, set(A) | set(Cn))
    fresh = 1 << 41
    ren = {v: (v if v in set(A) else fresh + i) for i, v in enumerate(Cpts)}
    C = s.induced(Cpts).rename(ren)
    am = spec.amalgamate(B, C)
    return pred.eval(am, A, Bn, tuple(ren[c] for c in Cn))


def default_predicate_for(spec):
    k = spec.kind
    if k == "random-graph":
        return get_predicate("free-amalgam")
    if k.startswith("q"):
        return get_predicate("rationals-order")
    if k == "t2":
        return get_predicate("random-tournament")
    if k.startswith("multi"):
        return get_predicate("delta", spec=spec.spec)
    if k == "srho":
        return get_predicate("srho")
    if k == "dn":
        return get_predicate("labelled-partite")
    raise ValueError(f"no predicate for {k}")
