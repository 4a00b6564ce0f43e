"""Exact arithmetic on the dense local orders S(n).

A point is q + 2*pi*k/n with q rational.  Every quantity compared is of the
form r + pi*s with r, s rational: zero iff r = s = 0, and otherwise its sign is
read off a rational enclosure of pi that is tightened until it decides.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, cmp_to_key
from math import floor

from .structures import FiniteStructure, Signature, StructureError

PI_SEED = (Fraction(223, 71), Fraction(22, 7))


def _arctan_partial(x, terms):
    s = Fraction(0)
    p = x
    for k in range(terms):
        s += (-1) ** k * p / (2 * k + 1)
        p *= x * x
    return s


@lru_cache(maxsize=None)
def pi_bounds(level):
    """Rational (lo, hi) with lo < pi < hi; width shrinks fast with level."""
    if level <= 0:
        return PI_SEED
    # Machin: pi = 16 atan(1/5) - 4 atan(1/239); alternating partial sums
    # with an odd number of terms overshoot, even undershoot
    t = 2 * level
    a5_hi = _arctan_partial(Fraction(1, 5), t + 1)
    a5_lo = _arctan_partial(Fraction(1, 5), t)
    b_hi = _arctan_partial(Fraction(1, 239), t + 1)
    b_lo = _arctan_partial(Fraction(1, 239), t)
    lo = max(16 * a5_lo - 4 * b_hi, PI_SEED[0])
    hi = min(16 * a5_hi - 4 * b_lo, PI_SEED[1])
    return lo, hi


MAX_LEVEL = 400


def enclose(r, s, level):
    lo, hi = pi_bounds(level)
    a, b = r + s * lo, r + s * hi
    return (a, b) if a <= b else (b, a)


def sign_rpi(r, s):
    """Exact sign of r + pi*s for rationals r, s."""
    r, s = Fraction(r), Fraction(s)
    if s == 0:
        return (r > 0) - (r < 0)
    level = 0
    while level <= MAX_LEVEL:
        lo, hi = enclose(r, s, level)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        level = level + 1 if level < 4 else level * 2
    raise ArithmeticError("pi enclosure did not resolve a nonzero sign")


def to_interval(r, s, width=Fraction(1, 10 ** 6)):
    level = 0
    while True:
        lo, hi = enclose(Fraction(r), Fraction(s), level)
        if hi - lo <= width or level > MAX_LEVEL:
            return lo, hi
        level = level + 1 if level < 4 else level * 2


def simplest_between(a, b):
    """Simplest rational strictly between rationals a < b."""
    a, b = Fraction(a), Fraction(b)
    if not a < b:
        raise ValueError("empty interval")
    fl = floor(a)
    if fl + 1 < b:
        # an integer fits; take the one closest to zero
        lo_int, hi_int = floor(a) + 1, -floor(-b) - 1
        if lo_int <= 0 <= hi_int:
            return Fraction(0)
        return Fraction(lo_int if lo_int > 0 else hi_int)
    if a == fl:
        # (n, b) with b <= n+1
        return fl + 1 / (_simplest_above(1 / (b - fl)))
    # both in (fl, fl+1]; invert fractional parts
    return fl + 1 / simplest_between(1 / (b - fl), 1 / (a - fl))


def _simplest_above(x):
    # simplest rational strictly greater than x
    return Fraction(floor(x) + 1)


def rational_between(x, y):
    """Simplest rational strictly between x = r1 + pi s1 < y = r2 + pi s2."""
    (r1, s1), (r2, s2) = x, y
    if sign_rpi(r2 - r1, s2 - s1) <= 0:
        raise ValueError("need x < y")
    level = 0
    while True:
        _, xh = enclose(Fraction(r1), Fraction(s1), level)
        yl, _ = enclose(Fraction(r2), Fraction(s2), level)
        if xh < yl:
            return simplest_between(xh, yl)
        level += 1


@dataclass(frozen=True, order=False)
class CirclePoint:
    q: Fraction
    k: int
    n: int

    def __init__(self, q, k, n):
        if n < 2:
            raise ValueError("n must be at least 2")
        object.__setattr__(self, "q", Fraction(q))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "k", int(k) % int(n))

    def shift(self, k=1):
        return CirclePoint(self.q, self.k + k, self.n)

    @property
    def angle(self):
        """(r, s) with angle = r + pi*s (not reduced mod 2pi)."""
        return self.q, Fraction(2 * self.k, self.n)

    def is_shift_of(self, other):
        return self.q == other.q

    def __repr__(self):
        return f"P({self.q}, {self.k}/{self.n})"

    def sort_key(self):
        return (self.q, self.k)


def alpha(u, v):
    """Anticlockwise arc from u to v, as (r, s) reduced into [0, 2pi)."""
    if u.n != v.n:
        raise ValueError("points live on different S(n)")
    r = v.q - u.q
    s = Fraction(2 * (v.k - u.k), u.n)
    # guess the winding from floats, then correct exactly
    approx = float(r) + 3.141592653589793 * float(s)
    m = -floor(approx / 6.283185307179586)
    while sign_rpi(r, s + 2 * m) < 0:
        m += 1
    while sign_rpi(r, s + 2 * m - 2) >= 0:
        m -= 1
    return r, s + 2 * m


def angle_compare(u, v, j):
    """sign(alpha(u, v) - 2*pi*j/n)."""
    r, s = alpha(u, v)
    return sign_rpi(r, s - Fraction(2 * j, u.n))


def s_index(u, v):
    """The j with S_j(u, v), or None when the arc is a multiple of 2pi/n."""
    if u.q == v.q:
        return None
    r, s = alpha(u, v)
    n = u.n
    # alpha / (2pi/n) lies strictly between j and j+1
    lo, hi = 0, n - 1
    j = None
    for jj in range(n):
        if sign_rpi(r, s - Fraction(2 * (jj + 1), n)) < 0:
            j = jj
            break
    return j


def theta(u):
    """Angle of u in [0, 2pi)."""
    return alpha(CirclePoint(0, 0, u.n), u) if u.q != 0 or u.k != 0 else (Fraction(0), Fraction(0))


def compare_angles(u, v):
    a, b = theta(u), theta(v)
    return sign_rpi(a[0] - b[0], a[1] - b[1])


def sort_by_angle(points):
    return sorted(points, key=cmp_to_key(compare_angles))


def signature_for(n):
    return Signature(tuple((f"S{j}", 2) for j in range(n)))


@dataclass(frozen=True)
class LocalOrderConfig:
    n: int
    points: tuple

    def __init__(self, n, points):
        pts = list(points)
        for p in pts:
            if p.n != n:
                raise ValueError("point with a different n")
        if len(set(pts)) != len(pts):
            raise ValueError("points must be distinct")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "points", tuple(sort_by_angle(pts)))

    def hat(self):
        return LocalOrderConfig(self.n, {p.shift(k) for p in self.points for k in range(self.n)})

    def index(self, p):
        return self.points.index(p)

    def __len__(self):
        return len(self.points)


def eval_relation(c):
    """The induced S_j structure; ids are positions in c.points."""
    rels = {f"S{j}": [] for j in range(c.n)}
    for i, u in enumerate(c.points):
        for j, v in enumerate(c.points):
            if i != j:
                jj = s_index(u, v)
                if jj is not None:
                    rels[f"S{jj}"].append((i, j))
    return FiniteStructure(signature_for(c.n), range(len(c.points)), rels)


def is_partial_iso_points(mapping):
    """Does the point map preserve every S_j (and no-S) between its points?"""
    items = list(mapping.items())
    if len(set(mapping.values())) != len(items):
        return False
    for (x, fx), (y, fy) in itertools.permutations(items, 2):
        if s_index(x, y) != s_index(fx, fy):
            return False
    return True


# ---------------------------------------------------------------- cuts

@dataclass(frozen=True)
class Cut:
    u: CirclePoint
    v: CirclePoint


def cuts_of_hat(c):
    if not c.points:
        raise ValueError("empty configuration")
    pts = c.hat().points
    return [Cut(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]


def in_cut(x, cut):
    """x strictly inside the anticlockwise open arc of the cut."""
    a = alpha(cut.u, x)
    b = alpha(cut.u, cut.v)
    if a == (0, 0):
        return False
    return sign_rpi(b[0] - a[0], b[1] - a[1]) > 0


def point_in_cut(cut):
    """A rational (k = 0) point inside the cut."""
    lo = theta(cut.u)
    a = alpha(cut.u, cut.v)
    hi = (lo[0] + a[0], lo[1] + a[1])
    q = rational_between(lo, hi)
    return CirclePoint(q, 0, cut.u.n)


def hat_map(f, n):
    return {p.shift(k): w.shift(k) for p, w in f.items() for k in range(n)}


@dataclass
class ExtensionRecipe:
    cut: Cut
    image_cut: Cut
    b0: CirclePoint
    b1: CirclePoint
    certified: bool

    def certify(self, f, b0, b1):
        if not (in_cut(b0, self.cut) and in_cut(b1, self.image_cut)):
            return False
        m = dict(f)
        m[b0] = b1
        return is_partial_iso_points(m)


def extend_in_cut(c, f, cut, image_cut):
    """f: dict point -> point, an isomorphism of induced structures.
    Returns a recipe with concrete rational witnesses b0 -> b1."""
    fh = hat_map(f, c.n)
    if cut.u not in fh or cut.v not in fh:
        raise StructureError("cut endpoints are not in the domain of f")
    if (fh[cut.u], fh[cut.v]) != (image_cut.u, image_cut.v):
        raise StructureError("image cut does not match the cut under f")
    if not is_partial_iso_points(f):
        raise StructureError("f is not a partial isomorphism")
    img = LocalOrderConfig(c.n, list(f.values()))
    if not any(ct == image_cut for ct in cuts_of_hat(img)):
        raise StructureError("image cut is not a cut of the image")
    b0 = point_in_cut(cut)
    b1 = point_in_cut(image_cut)
    rec = ExtensionRecipe(cut, image_cut, b0, b1, False)
    rec.certified = rec.certify(f, b0, b1)
    return rec


# ---------------------------------------------------------------- unfolding

@dataclass(frozen=True)
class ColouredChain:
    items: tuple          # unfolded points, increasing
    colours: tuple        # colour of each item

    def __len__(self):
        return len(self.items)


def sector_unfold(a, c):
    if a.k != 0:
        raise ValueError("a must be a k = 0 point")
    n = a.n
    sector_end = (Fraction(0), Fraction(2, n))
    out = []
    for v in c.points:
        if v.is_shift_of(a):
            continue
        for k in range(n):
            w = v.shift(k)
            r, s = alpha(a, w)
            if sign_rpi(r - sector_end[0], s - sector_end[1]) < 0:
                out.append((alpha(a, w), w, k))
                break
    out.sort(key=cmp_to_key(lambda x, y: sign_rpi(x[0][0] - y[0][0], x[0][1] - y[0][1])))
    return ColouredChain(tuple(w for _, w, _ in out), tuple(k for _, _, k in out))


def sector_fold(a, chain):
    return LocalOrderConfig(a.n, [w.shift(-k) for w, k in zip(chain.items, chain.colours)])


def chain_map_ok(ch1, ch2, mapping):
    """Is the map between chains (given on folded points) order and colour
    preserving?  mapping: unfolded item of ch1 -> unfolded item of ch2."""
    pos1 = {w: i for i, w in enumerate(ch1.items)}
    pos2 = {w: i for i, w in enumerate(ch2.items)}
    col1 = dict(zip(ch1.items, ch1.colours))
    col2 = dict(zip(ch2.items, ch2.colours))
    for x, y in mapping.items():
        if col1[x] != col2[y]:
            return False
    for (x, y), (x2, y2) in itertools.permutations(mapping.items(), 2):
        if (pos1[x] < pos1[x2]) != (pos2[y] < pos2[y2]):
            return False
    return True


# ---------------------------------------------------------------- realizability

@dataclass
class Realization:
    config: LocalOrderConfig
    points: dict          # abstract id -> CirclePoint


@dataclass
class Unsat:
    reason: str
    branches: list = field(default_factory=list)


def _abstract_index(s, n):
    idx = {}
    for j in range(n):
        for (u, v) in s.rel_tuples(f"S{j}"):
            if u == v:
                raise StructureError("relations must be irreflexive")
            if (u, v) in idx:
                raise StructureError(f"two relations on ({u}, {v})")
            idx[(u, v)] = j
    for (u, v), j in idx.items():
        if idx.get((v, u)) != n - 1 - j:
            raise StructureError(f"converse of S{j}({u},{v}) missing")
    return idx


def _neg_cycle(nodes, edges):
    """Bellman-Ford with (weight, eps-count) lexicographic weights.
    edges: list (u, v, c, strict) meaning x_v - x_u < c (or <=).
    Returns (potentials, None) or (None, cycle)."""
    dist = {v: (Fraction(0), 0) for v in nodes}
    pred = {v: None for v in nodes}
    w = [(u, v, (Fraction(c), -1 if st else 0), (u, v, c, st)) for u, v, c, st in edges]
    last = None
    for _ in range(len(nodes)):
        last = None
        for u, v, wt, e in w:
            cand = (dist[u][0] + wt[0], dist[u][1] + wt[1])
            if cand < dist[v]:
                dist[v] = cand
                pred[v] = (u, e)
                last = v
        if last is None:
            return dist, None
    # walk back to land on the cycle
    x = last
    for _ in range(len(nodes)):
        x = pred[x][0]
    cyc, y = [], x
    while True:
        u, e = pred[y]
        cyc.append(e)
        y = u
        if y == x:
            break
    return None, list(reversed(cyc))


def _pick_eps(dist, edges):
    eps = Fraction(1, 2)
    for u, v, c, st in edges:
        dc = dist[v][0] - dist[u][0]
        de = dist[v][1] - dist[u][1]
        slack = Fraction(c) - dc
        if de > 0 and slack > 0:
            eps = min(eps, slack / de / 2)
    return eps


def circle_realizable(s, n, max_points=8):
    """Exact rational realization of an abstract S_j structure, or Unsat with
    the infeasible cycle of every branch."""
    idx = _abstract_index(s, n)
    pts = list(s.universe)
    if not pts:
        return Realization(LocalOrderConfig(n, []), {})
    if len(pts) > max_points:
        raise ValueError(f"at most {max_points} points supported")
    # pairs with no S_j must be shift copies: that has to be an equivalence
    classes = []
    for v in pts:
        for cl in classes:
            if all((v, w) not in idx for w in cl):
                if any((v, w) in idx for w in cl):
                    return Unsat("shift copies not an equivalence")
                cl.append(v)
                break
        else:
            classes.append([v])
    for cl in classes:
        for a, b in itertools.combinations(cl, 2):
            if (a, b) in idx:
                return Unsat("shift copies not an equivalence")
        if len(cl) > n:
            return Unsat("more shift copies than sectors")
    for cl in classes:
        for v in pts:
            if v not in cl and any((v, w) not in idx for w in cl):
                return Unsat("shift copies not an equivalence")
    anchor = pts[0]
    others = pts[1:]
    branches = []
    for order in itertools.permutations(others):
        seq = (anchor,) + order
        pos = {v: i for i, v in enumerate(seq)}
        # offsets of shift copies relative to the first member of their class
        shift_pairs = []
        for cl in classes:
            first = min(cl, key=pos.get)
            for v in cl:
                if v != first:
                    shift_pairs.append((first, v))
        for ts in itertools.product(range(1, n), repeat=len(shift_pairs)):
            edges = []
            nodes = list(pts) + ["z"]
            # x_anchor = 0, so x_v - x_anchor < n; chain order strict
            edges.append(("z", anchor, 0, False))
            edges.append((anchor, "z", 0, False))
            for a, b in zip(seq, seq[1:]):
                edges.append((b, a, 0, True))      # x_a - x_b < 0
            edges.append((anchor, seq[-1], n, True))
            for (u, v), j in idx.items():
                wrap = n if pos[v] < pos[u] else 0
                # j < x_v - x_u + wrap < j + 1
                edges.append((u, v, j + 1 - wrap, True))
                edges.append((v, u, wrap - j, True))
            for (a, b), t in zip(shift_pairs, ts):
                # x_b - x_a = t, both directions non-strict (a earlier)
                edges.append((a, b, t, False))
                edges.append((b, a, -t, False))
            dist, cyc = _neg_cycle(nodes, edges)
            if cyc is not None:
                branches.append({"order": list(seq), "shifts": list(ts), "cycle": cyc})
                continue
            eps = _pick_eps(dist, edges)
            base = dist[anchor][0] + dist[anchor][1] * eps
            xs = {v: dist[v][0] + dist[v][1] * eps - base for v in pts}
            real = _to_points(xs, n, classes, pos, idx)
            if real is not None:
                return real
            branches.append({"order": list(seq), "shifts": list(ts), "cycle": "approximation failed"})
    return Unsat("all orders infeasible", branches)


def _to_points(xs, n, classes, pos, idx):
    for level in range(1, 40):
        lo, hi = pi_bounds(level)
        mid = (lo + hi) / 2
        pts = {}
        for cl in classes:
            first = min(cl, key=pos.get)
            x0 = xs[first]
            frac = x0 - floor(x0)
            q = 2 * mid * frac / n
            for v in cl:
                pts[v] = CirclePoint(q, floor(xs[v]), n)
        ok = all(s_index(pts[u], pts[v]) == j for (u, v), j in idx.items())
        ok = ok and all(s_index(pts[u], pts[v]) is None
                        for cl in classes for u in cl for v in cl if u != v)
        if ok and len(set(pts.values())) == len(pts):
            return Realization(LocalOrderConfig(n, list(pts.values())), pts)
    return None


# ---------------------------------------------------------------- S-dot(2)

def sdd2_edges(c):
    """Oriented graph on the hat: u -> v iff the arc from u to v is below pi."""
    if c.n != 2:
        raise ValueError("needs n = 2")
    pts = c.points
    for p in pts:
        if p.shift(1) not in pts:
            raise ValueError("configuration not closed under the antipode")
    edges = []
    for i, u in enumerate(pts):
        for j, v in enumerate(pts):
            if i != j and s_index(u, v) == 0:
                edges.append((i, j))
    return FiniteStructure(Signature((("E", 2),)), range(len(pts)), {"E": edges})


# ---------------------------------------------------------------- witness

WITNESS_Q = {2: Fraction(2), 3: Fraction(19, 10)}


@dataclass
class NoDenseConjugacyWitness:
    n: int
    q: Fraction
    a_points: tuple
    f_a: dict
    b_point: CirclePoint
    f_b: dict
    obstructions: list     # abstract structures that must be unsat


def no_dense_conjugacy_witness(n):
    if n < 2:
        raise ValueError("n must be at least 2")
    q = WITNESS_Q.get(n)
    lo = (Fraction(0), Fraction(2 * (n - 1), n * n))
    hi = (Fraction(0), Fraction(2, n))
    if q is None:
        q = rational_between(lo, hi)
    assert sign_rpi(q - lo[0], -lo[1]) > 0 and sign_rpi(q - hi[0], -hi[1]) < 0
    a = tuple(CirclePoint(k * q, 0, n) for k in range(n + 1))
    f_a = {a[k]: a[(k + 1) % (n + 1)] for k in range(n + 1)}
    if not is_partial_iso_points(f_a):
        raise AssertionError("cyclic shift is not a partial isomorphism")
    b = CirclePoint(0, 0, n)
    cfg = LocalOrderConfig(n, a)
    base = eval_relation(cfg)
    ids = {p: cfg.index(p) for p in a}
    bid = len(a)
    obs = []
    for l in range(n):
        rels = {name: list(base.relations[name]) for name in base.signature.relation_names}
        for p in a:
            rels[f"S{l}"].append((bid, ids[p]))
            rels[f"S{n - 1 - l}"].append((ids[p], bid))
        obs.append(FiniteStructure(base.signature, range(len(a) + 1), rels))
    obs.append(FiniteStructure(base.signature, range(len(a) + 1), base.relations))
    return NoDenseConjugacyWitness(n, q, a, f_a, b, {b: b}, obs)
