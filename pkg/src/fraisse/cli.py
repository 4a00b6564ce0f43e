"""fraisse command line.

Every command prints (or writes with --report) a JSON report that echoes the
command, the seed and the budgets.  Exit codes: 0 ok, 1 audited failure,
2 usage or input error, 3 budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__
from . import circle, io, partite, zoo
from .classes import get_class
from .hypertournaments import h4
from .independence import (audit_axioms, audit_freeness, audit_symmetry, get_predicate, mutate)
from .limits import (BudgetExhausted, ConstructionError, LazyAutomorphism, alt_obstruction_note,
                     build, default_budgets, exterior_types, free_swir_commutator, kr_jep_check,
                     lazy_commutator, moves_maximally_verify, nontrivial_auto, srho_commutator,
                     tn_swap_witness, verify_extension_property)
from .structures import StructureError

OK, FAIL, USAGE, BUDGET = 0, 1, 2, 3

SWIR_CLASS = {"delta": ("multi", {}), "srho": ("srho", {}), "rationals-order": ("q1", {}),
              "random-tournament": ("t2", {}), "labelled-partite": ("dn3", {}),
              "free-amalgam": ("random-graph", {})}


class UsageError(Exception):
    pass


def _class(name):
    try:
        return get_class(name)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _window(text):
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad window {text!r}") from None
    if len(parts) != 3:
        raise UsageError("window takes three sizes a,b,c")
    return parts


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return [_jsonable(v) for v in sorted(x)]
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, circle.CirclePoint):
        return io.point_to_dict(x)
    if hasattr(x, "universe") and hasattr(x, "signature"):
        return io.structure_to_dict(x)
    return x


# ---------------------------------------------------------------- commands

def cmd_check_class(a):
    spec = _class(a.cls)
    s = io.load_structure(a.input)
    bad = spec.check(s)
    if bad is None:
        return OK, {"member": True, "class": spec.kind}
    return FAIL, {"member": False, "class": spec.kind,
                  "violation": {"kind": bad.kind, "witness": list(bad.witness), "message": bad.message}}


def cmd_amalgamate(a):
    spec = _class(a.cls)
    B, C = io.load_structure(a.left), io.load_structure(a.right)
    for s, side in ((B, "left"), (C, "right")):
        bad = spec.check(s)
        if bad is not None:
            raise UsageError(f"{side} input not in class: {bad.message}")
    out = spec.amalgamate(B, C)
    bad = spec.check(out)
    if a.output:
        io.save(out, a.output)
    return (OK if bad is None else FAIL), {"amalgam": io.structure_to_dict(out), "valid": bad is None}


def cmd_swir_audit(a):
    kind = get_predicate(a.swir).kind
    cname, kw = SWIR_CLASS[kind]
    spec = _class(a.cls or cname)
    pred = get_predicate(kind, spec=getattr(spec, "spec", None))
    if a.mutate:
        pred = mutate(pred)
    lim = build(spec, a.stage, a.seed)
    sizes = _window(a.window)
    rep = audit_axioms(pred, spec, lim, sizes, universe=a.universe, seed=a.seed)
    res = {"audit": rep.as_dict(), "limit_size": lim.size}
    ok = rep.passed
    if a.freeness:
        n, cx = audit_freeness(pred, lim, universe=a.universe)
        res["freeness"] = {"instances": n, "counterexample": _jsonable(cx)}
    if a.symmetry:
        n, cx = audit_symmetry(pred, lim, universe=a.universe)
        res["symmetry"] = {"instances": n, "counterexample": _jsonable(cx)}
    if a.mutate:
        # a mutant is expected to fail; success means the auditor caught it
        caught = any(x.failures for n, x in rep.axioms.items() if n.startswith(("Sta", "Mon")))
        res["mutant_caught"] = caught
        return (OK if caught else FAIL), res
    return (OK if ok else FAIL), res


def cmd_limit(a):
    spec = _class(a.cls)
    lim = build(spec, a.steps, a.seed)
    res = {"class": spec.kind, "size": lim.size, "stages": lim.stage}
    code = OK
    if a.action == "verify":
        rep = verify_extension_property(lim, a.k, budget=a.ext_budget)
        res["extension"] = rep.as_dict()
        code = OK if rep.passed else FAIL
    w = lim.window(a.window)
    res["window"] = io.structure_to_dict(w)
    if a.output:
        io.save(w, a.output)
    return code, res


def cmd_auto(a):
    spec = _class(a.cls)
    lim = build(spec, a.steps, a.seed)
    g = nontrivial_auto(lim, a.seed_kind)
    pts = [int(x) for x in a.points.split(",")] if a.points else list(range(min(8, lim.size)))
    res = {"seed_map": _jsonable(g.fwd)}
    if a.action == "apply":
        res["images"] = {p: g.apply(p) for p in pts}
    elif a.action == "extend":
        for p in pts:
            g.apply(p)
            g.apply_inv(p)
        res["defined"] = len(g.fwd)
        res["coherent"] = g.check_coherent()
    else:
        h = LazyAutomorphism(lim, {v: w for v, w in g.fwd.items()}, name="h")
        f = lazy_commutator(g, h)
        res["commutator"] = {p: f.apply(p) for p in pts}
    res["size"] = lim.size
    return OK, _jsonable(res)


def cmd_transversal(a):
    from .transversal import double_transversal, generic_transversal_vs_image
    lim = build(_class("semigeneric"), a.limit_steps, a.seed)
    g = nontrivial_auto(lim, "swap-cycle")
    if a.mode == "step2":
        res = generic_transversal_vs_image(lim, g, a.steps)
    else:
        res = double_transversal(lim, g, a.steps)
    return (OK if res.passed else FAIL), res.as_dict()


def cmd_circle(a):
    s = io.load_structure(a.input)
    r = circle.circle_realizable(s, a.n, max_points=a.max_points)
    if isinstance(r, circle.Unsat):
        return FAIL, {"realizable": False, "reason": r.reason}
    back = circle.eval_relation(r.config)
    return OK, {"realizable": True,
                "points": {str(k): io.point_to_dict(p) for k, p in sorted(r.points.items())},
                "rechecked": back is not None}


def cmd_witness(a):
    if a.kind == "no-swir":
        # u joins the part of v0 and v2: no edges inside a part
        c = partite.cycle4()
        left = partite.build(partite.SG_SIG, [0, 2, 4], [])
        obs = partite.stationarity_obstruction_search(_class("semigeneric"), (0, 2), left, c)
        if obs is None:
            return FAIL, {"obstruction": None}
        return OK, {"obstruction": {"candidates": [io.structure_to_dict(x) for x in obs.candidates],
                                    "moved_by": [_jsonable(m) for m in obs.moved_by]}}
    st = a.structure.lower()
    if st.startswith("t"):
        n = int(st[1:] or 3)
        A, fa, B, fb = tn_swap_witness(n)
        r = kr_jep_check(_class(f"t{n}"), A, fa, B, fb, a.bound)
        res = {"status": r.status, "bound": r.bound, "searched": r.searched,
               "note": alt_obstruction_note(n) if not r.found else ""}
        if r.found:
            res["structure"] = io.structure_to_dict(r.structure)
            res["f_c"] = _jsonable(r.f_c)
        return (OK if not r.found else FAIL), res
    if st.startswith("s"):
        n = int(st[1:] or 2)
        w = circle.no_dense_conjugacy_witness(n)
        unsat = []
        for s in w.obstructions:
            r = circle.circle_realizable(s, n)
            unsat.append(isinstance(r, circle.Unsat))
        cfg = circle.LocalOrderConfig(n, w.a_points)
        own = circle.circle_realizable(circle.eval_relation(cfg), n)
        res = {"n": n, "q": _jsonable(w.q), "obstructions_unsat": unsat,
               "cycle_realizable": not isinstance(own, circle.Unsat)}
        return (OK if all(unsat) and res["cycle_realizable"] else FAIL), res
    raise UsageError(f"unknown witness structure {a.structure}")


def cmd_maximal_moves(a):
    spec = _class(a.cls)
    lim = build(spec, a.steps, a.seed)
    if spec.kind == "srho":
        g = nontrivial_auto(lim, "move")
        res = srho_commutator(lim, g, a.stages)
        mode = "srho"
    else:
        g = nontrivial_auto(lim)
        res = free_swir_commutator(lim, g, a.stages, pred_kind=a.swir)
        mode = "free"
    rep = moves_maximally_verify(lim, res.f, res.pred, res.types, mode, res.witnesses)
    out = {"witnesses": [{"stage": w.stage, "kind": w.kind, "A": list(w.A), "b": list(w.b),
                          "image": list(w.image), "check": w.check} for w in res.witnesses],
           "revalidated": res.revalidate(), "moves": rep.as_dict()}
    return (OK if rep.passed and out["revalidated"] else FAIL), out


def cmd_p3(a):
    s = io.load_structure(a.input)
    if a.action == "twist":
        out = zoo.p3_twist(s)
    elif a.action == "untwist":
        out = zoo.p3_untwist(s)
        if not hasattr(out, "universe"):
            return FAIL, {"violation": out.message}
    else:
        out = zoo.p3_attach_apex(s)
    if a.output:
        io.save(out, a.output)
    return OK, {"result": io.structure_to_dict(out)}


# ---------------------------------------------------------------- parser

def make_parser():
    p = argparse.ArgumentParser(prog="fraisse", description="Fraisse classes, limits and audits.")
    p.add_argument("--report", help="write the JSON report here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check-class")
    c.add_argument("--class", dest="cls", required=True)
    c.add_argument("--input", required=True)
    c.set_defaults(fn=cmd_check_class)

    c = sub.add_parser("amalgamate")
    c.add_argument("--class", dest="cls", required=True)
    c.add_argument("--left", required=True)
    c.add_argument("--right", required=True)
    c.add_argument("--output")
    c.set_defaults(fn=cmd_amalgamate)

    c = sub.add_parser("swir-audit")
    c.add_argument("--swir", required=True)
    c.add_argument("--class", dest="cls")
    c.add_argument("--stage", type=int, default=200)
    c.add_argument("--window", default="2,2,2")
    c.add_argument("--universe", type=int, default=8)
    c.add_argument("--mutate", action="store_true")
    c.add_argument("--freeness", action="store_true")
    c.add_argument("--symmetry", action="store_true")
    c.set_defaults(fn=cmd_swir_audit)

    c = sub.add_parser("limit")
    c.add_argument("action", choices=("build", "verify"))
    c.add_argument("--class", dest="cls", required=True)
    c.add_argument("--steps", type=int, default=100)
    c.add_argument("--k", type=int, default=3)
    c.add_argument("--ext-budget", type=int, default=None)
    c.add_argument("--window", type=int, default=12)
    c.add_argument("--output")
    c.set_defaults(fn=cmd_limit)

    c = sub.add_parser("auto")
    c.add_argument("action", choices=("extend", "apply", "commutator"))
    c.add_argument("--class", dest="cls", default="t2")
    c.add_argument("--steps", type=int, default=50)
    c.add_argument("--points")
    c.add_argument("--seed-kind", default="swap", choices=("swap", "swap-cycle", "move"))
    c.set_defaults(fn=cmd_auto)

    c = sub.add_parser("transversal")
    c.add_argument("--mode", choices=("step2", "step3"), default="step2")
    c.add_argument("--steps", type=int, default=5)
    c.add_argument("--limit-steps", type=int, default=40)
    c.set_defaults(fn=cmd_transversal)

    c = sub.add_parser("circle")
    c.add_argument("action", choices=("realize",))
    c.add_argument("--input", required=True)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--max-points", type=int, default=8)
    c.set_defaults(fn=cmd_circle)

    c = sub.add_parser("witness")
    c.add_argument("kind", choices=("no-dense-conjugacy", "no-swir"))
    c.add_argument("--structure", default="t3")
    c.add_argument("--bound", type=int, default=4)
    c.set_defaults(fn=cmd_witness)

    c = sub.add_parser("maximal-moves")
    c.add_argument("--class", dest="cls", default="multi")
    c.add_argument("--swir", default="delta")
    c.add_argument("--steps", type=int, default=200)
    c.add_argument("--stages", type=int, default=5)
    c.set_defaults(fn=cmd_maximal_moves)

    c = sub.add_parser("p3")
    c.add_argument("action", choices=("twist", "untwist", "apex"))
    c.add_argument("--input", required=True)
    c.add_argument("--output")
    c.set_defaults(fn=cmd_p3)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = make_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    q, c = default_budgets()
    report = {"command": ["fraisse"] + argv, "version": __version__, "seed": a.seed,
              "budgets": {"per_query": q, "per_construction": c}}
    t0 = time.perf_counter()
    try:
        code, result = a.fn(a)
        report["status"] = "ok" if code == OK else "fail"
        report["result"] = result
    except BudgetExhausted as e:
        code = BUDGET
        report["status"] = "budget"
        report["error"] = str(e)
    except (UsageError, StructureError, OSError, KeyError, ValueError) as e:
        code = USAGE
        report["status"] = "error"
        report["error"] = f"{type(e).__name__}: {e}"
    except ConstructionError as e:
        code = FAIL
        report["status"] = "fail"
        report["error"] = str(e)
    report["exit_code"] = code
    if a.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - t0, 3)}
    text = json.dumps(_jsonable(report), sort_keys=True, indent=1)
    if a.report:
        try:
            with open(a.report, "w") as fh:
                fh.write(text + "\n")
        except OSError as e:
            print(f"cannot write report: {e}", file=sys.stderr)
            return USAGE
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
