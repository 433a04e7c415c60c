"""Command-line pipeline: ``cartan-frames run <file> <command> [flags]``.

Every command emits a line-delimited tree of key/value records with exact
rational and canonical polynomial strings, followed by a replay digest (a
SHA-256 hash of the report body).  All arithmetic is exact, so digests are
bit-identical across platforms and runs.

Exit codes: 0 success, 1 diagnostics (bad input), 2 internal inconsistency
(a failed d^2 = 0 audit).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction

from .exact import ExactError, RatFn, format_ratfn
from .exterior import diffeo_structure_equations, restrict_to_pseudogroup
from .frames import (
    CrossSection,
    RecurrenceEngine,
    SampledSubmanifold,
    classify_ode,
    commutator_invariants,
    isotropy_annihilator,
    normalized_structure_equations,
    oracle_classify_ode,
    signature_compare,
)
from .involution import (
    SPoly,
    TPoly,
    arbitrary_function_counts,
    cartan_characters,
    cartan_test,
    delta_regular_search,
    groebner_module,
    indices,
    t_homogeneous_component,
)
from .jets import JetContext, mi_order, mi_up_to
from .problem import ParseError, ProblemFile, parse_problem, print_problem
from .pseudogroup import lift_system


class Report:
    def __init__(self, command: str):
        self.lines = [f"report.command = {command}"]

    def add(self, key: str, value) -> None:
        self.lines.append(f"{key} = {value}")

    def render(self) -> str:
        body = "\n".join(self.lines)
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        return f"{body}\ndigest = sha256:{digest}\n"


def _setup(pf: ProblemFile):
    jc, system, cs = pf.build()
    mc = lift_system(system)
    engine = RecurrenceEngine(mc, cs)
    for (stem, coord), alias in pf.print_aliases.items():
        if coord in pf.base:
            engine.fc.mc_names[pf.base.index(coord)] = alias
    return jc, system, cs, mc, engine


def _field_jet_name(pf: ProblemFile, key) -> str:
    from .problem import _field_jet_token

    return _field_jet_token(pf, key[0], key[1])


def cmd_lift(pf: ProblemFile, args, report: Report) -> int:
    jc, system, cs, mc, engine = _setup(pf)
    order = args.order if args.order is not None else 1
    system.prolong(order)
    count = 0
    for key in system.solved_jets(order):
        rhs = mc.relation(key)
        parts = []
        for (f2, B2), coeff in sorted(rhs.items()):
            cs_str = format_ratfn(coeff)
            tok = f"mu[{_field_jet_name(pf, (f2, B2))}]"
            parts.append(f"({cs_str})*{tok}" if cs_str not in ("1",) else tok)
        report.add(f"lift.mu[{_field_jet_name(pf, key)}]", " + ".join(parts) if parts else "0")
        count += 1
    report.add("lift.relation_count", count)
    basis = system.basis_jets(order)
    report.add("lift.basis", ", ".join(_field_jet_name(pf, k) for k in basis))
    return 0


def cmd_structure(pf: ProblemFile, args, report: Report) -> int:
    jc, system, cs, mc, engine = _setup(pf)
    order = args.order if args.order is not None else 1
    fc = engine.fc
    m = system.m
    eqs = diffeo_structure_equations(fc, m, order)
    if system.lead_list:
        system.prolong(order + 1)
        eqs = restrict_to_pseudogroup(eqs, mc, order)
    for sym, rhs in eqs.items():
        report.add(f"structure.d({sym.name})", rhs.pretty())
    return 0


def cmd_recurrence(pf: ProblemFile, args, report: Report) -> int:
    jc, system, cs, mc, engine = _setup(pf)
    order = args.order if args.order is not None else 1
    if args.raw:
        engine = RecurrenceEngine(mc, CrossSection(jc), fc=engine.fc)
        state = None
    else:
        state = engine.normalize(order)
    for i in range(jc.p):
        rec = engine.recurrence(("x", i))
        rhs = state.reduce(rec.rhs) if state is not None else rec.rhs
        report.add(f"recurrence.d({jc.independents[i].upper()})", rhs.pretty())
    for alpha in range(jc.q):
        for J in mi_up_to(jc.p, order):
            coord = ("u", alpha, J)
            if state is not None and cs.status(coord)[0] in ("normalized", "vanishes"):
                continue
            rec = engine.recurrence(coord)
            rhs = state.reduce(rec.rhs) if state is not None else rec.rhs
            name = jc.ctx.var_by_id(jc.invariant_var(coord).vid).name
            report.add(f"recurrence.d({name})", rhs.pretty())
    return 0


def cmd_normalize(pf: ProblemFile, args, report: Report) -> int:
    jc, system, cs, mc, engine = _setup(pf)
    order = args.order if args.order is not None else 3
    state = engine.normalize(order)
    fc = engine.fc
    for key in sorted(state.resolved, key=lambda k: (mi_order(k[1]), k[0], k[1])):
        value, stratum = state.resolved[key]
        report.add(f"frame.{fc.mc(key[0], key[1]).name}", state.reduce(value).pretty())
    mc_order = max(order - 2, 1)
    residual = state.residual_keys(mc_order)
    report.add("frame.residual", ", ".join(fc.mc(k[0], k[1]).name for k in residual) or "none")
    for item in state.blocked:
        report.add("frame.branching_required", ", ".join(item.blockers))
    for form in state.residual_relations:
        report.add("frame.residual_relation", form.pretty())
    return 0


def cmd_coframe(pf: ProblemFile, args, report: Report) -> int:
    jc, system, cs, mc, engine = _setup(pf)
    order = args.order if args.order is not None else 3
    state = engine.normalize(order)
    fc = engine.fc
    mc_order = args.mc_order if args.mc_order is not None else 2
    eqs = diffeo_structure_equations(fc, system.m, mc_order + 1)
    restricted = restrict_to_pseudogroup(eqs, mc, mc_order + 1)
    residual = state.residual_keys(mc_order)
    coframe = normalized_structure_equations(engine, state, restricted, keep_mc=residual)
    for i in range(jc.p):
        report.add(f"coframe.d(w^{jc.independents[i]})", coframe.get(fc.omega(i)).pretty())
    for key in residual:
        sym = fc.mc(key[0], key[1])
        rhs = coframe.get(sym)
        if rhs is not None:
            report.add(f"coframe.d({sym.name})", rhs.pretty())
    Y, partial = commutator_invariants(engine, coframe)
    if partial:
        report.add("coframe.commutators", "partial frame: defined modulo " + ", ".join(sorted({s.name for s in partial})))
    else:
        for (k, i, j), value in sorted(Y.items()):
            if not value.is_zero():
                report.add(
                    f"coframe.Y[{jc.independents[k]};{jc.independents[i]},{jc.independents[j]}]",
                    format_ratfn(value),
                )
    failures, audited, skipped = engine.audit_d_squared(state, coframe, order + 1)
    report.add("coframe.d2_audit", "pass" if not failures else "FAIL")
    report.add("coframe.d2_audited", ", ".join(s.name for s in audited) or "none")
    if skipped:
        report.add("coframe.d2_skipped", ", ".join(s.name for s in skipped))
    if failures:
        for sym, form in failures:
            report.add(f"coframe.d2_residual({sym.name})", form.pretty())
        return 2
    return 0


def _tpoly_from_decls(pf: ProblemFile):
    m = len(pf.base)
    out = []
    for decl in pf.tpoly:
        poly = TPoly(m)
        for counts, target, coeff in decl.terms:
            poly = poly + TPoly(m, {(counts, target): coeff})
        out.append(poly)
    return out


def cmd_cartan_test(pf: ProblemFile, args, report: Report) -> int:
    m = len(pf.base)
    n = args.order if args.order is not None else 1
    if pf.tpoly:
        gens = _tpoly_from_decls(pf)
    else:
        jc, system, cs, mc, engine = _setup(pf)
        state = engine.normalize(max(n + 2, 3))
        gens = isotropy_annihilator(engine, state, n)
    comp = t_homogeneous_component(gens, m, n)
    if not comp:
        report.add("cartan.verdict", "empty degree component")
        return 0
    if args.priority:
        names = args.priority.split(",")
        priority = [pf.base.index(nm) for nm in names]
        search = None
    else:
        search = delta_regular_search(comp, n)
        priority = search["priority"]
    beta = indices(comp, n, priority)
    result = cartan_test(comp, n, priority)
    report.add("cartan.priority", ",".join(pf.base[i] for i in priority))
    for a in sorted(beta, reverse=True):
        report.add(f"cartan.beta[{a}]", beta[a])
    report.add("cartan.rank_next", result["rank_next"])
    report.add("cartan.weighted_sum", result["weighted_sum"])
    report.add("cartan.involutive", str(result["involutive"]).lower())
    if result["delta_regularity_violated"]:
        report.add("cartan.delta_regularity", "violated")
    mchar = args.m if args.m is not None else m
    alpha, neg = cartan_characters(beta, mchar, n)
    for a in sorted(alpha, reverse=True):
        report.add(f"cartan.alpha[{a}]", alpha[a])
    if neg:
        report.add("cartan.alpha_negative", ", ".join(str(a) for a in neg))
    counts, flags = arbitrary_function_counts(alpha, mchar, n, args.stirling_variant)
    for a in sorted(counts, reverse=True):
        report.add(f"cartan.f[{a}]", counts[a])
    if flags:
        report.add("cartan.f_inapplicable", ", ".join(str(a) for a in flags))
    return 0


def cmd_groebner(pf: ProblemFile, args, report: Report) -> int:
    p, q = len(pf.independent), len(pf.dependent)
    gens = []
    for decl in pf.spoly:
        poly = SPoly(p, q)
        for counts, target, coeff in decl.terms:
            poly = poly + SPoly(p, q, {}, {(counts, target): coeff})
        gens.append(poly)
    if not gens:
        report.add("groebner.error", "no spoly block in problem file")
        return 1
    basis = groebner_module(gens)
    for i, g in enumerate(basis):
        report.add(f"groebner.basis[{i}]", g.pretty(pf.independent, pf.dependent))
    report.add("groebner.size", len(basis))
    return 0


def cmd_classify(pf: ProblemFile, args, report: Report) -> int:
    if args.rhs is None:
        report.add("classify.error", "missing --rhs")
        return 1
    jc = JetContext(["x", "u", "p"], ["q"])
    F = _parse_scalar(jc, args.rhs)
    label, i1, i2 = classify_ode(jc, F)
    olabel, o1, o2 = oracle_classify_ode(jc, F)
    report.add("classify.rhs", args.rhs)
    report.add("classify.branch", label)
    report.add("classify.first_invariant_zero", str(i1.is_zero()).lower())
    report.add("classify.second_invariant_zero", str(i2.is_zero()).lower())
    report.add("classify.oracle_branch", olabel)
    report.add("classify.agreement", str(label == olabel).lower())
    return 0 if label == olabel else 2


def _parse_scalar(jc: JetContext, text: str) -> RatFn:
    """Tiny expression evaluator over the classifier coordinates x, u, p."""
    from .problem import ProblemFile as PF
    from .problem import _ExprParser, _Tokens

    pf = PF()
    pf.base = ["x", "u", "p", "q"]
    pf.independent = ["x", "u", "p"]
    pf.dependent = ["q"]
    pf.coeffs = []
    toks = _Tokens(text + " ;")
    parser = _ExprParser(toks, pf, jc)
    value = parser.parse_expr()
    if value.linear:
        raise ExactError("right side must be a function of x, u, p")
    return value.scalar


def cmd_signature(pf: ProblemFile, args, report: Report) -> int:
    if args.data is None:
        report.add("signature.error", "missing --data")
        return 1
    with open(args.data) as handle:
        data = json.load(handle)
    params = data["parameters"]
    n = int(data.get("order", 1))
    tol = float(args.tol if args.tol is not None else data.get("tol", 1e-9))

    def build(side):
        jc = JetContext(params, ["w"])
        grids = [list(map(float, g)) for g in side["grids"]]
        exprs = [_parse_param_expr(jc, params, text) for text in side["invariants"]]
        funcs = [_to_callable(jc, params, e) for e in exprs]
        derive = [_partial_operator(jc, params, i) for i in range(len(params))]
        return SampledSubmanifold(grids, funcs, derive)

    S = build(data["S"])
    Sbar = build(data["Sbar"])
    result = signature_compare(S, Sbar, n, tol)
    report.add("signature.ranks", ",".join(str(r) for r in result.ranks))
    report.add("signature.order", result.order if result.order is not None else "undetermined")
    report.add("signature.rank", result.rank if result.rank is not None else "undetermined")
    report.add("signature.regular", str(result.regular).lower())
    report.add("signature.overlap", str(result.overlap).lower())
    if result.detail:
        report.add("signature.detail", result.detail)
    return 0


def _parse_param_expr(jc: JetContext, params, text: str):
    from .problem import ProblemFile as PF
    from .problem import _ExprParser, _Tokens

    pf = PF()
    pf.base = params + ["w"]
    pf.independent = list(params)
    pf.dependent = ["w"]
    pf.coeffs = []
    toks = _Tokens(text + " ;")
    parser = _ExprParser(toks, pf, jc)
    value = parser.parse_expr()
    return value.scalar


def _to_callable(jc: JetContext, params, expr: RatFn):
    ids = [jc.x_var(i).vid for i in range(len(params))]

    def evaluate(*point):
        mapping = {vid: Fraction(value).limit_denominator(10**12) for vid, value in zip(ids, point)}
        value = expr.subs(mapping)
        return float(value.constant_value())

    evaluate.expr = expr
    return evaluate


def _partial_operator(jc: JetContext, params, i: int):
    var = jc.x_var(i)

    def op(func):
        expr = func.expr
        num = expr.num.partial(var) * expr.den - expr.num * expr.den.partial(var)
        new = RatFn(num, expr.den * expr.den)
        return _to_callable(jc, params, new)

    return op


COMMANDS = {
    "lift": cmd_lift,
    "structure": cmd_structure,
    "recurrence": cmd_recurrence,
    "normalize": cmd_normalize,
    "coframe": cmd_coframe,
    "cartan-test": cmd_cartan_test,
    "groebner": cmd_groebner,
    "classify-ode": cmd_classify,
    "signature-compare": cmd_signature,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cartan-frames")
    sub = parser.add_subparsers(dest="action", required=True)
    run = sub.add_parser("run", help="run a command on a problem file")
    run.add_argument("file")
    run.add_argument("command", choices=sorted(COMMANDS))
    run.add_argument("--order", type=int, default=None)
    run.add_argument("--mc-order", dest="mc_order", type=int, default=None)
    run.add_argument("--m", type=int, default=None)
    run.add_argument("--priority", type=str, default=None)
    run.add_argument("--stirling-variant", choices=["printed", "alternate"], default="printed")
    run.add_argument("--rhs", type=str, default=None)
    run.add_argument("--data", type=str, default=None)
    run.add_argument("--tol", type=float, default=None)
    run.add_argument("--raw", action="store_true", help="recurrence: skip normalization")
    run.add_argument("--out", type=str, default=None)
    echo = sub.add_parser("print", help="canonical form of a problem file")
    echo.add_argument("file")
    args = parser.parse_args(argv)

    try:
        with open(args.file) as handle:
            text = handle.read()
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        pf = parse_problem(text)
    except ParseError as err:
        print(f"{args.file}:{err}", file=sys.stderr)
        return 1
    except ExactError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    if args.action == "print":
        sys.stdout.write(print_problem(pf))
        return 0

    report = Report(args.command)
    try:
        code = COMMANDS[args.command](pf, args, report)
    except ParseError as err:
        print(f"{args.file}:{err}", file=sys.stderr)
        return 1
    except ExactError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    rendered = report.render()
    sys.stdout.write(rendered)
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(rendered)
    return code


if __name__ == "__main__":
    sys.exit(main())
