"""Problem-definition files: a small line-oriented language describing a base
manifold, the submanifold split, an infinitesimal determining system in solved
form, a cross-section with assumptions, and optional polynomial blocks for
direct involutivity runs.

Example::

    base x u p q;
    split independent x u p dependent q;
    coeffs xi eta alpha gamma;
    det {
      xi_p = 0; eta_p = 0; xi_q = 0; eta_q = 0; alpha_q = 0;
      alpha = eta_x + p*(eta_u - xi_x) - p^2*xi_u;
      gamma = alpha_x + p*alpha_u + q*alpha_p - q*(xi_x + p*xi_u + q*xi_p);
    }
    xsec {
      x = 0; u = 0; p = 0;
      q_{u^j x^k} = 0;
      q_p4 = 1;
      assume q_p2x2 != 0;
    }
    print { mu^x as mu; mu^u as nu; }

Subscripts may be written compactly (``q_p2x2``) or in braces with wildcard
exponents (``q_{p^2 u^j}``); a brace exponent that is a name rather than an
integer matches any value, declaring a whole normalization family.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .exact import ExactError, RatFn, format_ratfn
from .frames import CrossSection
from .jets import Coord, Counts, JetContext, coord_u, coord_x, mi_order, mi_zero
from .pseudogroup import DeterminingSystem, LinComb


class ParseError(ExactError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass
class TPolyDecl:
    """A t,T-polynomial given literally: list of (counts, target index, coeff)."""

    terms: list


class ProblemFile:
    """Parsed problem: declarations plus the built symbolic objects."""

    def __init__(self):
        self.base: list[str] = []
        self.independent: list[str] = []
        self.dependent: list[str] = []
        self.coeffs: list[str] = []
        self.print_aliases: dict[tuple[str, str], str] = {}
        self.tpoly: list[TPolyDecl] = []
        self.spoly: list[TPolyDecl] = []
        self.source = ""
        # built objects (populated by parse_problem)
        self.jc: Optional[JetContext] = None
        self.system: Optional[DeterminingSystem] = None
        self.cross_section: Optional[CrossSection] = None

    def build(self):
        return self.jc, self.system, self.cross_section

    @property
    def relation_count(self) -> int:
        return len(self.system.lead_list) if self.system else 0


# -- tokenizer -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<comment>#[^\n]*)|(?P<name>[A-Za-z][A-Za-z0-9]*)|(?P<num>\d+)"
    r"|(?P<op>==|!=|[{}();=+\-*/^_,]))"
)


class _Tokens:
    def __init__(self, text: str = "", tokens: Optional[list] = None):
        if tokens is not None:
            self.tokens = list(tokens)
            self.i = 0
            return
        self.tokens = []
        line, pos = 1, 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                chunk = text[pos:].strip()
                if chunk:
                    raise ParseError(f"unexpected character {chunk[0]!r}", line, pos)
                break
            raw = text[pos : m.end()]
            line += raw.count("\n")
            col = m.end() - (text.rfind("\n", 0, m.end()) + 1)
            pos = m.end()
            if m.lastgroup == "comment":
                continue
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), line, col))
        self.i = 0

    def peek(self, offset=0):
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else ("eof", "", -1, -1)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, line, col = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val!r}", line, col)

    def at(self, value: str) -> bool:
        return self.peek()[1] == value


# -- subscript handling ---------------------------------------------------------


def _split_compact_subscript(sub: str, names: list[str], line: int, col: int) -> Counts:
    """Parse a compact subscript like ``p2x2`` against declared names
    (longest match first), returning exponent counts."""
    counts = [0] * len(names)
    i = 0
    by_length = sorted(range(len(names)), key=lambda k: -len(names[k]))
    while i < len(sub):
        hit = None
        for k in by_length:
            if sub.startswith(names[k], i):
                hit = k
                break
        if hit is None:
            raise ParseError(f"cannot read subscript {sub!r}", line, col)
        i += len(names[hit])
        j = i
        while j < len(sub) and sub[j].isdigit():
            j += 1
        counts[hit] += int(sub[i:j]) if j > i else 1
        i = j
    return tuple(counts)


def _parse_brace_subscript(toks: _Tokens, names: list[str]):
    """Parse ``{ p^2 u^j x }``; returns a tuple with integers for fixed
    exponents and None for wildcard slots."""
    fixed: list[Optional[int]] = [0] * len(names)
    touched = [False] * len(names)
    toks.expect("{")
    while not toks.at("}"):
        kind, val, line, col = toks.next()
        if kind != "name" or val not in names:
            raise ParseError(f"unknown subscript variable {val!r}", line, col)
        slot = names.index(val)
        if touched[slot]:
            raise ParseError(f"repeated subscript variable {val!r}", line, col)
        touched[slot] = True
        exp: Optional[int] = 1
        if toks.at("^"):
            toks.next()
            kind2, val2, l2, c2 = toks.next()
            if kind2 == "num":
                exp = int(val2)
            elif kind2 == "name":
                exp = None
            else:
                raise ParseError("expected exponent", l2, c2)
        fixed[slot] = exp
        if toks.at("*"):
            toks.next()
    toks.expect("}")
    return tuple(fixed)


# -- expressions ------------------------------------------------------------------


class _ExprValue:
    """Polynomial value at most linear in the coefficient-field jets."""

    def __init__(self, jc: JetContext, scalar: RatFn, linear: LinComb):
        self.jc = jc
        self.scalar = scalar
        self.linear = linear

    @classmethod
    def const(cls, jc, value):
        return cls(jc, jc.ratfn(value), {})

    def add(self, other):
        out = dict(self.linear)
        for k, c in other.linear.items():
            s = out.get(k)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
        return _ExprValue(self.jc, self.scalar + other.scalar, out)

    def neg(self):
        return _ExprValue(self.jc, -self.scalar, {k: -c for k, c in self.linear.items()})

    def mul(self, other):
        if self.linear and other.linear:
            raise ExactError("relation is not linear in the coefficient fields")
        if other.linear:
            self, other = other, self
        lin = {k: c * other.scalar for k, c in self.linear.items()}
        lin = {k: c for k, c in lin.items() if not c.is_zero()}
        return _ExprValue(self.jc, self.scalar * other.scalar, lin)

    def pow(self, n: int):
        if self.linear:
            raise ExactError("cannot exponentiate a field-jet expression")
        result = self.jc.ratfn(1)
        for _ in range(n):
            result = result * self.scalar
        return _ExprValue(self.jc, result, {})


class _ExprParser:
    def __init__(self, toks: _Tokens, pf: ProblemFile, jc: JetContext):
        self.toks = toks
        self.pf = pf
        self.jc = jc

    def _subscript_names(self, stem: str) -> list[str]:
        return self.pf.base if stem in self.pf.coeffs else self.pf.independent

    def resolve_name(self, stem: str, line: int, col: int) -> _ExprValue:
        jc = self.jc
        toks = self.toks
        if stem not in self.pf.coeffs and stem not in self.pf.independent and stem not in self.pf.dependent:
            raise ParseError(f"unknown symbol {stem!r}", line, col)
        sub = None
        if toks.at("_"):
            toks.next()
            if toks.at("{"):
                fixed = _parse_brace_subscript(toks, self._subscript_names(stem))
                if any(f is None for f in fixed):
                    raise ParseError("wildcards only appear in cross-section families", line, col)
                sub = tuple(int(f) for f in fixed)
            else:
                kind2, val2, l2, c2 = toks.next()
                if kind2 not in ("name", "num"):
                    raise ParseError("expected subscript", l2, c2)
                sub = _split_compact_subscript(val2, self._subscript_names(stem), l2, c2)
        if stem in self.pf.coeffs:
            fidx = self.pf.coeffs.index(stem)
            B = sub if sub is not None else mi_zero(len(self.pf.base))
            return _ExprValue(jc, jc.ratfn(0), {(fidx, B): jc.ratfn(1)})
        if stem in self.pf.independent:
            if sub is not None:
                raise ParseError("independent variables carry no subscripts", line, col)
            return _ExprValue(jc, jc.rvar(jc.x_var(self.pf.independent.index(stem))), {})
        if stem in self.pf.dependent:
            alpha = self.pf.dependent.index(stem)
            J = sub if sub is not None else mi_zero(len(self.pf.independent))
            return _ExprValue(jc, jc.rvar(jc.u_var(alpha, J)), {})
        raise ParseError(f"unknown symbol {stem!r}", line, col)

    def parse_expr(self) -> _ExprValue:
        value = self.parse_term()
        while self.toks.peek()[1] in ("+", "-"):
            op = self.toks.next()[1]
            rhs = self.parse_term()
            value = value.add(rhs if op == "+" else rhs.neg())
        return value

    def parse_term(self) -> _ExprValue:
        value = self.parse_factor()
        while self.toks.peek()[1] in ("*", "/"):
            op = self.toks.next()[1]
            rhs = self.parse_factor()
            if op == "*":
                value = value.mul(rhs)
            else:
                if rhs.linear or rhs.scalar.is_zero():
                    raise ExactError("division only by nonzero scalar expressions")
                value = value.mul(_ExprValue(self.jc, rhs.scalar.inverse(), {}))
        return value

    def parse_factor(self) -> _ExprValue:
        kind, val, line, col = self.toks.next()
        if val == "-":
            return self.parse_factor().neg()
        if val == "(":
            base = self.parse_expr()
            self.toks.expect(")")
        elif kind == "num":
            base = _ExprValue.const(self.jc, int(val))
        elif kind == "name":
            base = self.resolve_name(val, line, col)
        else:
            raise ParseError(f"unexpected token {val!r}", line, col)
        if self.toks.at("^"):
            self.toks.next()
            kind2, val2, l2, c2 = self.toks.next()
            if kind2 != "num":
                raise ParseError("expected integer exponent", l2, c2)
            base = base.pow(int(val2))
        return base


# -- top-level parser ----------------------------------------------------------------


def parse_problem(text: str) -> ProblemFile:
    toks = _Tokens(text)
    pf = ProblemFile()
    pf.source = text
    raw_det: list[list] = []
    raw_xsec: list[list] = []
    raw_tpoly: list[list] = []
    raw_spoly: list[list] = []
    while toks.peek()[0] != "eof":
        kind, val, line, col = toks.next()
        if val == "base":
            while not toks.at(";"):
                pf.base.append(toks.next()[1])
            toks.expect(";")
        elif val == "split":
            toks.expect("independent")
            while not toks.at("dependent"):
                pf.independent.append(toks.next()[1])
            toks.expect("dependent")
            while not toks.at(";"):
                pf.dependent.append(toks.next()[1])
            toks.expect(";")
        elif val == "coeffs":
            while not toks.at(";"):
                pf.coeffs.append(toks.next()[1])
            toks.expect(";")
        elif val in ("det", "xsec", "tpoly", "spoly"):
            sink = {"det": raw_det, "xsec": raw_xsec, "tpoly": raw_tpoly, "spoly": raw_spoly}[val]
            toks.expect("{")
            while not toks.at("}"):
                sink.append(_capture_statement(toks))
            toks.expect("}")
        elif val == "print":
            toks.expect("{")
            while not toks.at("}"):
                stem = toks.next()[1]
                toks.expect("^")
                coord = toks.next()[1]
                toks.expect("as")
                alias = toks.next()[1]
                toks.expect(";")
                pf.print_aliases[(stem, coord)] = alias
            toks.expect("}")
        elif val == ";":
            continue
        else:
            raise ParseError(f"unknown declaration {val!r}", line, col)
    _validate_declarations(pf)
    _build(pf, raw_det, raw_xsec, raw_tpoly, raw_spoly)
    return pf


def _validate_declarations(pf: ProblemFile) -> None:
    if not pf.base:
        raise ParseError("missing base declaration", 0, 0)
    if not pf.independent or not pf.dependent:
        raise ParseError("missing split declaration", 0, 0)
    if pf.base != pf.independent + pf.dependent:
        raise ParseError("base must list independents then dependents, matching split", 0, 0)
    if pf.coeffs and len(pf.coeffs) != len(pf.base):
        raise ParseError("coeffs must name one coefficient field per base variable", 0, 0)


def _capture_statement(toks: _Tokens) -> list:
    out = []
    depth = 0
    while True:
        kind, val, line, col = toks.peek()
        if kind == "eof":
            raise ParseError("unterminated statement", line, col)
        if val == ";" and depth == 0:
            toks.next()
            return out
        if val == "{":
            depth += 1
        elif val == "}":
            if depth == 0:
                raise ParseError("unterminated statement", line, col)
            depth -= 1
        out.append(toks.next())


def _build(pf: ProblemFile, raw_det, raw_xsec, raw_tpoly, raw_spoly) -> None:
    jc = JetContext(pf.independent, pf.dependent)
    base_coords = [coord_x(i) for i in range(len(pf.independent))]
    base_coords += [coord_u(a, mi_zero(len(pf.independent))) for a in range(len(pf.dependent))]
    if not pf.coeffs:
        pf.coeffs = [f"zeta{name}" for name in pf.base]
    fields = [jc.field(n, base_coords) for n in pf.coeffs]
    system = DeterminingSystem(jc, fields)
    for stmt in raw_det:
        toks = _Tokens(tokens=stmt + [("op", ";", -1, -1)])
        parser = _ExprParser(toks, pf, jc)
        kind, stem, line, col = toks.next()
        if kind != "name" or stem not in pf.coeffs:
            raise ParseError("determining relation must be solved for a coefficient jet", line, col)
        fidx = pf.coeffs.index(stem)
        B = mi_zero(len(pf.base))
        if toks.at("_"):
            toks.next()
            if toks.at("{"):
                fixed = _parse_brace_subscript(toks, pf.base)
                if any(f is None for f in fixed):
                    raise ParseError("wildcards not allowed in determining relations", line, col)
                B = tuple(int(f) for f in fixed)
            else:
                kind2, val2, l2, c2 = toks.next()
                B = _split_compact_subscript(val2, pf.base, l2, c2)
        toks.expect("=")
        value = parser.parse_expr()
        if not value.scalar.is_zero():
            raise ParseError("right side must be linear in the coefficient fields", line, col)
        if toks.peek()[1] != ";":
            k, v, l, c = toks.peek()
            raise ParseError(f"trailing token {v!r}", l, c)
        system.add_relation((fidx, B), value.linear)
    cs = CrossSection(jc)
    for stmt in raw_xsec:
        _build_xsec_statement(pf, jc, cs, stmt)
    for stmt in raw_tpoly:
        pf.tpoly.append(_build_tpoly_statement(pf, stmt))
    for stmt in raw_spoly:
        pf.spoly.append(_build_spoly_statement(pf, stmt))
    pf.jc = jc
    pf.system = system
    pf.cross_section = cs


def _build_xsec_statement(pf: ProblemFile, jc: JetContext, cs: CrossSection, stmt: list) -> None:
    toks = _Tokens(tokens=stmt + [("op", ";", -1, -1)])
    kind, stem, line, col = toks.next()
    if stem == "assume":
        kind2, name2, l2, c2 = toks.next()
        coord = _parse_coord(toks, pf, name2, l2, c2)
        op = toks.next()[1]
        zero = toks.next()
        if zero[1] != "0":
            raise ParseError("assumptions compare against 0", zero[2], zero[3])
        if op == "!=":
            cs.declare_nonvanishing(coord)
        elif op == "==":
            if coord[0] != "u":
                raise ParseError("identically-zero declaration must name a dependent jet", l2, c2)
            cs.declare_vanishing(coord[1], coord[2])
        else:
            raise ParseError(f"unknown assumption operator {op!r}", l2, c2)
        return
    if stem in pf.dependent and toks.at("_") and toks.peek(1)[1] == "{":
        alpha = pf.dependent.index(stem)
        toks.next()
        fixed = _parse_brace_subscript(toks, pf.independent)
        toks.expect("=")
        value = _parse_rational(toks)
        if any(f is None for f in fixed):
            cs.add_pattern(alpha, fixed, value)
        else:
            cs.normalize_coord(coord_u(alpha, tuple(int(f) for f in fixed)), value)
        return
    coord = _parse_coord(toks, pf, stem, line, col)
    toks.expect("=")
    value = _parse_rational(toks)
    cs.normalize_coord(coord, value)


def _parse_coord(toks, pf: ProblemFile, stem: str, line: int, col: int) -> Coord:
    if stem in pf.independent:
        return coord_x(pf.independent.index(stem))
    if stem in pf.dependent:
        alpha = pf.dependent.index(stem)
        J = mi_zero(len(pf.independent))
        if toks.at("_"):
            toks.next()
            if toks.at("{"):
                fixed = _parse_brace_subscript(toks, pf.independent)
                if any(f is None for f in fixed):
                    raise ParseError("wildcards not allowed here", line, col)
                J = tuple(int(f) for f in fixed)
            else:
                kind2, val2, l2, c2 = toks.next()
                J = _split_compact_subscript(val2, pf.independent, l2, c2)
        return coord_u(alpha, J)
    raise ParseError(f"unknown coordinate {stem!r}", line, col)


def _parse_rational(toks) -> Fraction:
    sign = 1
    if toks.at("-"):
        toks.next()
        sign = -1
    kind, val, line, col = toks.next()
    if kind != "num":
        raise ParseError("expected a rational constant", line, col)
    num = int(val)
    den = 1
    if toks.at("/"):
        toks.next()
        kind2, val2, l2, c2 = toks.next()
        if kind2 != "num":
            raise ParseError("expected denominator", l2, c2)
        den = int(val2)
    return Fraction(sign * num, den)


def _build_tpoly_statement(pf: ProblemFile, stmt: list) -> TPolyDecl:
    toks = _Tokens(tokens=stmt + [("op", ";", -1, -1)])
    terms = []
    sign = 1
    coeff = Fraction(1)
    pending: list = []

    def flush(line, col):
        nonlocal sign, coeff, pending
        if pending:
            counts = [0] * len(pf.base)
            target = None
            for kind, what in pending:
                if kind == "t":
                    counts[what[0]] += what[1]
                else:
                    if target is not None:
                        raise ParseError("term must be linear in T", line, col)
                    target = what
            if target is None:
                raise ParseError("term lacks a T factor", line, col)
            terms.append((tuple(counts), target, Fraction(sign) * coeff))
        sign, coeff, pending = 1, Fraction(1), []

    while toks.peek()[1] != ";":
        kind, val, line, col = toks.next()
        if val == "+":
            flush(line, col)
        elif val == "-":
            flush(line, col)
            sign = -1
        elif val == "*":
            continue
        elif kind == "num":
            coeff *= int(val)
            if toks.at("/"):
                toks.next()
                coeff /= int(toks.next()[1])
        elif val == "t":
            toks.expect("_")
            kind2, val2, l2, c2 = toks.next()
            name_counts = _split_compact_subscript(val2, pf.base, l2, c2)
            exp = 1
            if toks.at("^"):
                toks.next()
                exp = int(toks.next()[1])
            for slot, c in enumerate(name_counts):
                if c:
                    pending.append(("t", (slot, c * exp)))
        elif val == "T":
            toks.expect("^")
            kind2, val2, l2, c2 = toks.next()
            if val2 not in pf.base:
                raise ParseError(f"unknown target {val2!r}", l2, c2)
            pending.append(("T", pf.base.index(val2)))
        else:
            raise ParseError(f"unexpected token {val!r} in tpoly", line, col)
    flush(-1, -1)
    return TPolyDecl(terms)


def _build_spoly_statement(pf: ProblemFile, stmt: list) -> TPolyDecl:
    """s,S-polynomial statements like ``s_x*S^q;`` over the split names."""
    toks = _Tokens(tokens=stmt + [("op", ";", -1, -1)])
    terms = []
    sign = 1
    coeff = Fraction(1)
    pending: list = []

    def flush(line, col):
        nonlocal sign, coeff, pending
        if pending:
            counts = [0] * len(pf.independent)
            target = None
            for kind, what in pending:
                if kind == "s":
                    counts[what[0]] += what[1]
                else:
                    if target is not None:
                        raise ParseError("term must be linear in S", line, col)
                    target = what
            if target is None:
                raise ParseError("term lacks an S factor", line, col)
            terms.append((tuple(counts), target, Fraction(sign) * coeff))
        sign, coeff, pending = 1, Fraction(1), []

    while toks.peek()[1] != ";":
        kind, val, line, col = toks.next()
        if val == "+":
            flush(line, col)
        elif val == "-":
            flush(line, col)
            sign = -1
        elif val == "*":
            continue
        elif kind == "num":
            coeff *= int(val)
            if toks.at("/"):
                toks.next()
                coeff /= int(toks.next()[1])
        elif val == "s":
            toks.expect("_")
            kind2, val2, l2, c2 = toks.next()
            name_counts = _split_compact_subscript(val2, pf.independent, l2, c2)
            exp = 1
            if toks.at("^"):
                toks.next()
                exp = int(toks.next()[1])
            for slot, c in enumerate(name_counts):
                if c:
                    pending.append(("s", (slot, c * exp)))
        elif val == "S":
            toks.expect("^")
            kind2, val2, l2, c2 = toks.next()
            if val2 not in pf.dependent:
                raise ParseError(f"unknown target {val2!r}", l2, c2)
            pending.append(("S", pf.dependent.index(val2)))
        else:
            raise ParseError(f"unexpected token {val!r} in spoly", line, col)
    flush(-1, -1)
    return TPolyDecl(terms)


# -- canonical printing ----------------------------------------------------------------


def print_problem(pf: ProblemFile) -> str:
    """Canonical unparse; parsing the output reproduces the same problem."""
    lines = [f"base {' '.join(pf.base)};"]
    lines.append(f"split independent {' '.join(pf.independent)} dependent {' '.join(pf.dependent)};")
    if pf.coeffs:
        lines.append(f"coeffs {' '.join(pf.coeffs)};")
    system, cs = pf.system, pf.cross_section
    if system is not None and system.lead_list:
        lines.append("det {")
        for lead in system.lead_list:
            tok = _field_jet_token(pf, lead[0], lead[1])
            lines.append(f"  {tok} = {_lincomb_token(pf, system.original[lead])};")
        lines.append("}")
    if cs is not None and (cs.entries or cs.patterns or cs.nonvanishing or cs.vanish_generators):
        lines.append("xsec {")
        for coord, value in cs.entries:
            lines.append(f"  {_coord_token(pf, coord)} = {value};")
        for pat in cs.patterns:
            sub = []
            wild = iter("jklmnr")
            for name, f in zip(pf.independent, pat.fixed):
                if f is None:
                    sub.append(f"{name}^{next(wild)}")
                elif f:
                    sub.append(f"{name}^{f}" if f != 1 else name)
            lines.append(f"  {pf.dependent[pat.alpha]}_{{{' '.join(sub)}}} = {pat.value};")
        for coord in cs.nonvanishing:
            lines.append(f"  assume {_coord_token(pf, coord)} != 0;")
        for alpha, gen, value in cs.vanish_generators:
            lines.append(f"  assume {_coord_token(pf, ('u', alpha, gen))} == 0;")
        lines.append("}")
    if pf.print_aliases:
        lines.append("print {")
        for (stem, coord), alias in pf.print_aliases.items():
            lines.append(f"  {stem}^{coord} as {alias};")
        lines.append("}")
    for block, letter, varnames, targets in (
        (pf.tpoly, "t", pf.base, pf.base),
        (pf.spoly, "s", pf.independent, pf.dependent),
    ):
        if not block:
            continue
        lines.append(f"{letter}poly {{")
        for decl in block:
            parts = []
            for counts, target, coeff in decl.terms:
                mono = "*".join(
                    f"{letter}_{varnames[i]}" + (f"^{c}" if c > 1 else "")
                    for i, c in enumerate(counts)
                    if c
                )
                body = (mono + "*" if mono else "") + f"{letter.upper()}^{targets[target]}"
                if coeff == 1:
                    parts.append(body)
                elif coeff == -1:
                    parts.append(f"-{body}")
                else:
                    parts.append(f"{coeff}*{body}")
            joined = parts[0] if parts else "0"
            for piece in parts[1:]:
                joined += f" - {piece[1:]}" if piece.startswith("-") else f" + {piece}"
            lines.append(f"  {joined};")
        lines.append("}")
    return "\n".join(lines) + "\n"


def _field_jet_token(pf: ProblemFile, fidx: int, B: Counts) -> str:
    name = pf.coeffs[fidx]
    if mi_order(B) == 0:
        return name
    sub = "".join(f"{pf.base[i]}{c if c > 1 else ''}" for i, c in enumerate(B) if c)
    return f"{name}_{sub}"


def _coord_token(pf: ProblemFile, coord: Coord) -> str:
    if coord[0] == "x":
        return pf.independent[coord[1]]
    alpha, J = coord[1], coord[2]
    if mi_order(J) == 0:
        return pf.dependent[alpha]
    sub = "".join(f"{pf.independent[i]}{c if c > 1 else ''}" for i, c in enumerate(J) if c)
    return f"{pf.dependent[alpha]}_{sub}"


def _lincomb_token(pf: ProblemFile, rhs: LinComb) -> str:
    if not rhs:
        return "0"
    parts = []
    for (fidx, B), coeff in sorted(rhs.items()):
        cs = format_ratfn(coeff)
        tok = _field_jet_token(pf, fidx, B)
        if cs == "1":
            parts.append(tok)
        elif cs == "-1":
            parts.append(f"-{tok}")
        else:
            if " + " in cs or " - " in cs:
                cs = f"({cs})"
            parts.append(f"{cs}*{tok}")
    out = parts[0]
    for piece in parts[1:]:
        out += f" - {piece[1:]}" if piece.startswith("-") else f" + {piece}"
    return out
