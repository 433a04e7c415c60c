"""Exterior algebra over exact rational-function coefficients, the truncated
Maurer-Cartan power-series structure equations, restriction to a pseudo-group,
and pull-back substitution for normalized structure equations.

Contact forms are tracked as first-class symbols, but the pipelines here
work modulo contact forms and simply never introduce them; the ``drop`` hook
of :func:`substitute` lets a caller discard a symbol class explicitly when
realizing that convention.
"""

from __future__ import annotations

import itertools
from typing import Callable, Optional

from .exact import ExactError, Q, RatFn
from .jets import Counts, JetContext, mi_bump, mi_factorial, mi_order, mi_up_to, mi_zero


class FormSymbol:
    """A degree-one basis symbol (sigma^a, omega^i, mu^a_B, theta^alpha_J, ...)."""

    __slots__ = ("sid", "kind", "index", "name", "skey")

    def __init__(self, sid: int, kind: str, index: tuple, name: str, skey: tuple):
        self.sid = sid
        self.kind = kind
        self.index = index
        self.name = name
        self.skey = skey

    def __repr__(self):
        return f"FormSymbol({self.name})"


_KIND_RANK = {"sigma": 0, "omega": 1, "mc": 2, "theta": 3, "d": 4, "gen": 9}


class FormContext:
    """Registry of form symbols on top of a JetContext."""

    def __init__(self, jc: JetContext):
        self.jc = jc
        self._syms: list[FormSymbol] = []
        self._by_key: dict[tuple, FormSymbol] = {}
        self.mc_names: dict[int, str] = {}  # field index -> print name (e.g. mu, nu)

    def _intern(self, kind: str, index: tuple, name: str) -> FormSymbol:
        key = (kind, index)
        sym = self._by_key.get(key)
        if sym is None:
            skey = (_KIND_RANK[kind],) + tuple(index)
            sym = FormSymbol(len(self._syms), kind, index, name, skey)
            self._syms.append(sym)
            self._by_key[key] = sym
        return sym

    def by_id(self, sid: int) -> FormSymbol:
        return self._syms[sid]

    def sigma(self, a: int) -> FormSymbol:
        return self._intern("sigma", (a,), f"sigma^{self._coord_name(a)}")

    def omega(self, i: int) -> FormSymbol:
        return self._intern("omega", (i,), f"w^{self.jc.independents[i]}")

    def mc(self, a: int, B: Counts) -> FormSymbol:
        return self._intern("mc", (a, mi_order(B), B), self._mc_name(a, B))

    def theta(self, alpha: int, J: Counts) -> FormSymbol:
        return self._intern("theta", (alpha, mi_order(J), J), f"theta^{self.jc.dependents[alpha]}_{J}")

    def gen(self, name: str) -> FormSymbol:
        return self._intern("gen", (name,), name)

    def _coord_name(self, a: int) -> str:
        names = self.jc.independents + self.jc.dependents
        return names[a] if a < len(names) else str(a)

    def _mc_name(self, a: int, B: Counts) -> str:
        stem = self.mc_names.get(a, f"mu^{self._coord_name(a)}")
        if mi_order(B) == 0:
            return stem
        names = [self._coord_name(i).upper() for i in range(len(B))]
        suffix = "".join(f"{names[i]}{c if c > 1 else ''}" for i, c in enumerate(B) if c)
        return f"{stem}_{suffix}"

    def form(self) -> "ExteriorForm":
        return ExteriorForm(self, {})

    def one_form(self, sym: FormSymbol, coeff=None) -> "ExteriorForm":
        c = coeff if coeff is not None else self.jc.ratfn(1)
        if not isinstance(c, RatFn):
            c = self.jc.ratfn(c)
        if c.is_zero():
            return self.form()
        return ExteriorForm(self, {(sym.sid,): c})

    def scalar_form(self, coeff) -> "ExteriorForm":
        c = coeff if isinstance(coeff, RatFn) else self.jc.ratfn(c)
        if c.is_zero():
            return self.form()
        return ExteriorForm(self, {(): c})


Word = tuple[int, ...]


def _merge_words(fc: FormContext, wa: Word, wb: Word) -> Optional[tuple[Word, int]]:
    """Wedge two sorted words; None if a symbol repeats, else (word, sign)."""
    if not wa:
        return wb, 1
    if not wb:
        return wa, 1
    out: list[int] = []
    sign = 1
    i = j = 0
    keys_a = [fc.by_id(s).skey for s in wa]
    keys_b = [fc.by_id(s).skey for s in wb]
    while i < len(wa) and j < len(wb):
        if wa[i] == wb[j]:
            return None
        if keys_a[i] < keys_b[j]:
            out.append(wa[i])
            i += 1
        else:
            # wb[j] jumps over the remaining (len(wa)-i) symbols of wa
            if (len(wa) - i) % 2 == 1:
                sign = -sign
            out.append(wb[j])
            j += 1
    out.extend(wa[i:])
    out.extend(wb[j:])
    return tuple(out), sign


class ExteriorForm:
    """Graded formal sum of wedge words with RatFn coefficients."""

    __slots__ = ("fc", "terms")

    def __init__(self, fc: FormContext, terms: dict[Word, RatFn]):
        self.fc = fc
        self.terms = terms

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, ExteriorForm) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other: "ExteriorForm") -> "ExteriorForm":
        out = dict(self.terms)
        for w, c in other.terms.items():
            s = out.get(w)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(w, None)
            else:
                out[w] = s
        return ExteriorForm(self.fc, out)

    def __neg__(self):
        return ExteriorForm(self.fc, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "ExteriorForm":
        if not isinstance(c, RatFn):
            c = self.fc.jc.ratfn(c)
        if c.is_zero():
            return self.fc.form()
        return ExteriorForm(self.fc, {w: v * c for w, v in self.terms.items()})

    def wedge(self, other: "ExteriorForm") -> "ExteriorForm":
        out: dict[Word, RatFn] = {}
        for wa, ca in self.terms.items():
            for wb, cb in other.terms.items():
                merged = _merge_words(self.fc, wa, wb)
                if merged is None:
                    continue
                word, sign = merged
                c = ca * cb if sign > 0 else -(ca * cb)
                s = out.get(word)
                s = c if s is None else s + c
                if s.is_zero():
                    out.pop(word, None)
                else:
                    out[word] = s
        return ExteriorForm(self.fc, out)

    def degree_part(self, k: int) -> "ExteriorForm":
        return ExteriorForm(self.fc, {w: c for w, c in self.terms.items() if len(w) == k})

    def symbols(self) -> set[int]:
        out: set[int] = set()
        for w in self.terms:
            out.update(w)
        return out

    def coefficient_of_word(self, word: Word) -> RatFn:
        return self.terms.get(tuple(word), self.fc.jc.ratfn(0))

    def map_coeffs(self, fn: Callable[[RatFn], RatFn]) -> "ExteriorForm":
        out = {}
        for w, c in self.terms.items():
            c2 = fn(c)
            if not c2.is_zero():
                out[w] = c2
        return ExteriorForm(self.fc, out)

    def pretty(self) -> str:
        return format_form(self)

    def __repr__(self):
        return f"ExteriorForm({self.pretty()})"


def format_form(form: ExteriorForm) -> str:
    from .exact import format_ratfn

    if form.is_zero():
        return "0"
    fc = form.fc
    items = sorted(form.terms.items(), key=lambda wc: (len(wc[0]), [fc.by_id(s).skey for s in wc[0]]))
    parts = []
    for word, c in items:
        mono = "^".join(fc.by_id(s).name for s in word) if word else ""
        cs = format_ratfn(c)
        if not mono:
            parts.append(cs)
        elif cs == "1":
            parts.append(mono)
        elif cs == "-1":
            parts.append(f"-{mono}")
        else:
            if " + " in cs or " - " in cs or cs.startswith("-") and mono:
                if not (cs.startswith("-") and " " not in cs):
                    cs = f"({cs})"
            parts.append(f"{cs}*{mono}")
    out = parts[0]
    for piece in parts[1:]:
        out += f" - {piece[1:]}" if piece.startswith("-") else f" + {piece}"
    return out


def substitute(
    form: ExteriorForm,
    mapping: dict[int, ExteriorForm],
    coeff_sub: Optional[Callable[[RatFn], RatFn]] = None,
    drop: Optional[Callable[[FormSymbol], bool]] = None,
) -> ExteriorForm:
    """Replace symbols by one-forms (with signs handled by re-wedging), apply a
    coefficient substitution, and optionally drop a symbol class."""
    fc = form.fc
    out = fc.form()
    for word, c in form.terms.items():
        if coeff_sub is not None:
            c = coeff_sub(c)
            if c.is_zero():
                continue
        piece = fc.scalar_form(c)
        dead = False
        for sid in word:
            sym = fc.by_id(sid)
            if drop is not None and drop(sym):
                dead = True
                break
            repl = mapping.get(sid)
            piece = piece.wedge(repl if repl is not None else fc.one_form(sym))
            if piece.is_zero():
                dead = True
                break
        if not dead:
            out = out + piece
    return out


def exterior_derivative(
    form: ExteriorForm,
    sym_rules: Callable[[FormSymbol], Optional[ExteriorForm]],
    coeff_rule: Callable[[RatFn], ExteriorForm],
) -> ExteriorForm:
    """Graded-Leibniz exterior derivative.

    ``sym_rules`` returns d(symbol) as a 2-form (None means no rule, which
    raises: equation sets must be closed over the symbols they mention).
    ``coeff_rule`` returns the 1-form differential of a scalar coefficient.
    """
    fc = form.fc
    out = fc.form()
    for word, c in form.terms.items():
        base = ExteriorForm(fc, {word: fc.jc.ratfn(1)})
        dc = coeff_rule(c)
        if not dc.is_zero():
            out = out + dc.wedge(base)
        for pos, sid in enumerate(word):
            sym = fc.by_id(sid)
            rule = sym_rules(sym)
            if rule is None:
                raise ExactError(f"incomplete structure rules: no d({sym.name})")
            if rule.is_zero():
                continue
            before = ExteriorForm(fc, {tuple(word[:pos]): c if pos % 2 == 0 else -c})
            after = ExteriorForm(fc, {tuple(word[pos + 1 :]): fc.jc.ratfn(1)})
            out = out + before.wedge(rule).wedge(after)
    return out


class EquationSet:
    """A collection of structure equations d(symbol) = form.

    ``residual`` lists symbols that are allowed to appear without an equation
    (isotropy directions of a partial frame); everything else mentioned by a
    right side must itself carry an equation for the d^2 audit to run.
    """

    def __init__(self, fc: FormContext):
        self.fc = fc
        self.equations: dict[int, ExteriorForm] = {}
        self.residual: set[int] = set()

    def set(self, sym: FormSymbol, rhs: ExteriorForm) -> None:
        self.equations[sym.sid] = rhs

    def get(self, sym: FormSymbol) -> Optional[ExteriorForm]:
        return self.equations.get(sym.sid)

    def mark_residual(self, sym: FormSymbol) -> None:
        self.residual.add(sym.sid)

    def items(self):
        return [(self.fc.by_id(sid), rhs) for sid, rhs in self.equations.items()]

    def dangling_symbols(self) -> list[FormSymbol]:
        seen: set[int] = set()
        for rhs in self.equations.values():
            seen |= rhs.symbols()
        out = []
        for sid in sorted(seen):
            if sid not in self.equations and sid not in self.residual:
                out.append(self.fc.by_id(sid))
        return out

    def d_squared_audit(self, coeff_rule: Callable[[RatFn], ExteriorForm], skip_missing: bool = False):
        """Apply d to every right side; nonzero results are returned as
        (symbol, residual 2-form) failures.  With ``skip_missing`` equations
        whose right side mentions a symbol lacking both an equation and a
        residual mark are skipped instead of raising (useful at truncation
        boundaries)."""
        failures = []
        for sid, rhs in self.equations.items():
            def rules(sym: FormSymbol):
                if sym.sid in self.equations:
                    return self.equations[sym.sid]
                if sym.sid in self.residual:
                    return None if not skip_missing else None
                return None

            missing = [
                s
                for s in rhs.symbols()
                if s not in self.equations and s not in self.residual
            ]
            if missing:
                if skip_missing:
                    continue
                raise ExactError(
                    f"dangling symbols in d({self.fc.by_id(sid).name}): "
                    + ", ".join(self.fc.by_id(s).name for s in missing)
                )
            residual_hit = [s for s in rhs.symbols() if s in self.residual]
            if residual_hit:
                # d of a residual form is unknown; audit only if none appear
                continue
            dd = exterior_derivative(rhs, lambda sym: self.equations.get(sym.sid, None) if sym.sid in self.equations else None, coeff_rule)
            if not dd.is_zero():
                failures.append((self.fc.by_id(sid), dd))
        return failures


# -- diffeomorphism structure equations -----------------------------------------


def diffeo_structure_equations(fc: FormContext, m: int, N: int) -> EquationSet:
    """Structure equations of the diffeomorphism pseudo-group in dimension m.

    Produces d(sigma^a) for each a and d(mu^a_B) for #B <= N-1 by expanding
    the Maurer-Cartan power-series identity and matching coefficients of the
    formal parameters degree by degree.
    """
    jc = fc.jc
    eqs = EquationSet(fc)
    one = jc.ratfn(1)
    for b in range(m):
        rhs = fc.form()
        for a in range(m):
            mu_ba = fc.one_form(fc.mc(b, mi_bump(mi_zero(m), a)))
            rhs = rhs + mu_ba.wedge(fc.one_form(fc.sigma(a)))
        eqs.set(fc.sigma(b), rhs)
    for b in range(m):
        for B in mi_up_to(m, max(N - 1, 0)):
            rhs = fc.form()
            fact_B = mi_factorial(B)
            for a in range(m):
                # B1 = B, B2 = 0 term: -(1/B!) mu^b_{B+e_a} wedge sigma^a, scaled by B!
                lead = fc.one_form(fc.mc(b, mi_bump(B, a)))
                rhs = rhs + fc.one_form(fc.sigma(a)).wedge(lead)
                for B1 in _splits_below(B):
                    B2 = tuple(x - y for x, y in zip(B, B1))
                    coeff = Q(fact_B, mi_factorial(B1) * mi_factorial(B2))
                    left = fc.one_form(fc.mc(b, mi_bump(B1, a)))
                    right = fc.one_form(fc.mc(a, B2))
                    rhs = rhs + left.wedge(right).scale(coeff)
            eqs.set(fc.mc(b, B), rhs)
    return eqs


def _splits_below(B: Counts) -> list[Counts]:
    """All B1 <= B componentwise with B1 != B."""
    ranges = [range(c + 1) for c in B]
    out = []
    for combo in itertools.product(*ranges):
        if tuple(combo) != B:
            out.append(tuple(combo))
    return out


def restrict_to_pseudogroup(eqs: EquationSet, mcrel, order: int) -> EquationSet:
    """Substitute solved Maurer-Cartan symbols by their lifted basis
    expressions, keeping equations for sigma forms and basis mu forms only."""
    fc = eqs.fc
    jc = fc.jc

    def mc_form(key) -> ExteriorForm:
        if mcrel.is_basis(key):
            return fc.one_form(fc.mc(key[0], key[1]))
        out = fc.form()
        for k2, c in mcrel.relation(key).items():
            out = out + fc.one_form(fc.mc(k2[0], k2[1])).scale(c)
        return out

    mapping: dict[int, ExteriorForm] = {}
    for sid in set().union(*[rhs.symbols() for rhs in eqs.equations.values()]) if eqs.equations else set():
        sym = fc.by_id(sid)
        if sym.kind == "mc":
            key = (sym.index[0], sym.index[2])
            if not mcrel.is_basis(key):
                mapping[sid] = mc_form(key)
    out = EquationSet(fc)
    for sym, rhs in eqs.items():
        if sym.kind == "mc":
            key = (sym.index[0], sym.index[2])
            if not mcrel.is_basis(key):
                continue
        out.set(sym, substitute(rhs, mapping))
    return out
