"""Exact scalar, polynomial and rational-function arithmetic plus deterministic
linear algebra.

Everything downstream (jet calculus, recurrence relations, symbol matrices)
runs on the types in this module, so the design goals are: no floats anywhere,
canonical representatives for every value, and fully deterministic pivoting.

Scalars are ``fractions.Fraction``.  Polynomials are sparse dictionaries
mapping exponent keys to nonzero Fractions; an exponent key is a sorted tuple
of ``(variable_id, exponent)`` pairs so that the variable table can grow
lazily without invalidating existing values.  The canonical monomial order is
graded lexicographic with respect to each variable's structural sort key.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Optional, Sequence

Q = Fraction
QZERO = Fraction(0)
QONE = Fraction(1)

ExpKey = tuple[tuple[int, int], ...]


class ExactError(Exception):
    """Malformed input to an exact-arithmetic operation (e.g. zero denominator)."""


class InconsistentSystemError(ExactError):
    """A linear system reduced to the contradiction 0 = nonzero."""


class Variable:
    """An interned indeterminate.

    ``skey`` is a structural sort key (kind rank plus indices) used for the
    graded-lex order; it does not depend on registration order, so canonical
    forms are reproducible across runs that build the same variables in a
    different sequence.
    """

    __slots__ = ("vid", "name", "skey")

    def __init__(self, vid: int, name: str, skey: tuple):
        self.vid = vid
        self.name = name
        self.skey = skey

    def __repr__(self):
        return f"Variable({self.name!r})"


class Context:
    """Registry of variables shared by all polynomials of one problem."""

    def __init__(self):
        self._vars: list[Variable] = []
        self._by_key: dict[tuple, Variable] = {}

    def variable(self, name: str, skey: Optional[tuple] = None, intern_key=None) -> Variable:
        """Register (or fetch) a variable.  ``intern_key`` defaults to the name."""
        key = intern_key if intern_key is not None else ("name", name)
        if key in self._by_key:
            return self._by_key[key]
        var = Variable(len(self._vars), name, skey if skey is not None else (9, name))
        self._vars.append(var)
        self._by_key[key] = var
        return var

    def find(self, intern_key) -> Optional[Variable]:
        return self._by_key.get(intern_key)

    def var_by_id(self, vid: int) -> Variable:
        return self._vars[vid]

    def __len__(self):
        return len(self._vars)

    # -- polynomial constructors ------------------------------------------

    def poly(self, const: int | Fraction = 0) -> "Poly":
        c = Q(const)
        return Poly(self, {} if c == 0 else {(): c})

    def poly_var(self, var: Variable, exp: int = 1) -> "Poly":
        if exp < 0:
            raise ExactError("negative exponent")
        if exp == 0:
            return self.poly(1)
        return Poly(self, {((var.vid, exp),): QONE})

    def ratfn(self, const: int | Fraction = 0) -> "RatFn":
        return RatFn(self.poly(const), self.poly(1), _normalized=True)


def _merge_exp(a: ExpKey, b: ExpKey) -> ExpKey:
    """Multiply two monomials (add exponents)."""
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for vid, e in b:
        out[vid] = out.get(vid, 0) + e
    return tuple(sorted((v, e) for v, e in out.items() if e))


def _exp_degree(key: ExpKey) -> int:
    return sum(e for _, e in key)


class Poly:
    """Sparse multivariate polynomial with Fraction coefficients."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: Context, terms: dict[ExpKey, Fraction]):
        self.ctx = ctx
        self.terms = terms

    # -- basics ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not k for k in self.terms)

    def constant_value(self) -> Fraction:
        if self.is_zero():
            return QZERO
        if not self.is_constant():
            raise ExactError("polynomial is not constant")
        return self.terms[()]

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(_exp_degree(k) for k in self.terms)

    def variables(self) -> set[int]:
        out: set[int] = set()
        for key in self.terms:
            out.update(vid for vid, _ in key)
        return out

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key, QZERO) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        return Poly(self.ctx, out)

    def __neg__(self) -> "Poly":
        return Poly(self.ctx, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Q(other)
            if c == 0:
                return Poly(self.ctx, {})
            return Poly(self.ctx, {k: v * c for k, v in self.terms.items()})
        if not isinstance(other, Poly):
            return NotImplemented
        if not self.terms or not other.terms:
            return Poly(self.ctx, {})
        out: dict[ExpKey, Fraction] = {}
        for ka, ca in self.terms.items():
            for kb, cb in other.terms.items():
                key = _merge_exp(ka, kb)
                s = out.get(key, QZERO) + ca * cb
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return Poly(self.ctx, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ExactError("negative power of a polynomial")
        result = self.ctx.poly(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- structure ----------------------------------------------------------

    def _mono_cmp(self, ka: ExpKey, kb: ExpKey) -> int:
        """Graded-lex comparison: total degree first, then exponent vectors
        read along the structural variable order (missing variables are 0, an
        earlier variable with a positive exponent wins)."""
        da, db = _exp_degree(ka), _exp_degree(kb)
        if da != db:
            return -1 if da < db else 1
        seq_a = sorted((self.ctx.var_by_id(v).skey, e) for v, e in ka)
        seq_b = sorted((self.ctx.var_by_id(v).skey, e) for v, e in kb)
        for (sa, ea), (sb, eb) in zip(seq_a, seq_b):
            if sa != sb:
                return 1 if sa < sb else -1
            if ea != eb:
                return 1 if ea > eb else -1
        return 0

    def sorted_keys(self, reverse: bool = False) -> list[ExpKey]:
        import functools

        return sorted(self.terms, key=functools.cmp_to_key(self._mono_cmp), reverse=reverse)

    def leading_key(self) -> ExpKey:
        if not self.terms:
            raise ExactError("zero polynomial has no leading term")
        best = None
        for key in self.terms:
            if best is None or self._mono_cmp(key, best) > 0:
                best = key
        return best

    def leading_coeff(self) -> Fraction:
        return self.terms[self.leading_key()]

    def coefficient_of(self, var: Variable, exp: int) -> "Poly":
        """Coefficient of var**exp, viewing the polynomial in var."""
        out: dict[ExpKey, Fraction] = {}
        for key, c in self.terms.items():
            d = dict(key)
            if d.get(var.vid, 0) == exp:
                d.pop(var.vid, None)
                out[tuple(sorted(d.items()))] = c
        return Poly(self.ctx, out)

    def degree_in(self, var: Variable) -> int:
        d = -1
        for key in self.terms:
            d = max(d, dict(key).get(var.vid, 0))
        return d

    def partial(self, var: Variable) -> "Poly":
        """Formal partial derivative with respect to ``var``."""
        out: dict[ExpKey, Fraction] = {}
        for key, c in self.terms.items():
            d = dict(key)
            e = d.get(var.vid, 0)
            if not e:
                continue
            if e == 1:
                d.pop(var.vid)
            else:
                d[var.vid] = e - 1
            k2 = tuple(sorted(d.items()))
            s = out.get(k2, QZERO) + c * e
            if s:
                out[k2] = s
            else:
                out.pop(k2, None)
        return Poly(self.ctx, out)

    def subs(self, mapping: dict[int, "Poly | Fraction | int"]) -> "Poly":
        """Substitute variables (by id) with polynomials or constants."""
        if not any(vid in mapping for vid in self.variables()):
            return self
        result = Poly(self.ctx, {})
        for key, c in self.terms.items():
            term = self.ctx.poly(c)
            for vid, e in key:
                if vid in mapping:
                    repl = mapping[vid]
                    if not isinstance(repl, Poly):
                        repl = self.ctx.poly(Q(repl))
                    term = term * repl**e
                else:
                    term = term * self.ctx.poly_var(self.ctx.var_by_id(vid), e)
            result = result + term
        return result

    def __repr__(self):
        return f"Poly({format_poly(self)})"


def format_poly(p: Poly) -> str:
    """Canonical human-readable form, ordered by descending graded-lex."""
    if p.is_zero():
        return "0"
    parts = []
    for key in p.sorted_keys(reverse=True):
        c = p.terms[key]
        factors = []
        for vid, e in sorted(key, key=lambda ve: p.ctx.var_by_id(ve[0]).skey):
            name = p.ctx.var_by_id(vid).name
            factors.append(name if e == 1 else f"{name}^{e}")
        mono = "*".join(factors)
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append(f"-{mono}")
        else:
            parts.append(f"{c}*{mono}")
    out = parts[0]
    for piece in parts[1:]:
        out += f" - {piece[1:]}" if piece.startswith("-") else f" + {piece}"
    return out


# -- gcd ---------------------------------------------------------------------


def _poly_divmod_exact(num: Poly, den: Poly) -> Poly:
    """Exact division num / den; raises ExactError if not divisible."""
    if den.is_zero():
        raise ExactError("division by zero polynomial")
    ctx = num.ctx
    rem = num
    quot = ctx.poly(0)
    den_lk = den.leading_key()
    den_lc = den.terms[den_lk]
    den_exp = dict(den_lk)
    while rem.terms:
        lk = rem.leading_key()
        lexp = dict(lk)
        qexp = {}
        for vid, e in den_exp.items():
            if lexp.get(vid, 0) < e:
                raise ExactError("not exactly divisible")
            qexp[vid] = lexp[vid] - e
        for vid, e in lexp.items():
            if vid not in den_exp:
                qexp[vid] = e
        qkey = tuple(sorted((v, e) for v, e in qexp.items() if e))
        qc = rem.terms[lk] / den_lc
        qterm = Poly(ctx, {qkey: qc})
        quot = quot + qterm
        rem = rem - qterm * den
    return quot


def _as_univariate(p: Poly, var: Variable) -> dict[int, Poly]:
    """View p as a polynomial in ``var`` with Poly coefficients."""
    out: dict[int, Poly] = {}
    for key, c in p.terms.items():
        d = dict(key)
        e = d.pop(var.vid, 0)
        rest = tuple(sorted(d.items()))
        coeff = out.setdefault(e, Poly(p.ctx, {}))
        out[e] = coeff + Poly(p.ctx, {rest: c})
    return {e: c for e, c in out.items() if c.terms}


def _from_univariate(ctx: Context, var: Variable, coeffs: dict[int, Poly]) -> Poly:
    total = ctx.poly(0)
    for e, c in coeffs.items():
        total = total + c * ctx.poly_var(var, e)
    return total


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Greatest common divisor, normalized to leading coefficient 1."""
    if a.is_zero() and b.is_zero():
        return a.ctx.poly(0)
    if a.is_zero():
        return _monic(b)
    if b.is_zero():
        return _monic(a)
    if a.is_constant() or b.is_constant():
        return a.ctx.poly(1)
    common = a.variables() & b.variables()
    if not common:
        return a.ctx.poly(1)
    var = a.ctx.var_by_id(max(common, key=lambda vid: a.ctx.var_by_id(vid).skey))
    ua, ub = _as_univariate(a, var), _as_univariate(b, var)
    ca, cb = _content(a.ctx, ua), _content(a.ctx, ub)
    pa = {e: _poly_divmod_exact(c, ca) for e, c in ua.items()}
    pb = {e: _poly_divmod_exact(c, cb) for e, c in ub.items()}
    gc = poly_gcd(ca, cb)
    gp = _prs_gcd(a.ctx, var, pa, pb)
    return _monic(gc * gp)


def _monic(p: Poly) -> Poly:
    return p * (QONE / p.leading_coeff()) if p.terms else p


def _content(ctx: Context, u: dict[int, Poly]) -> Poly:
    g = ctx.poly(0)
    for c in u.values():
        g = poly_gcd(g, c)
        if g.is_constant() and not g.is_zero():
            return ctx.poly(1)
    return g if g.terms else ctx.poly(1)


def _uni_degree(u: dict[int, Poly]) -> int:
    return max(u) if u else -1


def _uni_scale(u: dict[int, Poly], f: Poly) -> dict[int, Poly]:
    return {e: c * f for e, c in u.items()}


def _uni_sub(a: dict[int, Poly], b: dict[int, Poly], ctx: Context) -> dict[int, Poly]:
    out = dict(a)
    for e, c in b.items():
        s = out.get(e, ctx.poly(0)) - c
        if s.terms:
            out[e] = s
        else:
            out.pop(e, None)
    return out


def _pseudo_rem(ctx: Context, a: dict[int, Poly], b: dict[int, Poly]) -> dict[int, Poly]:
    """Pseudo-remainder of a by b (univariate views over a polynomial ring)."""
    da, db = _uni_degree(a), _uni_degree(b)
    lb = b[db]
    rem = dict(a)
    while rem and _uni_degree(rem) >= db:
        dr = _uni_degree(rem)
        lr = rem[dr]
        rem = _uni_scale(rem, lb)
        shift = {e + dr - db: c * lr for e, c in b.items()}
        rem = _uni_sub(rem, shift, ctx)
        rem = {e: c for e, c in rem.items() if c.terms}
    return rem


def _prs_gcd(ctx: Context, var: Variable, a: dict[int, Poly], b: dict[int, Poly]) -> Poly:
    """Primitive PRS gcd of two primitive univariate-over-ring polynomials."""
    if _uni_degree(a) < _uni_degree(b):
        a, b = b, a
    while True:
        rem = _pseudo_rem(ctx, a, b)
        if not rem:
            return _from_univariate(ctx, var, b)
        if _uni_degree(rem) == 0:
            return ctx.poly(1)
        cont = _content(ctx, rem)
        rem = {e: _poly_divmod_exact(c, cont) for e, c in rem.items()}
        a, b = b, rem


# -- rational functions --------------------------------------------------------


class RatFn:
    """gcd-reduced rational function; the canonical representative has a
    denominator with positive leading coefficient."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly, _normalized: bool = False):
        if den.is_zero():
            raise ExactError("zero denominator")
        if not _normalized:
            num, den = _reduce_pair(num, den)
        self.num = num
        self.den = den

    @property
    def ctx(self) -> Context:
        return self.num.ctx

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self):
        return bool(self.num)

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def constant_value(self) -> Fraction:
        return self.num.constant_value() / self.den.constant_value()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.ratfn(other)
        if not isinstance(other, RatFn):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __add__(self, other: "RatFn") -> "RatFn":
        if isinstance(other, (int, Fraction)):
            other = self.ctx.ratfn(other)
        if self.den == other.den:
            return RatFn(self.num + other.num, self.den)
        return RatFn(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFn(-self.num, self.den, _normalized=True)

    def __sub__(self, other):
        return self + (-other if isinstance(other, RatFn) else -self.ctx.ratfn(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return self.ctx.ratfn(0)
            return RatFn(self.num * other, self.den)
        if isinstance(other, Poly):
            other = RatFn(other, self.ctx.poly(1), _normalized=True)
        if not isinstance(other, RatFn):
            return NotImplemented
        return RatFn(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.ctx.ratfn(other)
        if other.is_zero():
            raise ExactError("division by zero")
        return RatFn(self.num * other.den, self.den * other.num)

    def inverse(self) -> "RatFn":
        if self.is_zero():
            raise ExactError("inverse of zero")
        return RatFn(self.den, self.num)

    def subs(self, mapping: dict[int, Poly | Fraction | int]) -> "RatFn":
        return RatFn(self.num.subs(mapping), self.den.subs(mapping))

    def __repr__(self):
        return f"RatFn({format_ratfn(self)})"


def _reduce_pair(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if num.is_zero():
        return num, den.ctx.poly(1)
    g = poly_gcd(num, den)
    if not (g.is_constant() and g.constant_value() == 1):
        num = _poly_divmod_exact(num, g)
        den = _poly_divmod_exact(den, g)
    # Scale to an integer-primitive pair (clears coefficient denominators,
    # divides out the common integer content), then sign-normalize.
    import math

    coeffs = list(num.terms.values()) + list(den.terms.values())
    lcm_den = 1
    for c in coeffs:
        lcm_den = lcm_den * c.denominator // math.gcd(lcm_den, c.denominator)
    gcd_num = 0
    for c in coeffs:
        gcd_num = math.gcd(gcd_num, abs(c.numerator * (lcm_den // c.denominator)))
    scale = Q(lcm_den, gcd_num)
    if scale != 1:
        num, den = num * scale, den * scale
    if den.leading_coeff() < 0:
        num, den = -num, -den
    return num, den


def normal_form(f: RatFn) -> RatFn:
    """Unique gcd-reduced sign-normalized representative (idempotent)."""
    return RatFn(f.num, f.den)


def format_ratfn(f: RatFn) -> str:
    if f.den.is_constant() and f.den.constant_value() == 1:
        return format_poly(f.num)
    num, den = format_poly(f.num), format_poly(f.den)
    if " + " in num or " - " in num:
        num = f"({num})"
    if " + " in den or " - " in den or "*" in den:
        den = f"({den})"
    return f"{num}/{den}"


# -- deterministic linear algebra ----------------------------------------------


class ExactMatrix:
    """Dense matrix over Fraction or RatFn entries with an explicit column
    label record; the caller fixes the column order, and all row reduction is
    done without column permutations."""

    def __init__(self, rows: Sequence[Sequence], column_labels: Optional[Sequence] = None):
        self.rows = [list(r) for r in rows]
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0
        for r in self.rows:
            if len(r) != self.ncols:
                raise ExactError("ragged matrix")
        self.column_labels = list(column_labels) if column_labels is not None else list(range(self.ncols))
        if len(self.column_labels) != self.ncols:
            raise ExactError("column label count mismatch")

    def copy(self) -> "ExactMatrix":
        return ExactMatrix([list(r) for r in self.rows], self.column_labels)

    def __repr__(self):
        return f"ExactMatrix({self.nrows}x{self.ncols})"


def _entry_is_zero(e) -> bool:
    if isinstance(e, RatFn):
        return e.is_zero()
    return e == 0


def ordered_row_echelon(m: ExactMatrix) -> tuple[ExactMatrix, list[int]]:
    """Row echelon form using row operations only.

    The pivot search scans columns left to right in the caller's order and
    rows top to bottom, so the result (and the pivot column list) is fully
    deterministic.
    """
    out = m.copy()
    rows, ncols = out.rows, out.ncols
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, len(rows)):
            if not _entry_is_zero(rows[i][c]):
                pivot_row = i
                break
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        pv = rows[r][c]
        for i in range(r + 1, len(rows)):
            if _entry_is_zero(rows[i][c]):
                continue
            factor = rows[i][c] / pv
            rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return out, pivots


def rank(m: ExactMatrix) -> int:
    return len(ordered_row_echelon(m)[1])


def rank_by_minors(m: ExactMatrix) -> int:
    """Independent oracle: largest k with a nonzero k x k minor.

    Exponential; intended for cross-checking small matrices in tests.
    """
    best = 0
    n = min(m.nrows, m.ncols)
    for k in range(1, n + 1):
        found = False
        for rows in itertools.combinations(range(m.nrows), k):
            for cols in itertools.combinations(range(m.ncols), k):
                if _minor_det(m, rows, cols) != 0:
                    found = True
                    break
            if found:
                break
        if found:
            best = k
        else:
            break
    return best


def _minor_det(m: ExactMatrix, rows, cols):
    if len(rows) == 1:
        return m.rows[rows[0]][cols[0]]
    total = None
    for j, c in enumerate(cols):
        entry = m.rows[rows[0]][c]
        if _entry_is_zero(entry):
            continue
        sub = _minor_det(m, rows[1:], cols[:j] + cols[j + 1 :])
        term = entry * sub * (1 if j % 2 == 0 else -1)
        total = term if total is None else total + term
    if total is None:
        zero = m.rows[rows[0]][cols[0]]
        return zero - zero
    return total


class LinearSolveResult:
    """Outcome of a partial linear solve.

    ``solved`` maps column labels to solution vectors, ``unsolved`` lists the
    column labels that no declared-invertible pivot could eliminate, and
    ``residual`` holds leftover relations (coefficient row, rhs) that involve
    only unsolved columns.
    """

    def __init__(self, solved, unsolved, residual, blocked):
        self.solved = solved
        self.unsolved = unsolved
        self.residual = residual
        self.blocked = blocked


def solve_linear(
    system: ExactMatrix,
    rhs: Sequence,
    invertible: Callable = None,
    add=lambda a, b: a + b,
    scale=lambda c, v: c * v,
    strict: bool = True,
):
    """Solve ``system . x = rhs`` for as many unknowns as declared-invertible
    pivots allow.

    ``rhs`` entries may live in any abelian group; ``add``/``scale`` supply its
    operations (scalars are matrix entries).  Solved unknowns are expressed as
    rhs-group elements plus contributions of unsolved unknowns, which the
    caller receives via per-column coefficient maps.

    Returns a LinearSolveResult whose ``solved`` maps column label ->
    (rhs_part, {unsolved_label: coeff}).  Raises InconsistentSystemError when
    a residual row has no unknowns left but a nonzero constant rhs cannot be
    formed (detected only for zero-coefficient rows with nonzero rhs when the
    rhs group supports ``is_zero``).
    """
    if invertible is None:
        invertible = _default_invertible
    work = [list(r) for r in system.rows]
    vec = list(rhs)
    ncols = system.ncols
    labels = system.column_labels
    pivot_of_col: dict[int, int] = {}
    used_rows: set[int] = set()
    blocked: list[tuple[int, object]] = []
    for c in range(ncols):
        pivot_row = None
        blocker = None
        for i in range(len(work)):
            if i in used_rows or _entry_is_zero(work[i][c]):
                continue
            if invertible(work[i][c]):
                pivot_row = i
                break
            if blocker is None:
                blocker = work[i][c]
        if pivot_row is None:
            if blocker is not None:
                blocked.append((labels[c], blocker))
            continue
        used_rows.add(pivot_row)
        pivot_of_col[c] = pivot_row
        pv = work[pivot_row][c]
        for i in range(len(work)):
            if i == pivot_row or _entry_is_zero(work[i][c]):
                continue
            factor = work[i][c] / pv
            work[i] = [a - factor * b for a, b in zip(work[i], work[pivot_row])]
            vec[i] = add(vec[i], scale(-factor, vec[pivot_row]))
    solved = {}
    for c, i in pivot_of_col.items():
        pv = work[i][c]
        rhs_part = scale(_inv_entry(pv), vec[i])
        coeffs = {}
        for c2 in range(ncols):
            if c2 == c or c2 in pivot_of_col:
                continue
            entry = work[i][c2]
            if not _entry_is_zero(entry):
                coeffs[labels[c2]] = -(entry / pv)
        solved[labels[c]] = (rhs_part, coeffs)
    unsolved = [labels[c] for c in range(ncols) if c not in pivot_of_col]
    residual = []
    for i in range(len(work)):
        if i in used_rows:
            continue
        coeffs = {labels[c]: work[i][c] for c in range(ncols) if not _entry_is_zero(work[i][c])}
        if strict and not coeffs and not _rhs_is_zero(vec[i]):
            raise InconsistentSystemError("0 = nonzero right side")
        residual.append((coeffs, vec[i]))
    return LinearSolveResult(solved, unsolved, residual, blocked)


def _rhs_is_zero(v) -> bool:
    if hasattr(v, "is_zero"):
        return v.is_zero()
    return v == 0


def _default_invertible(e) -> bool:
    if isinstance(e, RatFn):
        return e.is_constant() and e.constant_value() != 0
    return e != 0


def _inv_entry(e):
    if isinstance(e, RatFn):
        return e.inverse()
    return 1 / e if isinstance(e, Fraction) else Fraction(1, e)
