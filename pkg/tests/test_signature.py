"""Numeric signature comparison."""

import numpy as np
import pytest

from cartanframes.frames import SampledSubmanifold, signature_compare


def _const(c):
    f = lambda *pt: c
    f.expr = None
    return f


def _const_manifold(c, grids):
    def op(func):
        return _const(0.0)

    return SampledSubmanifold(grids, [_const(c)], [op, op])


GRID5 = [np.linspace(0.0, 1.0, 5).tolist(), np.linspace(0.0, 1.0, 5).tolist()]
GRID3 = [np.linspace(0.0, 1.0, 4).tolist(), np.linspace(0.0, 1.0, 4).tolist()]


def test_constant_invariants_equal():
    S = _const_manifold(3.0, GRID5)
    Sbar = _const_manifold(3.0, GRID3)
    report = signature_compare(S, Sbar, 1)
    assert report.ranks == [0, 0]
    assert report.order == 0
    assert report.overlap
    assert report.regular


def test_reflexivity_under_resampling():
    def sample(npts):
        grids = [np.linspace(0.0, 1.0, npts).tolist(), np.linspace(0.0, 1.0, npts).tolist()]

        def make(expr):
            f = lambda s, t: eval(expr, {"s": s, "t": t})
            f.expr = expr
            return f

        def d_s(func):
            return {"s + t": make("1.0"), "1.0": make("0.0"), "0.0": make("0.0")}[func.expr]

        def d_t(func):
            return {"s + t": make("1.0"), "1.0": make("0.0"), "0.0": make("0.0")}[func.expr]

        return SampledSubmanifold(grids, [make("s + t")], [d_s, d_t])

    S = sample(6)
    Sbar = sample(11)
    report = signature_compare(S, Sbar, 2)
    assert report.overlap
    # verdict stable as the grid refines
    report2 = signature_compare(S, sample(21), 2)
    assert report2.overlap == report.overlap


def test_distinct_constants_do_not_overlap():
    S = _const_manifold(3.0, GRID5)
    Sbar = _const_manifold(5.0, GRID3)
    report = signature_compare(S, Sbar, 1)
    assert not report.overlap


def test_symmetry_of_verdict():
    S = _const_manifold(3.0, GRID5)
    Sbar = _const_manifold(5.0, GRID3)
    a = signature_compare(S, Sbar, 1)
    b = signature_compare(Sbar, S, 1)
    assert a.overlap == b.overlap


def test_two_form_constant_invariant_cases():
    """Case-1-style data: I == c against I == c' != c."""
    S = _const_manifold(2.0, GRID5)
    same = _const_manifold(2.0, GRID5)
    other = _const_manifold(-1.0, GRID5)
    assert signature_compare(S, same, 1).overlap
    assert not signature_compare(S, other, 1).overlap


def test_not_fully_regular_report():
    """A rank jump across the sample produces a not-fully-regular report."""
    grids = [np.linspace(-1.0, 1.0, 9).tolist(), np.linspace(-1.0, 1.0, 9).tolist()]

    def make(expr):
        f = lambda s, t: eval(expr, {"s": s, "t": t, "max": max})
        f.expr = expr
        return f

    # piecewise flat/linear invariant: differential rank differs by region
    inv = make("max(s, 0.0) * s")

    def d_s(func):
        return make("2*max(s, 0.0)")

    def d_t(func):
        return make("0.0")

    S = SampledSubmanifold(grids, [inv], [d_s, d_t])
    report = signature_compare(S, S, 1)
    assert not report.regular
    assert report.detail == "not fully regular"
