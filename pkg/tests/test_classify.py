"""ODE branch classification: jet-space route vs direct substitution oracle."""

import pytest

from cartanframes.frames import classify_ode, oracle_classify_ode
from cartanframes.jets import JetContext


@pytest.fixture(scope="module")
def jc():
    return JetContext(["x", "u", "p"], ["q"])


def _rhs(jc, build):
    x = jc.rvar(jc.x_var(0))
    u = jc.rvar(jc.x_var(1))
    p = jc.rvar(jc.x_var(2))
    return build(x, u, p)


def test_zero_rhs_is_branch_iv(jc):
    label, i1, i2 = classify_ode(jc, jc.ratfn(0))
    assert label == "IV"
    assert i1.is_zero() and i2.is_zero()


def test_p_squared_is_branch_iv(jc):
    F = _rhs(jc, lambda x, u, p: p * p)
    label, i1, i2 = classify_ode(jc, F)
    assert label == "IV"


def test_p_fourth_is_branch_i(jc):
    F = _rhs(jc, lambda x, u, p: p * p * p * p)
    label, i1, i2 = classify_ode(jc, F)
    assert label == "I"
    assert not i1.is_zero() and not i2.is_zero()


def test_linear_rhs_branch_iv(jc):
    # q = a(x) p + b(x) u stays linearizable: u-term contributes nothing fourth-order
    F = _rhs(jc, lambda x, u, p: x * p + u)
    label, _, _ = classify_ode(jc, F)
    assert label == "IV"


def test_u_cubed_branch_ii(jc):
    """q = u^3: no p-dependence (first invariant 0), second invariant 6 q_uu = 36 u."""
    F = _rhs(jc, lambda x, u, p: u * u * u)
    label, i1, i2 = classify_ode(jc, F)
    assert label == "II"
    assert i1.is_zero() and not i2.is_zero()


FIXED_RHS = [
    lambda x, u, p: p * 0,
    lambda x, u, p: p * p,
    lambda x, u, p: p * p * p,
    lambda x, u, p: p * p * p * p,
    lambda x, u, p: u * u * u,
    lambda x, u, p: x * p + u,
    lambda x, u, p: p * p * p * p + u,
    lambda x, u, p: u * p,
    lambda x, u, p: x * x * u + p,
    lambda x, u, p: p * p * p * p * p + x,
]


@pytest.mark.parametrize("idx", range(len(FIXED_RHS)))
def test_classifier_agrees_with_oracle_on_fixed_list(jc, idx):
    """The release gate: ten polynomial right-hand sides, both routes agree."""
    F = _rhs(jc, FIXED_RHS[idx])
    label, i1, i2 = classify_ode(jc, F)
    olabel, o1, o2 = oracle_classify_ode(jc, F)
    assert label == olabel
    assert i1.is_zero() == o1.is_zero()
    assert i2.is_zero() == o2.is_zero()


def test_rational_rhs(jc):
    F = _rhs(jc, lambda x, u, p: p / (x + jc.ratfn(1)))
    label, _, _ = classify_ode(jc, F)
    olabel, _, _ = oracle_classify_ode(jc, F)
    assert label == olabel
