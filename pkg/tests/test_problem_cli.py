"""Problem file parsing, canonical printing, CLI reports and replay digests."""

import json
import pathlib
import subprocess
import sys

import pytest

from cartanframes.problem import ParseError, parse_problem, print_problem
from conftest import PROBLEMS, load_problem

FIXTURES = [
    "contact",
    "contact_asprinted",
    "point",
    "point_order0",
    "point_branch1",
    "point_branch4",
    "pj",
    "empty",
    "twoform_case1",
    "twoform_case21",
]


@pytest.mark.parametrize("name", FIXTURES)
def test_roundtrip(name):
    pf = load_problem(name)
    printed = print_problem(pf)
    again = parse_problem(printed)
    assert print_problem(again) == printed


def test_point_relation_count():
    assert load_problem("point").relation_count == 7


def test_contact_relation_count():
    assert load_problem("contact").relation_count == 6


def test_empty_det_block():
    pf = load_problem("empty")
    assert pf.relation_count == 0


def test_unknown_symbol_diagnostic():
    text = """
base x u;
split independent x dependent u;
coeffs xi eta;
det { xi_x = zeta_u; }
"""
    with pytest.raises(ParseError) as err:
        parse_problem(text)
    assert "zeta" in str(err.value)


def test_nonlinear_relation_rejected():
    text = """
base x u;
split independent x dependent u;
coeffs xi eta;
det { xi = eta*eta; }
"""
    with pytest.raises(Exception):
        parse_problem(text)


def test_duplicate_lead_rejected():
    text = """
base x u;
split independent x dependent u;
coeffs xi eta;
det { xi = 0; xi = eta; }
"""
    with pytest.raises(Exception):
        parse_problem(text)


def test_cross_section_prefix_violation_reported():
    from cartanframes.frames import CrossSectionError
    from cartanframes.pseudogroup import lift_system
    from cartanframes.frames import RecurrenceEngine

    text = """
base x u;
split independent x dependent u;
coeffs xi eta;
det { }
xsec { u_x2 = 0; x = 0; }
"""
    pf = parse_problem(text)
    jc, system, cs = pf.build()
    engine = RecurrenceEngine(lift_system(system), cs)
    with pytest.raises(CrossSectionError):
        engine.normalize(2)


def _run_cli(*argv):
    from cartanframes import cli

    import io
    from contextlib import redirect_stdout

    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli.main(list(argv))
    return code, buf.getvalue()


def test_cli_cartan_test_contact():
    code, out = _run_cli("run", str(PROBLEMS / "contact.prob"), "cartan-test")
    assert code == 0
    assert "cartan.beta[4] = 4" in out
    assert "cartan.beta[3] = 3" in out
    assert "cartan.beta[2] = 1" in out
    assert "cartan.rank_next = 27" in out
    assert "cartan.involutive = true" in out


def test_cli_cartan_test_two_form_cases():
    code, out = _run_cli("run", str(PROBLEMS / "twoform_case1.prob"), "cartan-test", "--m", "3")
    assert code == 0
    assert "cartan.rank_next = 11" in out
    assert "cartan.alpha[3] = 0" in out and "cartan.alpha[2] = 2" in out and "cartan.alpha[1] = 3" in out
    code, out = _run_cli("run", str(PROBLEMS / "twoform_case21.prob"), "cartan-test", "--m", "3")
    assert code == 0
    assert "cartan.rank_next = 14" in out
    assert "cartan.alpha[2] = 1" in out and "cartan.alpha[1] = 2" in out


def test_cli_normalize_point_order0():
    code, out = _run_cli("run", str(PROBLEMS / "point_order0.prob"), "normalize", "--order", "0")
    assert code == 0
    assert "frame.mu = -w^x" in out
    assert "frame.nu = -w^u" in out
    assert "frame.nu_X = -w^p" in out
    assert "frame.nu_X2 = -Q_X*w^x - Q_U*w^u - Q_P*w^p" in out


def test_cli_structure_empty_problem():
    code, out = _run_cli("run", str(PROBLEMS / "empty.prob"), "structure", "--order", "1")
    assert code == 0
    assert "structure.d(sigma^x) = -sigma^x^mu_X - sigma^u^mu_U" in out


def test_cli_digest_stable():
    code1, out1 = _run_cli("run", str(PROBLEMS / "contact.prob"), "cartan-test")
    code2, out2 = _run_cli("run", str(PROBLEMS / "contact.prob"), "cartan-test")
    assert out1 == out2
    assert "digest = sha256:" in out1


def test_cli_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.prob"
    bad.write_text("base x u;\nsplit independent x dependent u;\ncoeffs xi eta;\ndet { xi_w = 0; }\n")
    from cartanframes import cli

    code = cli.main(["run", str(bad), "lift"])
    assert code == 1


def test_cli_lift_report():
    code, out = _run_cli("run", str(PROBLEMS / "contact.prob"), "lift", "--order", "1")
    assert code == 0
    assert "lift.relation_count = " in out
    assert "lift.basis = " in out


def test_cli_signature_fixtures():
    code, out = _run_cli(
        "run", str(PROBLEMS / "contact.prob"), "signature-compare",
        "--data", str(PROBLEMS / "signature_equal.json"),
    )
    assert code == 0 and "signature.overlap = true" in out
    code, out = _run_cli(
        "run", str(PROBLEMS / "contact.prob"), "signature-compare",
        "--data", str(PROBLEMS / "signature_distinct.json"),
    )
    assert code == 0 and "signature.overlap = false" in out


def test_cli_classify():
    code, out = _run_cli("run", str(PROBLEMS / "point.prob"), "classify-ode", "--rhs", "p^2")
    assert code == 0
    assert "classify.branch = IV" in out
    assert "classify.agreement = true" in out


def test_cli_groebner():
    text = """
base x u q;
split independent x u dependent q;
spoly {
  s_x*S^q;
  s_u*S^q;
}
"""
    path = PROBLEMS / "_tmp_groebner.prob"
    path.write_text(text)
    try:
        code, out = _run_cli("run", str(path), "groebner")
        assert code == 0
        assert "groebner.size = 2" in out
    finally:
        path.unlink()


def test_cli_out_file(tmp_path):
    out_path = tmp_path / "report.txt"
    code, out = _run_cli(
        "run", str(PROBLEMS / "twoform_case1.prob"), "cartan-test", "--m", "3",
        "--out", str(out_path),
    )
    assert code == 0
    assert out_path.read_text() == out


def test_cli_entry_point_installed():
    result = subprocess.run(
        [sys.executable, "-m", "cartanframes.cli", "print", str(PROBLEMS / "empty.prob")],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.startswith("base x u;")
