from __future__ import annotations

import csv
import json
import re
import subprocess
import sys

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffortho.asymptotics import log_capital_psi
from diffortho.cli import execute, exit_code
from diffortho.errors import ConvergenceError, EigenError, InvariantError, MeasureError, PoleError
from diffortho.polycore import Case
from diffortho.precision import fmt, parse_complex, parse_scalar


def _run(tmp_path, *argv):
    return execute([*argv, "--out", str(tmp_path)])


def test_verify_happy_path(tmp_path, capsys):
    assert _run(tmp_path, "verify", "--case", "laguerre", "--alpha", "0", "--rho", "1,1", "--n", "6") == 0
    rows = list(csv.DictReader((tmp_path / "verify.csv").open()))
    assert {r["check"] for r in rows} == {"diff_orthogonality", "eigen", "quasi_orthogonality", "coeff_growth"}
    diff = [parse_scalar(r["value"]) for r in rows if r["check"] == "diff_orthogonality"]
    assert len(diff) == 6 and max(diff) <= 1e-30


def test_measure_error_exit(tmp_path, capsys):
    assert _run(tmp_path, "construct", "--case", "laguerre", "--alpha", "0", "--rho", "-1,1", "--n", "6") == 2
    assert "E_MEASURE" in capsys.readouterr().err
    assert not list(tmp_path.iterdir())


def test_bad_alpha_and_shape(tmp_path, capsys):
    assert _run(tmp_path, "construct", "--case", "laguerre", "--alpha", "-1", "--n", "3") == 2
    assert _run(tmp_path, "construct", "--case", "hermite", "--rho", "1,0,1", "--n", "2") == 2
    assert _run(tmp_path, "construct", "--case", "hermite", "--n", "4", "--prec", "32") == 2


def test_curve_example(tmp_path):
    assert _run(tmp_path, "curve", "--case", "hermite", "--zeta", "4+0i", "--window", "-3,5,-3,3",
                "--step", "0.02") == 0
    rows = list(csv.DictReader((tmp_path / "curve.csv").open()))
    assert rows and list(rows[0]) == ["polyline_id", "vertex_index", "re", "im"]
    lz = log_capital_psi(Case.hermite(), 4)
    for r in rows[::25]:
        z = mp.mpc(parse_scalar(r["re"]), parse_scalar(r["im"]))
        assert abs(log_capital_psi(Case.hermite(), z) - lz) <= 1e-3 * abs(lz)


def test_construct_json(tmp_path):
    assert _run(tmp_path, "construct", "--case", "hermite", "--rho", "1,0,1", "--n", "4", "--zeta", "1+2i") == 0
    obj = json.loads((tmp_path / "construct_n4.json").read_text())
    assert obj["alpha"] is None and obj["n"] == 4 and len(obj["coeffs_basis"]) == 5
    assert parse_complex(obj["zeta"]) == mp.mpc(1, 2)


@pytest.mark.parametrize("argv", [
    ["zeros", "--case", "laguerre", "--rho", "1,1", "--degrees", "10,20"],
    ["asympt", "--case", "hermite", "--rho", "1,0,1", "--degrees", "20,40", "--zeta", "4", "--seed", "5"],
    ["flow", "--case", "laguerre", "--rho", "1,1", "--n", "6", "--window", "-1,4,-1,1", "--step", "0.5"],
    ["curve", "--case", "laguerre", "--zeta", "3", "--step", "0.05"],
])
def test_byte_identical_reruns(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert _run(a, *argv) == 0 and _run(b, *argv) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names and names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_zeros_outputs(tmp_path):
    assert _run(tmp_path, "zeros", "--case", "hermite", "--rho", "1,0,1", "--n", "12", "--derivative") == 0
    lines = (tmp_path / "zeros_n12.csv").read_text().splitlines()
    assert lines[0] == "n,index,re,im,normalized,c_n" and len(lines) == 12
    stats = list(csv.DictReader((tmp_path / "zero_stats.csv").open()))
    assert stats[0]["real_in_delta"] == "11"


def test_flow_outputs(tmp_path):
    assert _run(tmp_path, "flow", "--case", "hermite", "--rho", "1,0,1", "--n", "6",
                "--window", "-2,2,-1,1", "--step", "0.5") == 0
    assert (tmp_path / "field.csv").read_text().startswith("# u = Re(conj V')")
    sys_obj = json.loads((tmp_path / "system.json").read_text())
    assert sys_obj["case"] == "hermite" and len(sys_obj["points"]) == 6
    # odd n collides at the origin; a non-proved spec needs --experimental
    assert _run(tmp_path, "flow", "--case", "hermite", "--rho", "1,0,1", "--n", "7") == 2
    assert _run(tmp_path, "flow", "--case", "laguerre", "--rho", "2,3,1", "--n", "6") == 2
    assert _run(tmp_path, "flow", "--case", "laguerre", "--rho", "2,3,1", "--n", "6", "--experimental") == 0


def test_asympt_points_and_region_error(tmp_path, capsys):
    assert _run(tmp_path, "asympt", "--case", "hermite", "--rho", "1,0,1", "--degrees", "20",
                "--zeta", "4", "--points", "-4") == 2
    assert "E_REGION" in capsys.readouterr().err
    assert _run(tmp_path, "asympt", "--case", "hermite", "--rho", "1,0,1", "--degrees", "20",
                "--points", "2,-1+1i") == 0
    rows = list(csv.DictReader((tmp_path / "nth_root.csv").open()))
    assert [parse_complex(r["z"]) for r in rows] == [mp.mpc(2, 0), mp.mpc(-1, 1)]


def test_exit_code_mapping():
    assert exit_code(MeasureError("x")) == 2
    assert exit_code(PoleError("x")) == 2
    assert exit_code(ConvergenceError("x")) == 3
    assert exit_code(EigenError("x")) == 3
    assert exit_code(InvariantError("x")) == 4
    assert exit_code(RuntimeError("x")) == 4


def test_console_script_module():
    out = subprocess.run([sys.executable, "-m", "diffortho.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and re.search(r"\d+\.\d+", out.stdout)


_finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=200)
@given(_finite, st.integers(-300, 300))
def test_number_round_trip(x, e):
    v = mp.mpf(x) * mp.power(3, e) / 7
    assert parse_scalar(fmt(v)) == v
    z = mp.mpc(v, -v / 3)
    assert parse_complex(f"{fmt(z.real)}{'-' if z.imag < 0 else '+'}{fmt(abs(z.imag))}i") == z
