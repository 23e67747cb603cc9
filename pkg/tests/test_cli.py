import json
import math
import subprocess
import sys

import pytest

from zerodensity import cli
from zerodensity.intensity import intensity_limit


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main(args + ["-o", str(out)])
    return code, (out.read_text() if out.exists() else None)


def strip_wall_time(text):
    return "\n".join(l for l in text.splitlines() if "wall_time" not in l)


def test_monomial_grid_example(tmp_path):
    code, text = run(["intensity-grid", "--basis", "monomial", "-n", "1",
                      "--grid", "-2,2,-2,2,5,5", "--formula", "general"], tmp_path)
    assert code == 0
    manifest, header, rows = cli.parse_csv(text)
    assert header == ["x", "y", "h"] and len(rows) == 25
    assert manifest["command"] == "intensity-grid" and manifest["degree"] == 1
    grid = {(r[0], r[1]): r[2] for r in rows}
    assert grid[(0.0, 0.0)] == pytest.approx(1 / math.pi, rel=1e-14)
    for x in (-2.0, -1.0, 1.0, 2.0):
        assert grid[(x, 0.0)] == pytest.approx(grid[(0.0, x)], rel=1e-14)
        assert grid[(x, 1.0)] == pytest.approx(grid[(-x, -1.0)], rel=1e-14)
    # row-major: x varies fastest
    assert [r[0] for r in rows[:5]] == [-2.0, -1.0, 0.0, 1.0, 2.0]


def test_csv_roundtrip_is_byte_identical(tmp_path):
    code, text = run(["intensity-grid", "--basis", "chebyshev", "-n", "7",
                      "--grid", "-1.5,1.5,-1,1,7,5", "--formula", "limit"], tmp_path)
    assert code == 0
    manifest, header, rows = cli.parse_csv(text)
    assert cli.format_csv(manifest, header, rows) == text
    # the y = 0 row: five points on [-1, 1], two on the real axis outside it
    assert manifest["null_count"] == 7
    assert manifest["null_reasons"] == {"branch_cut": 5, "real_axis": 2}


def test_limit_grid_value_matches_library(tmp_path):
    code, text = run(["intensity-grid", "--basis", "chebyshev", "-n", "3", "--format", "json",
                      "--grid", "1,2,0.5,1,3,2", "--formula", "limit"], tmp_path)
    assert code == 0
    doc = json.loads(text)
    assert set(doc) == {"manifest", "grid", "values"}
    # point (1.5, 0.5) is the second value of the first row
    assert doc["values"][1] == intensity_limit(1.5 + 0.5j).h


def test_oprl_formula_rejects_monomial(tmp_path):
    code, text = run(["intensity-grid", "--basis", "monomial", "-n", "3",
                      "--grid", "-1,1,-1,1,3,3", "--formula", "oprl"], tmp_path)
    assert code == cli.EXIT_USAGE and text is None


@pytest.mark.parametrize("args", [
    ["intensity-grid", "--basis", "legendre", "-n", "3", "--grid", "1,0,0,1,3,3"],
    ["intensity-grid", "--basis", "legendre", "-n", "3", "--grid", "0,1,0,1,1,3"],
    ["intensity-grid", "--basis", "nope", "-n", "3", "--grid", "0,1,0,1,3,3"],
    ["intensity-grid", "--basis", "legendre", "-n", "-1", "--grid", "0,1,0,1,3,3"],
    ["region-expect", "--basis", "legendre", "-n", "3", "--region", "square:1"],
    ["mc-compare", "--basis", "legendre", "-n", "10", "--region", "rect:0,1,0,1", "--trials", "1"],
    ["limit-convergence", "--basis", "chebyshev", "--degrees", "", "--points", "1+1i"],
    ["limit-convergence", "--basis", "monomial", "--degrees", "5", "--points", "1+1i"],
    ["no-such-command"],
])
def test_usage_errors(args, tmp_path):
    assert run(args, tmp_path)[0] == cli.EXIT_USAGE


def test_io_error(tmp_path):
    code = cli.main(["region-expect", "--basis", "legendre", "-n", "2",
                     "--region", "rect:0,1,0.1,1", "-o", str(tmp_path / "missing" / "x.csv")])
    assert code == cli.EXIT_IO


def test_region_expect_example(tmp_path):
    code, text = run(["region-expect", "--basis", "legendre", "-n", "10", "--format", "json",
                      "--region", "rect:0.2,0.8,0.1,0.5", "--method", "both"], tmp_path)
    assert code == 0
    res = json.loads(text)["result"]
    assert res["discrepancy"] < 1e-6
    assert json.loads(text)["manifest"]["tolerances"]["abs_tol"] == 1e-8


def test_region_expect_degree_zero(tmp_path):
    code, text = run(["region-expect", "--basis", "hermite", "-n", "0",
                      "--region", "poly:0,0;1,0;0,1"], tmp_path)
    assert code == 0
    _, header, rows = cli.parse_csv(text)
    rec = dict(zip(header, rows[0]))
    assert rec["area"] == 0 and rec["contour"] == 0


def test_region_expect_kernel_zero_names_point(tmp_path, capsys):
    path = tmp_path / "rooted.txt"
    path.write_text("p0 1\nzero 0.5\n" + "1 0 0\n" * 6)
    code, _ = run(["region-expect", "--basis", str(path), "-n", "3", "--method", "contour",
                   "--region", "rect:0.5,1,-0.5,0.5"], tmp_path)
    assert code == cli.EXIT_NUMERIC
    assert "0.5" in capsys.readouterr().err


def test_region_expect_non_convergence_keeps_partial(tmp_path):
    code, text = run(["region-expect", "--basis", "legendre", "-n", "40", "--method", "area",
                      "--region", "rect:-1,1,0.001,1", "--abs-tol", "1e-15", "--rel-tol",
                      "1e-15", "--max-depth", "4"], tmp_path)
    assert code == cli.EXIT_NUMERIC
    _, header, rows = cli.parse_csv(text)
    rec = dict(zip(header, rows[0]))
    assert rec["area_status"] == "non_convergence" and rec["area"] > 0


def test_mc_compare_is_reproducible(tmp_path):
    args = ["mc-compare", "--basis", "legendre", "-n", "10", "--region",
            "rect:0.2,0.8,0.1,0.5", "--trials", "6000", "--seed", "9"]
    code1, a = run(args, tmp_path, "a")
    code2, b = run(args + ["--threads", "3"], tmp_path, "b")
    assert code1 == code2 == 0
    assert strip_wall_time(a) == strip_wall_time(b)
    _, header, rows = cli.parse_csv(a)
    rec = dict(zip(header, rows[0]))
    assert abs(rec["z_score"]) <= 5 and rec["trials"] == 6000


def test_limit_convergence_table(tmp_path):
    code, text = run(["limit-convergence", "--basis", "legendre", "--degrees", "25,50,100,200",
                      "--points", "1.5+0.5i;0.3"], tmp_path)
    assert code == 0
    _, header, rows = cli.parse_csv(text)
    good = [r for r in rows if r[header.index("reason")] is None]
    gaps = [r[header.index("gap")] for r in good]
    assert len(gaps) == 4 and all(a > b for a, b in zip(gaps, gaps[1:]))
    bad = [r for r in rows if r[header.index("reason")] is not None]
    assert len(bad) == 4 and all(r[-1] == "branch_cut" for r in bad)


def test_negative_values_accepted_for_grid_and_points(tmp_path):
    code, text = run(["limit-convergence", "--basis", "chebyshev", "--degrees", "10",
                      "--points", "-1.5-0.5i"], tmp_path)
    assert code == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "zerodensity", "intensity-grid", "--basis",
                           "monomial", "-n", "1", "--grid", "-1,1,-1,1,2,2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.count("\n") > 4
