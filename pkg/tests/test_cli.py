import math
import subprocess
import sys

import numpy as np
import pytest

from mutualctl import cli
from mutualctl.demos import DEMO_NAMES, demo, demo_text
from mutualctl.exceptions import ConfigurationError
from mutualctl.model import classify
from mutualctl.problemfile import (SolverSettings, csv_header, format_csv, format_problem,
                                   parse_problem, read_csv)
from mutualctl.solver import picard_solve

BASE = """\
n = 1
T = 1
k = 2
beta = 1
A = 1
B = 0.5
f = "0"
g = "0"
"""


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def kv(out):
    return dict(line[4:].split("=", 1) for line in out.splitlines() if line.startswith("#kv "))


def test_parse_problem_minimal():
    p, s = parse_problem(BASE)
    assert (p.n, p.T, p.k) == (1, 1.0, 2.0)
    assert s == SolverSettings()
    assert p.lipschitz is None and p.growth is None


def test_parse_problem_full():
    text = """\
# a comment line
n = 2
T = 0.5            # trailing comment
k = 3
beta = 1, 0.5
A = 0.3, -0.1; -0.1, 0.3
B = 0.5, 0; 0, 0.5
f = "0.1*tanh(x1)", "x2"  # comment with "quotes"
g = "0", "0"
lipschitz = 1, 2, 3, 4
growth = 0, 0, 0, 0, 0.1, 0.2
box_radius = 5
grid = 100
theta = 0.25
tol = 1e-8
max_iter = 7
"""
    p, s = parse_problem(text)
    np.testing.assert_array_equal(p.A, [[0.3, -0.1], [-0.1, 0.3]])
    assert p.f.sources() == ["0.1*tanh(x1)", "x2"]
    assert (p.lipschitz.c, p.growth.delta, p.box_radius) == (3.0, 0.2, 5.0)
    assert s == SolverSettings(grid=100, theta=0.25, tol=1e-8, max_iter=7)


@pytest.mark.parametrize("text, line, word", [
    (BASE.replace("T = 1", "T = one"), 2, "T"),
    (BASE.replace("beta = 1", "beta = 1, 2"), 4, "beta"),
    (BASE.replace("A = 1", "A = 1, 2"), 5, "A"),
    (BASE.replace('f = "0"', 'f = "x1 +"'), 7, "at byte"),
    (BASE.replace('f = "0"', 'f = 0'), 7, "quoted"),
    (BASE + "colour = 3\n", 9, "unknown key"),
    (BASE + "k = 3\n", 9, "duplicate"),
    (BASE + "grid = 1\n", 9, "grid"),
    (BASE + "tol = 0\n", 9, "tol"),
    (BASE + "lipschitz = 1, 2\n", 9, "lipschitz"),
    (BASE + "lipschitz = 1, 2, -3, 4\n", 9, "lipschitz"),
    (BASE + "just words\n", 9, "key = value"),
])
def test_parse_problem_errors(text, line, word):
    with pytest.raises(ConfigurationError) as info:
        parse_problem(text)
    assert info.value.line == line
    assert word in str(info.value)


def test_hash_inside_quotes_is_not_a_comment():
    # the '#' reaches the expression parser instead of truncating the line
    with pytest.raises(ConfigurationError, match="unexpected character '#'"):
        parse_problem(BASE.replace('f = "0"', 'f = "1 # 2"'))


def test_parse_problem_missing_and_invalid():
    with pytest.raises(ConfigurationError, match="missing required key 'g'"):
        parse_problem(BASE.replace('g = "0"\n', ""))
    with pytest.raises(ConfigurationError, match="k"):
        parse_problem(BASE.replace("k = 2", "k = -2"))


@pytest.mark.parametrize("name", DEMO_NAMES)
def test_demo_files_round_trip(name):
    problem, settings = demo(name)
    parsed, parsed_settings = parse_problem(demo_text(name))
    assert parsed_settings == settings
    assert format_problem(parsed, parsed_settings) == format_problem(problem, settings)
    assert classify(parsed).any_feasible


def test_prey_demo_constants():
    report = classify(demo("prey")[0])
    assert not report.certified
    assert report.perov.feasible and report.schauder.feasible and report.avramescu.feasible
    c = report.perov.coefficients
    assert c.a11 < 1 and c.a22 < 1 / c.T


def test_csv_round_trip(tmp_path, sinpair):
    pair, _ = picard_solve(sinpair, m=20)
    text = format_csv(pair)
    lines = text.splitlines()
    assert lines[0] == "t,x1,y1" == csv_header(1)
    assert len(lines) == 22
    path = tmp_path / "s.csv"
    path.write_text(text)
    back = read_csv(path, 1, 1.0)
    assert np.array_equal(back.x.values, pair.x.values)
    assert np.array_equal(back.y.values, pair.y.values)
    assert csv_header(2) == "t,x1,x2,y1,y2"


@pytest.mark.parametrize("mutate, word", [
    (lambda ls: ["t,x,y"] + ls[1:], "header"),
    (lambda ls: ls[:1] + [ls[1] + ",0"] + ls[2:], "columns"),
    (lambda ls: ls[:2], "3"),
    (lambda ls: ls[:1] + [ls[1].replace("0,", "a,", 1)] + ls[2:], "non-numeric"),
    (lambda ls: ls[:1] + ls[2:] + ls[1:2], "uniform"),
])
def test_csv_errors(tmp_path, sinpair, mutate, word):
    pair, _ = picard_solve(sinpair, m=10)
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(mutate(format_csv(pair).splitlines())) + "\n")
    with pytest.raises(ConfigurationError, match=word):
        read_csv(path, 1, 1.0)


def test_analyze_reference(tmp_path, capsys):
    C, T, k = 1.01, 0.98, 0.01
    c, d = 0.45 / (T * C), 0.63 / C
    a, b = 0.3 / (T * C) - k * c * C, 0.62 / C - k * d * C
    path = tmp_path / "reference.txt"
    path.write_text(f'n = 1\nT = {T}\nk = {k}\nbeta = 1\nA = 0\nB = 0\nf = "0"\ng = "0"\n'
                    f"lipschitz = {a!r}, {b!r}, {c!r}, {d!r}\n")
    code, out, _ = run(["analyze", str(path)], capsys)
    values = kv(out)
    assert code == 0
    assert values["perov.h0"] == "0.0056"
    assert float(values["perov.theta"]) == pytest.approx(0.3505, abs=1e-4)
    assert float(values["perov.h_theta"]) == pytest.approx(-0.0080, abs=5e-4)
    assert values["perov.classification"] == "ConvergentOnInterval"
    assert "perov.interval" in values


def test_analyze_zero_fields(tmp_path, capsys):
    path = tmp_path / "zero.txt"
    path.write_text(BASE)
    code, out, _ = run(["analyze", str(path)], capsys)
    values = kv(out)
    assert code == 0
    assert values["perov.feasible"] == values["schauder.feasible"] == \
        values["avramescu.feasible"] == "true"
    assert values["perov.theta"] == "0"
    assert values["certified"] == "false"
    assert "schauder.radii" in values
    assert "C_A" in values and "C_B" in values


def test_solve_linear_prints_x0(tmp_path, capsys):
    pfile = tmp_path / "linear.txt"
    assert run(["demo", "linear", "--out", str(pfile)], capsys)[0] == 0
    out_csv = tmp_path / "lin.csv"
    code, out, _ = run(["solve", str(pfile), "--out", str(out_csv)], capsys)
    values = kv(out)
    assert code == 0
    assert values["x0"].startswith("3.2974425")
    assert float(values["x0"]) == pytest.approx(2 * math.exp(0.5), rel=1e-15)
    assert len(values["x0"].replace("0.", "").lstrip("0")) >= 16
    assert float(values["terminal_gap"]) <= 1e-12
    assert len(out_csv.read_text().splitlines()) == 2002


def test_solve_flags_override_file(tmp_path, capsys):
    pfile = tmp_path / "sinpair.txt"
    run(["demo", "sinpair", "--out", str(pfile)], capsys)
    out_csv = tmp_path / "s.csv"
    code, out, _ = run(["solve", str(pfile), "--grid", "50", "--tol", "1e-6", "--theta",
                        "0.5", "--out", str(out_csv)], capsys)
    assert code == 0
    assert float(kv(out)["theta"]) == 0.5
    assert len(out_csv.read_text().splitlines()) == 52
    assert run(["verify", str(pfile), "--solution", str(out_csv), "--refine", "4"],
               capsys)[0] == 0


def test_demo_to_stdout(capsys):
    code, out, _ = run(["demo", "prey"], capsys)
    assert code == 0 and out == demo_text("prey")


def test_missing_file_exits_4(tmp_path, capsys):
    code, _, err = run(["analyze", str(tmp_path / "nope.txt")], capsys)
    assert code == 4 and "cannot read" in err
    code, _, err = run(["bogus"], capsys)
    assert code == 4
    code, _, _ = run(["solve", str(tmp_path / "x"), "--grid", "many"], capsys)
    assert code == 4


def test_config_error_message_has_line(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text(BASE.replace('f = "0"', 'f = "sin(x1"'))
    code, _, err = run(["analyze", str(path)], capsys)
    assert code == 4
    assert "line 7" in err and "at byte" in err


def test_console_script_entry_point(tmp_path):
    pfile = tmp_path / "d.txt"
    proc = subprocess.run([sys.executable, "-m", "mutualctl.cli", "demo", "linear", "--out",
                           str(pfile)], capture_output=True, text=True,
                          env={"MUTUALCTL_THREADS": "8", "PATH": ""})
    assert proc.returncode == 0
    assert pfile.read_text() == demo_text("linear")
