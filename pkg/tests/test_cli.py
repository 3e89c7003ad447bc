import csv

import numpy as np
import pytest

from emdenfowler.cli import main
from emdenfowler.files import DEMOS, ProblemFileError, parse_problem, problem_to_toml, read_solution_csv

DIRICHLET = """
[equation]
lambda = 2
m = 2
p = "(t*(1-t))^2"
q = "(t*(1-t))^2"

[boundary]
alpha = 1
beta = 0
gamma = 1
delta = 0
"""

HARMONIC = """
[equation]
lambda = 1
m = 1
p = "t^(-2)"
q = "0"

[boundary]
alpha = 1
beta = 0
gamma = 1
delta = 1
"""


@pytest.fixture
def dirichlet_file(tmp_path):
    path = tmp_path / "dirichlet.toml"
    path.write_text(DIRICHLET)
    return path


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines() if "=" in line)


@pytest.mark.filterwarnings("ignore::emdenfowler.problem.OutsideHypothesisWarning")
def test_check_divergent(tmp_path, capsys):
    path = tmp_path / "h.toml"
    path.write_text(HARMONIC)
    assert main(["check", str(path)]) == 2
    assert kv(capsys.readouterr().out)["c_exists"] == "No"


def test_check_yes(dirichlet_file, capsys):
    assert main(["check", str(dirichlet_file)]) == 0
    out = kv(capsys.readouterr().out)
    assert out["case"] == "IV" and out["c_exists"] == "Yes"


def test_solve_then_verify(dirichlet_file, tmp_path, capsys):
    out = tmp_path / "u.csv"
    assert main(["solve", str(dirichlet_file), "-o", str(out)]) == 0
    report = kv(capsys.readouterr().out)
    assert report["converged"] == "true" and report["verdict"] == "pass"
    assert report["solver.method"] == "newton" and report["solver.tol"] == "1e-10"
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "u", "du"]
    data = np.array(rows[1:], dtype=float)
    assert np.max(np.abs(data[:, 1] - data[:, 0] * (1 - data[:, 0]))) <= 5e-5
    # 17 significant digits
    assert all(len(f.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17 for f in rows[5])
    assert main(["verify", str(dirichlet_file), str(out)]) == 0
    assert kv(capsys.readouterr().out)["verdict"] == "pass"


def test_verify_tampered(dirichlet_file, tmp_path, capsys):
    out = tmp_path / "u.csv"
    main(["solve", str(dirichlet_file), "-o", str(out)])
    grid = read_solution_csv(out)
    bad = tmp_path / "bad.csv"
    with bad.open("w") as fh:
        fh.write("t,u,du\n")
        for t, u, du in zip(grid.t, grid.u, grid.du):
            fh.write(f"{float(t)!r},{2 * float(u)!r},{2 * float(du)!r}\n")
    capsys.readouterr()
    assert main(["verify", str(dirichlet_file), str(bad)]) == 2
    assert kv(capsys.readouterr().out)["verdict"] == "fail"


def test_envelope_csv(dirichlet_file, tmp_path, capsys):
    out = tmp_path / "env.csv"
    assert main(["envelope", str(dirichlet_file), "-o", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["t", "lower", "upper"]
    assert len(rows) == 502
    data = np.array(rows[1:], dtype=float)
    assert np.all(data[:, 1] <= data[:, 2])
    assert "L5" in kv(capsys.readouterr().out)


def test_flags_override(dirichlet_file, tmp_path, capsys):
    out = tmp_path / "u.csv"
    code = main(["solve", str(dirichlet_file), "-o", str(out), "--method", "picard",
                 "--theta", "0.5", "--tol", "1e-9", "--mesh-levels", "20"])
    assert code == 0
    report = kv(capsys.readouterr().out)
    assert report["solver.method"] == "picard"
    assert report["solver.mesh_levels"] == "20"
    assert report["solver.tol"] == "1e-09"


def test_non_convergence_exit(dirichlet_file, tmp_path):
    code = main(["solve", str(dirichlet_file), "-o", str(tmp_path / "u.csv"), "--method", "picard",
                 "--theta", "0.01"])
    assert code == 3


def test_regularize_report(tmp_path, capsys):
    path = tmp_path / "r.toml"
    path.write_text(DIRICHLET + "\n[solver]\nregularize = true\n")
    assert main(["solve", str(path), "-o", str(tmp_path / "u.csv")]) == 0
    report = kv(capsys.readouterr().out)
    assert report["regularize_decreasing"] == "true"
    assert report["regularize_bound_holds"] == "true"


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["check"], ["check", "/nonexistent/file.toml"], ["demo", "--name", "nope"]],
)
def test_usage_errors(argv):
    assert main(argv) == 1


@pytest.mark.parametrize(
    "edit, match",
    [
        (lambda s: s + "\n[extra]\nx = 1\n", "unknown section"),
        (lambda s: s.replace("m = 2", "m = 2\nmu = 3"), "unknown key"),
        (lambda s: s.replace("gamma = 1\n", ""), "missing"),
        (lambda s: s.replace('"(t*(1-t))^2"', '"t**2"', 1), "offset"),
        (lambda s: s + "\n[solver]\nmethod = \"euler\"\n", "method"),
        (lambda s: s.replace("lambda = 2", "lambda = [2]"), "number"),
        (lambda s: s.replace("lambda = 2", "lambda = = 2"), "dirichlet"),
    ],
)
def test_problem_file_errors(edit, match):
    with pytest.raises(ProblemFileError, match=match):
        parse_problem(edit(DIRICHLET), name="dirichlet")


def test_file_syntax_error_exit(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(DIRICHLET.replace('"(t*(1-t))^2"', '"t**2"', 1))
    assert main(["check", str(path)]) == 1
    assert "offset 1" in capsys.readouterr().err


def test_defaults_and_declared_orders():
    spec, config = parse_problem(DIRICHLET.replace("m = 2", "m = 2\np_order_0 = 2"))
    assert config.method == "newton" and config.mesh_levels == 30 and config.max_iter is None
    assert spec.p_orders.declared and spec.p_orders.sigma0 == 2
    assert spec.p_orders.sigma1 == pytest.approx(2, abs=0.02)
    assert spec.q_orders is None


@pytest.mark.parametrize("demo", DEMOS, ids=lambda d: d.name)
def test_toml_round_trip(demo):
    spec, _ = parse_problem(problem_to_toml(demo.spec()))
    ref = demo.spec()
    assert (spec.lam, spec.m, spec.alpha, spec.beta, spec.gamma, spec.delta) == (
        ref.lam, ref.m, ref.alpha, ref.beta, ref.gamma, ref.delta)
    t = np.linspace(0.1, 0.9, 9)
    assert np.array_equal(spec.p(t), ref.p(t))


def test_demo_round_trip(tmp_path, capsys):
    assert main(["demo", "-o", str(tmp_path)]) == 0
    out = kv(capsys.readouterr().out)
    for demo in DEMOS:
        assert out[f"{demo.name}.verdict"] == "pass"
        path = tmp_path / "p.toml"
        path.write_text(problem_to_toml(demo.spec()))
        assert main(["verify", str(path), str(tmp_path / f"{demo.name}.csv")]) == 0, demo.name
        capsys.readouterr()
