import json

import pytest

from dgap.cli import main, parse_x0

SOLVE_REF = ["solve", "--problem", "builtin:affine_pd", "--a", "1", "--b", "2", "--rho", "0.5",
             "--alpha", "0.75", "--beta", "0.1", "--tau", "0.5", "--tol", "1e-12"]


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_reference(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    diag = tmp_path / "diag.json"
    code, _, _ = run(SOLVE_REF + ["--x0", "0,0", "--out", str(out), "--diagnostics", str(diag)], capsys)
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0].startswith("iter,fab") and len(rows) > 2
    d = json.loads(diag.read_text())
    assert d["all_pass"] and d["M1"] == 0.25 and d["M2"] == 15.0
    man = json.loads((tmp_path / "traj.csv.manifest.json").read_text())
    assert man["problem"]["name"] == "affine_pd" and man["config"]["beta"] == 0.1
    assert man["command"][:2] == ["dgap", "solve"] and "wall_time_s" in man


def test_solve_config_violation(capsys):
    argv = [a if a != "0.1" else "0.25" for a in SOLVE_REF]
    code, _, err = run(argv + ["--x0", "0,0"], capsys)
    assert code == 1 and "(b-a)/(b+L)" in err


def test_solve_override(capsys):
    argv = [a if a != "0.1" else "0.25" for a in SOLVE_REF]
    code, _, err = run(argv + ["--x0", "0,0", "--allow-unverified-config"], capsys)
    assert code in (0, 2, 3) and "warning" in err


def test_solve_at_solution(capsys):
    code, out, _ = run(SOLVE_REF + ["--x0", "1,1"], capsys)
    assert code == 0 and out == "iter,fab,norm_u,norm_w,dir,m,t,decrease,subgrad_dist\n"


def test_solve_max_iters(capsys):
    code, out, _ = run(SOLVE_REF + ["--x0", "0,0", "--max-iters", "2"], capsys)
    assert code == 2 and len(out.splitlines()) == 3


def test_solve_line_search_failed(capsys):
    argv = SOLVE_REF[:SOLVE_REF.index("--tau")] + ["--tau", "100", "--tol", "1e-12"]
    code, _, _ = run(argv + ["--x0", "0,0", "--allow-unverified-config"], capsys)
    assert code == 3


@pytest.mark.parametrize("x0", ["1", "a,b", "random:x", "nan,1"])
def test_solve_bad_x0(x0, capsys):
    assert run(SOLVE_REF + ["--x0", x0], capsys)[0] == 1


def test_random_x0():
    a, b = parse_x0("random:3", 2), parse_x0("random:3", 2)
    assert (a == b).all() and (abs(a) <= 2).all()


def test_verify_mu(tmp_path, capsys):
    rep = tmp_path / "mu.json"
    code, _, _ = run(["verify", "--problem", "builtin:li_ng", "--mode", "mu", "--samples", "20000",
                      "--seed", "7", "--radius", "2", "--report", str(rep)], capsys)
    d = json.loads(rep.read_text())
    assert code == 0 and d["kind"] == "MuCertificate"
    assert 1 - 1e-6 <= d["min_ratio"] <= 1 + 1e-6


def test_verify_kl_auto(capsys):
    code, out, _ = run(["verify", "--mode", "kl", "--problem", "builtin:affine_pd", "--center", "auto",
                        "--samples", "2000"], capsys)
    d = json.loads(out)
    assert code == 0 and d["pass"] and d["theoretical_bound"] == pytest.approx(0.2020, abs=1e-4)


def test_verify_fail_exit(tmp_path, capsys):
    # declared mu_star = 5 overstates the true modulus 2 of diag(2, 3)
    doc = {"schema": "dgap-vi/1", "name": "overclaim", "dim": 2, "set": {"kind": "free", "dim": 2},
           "map": {"type": "affine", "A": [[2, 0], [0, 3]], "q": [-2, -3]}, "lipschitz_L": 3.0,
           "mu_star": 5.0, "params": {"a": 1, "b": 2}}
    p = tmp_path / "overclaim.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(["verify", "--problem", str(p), "--mode", "mu", "--center", "0,0", "--samples", "200"], capsys)
    assert code == 4 and json.loads(out)["pass"] is False


@pytest.mark.parametrize("argv", [
    ["verify", "--problem", "builtin:li_ng", "--mode", "bogus"],
    ["verify", "--problem", "builtin:nope", "--mode", "mu"],
    ["verify", "--problem", "builtin:affine_pd", "--mode", "kl", "--center", "0,0"],
    ["check", "--problem", "/does/not/exist.json"],
])
def test_input_errors(argv, capsys):
    assert run(argv, capsys)[0] == 1


def test_check_builtins(capsys):
    code, out, _ = run(["check", "--problem", "builtin:li_ng", "--samples", "1000", "--seed", "1"], capsys)
    assert code == 0 and out.rstrip().endswith("result=pass")
    assert run(["check", "--problem", "builtin:affine_pd"], capsys)[0] == 0


def test_check_rejects_discontinuous_file(tmp_path, capsys):
    doc = {"schema": "dgap-vi/1", "name": "broken", "dim": 1, "set": {"kind": "free", "dim": 1},
           "map": {"type": "piecewise_affine", "pieces": [
               {"region": "+", "A": [[1]], "q": [0]}, {"region": "-", "A": [[1]], "q": [1]}]},
           "lipschitz_L": 1.0}
    p = tmp_path / "broken.json"
    p.write_text(json.dumps(doc))
    code, _, err = run(["check", "--problem", str(p)], capsys)
    assert code == 1 and ("discontinuous" in err or "disagree" in err)


def test_outputs_byte_identical(tmp_path, capsys):
    for k in (1, 2):
        main(SOLVE_REF + ["--x0", "random:9", "--out", str(tmp_path / f"t{k}.csv"),
                          "--diagnostics", str(tmp_path / f"d{k}.json")])
        main(["verify", "--problem", "builtin:li_ng", "--mode", "kl", "--samples", "500", "--seed", "5",
              "--report", str(tmp_path / f"v{k}.json")])
        main(["check", "--problem", "builtin:li_ng", "--samples", "200", "--seed", "5",
              "--report", str(tmp_path / f"c{k}.txt")])
    capsys.readouterr()
    for stem in ("t{}.csv", "d{}.json", "v{}.json", "c{}.txt"):
        assert (tmp_path / stem.format(1)).read_bytes() == (tmp_path / stem.format(2)).read_bytes()
