import json

import pytest

from grady.cli import RunConfig, main, resolve_path


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_check_loop_cost(capsys):
    code, out = _run(capsys, "check", "loop_cost.dfx")
    assert code == 0 and "valid on grid" in out


def test_check_examples_path_falls_back_to_corpus(capsys):
    code, _ = _run(capsys, "check", "examples/loop_cost.dfx")
    assert code == 0


def test_pragma_only_file(tmp_path, capsys):
    p = tmp_path / "empty.dfx"
    p.write_text("#instance cost\n")
    code, out = _run(capsys, "check", str(p), "--json")
    rep = json.loads(out)
    assert code == 0 and rep["files"][0]["obligations"] == []


def test_parse_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.dfx"
    p.write_text("#instance cost\nlet x = (")
    assert _run(capsys, "check", str(p))[0] == 1


def test_missing_file_exit(capsys):
    assert _run(capsys, "check", "does_not_exist.dfx")[0] == 1


def test_mutant_insert_undischarged(capsys):
    code, out = _run(capsys, "check", "insert_bad_grade", "--json")
    rep = json.loads(out)
    assert code == 2
    assert rep["files"][0]["undischarged"]
    failing = [o for o in rep["files"][0]["obligations"] if o["result"]["status"] != "valid"]
    assert all(o["decl"] == "insert" for o in failing)


def test_emit_smt(tmp_path, capsys):
    code, _ = _run(capsys, "check", "loop_cost", "--emit-smt", str(tmp_path))
    assert code == 0
    files = sorted(f.name for f in tmp_path.iterdir())
    assert "loop_cost.0.smt2" in files


def test_emit_command(tmp_path, capsys):
    code, out = _run(capsys, "emit", "fib", "--emit-smt", str(tmp_path), "--json")
    assert code == 0 and json.loads(out)["files"][0]["written"]


def test_run_command(capsys):
    code, out = _run(capsys, "run", "loop_cost", "--decl", "loop", "--arg", "2", "--param", "n=5",
                     "--json")
    rep = json.loads(out)
    assert code == 0 and rep["trace"] == 3 and rep["outcome"] == "converged"


def test_run_distribution(capsys):
    code, out = _run(capsys, "run", "union_let", "--decl", "main", "--dist")
    rows = json.loads(out)["distribution"]
    assert code == 0 and {r["p"] for r in rows} == {"2/25", "23/25"}


def test_run_bad_parameter(capsys):
    assert _run(capsys, "run", "loop_cost", "--decl", "loop", "--arg", "2")[0] == 1


def test_soundness_fib_mutant_exit(capsys):
    code, out = _run(capsys, "soundness", "fib_missing_pop")
    assert code == 3 and "FAIL" in out and "arg=" in out


def test_soundness_single_trial(capsys):
    code, out = _run(capsys, "soundness", "laplace", "--trials", "1", "--json")
    row = json.loads(out)["rows"][0]
    assert code == 0 and row["tolerance"] > 1


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("GRADY_SEED", "11")
    code, out = _run(capsys, "soundness", "laplace", "--trials", "50", "--json")
    assert json.loads(out)["seed"] == 11


def test_laws_singleton_universe(capsys):
    code, out = _run(capsys, "laws", "--universe", "1")
    assert code == 0 and "FAIL" not in out


def test_laws_with_mutants(tmp_path, capsys):
    w = tmp_path / "w.json"
    code, out = _run(capsys, "laws", "--universe", "2", "--with-mutants", "--dump-witness", str(w))
    assert code == 4
    failures = json.loads(w.read_text())["failures"]
    assert {f["law"] for f in failures} == {"unit", "monotonicity", "associativity",
                                            "multiplication", "par-distribution", "reindexing"}


def test_bad_universe(capsys):
    assert main(["laws", "--universe", "9"]) == 1


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig("soundness", trials=0)
    with pytest.raises(ValueError):
        RunConfig("check", grid_bound=0)


def test_resolve_path_mutant():
    stem, src = resolve_path("fib_missing_pop.dfx")
    assert stem == "fib_missing_pop" and "#instance temporal" in src
