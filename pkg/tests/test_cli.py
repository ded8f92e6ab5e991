import csv
import json

import pytest

from rgvroute.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, main, read_solution
from rgvroute.instance import make_instance, save


@pytest.fixture
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("RGVROUTE_OUTDIR", str(tmp_path))
    return tmp_path


def test_gen_solve_and_round_trip(outdir, capsys):
    assert main(["gen", "--seed", "4", "--n", "4", "--Q", "2", "-o", "i.json"]) == EXIT_OK
    assert main(["solve", str(outdir / "i.json"), "-o", "s.json"]) == EXIT_OK
    sol = read_solution(outdir / "s.json")
    assert sol["route"][0] == 0 and sol["feasible"]
    assert main(["validate", "--instance", str(outdir / "i.json"), "--solution", str(outdir / "s.json")]) == EXIT_OK
    sol["energy"] += 1.0
    (outdir / "bad.json").write_text(json.dumps(sol))
    assert main(["validate", "--instance", str(outdir / "i.json"), "--solution", str(outdir / "bad.json")]) != 0


def test_backends_agree(outdir, capsys):
    main(["gen", "--seed", "2", "--n", "4", "-o", "i.json"])
    energies = {}
    for backend in ("seq", "milp"):
        assert main(["solve", str(outdir / "i.json"), "--backend", backend, "-o", f"{backend}.json"]) == EXIT_OK
        energies[backend] = read_solution(outdir / f"{backend}.json")["energy"]
    assert energies["seq"] == pytest.approx(energies["milp"], abs=1e-6)
    assert main(["solve", str(outdir / "i.json"), "--backend", "rule", "-o", "rule.json"]) == EXIT_OK
    assert read_solution(outdir / "rule.json")["energy"] >= energies["seq"] - 1e-9


def test_single_request_summary(outdir, capsys):
    save(make_instance([(2, "N", 5, "S")], m=6, Q=1, start_pos=1), outdir / "one.json")
    assert main(["solve", str(outdir / "one.json")]) == EXIT_OK
    assert "route   0 1 2 3" in capsys.readouterr().out


def test_outputs_are_byte_identical(outdir):
    main(["gen", "--seed", "7", "--n", "5", "-o", "i.json"])
    for tag in ("a", "b"):
        main(["solve", str(outdir / "i.json"), "--backend", "milp", "-o", f"{tag}.json"])
        main(["export-lp", str(outdir / "i.json"), "--cuts", "g123", "-o", f"{tag}.lp", "--stats", f"{tag}.csv"])
        main(["simulate", "--n", "10", "--m", "6", "--Q", "3", "-o", f"{tag}-sim.csv", "--trace", tag])
    for suffix in (".json", ".lp", ".csv", "-sim.csv"):
        assert (outdir / f"a{suffix}").read_bytes() == (outdir / f"b{suffix}").read_bytes()
    rows = list(csv.DictReader(open(outdir / "a.csv")))
    assert {"rows", "cols", "nonzeros"} <= set(rows[0])


def test_infeasible_exit_code(outdir, capsys):
    save(make_instance([(2, "N", 8, "N", 1, 0.0, 1.0)], m=8, Q=1, start_pos=1), outdir / "late.json")
    assert main(["solve", str(outdir / "late.json")]) == EXIT_INFEASIBLE
    assert main(["solve", str(outdir / "late.json"), "--backend", "milp"]) == EXIT_INFEASIBLE


def test_usage_errors(outdir, capsys):
    assert main([]) == EXIT_USAGE
    assert main(["solve"]) == EXIT_USAGE
    assert main(["solve", str(outdir / "missing.json")]) == EXIT_USAGE
    assert main(["bench", "--cuts", "g9"]) == EXIT_USAGE
    (outdir / "broken.json").write_text("{")
    assert main(["solve", str(outdir / "broken.json")]) == EXIT_USAGE


def test_config_overrides_vehicle(outdir, capsys):
    main(["gen", "--seed", "1", "--n", "3", "-o", "i.json"])
    (outdir / "heavy.ini").write_text("[rgv]\nw_rgv = 6.0\n")
    main(["solve", str(outdir / "i.json"), "-o", "light.json"])
    assert main(["--config", str(outdir / "heavy.ini"), "solve", str(outdir / "i.json"), "-o", "heavy.json"]) == 0
    assert read_solution(outdir / "heavy.json")["energy"] > read_solution(outdir / "light.json")["energy"]
    (outdir / "bad.ini").write_text("[rgv]\nw_rgv = -1\n")
    assert main(["--config", str(outdir / "bad.ini"), "solve", str(outdir / "i.json")]) == EXIT_USAGE


def test_simulate_and_bench_write_csv(outdir, capsys):
    assert main(["simulate", "--controller", "rolling", "--horizon", "8", "--n", "12", "--m", "6",
                 "--Q", "2", "--events", "ev", "-o", "m.csv"]) == EXIT_OK
    rows = list(csv.DictReader(open(outdir / "m.csv")))
    assert rows[0]["controller"] == "rolling" and float(rows[0]["energy"]) > 0
    assert any(p.name.startswith("ev-") for p in outdir.iterdir())
    assert main(["bench", "--sizes", "4", "--Q", "2", "--cuts", "none,g23", "-o", "b.csv"]) == EXIT_OK
    rows = list(csv.DictReader(open(outdir / "b.csv")))
    assert len(rows) == 2 and {"nodes", "seconds", "root_gap"} <= set(rows[0])
    assert float(rows[0]["objective"]) == pytest.approx(float(rows[1]["objective"]), abs=1e-6)


def test_validate_command(outdir, capsys):
    assert main(["validate", "--count", "4", "--max-n", "3"]) == EXIT_OK
    assert "0 mismatches" in capsys.readouterr().out
