import json
import math

import pytest

from lagcheck import cli


@pytest.fixture(autouse=True)
def quiet(monkeypatch, tmp_path):
    monkeypatch.setenv("LAGCHECK_DEBUG", "0")
    monkeypatch.setenv("LAGCHECK_EXPORT_DIR", str(tmp_path / "exports"))
    monkeypatch.chdir(tmp_path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_roots_report(capsys):
    code, doc = run_json(capsys, "roots", "--n", "2", "--tau-q", "0.5")
    assert code == 0
    assert doc["command"] == "roots"
    roots = sorted((z["re"], z["im"]) for z in doc["results"]["roots"])
    assert roots[0] == pytest.approx((-1.0, -1.0))
    assert roots[1] == pytest.approx((-1.0, 1.0))
    lam = sorted((z["re"], z["im"]) for z in doc["results"]["roots_lambda"])
    assert lam[0] == pytest.approx((-2.0, -2.0))
    assert doc["results"]["classification"] == "AsymptoticallyStable"


def test_roots_assert_and_range(capsys):
    assert run(capsys, "roots", "--n", "5", "--assert")[0] == 1
    assert run(capsys, "roots", "--n", "51")[0] == 2
    assert run(capsys, "roots", "--n", "0")[0] == 2


def test_check_verdicts(capsys):
    code, doc = run_json(capsys, "check", "--n", "2", "--m", "1", "--tau-q", "1", "--tau-t", "0.4", "--assert")
    assert code == 1
    assert doc["results"]["verdict"] == "Inconsistent"
    assert doc["results"]["witness_omega"] > 0
    code, doc = run_json(capsys, "check", "--n", "2", "--m", "2", "--assert")
    assert code == 0
    assert doc["results"]["verdict"] == "ConsistentStrict"
    assert doc["results"]["witness_omega"] is None


def test_check_rejects_unstable_orders(capsys):
    assert run(capsys, "check", "--n", "5", "--m", "1")[0] == 2
    assert run(capsys, "check", "--n", "1", "--m", "1", "--tau-t", "-1")[0] == 2


def test_check_output_is_deterministic(capsys):
    argv = ("check", "--n", "3", "--m", "3", "--tau-q", "0.2", "--tau-t", "0.3")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_check_csv(capsys):
    code, out = run(capsys, "check", "--n", "1", "--m", "1", "--format", "csv")
    assert code == 0
    assert out == "power,coefficient\n0,1.0\n1,1.0\n"


def test_region_two_two(capsys):
    code, doc = run_json(capsys, "region", "--n", "2", "--m", "2", "--points", "512")
    assert code == 0
    (iv,) = doc["results"]["intervals"]
    assert iv["low"] == pytest.approx(2.0 - math.sqrt(3.0), abs=1e-6)
    assert iv["high"] == pytest.approx(2.0 + math.sqrt(3.0), abs=1e-6)
    assert doc["results"]["contains_unit_ratio"] is True
    assert doc["results"]["published"][0]["low_kind"] == "open"


def test_region_strict_mode_opens_touching_ends(capsys):
    _, doc = run_json(capsys, "region", "--n", "2", "--m", "2", "--points", "512", "--mode", "strict")
    (iv,) = doc["results"]["intervals"]
    assert iv["low_kind"] == "open" and iv["high_kind"] == "open"


def test_region_three_four_bound(capsys):
    _, doc = run_json(capsys, "region", "--n", "3", "--m", "4", "--points", "512")
    assert doc["results"]["leading_coefficient_bounds"] == [pytest.approx(4.0 / 3.0, abs=1e-4)]


def test_empty_region_asserts(capsys, tmp_path):
    code, doc = run_json(capsys, "region", "--n", "0", "--m", "2", "--points", "512", "--assert",
                         "--sweep-csv", "sweep.csv")
    assert code == 1
    assert doc["results"]["empty"] is True
    text = (tmp_path / "exports" / "sweep.csv").read_text(encoding="utf-8")
    assert text.startswith("r,verdict\n")
    assert text.count("\n") == 513


def test_grid(capsys):
    code, doc = run_json(capsys, "grid", "--points", "512", "--assert")
    assert code == 0
    assert len(doc["results"]["cells"]) == 25
    assert len(doc["results"]["consistent_pairs"]) == 13
    assert doc["results"]["mismatches"] == []
    notes = [c for c in doc["results"]["cells"] if c["note"]]
    assert [(c["n"], c["m"]) for c in notes] == [(1, 1)]


def test_integral_canonical(capsys):
    code, doc = run_json(capsys, "integral", "--n", "1", "--m", "1", "--assert")
    assert code == 0
    r = doc["results"]
    assert r["value_spectral"] == pytest.approx(-math.pi)
    assert r["value_ode"] == pytest.approx(-math.pi, rel=1e-5)
    assert r["agree"] is True


def test_integral_fourier_law(capsys):
    code, doc = run_json(capsys, "integral", "--n", "0", "--m", "0", "--omega", "2", "--tau-q", "1")
    assert code == 0
    assert doc["results"]["value_spectral"] == pytest.approx(-math.pi / 2.0)
    assert doc["results"]["value_kernel"] is None


def test_integral_needs_tau_q_with_omega(capsys):
    assert run(capsys, "integral", "--n", "1", "--m", "1", "--omega", "2")[0] == 2


def test_simulate(capsys):
    code, doc = run_json(capsys, "simulate", "--n", "2", "--seed", "3", "--assert")
    assert code == 0
    assert doc["results"]["outcome"] == "Decayed"
    assert doc["results"]["fitted_rate"] == pytest.approx(-1.0, rel=0.05)
    assert run(capsys, "simulate", "--n", "6", "--assert")[0] == 1
    assert run(capsys, "simulate", "--n", "2", "--step", "0.5")[0] == 2


def test_szego_outputs(capsys, tmp_path):
    svg = tmp_path / "plots" / "roots.svg"
    code, out = run(capsys, "szego", "--n-max", "10", "--samples", "64", "--format", "csv",
                    "--out-svg", str(svg))
    assert code == 0
    assert out.startswith("kind,n,re,im,distance\n")
    assert out.count("\nroot,") == 55
    assert svg.read_text(encoding="utf-8").startswith("<svg")


def test_report_written_to_file(capsys, tmp_path):
    target = tmp_path / "out" / "roots.json"
    code, out = run(capsys, "roots", "--n", "3", "--out", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text(encoding="utf-8"))["inputs"]["n"] == 3


def test_usage_errors(capsys):
    assert run(capsys, "check")[0] == 2
    assert run(capsys, "nonsense")[0] == 2


def test_debug_flag(capsys):
    code, out = run(capsys, "--debug", "check", "--n", "1", "--m", "0")
    assert code == 0
    assert json.loads(out)["command"] == "check"


def test_szego_up_to_fifty(capsys):
    code, doc = run_json(capsys, "szego", "--n-max", "50", "--samples", "64", "--assert")
    assert code == 0
    assert doc["results"]["decreasing_at"] == [10, 25, 50]
    assert doc["results"]["decreasing"] is True
    assert len(doc["results"]["max_distance"]) == 50


def test_unwritable_output_is_a_usage_error(capsys, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code, out = run(capsys, "roots", "--n", "2", "--out", str(blocker / "roots.json"))
    assert code == 2
    assert out == ""


def test_csv_report_to_a_bare_name_lands_in_the_export_dir(capsys, tmp_path):
    code, out = run(capsys, "check", "--n", "1", "--m", "1", "--format", "csv", "--out", "check.csv")
    assert code == 0
    assert out == ""
    text = (tmp_path / "exports" / "check.csv").read_text(encoding="utf-8")
    assert text == "power,coefficient\n0,1.0\n1,1.0\n"
