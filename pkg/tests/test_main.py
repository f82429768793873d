import pytest

from lagcheck import main as walkthrough
from lagcheck.services.spectral import admissible_region, region_text


def feed(monkeypatch, answers):
    it = iter(answers)
    monkeypatch.setattr("builtins.input", lambda prompt="": next(it))


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setenv("LAGCHECK_DEBUG", "0")
    monkeypatch.setenv("LAGCHECK_SCAN_POINTS", "512")


def test_defaults_walk_through_the_two_two_model(monkeypatch, capsys):
    feed(monkeypatch, ["", "", "", ""])
    walkthrough.main()
    out = capsys.readouterr().out
    assert "ConsistentStrict" in out
    assert "AsymptoticallyStable" in out
    assert "Published" in out


def test_inconsistent_model_reports_a_frequency(monkeypatch, capsys):
    feed(monkeypatch, ["2", "1", "1", "0.4"])
    walkthrough.main()
    out = capsys.readouterr().out
    assert "Inconsistent" in out
    assert "fails at omega" in out


def test_unstable_order_stops_early(monkeypatch, capsys):
    feed(monkeypatch, ["6", "1", "1", "1"])
    walkthrough.main()
    out = capsys.readouterr().out
    assert "Unstable" in out
    assert "Positivity polynomial" not in out


def test_bad_number(monkeypatch, capsys):
    feed(monkeypatch, ["two"])
    walkthrough.main()
    assert "Not a number" in capsys.readouterr().out


def test_domain_errors_are_reported(monkeypatch, capsys):
    feed(monkeypatch, ["1", "1", "-1", "1"])
    walkthrough.main()
    assert "InvalidLags" in capsys.readouterr().out


def test_region_line_matches_the_cli_notation(monkeypatch, capsys):
    feed(monkeypatch, ["2", "2", "1", "1"])
    walkthrough.main()
    out = capsys.readouterr().out
    assert region_text(admissible_region(2, 2).intervals) in out
