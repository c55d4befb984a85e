import json

import pytest

from noisesens.cli import EXIT_BAND, EXIT_ERROR, EXIT_OK, main


def _run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_overlap_writes_results(tmp_path, capsys):
    code, out, _ = _run(capsys, "overlap", "--n", "30", "--tau", "1.2", "--trials", "3", "--out", str(tmp_path))
    assert code in (EXIT_OK, EXIT_BAND)
    summary = json.loads(out)
    assert summary["trials"] == 3 and summary["regime"] == "collinear"
    assert (tmp_path / "trials.csv").exists() and (tmp_path / "summary.json").exists()


def test_band_violation_exit_code(capsys):
    code, out, _ = _run(capsys, "rigidity", "--n", "50", "--model", "er", "--b", "0.4", "--trials", "2",
                        "--exponent", "-20")
    assert code == EXIT_BAND
    assert json.loads(out)["band_ok"] is False


def test_band_met_exit_code(capsys):
    code, _, _ = _run(capsys, "var-decomp", "--n", "2", "--exhaustive")
    assert code == EXIT_OK


@pytest.mark.parametrize(
    "args",
    [
        ["overlap", "--bogus"],
        ["overlap", "--k", "1", "--tau", "1.0"],
        ["var-decomp", "--n", "10", "--exhaustive"],
        ["overlap", "--n", "10", "--k", "1000"],
        ["sweep", "--model", "wigner"],
        ["sandwich", "--model", "wigner", "--n", "10"],
        ["deloc", "--model", "er", "--n", "100", "--b", "0.6"],
    ],
)
def test_errors_exit_one(capsys, args):
    code, _, _ = _run(capsys, *args)
    assert code == EXIT_ERROR


def test_flags_override_config(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"n": 20, "trials": 4, "seed": 9}))
    code, out, _ = _run(capsys, "overlap", "--config", str(conf), "--n", "25", "--k", "5")
    assert code in (EXIT_OK, EXIT_BAND)
    summary = json.loads(out)
    assert summary["config"]["model"]["n"] == 25
    assert summary["trials"] == 4 and summary["config"]["master_seed"] == 9


def test_bad_config(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"nope": 1}))
    assert _run(capsys, "overlap", "--config", str(conf))[0] == EXIT_ERROR
    conf.write_text("[1, 2]")
    assert _run(capsys, "overlap", "--config", str(conf))[0] == EXIT_ERROR


@pytest.mark.parametrize(
    "args",
    [
        ["deloc", "--model", "er", "--n", "60", "--b", "0.4", "--trials", "2"],
        ["gaps", "--n", "40", "--trials", "3"],
        ["superconc", "--n", "3", "--m-samples", "300"],
        ["resolvent-check", "--model", "er", "--n", "60", "--b", "0.4", "--trials", "2"],
        ["sandwich", "--model", "er", "--n", "60", "--b", "0.4", "--pairs", "5"],
        ["var-decomp", "--n", "3", "--m-samples", "200"],
        ["sweep", "--model", "er", "--n", "40", "--trials", "2", "--b-values", "0.4", "--tau-values", "1.0"],
    ],
)
def test_subcommands_run(tmp_path, capsys, args):
    code, out, _ = _run(capsys, *args, "--out", str(tmp_path / "o"))
    assert code in (EXIT_OK, EXIT_BAND)
    json.loads(out)
    assert any((tmp_path / "o").iterdir())


def test_help(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "resolvent-check" in capsys.readouterr().out
