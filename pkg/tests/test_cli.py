import json
import subprocess
import sys

import pytest

from binae.classic import hamming74_codebook
from binae.cli import main

TINY = ["--epochs-total", "6", "--epochs-continuous", "4", "--train-samples", "1500",
        "--restarts", "2", "--seed", "7", "--val-trials", "1000", "--select-trials", "2000"]


@pytest.fixture
def ham_file(tmp_path):
    path = tmp_path / "hamming.txt"
    hamming74_codebook().save(path)
    return path


def test_train_config_error_exit_code(tmp_path, capsys):
    code = main(["train", "--epochs-continuous", "200", "--epochs-total", "150", "--out", str(tmp_path)])
    assert code == 2
    assert "epochs_continuous" in capsys.readouterr().err


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tiny\nepochs_total = 6\nepochs_continuous = 4\ntrain_samples = 1500\n"
                   "restarts = 1\nval_trials = 500\nselect_trials = 500\nseed = 1\n")
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfg), "--seed", "9", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 9 and manifest["config"]["epochs_total"] == 6
    assert manifest["selected_seed"] == 9
    bad = tmp_path / "bad.cfg"
    bad.write_text("epochs = 3\n")
    assert main(["train", "--config", str(bad), "--out", str(out)]) == 2


def test_train_writes_artifacts_and_replays(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["train", *TINY, "--out", str(a)]) == 0
    for name in ("model.ckpt", "codebook.txt", "history.csv", "restarts.csv", "manifest.json"):
        assert (a / name).exists(), name
    assert main(["train", "--manifest", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("model.ckpt", "codebook.txt", "history.csv", "restarts.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_eval_hamming_without_model(tmp_path, capsys):
    out = tmp_path / "ev"
    code = main(["eval", "--pairing", "hamming-ml", "--p-grid", "0.05,0.1", "--trials", "20000",
                 "--seed", "3", "--out", str(out)])
    assert code == 0
    text = (out / "bler_hamming-ml_seed3.csv").read_text()
    assert text.startswith("p,bler,se,trials,errors\n") and len(text.splitlines()) == 3
    assert (out / "comparison_seed3.txt").exists()
    assert main(["eval", "--pairing", "ae-ml", "--out", str(out)]) == 3


def test_eval_all_pairings_with_model(tmp_path):
    run = tmp_path / "run"
    assert main(["train", *TINY, "--out", str(run)]) == 0
    out = tmp_path / "ev"
    code = main(["eval", "--all", "--model", str(run / "model.ckpt"), "--codebook", str(run / "codebook.txt"),
                 "--p-grid", "0.05", "--trials", "2000", "--out", str(out)])
    # a tiny run rarely learns a Hamming-equivalent code; then hamming-ae is skipped with exit 3
    written = sorted(p.name for p in out.glob("bler_*.csv"))
    assert {"bler_hamming-ml_seed0.csv", "bler_ae-ml_seed0.csv", "bler_ae-ae_seed0.csv"} <= set(written)
    assert code == (0 if "bler_hamming-ae_seed0.csv" in written else 3)


def test_analyze_hamming(tmp_path, ham_file, capsys):
    out = tmp_path / "an"
    assert main(["analyze", "--codebook", str(ham_file), "--out", str(out)]) == 0
    assert (out / "spectrum.csv").read_text() == "distance,0,1,2,3,4,5,6,7\ncount,1,0,0,7,7,0,0,1\n"
    data = json.loads((out / "structure.json").read_text())
    assert data["d_min"] == 3 and data["hamming_equivalent"] and data["pure_coset"]
    assert "warning" not in capsys.readouterr().out


def test_analyze_bad_codebook(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("4 7\n+1 +1\n")
    assert main(["analyze", "--codebook", str(bad), "--out", str(tmp_path)]) == 3
    assert main(["analyze", "--codebook", str(tmp_path / "missing.txt")]) == 3


def test_report_merges_curves(tmp_path, capsys):
    ev = tmp_path / "ev"
    main(["eval", "--p-grid", "0.05,0.1", "--trials", "5000", "--out", str(ev)])
    capsys.readouterr()
    table = tmp_path / "table.txt"
    assert main(["report", "--dir", str(ev), "--out", str(table)]) == 0
    lines = table.read_text().splitlines()
    assert lines[0] == "p,bler[hamming-ml]" and len(lines) == 3
    assert main(["report"]) == 3


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "binae.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("binae ")
