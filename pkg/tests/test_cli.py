import json
import os
import time

import numpy as np
import pytest

from helpers import pipeline, run
from tensoredit.npyio import read_npy, write_json


@pytest.fixture(scope="module")
def first_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("run1")
    t0 = time.perf_counter()
    logs = pipeline(root)
    return root, logs, time.perf_counter() - t0


def test_pipeline_completes_quickly(first_run):
    root, logs, elapsed = first_run
    assert elapsed < 60
    assert read_npy(root / "batch.npy").shape == (2000, 8, 4, 4)
    assert read_npy(root / "dirs.npy").shape == (3, 16)
    for name in ("U1.npy", "U2.npy", "U3.npy", "mean.npy", "eigenvalues.json"):
        assert (root / "bases" / name).exists()
    fit_report = json.loads(logs[2])
    assert fit_report["parameters"]["dense"] == 8 * 4 * 4 * 16


def test_planted_mod_is_small(first_run):
    report = json.loads(first_run[1][4])
    assert len(report["A"]) == 3
    assert report["mod"] <= 0.05


def test_reruns_are_byte_identical(first_run, tmp_path):
    root1, logs1, _ = first_run
    logs2 = pipeline(tmp_path)
    assert logs1 == logs2
    files = sorted(os.path.relpath(os.path.join(d, f), root1)
                   for d, _, fs in os.walk(root1) for f in fs)
    assert len(files) >= 15
    for rel in files:
        assert (root1 / rel).read_bytes() == (tmp_path / rel).read_bytes(), rel


def test_edit_stdout_and_combine(first_run):
    root = first_run[0]
    code, out, _ = run("edit", "--bases", root / "bases", "--weights", root / "weights",
                       "--selectors", root / "sel.txt")
    rows = [json.loads(line) for line in out.splitlines()]
    np.testing.assert_allclose(rows, read_npy(root / "dirs.npy"), rtol=0, atol=0)
    code, out, _ = run("edit", "--bases", root / "bases", "--weights", root / "weights",
                       "--selectors", root / "sel.txt", "--combine")
    combined = json.loads(out)
    np.testing.assert_allclose(combined, np.sum(rows, axis=0), atol=1e-12)


def test_edit_with_empty_selector_file(first_run, tmp_path):
    root = first_run[0]
    (tmp_path / "empty.txt").write_text("")
    code, out, err = run("edit", "--bases", root / "bases", "--weights", root / "weights",
                         "--selectors", tmp_path / "empty.txt")
    assert (code, out, err) == (0, "", "")
    code, _, _ = run("edit", "--bases", root / "bases", "--weights", root / "weights",
                     "--selectors", tmp_path / "empty.txt", "--out", tmp_path / "none.npy")
    assert code == 0 and read_npy(tmp_path / "none.npy").shape == (0, 16)


def test_mod_with_selector_files(first_run, tmp_path):
    root = first_run[0]
    paths = []
    for k, line in enumerate(["1:C:1:1.0", "1:H:1:1.0", "1:W:1:1.0"]):
        paths.append(tmp_path / f"s{k}.txt")
        paths[-1].write_text(line + "\n")
    code, out, err = run("mod", "--model", root / "model", "--weights", root / "weights",
                         "--weights-mixing", root / "weights", "--bases", root / "bases",
                         "--selectors", *paths, "--seed", 1, "--n-images", 20)
    assert code == 0, err
    assert 0 <= json.loads(out)["mod"] <= 1


def test_config_file_and_flag_precedence(tmp_path):
    write_json(tmp_path / "cfg.json", {"seed": 3, "synth": {"d": 2, "shape": [2, 2, 2], "samples": 5,
                                                              "style": "dense", "out": str(tmp_path / "a")}})
    code, out, err = run("synth", "--config", tmp_path / "cfg.json", "--samples", 7)
    assert code == 0, err
    assert json.loads(out)["batch"] == [7, 2, 2, 2]


def test_missing_required_option_is_reported():
    code, out, err = run("synth", "--d", 2, "--shape", 2, 2, 2, "--out", "x")
    assert code == 1 and out == ""
    msg = json.loads(err)
    assert msg["error"] == "ContractError" and "--seed" in msg["message"]
    assert err.count("\n") == 1


def test_module_errors_become_json(tmp_path):
    (tmp_path / "bad.npy").write_bytes(b"not an npy file")
    code, _, err = run("bases", "--batch", tmp_path / "bad.npy", "--out", tmp_path / "b")
    assert code == 1 and json.loads(err)["error"] == "NpyFormatError"
    assert not (tmp_path / "b").exists()
    code, _, err = run("bases", "--batch", tmp_path / "nothing.npy", "--out", tmp_path / "b")
    assert code == 1 and json.loads(err)["error"] == "FileNotFoundError"


def test_fit_divergence_is_reported(tmp_path):
    assert run("synth", "--d", 2, "--shape", 2, 2, 2, "--samples", 20, "--seed", 0, "--style", "dense",
               "--out", tmp_path)[0] == 0
    code, _, err = run("fit", "--batch", tmp_path / "batch.npy", "--latents", tmp_path / "latents.npy",
                       "--learning-rate", 1e3, "--iterations", 100, "--seed", 0, "--out", tmp_path / "w")
    assert code == 1 and json.loads(err)["error"] == "TrainingDiverged"
    assert not (tmp_path / "w").exists()
