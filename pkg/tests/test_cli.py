import json
import re

import numpy as np
import pytest

from kmlp.cli import main
from kmlp.data import gen_blobs, load_csv, save_csv

BLOBS = {
    "seed": 3,
    "output_dir": "out",
    "dataset": {"generator": "blobs", "params": {"n": 120, "d": 2, "separation": 6},
                "split": [0.6, 0.2, 0.2]},
    "architecture": {"widths": [2, 1], "sigmas": [1.0, 1.0]},
    "train": {"learning_rate": 0.01, "epochs": 60, "batch_size": 32, "patience": 20},
}


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def last_json(stderr):
    return json.loads(stderr.strip().splitlines()[-1])


@pytest.fixture
def trained(tmp_path, capsys):
    assert main(["train", "--config", str(write_config(tmp_path, BLOBS))]) == 0
    capsys.readouterr()
    data = tmp_path / "blobs.csv"
    save_csv(gen_blobs(80, 2, 6.0, seed=11), data)
    return tmp_path / "out" / "model.kmlp", data


def test_train_outputs(trained):
    model, _ = trained
    out = model.parent
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3 and len(manifest["config_sha256"]) == 64
    assert (out / "layer_1.jsonl").exists() and (out / "layer_2.jsonl").exists()


def test_eval(trained, capsys):
    model, data = trained
    assert main(["eval", "--model", str(model), "--data", str(data)]) == 0
    final = capsys.readouterr().out.strip().splitlines()[-1]
    match = re.fullmatch(r"error_rate=([0-9.]+)", final)
    assert match and float(match.group(1)) == 0.0


def test_inspect(trained, capsys):
    model, data = trained
    assert main(["inspect", "--model", str(model), "--data", str(data)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 1 + 2
    assert main(["inspect", "--model", str(model), "--data", str(data), "--json"]) == 0
    records = [json.loads(s) for s in capsys.readouterr().out.strip().splitlines()]
    assert [r["layer"] for r in records] == [1, 2]
    assert set(records[0]["dissimilarity_to_ideal"]) == {"l1", "l2", "alignment"}


def test_eval_corrupt_model(tmp_path, capsys):
    bad = tmp_path / "bad.kmlp"
    bad.write_bytes(b"KMLP1\n\x00\x00")
    data = tmp_path / "d.csv"
    save_csv(gen_blobs(4, seed=0), data)
    assert main(["eval", "--model", str(bad), "--data", str(data)]) == 2
    assert last_json(capsys.readouterr().err)["kind"] == "FormatError"


def test_eval_missing_model(tmp_path, capsys):
    data = tmp_path / "d.csv"
    save_csv(gen_blobs(4, seed=0), data)
    assert main(["eval", "--model", str(tmp_path / "none"), "--data", str(data)]) == 2


@pytest.mark.parametrize("patch,field", [
    ({"bogus": 1}, "bogus"),
    ({"train": {"epochs": 5, "momentum": 0.9}}, "train.momentum"),
    ({"architecture": {"widths": [2, 1]}}, "architecture.sigmas"),
    ({"dataset": {"generator": "spirals"}}, "dataset.generator"),
    ({"train": {"metric": "l3"}}, "train"),
    ({"train": {"retention": [1.0]}}, "train.retention"),
])
def test_schema_violation(tmp_path, capsys, patch, field):
    cfg = dict(BLOBS, **patch)
    assert main(["train", "--config", str(write_config(tmp_path, cfg))]) == 2
    assert last_json(capsys.readouterr().err)["field"] == field


def test_divergence_exit(tmp_path, capsys):
    cfg = dict(BLOBS, train={"learning_rate": 1e308, "epochs": 3, "batch_size": 8})
    assert main(["train", "--config", str(write_config(tmp_path, cfg))]) == 3
    assert last_json(capsys.readouterr().err)["kind"] == "DivergenceError"


def test_gen_csv(tmp_path, capsys):
    assert main(["gen", "--name", "rectangles", "--n", "12", "--seed", "5",
                 "--out", str(tmp_path)]) == 0
    ds = load_csv(tmp_path / "rectangles.csv")
    assert ds.features.shape == (12, 784)


def test_gen_idx_and_eval(tmp_path, capsys):
    assert main(["gen", "--name", "rectangles", "--n", "12", "--side", "8", "--seed", "5",
                 "--out", str(tmp_path), "--format", "idx"]) == 0
    images = tmp_path / "rectangles-images-idx3-ubyte"
    assert images.read_bytes()[:4] == b"\x00\x00\x08\x03"


def test_gen_uses_data_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("KMLP_DATA_DIR", str(tmp_path))
    assert main(["gen", "--name", "blobs", "--n", "10"]) == 0
    assert (tmp_path / "blobs.csv").exists()


def test_csv_dataset_config(tmp_path, capsys):
    save_csv(gen_blobs(60, 2, 6.0, seed=1), tmp_path / "train.csv")
    cfg = dict(BLOBS, dataset={"csv": "train.csv", "split": [0.7, 0.3, 0.0]})
    assert main(["train", "--config", str(write_config(tmp_path, cfg))]) == 0
    assert "validation_error" in capsys.readouterr().out


def test_same_seed_same_bytes(tmp_path, capsys):
    cfg = dict(BLOBS, output_dir="a")
    main(["train", "--config", str(write_config(tmp_path, cfg, "a.json"))])
    cfg = dict(BLOBS, output_dir="b")
    main(["train", "--config", str(write_config(tmp_path, cfg, "b.json"))])
    assert (tmp_path / "a" / "model.kmlp").read_bytes() == (tmp_path / "b" / "model.kmlp").read_bytes()
