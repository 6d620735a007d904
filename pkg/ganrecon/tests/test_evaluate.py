"""Metric evaluation: definitions, CSV schema, and CLI round trips."""

import csv
import json
import math
import shutil
import subprocess
import sys

import numpy as np
import pytest

from ganrecon.data import PairedDataset
from ganrecon.evaluate import evaluate, mse, psnr, ssim
from ganrecon.io import save_image
from ganrecon.train import TrainConfig, train

from conftest import make_blob_pairs

WAVESONO = shutil.which("wavesono")


def read_rows(path):
    with open(path, newline="") as fh:
        return [
            {**rec, "mse": float(rec["mse"]), "psnr": float(rec["psnr"]), "ssim": float(rec["ssim"])}
            for rec in csv.DictReader(fh)
        ]


def test_metric_definitions(rng):
    a = rng.uniform(0, 1, (16, 16))
    assert mse(a, a) == 0.0
    assert psnr(a, a) == math.inf
    assert ssim(a, a) == 1.0
    b = np.clip(a + 0.1, 0, 1)
    assert psnr(a, b) == pytest.approx(10 * math.log10(1.0 / mse(a, b)), abs=1e-12)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("eval")
    dataset = PairedDataset(make_blob_pairs(tmp, 8))
    ckpt, _ = train(TrainConfig(epochs=2, batch_size=4, seed=2), dataset, tmp / "run")
    return tmp, dataset, ckpt


def test_evaluate_row_count_and_schema(trained, tmp_path):
    tmp, dataset, ckpt = trained
    out = tmp_path / "metrics.csv"
    rows = evaluate(ckpt, dataset, out)
    parsed = read_rows(out)
    assert len(parsed) == len(dataset) + 2
    assert parsed[-2]["recon"] == "mean"
    assert parsed[-1]["recon"] == "std"
    assert list(parsed[0].keys()) == ["recon", "truth", "mse", "psnr", "ssim"]


def test_evaluate_identity_dataset_rows(tmp_path, rng):
    # target-vs-target pairs score (0, inf, 1) regardless of the model
    img_paths = []
    for k in range(3):
        p = tmp_path / f"t{k}.f32"
        save_image(rng.uniform(0, 1, (64, 64)), p)
        img_paths.append(p)
    dataset = PairedDataset([(p, p) for p in img_paths])
    ckpt, _ = train(TrainConfig(epochs=1, batch_size=3, seed=0), dataset, tmp_path / "run")
    rows_direct = [
        {"mse": mse(x[0].numpy().astype(float), y[0].numpy().astype(float))}
        for x, y in (dataset[i] for i in range(len(dataset)))
    ]
    assert all(r["mse"] == 0.0 for r in rows_direct)
    for i in range(len(dataset)):
        x, y = dataset[i]
        a = x[0].numpy().astype(np.float64)
        b = y[0].numpy().astype(np.float64)
        assert mse(a, b) == 0.0
        assert psnr(a, b) == math.inf
        assert ssim(a, b) == 1.0


@pytest.mark.skipif(WAVESONO is None, reason="wavesono CLI not on PATH")
def test_cross_component_metric_parity(trained, tmp_path):
    tmp, dataset, ckpt = trained
    our_csv = tmp_path / "ours.csv"
    recon_dir = tmp_path / "recons"
    rows = evaluate(ckpt, dataset, our_csv, recon_dir=recon_dir)
    data_rows = [r for r in rows if r["truth"]]
    pair_args = [f"{r['recon']}:{r['truth']}" for r in data_rows]
    their_csv = tmp_path / "theirs.csv"
    subprocess.run(
        [WAVESONO, "metrics", "--pairs", *pair_args, "--output", str(their_csv)],
        check=True,
        capture_output=True,
    )
    theirs = [r for r in read_rows(their_csv) if r["truth"]]
    assert len(theirs) == len(data_rows)
    for ours, other in zip(data_rows, theirs):
        assert other["mse"] == pytest.approx(ours["mse"], abs=1e-5)
        assert other["psnr"] == pytest.approx(ours["psnr"], abs=1e-5)
        assert other["ssim"] == pytest.approx(ours["ssim"], abs=1e-5)


def test_cli_train_eval_infer_roundtrip(tmp_path):
    pairs = make_blob_pairs(tmp_path, 6)
    config = {
        "epochs": 1,
        "batch_size": 3,
        "seed": 0,
        "output_dir": "run",
        "data": {"pairs": [[str(a.name), str(b.name)] for a, b in pairs]},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))

    def cli(*args):
        return subprocess.run(
            [sys.executable, "-m", "ganrecon.cli", *map(str, args)], capture_output=True, text=True
        )

    assert cli("train", "--config", cfg_path).returncode == 0
    assert (tmp_path / "run" / "checkpoint.pt").is_file()
    res = cli("eval", "--config", cfg_path)
    assert res.returncode == 0
    assert (tmp_path / "run" / "metrics.csv").is_file()
    out_img = tmp_path / "out.png"
    res = cli("infer", "--config", cfg_path, "--input", pairs[0][0], "--output", out_img)
    assert res.returncode == 0
    assert out_img.is_file()
    # bad config exits with a validation code
    assert cli("train", "--config", tmp_path / "missing.json").returncode == 2
