"""Command-line entry point.

    ganrecon <train|eval|infer> --config <file.json> [overrides]

The config document holds the TrainConfig fields plus:

    "data": {"pairs": [[input, target], ...]}
            or {"inputs_dir": ..., "targets_dir": ...}
    "output_dir": where train writes checkpoint.pt and loss_curves.csv
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import PairedDataset
from .evaluate import evaluate
from .io import load_image, save_image
from .train import TrainConfig, infer, train


def _load_doc(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such config: {path}")
    return json.loads(path.read_text())


def _dataset_from(doc: dict, base: Path) -> PairedDataset:
    data = doc.get("data") or {}
    if "pairs" in data:
        return PairedDataset([(base / a, base / b) for a, b in data["pairs"]])
    if "inputs_dir" in data and "targets_dir" in data:
        return PairedDataset.from_directories(base / data["inputs_dir"], base / data["targets_dir"])
    raise ValueError("config 'data' must give 'pairs' or 'inputs_dir'/'targets_dir'")


def _cmd_train(args) -> int:
    doc = _load_doc(args.config)
    base = Path(args.config).parent
    dataset = _dataset_from(doc, base)
    config = TrainConfig.from_dict(doc)
    out_dir = base / doc.get("output_dir", "run")
    ckpt, history = train(config, dataset, out_dir)
    first, last = history[0], history[-1]
    print(f"checkpoint: {ckpt}")
    print(f"generator L1: {first.g_l1:.4f} (epoch 0) -> {last.g_l1:.4f} (epoch {last.epoch})")
    return 0


def _cmd_eval(args) -> int:
    doc = _load_doc(args.config)
    base = Path(args.config).parent
    dataset = _dataset_from(doc, base)
    ckpt = args.checkpoint or str(base / doc.get("output_dir", "run") / "checkpoint.pt")
    out_csv = args.output or str(base / doc.get("output_dir", "run") / "metrics.csv")
    rows = evaluate(ckpt, dataset, out_csv, recon_dir=args.recon_dir)
    mean_row = next(r for r in rows if r["recon"] == "mean")
    print(f"wrote {out_csv}: mean mse={mean_row['mse']:.4e} ssim={mean_row['ssim']:.3f}")
    return 0


def _cmd_infer(args) -> int:
    doc = _load_doc(args.config) if args.config else {}
    base = Path(args.config).parent if args.config else Path.cwd()
    ckpt = args.checkpoint or str(base / doc.get("output_dir", "run") / "checkpoint.pt")
    image = load_image(args.input)
    out = infer(ckpt, image)
    save_image(out, args.output)
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ganrecon")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on the config's dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--output", default=None, help="metrics CSV path")
    p.add_argument("--recon-dir", default=None, help="also save reconstructions here as f32-raw")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("infer", help="run the generator on one image")
    p.add_argument("--config", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=_cmd_infer)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
