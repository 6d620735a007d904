"""Command-line entry point.

    wavesono <mam2sos|simulate|invert|adapt|losses|metrics|pipeline|phantom> [flags]

Exit codes: 0 ok, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .fda import adapt_batch
from .fwi import FwiConfig, invert, make_initial_model
from .imaging import load_image, save_image
from .losses import LossWeights, build_loss_report
from .phantoms import PHANTOM_KINDS, normalize_speed, phantom
from .pipeline import (
    StageError,
    load_pipeline_config,
    load_shot_record,
    report_metrics,
    run_pipeline,
    save_shot_record,
    write_metrics_csv,
)
from .solver import AcousticModel, forward, make_curvilinear_array, make_linear_array, simulate_all_shots
from .tissue import (
    AttenuationParams,
    apply_attenuation,
    default_tissue_table,
    hu_to_sound_speed,
    intensity_to_hu,
    load_tissue_table,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _add_seed(p):
    p.add_argument("--seed", type=int, default=0, help="seed for any randomized choice")


def _cmd_mam2sos(args) -> int:
    img = load_image(args.input)
    table = load_tissue_table(args.table) if args.table else default_tissue_table()
    hu = intensity_to_hu(img, args.hu_min, args.hu_max)
    sos = hu_to_sound_speed(hu, table)
    if args.attenuation_alpha > 0:
        sos = apply_attenuation(sos, AttenuationParams(args.attenuation_alpha, args.pixel_size))
    save_image(sos, args.output)
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    sos = load_image(args.sos)
    model = AcousticModel(speed=sos, grid_spacing=args.dx)
    kwargs = dict(central_frequency=args.frequency, duration=args.duration, dt=args.dt)
    if args.array_kind == "linear":
        geom = make_linear_array(args.num_elements, args.depth_row, sos.shape, **kwargs)
    else:
        h, w = sos.shape
        radius = args.radius if args.radius is not None else min(h, w) / 2.0 - 4.0
        geom = make_curvilinear_array(
            args.num_elements, radius, ((h - 1) / 2.0, (w - 1) / 2.0), args.arc, sos.shape, **kwargs
        )
    geom = geom.with_stable_dt(model)
    record = simulate_all_shots(model, geom)
    save_shot_record(args.output, record, model)
    print(f"wrote {args.output} (shots={record.traces.shape[0]}, nt={record.traces.shape[2]}, dt={record.dt:.3e}s)")
    if args.dump_wavefield:
        out_dir = Path(args.dump_wavefield)
        out_dir.mkdir(parents=True, exist_ok=True)
        _, snaps = forward(model, record.geometry, shot=0, record_wavefield=True, snapshot_stride=args.snapshot_stride)
        for snap in snaps:
            save_image(snap.field, out_dir / f"wavefield_{snap.time_index:05d}.f32")
        print(f"dumped {len(snaps)} wavefield frames to {out_dir}")
    return EXIT_OK


def _cmd_invert(args) -> int:
    record, dx = load_shot_record(args.shots)
    true_sos = load_image(args.true_sos)
    config = FwiConfig(
        num_iterations=args.iterations,
        step_size=args.step_size,
        init_blur_sigma=args.blur_sigma,
        gradient_smoothing_sigma=args.gradient_smoothing,
        model_bounds=(args.speed_min, args.speed_max),
    )
    init = make_initial_model(true_sos, config.init_blur_sigma, dx)
    final, state = invert(record, record.geometry, config, init)
    save_image(final.speed, args.output)
    with open(args.objective_csv, "w", newline="") as fh:
        fh.write("iteration,objective\n")
        for i, phi in enumerate(state.objective_history):
            fh.write(f"{i},{phi!r}\n")
    print(
        f"wrote {args.output}; objective {state.objective_history[0]:.4e} -> {state.objective_history[-1]:.4e}"
    )
    return EXIT_OK


def _cmd_adapt(args) -> int:
    src_dir = Path(args.source_dir)
    tgt_dir = Path(args.target_dir)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sources = sorted(p for p in src_dir.iterdir() if p.suffix.lower() in (".png", ".pgm", ".f32"))
    targets = sorted(p for p in tgt_dir.iterdir() if p.suffix.lower() in (".png", ".pgm", ".f32"))
    if not sources:
        raise ValidationError(f"no source images in {src_dir}")
    if not targets:
        raise ValidationError(f"no target images in {tgt_dir}")
    src_grids = [load_image(p) for p in sources]
    tgt_grids = [load_image(p) for p in targets]
    adapted, pair_idx = adapt_batch(src_grids, tgt_grids, args.beta, args.mode, args.pairing, args.seed)
    records = []
    for src_path, grid, idx in zip(sources, adapted, pair_idx):
        out_path = out_dir / f"{src_path.stem}_beta{args.beta:g}{src_path.suffix}"
        save_image(grid, out_path)
        records.append(
            {
                "source": str(src_path),
                "target": str(targets[idx]),
                "beta": args.beta,
                "seed": args.seed,
                "output": str(out_path),
            }
        )
    manifest = out_dir / "fda_manifest.json"
    manifest.write_text(json.dumps(records, indent=2, sort_keys=True) + "\n")
    print(f"adapted {len(records)} images -> {out_dir}")
    return EXIT_OK


def _cmd_losses(args) -> int:
    a = load_image(args.image_a)
    b = load_image(args.image_b)
    try:
        w = [float(v) for v in args.weights.split(",")]
        if len(w) != 3:
            raise ValueError
    except ValueError:
        raise ValidationError(f"--weights must be three comma-separated numbers, got {args.weights!r}") from None
    report = build_loss_report(a, b, LossWeights(*w))
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
        print(f"wrote {args.output}")
    else:
        print(text)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    pairs = []
    for spec in args.pairs:
        parts = spec.split(":")
        if len(parts) != 2:
            raise ValidationError(f"pair must be recon:truth, got {spec!r}")
        pairs.append((parts[0], parts[1]))
    rows = report_metrics(pairs, args.dynamic_range)
    write_metrics_csv(rows, args.output)
    print(f"wrote {args.output} ({len(rows) - 2} pairs)")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = load_pipeline_config(args.config)
    manifest = run_pipeline(config)
    print(f"pipeline complete: {len(manifest['stages'])} stages, manifest at {config.output_dir / 'run_manifest.json'}")
    return EXIT_OK


def _cmd_phantom(args) -> int:
    speed = phantom(args.kind, args.size, args.seed)
    if Path(args.output).suffix in (".png", ".pgm"):
        save_image(normalize_speed(speed), args.output)
    else:
        save_image(speed, args.output)
    print(f"wrote {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavesono", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wavesono {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mam2sos", help="intensity image -> speed-of-sound map")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="f32-raw speed map")
    p.add_argument("--table", default=None, help="tissue table JSON (default: bundled table)")
    p.add_argument("--hu-min", type=float, default=-100.0)
    p.add_argument("--hu-max", type=float, default=80.0)
    p.add_argument("--attenuation-alpha", type=float, default=0.0, help="depth decay 1/m")
    p.add_argument("--pixel-size", type=float, default=5e-4)
    p.set_defaults(fn=_cmd_mam2sos)

    p = sub.add_parser("simulate", help="speed map -> shot record")
    p.add_argument("--sos", required=True, help="f32-raw speed map")
    p.add_argument("--output", required=True, help="shot record .npz")
    p.add_argument("--dx", type=float, default=5e-4)
    p.add_argument("--array-kind", choices=("linear", "curvilinear"), default="curvilinear")
    p.add_argument("--num-elements", type=int, default=16)
    p.add_argument("--frequency", type=float, default=3e5)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--depth-row", type=int, default=3)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--arc", type=float, default=2 * np.pi)
    p.add_argument("--dump-wavefield", default=None, help="directory for f32-raw field frames")
    p.add_argument("--snapshot-stride", type=int, default=5)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("invert", help="shot record -> reconstructed speed map")
    p.add_argument("--shots", required=True)
    p.add_argument("--true-sos", required=True, help="reference map; blurred to build the start model")
    p.add_argument("--output", required=True, help="f32-raw reconstructed map")
    p.add_argument("--objective-csv", required=True)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--step-size", type=float, default=0.01)
    p.add_argument("--blur-sigma", type=float, default=8.0)
    p.add_argument("--gradient-smoothing", type=float, default=1.0)
    p.add_argument("--speed-min", type=float, default=1400.0)
    p.add_argument("--speed-max", type=float, default=1700.0)
    p.set_defaults(fn=_cmd_invert)

    p = sub.add_parser("adapt", help="swap high-frequency spectra toward target images")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--mode", choices=("amplitude", "complex"), default="amplitude")
    p.add_argument("--source-dir", required=True)
    p.add_argument("--target-dir", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--pairing", choices=("random-seeded", "index"), default="random-seeded")
    _add_seed(p)
    p.set_defaults(fn=_cmd_adapt)

    p = sub.add_parser("losses", help="loss report for an image pair")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--weights", default="0,10,1", help="perceptual,l1,adversarial")
    p.add_argument("--output", default=None, help="write JSON here instead of stdout")
    p.set_defaults(fn=_cmd_losses)

    p = sub.add_parser("metrics", help="MSE/PSNR/SSIM table for image pairs")
    p.add_argument("--pairs", nargs="+", required=True, metavar="RECON:TRUTH")
    p.add_argument("--output", required=True, help="CSV path")
    p.add_argument("--dynamic-range", type=float, default=1.0)
    p.set_defaults(fn=_cmd_metrics)

    p = sub.add_parser("pipeline", help="run the staged pipeline from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_pipeline)

    p = sub.add_parser("phantom", help="generate a synthetic phantom")
    p.add_argument("--kind", choices=PHANTOM_KINDS, default="two-inclusion")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--output", required=True, help=".f32 keeps m/s; .png/.pgm normalizes to [0,1]")
    _add_seed(p)
    p.set_defaults(fn=_cmd_phantom)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        cause = exc.cause
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(cause, NumericalError) else EXIT_VALIDATION
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
