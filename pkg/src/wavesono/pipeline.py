"""Config-driven pipeline: intensity image -> speed map -> shot records ->
reconstructed image -> spectrally adapted image -> metrics report.

Stages communicate through files only, so downstream consumers (including
the companion GAN trainer) never need to link against this package. All
artifacts are written deterministically: rerunning a config with the same
seed reproduces bit-identical bytes for every stage output.

Config document (JSON). Unknown keys are rejected; "notes" fields are
ignored for hashing:

    {
      "seed": 0,
      "output_dir": "out",
      "inputs": {"images": [...]} or {"phantom": {"kind", "size", "count"}},
      "stages": {"mam2sos": true, "simulate": true, "invert": true,
                 "adapt": true, "metrics": true},
      "tissue": {"table": null, "hu_min": -100.0, "hu_max": 80.0},
      "attenuation": {"alpha_ref": 0.0, "pixel_size": 5e-4},
      "transducer": {"array_kind": "curvilinear", "num_elements": 16,
                     "frequency_hz": 3e5, "duration_s": null, "dt_s": null,
                     "depth_row": 3, "radius_cells": null, "arc_rad": 6.2832},
      "solver": {"dx_m": 5e-4, "wavefield_dump": false, "snapshot_stride": 5},
      "fwi": {"num_iterations": 10, "step_size": 0.01, "init_blur_sigma": 8.0,
              "gradient_smoothing_sigma": 1.0, "model_bounds": [1400, 1700]},
      "fda": {"betas": [0.05], "mode": "amplitude", "pairing": "random-seeded",
              "targets_dir": null},
      "metrics": {"dynamic_range": 1.0}
    }
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib import format as npformat

from . import __version__
from .errors import ValidationError
from .fda import spectral_swap
from .fwi import FwiConfig, invert, make_initial_model
from .imaging import load_image, metric_report, save_image
from .phantoms import normalize_speed, phantom
from .solver import (
    CFL_FACTOR,
    AcousticModel,
    AcquisitionGeometry,
    forward,
    make_curvilinear_array,
    make_linear_array,
    simulate_all_shots,
)
from .tissue import (
    AttenuationParams,
    apply_attenuation,
    default_tissue_table,
    hu_to_sound_speed,
    intensity_to_hu,
    load_tissue_table,
)

STAGES = ("mam2sos", "simulate", "invert", "adapt", "metrics")
_IGNORED_HASH_KEYS = ("notes",)

_DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "inputs": {},
    "stages": {name: True for name in STAGES},
    "tissue": {"table": None, "hu_min": -100.0, "hu_max": 80.0},
    "attenuation": {"alpha_ref": 0.0, "pixel_size": 5e-4},
    "transducer": {
        "array_kind": "curvilinear",
        "num_elements": 16,
        "frequency_hz": 3.0e5,
        "duration_s": None,
        "dt_s": None,
        "depth_row": 3,
        "radius_cells": None,
        "arc_rad": 2.0 * math.pi,
    },
    "solver": {"dx_m": 5e-4, "wavefield_dump": False, "snapshot_stride": 5},
    "fwi": {
        "num_iterations": 10,
        "step_size": 0.01,
        "init_blur_sigma": 8.0,
        "gradient_smoothing_sigma": 1.0,
        "model_bounds": [1400.0, 1700.0],
    },
    "fda": {"betas": [0.05], "mode": "amplitude", "pairing": "random-seeded", "targets_dir": None},
    "metrics": {"dynamic_range": 1.0},
}


def _merge_defaults(doc: dict, defaults: dict, path: str = "") -> dict:
    out = {}
    for key, default in defaults.items():
        if key in doc:
            given = doc[key]
            if isinstance(default, dict) and key != "inputs":
                if not isinstance(given, dict):
                    raise ValidationError(f"config field {path}{key} must be an object")
                out[key] = _merge_defaults(given, default, f"{path}{key}.")
            else:
                out[key] = given
        else:
            out[key] = json.loads(json.dumps(default))  # deep copy
    unknown = set(doc) - set(defaults) - {"notes"}
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(path + k for k in unknown)}")
    return out


@dataclass(frozen=True)
class PipelineConfig:
    doc: dict
    base_dir: Path = field(default_factory=Path)

    def __getitem__(self, key):
        return self.doc[key]

    @property
    def output_dir(self) -> Path:
        return self.base_dir / self.doc["output_dir"]

    def stage_enabled(self, name: str) -> bool:
        return bool(self.doc["stages"].get(name, False))


def load_pipeline_config(source, base_dir=None) -> PipelineConfig:
    """Parse and validate a pipeline config from a dict or JSON file path."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise ValidationError(f"no such config file: {path}")
        doc = json.loads(path.read_text())
        base = Path(base_dir) if base_dir is not None else path.parent
    else:
        doc = dict(source)
        base = Path(base_dir) if base_dir is not None else Path.cwd()
    doc = _merge_defaults(doc, _DEFAULTS)
    for name, enabled in doc["stages"].items():
        if name not in STAGES:
            raise ValidationError(f"unknown stage {name!r}")
        if not isinstance(enabled, bool):
            raise ValidationError(f"stage toggle {name!r} must be boolean")
    for beta in doc["fda"]["betas"]:
        if not 0.0 <= float(beta) <= 1.0:
            raise ValidationError(f"fda beta {beta} outside [0, 1]")
    if doc["inputs"] and "images" in doc["inputs"] and "phantom" in doc["inputs"]:
        raise ValidationError("inputs: give either 'images' or 'phantom', not both")
    return PipelineConfig(doc=doc, base_dir=base)


def config_hash(config: PipelineConfig) -> str:
    """sha256 of the canonical config document (sorted keys, notes dropped)."""

    def strip(node):
        if isinstance(node, dict):
            return {k: strip(v) for k, v in sorted(node.items()) if k not in _IGNORED_HASH_KEYS}
        if isinstance(node, list):
            return [strip(v) for v in node]
        return node

    canonical = json.dumps(strip(config.doc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def save_arrays(path, **arrays) -> None:
    """Deterministic .npz writer (fixed zip timestamps, sorted members)."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            npformat.write_array(buf, np.asarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            zf.writestr(info, buf.getvalue())


def load_arrays(path) -> dict:
    with np.load(path, allow_pickle=False) as npz:
        return {k: npz[k] for k in npz.files}


def save_shot_record(path, record, model: AcousticModel) -> None:
    geom = record.geometry
    save_arrays(
        path,
        traces=record.traces,
        dt=np.float64(record.dt),
        duration=np.float64(geom.duration),
        positions=np.asarray(geom.element_positions, dtype=np.int64),
        source_indices=np.asarray(geom.source_indices, dtype=np.int64),
        frequency=np.float64(geom.central_frequency),
        grid_shape=np.asarray(geom.grid_shape, dtype=np.int64),
        dx=np.float64(model.grid_spacing),
        array_kind=np.array(geom.array_kind),
    )


def load_shot_record(path):
    """Returns (ShotRecord, dx). The geometry is fully rebuilt from the file."""
    from .solver import ShotRecord

    raw = load_arrays(path)
    geom = AcquisitionGeometry(
        array_kind=str(raw["array_kind"]),
        element_positions=tuple((int(r), int(c)) for r, c in raw["positions"]),
        grid_shape=tuple(int(v) for v in raw["grid_shape"]),
        source_indices=tuple(int(v) for v in raw["source_indices"]),
        central_frequency=float(raw["frequency"]),
        duration=float(raw["duration"]),
        dt=float(raw["dt"]),
    )
    record = ShotRecord(traces=np.asarray(raw["traces"], dtype=np.float64), dt=float(raw["dt"]), geometry=geom)
    return record, float(raw["dx"])


def report_metrics(pairs, dynamic_range: float = 1.0) -> list:
    """Per-pair MSE/PSNR/SSIM rows plus mean and std summary rows.

    `pairs` is a list of (recon_path, truth_path); f32-raw images holding
    speed maps are normalized into [0,1] before comparison.
    """
    rows = []
    for recon_path, truth_path in pairs:
        a = _load_comparable(recon_path)
        b = _load_comparable(truth_path)
        rep = metric_report(a, b, dynamic_range)
        rows.append({"recon": str(recon_path), "truth": str(truth_path), **rep})
    if not rows:
        raise ValidationError("no metric pairs given")
    with np.errstate(invalid="ignore"):  # std of an all-inf PSNR column is nan
        for name, fn in (("mean", np.mean), ("std", np.std)):
            rows.append(
                {
                    "recon": name,
                    "truth": "",
                    "mse": float(fn([r["mse"] for r in rows if r["truth"]])),
                    "psnr": float(fn([r["psnr"] for r in rows if r["truth"]])),
                    "ssim": float(fn([r["ssim"] for r in rows if r["truth"]])),
                }
            )
    return rows


def _load_comparable(path) -> np.ndarray:
    img = load_image(path)
    if Path(path).suffix in (".f32", ".raw") and img.max() > 2.0:
        # speed map in m/s: bring into [0,1] for the intensity metrics
        img = normalize_speed(img)
    return img


def write_metrics_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["recon", "truth", "mse", "psnr", "ssim"])
        for r in rows:
            writer.writerow([r["recon"], r["truth"], repr(r["mse"]), repr(r["psnr"]), repr(r["ssim"])])


def read_metrics_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(
                {
                    "recon": rec["recon"],
                    "truth": rec["truth"],
                    "mse": float(rec["mse"]),
                    "psnr": float(rec["psnr"]),
                    "ssim": float(rec["ssim"]),
                }
            )
    return rows


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class _Run:
    """Mutable state threaded through the stages of one pipeline run."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = config.output_dir
        self.stems: list = []
        self.emitted: list = []   # files written by the stage currently running
        self.manifest = {"config_hash": config_hash(config), "version": __version__, "stages": []}

    def dir_for(self, stage: str) -> Path:
        d = self.out / stage
        d.mkdir(parents=True, exist_ok=True)
        return d

    def emit(self, path) -> Path:
        self.emitted.append(Path(path))
        return Path(path)

    def record_stage(self, name: str, inputs: list, outputs: list, wall: float) -> None:
        self.manifest["stages"].append(
            {
                "name": name,
                "inputs": sorted(str(p) for p in inputs),
                "outputs": [{"path": str(p), "sha256": _sha256(Path(p))} for p in sorted(outputs, key=str)],
                "wall_seconds": wall,
            }
        )


def _resolve_inputs(run: _Run) -> list:
    """Materialize input intensity images; returns their paths."""
    cfg = run.config
    inputs = cfg["inputs"]
    paths = []
    if "images" in inputs:
        for p in inputs["images"]:
            path = cfg.base_dir / p
            if not path.is_file():
                raise ValidationError(f"input image does not exist: {path}")
            paths.append(path)
    elif "phantom" in inputs:
        spec = inputs["phantom"]
        kind = spec.get("kind", "breast-like")
        size = int(spec.get("size", 64))
        count = int(spec.get("count", 1))
        d = run.dir_for("inputs")
        for k in range(count):
            speed = phantom(kind, size, seed=int(cfg["seed"]) + k)
            path = run.emit(d / f"phantom_{k:02d}.png")
            save_image(normalize_speed(speed), path)
            paths.append(path)
    else:
        raise ValidationError("config inputs must name 'images' or a 'phantom' recipe")
    run.stems = [Path(p).stem for p in paths]
    return paths


def _geometry_for(cfg: PipelineConfig, grid_shape, model: AcousticModel) -> AcquisitionGeometry:
    t = cfg["transducer"]
    kwargs = {
        "central_frequency": float(t["frequency_hz"]),
        "duration": t["duration_s"],
        "dt": t["dt_s"],
    }
    if t["array_kind"] == "linear":
        geom = make_linear_array(int(t["num_elements"]), int(t["depth_row"]), grid_shape, **kwargs)
    else:
        h, w = grid_shape
        radius = t["radius_cells"]
        radius = float(radius) if radius is not None else min(h, w) / 2.0 - 4.0
        geom = make_curvilinear_array(
            int(t["num_elements"]),
            radius,
            ((h - 1) / 2.0, (w - 1) / 2.0),
            float(t["arc_rad"]),
            grid_shape,
            **kwargs,
        )
    # stay stable both for this model and for the fastest speed the FWI
    # stage may reach, so the inverse crime stays simulable
    bound_model = geom.with_stable_dt(model).dt
    hi = float(cfg["fwi"]["model_bounds"][1])
    bound_fwi = CFL_FACTOR * model.grid_spacing / (hi * math.sqrt(2.0))
    dt = min(bound_model, bound_fwi)
    from dataclasses import replace

    return replace(geom, dt=dt)


def _stage_mam2sos(run: _Run, input_paths: list) -> None:
    cfg = run.config
    tcfg = cfg["tissue"]
    table = load_tissue_table(cfg.base_dir / tcfg["table"]) if tcfg["table"] else default_tissue_table()
    d = run.dir_for("mam2sos")
    for path, stem in zip(input_paths, run.stems):
        img = load_image(path)
        hu = intensity_to_hu(img, float(tcfg["hu_min"]), float(tcfg["hu_max"]))
        sos = hu_to_sound_speed(hu, table)
        save_image(sos, run.emit(d / f"{stem}_sos.f32"))


def _stage_simulate(run: _Run) -> None:
    cfg = run.config
    dx = float(cfg["solver"]["dx_m"])
    d = run.dir_for("simulate")
    for stem in run.stems:
        sos = load_image(run.out / "mam2sos" / f"{stem}_sos.f32")
        model = AcousticModel(speed=sos, grid_spacing=dx)
        geom = _geometry_for(cfg, sos.shape, model)
        record = simulate_all_shots(model, geom)
        save_shot_record(run.emit(d / f"{stem}_shots.npz"), record, model)
        if cfg["solver"]["wavefield_dump"]:
            stride = int(cfg["solver"]["snapshot_stride"])
            _, snaps = forward(model, record.geometry, shot=0, record_wavefield=True, snapshot_stride=stride)
            for snap in snaps:
                save_image(snap.field, run.emit(d / f"{stem}_wavefield_{snap.time_index:05d}.f32"))


def _stage_invert(run: _Run) -> None:
    cfg = run.config
    f = cfg["fwi"]
    fwi_config = FwiConfig(
        num_iterations=int(f["num_iterations"]),
        step_size=float(f["step_size"]),
        init_blur_sigma=float(f["init_blur_sigma"]),
        gradient_smoothing_sigma=float(f["gradient_smoothing_sigma"]),
        model_bounds=tuple(float(v) for v in f["model_bounds"]),
    )
    att = cfg["attenuation"]
    d = run.dir_for("invert")
    for stem in run.stems:
        record, dx = load_shot_record(run.out / "simulate" / f"{stem}_shots.npz")
        true_sos = load_image(run.out / "mam2sos" / f"{stem}_sos.f32")
        init = make_initial_model(true_sos, fwi_config.init_blur_sigma, dx)
        final, state = invert(record, record.geometry, fwi_config, init)
        save_image(final.speed, run.emit(d / f"{stem}_recon_sos.f32"))
        with open(run.emit(d / f"{stem}_objective.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "objective"])
            for i, phi in enumerate(state.objective_history):
                writer.writerow([i, repr(phi)])
        us = normalize_speed(final.speed)
        if float(att["alpha_ref"]) > 0:
            us = apply_attenuation(us, AttenuationParams(float(att["alpha_ref"]), float(att["pixel_size"])))
        save_image(us, run.emit(d / f"{stem}_us.png"))


def _stage_adapt(run: _Run) -> None:
    cfg = run.config
    fda_cfg = cfg["fda"]
    if not fda_cfg["targets_dir"]:
        raise ValidationError("fda.targets_dir must point to a directory of target images")
    tdir = cfg.base_dir / fda_cfg["targets_dir"]
    targets = sorted(p for p in tdir.iterdir() if p.suffix.lower() in (".png", ".pgm", ".f32"))
    if not targets:
        raise ValidationError(f"no target images found in {tdir}")
    d = run.dir_for("adapt")
    rng = np.random.default_rng(int(cfg["seed"]))
    records = []
    for stem in run.stems:
        src = load_image(run.out / "invert" / f"{stem}_us.png")
        for beta in fda_cfg["betas"]:
            tgt_idx = int(rng.integers(0, len(targets))) if fda_cfg["pairing"] == "random-seeded" else 0
            tgt = load_image(targets[tgt_idx])
            if tgt.shape != src.shape:
                raise ValidationError(
                    f"target {targets[tgt_idx]} shape {tgt.shape} does not match source {src.shape}"
                )
            out = spectral_swap(src, tgt, float(beta), fda_cfg["mode"])
            out_path = run.emit(d / f"{stem}_us_beta{float(beta):g}.png")
            save_image(out, out_path)
            records.append(
                {
                    "source": str(run.out / "invert" / f"{stem}_us.png"),
                    "target": str(targets[tgt_idx]),
                    "beta": float(beta),
                    "seed": int(cfg["seed"]),
                    "output": str(out_path),
                }
            )
    run.emit(d / "fda_manifest.json").write_text(json.dumps(records, indent=2, sort_keys=True) + "\n")


def _stage_metrics(run: _Run) -> None:
    cfg = run.config
    pairs = []
    for stem in run.stems:
        pairs.append((run.out / "invert" / f"{stem}_recon_sos.f32", run.out / "mam2sos" / f"{stem}_sos.f32"))
        for beta in cfg["fda"]["betas"]:
            pairs.append(
                (run.out / "adapt" / f"{stem}_us_beta{float(beta):g}.png", run.out / "invert" / f"{stem}_us.png")
            )
    rows = report_metrics(pairs, float(cfg["metrics"]["dynamic_range"]))
    d = run.dir_for("metrics")
    write_metrics_csv(rows, run.emit(d / "metrics.csv"))


_STAGE_REQUIREMENTS = {
    "simulate": lambda run, stem: [run.out / "mam2sos" / f"{stem}_sos.f32"],
    "invert": lambda run, stem: [
        run.out / "simulate" / f"{stem}_shots.npz",
        run.out / "mam2sos" / f"{stem}_sos.f32",
    ],
    "adapt": lambda run, stem: [run.out / "invert" / f"{stem}_us.png"],
    "metrics": lambda run, stem: [
        run.out / "invert" / f"{stem}_recon_sos.f32",
        run.out / "mam2sos" / f"{stem}_sos.f32",
        run.out / "invert" / f"{stem}_us.png",
    ],
}


def _validate_stage_plan(run: _Run) -> None:
    """Before any compute: when a stage is off, whatever later enabled stages
    need from it must already exist on disk."""
    cfg = run.config
    produced = {name: cfg.stage_enabled(name) for name in STAGES}
    for name in STAGES:
        if not cfg.stage_enabled(name) or name == "mam2sos":
            continue
        for stem in run.stems:
            for req in _STAGE_REQUIREMENTS[name](run, stem):
                producer = Path(req).parent.name
                if produced.get(producer, False):
                    continue
                if not Path(req).exists():
                    raise ValidationError(
                        f"stage {name!r} needs {req} but stage {producer!r} is disabled "
                        "and the file does not exist"
                    )
        if name == "metrics":
            for stem in run.stems:
                for beta in cfg["fda"]["betas"]:
                    req = run.out / "adapt" / f"{stem}_us_beta{float(beta):g}.png"
                    if not cfg.stage_enabled("adapt") and not req.exists():
                        raise ValidationError(
                            f"stage 'metrics' needs {req} but stage 'adapt' is disabled "
                            "and the file does not exist"
                        )


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute the enabled stages in order; returns the run manifest dict.

    The manifest is also written to <output_dir>/run_manifest.json. A stage
    failure renames the files that stage already produced to '<name>.partial'
    and raises StageError naming the stage.
    """
    run = _Run(config)
    run.out.mkdir(parents=True, exist_ok=True)
    input_paths = _resolve_inputs(run)
    _validate_stage_plan(run)

    stage_fns = {
        "mam2sos": lambda: _stage_mam2sos(run, input_paths),
        "simulate": lambda: _stage_simulate(run),
        "invert": lambda: _stage_invert(run),
        "adapt": lambda: _stage_adapt(run),
        "metrics": lambda: _stage_metrics(run),
    }
    stage_inputs = {
        "mam2sos": [str(p) for p in input_paths],
        "simulate": [str(run.out / "mam2sos")],
        "invert": [str(run.out / "simulate"), str(run.out / "mam2sos")],
        "adapt": [str(run.out / "invert")],
        "metrics": [str(run.out / "invert"), str(run.out / "adapt"), str(run.out / "mam2sos")],
    }

    generated_inputs = list(run.emitted)  # phantom inputs materialized above
    for name in STAGES:
        if not config.stage_enabled(name):
            continue
        run.emitted = []
        t0 = time.perf_counter()
        try:
            stage_fns[name]()
        except Exception as exc:
            for p in run.emitted:
                if p.is_file():
                    p.rename(p.with_name(p.name + ".partial"))
            raise StageError(name, exc) from exc
        wall = time.perf_counter() - t0
        outputs = list(run.emitted)
        if name == "mam2sos":
            outputs.extend(generated_inputs)
        run.record_stage(name, stage_inputs[name], outputs, wall)

    manifest_path = run.out / "run_manifest.json"
    manifest_path.write_text(json.dumps(run.manifest, indent=2, sort_keys=True) + "\n")
    return run.manifest
