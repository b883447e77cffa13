"""``radarcube`` command-line front end.

Every subcommand reads and writes files only. Exit codes: 0 ok, 2 usage or
schema error, 3 domain error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import augmentation, complexity, evaluation, fusion_loss, pipeline, render
from .errors import ConfigError, ContainerError, DomainError, ShapeError
from .radar_model import CLASSES, RadarConfig, Scene, synthesize_scene
from .rcube import read_rcube, write_rcube

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4

CONVENTIONS = """\
conventions:
  units are SI (m, m/s, rad, Hz, s); JSON keys ending in _deg take degrees
  (e.g. "theta_deg" for a target, "dtheta_deg" for translate_angle).
  range bin 0 is the radar; velocity and angle axes are zero-centred, with
  zero at bin M//2. positive velocity is receding, positive azimuth is to
  the right of boresight.

tensor layouts (RCUBE files):
  raw      [frame, sample, chirp, rx]            complex
  cube     [frame, range, velocity, angle]       complex
  ra       [frame, range, angle]                 complex (one loop of chirps)
  rv / va  [frame, range, velocity] / [frame, velocity, angle]  power
  labels   [frame, range, angle, class]          real, classes pedestrian, cyclist, car
"""


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _config_doc(args, scene_doc: dict | None = None) -> dict:
    doc: dict = {}
    if scene_doc and isinstance(scene_doc.get("config"), dict):
        doc.update(scene_doc["config"])
    if getattr(args, "config", None):
        doc.update(_read_json(args.config))
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        doc[key] = _parse_value(value)
    return doc


def _radar(doc: dict) -> RadarConfig:
    return RadarConfig.from_dict(doc)


def _options(doc: dict) -> pipeline.ProcessingOptions:
    proc = dict(doc.get("processing", {}))
    for key in ("cfar", "window"):
        if key in doc:
            proc.setdefault(key, doc[key])
    return pipeline.ProcessingOptions.from_dict(proc)


def _load_scene(args) -> tuple[Scene, RadarConfig, dict]:
    scene_doc = _read_json(args.scene)
    doc = _config_doc(args, scene_doc)
    cfg = _radar(doc)
    scene = Scene.from_dict(scene_doc, cfg)
    scene.validate(cfg)
    return scene, cfg, doc


def _tensor(path: str, rank: int | tuple[int, ...]) -> np.ndarray:
    data = read_rcube(path).data
    ranks = (rank,) if isinstance(rank, int) else rank
    if data.ndim not in ranks:
        raise ShapeError(f"{path}: expected rank {ranks}, got shape {data.shape}")
    return data


# -- subcommands -------------------------------------------------------------

def cmd_simulate(args) -> int:
    scene, cfg, _ = _load_scene(args)
    raw = synthesize_scene(cfg, scene, noise_std=args.noise, seed=args.seed)
    write_rcube(args.out, raw, "frame,sample,chirp,rx")
    return EXIT_OK


def cmd_process(args) -> int:
    doc = _config_doc(args)
    cfg, options = _radar(doc), _options(doc)
    raw = _tensor(args.input, 4).astype(np.complex128)
    expect = (cfg.samples_per_chirp, cfg.chirps_per_frame, cfg.num_rx_physical)
    if raw.shape[1:] != expect:
        raise ShapeError(f"raw frames {raw.shape[1:]} do not match the config {expect}")
    views = pipeline.process_raw_sequence(raw, cfg, options, args.chirp_pick, keep_cubes=True,
                                          threads=args.threads)
    write_rcube(args.out, views.cubes, "frame,range,velocity,angle")
    for name, tag in (("ra", "frame,range,angle"), ("rv", "frame,range,velocity"), ("va", "frame,velocity,angle")):
        path = getattr(args, name)
        if path:
            write_rcube(path, getattr(views, name), tag)
    return EXIT_OK


def _view_of_cubes(cubes: np.ndarray, view: str) -> np.ndarray:
    power = np.abs(cubes) ** 2
    axis = {"rv": 3, "va": 1, "ra": 2}[view]
    return power.sum(axis=axis)


def cmd_slice(args) -> int:
    cubes = _tensor(args.input, 4)
    # the complex single-loop RA map needs the range profile; from a cube RA is power over velocity
    tag = {"ra": "frame,range,angle", "rv": "frame,range,velocity", "va": "frame,velocity,angle"}[args.view]
    write_rcube(args.out, _view_of_cubes(cubes, args.view), tag)
    return EXIT_OK


def cmd_augment(args) -> int:
    scene, cfg, _ = _load_scene(args)
    cubes = _tensor(args.input, 4).astype(np.complex128)
    if cubes.shape[0] > scene.num_frames:
        raise ShapeError(f"{cubes.shape[0]} cube frames but the scene has {scene.num_frames}")
    recipe = _read_json(args.recipe)
    ops_doc = recipe.get("ops") if isinstance(recipe, dict) else recipe
    if not isinstance(ops_doc, list):
        raise ConfigError('recipe must be a list of ops or {"ops": [...]}')
    ops = [augmentation.AugmentOp.from_dict(o) for o in ops_doc]
    others = {}
    for op in ops:
        if op.variant == "mix":
            key = op.params.get("other")
            if not isinstance(key, str):
                raise ConfigError('mix needs "other": path to an RCUBE cube file')
            others[key] = _tensor(key, 4)
    gain = augmentation.GainProfile.cos2() if args.gain == "cos2" else augmentation.GainProfile.uniform()
    rng = np.random.default_rng(args.seed)
    out = np.empty_like(cubes)
    frames = []
    for k in range(cubes.shape[0]):
        frame_others = {key: val[k] for key, val in others.items()}
        out[k], moved = augmentation.apply_recipe(cubes[k], cfg, ops, scene.frames[k], rng, frame_others, gain)
        frames.append(moved)
    write_rcube(args.out, out, "frame,range,velocity,angle")
    if args.scene_out:
        Path(args.scene_out).write_text(json.dumps(Scene(frames).to_dict(), indent=1) + "\n")
    return EXIT_OK


def _cube_centers(cubes: np.ndarray, cls, rel_threshold: float) -> list[fusion_loss.Center]:
    ra = _view_of_cubes(cubes, "ra")
    peak = ra.reshape(ra.shape[0], -1).max(axis=1)
    norm = ra / np.where(peak > 0, peak, 1.0)[:, None, None]
    dets = evaluation.extract_detections(norm[..., None], rel_threshold)
    return [fusion_loss.Center(d.frame, d.range_bin, d.angle_bin, cls) for d in dets]


def cmd_label(args) -> int:
    if bool(args.scene) == bool(args.from_cube):
        raise ConfigError("label needs exactly one of --scene or --from-cube")
    if args.scene:
        scene, cfg, _ = _load_scene(args)
        centers = fusion_loss.centers_from_scene(cfg, scene)
        shape = (scene.num_frames, cfg.range_fft_points, cfg.angle_fft_points)
    else:
        cubes = _tensor(args.from_cube, 4)
        centers = _cube_centers(cubes, args.cls, args.peak_threshold)
        shape = (cubes.shape[0], cubes.shape[1], cubes.shape[3])
    sigma = None if args.sigma is None else {c: args.sigma for c in CLASSES}
    labels = fusion_loss.rasterize_labels(centers, shape, sigma=sigma)
    write_rcube(args.out, labels, "frame,range,angle,class")
    return EXIT_OK


def cmd_loss(args) -> int:
    pred = _tensor(args.pred, (3, 4))
    truth = _tensor(args.truth, (3, 4))
    params = fusion_loss.LossParams(args.alpha, args.beta, args.kappa, args.gamma)
    if args.pred_no_ra:
        value = fusion_loss.combined_loss(pred, _tensor(args.pred_no_ra, (3, 4)), truth, params)
    else:
        value = fusion_loss.focal_loss(pred, truth, params)
    print(repr(float(value)))
    return EXIT_OK


def cmd_eval(args) -> int:
    scene, cfg, _ = _load_scene(args)
    pred = _tensor(args.pred, 4)
    truth = fusion_loss.centers_from_scene(cfg, scene)
    result = evaluation.evaluate(pred, truth, args.threshold)
    doc = evaluation.metrics_document([result])
    if args.format == "csv":
        sys.stdout.write(evaluation.metrics_csv(doc))
    else:
        print(json.dumps(doc, indent=1))
    return EXIT_OK


def cmd_flops(args) -> int:
    model = complexity.load_model(args.model)
    if args.compare:
        models = [model] + [complexity.load_model(m) for m in args.compare]
        table = complexity.compare(models)
        print(json.dumps({f"{a}/{b}": v for (a, b), v in table.items()}, indent=1))
        return EXIT_OK
    print(complexity.flops(model))
    if args.space:
        params, cells = complexity.space(model)
        print(params)
        print(cells)
    return EXIT_OK


def cmd_render(args) -> int:
    data = _tensor(args.input, (3, 4))
    if data.ndim == 4:
        if args.view is None:
            raise ConfigError("rendering a cube needs --view ra|rv|va")
        data = _view_of_cubes(data, args.view)
        image_is_power = True
    else:
        image_is_power = not np.iscomplexobj(data)
    if not 0 <= args.frame < data.shape[0]:
        raise DomainError(f"frame {args.frame} outside [0, {data.shape[0]})")
    image = data[args.frame]
    # views stored as power are rendered by magnitude so the dB scale stays 10 log10(power)
    image = np.sqrt(np.abs(image)) if image_is_power else image
    render.write_ppm(args.out, image, args.colormap, args.floor_db)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="radar config JSON (fields of RadarConfig plus optional processing block)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config field (JSON value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarcube",
        description="FMCW radar cube synthesis, processing, augmentation, labels, loss, evaluation and FLOPs.",
        epilog=CONVENTIONS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize raw ADC frames for a scene")
    p.add_argument("--scene", required=True)
    _add_config(p)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="per-sample complex noise std")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("process", help="range/velocity FFT, CFAR, Doppler compensation, angle FFT")
    p.add_argument("--in", dest="input", required=True)
    _add_config(p)
    p.add_argument("--out", required=True, help="RVA cubes")
    p.add_argument("--ra", help="also write complex RA views")
    p.add_argument("--rv", help="also write RV power views")
    p.add_argument("--va", help="also write VA power views")
    p.add_argument("--chirp-pick", type=int, default=0, help="TDM loop used for the RA view")
    p.add_argument("--threads", type=int, default=1, help="frames processed in parallel")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("slice", help="RA/RV/VA power views from RVA cubes")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--view", choices=("ra", "rv", "va"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("augment", help="apply an augmentation recipe to RVA cubes")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--scene", required=True, help="scene the cubes were made from")
    _add_config(p)
    p.add_argument("--recipe", required=True,
                   help='JSON list of ops, e.g. [{"op": "translate_range", "dr": 2.0}]')
    p.add_argument("--out", required=True)
    p.add_argument("--scene-out", help="write the moved targets as a scene")
    p.add_argument("--gain", choices=("uniform", "cos2"), default="uniform")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("label", help="rasterize centre-point labels")
    p.add_argument("--scene")
    p.add_argument("--from-cube", help="label the RA peaks of processed cubes instead")
    _add_config(p)
    p.add_argument("--class", dest="cls", choices=[c.value for c in CLASSES], default="pedestrian",
                   help="class given to peaks found with --from-cube")
    p.add_argument("--peak-threshold", type=float, default=0.5,
                   help="peak level relative to the frame maximum for --from-cube")
    p.add_argument("--sigma", type=float, help="one spread in bins for every class")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("loss", help="focal loss, or the combined loss with --pred-no-ra")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--pred-no-ra")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--kappa", type=float, default=4.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("eval", help="match heatmap peaks to the scene ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--scene", required=True)
    _add_config(p)
    p.add_argument("--threshold", type=float, default=evaluation.DEFAULT_THRESHOLD)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("flops", help="FLOPs of a layer-spec JSON or bundled model")
    p.add_argument("model", help=f"path or bundled name ({', '.join(complexity.bundled_models())})")
    p.add_argument("--space", action="store_true", help="also print parameters and feature-map cells")
    p.add_argument("--compare", nargs="+", metavar="MODEL", help="print pairwise ratio table instead")
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("render", help="write a view as a binary PPM image")
    p.add_argument("--in", dest="input", required=True, help="cubes or a view sequence")
    p.add_argument("--view", choices=("ra", "rv", "va"))
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--colormap", choices=render.COLORMAPS, default="jet")
    p.add_argument("--floor-db", type=float, default=-60.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"radarcube {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigError, ShapeError) as exc:
        print(f"radarcube {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ContainerError, OSError) as exc:
        print(f"radarcube {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
