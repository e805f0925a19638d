"""Command-line harness: simulate, oracle, compare, report, gen.

Exit codes: 0 success; 1 comparison over tolerance; 2 unreadable input
files or shape mismatch; 3 invalid configuration or invariant violation.
Every error path prints one line to stderr prefixed "ipsim: error:".
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio, images
from .config import RunConfig, config_to_dict, load_config
from .geometry import build_tiling
from .patches import Fidelity
from .perf import area_estimate, build_report
from .pipeline import error_stats, simulate_frame

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2
EXIT_CONFIG = 3

IMAGE_SUFFIXES = (".pgm", ".ppm", ".pnm", ".png")


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        return load_config(path)
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"config file not found: {path}") from None
    except (ValueError, OSError) as exc:
        raise CliError(EXIT_CONFIG, f"invalid config: {exc}") from None


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if getattr(args, "fidelity", None):
        updates["fidelity"] = Fidelity(args.fidelity)
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _input_frames(path_str: str) -> list[Path]:
    path = Path(path_str)
    if path.is_dir():
        frames = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
        if not frames:
            raise CliError(EXIT_INPUT, f"no images found in directory {path}")
        return frames
    if not path.exists():
        raise CliError(EXIT_INPUT, f"input not found: {path}")
    return [path]


def _load_image(path: Path) -> np.ndarray:
    try:
        return images.load_image(path)
    except (ValueError, OSError) as exc:
        raise CliError(EXIT_INPUT, f"unreadable image {path}: {exc}") from None


def _load_bank(path):
    try:
        return fileio.load_weight_bank(path)
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"weight bank not found: {path}") from None
    except (ValueError, OSError) as exc:
        raise CliError(EXIT_INPUT, f"unreadable weight bank {path}: {exc}") from None


def _mask_paths(mask_arg: str | None, n_frames: int) -> list[Path | None]:
    if mask_arg is None:
        return [None] * n_frames
    path = Path(mask_arg)
    if path.is_dir():
        masks = sorted(p for p in path.iterdir() if p.is_file())
        if len(masks) < n_frames:
            raise CliError(EXIT_INPUT, f"mask directory {path} has {len(masks)} files for {n_frames} frames")
        return list(masks[:n_frames])
    if not path.exists():
        raise CliError(EXIT_INPUT, f"mask file not found: {path}")
    return [path] * n_frames


def _save_features(path: Path, frame, fmt: str) -> None:
    if fmt == "csv" or (fmt == "auto" and path.suffix.lower() == ".csv"):
        fileio.save_features_csv(path, frame)
    else:
        fileio.save_features(path, frame)


def _load_features(path: Path):
    try:
        head = Path(path).open("rb").read(4)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"unreadable feature file {path}: {exc}") from None
    try:
        if head == fileio.FEATURE_MAGIC:
            return fileio.load_features(path)
        return fileio.load_features_csv(path)
    except (ValueError, OSError) as exc:
        raise CliError(EXIT_INPUT, f"unreadable feature file {path}: {exc}") from None


def _run_simulation(args, force_ideal: bool) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    if force_ideal:
        cfg = dataclasses.replace(cfg, fidelity=Fidelity.IDEAL)
    frames = _input_frames(args.input)
    bank = _load_bank(args.weights)
    mask_paths = _mask_paths(args.mask, len(frames))

    out = Path(args.out)
    multi = len(frames) > 1
    if multi:
        out.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if args.format == "csv" else ".bin"

    outputs = []
    for index, (img_path, mask_path) in enumerate(zip(frames, mask_paths)):
        img = _load_image(img_path)
        try:
            tiling = build_tiling(
                img.shape[1], img.shape[0],
                cfg.tiling.patch_w, cfg.tiling.patch_h,
                cfg.tiling.origin_x, cfg.tiling.origin_y,
            )
            mask = None
            if mask_path is not None:
                try:
                    mask = fileio.load_mask(mask_path, tiling)
                except (ValueError, OSError) as exc:
                    raise CliError(EXIT_INPUT, f"unreadable mask {mask_path}: {exc}") from None
            digital = simulate_frame(cfg, img, bank, mask, frame_index=index)
        except CliError:
            raise
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, str(exc)) from None
        target = out / f"features_{index:04d}{ext}" if multi else out
        _save_features(target, digital, args.format)
        outputs.append(str(target))

    log = {
        "command": "oracle" if force_ideal else "simulate",
        "seed": cfg.seed,
        "fidelity": cfg.fidelity.value,
        "inputs": [str(p) for p in frames],
        "weights": str(args.weights),
        "masks": [str(p) if p else None for p in mask_paths],
        "outputs": outputs,
        "effective_config": config_to_dict(cfg),
    }
    log_path = (out / "run.log.json") if multi else Path(str(out) + ".log.json")
    log_path.write_text(json.dumps(log, indent=2) + "\n")
    print(f"wrote {len(outputs)} feature file(s); log: {log_path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    return _run_simulation(args, force_ideal=False)


def cmd_oracle(args) -> int:
    return _run_simulation(args, force_ideal=True)


def cmd_compare(args) -> int:
    a = _load_features(Path(args.file_a))
    b = _load_features(Path(args.file_b))
    if a.features.shape != b.features.shape or not np.array_equal(a.patch_indices, b.patch_indices):
        raise CliError(
            EXIT_INPUT,
            f"shape mismatch: {a.features.shape} vs {b.features.shape}",
        )
    stats = error_stats(a.features, b.features, full_scale=args.full_scale)
    print(f"max abs error   {stats.max_abs:.6e}")
    print(f"mean abs error  {stats.mean_abs:.6e}")
    print(f"rms error       {stats.rms:.6e}")
    print(f"implied ENOB    {stats.enob:.2f}")
    return EXIT_OK if stats.max_abs <= args.tolerance else EXIT_TOLERANCE


def cmd_report(args) -> int:
    cfg = _load_config(args.config)
    try:
        report = build_report(cfg.timing, cfg.power, cfg.area)
        area = area_estimate(cfg.area)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"invalid config: {exc}") from None
    print(report.to_text())
    occ = ", ".join(f"{k}={v * 100:.1f}%" for k, v in area.occupancy.items())
    print(f"area occupancy    {occ}")
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        img = images.generate_pattern(args.pattern, args.width, args.height, args.seed or 0)
        images.save_image(args.out, img)
    except (ValueError, OSError) as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipsim",
        description="In-pixel switched-capacitor compute simulator and performance model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON run configuration (defaults used if omitted)")
        p.add_argument("--input", required=True, help="input image file or directory")
        p.add_argument("--weights", required=True, help="weight bank file (IPWB)")
        p.add_argument("--mask", help="selection mask file or directory (heuristic fallback if omitted)")
        p.add_argument("--out", required=True, help="output feature file (or directory for multi-frame)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--format", choices=("bin", "csv"), default="bin")
        return p

    p_sim = add_run("simulate", "run the configured-fidelity pipeline")
    p_sim.add_argument("--fidelity", choices=("ideal", "analog"), help="override the config fidelity")
    add_run("oracle", "run the pure-arithmetic reference pipeline")

    p_cmp = sub.add_parser("compare", help="compare two feature files")
    p_cmp.add_argument("file_a")
    p_cmp.add_argument("file_b")
    p_cmp.add_argument("--tolerance", type=float, default=0.0)
    p_cmp.add_argument("--full-scale", dest="full_scale", type=float, default=1.0,
                       help="full scale used for the implied-ENOB statistic")

    p_rep = sub.add_parser("report", help="emit the throughput/power/area report")
    p_rep.add_argument("--config", help="JSON run configuration")
    p_rep.add_argument("--out", help="also write the JSON report here")

    p_gen = sub.add_parser("gen", help="generate a synthetic test image")
    p_gen.add_argument("--pattern", choices=("gradient", "checker", "noise"), required=True)
    p_gen.add_argument("--width", type=int, required=True)
    p_gen.add_argument("--height", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    return parser


_HANDLERS = {
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
    "report": cmd_report,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except CliError as exc:
        print(f"ipsim: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"ipsim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ipsim: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
