"""Command-line front end, one subcommand per pipeline stage.

Every subcommand accepts ``--config FILE``, a plain ``key = value`` file
(``#`` comments allowed) holding any of the keys in :class:`PipelineConfig`.
Flags given on the command line override values from the file.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 validation
error. Failures print one line ``error class=<Name> message=<text>`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .core import FrameSequence
from .diffusion import SamplerConfig, gaussian_oracle_denoiser, sample_batch, sigma_schedule
from .errors import ConfigError, ValidationError
from .fileio import atomic_write, read_events, read_frames, write_events, write_frames, write_tensor
from .interp import InterpConfig, crossfade, evaluate, event_interpolator, interpolate
from .sim import SimConfig, build_instances, simulate_events
from .voxel import RoiMaskConfig, roi_mask, voxelize

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4


@dataclass
class PipelineConfig:
    contrast: float = 0.15
    eps: float = 1e-3
    refractory_us: int = 0
    seed: int = 0
    gaussian_sigma: float = 1.0
    gaussian_radius: int = 2
    threshold: float = 0.01
    dilate_radius: int = 2
    median_radius: int = 1
    blend: str = "bidirectional"
    steps: int = 50
    sigma_min: float = 0.02
    sigma_max: float = SamplerConfig().sigma_max
    rho: float = 7.0
    cfg_scale: float = 1.0
    skip: int = 3
    bins: int = 8
    threads: int = 0

    def __post_init__(self):
        self.sim()
        self.roi()
        self.interp()
        self.sampler()
        if self.skip < 1:
            raise ConfigError(f"skip must be >= 1, got {self.skip}")
        if self.bins < 1:
            raise ConfigError(f"bins must be >= 1, got {self.bins}")
        if self.threads < 0:
            raise ConfigError(f"threads must be >= 0, got {self.threads}")

    def sim(self) -> SimConfig:
        return SimConfig(self.contrast, self.eps, self.refractory_us, self.seed)

    def roi(self) -> RoiMaskConfig:
        return RoiMaskConfig(self.gaussian_sigma, self.gaussian_radius, self.threshold, self.dilate_radius, self.median_radius)

    def interp(self) -> InterpConfig:
        return InterpConfig(self.contrast, self.eps, self.blend)

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.steps, self.sigma_min, self.sigma_max, self.rho, self.cfg_scale, self.seed)


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}
_CASTS = {"float": float, "int": int, "str": str}


def _cast(key, raw):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw, 0) if isinstance(raw, str) else int(raw)
        return _CASTS[kind](raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def load_config(path) -> dict:
    """Read ``key = value`` lines, rejecting unknown keys and unparsable values."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = (part.strip() for part in s.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _cast(key, raw)
    return values


def build_config(args) -> PipelineConfig:
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for key in _FIELD_TYPES:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return PipelineConfig(**values)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args, cfg: PipelineConfig) -> int:
    seq = read_frames(args.frames)
    events = simulate_events(seq, cfg.sim())
    write_events(events, args.out)
    print(f"wrote {len(events)} events to {args.out}")
    return 0


def cmd_voxelize(args, cfg: PipelineConfig) -> int:
    if not (args.mask_out or args.grid_out):
        raise ConfigError("voxelize needs --grid-out and/or --mask-out")
    events = read_events(args.events)
    grid = voxelize(events, args.t0, args.t1, cfg.bins)
    if args.grid_out:
        write_tensor(grid, args.grid_out)
    if args.mask_out:
        write_tensor(roi_mask(grid, cfg.roi()), args.mask_out)
    print(f"voxelized {int(np.count_nonzero((events.t >= args.t0) & (events.t < args.t1)))} events into {grid.shape}")
    return 0


def _instances(args, cfg):
    seq = read_frames(args.frames)
    events = read_events(args.events)
    if (events.width, events.height) != (seq.width, seq.height):
        raise ValidationError(f"events are {events.width}x{events.height}, frames are {seq.width}x{seq.height}")
    return seq, build_instances(seq, events, cfg.skip)


def cmd_interpolate(args, cfg: PipelineConfig) -> int:
    seq, instances = _instances(args, cfg)
    icfg = cfg.interp()
    frames, stamps = [instances[0].frame_a], [instances[0].t_a]
    for inst in instances:
        frames += interpolate(inst, icfg) + [inst.frame_b]
        stamps += list(inst.timestamps[1:])
    write_frames(FrameSequence(frames, stamps), args.out)
    print(f"wrote {len(frames)} frames ({len(instances)} instances) to {args.out}")
    return 0


def cmd_evaluate(args, cfg: PipelineConfig) -> int:
    _, instances = _instances(args, cfg)
    if args.method == "event":
        method = event_interpolator(cfg.interp())
        config = {"method": "event", **asdict(cfg.interp())}
    else:
        method = crossfade
        config = {"method": "crossfade"}
    config["skip"] = cfg.skip
    report = evaluate(instances, method, out=args.report, config=config)
    print(f"psnr_mean={report.psnr_mean:.4f} ssim_mean={report.ssim_mean:.4f} instances={report.instance_count}")
    return 0


def cmd_diffuse_demo(args, cfg: PipelineConfig) -> int:
    if args.samples < 1:
        raise ConfigError(f"--samples must be >= 1, got {args.samples}")
    scfg = cfg.sampler()
    cond = gaussian_oracle_denoiser(args.mu, args.std)
    uncond = gaussian_oracle_denoiser(0.0, 1.0)
    x = sample_batch(cond, uncond, None, (), args.samples, scfg).ravel()
    result = {
        "config": {**asdict(scfg), "mu": args.mu, "std": args.std, "samples": args.samples, "uncond_prior": [0.0, 1.0]},
        "empirical_mean": float(x.mean()),
        "empirical_std": float(x.std()),
        "schedule": sigma_schedule(scfg).tolist(),
    }
    with atomic_write(args.report, "w") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    print(f"mean={result['empirical_mean']:.4f} std={result['empirical_std']:.4f}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--config", metavar="FILE", help="key = value file with defaults for any pipeline setting")
    p.add_argument("--threads", type=int, help="cap on internal parallelism, 0 = auto (kernels are single-threaded)")


def _sim_flags(p):
    p.add_argument("--contrast", type=float, help="contrast threshold in log-intensity units (default 0.15)")
    p.add_argument("--eps", type=float, help="offset added before taking the log (default 1e-3)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventvfi", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="synthesize events from a frame directory")
    p.add_argument("--frames", required=True, metavar="DIR", help="frame directory with timestamps.txt")
    p.add_argument("--out", required=True, metavar="FILE", help="output events (.evt binary or .txt)")
    _sim_flags(p)
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--refractory-us", dest="refractory_us", type=int, help="per-pixel refractory period (default 0)")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("voxelize", help="voxel grid and ROI mask of an event window")
    p.add_argument("--events", required=True, metavar="FILE", help="input events (.evt or .txt)")
    p.add_argument("--t0", required=True, type=int, help="window start, microseconds (inclusive)")
    p.add_argument("--t1", required=True, type=int, help="window end, microseconds (exclusive)")
    p.add_argument("--bins", type=int, help="temporal bins (default 8)")
    p.add_argument("--grid-out", dest="grid_out", metavar="FILE", help="voxel grid tensor output")
    p.add_argument("--mask-out", dest="mask_out", metavar="FILE", help="ROI mask tensor output")
    p.add_argument("--threshold", type=float, help="mask threshold on the smoothed magnitude (default 0.01)")
    _common(p)
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("interpolate", help="event-based interpolation of skipped frames")
    p.add_argument("--frames", required=True, metavar="DIR", help="frame directory with timestamps.txt")
    p.add_argument("--events", required=True, metavar="FILE", help="input events (.evt or .txt)")
    p.add_argument("--skip", type=int, help="frames withheld between key frames (default 3)")
    p.add_argument("--mode", dest="blend", choices=["forward", "backward", "bidirectional"], help="blend mode")
    p.add_argument("--out", required=True, metavar="DIR", help="output frame directory")
    _sim_flags(p)
    _common(p)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("evaluate", help="PSNR/SSIM of an interpolation method on skip-N instances")
    p.add_argument("--frames", required=True, metavar="DIR", help="frame directory with timestamps.txt")
    p.add_argument("--events", required=True, metavar="FILE", help="input events (.evt or .txt)")
    p.add_argument("--skip", type=int, help="frames withheld between key frames (default 3)")
    p.add_argument("--method", choices=["event", "crossfade"], default="event", help="interpolation method")
    p.add_argument("--mode", dest="blend", choices=["forward", "backward", "bidirectional"], help="blend for --method event")
    p.add_argument("--report", required=True, metavar="FILE", help="JSON report output")
    _sim_flags(p)
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("diffuse-demo", help="guided sampler on 1-D Gaussian data with the exact denoiser")
    p.add_argument("--mu", type=float, default=3.0, help="data mean (default 3)")
    p.add_argument("--std", type=float, default=0.5, help="data standard deviation (default 0.5)")
    p.add_argument("--steps", type=int, help="sampler steps (default 50)")
    p.add_argument("--cfg-scale", dest="cfg_scale", type=float, help="guidance scale (default 1)")
    p.add_argument("--sigma-min", dest="sigma_min", type=float, help="smallest nonzero noise level")
    p.add_argument("--sigma-max", dest="sigma_max", type=float, help="starting noise level")
    p.add_argument("--rho", type=float, help="schedule spacing exponent (default 7)")
    p.add_argument("--samples", type=int, default=10000, help="number of samples (default 10000)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--report", required=True, metavar="FILE", help="JSON report output")
    _common(p)
    p.set_defaults(func=cmd_diffuse_demo)
    return parser


def _fail(exc, code):
    msg = " ".join(str(exc).split())
    print(f"error class={type(exc).__name__} message={msg}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except ValidationError as exc:
        return _fail(exc, EXIT_VALIDATION)
    except OSError as exc:
        return _fail(exc, EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
