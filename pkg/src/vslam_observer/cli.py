"""Command-line entry point: run a scenario, write CSV, print a summary.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error.
Flags override values from ``--config``, which override built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import OutputConfig, emit_config, load_config
from .errors import ParseError, ValidationError, VslamError
from .simulator import (
    FrameRecord,
    ScenarioConfig,
    fit_log_decay,
    initial_truth,
    landmark_errors,
    run_simulation,
)


def _fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def csv_header(n: int) -> list[str]:
    return (
        ["t", "V", "log10V"]
        + [f"l_{i}" for i in range(1, n + 1)]
        + ["px", "py", "pz", "ex", "ey", "ez"]
        + [f"mu_{i}" for i in range(1, n + 1)]
        + ["sigma_min", "sigma_max"]
    )


def emit_csv(records: list[FrameRecord], path, n: int | None = None) -> None:
    """Write one row per frame; ``n`` sets the landmark count when ``records`` is empty."""
    if n is None:
        n = len(records[0].l) if records else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_header(n))
        for r in records:
            est = r.est_pose_aligned if r.est_pose_aligned is not None else r.est_pose
            with np.errstate(divide="ignore"):
                log_v = np.log10(r.V) if r.V > 0 else -np.inf
            row = [r.t, r.V, log_v, *r.l, *r.true_pose[:3, 3], *est[:3, 3], *r.mu]
            row += [r.sigma_min, r.sigma_max]
            writer.writerow([_fmt(v) for v in row])


@dataclass
class RunSummary:
    final_V: float
    log10V_slope: float | None
    log10V_r2: float | None
    fit_samples: int
    final_l: list[float]
    point_position_errors_m: list[float]
    bearing_angle_errors_rad: list[float]
    wall_clock_s: float
    mu: list[float | None]

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def summarize(cfg: ScenarioConfig, records: list[FrameRecord], wall_clock: float) -> RunSummary:
    truth = initial_truth(cfg)
    n_p = truth.n_points
    if not records:
        return RunSummary(0.0, None, None, 0, [], [], [], wall_clock, [None] * truth.n)
    times = [r.t for r in records]
    V = [r.V for r in records]
    slope, r2, n_fit = fit_log_decay(times, V)
    err = landmark_errors(truth, records[-1].est_landmarks_aligned)
    mus = np.array([r.mu for r in records])
    mu = []
    for col in mus.T:
        finite = col[np.isfinite(col)]
        mu.append(float(finite.min()) if finite.size else None)
    return RunSummary(
        final_V=float(V[-1]),
        log10V_slope=slope,
        log10V_r2=r2,
        fit_samples=n_fit,
        final_l=[float(x) for x in records[-1].l],
        point_position_errors_m=[float(x) for x in err[:n_p]],
        bearing_angle_errors_rad=[float(x) for x in err[n_p:]],
        wall_clock_s=wall_clock,
        mu=mu,
    )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vslam-observer", description=__doc__.splitlines()[0])
    p.add_argument("--config", type=Path, help="INI scenario file")
    p.add_argument("--out", type=Path, help="CSV output path")
    p.add_argument("--duration", type=float, help="simulated time in seconds")
    p.add_argument("--dt", type=float, help="integration step in seconds")
    p.add_argument("--seed", type=int, help="seed for the initial-error draw")
    p.add_argument("--summary", action="store_true", help="print a JSON run summary")
    p.add_argument("--emit-defaults", action="store_true", help="print the default config and exit")
    return p


def resolve_config(args) -> tuple[ScenarioConfig, OutputConfig]:
    if args.config is not None:
        if not args.config.is_file():
            raise ValidationError(f"config file not found: {args.config}")
        cfg, out = load_config(args.config)
    else:
        cfg, out = ScenarioConfig(), OutputConfig()
    overrides = {k: getattr(args, k) for k in ("duration", "dt", "seed") if getattr(args, k) is not None}
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    if args.out is not None:
        out = dataclasses.replace(out, csv=str(args.out))
    if args.summary:
        out = dataclasses.replace(out, summary=True)
    return cfg, out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.emit_defaults:
        sys.stdout.write(emit_config())
        return 0
    try:
        cfg, out = resolve_config(args)
    except (ParseError, ValidationError) as exc:
        print(f"vslam-observer: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"vslam-observer: cannot read configuration: {exc}", file=sys.stderr)
        return 1

    try:
        start = time.perf_counter()
        records = run_simulation(cfg)
        wall = time.perf_counter() - start
        if out.csv:
            emit_csv(records, out.csv, n=cfg.n)
    except (VslamError, OSError, FloatingPointError) as exc:
        print(f"vslam-observer: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    if out.summary:
        json.dump(summarize(cfg, records, wall).to_dict(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
