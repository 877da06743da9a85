"""Command-line runner: single runs, scenario presets and parameter sweeps.

Exit codes: 0 success, 2 configuration error, 3 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from spssim import artifacts, config as cfgmod, engine
from spssim.config import ConfigError
from spssim.engine import SimInvariantError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="spssim",
        description="Sidelink mode-4 SB-SPS broadcast simulator")
    p.add_argument("--config", type=Path, default=None,
                   help="sectioned key/value config file (defaults used when omitted)")
    p.add_argument("--preset", choices=("s1", "s2", "s3", "s4"), default=None,
                   help="congestion preset binding density and speed")
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--out", type=str, default=None,
                   help="output directory (SPSSIM_OUT env var takes precedence)")
    p.add_argument("--sweep", type=str, default=None, metavar="KEY=V1,V2,...",
                   help="sweep one parameter, e.g. sps.p_resel=0.0,0.4,0.8")
    p.add_argument("--seeds", type=int, default=1,
                   help="number of seeds per sweep value (seed, seed+1, ...)")
    p.add_argument("--jobs", type=int, default=1,
                   help="concurrent runs for sweeps")
    p.add_argument("--trace", action="store_true", help="write the grant trace")
    p.add_argument("--strict", type=str, default=None, metavar="BOOL",
                   help="strict standard-value validation (default true)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering PNG figures")
    return p


def _load_config(args) -> cfgmod.RunConfig:
    if args.config is not None:
        cfg = cfgmod.parse_and_validate(args.config, is_path=True)
    else:
        cfg = cfgmod.RunConfig()
    if args.preset:
        cfgmod.apply_preset(cfg, args.preset)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trace:
        cfg.trace = True
    if args.strict is not None:
        cfg.strict = cfgmod._parse_bool(args.strict)
    out = os.environ.get("SPSSIM_OUT") or args.out
    if out:
        cfg.out_dir = out
    cfg.validate()
    return cfg


def _run_one(job):
    value, seed, cfg, out_dir, figures, axis = job
    result = engine.run(cfg)
    artifacts.write_run_artifacts(result, cfg, out_dir, figures=figures)
    return value, seed, artifacts.combined_row(axis, value, seed, result)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    figures = not args.no_figures
    try:
        if args.sweep is None:
            result = engine.run(cfg)
            out = artifacts.write_run_artifacts(result, cfg, cfg.out_dir, figures)
            print(f"wrote {out} (per_total={result.summary['per_total']!r}, "
                  f"ipg_mean_ms={result.summary['ipg_mean_ms']!r})")
            return 0

        if "=" not in args.sweep:
            raise ConfigError("--sweep expects KEY=V1,V2,...")
        axis, values_csv = args.sweep.split("=", 1)
        axis = axis.strip()
        values = cfgmod.parse_sweep_values(axis, values_csv)
        seeds = [cfg.seed + i for i in range(max(1, args.seeds))]
        jobs = []
        for value, seed, run_cfg in cfgmod.sweep_configs(cfg, axis, values, seeds):
            sub = Path(cfg.out_dir) / f"{axis.replace('.', '_')}_{value}" / f"seed_{seed}"
            run_cfg.out_dir = str(sub)
            jobs.append((value, seed, run_cfg, sub, figures, axis))
        rows = []
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                for _, _, row in pool.map(_run_one, jobs):
                    rows.append(row)
        else:
            for job in jobs:
                rows.append(_run_one(job)[2])
        rows.sort()
        path = artifacts.write_combined_csv(rows, cfg.out_dir)
        if figures:
            from spssim import report
            parsed = []
            for row in rows:
                cols = row.split(",")
                parsed.append({"value": cols[1],
                               "per_total": float(cols[3]),
                               "ipg_mean_ms": float(cols[5]),
                               "ipg_p95_ms": float(cols[6])})
            report.sweep_figure(parsed, axis, str(Path(cfg.out_dir) / "sweep.png"))
        print(f"wrote {path} ({len(rows)} runs)")
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SimInvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
