"""Writing run outputs to disk: delimited tables, key=value summary, resolved
config, optional grant trace and rendered figures."""

from __future__ import annotations

from pathlib import Path

from spssim import config as cfgmod
from spssim import metrics as met
from spssim.engine import RunResult

SUMMARY_KEYS = (
    "per_total", "ipg_mean_ms", "ipg_median_ms", "ipg_p95_ms", "ipg_mode_ms",
    "ipg_over_cap_fraction", "ipg_cap_ms", "data_rate_bps", "vehicle_count",
    "seed", "sim_time_s", "expected_total", "decoded_total", "lost_total",
    "half_duplex_total", "packets_generated", "packets_expired",
)

COMBINED_HEADER = ("axis,value,seed,per_total,per_300m,ipg_mean_ms,"
                   "ipg_p95_ms,ipg_over_cap_fraction,data_rate_bps,"
                   "expected_total,decoded_total")


def write_run_artifacts(result: RunResult, cfg, out_dir: str | Path,
                        figures: bool = True) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "per_curve.csv").write_text(met.format_per_curve_csv(result.per_bins))
    (out / "ipg_hist.csv").write_text(met.format_ipg_hist_csv(result.ipg))
    pairs = [(k, result.summary[k]) for k in SUMMARY_KEYS]
    (out / "summary.txt").write_text(met.format_summary(pairs))
    (out / "resolved.ini").write_text(cfgmod.emit(cfg))
    if cfg.trace:
        lines = ["subframe,ue,event,grant_subframe,start_subch,l_subch,slrrc,threshold_dbm"]
        for r in result.trace:
            thr = "" if r.threshold_dbm is None else repr(r.threshold_dbm)
            lines.append(f"{r.subframe},{r.ue},{r.event},{r.grant_subframe},"
                         f"{r.start_subch},{r.l_subch},{r.slrrc},{thr}")
        (out / "grant_trace.csv").write_text("\n".join(lines) + "\n")
    if figures:
        from spssim import report
        report.per_curve_figure({"run": result.per_bins}, str(out / "per_curve.png"))
        report.ipg_hist_figure(result, str(out / "ipg_hist.png"))
    return out


def combined_row(axis: str, value, seed: int, result: RunResult) -> str:
    per300 = result.acc.per_in_range(300.0, 325.0)
    per300_s = "" if per300 is None else repr(per300)
    s = result.summary
    return (f"{axis},{value},{seed},{s['per_total']!r},{per300_s},"
            f"{s['ipg_mean_ms']!r},{s['ipg_p95_ms']!r},"
            f"{s['ipg_over_cap_fraction']!r},{s['data_rate_bps']!r},"
            f"{s['expected_total']},{s['decoded_total']}")


def write_combined_csv(rows: list[str], out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "combined.csv"
    path.write_text("\n".join([COMBINED_HEADER] + rows) + "\n")
    return path
