"""
Report files: per-path and per-row CSVs with a JSON manifest.

Floats are written with 17 significant digits, which round-trips every double.
The manifest digests cover file contents only, so timestamps never disturb
them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .experiments import BlocktimeSweep, DelaySweep, ExperimentReport, ReaddSweep

PER_PATH_HEADER = (
    "path_id",
    "value_protected",
    "value_unprotected",
    "value_hodl",
    "ratio_protected_unprotected",
    "ratio_hodl_unprotected",
)


def fmt(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class ReportWriter:
    """Collects output files for one run and writes the manifest last."""

    def __init__(self, out_dir: str | Path, config_echo: dict[str, Any], started_at: str | None = None):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.config_echo = config_echo
        self.started_at = started_at or now()
        self.files: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.files.append(path)
        return path

    def finish(self, summary: dict[str, Any], calibration: dict[str, Any] | None = None) -> Path:
        manifest = {
            "tool_version": __version__,
            "config_echo": self.config_echo,
            "seed": self.config_echo.get("seed"),
            "calibration": calibration or {},
            "summary": summary,
            "started_at": self.started_at,
            "finished_at": now(),
            "output_files": [{"path": p.name, "sha256": sha256_file(p)} for p in self.files],
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def per_path_csv(report: ExperimentReport) -> str:
    return csv_text(PER_PATH_HEADER, report.per_path())


def emit_report(report: ExperimentReport, out_dir: str | Path, started_at: str | None = None) -> list[Path]:
    writer = ReportWriter(out_dir, report.config_echo, started_at)
    csv_path = writer.write("retention.csv", per_path_csv(report))
    summary = {"mean_ratio": report.mean_ratio, "std_error": report.std_error, "n_paths": report.n_paths,
               "max_audit_error": report.max_audit_error}
    return [csv_path, writer.finish(summary, report.calibration)]


def pct_tag(pct: float) -> str:
    return repr(float(pct)).replace(".", "p")


def emit_readd_sweep(sweep: ReaddSweep, out_dir: str | Path, started_at: str | None = None) -> list[Path]:
    first = sweep.reports[0]
    echo = {k: v for k, v in first.config_echo.items() if k != "readd_pct"}
    writer = ReportWriter(out_dir, echo, started_at)
    paths = [writer.write("readd_sweep.csv", csv_text(("pct", "mean_ratio", "std_error"), sweep.rows()))]
    for pct, report in zip(sweep.pcts, sweep.reports):
        paths.append(writer.write(f"readd_{pct_tag(pct)}.csv", per_path_csv(report)))
    summary = {"rows": [{"pct": p, "mean_ratio": m, "std_error": s} for p, m, s in sweep.rows()]}
    paths.append(writer.finish(summary, first.calibration))
    return paths


def emit_blocktime_sweep(sweep: BlocktimeSweep, out_dir: str | Path, started_at: str | None = None) -> list[Path]:
    writer = ReportWriter(out_dir, sweep.config_echo, started_at)
    header = ("block_gap", "block_time_s", "arb_profit_per_day", "std_error", "fitted_slope", "slope_std_error")
    rows = [(*row, sweep.slope, sweep.slope_std_error) for row in sweep.rows()]
    paths = [writer.write("blocktime_sweep.csv", csv_text(header, rows))]
    paths.append(writer.finish({"slope": sweep.slope, "slope_std_error": sweep.slope_std_error}))
    return paths


def emit_delay_sweep(sweep: DelaySweep, out_dir: str | Path, started_at: str | None = None) -> list[Path]:
    writer = ReportWriter(out_dir, sweep.config_echo, started_at)
    header = ("delta_blocks", "time_ev", "std_error", "intrinsic", "total")
    paths = [writer.write("delay_sweep.csv", csv_text(header, sweep.rows()))]
    summary = {"rows": [{"delta_blocks": d, "time_ev": t, "std_error": s} for d, t, s, _, _ in sweep.rows()]}
    paths.append(writer.finish(summary))
    return paths
