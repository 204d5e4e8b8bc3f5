"""JSON/CSV records and run manifests."""

from __future__ import annotations

import csv
import json
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .cocycle import CocycleParams
from .grid import GridSpec
from .lyapunov import BadSetReport, CriterionVerdict, LyapunovEstimate, SliceProfile
from .spectrum import SpectrumHistogram


def decimal17(x: float) -> str:
    """Round-trip decimal string with 17 significant digits."""
    return format(float(x), ".17g")


def params_record(params: CocycleParams) -> dict:
    return {
        "lambda": decimal17(params.lam),
        "energy": decimal17(params.energy),
        "omega_fraction": params.omega.frac.frac,
        "omega": params.omega.real_value,
    }


def grid_record(grid: GridSpec | None) -> dict | None:
    return None if grid is None else grid.describe()


def estimate_record(est: LyapunovEstimate) -> dict:
    rec = {
        "params": params_record(est.params),
        "n": est.n,
        "method": est.method,
        "samples": est.samples,
        "value": est.value,
        "value_str": decimal17(est.value),
        "wall_time": est.wall_time,
    }
    if est.seed is not None:
        rec["seed"] = est.seed
    if est.grid is not None:
        rec["grid"] = grid_record(est.grid)
    return rec


def bad_set_record(report: BadSetReport, limit: int = 20) -> dict:
    return {
        "n": report.n,
        "L_ref": report.L_ref,
        "threshold": report.threshold,
        "count_bad": report.count_bad,
        "samples": report.samples,
        "measure_estimate": report.measure_estimate,
        "worst_points": [
            {"x": float(p.x), "y": float(p.y), "x_fraction": p.x.frac, "y_fraction": p.y.frac, "u_n": u}
            for p, u in report.worst_points[:limit]
        ],
    }


def verdict_record(v: CriterionVerdict) -> dict:
    return {
        "n0": v.n0,
        "L_n0": v.L_n0,
        "L_2n0": v.L_2n0,
        "condition_i": {"holds": v.condition_i, "margin": v.margin_i, "threshold": 2e-3},
        "condition_ii": {"holds": v.condition_ii, "drop_ratio": v.drop_ratio, "margin": v.margin_ii, "threshold": 0.125},
        "condition_iii": {
            "verifiable": v.condition_iii_verifiable,
            "measure_estimates": list(v.condition_iii_measures),
            "log10_target": v.condition_iii_log10_target,
        },
        "conclusion_bound": v.conclusion_bound,
        "passed": v.passed,
        "rehearsal": v.rehearsal,
        "hypotheses_hold": v.hypotheses_hold,
        "label": "rehearsal" if v.rehearsal else "theorem-scale",
        "notes": v.notes,
    }


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([decimal17(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_slice_csv(path, profile: SliceProfile) -> Path:
    return write_csv(path, ["coordinate", "u_n"], ((float(c), float(u)) for c, u in profile))


def write_histogram_csv(path, hist: SpectrumHistogram) -> Path:
    e = hist.bin_edges
    return write_csv(path, ["bin_left", "bin_right", "count"],
                     ((float(e[k]), float(e[k + 1]), int(hist.counts[k])) for k in range(len(hist.counts))))


@dataclass
class RunManifest:
    command_line: list[str]
    config: dict
    omega_fraction: int
    lam: str | None = None
    energy: str | None = None
    grid: dict | None = None
    mc: dict | None = None
    seed: int | None = None
    tool_version: str = __version__
    backend: str = _backend.NAME
    wall_time: float = 0.0
    workers: int = 1
    host: dict = field(default_factory=lambda: {
        "cpu_count": os.cpu_count(), "platform": platform.platform(), "python": sys.version.split()[0],
    })
    outputs: list[str] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "command_line": self.command_line,
            "config": self.config,
            "omega_fraction": self.omega_fraction,
            "lambda": self.lam,
            "energy": self.energy,
            "grid": self.grid,
            "mc": self.mc,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "backend": self.backend,
            "wall_time": self.wall_time,
            "workers": self.workers,
            "host": self.host,
            "outputs": self.outputs,
        }


def write_manifest(artifact_path, manifest: RunManifest) -> Path:
    artifact_path = Path(artifact_path)
    return write_json(artifact_path.with_name(artifact_path.stem + ".manifest.json"), manifest.to_record())


def write_eigenvalue_dump(path, values, sidecar: dict) -> Path:
    path = write_csv(path, ["eigenvalue"], ((float(v),) for v in values))
    write_json(path.with_suffix(".json"), sidecar)
    return path
