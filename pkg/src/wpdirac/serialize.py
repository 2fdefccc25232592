"""CSV / JSON serialization of trajectories.

Floats are written with 17 significant digits, so a write/read round trip is
bit-exact and residuals recomputed from a file match the in-memory ones.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .constraints import trajectory_residuals
from .evolution import Cause, OdeSystem, Termination, Trajectory
from .geometry import ModelParams

__all__ = [
    "state_columns",
    "trajectory_table",
    "write_table",
    "write_trajectory",
    "read_trajectory",
    "metadata",
]

EVEN_STATE = ["f", "f_t", "re_h_plus", "im_h_plus", "re_h_minus", "im_h_minus"]
ODD_STATE = ["f", "f_t", "h_plus", "k_plus"]
RESIDUAL_COLUMNS = ["C_H", "einstein_tan", "einstein_normal", "diff_charge"]


def state_columns(params: ModelParams) -> list:
    return EVEN_STATE if params.is_even else ODD_STATE


def _fmt(x) -> str:
    return format(float(x), ".17g")


def trajectory_table(traj) -> tuple[list, np.ndarray]:
    """Header and numeric rows for a Trajectory or GlobalTrajectory."""
    res = trajectory_residuals(traj)
    cols = [res.hamiltonian, res.einstein_tan, res.einstein_normal, res.charge]
    header = ["t"] + state_columns(traj.params) + RESIDUAL_COLUMNS
    data = np.column_stack([traj.times, traj.y] + cols)
    if hasattr(traj, "s_values"):
        header = ["s", "lapse"] + header
        data = np.column_stack([traj.s_values, traj.lapse_values, data])
    return header, data


def write_table(path, header, data, fmt="csv", meta=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in data:
                writer.writerow([_fmt(v) for v in row])
    elif fmt == "json":
        rows = [dict(zip(header, (float(v) for v in row))) for row in data]
        doc = {"metadata": meta or {}, "rows": rows}
        # NaN is emitted as the bare token NaN, which Python's json reads back
        path.write_text(json.dumps(doc, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def metadata(traj) -> dict:
    meta = {
        "params": traj.params.to_dict(),
        "system": traj.system.kind,
        "c": traj.system.c,
        "version": __version__,
    }
    if isinstance(traj, Trajectory):
        meta.update(step=traj.step, t_end=traj.t_end, termination=str(traj.termination))
    else:
        meta.update(omega=traj.omega, interpolation_error=traj.interpolation_error)
    return meta


def write_trajectory(traj, path, fmt="csv") -> Path:
    header, data = trajectory_table(traj)
    return write_table(path, header, data, fmt, metadata(traj))


def _read_rows(path):
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        rows = doc["rows"]
        header = list(rows[0]) if rows else []
        data = np.array([[r[k] for k in header] for r in rows], dtype=float)
        return header, data, doc.get("metadata", {})
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, data, {}


def read_trajectory(path, params: ModelParams | None = None, kind=None, c=None) -> Trajectory:
    """Rebuild a Trajectory from a file written by :func:`write_trajectory`.

    JSON files carry their own parameters; for CSV the caller supplies
    ``params`` (and ``kind``/``c`` for WK runs). Explicit arguments win over
    the file metadata. Residual columns in the file are ignored.
    """
    header, data, meta = _read_rows(path)
    if params is None:
        if "params" not in meta:
            raise ValueError(f"{path}: no parameters in file; pass params explicitly")
        params = ModelParams(**meta["params"])
    kind = kind or meta.get("system", "einstein")
    c = c if c is not None else meta.get("c")
    system = OdeSystem(params, kind, c)
    cols = state_columns(params)
    missing = [k for k in ["t"] + cols if k not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing} for {params.parity.value} parity")
    if len(data) < 1:
        raise ValueError(f"{path}: no data rows")
    times = data[:, header.index("t")]
    y = data[:, [header.index(k) for k in cols]]
    step = float(meta.get("step", abs(times[1] - times[0]) if len(times) > 1 else 0.0))
    term = Termination.parse(meta["termination"]) if "termination" in meta else Termination(Cause.REACHED_END)
    t_end = float(meta.get("t_end", times[-1]))
    return Trajectory(system, times, y, step, term, t_end)
