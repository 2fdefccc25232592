"""Command-line front end.

Usage::

    wpdirac --mode evolve_einstein --parity even --m 1 --a 1 --lambda-q 1 --t-end 0.5 --out run.csv
    wpdirac --config run.cfg --step 5e-5          # flags override the file
    wpdirac --mode verify --input run.csv --m 1 --a 1 --lambda-q 1

Exit status: 0 success, 1 residual above tolerance, 2 invalid or inadmissible
input, 3 blow-up or domain exit before t_end (the resolved prefix is written).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .constraints import ResidualReport, verify_trajectory, trajectory_residuals
from .errors import OutOfDomain
from .evolution import (
    Cause,
    einstein_system,
    initial_state,
    initial_state_wk,
    integrate,
    wk_system,
)
from .evolution import Termination, _grid
from .geometry import (
    GeometrySample,
    ModelParams,
    closed_form_f,
    closed_form_scalar,
    warp_hypothesis_residuals,
)
from .reparam import pullback_trajectory
from .serialize import read_trajectory, write_table, write_trajectory

MODES = ("evolve_einstein", "evolve_wk", "closed_form", "verify", "reparam")

EXIT_OK, EXIT_RESIDUAL, EXIT_INPUT, EXIT_BLOWUP = 0, 1, 2, 3

# config key -> (type, default)
KEYS = {
    "mode": (str, None),
    "parity": (str, "even"),
    "m": (int, 1),
    "a": (float, 0.0),
    "lambda_m": (float, 0.0),
    "lambda_q": (float, 0.0),
    "epsilon": (int, 1),
    "norm": (float, 1.0),
    "sign": (int, 1),
    "c": (float, None),
    "t_end": (float, 1.0),
    "step": (float, 1e-4),
    "omega": (float, None),
    "tol": (float, 1e-8),
    "out": (str, None),
    "format": (str, "csv"),
    "input": (str, None),
    "s_max": (float, 10.0),
    "s_count": (int, 50),
    "f_bound": (float, 1e6),
    "local_tol": (float, 1e-6),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str
    params: ModelParams
    sign: int
    c: Optional[float]
    t_end: float
    step: float
    omega: Optional[float]
    tolerance: float
    output_path: Path
    format: str
    input_path: Optional[Path] = None
    s_max: float = 10.0
    s_count: int = 50
    f_bound: float = 1e6
    local_tol: float = 1e-6

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        v = {k: default for k, (_, default) in KEYS.items()}
        for key, raw in values.items():
            if key not in KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            typ = KEYS[key][0]
            try:
                v[key] = None if raw is None else typ(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        if v["mode"] not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {v['mode']!r}")
        if v["format"] not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {v['format']!r}")
        if not (v["step"] > 0 and math.isfinite(v["step"])):
            raise ConfigError(f"step must be positive, got {v['step']}")
        if not v["tol"] > 0:
            raise ConfigError(f"tol must be positive, got {v['tol']}")
        if v["sign"] not in (1, -1):
            raise ConfigError(f"sign must be +1 or -1, got {v['sign']}")
        if v["mode"] in ("evolve_wk", "closed_form") and v["c"] is None:
            raise ConfigError(f"mode {v['mode']} needs c")
        if v["mode"] == "verify" and v["input"] is None:
            raise ConfigError("mode verify needs input")
        if v["omega"] is not None and not v["omega"] > 0:
            raise ConfigError(f"omega must be positive, got {v['omega']}")
        if not v["local_tol"] > 0:
            raise ConfigError(f"local_tol must be positive, got {v['local_tol']}")
        if v["s_count"] < 1:
            raise ConfigError("s_count must be >= 1")
        params = ModelParams(
            v["parity"], v["m"], v["a"], v["lambda_m"], v["lambda_q"], v["epsilon"], v["norm"]
        )
        out = v["out"] or f"{v['mode']}.{v['format']}"
        return cls(
            mode=v["mode"],
            params=params,
            sign=v["sign"],
            c=v["c"],
            t_end=v["t_end"],
            step=v["step"],
            omega=v["omega"],
            tolerance=v["tol"],
            output_path=Path(out),
            format=v["format"],
            input_path=Path(v["input"]) if v["input"] else None,
            s_max=v["s_max"],
            s_count=v["s_count"],
            f_bound=v["f_bound"],
            local_tol=v["local_tol"],
        )


def read_config_file(path) -> dict:
    """Flat ``key = value`` text; blank lines and ``#`` comments are ignored."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wpdirac",
        description="Evolve and verify Einstein-Dirac solutions on warped products M x R.",
    )
    parser.add_argument("--config", help="flat key = value config file; flags override it")
    parser.add_argument("--mode", choices=MODES)
    parser.add_argument("--parity", choices=("even", "odd"))
    parser.add_argument("--m", type=int)
    parser.add_argument("--a", type=float, help="warp exponent")
    parser.add_argument("--lambda-m", type=float, help="Killing parameter of the base spinor")
    parser.add_argument("--lambda-q", type=float, help="Dirac eigenvalue")
    parser.add_argument("--epsilon", type=int, choices=(1, -1))
    parser.add_argument("--norm", type=float, help="norm-square P of the base spinor")
    parser.add_argument("--sign", type=int, choices=(1, -1), help="sign of f_t(0)")
    parser.add_argument("--c", type=float, help="warp rate f_t(0) for WK / closed-form modes")
    parser.add_argument("--t-end", type=float)
    parser.add_argument("--step", type=float)
    parser.add_argument("--omega", type=float, help="reparametrization window")
    parser.add_argument("--tol", type=float, help="residual tolerance")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--input", help="trajectory file for verify mode")
    parser.add_argument("--s-max", type=float, help="reparam grid half-width in s")
    parser.add_argument("--s-count", type=int, help="number of reparam grid points")
    parser.add_argument("--f-bound", type=float, help="blow-up threshold on |f| and |f_t|")
    parser.add_argument("--local-tol", type=float, help="largest relative local error a step may make")
    return parser


PARAM_KEYS = ("parity", "m", "a", "lambda_m", "lambda_q", "epsilon", "norm")


def load_config(argv=None) -> tuple[RunConfig, bool]:
    """Merge config file and flags. Also reports whether any model parameter
    was given, so verify can fall back to the parameters stored in a JSON file."""
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for key in KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return RunConfig.from_mapping(values), any(k in values for k in PARAM_KEYS)


def _report_path(out: Path) -> Path:
    return out.with_name(out.stem + ".report.json")


def _write_report(cfg: RunConfig, report: ResidualReport, info: dict) -> None:
    doc = {"mode": cfg.mode, **info, "residuals": report.to_dict()}
    path = _report_path(cfg.output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _summary(cfg: RunConfig, termination, window, report: ResidualReport) -> str:
    parts = [f"{cfg.mode}: termination={termination}", f"window={window:.6g}"]
    for key, value in report.carried().items():
        parts.append(f"max|{key}|={value:.3e}")
    parts.append("PASS" if report.passed else "FAIL")
    return " ".join(parts)


def _finish(cfg, termination, window, report, info) -> int:
    _write_report(cfg, report, {"termination": str(termination), "window": window, **info})
    print(_summary(cfg, termination, window, report))
    if termination.cause is not Cause.REACHED_END:
        return EXIT_BLOWUP
    return EXIT_OK if report.passed else EXIT_RESIDUAL


def run_evolve(cfg: RunConfig) -> int:
    p = cfg.params
    if cfg.mode == "evolve_wk":
        system = wk_system(p, cfg.c)
        state0 = initial_state_wk(p, cfg.c)
    else:
        system = einstein_system(p)
        state0 = initial_state(p, cfg.sign)
    traj = integrate(system, state0, cfg.t_end, cfg.step, f_bound=cfg.f_bound, local_tol=cfg.local_tol)
    write_trajectory(traj, cfg.output_path, cfg.format)
    report = verify_trajectory(traj, cfg.tolerance)
    return _finish(cfg, traj.termination, traj.resolved_window, report, {"output": str(cfg.output_path)})


def run_closed_form(cfg: RunConfig) -> int:
    p = cfg.params
    rows, termination = [], Termination(Cause.REACHED_END)
    for t in _grid(0.0, cfg.t_end, cfg.step):
        try:
            w = closed_form_f(p, cfg.c, float(t))
            s = closed_form_scalar(p, cfg.c, float(t))
        except OutOfDomain as exc:
            termination = Termination(Cause.DOMAIN_EXIT, exc.t_critical)
            break
        rows.append((t, w.f, w.f_t, w.f_tt, s))
    data = np.array(rows, dtype=float).reshape(-1, 5)
    header = ["t", "f", "f_t", "f_tt", "S"]
    meta = {"params": p.to_dict(), "c": cfg.c, "termination": str(termination)}
    write_table(cfg.output_path, header, data, cfg.format, meta)
    A, _ = warp_hypothesis_residuals(GeometrySample(data[:, 1], data[:, 2], data[:, 3]), 0.0, p)
    report = ResidualReport(None, None, None, None, float(np.max(np.abs(A), initial=0.0)), cfg.tolerance)
    window = float(abs(data[-1, 0])) if len(data) else 0.0
    return _finish(cfg, termination, window, report, {"output": str(cfg.output_path)})


def run_verify(cfg: RunConfig, explicit_params: bool) -> int:
    params = cfg.params if (explicit_params or cfg.input_path.suffix != ".json") else None
    kind = "wk" if cfg.c is not None else None
    traj = read_trajectory(cfg.input_path, params, kind=kind, c=cfg.c)
    report = verify_trajectory(traj, cfg.tolerance)
    _write_report(cfg, report, {"input": str(cfg.input_path)})
    print(_summary(cfg, traj.termination, traj.resolved_window, report))
    return EXIT_OK if report.passed else EXIT_RESIDUAL


def run_reparam(cfg: RunConfig) -> int:
    p = cfg.params
    system = einstein_system(p)
    state0 = initial_state(p, cfg.sign)
    fwd = integrate(system, state0, abs(cfg.t_end), cfg.step, f_bound=cfg.f_bound, local_tol=cfg.local_tol)
    bwd = integrate(system, state0, -abs(cfg.t_end), cfg.step, f_bound=cfg.f_bound, local_tol=cfg.local_tol)
    window = min(fwd.resolved_window, bwd.resolved_window)
    omega = cfg.omega if cfg.omega is not None else 0.8 * window
    s_grid = np.linspace(-cfg.s_max, cfg.s_max, cfg.s_count) if cfg.s_count > 1 else np.array([0.0])
    glob = pullback_trajectory(fwd, omega, s_grid, backward=bwd)
    write_trajectory(glob, cfg.output_path, cfg.format)
    res = trajectory_residuals(glob)
    drift = float(np.max(np.abs(res.charge - res.charge[0])))
    report = ResidualReport(
        hamiltonian=float(np.max(np.abs(res.hamiltonian))),
        einstein_tan=float(np.max(np.abs(res.einstein_tan))),
        einstein_normal=float(np.max(np.abs(res.einstein_normal))),
        charge_drift=drift if p.is_even else None,
        wk_A=None,
        tolerance=cfg.tolerance,
    )
    info = {"omega": omega, "interpolation_error": glob.interpolation_error, "output": str(cfg.output_path)}
    print(f"reparam: omega={omega:.6g} interpolation_error={glob.interpolation_error:.3e}")
    shorter = fwd if fwd.resolved_window <= bwd.resolved_window else bwd
    return _finish(cfg, shorter.termination, window, report, info)


def run(cfg: RunConfig, explicit_params: bool = True) -> int:
    if cfg.mode in ("evolve_einstein", "evolve_wk"):
        return run_evolve(cfg)
    if cfg.mode == "closed_form":
        return run_closed_form(cfg)
    if cfg.mode == "verify":
        return run_verify(cfg, explicit_params)
    return run_reparam(cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, explicit = load_config(argv)
        return run(cfg, explicit)
    except (ValueError, OSError) as exc:
        # every package error (bad params, inadmissible data, window) is a ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
