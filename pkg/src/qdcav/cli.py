"""Command-line front end.

Reads a JSON run configuration, dispatches one scenario, and writes
deterministic CSV curves plus a JSON sidecar that is sufficient to repeat
the run. Numeric CSV cells use 17 significant digits, '.' decimals and
'\\n' line endings so identical inputs give identical bytes.

Exit codes: 0 success, 2 configuration error, 3 numerical invariant
failure during simulation.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .drive import (
    DriveComponent,
    DriveSpec,
    OpticalCalibration,
    cw_power_to_amplitude,
    pulsed_power_to_peak_amplitude,
    wavelength_detuning_to_ghz,
)
from .dynamics import SystemParams, TimeGrid, max_stable_dt
from .hilbert import InvariantViolation
from .series import SweepCurve, TimeSeries
from . import scenarios as sc


class ConfigError(Exception):
    pass


SCENARIO_NAMES = (
    "spectrum",
    "pl-decay",
    "cw-pulse",
    "detuned-control",
    "two-pulse",
    "saturation",
    "nonlinear-map",
    "eigenfrequencies",
)

# per-scenario knob block: (block name, required fields, optional defaults)
_BLOCK = {
    "spectrum": (
        "drive",
        (),
        {
            "amplitude": None,
            "power_nw": None,
            "detuning_min_ghz": -60.0,
            "detuning_max_ghz": 60.0,
            "n_points": 241,
            "check_weak_drive": False,
        },
    ),
    "pl-decay": (
        "response",
        (),
        {"tau_rise_ns": 0.010, "irf_fwhm_ns": 0.003},
    ),
    "cw-pulse": (
        "drive",
        ("cw_power_nw", "pulse_power_nw"),
        {
            "pulse_fwhm_ns": 0.040,
            "pulse_center_ns": 0.3,
            "control_detuning_nm": 0.0,
            "k_phases": 8,
        },
    ),
    "detuned-control": (
        "drive",
        ("cw_power_nw", "pulse_power_nw", "control_detuning_nm"),
        {"pulse_fwhm_ns": 0.040, "pulse_center_ns": 0.3, "k_phases": 8},
    ),
    "two-pulse": (
        "drive",
        ("per_pulse_power_nw",),
        {
            "fwhm_ns": 0.040,
            "delay_min_ns": 0.0,
            "delay_max_ns": 0.4,
            "delay_step_ns": 0.02,
            "k_phases": 8,
            "gamma_d_values": None,
        },
    ),
    "saturation": (
        "drive",
        ("powers_nw",),
        {
            "fwhm_ns": 0.040,
            "detuning_min_ghz": -60.0,
            "detuning_max_ghz": 60.0,
            "n_points": 121,
        },
    ),
    "nonlinear-map": (
        "drive",
        ("signal_powers_nw",),
        {"multipliers": [1, 2, 3, 4, 5], "k_phases": 8},
    ),
    "eigenfrequencies": (
        "sweep",
        (),
        {"delta_min_ghz": -100.0, "delta_max_ghz": 100.0, "n_points": 201},
    ),
}

_SYSTEM_DEFAULTS = {
    "gamma_d": 0.0,
    "delta_c": 0.0,
    "delta_d": 0.0,
    "n_max": 7,
}
_CAL_DEFAULTS = {"eta": 0.03, "wavelength_nm": 927.0, "repetition_rate_ghz": 0.08}
_SOLVER_DEFAULTS = {"method": "master", "n_traj": 2000}


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_curve_csv(path: Path, curve) -> None:
    """One curve per file: leading axis column, then the curve's channels."""
    if isinstance(curve, TimeSeries):
        axis_name, axis = "time_ns", curve.times
    elif isinstance(curve, SweepCurve):
        axis_name, axis = curve.x_name, curve.x
    else:
        raise TypeError(f"cannot serialize {type(curve).__name__}")
    names = list(curve.channels)
    lines = [",".join([axis_name] + names)]
    columns = [axis] + [curve.channels[n] for n in names]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="")


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse failure at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def apply_overrides(cfg: dict, assignments: list[str]) -> dict:
    """Apply dotted-path key=value strings; values parse as JSON when possible."""
    out = copy.deepcopy(cfg)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return out


def _merged_block(cfg: dict, name: str, required, defaults) -> dict:
    block = cfg.get(name, {})
    if not isinstance(block, dict):
        raise ConfigError(f"block {name!r} must be an object")
    for field in required:
        if field not in block:
            raise ConfigError(f"missing required field {name}.{field}")
    out = dict(defaults)
    out.update(block)
    return out


def resolve_config(cfg: dict) -> dict:
    """Fill defaults and check the schema; returns the fully resolved config."""
    scenario = cfg.get("scenario")
    if scenario is None:
        raise ConfigError("missing required field scenario")
    if scenario not in SCENARIO_NAMES:
        raise ConfigError(
            f"unknown scenario {scenario!r}; choices: {', '.join(SCENARIO_NAMES)}"
        )
    system = cfg.get("system")
    if not isinstance(system, dict):
        raise ConfigError("missing required field system")
    for field in ("g", "kappa", "gamma"):
        if field not in system:
            raise ConfigError(f"missing required field system.{field}")
    resolved = {
        "scenario": scenario,
        "system": {**_SYSTEM_DEFAULTS, **system},
        "calibration": _merged_block(cfg, "calibration", (), _CAL_DEFAULTS),
        "solver": _merged_block(cfg, "solver", (), _SOLVER_DEFAULTS),
        "seed": cfg.get("seed"),
        "grid": cfg.get("grid"),
    }
    block_name, required, defaults = _BLOCK[scenario]
    resolved[block_name] = _merged_block(cfg, block_name, required, defaults)
    if resolved["solver"]["method"] not in ("master", "trajectories"):
        raise ConfigError(
            f"solver.method must be master or trajectories, got "
            f"{resolved['solver']['method']!r}"
        )
    if resolved["solver"]["method"] == "trajectories" and resolved["seed"] is None:
        raise ConfigError("seed is required when solver.method is trajectories")
    if scenario == "spectrum":
        drv = resolved["drive"]
        if (drv["amplitude"] is None) == (drv["power_nw"] is None):
            raise ConfigError(
                "spectrum drive needs exactly one of drive.amplitude, drive.power_nw"
            )
    return resolved


def _system(resolved: dict) -> SystemParams:
    s = resolved["system"]
    try:
        return SystemParams(
            g=float(s["g"]),
            kappa=float(s["kappa"]),
            gamma=float(s["gamma"]),
            gamma_d=float(s["gamma_d"]),
            delta_c=float(s["delta_c"]),
            delta_d=float(s["delta_d"]),
            n_max=int(s["n_max"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad system block: {exc}") from exc


def _calibration(resolved: dict) -> OpticalCalibration:
    c = resolved["calibration"]
    try:
        return OpticalCalibration(
            eta=float(c["eta"]),
            wavelength_nm=float(c["wavelength_nm"]),
            repetition_rate_ghz=float(c["repetition_rate_ghz"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad calibration block: {exc}") from exc


def _grid(resolved: dict) -> TimeGrid | None:
    block = resolved["grid"]
    if block is None:
        return None
    try:
        n_steps = int(block["n_steps"])
        if n_steps <= 0:
            return None  # auto per scenario
        return TimeGrid(float(block["t_start"]), float(block["t_end"]), n_steps)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid block: {exc}") from exc


def _linspace(lo, hi, n) -> np.ndarray:
    if int(n) < 2:
        raise ConfigError("sweep needs n_points >= 2")
    if not hi > lo:
        raise ConfigError("sweep needs max > min")
    return np.linspace(float(lo), float(hi), int(n))


def _run_spectrum(resolved, threads):
    params = _system(resolved)
    drv = resolved["drive"]
    if drv["amplitude"] is not None:
        amp = float(drv["amplitude"])
    else:
        amp = cw_power_to_amplitude(float(drv["power_nw"]), _calibration(resolved))
    det = _linspace(drv["detuning_min_ghz"], drv["detuning_max_ghz"], drv["n_points"])
    curve = sc.spectrum_scan(params, amp, det, bool(drv["check_weak_drive"]))
    return {"scan": curve}


def _run_pl_decay(resolved, threads):
    params = _system(resolved)
    r = resolved["response"]
    grid = _grid(resolved)
    if grid is None:
        gate = max_stable_dt(params)
        grid = TimeGrid(0.0, 0.1, int(np.ceil(0.1 / (gate / 3.0))))
    series = sc.pl_decay(
        params, float(r["tau_rise_ns"]), float(r["irf_fwhm_ns"]), grid
    )
    return {"trace": series}


def _run_cw_pulse(resolved, threads):
    params = _system(resolved)
    cal = _calibration(resolved)
    drv = resolved["drive"]
    det_nm = float(drv["control_detuning_nm"])
    det_ghz = (
        wavelength_detuning_to_ghz(det_nm, cal.wavelength_nm) if det_nm else 0.0
    )
    solver = resolved["solver"]
    runs = sc.cw_pulse_switch(
        params,
        float(drv["cw_power_nw"]),
        float(drv["pulse_power_nw"]),
        cal,
        control_detuning_ghz=det_ghz,
        pulse_center_ns=float(drv["pulse_center_ns"]),
        pulse_fwhm_ns=float(drv["pulse_fwhm_ns"]),
        k_phases=int(drv["k_phases"]),
        grid=_grid(resolved),
        solver=solver["method"],
        n_traj=int(solver["n_traj"]),
        master_seed=resolved["seed"],
        n_workers=threads,
    )
    return runs


def _run_two_pulse(resolved, threads):
    params = _system(resolved)
    cal = _calibration(resolved)
    drv = resolved["drive"]
    step = float(drv["delay_step_ns"])
    if step <= 0:
        raise ConfigError("drive.delay_step_ns must be > 0")
    delays = np.arange(
        float(drv["delay_min_ns"]), float(drv["delay_max_ns"]) + step / 2, step
    )
    gd_values = drv["gamma_d_values"]
    if gd_values is None:
        gd_values = [params.gamma_d]
    out = {}
    for gd in gd_values:
        curve = sc.two_pulse_sweep(
            params,
            float(drv["per_pulse_power_nw"]),
            cal,
            float(drv["fwhm_ns"]),
            delays,
            gamma_d=float(gd),
            k_phases=int(drv["k_phases"]),
            grid=_grid(resolved),
        )
        out[f"gd{gd:g}".replace(".", "p")] = curve
    return out


def _run_saturation(resolved, threads):
    params = _system(resolved)
    cal = _calibration(resolved)
    drv = resolved["drive"]
    det = _linspace(drv["detuning_min_ghz"], drv["detuning_max_ghz"], drv["n_points"])
    powers = [float(p) for p in drv["powers_nw"]]
    curves, contrasts = sc.saturation_scan(
        params, powers, cal, det, float(drv["fwhm_ns"])
    )
    out = {}
    for p_nw, curve in zip(powers, curves):
        out[f"p{p_nw:g}".replace(".", "p")] = curve
    out["contrast"] = SweepCurve(
        "power_nw", np.array(powers), {"contrast": contrasts}
    )
    return out


def _run_nonlinear_map(resolved, threads):
    params = _system(resolved)
    cal = _calibration(resolved)
    drv = resolved["drive"]
    grid = sc.nonlinear_map(
        params,
        [float(p) for p in drv["signal_powers_nw"]],
        [float(m) for m in drv["multipliers"]],
        cal,
        k_phases=int(drv["k_phases"]),
    )
    # multiplier-major long format
    m_col, p_col, r_col = [], [], []
    for i, m in enumerate(grid.multipliers):
        for j, p_nw in enumerate(grid.signal_powers_nw):
            m_col.append(m)
            p_col.append(p_nw)
            r_col.append(grid.ratio[i, j])
    curve = SweepCurve(
        "multiplier",
        np.array(m_col),
        {"signal_power_nw": np.array(p_col), "ratio": np.array(r_col)},
    )
    return {"map": curve}


def _run_eigenfrequencies(resolved, threads):
    params = _system(resolved)
    sw = resolved["sweep"]
    det = _linspace(sw["delta_min_ghz"], sw["delta_max_ghz"], sw["n_points"])
    return {"curve": sc.polariton_sweep(params, det)}


_RUNNERS = {
    "spectrum": _run_spectrum,
    "pl-decay": _run_pl_decay,
    "cw-pulse": _run_cw_pulse,
    "detuned-control": _run_cw_pulse,
    "two-pulse": _run_two_pulse,
    "saturation": _run_saturation,
    "nonlinear-map": _run_nonlinear_map,
    "eigenfrequencies": _run_eigenfrequencies,
}


def run_scenario(resolved: dict, out_dir: Path, threads: int) -> list[Path]:
    """Execute one resolved config; returns the files written."""
    curves = _RUNNERS[resolved["scenario"]](resolved, threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    scenario = resolved["scenario"]
    for name, curve in curves.items():
        path = out_dir / f"{scenario}_{name}.csv"
        write_curve_csv(path, curve)
        written.append(path)
    meta = {
        "scenario": scenario,
        "version": __version__,
        "seed": resolved["seed"],
        "config": resolved,
        "files": [p.name for p in written],
    }
    meta_path = out_dir / f"{scenario}_meta.json"
    meta_path.write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", newline=""
    )
    written.append(meta_path)
    return written


def validate_config(cfg: dict) -> tuple[list[str], list[str]]:
    """Schema and range checks without running anything.

    Returns (violations, notes). Notes carry the informational gates.
    """
    violations: list[str] = []
    notes: list[str] = []
    try:
        resolved = resolve_config(cfg)
    except ConfigError as exc:
        return [str(exc)], notes

    s = resolved["system"]
    for field in ("g", "kappa", "gamma", "gamma_d"):
        v = s[field]
        if not isinstance(v, (int, float)) or not np.isfinite(v) or v < 0:
            violations.append(f"system.{field} must be a finite rate >= 0, got {v!r}")
    for field in ("delta_c", "delta_d"):
        v = s[field]
        if not isinstance(v, (int, float)) or not np.isfinite(v):
            violations.append(f"system.{field} must be finite, got {v!r}")
    if not isinstance(s["n_max"], int) or s["n_max"] < 1:
        violations.append(f"system.n_max must be an integer >= 1, got {s['n_max']!r}")
    c = resolved["calibration"]
    if not 0.0 < c["eta"] <= 1.0:
        violations.append(f"calibration.eta must be in (0, 1], got {c['eta']!r}")
    if c["wavelength_nm"] <= 0:
        violations.append("calibration.wavelength_nm must be > 0")
    if c["repetition_rate_ghz"] <= 0:
        violations.append("calibration.repetition_rate_ghz must be > 0")
    if resolved["solver"]["n_traj"] < 1:
        violations.append("solver.n_traj must be >= 1")

    if not violations:
        params = _system(resolved)
        notes.append(f"strong coupling gate: {params.is_strongly_coupled}")
        gate = max_stable_dt(params)
        notes.append(f"undriven stability gate: dt <= {gate:.6g} ns")
        block = resolved["grid"]
        if block and int(block.get("n_steps", 0)) > 0:
            try:
                grid = TimeGrid(
                    float(block["t_start"]),
                    float(block["t_end"]),
                    int(block["n_steps"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                violations.append(f"bad grid block: {exc}")
            else:
                if grid.dt > gate:
                    violations.append(
                        f"grid dt {grid.dt:.6g} ns exceeds the undriven stability "
                        f"gate {gate:.6g} ns (drives tighten it further)"
                    )
                else:
                    notes.append(f"grid dt {grid.dt:.6g} ns passes the undriven gate")
        else:
            notes.append("grid: auto (sized from the stability gate at run time)")
    return violations, notes


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdcav", description="dot-cavity switching simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="dotted-path override, repeatable (e.g. system.g=21.2)",
        )
        if name == "run":
            p.add_argument("--out", default=".", help="output directory")
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--threads", type=int, default=1)
    sub.add_parser("list-scenarios")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name in SCENARIO_NAMES:
            print(name)
        return 0
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args.overrides)
        if args.command == "validate":
            violations, notes = validate_config(cfg)
            for line in violations:
                print(f"violation: {line}")
            for line in notes:
                print(f"note: {line}")
            print("invalid" if violations else "valid")
            return 2 if violations else 0
        if args.seed is not None:
            cfg["seed"] = args.seed
        resolved = resolve_config(cfg)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        written = run_scenario(resolved, Path(args.out), args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvariantViolation, RuntimeError) as exc:
        print(f"numerical invariant failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
