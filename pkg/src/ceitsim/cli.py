"""Command-line entry point: JSON run configs in, deterministic CSV + meta out.

Exit codes: 0 success, 2 invalid configuration, 3 solver/fit failure,
4 inversion outside the calibrated range. Output files are written only after
the computation finished, so a failing run leaves no partial files. Floats are
serialized with 17 significant digits so identical runs produce byte-identical
CSVs.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import build_liouvillian, convergence_check, expect, steady_state
from .errors import (CalibrationError, CeitError, ConfigError, FitError,
                     InversionRangeError, NoCentralPeakError, SolverError)
from .hilbert import SpaceDims, build_space
from .model import SystemParams, dissipators, hamiltonian_noneit, hamiltonian_thermal
from .spectrum import (analytic_linewidth, analytic_transmission,
                       compare_thermal_nonthermal, default_grid, eit_linewidth,
                       linewidth_map_2d, sweep_spectrum)
from .thermometry import (CalibrationCurve, build_calibration,
                          default_temperature_grid, invert_linewidth,
                          multiion_calibration, multiion_linewidth_scan,
                          nbar_from_temperature, suggested_phonon_cutoff,
                          _longest_increasing_run)
from .sideband import (PulseSequence, RatioResult, SidebandTrajectory,
                       bsb_rabi_trace, fit_rabi_frequency, run_cooling_sequence,
                       sideband_ratio, two_level_space, fock_state)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_RANGE = 4


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{float(x):.16e}"


def _fmt_int(x) -> str:
    return str(int(x))


def _write_csv(path: Path, header: list[str], rows: list[list[str]]):
    lines = [",".join(header)]
    lines += [",".join(row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_meta(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- validation

_PARAM_FIELDS = {
    "kappa": float, "g": float, "omega_c": float, "gamma_eg": float,
    "gamma_eu": float, "gamma_b": float, "n_th": float, "eta": float,
    "epsilon": float, "delta_p": float, "n_ions": int, "omega_sec": float,
}


def _check_type(value, typ, path):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("expected a number", path)
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("expected an integer", path)
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError("expected a string", path)
        return value
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError("expected a boolean", path)
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError("expected a list", path)
        return value
    if typ is dict:
        if not isinstance(value, dict):
            raise ConfigError("expected an object", path)
        return value
    raise AssertionError(typ)


def _take(cfg: dict, schema: dict, path: str, required=()) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("expected an object", path)
    unknown = set(cfg) - set(schema)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", path)
    for key in required:
        if key not in cfg:
            raise ConfigError("missing required key", f"{path}.{key}")
    return {k: _check_type(v, schema[k], f"{path}.{k}") for k, v in cfg.items()}


def _float_list(values, path, positive=False) -> list[float]:
    values = _check_type(values, list, path)
    if not values:
        raise ConfigError("list must not be empty", path)
    out = []
    for i, v in enumerate(values):
        out.append(_check_type(v, float, f"{path}[{i}]"))
    if positive and any(v <= 0 for v in out):
        raise ConfigError("all values must be > 0", path)
    return out


def _parse_params(cfg: dict, path="config.params") -> SystemParams:
    fields = _take(cfg, _PARAM_FIELDS, path)
    try:
        return SystemParams(**fields)
    except (ValueError, CeitError) as exc:
        raise ConfigError(str(exc), path) from exc


def _parse_dims(cfg: dict | None, p: SystemParams, path="config.cutoffs") -> SpaceDims:
    photon, phonon = 3, suggested_phonon_cutoff(p.n_th)
    if cfg is not None:
        got = _take(cfg, {"photon": int, "phonon": int}, path)
        photon = got.get("photon", photon)
        phonon = got.get("phonon", phonon)
    try:
        return SpaceDims(3, photon, phonon)
    except CeitError as exc:
        raise ConfigError(str(exc), path) from exc


_GRID_SCHEMA = {"n_points": int, "span_factor": float, "span": float}


def _parse_grid(cfg: dict | None, p: SystemParams, model: str, path="config.grid"):
    n_points, span_factor, span = 401, 2.5, None
    if cfg is not None:
        got = _take(cfg, _GRID_SCHEMA, path)
        n_points = got.get("n_points", n_points)
        span_factor = got.get("span_factor", span_factor)
        span = got.get("span")
    if n_points < 16:
        raise ConfigError("n_points must be at least 16", f"{path}.n_points")
    if span is not None:
        if span <= 0:
            raise ConfigError("span must be > 0", f"{path}.span")
        return np.linspace(-span, span, n_points), n_points, span_factor
    return default_grid(p, model, n_points, span_factor), n_points, span_factor


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("top-level config must be an object")
    return cfg


def _meta_common(command: str, cfg: dict, p: SystemParams | None, extra: dict) -> dict:
    meta = {"command": command, "version": __version__, "config": cfg}
    if p is not None:
        meta["resolved_params"] = {
            "kappa": p.kappa, "g": p.g, "omega_c": p.omega_c,
            "gamma_eg": p.gamma_eg, "gamma_eu": p.gamma_eu, "gamma_b": p.gamma_b,
            "n_th": p.n_th, "eta": p.eta, "epsilon": p.epsilon,
            "delta_p": p.delta_p, "n_ions": p.n_ions, "omega_sec": p.omega_sec,
            "dims": [p.dims.n_atom, p.dims.n_photon, p.dims.n_phonon],
        }
    meta.update(extra)
    return meta


def _resonant_output(p: SystemParams) -> float:
    space = build_space(p.dims)
    p0 = p.replace(delta_p=0.0)
    L = build_liouvillian(hamiltonian_thermal(p0, space), dissipators(p0, space))
    rho = steady_state(L)
    return p.kappa * expect(space.number_photon(), rho).real


# ---------------------------------------------------------------- commands

_SPECTRUM_SCHEMA = {"params": dict, "model": str, "cutoffs": dict, "grid": dict,
                    "workers": int, "convergence_check": bool}


def cmd_spectrum(cfg: dict, out: Path) -> int:
    got = _take(cfg, _SPECTRUM_SCHEMA, "config", required=("params",))
    model = got.get("model", "thermal")
    if model not in ("thermal", "noneit"):
        raise ConfigError("model must be 'thermal' or 'noneit'", "config.model")
    p = _parse_params(got["params"])
    dims = _parse_dims(got.get("cutoffs"), p)
    if model == "noneit" and "cutoffs" not in got:
        dims = SpaceDims(3, dims.n_photon, 1)
    p = p.replace(dims=dims)
    grid, n_points, span_factor = _parse_grid(got.get("grid"), p, model)
    workers = got.get("workers")

    s = sweep_spectrum(p, grid=grid, model=model, n_workers=workers)
    try:
        central_fwhm = eit_linewidth(p, model=model, spectrum=s)
    except CeitError:
        central_fwhm = None
    conv = None
    if got.get("convergence_check"):
        report = convergence_check(p, _resonant_output, "resonant cavity output")
        conv = {"observable": report.label, "base_value": report.base_value,
                "doubled_value": report.doubled_value,
                "rel_change": report.rel_change, "passed": report.passed,
                "base_dims": list(report.base_dims.__dict__.values()),
                "doubled_dims": list(report.doubled_dims.__dict__.values())}

    rows = [[_fmt(d), _fmt(raw), _fmt(norm)]
            for d, raw, norm in zip(s.detunings, s.transmission, s.normalized)]
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "spectrum.csv",
               ["detuning_mhz", "transmission_raw", "transmission_normalized"], rows)
    _write_meta(out / "meta.json", _meta_common("spectrum", cfg, p, {
        "model": model,
        "central_fwhm_mhz": central_fwhm,
        "grid": {"n_points": n_points, "span_factor": span_factor,
                 "lo": float(grid[0]), "hi": float(grid[-1])},
        "normalization": {"reference": "resonant empty-cavity output epsilon^2/kappa",
                          "value_mhz": s.normalization,
                          "empty_cavity_fwhm_mhz": 2.0 * p.kappa},
        "convergence": conv,
    }))
    return EXIT_OK


_ANALYTIC_SCHEMA = {"params": dict, "mode": str, "grid": dict,
                    "omega_c_grid": list, "temps_k": list, "cutoffs": dict,
                    "n_points": int}


def cmd_analytic(cfg: dict, out: Path) -> int:
    got = _take(cfg, _ANALYTIC_SCHEMA, "config", required=("params",))
    mode = got.get("mode", "curve")
    p = _parse_params(got["params"])
    out_rows: list[list[str]] = []
    if mode == "curve":
        p = p.replace(dims=SpaceDims(3, 3, 1))
        grid, n_points, span_factor = _parse_grid(got.get("grid"), p, "noneit")
        curve = analytic_transmission(p, grid)
        rows = [[_fmt(d), _fmt(t)] for d, t in zip(grid, curve)]
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "analytic.csv", ["detuning_mhz", "transmission"], rows)
        _write_meta(out / "meta.json", _meta_common("analytic", cfg, p, {
            "mode": mode, "fwhm_mhz": analytic_linewidth(p),
            "grid": {"n_points": n_points, "span_factor": span_factor},
        }))
        return EXIT_OK
    if mode != "compare":
        raise ConfigError("mode must be 'curve' or 'compare'", "config.mode")
    omega_grid = _float_list(got.get("omega_c_grid"), "config.omega_c_grid", positive=True) \
        if got.get("omega_c_grid") is not None else None
    if omega_grid is None:
        raise ConfigError("missing required key", "config.omega_c_grid")
    temps = _float_list(got.get("temps_k"), "config.temps_k", positive=True) \
        if got.get("temps_k") is not None else None
    if temps is None:
        raise ConfigError("missing required key", "config.temps_k")
    dims = _parse_dims(got.get("cutoffs"), p)
    p = p.replace(dims=dims)
    rows_model = compare_thermal_nonthermal(p, omega_grid, temps,
                                            n_points=got.get("n_points", 161))
    for r in rows_model:
        out_rows.append([_fmt(r.omega_c), _fmt(r.fwhm_analytic), _fmt(r.fwhm_noneit),
                         _fmt(r.temperature), _fmt(r.n_th), _fmt(r.fwhm_thermal)])
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "compare.csv",
               ["omega_c_mhz", "fwhm_analytic_mhz", "fwhm_noneit_mhz",
                "temperature_k", "n_th", "fwhm_thermal_mhz"], out_rows)
    _write_meta(out / "meta.json", _meta_common("analytic", cfg, p, {"mode": mode}))
    return EXIT_OK


_CALIBRATE_SCHEMA = {"params": dict, "temps_k": list, "temp_range": dict,
                     "cutoffs": dict, "n_points": int, "span_factor": float,
                     "workers": int}


def _parse_cutoffs_with_fn(got: dict, p: SystemParams):
    """Resolve dims plus the per-occupancy phonon-cutoff rule.

    An explicit phonon cutoff in the config pins the cutoff for every
    temperature; otherwise the occupancy-dependent default is used.
    """
    dims = _parse_dims(got.get("cutoffs"), p)
    fixed = (got.get("cutoffs") or {}).get("phonon")
    cutoff_fn = (lambda n: fixed) if fixed else suggested_phonon_cutoff
    return p.replace(dims=dims), cutoff_fn


def _parse_temps(got: dict) -> np.ndarray:
    if "temps_k" in got:
        temps = np.asarray(_float_list(got["temps_k"], "config.temps_k",
                                       positive=True))
        if np.any(np.diff(temps) <= 0):
            raise ConfigError("temperatures must be strictly increasing",
                              "config.temps_k")
        return temps
    if "temp_range" in got:
        rng = _take(got["temp_range"],
                    {"low_k": float, "high_k": float, "points_per_decade": int},
                    "config.temp_range", required=("low_k", "high_k"))
        return default_temperature_grid(rng["low_k"], rng["high_k"],
                                        rng.get("points_per_decade", 24))
    raise ConfigError("need temps_k or temp_range", "config")


def cmd_calibrate(cfg: dict, out: Path) -> int:
    got = _take(cfg, _CALIBRATE_SCHEMA, "config", required=("params",))
    p, cutoff_fn = _parse_cutoffs_with_fn(got, _parse_params(got["params"]))
    temps = _parse_temps(got)
    curve = build_calibration(p, temps, n_points=got.get("n_points", 161),
                              span_factor=got.get("span_factor", 2.5),
                              phonon_cutoff=cutoff_fn,
                              n_workers=got.get("workers"))
    rows = [[_fmt(t), _fmt(nb), _fmt(nbs), _fmt(w)]
            for t, nb, nbs, w in zip(curve.temps, curve.nbars,
                                     curve.nbars_steady, curve.linewidths)]
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "calibration.csv",
               ["temperature_k", "n_th", "nbar_steady", "fwhm_mhz"], rows)
    _write_meta(out / "meta.json", _meta_common("calibrate", cfg, p, {
        "monotone_range": list(curve.monotone_range),
        "linewidth_span_mhz": list(curve.linewidth_span),
        "failures": curve.failures,
        "normalization": {"empty_cavity_fwhm_mhz": 2.0 * p.kappa},
    }))
    return EXIT_OK


_INVERT_SCHEMA = {"calibration_csv": str, "measured_fwhm_mhz": float}


def _load_curve(csv_path: Path) -> CalibrationCurve:
    try:
        lines = csv_path.read_text().strip().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read calibration csv: {exc}",
                          "config.calibration_csv") from exc
    header = lines[0].split(",")
    expected = ["temperature_k", "n_th", "nbar_steady", "fwhm_mhz"]
    if header != expected:
        raise ConfigError(f"calibration csv header {header} != {expected}",
                          "config.calibration_csv")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    if len(data) < 4:
        raise ConfigError("calibration csv holds fewer than 4 points",
                          "config.calibration_csv")
    meta_path = csv_path.with_name("meta.json")
    params = SystemParams()
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        rp = meta.get("resolved_params", {})
        dims = rp.pop("dims", None)
        if dims:
            rp["dims"] = SpaceDims(*dims)
        params = SystemParams(**rp) if rp else params
    mono = _longest_increasing_run(data[:, 3])
    return CalibrationCurve(params, data[:, 0], data[:, 1], data[:, 2],
                            data[:, 3], mono)


def cmd_invert(cfg: dict, out: Path) -> int:
    got = _take(cfg, _INVERT_SCHEMA, "config",
                required=("calibration_csv", "measured_fwhm_mhz"))
    curve = _load_curve(Path(got["calibration_csv"]))
    result = invert_linewidth(curve, got["measured_fwhm_mhz"])
    report = {
        "measured_fwhm_mhz": got["measured_fwhm_mhz"],
        "temperature_k": result.temperature,
        "nbar": result.nbar,
        "sensitivity_k_per_mhz": result.sensitivity,
        "flags": (["low_sensitivity"] if result.low_sensitivity else []),
        "valid_span_mhz": list(curve.linewidth_span),
    }
    out.mkdir(parents=True, exist_ok=True)
    _write_meta(out / "invert.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


_MAP2D_SCHEMA = {"params": dict, "g_grid": list, "omega_c_grid": list,
                 "n_th_values": list, "n_points": int, "cutoffs": dict}


def cmd_map2d(cfg: dict, out: Path) -> int:
    got = _take(cfg, _MAP2D_SCHEMA, "config",
                required=("params", "g_grid", "omega_c_grid", "n_th_values"))
    p = _parse_params(got["params"])
    if "cutoffs" in got:
        p = p.replace(dims=_parse_dims(got["cutoffs"], p))
    cells = linewidth_map_2d(
        p, _float_list(got["g_grid"], "config.g_grid", positive=True),
        _float_list(got["omega_c_grid"], "config.omega_c_grid", positive=True),
        _float_list(got["n_th_values"], "config.n_th_values"),
        n_points=got.get("n_points", 121))
    rows = [[_fmt(c.g), _fmt(c.omega_c), _fmt(c.n_th), _fmt(c.fwhm), _fmt(c.fwhm_ratio)]
            for c in cells]
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "map2d.csv",
               ["g_mhz", "omega_c_mhz", "n_th", "fwhm_mhz", "fwhm_ratio"], rows)
    failed = [{"g": c.g, "omega_c": c.omega_c, "n_th": c.n_th, "error": c.error}
              for c in cells if c.error]
    _write_meta(out / "meta.json", _meta_common("map2d", cfg, p, {
        "normalization": {"fwhm_ratio_reference": "empty cavity width 2*kappa",
                          "value_mhz": 2.0 * p.kappa},
        "failed_cells": failed,
    }))
    return EXIT_OK


_MULTIION_SCHEMA = {"params": dict, "n_ions": list, "temps_k": list,
                    "cutoffs": dict, "n_points": int, "workers": int}


def cmd_multiion(cfg: dict, out: Path) -> int:
    got = _take(cfg, _MULTIION_SCHEMA, "config", required=("params", "n_ions"))
    p, cutoff_fn = _parse_cutoffs_with_fn(got, _parse_params(got["params"]))
    ions = [_check_type(v, int, f"config.n_ions[{i}]")
            for i, v in enumerate(got["n_ions"])]
    n_points = got.get("n_points", 121)
    scan = multiion_linewidth_scan(p, ions, n_points=n_points,
                                   n_workers=got.get("workers"))
    rows = [[_fmt_int(pt.n_ions), _fmt(pt.g_eff), _fmt(pt.fwhm), _fmt(pt.fwhm_scaled)]
            for pt in scan]
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "multiion.csv",
               ["n_ions", "g_eff_mhz", "fwhm_mhz", "fwhm_scaled"], rows)
    extra = {"normalization": {"fwhm_scaled_reference": "empty cavity width 2*kappa",
                               "value_mhz": 2.0 * p.kappa}}
    if "temps_k" in got:
        temps = np.asarray(_float_list(got["temps_k"], "config.temps_k", positive=True))
        curves = multiion_calibration(p, ions, temps, n_points=n_points,
                                      phonon_cutoff=cutoff_fn,
                                      n_workers=got.get("workers"))
        cal_rows = []
        for n in ions:
            c = curves[n]
            for t, nb, nbs, w in zip(c.temps, c.nbars, c.nbars_steady, c.linewidths):
                cal_rows.append([_fmt_int(n), _fmt(t), _fmt(nb), _fmt(nbs), _fmt(w)])
        _write_csv(out / "multiion_calibration.csv",
                   ["n_ions", "temperature_k", "n_th", "nbar_steady", "fwhm_mhz"],
                   cal_rows)
        extra["calibration_monotone_ranges"] = {
            str(n): list(curves[n].monotone_range) for n in ions}
    _write_meta(out / "meta.json", _meta_common("multiion", cfg, p, extra))
    return EXIT_OK


_SIDEBAND_RABI_SCHEMA = {"eta": float, "omega": float, "gamma": float, "n0": int,
                         "t_max": float, "n_times": int, "n_phonon": int}
_SIDEBAND_RATIO_SCHEMA = {"eta_values": list, "n_values": list, "omega": float,
                          "gamma": float, "pulse_time": float}
_SIDEBAND_COOL_SCHEMA = {"eta": float, "omega": float, "gamma": float,
                         "steps": list, "initial_level": str,
                         "initial_phonon": int, "n_phonon": int,
                         "samples_per_step": int}


def _trace_rows(traj: SidebandTrajectory):
    n_b = traj.pop_u.shape[1]
    header = (["time_us"]
              + [f"p_u_{n}" for n in range(n_b)] + [f"p_e_{n}" for n in range(n_b)]
              + ["p_u_total", "p_e_total", "mean_n"])
    rows = []
    for i, t in enumerate(traj.times):
        row = [_fmt(t)]
        row += [_fmt(v) for v in traj.pop_u[i]]
        row += [_fmt(v) for v in traj.pop_e[i]]
        row += [_fmt(traj.pop_u_total[i]), _fmt(traj.pop_e_total[i]),
                _fmt(traj.mean_phonon[i])]
        rows.append(row)
    return header, rows


def cmd_sideband(sub: str, cfg: dict, out: Path) -> int:
    if sub == "rabi":
        got = _take(cfg, _SIDEBAND_RABI_SCHEMA, "config",
                    required=("eta", "omega", "gamma"))
        n0 = got.get("n0", 0)
        t_max = got.get("t_max", 25.0)
        times = np.linspace(0.0, t_max, got.get("n_times", 401))
        traj = run_cooling_sequence(
            PulseSequence((("bsb", t_max),), got["eta"], got["omega"], got["gamma"]),
            initial_level="u", initial_phonon=n0,
            n_phonon=got.get("n_phonon", n0 + 6), times=times)
        fit = fit_rabi_frequency(traj.times, traj.pop_e_total)
        header, rows = _trace_rows(traj)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sideband_trace.csv", header, rows)
        _write_meta(out / "meta.json", _meta_common("sideband rabi", cfg, None, {
            "fitted_coupling_mhz": fit.coupling,
            "expected_coupling_mhz": got["eta"] * got["omega"] * math.sqrt(n0 + 1.0),
            "fitted_decay_mhz": fit.decay,
        }))
        return EXIT_OK
    if sub == "ratio":
        got = _take(cfg, _SIDEBAND_RATIO_SCHEMA, "config",
                    required=("eta_values", "n_values", "omega", "gamma"))
        etas = _float_list(got["eta_values"], "config.eta_values", positive=True)
        ns = [_check_type(v, int, f"config.n_values[{i}]")
              for i, v in enumerate(got["n_values"])]
        rows = []
        for eta in etas:
            for n in ns:
                r = sideband_ratio(n, eta, got["omega"], got["gamma"],
                                   pulse_time=got.get("pulse_time"))
                rows.append([_fmt(eta), _fmt_int(n), _fmt(r.pulse_time),
                             _fmt(r.p_rsb), _fmt(r.p_bsb), _fmt(r.ratio),
                             _fmt(r.p_rsb_avg), _fmt(r.p_bsb_avg),
                             _fmt(r.ratio_avg), _fmt(r.theory)])
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sideband_ratio.csv",
                   ["eta", "n", "pulse_time_us", "p_rsb", "p_bsb", "ratio",
                    "p_rsb_avg", "p_bsb_avg", "ratio_avg", "ratio_theory"], rows)
        _write_meta(out / "meta.json", _meta_common("sideband ratio", cfg, None, {}))
        return EXIT_OK
    if sub == "cool":
        got = _take(cfg, _SIDEBAND_COOL_SCHEMA, "config",
                    required=("eta", "omega", "gamma", "steps"))
        steps = []
        for i, step in enumerate(got["steps"]):
            if (not isinstance(step, list) or len(step) != 2
                    or not isinstance(step[0], str)):
                raise ConfigError("each step must be [kind, duration_us]",
                                  f"config.steps[{i}]")
            steps.append((step[0], _check_type(step[1], float,
                                               f"config.steps[{i}][1]")))
        try:
            seq = PulseSequence(tuple(steps), got["eta"], got["omega"], got["gamma"])
        except ValueError as exc:
            raise ConfigError(str(exc), "config.steps") from exc
        n0 = got.get("initial_phonon", 0)
        traj = run_cooling_sequence(
            seq, initial_level=got.get("initial_level", "u"), initial_phonon=n0,
            n_phonon=got.get("n_phonon", n0 + 6),
            samples_per_step=got.get("samples_per_step", 200))
        header, rows = _trace_rows(traj)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sideband_trace.csv", header, rows)
        _write_meta(out / "meta.json", _meta_common("sideband cool", cfg, None, {
            "final_mean_phonon": float(traj.mean_phonon[-1]),
            "final_ground_motional_population": float(traj.pop_u[-1, 0]),
        }))
        return EXIT_OK
    raise ConfigError(f"unknown sideband subcommand {sub!r}")


# ---------------------------------------------------------------- entry point

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ceitsim",
        description="Cavity-EIT trapped-ion thermometry simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "analytic", "calibrate", "invert", "map2d", "multiion"):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True)
        s.add_argument("--out", required=True)
    s = sub.add_parser("sideband")
    s.add_argument("subcommand", choices=["rabi", "ratio", "cool"])
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        cfg = _load_config(args.config)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out)
        if args.command == "analytic":
            return cmd_analytic(cfg, out)
        if args.command == "calibrate":
            return cmd_calibrate(cfg, out)
        if args.command == "invert":
            return cmd_invert(cfg, out)
        if args.command == "map2d":
            return cmd_map2d(cfg, out)
        if args.command == "multiion":
            return cmd_multiion(cfg, out)
        if args.command == "sideband":
            return cmd_sideband(args.subcommand, cfg, out)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InversionRangeError as exc:
        print(f"inversion out of range: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except (SolverError, FitError, NoCentralPeakError, CalibrationError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CeitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    raise SystemExit(main())
