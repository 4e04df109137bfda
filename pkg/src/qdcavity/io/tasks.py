"""Task implementations behind the command line.

Each task takes a resolved :class:`RunConfig` and returns a
:class:`TaskOutput`: JSON-ready results, long-format tables for CSV, and
the warnings raised along the way.  Energies leave this module in meV.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qdcavity.core.constants import HBAR
from qdcavity.core.params import PUBLISHED_OMEGA_C, PUBLISHED_OMEGA_D
from qdcavity.core.pulses import SechPulse
from qdcavity.dynamics.decay import with_cavity_decay
from qdcavity.dynamics.fringes import fit_decaying_cosine
from qdcavity.dynamics.pumping import simulate_pumping
from qdcavity.dynamics.rabi import AngleCalibration, rabi_scan
from qdcavity.dynamics.ramsey import InstantaneousPulse, nuclear_sigma_for, simulate_ramsey
from qdcavity.dynamics.rotation import rotation_scan
from qdcavity.errors import ConfigError
from qdcavity.io.config import MEV, grid_values
from qdcavity.io.csvio import load_spectrum_csv
from qdcavity.reflectivity import Spectrum, delta_R_V_values, expanded_signal
from qdcavity.spectrofit import SHARED, build_problem, default_windows, fit_global, synthetic_grid

ENERGY_NAMES = ("g_C", "Gamma_C", "Gamma_D", "omega_C", "omega_D", "delta_omega")


@dataclass
class TaskOutput:
    results: dict
    tables: dict  # name -> (columns, rows)
    warnings: list = field(default_factory=list)
    spectra: dict = field(default_factory=dict)  # name -> Spectrum, written as spectrum CSVs


def external_name(name):
    """Parameter name as shown in output files (unit suffix)."""
    base = name.split("[", 1)[0]
    rest = name[len(base):]
    if base in ENERGY_NAMES:
        return f"{base}_meV{rest}"
    if base == "phi":
        return f"phi_rad{rest}"
    return name


def external_value(name, value):
    base = name.split("[", 1)[0]
    return value / MEV if base in ENERGY_NAMES else value


def _params_meV(p):
    return {"omega_C_meV": p.omega_C / MEV, "omega_D_meV": p.omega_D / MEV,
            "Gamma_C_meV": p.Gamma_C / MEV, "Gamma_D_meV": p.Gamma_D / MEV, "g_C_meV": p.g_C / MEV,
            "phi_rad": p.phi, "bg_scale_meV": p.bg_scale / MEV, "delta_omega_meV": p.delta_omega / MEV,
            "Gamma_0_meV": p.Gamma_0 / MEV}


def _at_temperature(p, index):
    return p.replace(omega_C=PUBLISHED_OMEGA_C[index], omega_D=PUBLISHED_OMEGA_D[index])


def _finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)


def task_synth(cfg):
    tp = cfg.task_params
    p0 = cfg.cavity_dot()
    if tp["temperature_indices"] is None:
        targets = [("spectrum", None, p0)]
    else:
        targets = [(f"spectrum_{i}", i, _at_temperature(p0, i)) for i in tp["temperature_indices"]]
    spectra, summary = {}, []
    for k, (name, index, p) in enumerate(targets):
        if tp["grid_meV"] is None:
            grid = synthetic_grid(p, tp["span_meV"] * MEV, tp["n_points"])
        else:
            grid = grid_values(tp["grid_meV"], "meV") * MEV
        clean = delta_R_V_values(grid, p, tp["amplitude"], tp["form"])
        noise = tp["noise_fraction"] * float(np.max(np.abs(clean)))
        values = clean
        if noise > 0:
            values = clean + np.random.default_rng([cfg.seed, k]).normal(0.0, 1.0, len(grid)) * noise
        spectra[name] = Spectrum(grid, values, {"polarization": "V"})
        summary.append({"name": name, "temperature_index": index, "n_points": len(grid),
                        "energy_min_meV": grid[0] / MEV, "energy_max_meV": grid[-1] / MEV,
                        "peak_abs_signal": float(np.max(np.abs(clean))), "noise_rms": noise,
                        "parameters": _params_meV(p)})
    return TaskOutput({"spectra": summary}, {}, spectra=spectra)


def _perturbed(guess, fraction, seed):
    if fraction == 0:
        return dict(guess)
    rng = np.random.default_rng([seed, 7919])
    return {k: v * (1.0 + rng.uniform(-fraction, fraction)) for k, v in guess.items()}


def task_fit_reflectivity(cfg):
    tp = cfg.task_params
    p0 = cfg.cavity_dot()
    truth = None
    if tp["data_files"] is not None:
        datasets = [load_spectrum_csv(path) for path in tp["data_files"]]
        guesses = tp["per_dataset_guess"]
        if guesses is None or len(guesses) != len(datasets):
            raise ConfigError("config.task_params.per_dataset_guess: need one {omega_C_meV, omega_D_meV} "
                              "entry per data file")
        energies = [(g["omega_C_meV"] * MEV, g["omega_D_meV"] * MEV) for g in guesses]
        sources = list(tp["data_files"])
    else:
        truth = [_at_temperature(p0, i) for i in tp["temperature_indices"]]
        datasets = []
        for k, p in enumerate(truth):
            grid = synthetic_grid(p, tp["span_meV"] * MEV, tp["n_points"])
            clean = delta_R_V_values(grid, p)
            noise = tp["noise_fraction"] * float(np.max(np.abs(clean)))
            values = clean + np.random.default_rng([cfg.seed, k]).normal(0.0, 1.0, len(grid)) * noise
            datasets.append(Spectrum(grid, values, {"polarization": "V"}))
        guesses = tp["per_dataset_guess"]
        if guesses is not None:
            if len(guesses) != len(truth):
                raise ConfigError("config.task_params.per_dataset_guess: need one entry per temperature")
            energies = [(g["omega_C_meV"] * MEV, g["omega_D_meV"] * MEV) for g in guesses]
        else:
            energies = [(p.omega_C, p.omega_D) for p in truth]
        sources = [f"synthetic temperature {i}" for i in tp["temperature_indices"]]

    shared_guess = _perturbed({"g_C": p0.g_C, "Gamma_C": p0.Gamma_C, "Gamma_D": p0.Gamma_D, "phi": p0.phi,
                               "amplitude": tp["amplitude_guess"]}, tp["guess_perturbation"], cfg.seed)
    windows = [default_windows(wc, wd) for wc, wd in energies]
    problem, notes = build_problem(datasets, shared_guess, windows, tp["delta_omega_guess_meV"] * MEV,
                                   penalty_weight=tp["penalty_weight"],
                                   max_iterations=tp["max_iterations"], staged=tp["staged"],
                                   restarts=tp["restarts"])
    fit = fit_global(problem)

    shared = fit.params["shared"]
    names = fit.free_names
    scale = np.array([1.0 / MEV if n.split("[", 1)[0] in ENERGY_NAMES else 1.0 for n in names])
    results = {
        "converged": fit.converged,
        "iterations": fit.iterations,
        "residual_norm": fit.residual_norm,
        "rank": fit.rank,
        "initial_guess": {external_name(k): external_value(k, v) for k, v in shared_guess.items()},
        "shared": {external_name(k): external_value(k, shared[k]) for k in SHARED},
        "per_dataset": [
            dict({"source": src}, **{external_name(k): external_value(k, v) for k, v in d.items()},
                 rms_residual=r)
            for src, d, r in zip(sources, fit.params["per_dataset"], fit.per_dataset_residuals)
        ],
        "standard_errors": {external_name(n): external_value(n, s) for n, s in fit.standard_errors.items()},
        "covariance": {"names": [external_name(n) for n in names],
                       "matrix": (fit.covariance * np.outer(scale, scale)).tolist()},
        "cost_trace": list(fit.cost_trace),
        "crossing_notes": notes,
        "fit_notes": list(fit.warnings),
    }
    if truth is not None:
        results["truth_shared"] = {"g_C_meV": p0.g_C / MEV, "Gamma_C_meV": p0.Gamma_C / MEV,
                                   "Gamma_D_meV": p0.Gamma_D / MEV, "phi_rad": p0.phi}

    curves = []
    x = [shared[k] for k in SHARED]
    for i, ds in enumerate(datasets):
        loc = fit.params["per_dataset"][i]
        model = expanded_signal(ds.grid, loc["omega_C"], loc["omega_D"], x[1], x[2], x[0], x[3],
                                loc["delta_omega"], x[4])
        curves += [[i, e / MEV, d, m] for e, d, m in zip(ds.grid, ds.values, model)]
    params = [[external_name(k), external_value(k, shared[k]),
               external_value(k, fit.standard_errors.get(k, math.nan))] for k in SHARED]
    for i, loc in enumerate(fit.params["per_dataset"]):
        for k, v in loc.items():
            key = f"{k}[{i}]"
            params.append([external_name(key), external_value(k, v),
                           external_value(k, fit.standard_errors.get(key, math.nan))])
    tables = {"fit_curves": (["dataset", "energy_meV", "data", "model"], curves),
              "fit_params": (["name", "value", "standard_error"], params)}
    return TaskOutput(results, tables)


def _system(cfg, cavity_decay):
    system = cfg.level_system()
    return with_cavity_decay(system, cfg.cavity_dot()) if cavity_decay else system


def _t2_sigma(t2):
    return 0.0 if t2 is None else nuclear_sigma_for(t2)


def task_ramsey(cfg):
    tp = cfg.task_params
    p = cfg.cavity_dot()
    system = _system(cfg, tp["cavity_decay"])
    spec = tp["pulse"]
    pulse_info = dict(spec)
    if spec["kind"] == "instantaneous":
        pulse = InstantaneousPulse(spec["angle_rad"])
    else:
        template = SechPulse.from_fwhm(spec["fwhm_ps"], detuning=spec["detuning_meV"] * MEV,
                                       polarization=spec["polarization"])
        rabi = AngleCalibration(system, template).rabi_for(spec["angle_rad"])
        pulse = template.replace(rabi_peak=rabi)
        pulse_info.update(rabi_peak_per_ps=rabi, bandwidth_per_ps=pulse.bandwidth)
    tau = grid_values(tp["tau_ps"], "ps")
    sigma = _t2_sigma(tp["t2_star_ps"])
    series = simulate_ramsey(system, p, pulse, tau, sigma, tp["n_samples"], cfg.seed, T1=tp["T1_ps"],
                             coupling_scale=tp["coupling_scale"], readout_index=tp["readout_index"],
                             initial_index=tp["initial_index"])
    omega_l = system.ground_splitting / HBAR
    results = {"pulse": pulse_info, "nuclear_sigma_meV": sigma / MEV,
               "larmor_frequency_per_ps": omega_l, "fringe_fit": None}
    columns = ["tau_ps", "population"]
    rows = [[t, y] for t, y in zip(tau, series.population)]
    if tp["fit_envelope"] is not None and omega_l > 0 and np.ptp(series.population) > 1e-9:
        fit = fit_decaying_cosine(tau, series.population, initial_guess={"frequency": omega_l},
                                  envelope=tp["fit_envelope"])
        results["fringe_fit"] = {
            "envelope": fit.envelope, "amplitude": fit.amplitude, "frequency_per_ps": fit.frequency,
            "phase_rad": fit.phase, "decay_time_ps": fit.decay_time, "offset": fit.offset,
            "decay_at_bound": fit.decay_at_bound,
            "standard_errors": {k: _finite_or_none(v) for k, v in fit.standard_errors.items()},
        }
        columns.append("fit")
        rows = [r + [f] for r, f in zip(rows, fit(tau))]
    return TaskOutput(results, {"ramsey": (columns, rows)}, list(series.warnings))


def task_rabi(cfg):
    tp = cfg.task_params
    p = cfg.cavity_dot()
    system = cfg.level_system()
    spec = tp["pulse"]
    if spec["kind"] == "instantaneous":
        template = InstantaneousPulse(math.pi / 2)
    else:
        template = SechPulse.from_fwhm(spec["fwhm_ps"], detuning=spec["detuning_meV"] * MEV,
                                       polarization=spec["polarization"])
    tau = None if tp["tau_ps"] is None else grid_values(tp["tau_ps"], "ps")
    decay = math.inf if tp["area_decay_rad"] is None else tp["area_decay_rad"]
    scan = rabi_scan(system, p, template, tp["power"], tau, area_decay=decay,
                     nuclear_sigma=_t2_sigma(tp["t2_star_ps"]), n_samples=tp["n_samples"], seed=cfg.seed,
                     T1=tp["T1_ps"], coupling_scale=tp["coupling_scale"])
    rows = [[pt.power, _finite_or_none(pt.rabi_peak), pt.area, pt.raw_amplitude, pt.amplitude]
            for pt in scan.points]
    results = {"rabi_pi_half_per_ps": _finite_or_none(scan.rabi_pi_half),
               "points": [dict(zip(("power", "rabi_peak_per_ps", "area_rad", "raw_amplitude", "amplitude"), r))
                          for r in rows]}
    columns = ["power", "rabi_peak_per_ps", "area_rad", "raw_amplitude", "amplitude"]
    return TaskOutput(results, {"rabi": (columns, rows)}, list(scan.warnings))


def task_rotation_scan(cfg):
    tp = cfg.task_params
    p = cfg.cavity_dot()
    system = cfg.level_system()
    det = grid_values(tp["detuning_meV"], "meV") * MEV
    scan = rotation_scan(system, p, det, tp["coupling_scale"], tp["tolerance"])
    rows = [[pt.detuning / MEV, pt.fidelity, pt.purity, pt.trion_population, pt.bandwidth]
            for pt in scan.points]
    results = {"n_points": len(rows)}
    if rows:
        fid = scan.fidelity
        k = int(np.argmin(fid))
        results.update(min_fidelity=float(fid[k]), min_fidelity_detuning_meV=float(scan.detuning[k] / MEV),
                       max_fidelity=float(fid.max()))
    columns = ["detuning_meV", "fidelity", "purity", "trion_population", "bandwidth_per_ps"]
    return TaskOutput(results, {"rotation_scan": (columns, rows)}, list(scan.warnings))


def task_pumping(cfg):
    tp = cfg.task_params
    p = cfg.cavity_dot()
    system = cfg.level_system()
    T1 = math.inf if tp["T1_ps"] is None else tp["T1_ps"]
    rows, notes = [], []
    for k in tp["transitions"]:
        for rabi in tp["rabi_per_ps"]:
            res = simulate_pumping(system, p, k, rabi, T1, cavity_decay=tp["cavity_decay"],
                                   n_samples=tp["n_samples"])
            rows.append([k, system.transitions[k].kind, rabi, res.rate, res.spectral_rate, res.fit_rms])
            notes += res.warnings
    columns = ["transition", "kind", "rabi_per_ps", "rate_per_ps", "spectral_rate_per_ps", "fit_rms"]
    results = {"points": [dict(zip(columns, r)) for r in rows]}
    return TaskOutput(results, {"pumping": (columns, rows)}, notes)


TASK_FUNCTIONS = {
    "synth": task_synth,
    "fit-reflectivity": task_fit_reflectivity,
    "ramsey": task_ramsey,
    "rabi": task_rabi,
    "rotation-scan": task_rotation_scan,
    "pumping": task_pumping,
}
