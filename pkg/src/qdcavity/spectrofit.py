"""Global fit of differential-reflectivity spectra across a temperature series.

Each spectrum has its own cavity and dot energies and cavity shift
``(omega_C, omega_D, delta_omega)``; the coupling, linewidths, background
phase and signal amplitude are shared.  Zero crossings of the measured
spectra seed the per-dataset energies and enter the objective as a soft
penalty that pulls the model through zero at those energies.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from qdcavity.core.params import DEFAULT_BG_SCALE, PUBLISHED_GAMMA_0, CavityDotParams, wrap_phase
from qdcavity.errors import (
    CrossingAmbiguityError,
    CrossingNotFoundError,
    InvalidParameterError,
    InvalidProblemError,
    RankDeficiencyWarning,
)
from qdcavity.lm import levenberg_marquardt
from qdcavity.reflectivity import Spectrum, delta_R_V_values, expanded_signal

SHARED = ("g_C", "Gamma_C", "Gamma_D", "phi", "amplitude")
LOCAL = ("omega_C", "omega_D", "delta_omega")
DEFAULT_PENALTY_WEIGHT = 10.0
# held at their guesses in the first stage of a staged fit
STAGE_ONE_FIXED = ("g_C", "Gamma_D")
RESTART_FACTORS = (1.25, 0.8, 1.5, 0.67)
# per-dataset starts: (ω_C offset in units of Γ_C, ω_D offset in units of Γ_D)
LOCAL_STARTS = tuple((dc, dd) for dc in (0.0, -0.5, 0.5, -1.0, 1.0) for dd in (0.0, -2.0, 2.0))
DEFAULT_TOLERANCE = {"step": 1e-10, "residual": 1e-12}
# not published: synthetic grid span (μeV) and size
DEFAULT_SPAN = 800.0
DEFAULT_POINTS = 200
# absolute finite-difference steps for the numeric Jacobian
_STEPS = {"g_C": 1e-4, "Gamma_C": 1e-3, "Gamma_D": 1e-4, "phi": 1e-6,
          "omega_C": 1e-4, "omega_D": 1e-4, "delta_omega": 1e-4}


def default_bounds(shared, per_dataset):
    """Generous finite box around an initial guess."""
    amp = abs(shared.get("amplitude", 1.0)) or 1.0
    bounds = {
        "g_C": (0.0, 500.0),
        "Gamma_C": (1.0, 5000.0),
        "Gamma_D": (0.1, 500.0),
        "phi": (-2 * math.pi, 2 * math.pi),
        "amplitude": (0.0, 1e3 * amp),
        "omega_C": [(d["omega_C"] - 1000.0, d["omega_C"] + 1000.0) for d in per_dataset],
        "omega_D": [(d["omega_D"] - 300.0, d["omega_D"] + 300.0) for d in per_dataset],
        "delta_omega": [(-500.0, 500.0) for _ in per_dataset],
    }
    return bounds


@dataclass
class FitProblem:
    """Datasets, initial values, bounds and solver settings.

    ``bounds`` maps each shared name to ``(lo, hi)`` and each per-dataset
    name to either one ``(lo, hi)`` for all datasets or a list of pairs.
    Missing entries come from :func:`default_bounds`.  Names in ``frozen``
    keep their initial values.  ``crossings`` holds one ``(omega_C0,
    omega_D0)`` pair per dataset (entries may be None) used in the penalty.
    With ``staged`` a basin search on the data alone (penalty off) runs
    first: a multistart over each dataset's energies, a fit with the
    coupling and dot width (``STAGE_ONE_FIXED``) held, then a full fit.
    This is much less prone to false minima than releasing everything at
    once under the penalty.
    ``restarts`` further solves are started from the converged point with
    g_C and Γ_D rescaled, keeping whichever ends lowest.
    """

    datasets: list
    shared_params: dict
    per_dataset_params: list
    bounds: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCE))
    max_iterations: int = 200
    frozen: tuple = ()
    crossings: list = None
    penalty_weight: float = DEFAULT_PENALTY_WEIGHT
    staged: bool = True
    restarts: int = 2

    def validate(self):
        if len(self.datasets) == 0:
            raise InvalidProblemError("no datasets")
        if len(self.per_dataset_params) != len(self.datasets):
            raise InvalidProblemError("need one per-dataset parameter set per dataset")
        if self.crossings is not None and len(self.crossings) != len(self.datasets):
            raise InvalidProblemError("need one crossing pair (or None) per dataset")
        for name in SHARED:
            if name not in self.shared_params:
                raise InvalidProblemError(f"missing shared parameter {name}")
        for i, d in enumerate(self.per_dataset_params):
            for name in LOCAL:
                if name not in d:
                    raise InvalidProblemError(f"dataset {i}: missing parameter {name}")
        unknown = set(self.frozen) - set(SHARED) - set(LOCAL)
        if unknown:
            raise InvalidProblemError(f"unknown frozen parameters {sorted(unknown)}")
        if self.penalty_weight < 0:
            raise InvalidProblemError("penalty_weight must be non-negative")
        if self.max_iterations < 1:
            raise InvalidProblemError("max_iterations must be positive")
        if not 0 <= self.restarts <= len(RESTART_FACTORS):
            raise InvalidProblemError(f"restarts must be in [0, {len(RESTART_FACTORS)}]")

    def layout(self):
        """Names, initial values and bounds of every (free or frozen) parameter."""
        merged = default_bounds(self.shared_params, self.per_dataset_params)
        merged.update(self.bounds)
        names, x0, lo, hi = [], [], [], []
        for name in SHARED:
            names.append(name)
            x0.append(float(self.shared_params[name]))
            b = merged[name]
            lo.append(float(b[0]))
            hi.append(float(b[1]))
        for i, d in enumerate(self.per_dataset_params):
            for name in LOCAL:
                names.append(f"{name}[{i}]")
                x0.append(float(d[name]))
                b = merged[name]
                b = b[i] if isinstance(b, (list, tuple)) and isinstance(b[0], (list, tuple)) else b
                lo.append(float(b[0]))
                hi.append(float(b[1]))
        x0, lo, hi = np.array(x0), np.array(lo), np.array(hi)
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidProblemError("every parameter needs finite bounds")
        bad = [n for n, v, a, b in zip(names, x0, lo, hi) if not a <= v <= b]
        if bad:
            raise InvalidProblemError(f"initial values outside bounds: {bad}")
        return names, x0, lo, hi


@dataclass
class FitResult:
    params: dict  # {"shared": {...}, "per_dataset": [{...}, ...]}
    covariance: np.ndarray  # over the free parameters, order of free_names
    free_names: list
    standard_errors: dict
    residual_norm: float
    per_dataset_residuals: list  # RMS data residual per dataset
    converged: bool
    iterations: int
    cost_trace: list
    rank: int
    warnings: list = field(default_factory=list)

    def dataset_params(self, i, bg_scale=DEFAULT_BG_SCALE, Gamma_0=PUBLISHED_GAMMA_0):
        """Fitted values of dataset ``i`` as :class:`CavityDotParams`."""
        sh = self.params["shared"]
        loc = self.params["per_dataset"][i]
        return CavityDotParams(omega_C=loc["omega_C"], omega_D=loc["omega_D"], Gamma_C=sh["Gamma_C"],
                               Gamma_D=sh["Gamma_D"], g_C=sh["g_C"], phi=sh["phi"], bg_scale=bg_scale,
                               delta_omega=loc["delta_omega"], Gamma_0=Gamma_0)


def _model(omega, shared, local):
    g, GC, GD, phi, amp = shared
    wC, wD, dw = local
    return expanded_signal(omega, wC, wD, GC, GD, g, phi, dw, amp)


def fit_global(problem):
    """Shared-parameter least-squares fit of the truncated ΔR_V model.

    Parameters
    ----------
    problem : FitProblem

    Returns
    -------
    FitResult
        ``converged`` is False when ``max_iterations`` is exhausted.  A
        rank-deficient Jacobian adds a warning and the covariance is a
        pseudo-inverse.

    Raises
    ------
    InvalidProblemError
        Empty dataset list, missing parameters, bad bounds.
    """
    problem.validate()
    names, x_all, lo_all, hi_all = problem.layout()
    n_data = len(problem.datasets)
    free = np.array([_base(n) not in problem.frozen for n in names])
    if not free.any():
        raise InvalidProblemError("all parameters are frozen")
    grids = [np.asarray(ds.grid, dtype=float) for ds in problem.datasets]
    data = [np.asarray(ds.values, dtype=float) for ds in problem.datasets]
    w = math.sqrt(problem.penalty_weight)
    cross = problem.crossings or [None] * n_data

    all_steps = np.array([1e-6 * max(abs(problem.shared_params["amplitude"]), 1e-300)
                          if _base(n) == "amplitude" else _STEPS[_base(n)] for n in names])

    # The crossings were read off the data by linear interpolation, so the
    # penalty applies the same interpolation to the model on the same grid;
    # its interpolated root then sits at the measured one without grid bias.
    brackets = [_interpolation_rows(grids[i], cross[i]) if w > 0 else None for i in range(n_data)]

    def dataset_residual(i, shared, local, penalty=True):
        m = _model(grids[i], shared, local)
        r = m - data[i]
        if penalty and brackets[i] is not None:
            k, t = brackets[i]
            r = np.concatenate([r, w * (m[k] * (1.0 - t) + m[k + 1] * t)])
        return r

    def residual_at(x, penalty=True):
        return np.concatenate([dataset_residual(i, x[:5], x[5 + 3 * i: 8 + 3 * i], penalty)
                               for i in range(n_data)])

    def solve(x_start, mask, max_iterations, penalty=True):
        def residual(xf):
            x = x_start.copy()
            x[mask] = xf
            return residual_at(x, penalty)

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficiencyWarning)
            res = levenberg_marquardt(residual, x_start[mask], lo_all[mask], hi_all[mask],
                                      steps=all_steps[mask], max_iterations=max_iterations,
                                      step_tol=problem.tolerance.get("step", DEFAULT_TOLERANCE["step"]),
                                      residual_tol=problem.tolerance.get("residual",
                                                                         DEFAULT_TOLERANCE["residual"]))
        x = x_start.copy()
        x[mask] = res.x
        return x, res

    def settle_locals(x):
        # multistart over each dataset's energies with the shared values held
        x = x.copy()
        n_it = 0
        for i in range(n_data):
            sl = slice(5 + 3 * i, 8 + 3 * i)
            mask_i = free[sl]
            if not mask_i.any():
                continue
            lo_i, hi_i = lo_all[sl][mask_i], hi_all[sl][mask_i]
            def res_i(xf, i=i, sl=sl, mask_i=mask_i):
                local = x[sl].copy()
                local[mask_i] = xf
                return dataset_residual(i, x[:5], local, penalty=False)

            best = None
            for dc, dd in LOCAL_STARTS:
                start = x[sl].copy()
                start[0] += dc * x[1]
                start[1] += dd * x[2]
                start = np.clip(start[mask_i], lo_i, hi_i)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RankDeficiencyWarning)
                    r = levenberg_marquardt(res_i, start, lo_i, hi_i, steps=all_steps[sl][mask_i],
                                            max_iterations=100, step_tol=1e-8, residual_tol=1e-10)
                n_it += r.iterations
                if best is None or r.cost < best.cost:
                    best = r
            local = x[sl].copy()
            local[mask_i] = best.x
            x[sl] = local
        return x, n_it

    iterations = 0
    x_start = x_all
    if problem.staged:
        # basin search on the data alone: per-dataset energies first, then
        # everything but the coupling and dot width, then all parameters,
        # then the energies once more against the improved shared values
        x_start, n_it = settle_locals(x_start)
        iterations += n_it
        mask = free & np.array([_base(n) not in STAGE_ONE_FIXED for n in names])
        if mask.any() and not np.array_equal(mask, free):
            x_start, res0 = solve(x_start, mask, problem.max_iterations, penalty=False)
            iterations += res0.iterations
        x_start, res0 = solve(x_start, free, problem.max_iterations, penalty=False)
        iterations += res0.iterations
        x_start, n_it = settle_locals(x_start)
        iterations += n_it
    # final objective, crossing penalty included; the reported cost trace
    # covers this solve and any improving restart
    x_fit, res = solve(x_start, free, problem.max_iterations)
    trace = list(res.cost_trace)
    iterations += res.iterations
    # restarts from the converged point with the coupling and dot width
    # rescaled; g_C trades off against the amplitude in shallow valleys
    for factor in RESTART_FACTORS[:problem.restarts]:
        x_try = x_fit.copy()
        for k, n in enumerate(names):
            if free[k] and n in ("g_C", "Gamma_D"):
                x_try[k] = np.clip(x_try[k] * factor, lo_all[k], hi_all[k])
        x_new, res_new = solve(x_try, free, problem.max_iterations)
        iterations += res_new.iterations
        if res_new.cost < res.cost * (1 - 1e-9):
            x_fit, res = x_new, res_new
            trace.append(res.cost)
    notes = list(res.warnings)
    for msg in res.warnings:
        warnings.warn(msg, RankDeficiencyWarning, stacklevel=2)
    if not res.converged:
        notes.append(f"not converged after {res.iterations} iterations")

    x = x_fit
    shared = dict(zip(SHARED, (float(v) for v in x[:5])))
    shared["phi"] = float(wrap_phase(shared["phi"]))
    per = [dict(zip(LOCAL, (float(v) for v in x[5 + 3 * i: 8 + 3 * i]))) for i in range(n_data)]
    free_names = [n for n, f in zip(names, free) if f]
    se = dict(zip(free_names, (float(s) for s in res.standard_errors)))
    rms = []
    for i in range(n_data):
        r = _model(grids[i], x[:5], x[5 + 3 * i: 8 + 3 * i]) - data[i]
        rms.append(float(np.sqrt(np.mean(r ** 2))))
    return FitResult({"shared": shared, "per_dataset": per}, res.covariance, free_names, se,
                     float(np.linalg.norm(res.residual)), rms, bool(res.converged), iterations,
                     trace, res.rank, notes)


def _interpolation_rows(grid, crossings):
    """Bracket indices and fractions of the crossings on ``grid``, or None."""
    if crossings is None:
        return None
    pts = np.array([c for c in crossings if c is not None], dtype=float)
    pts = pts[(pts >= grid[0]) & (pts <= grid[-1])]
    if pts.size == 0:
        return None
    k = np.clip(np.searchsorted(grid, pts, side="right") - 1, 0, len(grid) - 2)
    t = (pts - grid[k]) / (grid[k + 1] - grid[k])
    return k, t


def _base(name):
    return name.split("[", 1)[0]


def find_zero_crossings(spectrum, search_windows):
    """Linear-interpolated sign changes of ``spectrum`` in two windows.

    Parameters
    ----------
    spectrum : Spectrum
    search_windows : ((lo, hi), (lo, hi))
        Energy intervals (μeV) for the cavity and the dot crossing.

    Returns
    -------
    (omega_C0, omega_D0)

    Raises
    ------
    CrossingNotFoundError
        A window holds no sign change.
    CrossingAmbiguityError
        A window holds several; ``candidates`` lists them.
    """
    if len(search_windows) != 2:
        raise InvalidParameterError("need exactly two search windows")
    return tuple(_crossing_in(spectrum, lo, hi) for lo, hi in search_windows)


def crossings_in(spectrum, lo, hi):
    """All linear-interpolated zero crossings inside ``[lo, hi]``."""
    if not lo < hi:
        raise InvalidParameterError("search window must have lo < hi")
    x = spectrum.grid
    y = spectrum.values
    inside = np.nonzero((x >= lo) & (x <= hi))[0]
    roots = []
    for k in inside:
        if y[k] == 0.0:
            roots.append(float(x[k]))
    for k in inside[:-1]:
        if k + 1 in inside and y[k] * y[k + 1] < 0:
            roots.append(float(x[k] - y[k] * (x[k + 1] - x[k]) / (y[k + 1] - y[k])))
    return sorted(roots)


def _crossing_in(spectrum, lo, hi):
    roots = crossings_in(spectrum, lo, hi)
    if not roots:
        raise CrossingNotFoundError(f"no sign change in [{lo:.6g}, {hi:.6g}] μeV")
    if len(roots) > 1:
        raise CrossingAmbiguityError(f"{len(roots)} sign changes in [{lo:.6g}, {hi:.6g}] μeV", roots)
    return roots[0]


def default_windows(omega_C, omega_D):
    """Search windows around rough cavity and dot energies (not published)."""
    return ((omega_C - 100.0, omega_C + 50.0), (omega_D - 30.0, omega_D + 30.0))


def seed_crossings(spectrum, search_windows):
    """Crossings for seeding, tolerant of noise.

    Returns ``(seeds, penalty, notes)``: ``seeds`` always has two energies
    (the mean of several candidates, or the window center if none), while
    ``penalty`` keeps only unambiguous crossings and None otherwise.
    """
    seeds, penalty, notes = [], [], []
    for label, (lo, hi) in zip(("cavity", "dot"), search_windows):
        roots = crossings_in(spectrum, lo, hi)
        if len(roots) == 1:
            seeds.append(roots[0])
            penalty.append(roots[0])
            continue
        if roots:
            seeds.append(float(np.mean(roots)))
            notes.append(f"{label} window: {len(roots)} crossings, seeded with their mean")
        else:
            seeds.append(0.5 * (lo + hi))
            notes.append(f"{label} window: no crossing, seeded with the window center")
        penalty.append(None)
    return tuple(seeds), tuple(penalty), notes


# half-widths (μeV) of the boxes placed around crossing seeds; not published
SEED_BOX = {"omega_C": 200.0, "omega_D": 40.0}


def build_problem(datasets, shared_guess, windows, delta_omega_guess=0.0, bounds=None, **kwargs):
    """FitProblem whose per-dataset energies are seeded from zero crossings.

    The per-dataset energies are boxed around their seeds (``SEED_BOX``)
    unless ``bounds`` says otherwise; without the box a poor shared start
    can let a weak cavity feature wander off the grid.
    """
    per, cross, notes = [], [], []
    for i, (ds, win) in enumerate(zip(datasets, windows)):
        (wc, wd), pen, msgs = seed_crossings(ds, win)
        per.append({"omega_C": wc, "omega_D": wd, "delta_omega": float(delta_omega_guess)})
        cross.append(pen)
        notes += [f"dataset {i}: {m}" for m in msgs]
    merged = {name: [(d[name] - h, d[name] + h) for d in per] for name, h in SEED_BOX.items()}
    merged.update(bounds or {})
    problem = FitProblem(list(datasets), dict(shared_guess), per, bounds=merged, crossings=cross, **kwargs)
    return problem, notes


def synth_spectrum(p, grid, noise_rms=0.0, seed=0, amplitude=1.0, meta=None):
    """Truncated ΔR_V on ``grid`` plus seeded Gaussian noise."""
    if noise_rms < 0:
        raise InvalidParameterError("noise_rms must be non-negative")
    grid = np.asarray(grid, dtype=float)
    values = delta_R_V_values(grid, p, amplitude)
    if noise_rms > 0:
        values = values + np.random.default_rng(seed).normal(0.0, noise_rms, len(grid))
    return Spectrum(grid, values, dict(meta or {}, polarization="V"))


def synthetic_grid(p, span=DEFAULT_SPAN, n_points=DEFAULT_POINTS):
    """Grid centered between ω_C and ω_D, wide enough to hold both features."""
    center = 0.5 * (p.omega_C + p.omega_D)
    width = max(span, abs(p.omega_C - p.omega_D) + 0.75 * span)
    return np.linspace(center - width / 2, center + width / 2, n_points)


def synthetic_series(params_list, noise_fraction=0.01, seed=0, amplitude=1.0, span=DEFAULT_SPAN,
                     n_points=DEFAULT_POINTS):
    """One noisy spectrum per parameter set, noise relative to each peak.

    Dataset ``i`` uses the stream seeded by ``(seed, i)``.
    """
    out = []
    for i, p in enumerate(params_list):
        grid = synthetic_grid(p, span, n_points)
        clean = delta_R_V_values(grid, p, amplitude)
        noise = noise_fraction * float(np.max(np.abs(clean)))
        values = clean + np.random.default_rng([seed, i]).normal(0.0, 1.0, len(grid)) * noise
        out.append(Spectrum(grid, values, {"polarization": "V", "dataset": i}))
    return out
