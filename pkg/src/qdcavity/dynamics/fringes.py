"""Decaying-cosine fits to Ramsey fringes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qdcavity.errors import FitError, InvalidParameterError
from qdcavity.lm import levenberg_marquardt

ENVELOPES = ("exponential", "gaussian")
PARAM_NAMES = ("amplitude", "frequency", "phase", "decay_time", "offset")


@dataclass
class FringeFit:
    amplitude: float
    frequency: float  # angular, ps⁻¹
    phase: float
    decay_time: float  # ps
    offset: float
    standard_errors: dict
    envelope: str = "exponential"
    cost: float = 0.0
    decay_at_bound: bool = False
    warnings: list = field(default_factory=list)

    def __call__(self, tau):
        return decaying_cosine(tau, self.amplitude, self.frequency, self.phase,
                               self.decay_time, self.offset, self.envelope)


def decaying_cosine(tau, amplitude, frequency, phase, decay_time, offset, envelope="exponential"):
    tau = np.asarray(tau, dtype=float)
    if envelope == "exponential":
        env = np.exp(-tau / decay_time)
    elif envelope == "gaussian":
        env = np.exp(-(tau / decay_time) ** 2)
    else:
        raise InvalidParameterError(f"envelope must be one of {ENVELOPES}")
    return offset + amplitude * np.cos(frequency * tau + phase) * env


def _initial_guess(tau, y):
    """Frequency from a zero-padded periodogram, then linear amplitude/phase."""
    offset = float(np.mean(y))
    dt = float(np.median(np.diff(tau)))
    n = len(tau)
    grid = tau[0] + dt * np.arange(n)
    yi = np.interp(grid, tau, y - offset)
    spec = np.abs(np.fft.rfft(yi * np.hanning(n), 16 * n))
    freqs = 2 * math.pi * np.fft.rfftfreq(16 * n, dt)
    k = int(np.argmax(spec[1:])) + 1
    w = float(freqs[k])
    X = np.stack([np.cos(w * tau), -np.sin(w * tau), np.ones_like(tau)], axis=1)
    c, s, off = np.linalg.lstsq(X, y, rcond=None)[0]
    return {"amplitude": float(math.hypot(c, s)), "frequency": w, "phase": float(math.atan2(s, c)),
            "offset": float(off)}


def fit_decaying_cosine(tau, y, initial_guess=None, envelope="exponential", max_decay=None,
                        max_iterations=400):
    """Fit ``offset + amplitude cos(ωτ + phase) envelope(τ/decay_time)``.

    Parameters
    ----------
    tau, y : array_like
        Delays (ps) and fringe signal.  At least four periods should be
        sampled for the periodogram start to be reliable.
    initial_guess : dict, optional
        Any of ``amplitude, frequency, phase, decay_time, offset``; missing
        entries are estimated from the data.
    envelope : {"exponential", "gaussian"}
    max_decay : float, optional
        Upper bound on ``decay_time``; defaults to 1000 times the τ span.
        A fit with less damping than this reports the bound and sets
        ``decay_at_bound``.

    Returns
    -------
    FringeFit
        Phase is wrapped to [-π, π).

    Raises
    ------
    FitError
        If the optimizer does not converge; carries the last iterate.
    """
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(y, dtype=float)
    if tau.shape != y.shape or tau.ndim != 1 or len(tau) < 6:
        raise InvalidParameterError("need matching 1-D tau and y with at least 6 points")
    if envelope not in ENVELOPES:
        raise InvalidParameterError(f"envelope must be one of {ENVELOPES}")
    span = float(tau.max() - tau.min())
    max_decay = 1000.0 * span if max_decay is None else float(max_decay)
    scale = float(np.ptp(y)) or max(abs(float(np.mean(y))), 1.0)

    guess = _initial_guess(tau, y)
    guess["decay_time"] = span
    guess.update(initial_guess or {})
    nyquist = math.pi / float(np.min(np.diff(tau)))
    w0 = guess["frequency"]
    # the envelope is fitted through its rate 1/decay_time, which may reach
    # zero, so an undamped signal is represented exactly
    rate0 = 1.0 / guess["decay_time"]
    lower = np.array([0.0, 0.5 * w0, -2 * math.pi, 0.0, float(y.min()) - scale])
    upper = np.array([100.0 * scale, min(1.5 * w0, nyquist) if w0 > 0 else nyquist,
                      2 * math.pi, 100.0 / span, float(y.max()) + scale])
    x0 = np.array([guess["amplitude"], w0, guess["phase"], rate0, guess["offset"]], dtype=float)
    if w0 <= 0:
        lower[1] = 0.0
    x0 = np.clip(x0, lower, upper)
    power = 1 if envelope == "exponential" else 2

    def residual(x):
        env = np.exp(-(x[3] * tau) ** power)
        return (x[4] + x[0] * np.cos(x[1] * tau + x[2]) * env - y) / scale

    steps = np.array([1e-6 * scale, 1e-7 * max(w0, 1e-3), 1e-6, 1e-6 / span, 1e-6 * scale])
    res = levenberg_marquardt(residual, x0, lower, upper, steps=steps, max_iterations=max_iterations)
    if not res.converged:
        last = dict(zip(PARAM_NAMES, res.x))
        last["decay_time"] = 1.0 / res.x[3] if res.x[3] > 0 else math.inf
        raise FitError("decaying-cosine fit did not converge", last_iterate=last)
    x = res.x
    # parameters are in data units, so the covariance needs no rescaling
    se = {k: float(v) for k, v in zip(PARAM_NAMES, res.standard_errors)}
    rate = float(x[3])
    at_bound = rate <= 1.0 / max_decay
    decay_time = max_decay if at_bound else 1.0 / rate
    se["decay_time"] = math.inf if at_bound else se["decay_time"] / rate ** 2
    phase = (x[2] + math.pi) % (2 * math.pi) - math.pi
    notes = list(res.warnings)
    if at_bound:
        notes.append("decay_time at its upper bound: no measurable damping")
    return FringeFit(float(x[0]), float(x[1]), float(phase), float(decay_time), float(x[4]),
                     se, envelope, float(res.cost) * scale ** 2, at_bound, notes)
