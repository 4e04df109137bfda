"""Dormand-Prince 5(4) integrator for array-valued ODEs.

The state may be any complex or real ndarray (a density matrix, a stack of
them, a superoperator); the right-hand side maps ``(t, y) -> dy/dt`` with the
same shape.  Adaptive stepping uses the embedded 4th-order error estimate;
output at requested times comes from the 4th-order continuous extension.
A fixed-step mode exists for convergence studies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qdcavity.errors import IntegrationError, InvalidParameterError

ORDER = 5

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# 5th minus 4th order weights, including the FSAL stage
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Continuous extension: y(t + θh) = y + h Σ_k K_k Σ_j P[k, j] θ^(j+1)
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass
class OdeSolution:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), *y0.shape)
    n_steps: int
    n_rejected: int
    n_fev: int


def _stage_sum(coeffs, K, n):
    acc = coeffs[0] * K[0]
    for j in range(1, n):
        if coeffs[j] != 0.0:
            acc = acc + coeffs[j] * K[j]
    return acc


def _dense(y, h, K, theta):
    powers = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
    q = _P @ powers
    return y + h * _stage_sum(q, K, 7)


def dopri5(fun, t_span, y0, *, t_eval=None, rtol=1e-9, atol=1e-12,
           fixed_step=None, first_step=None, max_step=math.inf):
    """Integrate ``dy/dt = fun(t, y)`` over ``t_span``.

    Parameters
    ----------
    fun : callable
        Right-hand side ``fun(t, y) -> ndarray`` with ``y``'s shape.
    t_span : tuple of float
        ``(t0, t1)`` with ``t1 > t0``.
    y0 : ndarray
        Initial state.
    t_eval : array_like, optional
        Increasing output times inside ``t_span``; defaults to ``[t0, t1]``.
    rtol, atol : float
        Local error tolerances for adaptive stepping.
    fixed_step : float, optional
        If given, take uniform steps of (at most) this size with no error
        control.  The last step is shortened to land on ``t1``.
    first_step, max_step : float, optional
        Step-size hints for the adaptive mode.

    Returns
    -------
    OdeSolution

    Raises
    ------
    IntegrationError
        If the adaptive step size underflows.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise InvalidParameterError("t_span must be increasing")
    y = np.array(y0, dtype=np.result_type(y0, float))
    t_eval = np.array([t0, t1]) if t_eval is None else np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or np.any(np.diff(t_eval) <= 0):
        raise InvalidParameterError("t_eval must be strictly increasing")
    if t_eval[0] < t0 - 1e-12 * max(1.0, abs(t0)) or t_eval[-1] > t1 + 1e-12 * max(1.0, abs(t1)):
        raise InvalidParameterError("t_eval outside t_span")

    out = np.empty((len(t_eval),) + y.shape, dtype=y.dtype)
    i_out = 0
    while i_out < len(t_eval) and t_eval[i_out] <= t0:
        out[i_out] = y
        i_out += 1

    f = fun(t0, y)
    y = np.array(y, dtype=np.result_type(y, f))
    out = out.astype(y.dtype)
    n_fev, n_steps, n_rej = 1, 0, 0
    t = t0
    span = t1 - t0

    if fixed_step is not None:
        if fixed_step <= 0:
            raise InvalidParameterError("fixed_step must be positive")
        n_fixed = int(math.ceil(span / fixed_step - 1e-9))
        h = span / n_fixed
    elif first_step is not None:
        h = min(first_step, max_step, span)
    else:
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
        d1 = np.sqrt(np.mean(np.abs(f / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, max_step, span)

    K = [None] * 7
    while t < t1:
        h = min(h, t1 - t)
        if fixed_step is None and h < 10 * np.spacing(max(abs(t), 1.0)):
            raise IntegrationError("step size underflow", t)
        K[0] = f
        for s in range(1, 6):
            K[s] = fun(t + _C[s] * h, y + h * _stage_sum(_A[s], K, s))
        y_new = y + h * _stage_sum(_B, K, 6)
        t_new = t + h if t1 - (t + h) > 1e-12 * span else t1
        K[6] = fun(t_new, y_new)
        n_fev += 6

        if fixed_step is None:
            err = h * _stage_sum(_E, K, 7)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
            if not math.isfinite(err_norm):
                raise IntegrationError("non-finite local error estimate", t)
            if err_norm > 1.0:
                n_rej += 1
                h *= max(_MIN_FACTOR, _SAFETY * err_norm ** (-1 / ORDER))
                continue
            factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm ** (-1 / ORDER))
            h_next = min(h * factor, max_step)
        else:
            h_next = h

        while i_out < len(t_eval) and t_eval[i_out] <= t_new:
            theta = (t_eval[i_out] - t) / h
            out[i_out] = y_new if theta >= 1.0 else _dense(y, h, K, theta)
            i_out += 1

        t, y, f = t_new, y_new, K[6]
        n_steps += 1
        h = h_next

    while i_out < len(t_eval):
        out[i_out] = y
        i_out += 1
    return OdeSolution(t_eval, out, n_steps, n_rej, n_fev)
