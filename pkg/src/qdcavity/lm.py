"""Bounded Levenberg-Marquardt least squares.

Small, dependency-free (numpy only) damped Gauss-Newton solver used by the
spectral and fringe fits.  Bounds are enforced by projecting trial points
onto the box; the damping follows Nielsen's gain-ratio update, and only
steps that lower the cost are accepted, so the recorded cost trace is
non-increasing.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from qdcavity.errors import RankDeficiencyWarning


@dataclass
class LMResult:
    x: np.ndarray
    cost: float  # 0.5 * sum(residual**2)
    residual: np.ndarray
    jacobian: np.ndarray
    covariance: np.ndarray
    converged: bool
    iterations: int
    rank: int
    cost_trace: list = field(default_factory=list)
    message: str = ""
    warnings: list = field(default_factory=list)

    @property
    def standard_errors(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def numeric_jacobian(fun, x, steps, lower=None, upper=None):
    """Central-difference Jacobian; one-sided next to a bound."""
    x = np.asarray(x, dtype=float)
    f0 = None
    cols = []
    for i, h in enumerate(steps):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        if upper is not None and xp[i] > upper[i]:
            f0 = fun(x) if f0 is None else f0
            cols.append((f0 - fun(xm)) / h)
        elif lower is not None and xm[i] < lower[i]:
            f0 = fun(x) if f0 is None else f0
            cols.append((fun(xp) - f0) / h)
        else:
            cols.append((fun(xp) - fun(xm)) / (2 * h))
    return np.stack(cols, axis=1)


def covariance_from_jacobian(J, residual, rcond=1e-10):
    """``s² (JᵀJ)⁺`` with ``s² = RSS/(m - rank)`` and the numerical rank of J.

    Columns are equilibrated first so that parameters of very different
    magnitude do not masquerade as a rank deficiency.
    """
    m, n = J.shape
    norms = np.linalg.norm(J, axis=0)
    live = norms > 0
    d = np.where(live, norms, 1.0)
    Js = J / d
    sv = np.linalg.svd(Js[:, live], compute_uv=False)
    rank = int(np.sum(sv > rcond * sv[0])) if sv.size and sv[0] > 0 else 0
    dof = max(m - rank, 1)
    s2 = float(residual @ residual) / dof
    # pinv of the equilibrated normal matrix via SVD of Js
    U, S, Vt = np.linalg.svd(Js, full_matrices=False)
    keep = S > rcond * S.max() if S.size and S.max() > 0 else np.zeros_like(S, dtype=bool)
    inv = (Vt[keep].T / S[keep] ** 2) @ Vt[keep]
    cov = s2 * inv / np.outer(d, d)
    cov = 0.5 * (cov + cov.T)
    return cov, rank


def levenberg_marquardt(fun, x0, lower, upper, *, jac=None, steps=None,
                        max_iterations=200, step_tol=1e-10, residual_tol=1e-12,
                        initial_damping=1e-3):
    """Minimize ``0.5 * ||fun(x)||²`` inside the box ``[lower, upper]``.

    Parameters
    ----------
    fun : callable
        Residual vector ``fun(x) -> ndarray (m,)``.
    x0, lower, upper : array_like (n,)
        Start point and finite bounds.
    jac : callable, optional
        Analytic Jacobian; central differences with ``steps`` otherwise.
    step_tol, residual_tol : float
        Converged once an accepted step has ``||dx|| < step_tol (||x|| + step_tol)``
        or the relative cost decrease falls below ``residual_tol``.

    Returns
    -------
    LMResult
        ``converged`` is False if ``max_iterations`` ran out; no exception
        is raised in that case.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    if steps is None:
        steps = 1e-6 * np.maximum(np.abs(x), 1.0)
    steps = np.asarray(steps, dtype=float)
    jac_fn = jac or (lambda z: numeric_jacobian(fun, z, steps, lower, upper))

    r = np.asarray(fun(x), dtype=float)
    cost = 0.5 * float(r @ r)
    trace = [cost]
    J = jac_fn(x)
    lam = None
    nu = 2.0
    converged = False
    message = "maximum iterations reached"
    it = 0
    while it < max_iterations:
        it += 1
        g = J.T @ r
        d2 = np.einsum("ij,ij->j", J, J)
        d2 = np.maximum(d2, 1e-12 * max(d2.max(initial=0.0), 1e-300))
        if lam is None:
            lam = initial_damping
        A = np.vstack([J, np.diag(np.sqrt(lam * d2))])
        b = np.concatenate([-r, np.zeros(len(x))])
        dx = np.linalg.lstsq(A, b, rcond=None)[0]
        x_new = np.clip(x + dx, lower, upper)
        dx = x_new - x
        r_new = np.asarray(fun(x_new), dtype=float)
        cost_new = 0.5 * float(r_new @ r_new)
        predicted = -(g @ dx) - 0.5 * float(np.sum((J @ dx) ** 2))
        if np.isfinite(cost_new) and cost_new < cost:
            rho = (cost - cost_new) / predicted if predicted > 0 else 0.0
            lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            rel_drop = (cost - cost_new) / max(cost, 1e-300)
            small_step = np.linalg.norm(dx) < step_tol * (np.linalg.norm(x) + step_tol)
            x, r, cost = x_new, r_new, cost_new
            trace.append(cost)
            J = jac_fn(x)
            if small_step or rel_drop < residual_tol:
                converged = True
                message = "step tolerance" if small_step else "residual tolerance"
                break
        else:
            lam *= nu
            nu *= 2.0
            if np.linalg.norm(dx) < step_tol * (np.linalg.norm(x) + step_tol) or lam > 1e16:
                # no downhill step exists at machine resolution: a minimum
                converged = True
                message = "no further decrease possible"
                break

    cov, rank = covariance_from_jacobian(J, r)
    notes = []
    if rank < len(x):
        msg = f"Jacobian rank {rank} < {len(x)} parameters; covariance uses a pseudo-inverse"
        warnings.warn(msg, RankDeficiencyWarning, stacklevel=2)
        notes.append(msg)
    return LMResult(x, cost, r, J, cov, converged, it, rank, trace, message, notes)
