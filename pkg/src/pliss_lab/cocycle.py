"""Linear algebra of the derivative cocycle: mini-norms, Jacobians on
subspaces, Lyapunov spectra, and the Birkhoff-type exponents of F."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import Solenoid, frames_along, log_mini_F_ensemble, log_mini_norm_batch, orbit, orthonormalize


def mini_norm(L):
    """inf over unit v of |L v|, i.e. the smallest singular value."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.size == 0:
        raise ValueError("empty matrix")
    return float(np.linalg.svd(L, compute_uv=False)[-1]) if L.shape[0] >= L.shape[1] else 0.0


def jacobian_on_subspace(L, V):
    """k-volume expansion sqrt(det((L V)^T (L V))) of L restricted to span(V)."""
    L = np.asarray(L, dtype=float)
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    M = L @ V
    return float(np.sqrt(max(np.linalg.det(M.T @ M), 0.0)))


@dataclass(frozen=True)
class ExponentReport:
    exponents: tuple
    n_used: int
    i_u: int
    i_cu: int
    tol: float = 1e-2

    @classmethod
    def from_exponents(cls, exps, n_used, tol=1e-2):
        exps = tuple(sorted((float(v) for v in exps), reverse=True))
        i_u = sum(v > tol for v in exps)
        i_cu = sum(v >= -tol for v in exps)
        return cls(exps, int(n_used), i_u, i_cu, tol)

    def csv_row(self, model, seed):
        return [model, seed, self.n_used, *self.exponents, self.i_u, self.i_cu]

    @staticmethod
    def csv_header(d):
        return ["model", "seed", "n"] + [f"lambda_{i + 1}" for i in range(d)] + ["i_u", "i_cu"]


def lyapunov_exponents(model, x, n, burn_in=None, direction=1, tol=1e-2):
    """Full spectrum by QR re-orthonormalization of the tangent cocycle.

    The first ``burn_in`` steps (default n // 10) align the frame with the
    Oseledets filtration and are not counted.
    """
    if n < 100:
        raise ValueError("lyapunov_exponents needs n >= 100")
    burn = n // 10 if burn_in is None else int(burn_in)
    x = np.asarray(x, dtype=float)
    if direction == 1:
        pts = model.orbit_points(x, burn + n)
        model.check_orbit(pts)
        D = model.derivative(pts)
    else:
        pts = model.backward_orbit_points(x, burn + n)
        D = model.inverse_derivative(pts)
    d = model.dim
    Q = np.eye(d)
    sums = np.zeros(d)
    for k in range(burn + n):
        Q, R = np.linalg.qr(D[k] @ Q)
        if k >= burn:
            sums += np.log(np.abs(np.diagonal(R)))
    return ExponentReport.from_exponents(sums / n, n, tol)


# --------------------------------------------------------------------------
# p-step mini-norms along an orbit
# --------------------------------------------------------------------------


def orbit_cocycle(model, x, length):
    """Points, derivatives and transported F-frames along an orbit."""
    pts = model.orbit_points(np.asarray(x, dtype=float), length)
    model.check_orbit(pts)
    _, F = frames_along(model, pts, need_E=False)
    return pts, model.derivative(pts), F


def p_step_log_mini(D, F, p_max, count):
    """Rows p = 1..p_max of log m(Df^p|F(f^i x)) for i < count.

    The frame F(f^i x) is pushed through p derivatives; a running log-scale
    keeps the entries bounded.  Row p-1 holds the p-step values.
    """
    if D.shape[0] < count + p_max - 1:
        raise ValueError("orbit too short for the requested p_max and count")
    G = F[:count].copy()
    logscale = np.zeros(count)
    out = np.empty((p_max, count))
    for p in range(1, p_max + 1):
        G = D[p - 1 : p - 1 + count] @ G
        norms = np.linalg.norm(G, axis=(-2, -1))
        G /= norms[:, None, None]
        logscale += np.log(norms)
        out[p - 1] = logscale + log_mini_norm_batch(G)
    return out


def windowed_max_average(values, window=0.25):
    """max over M in the final window of (1/M) sum_{i<M} values[i]."""
    values = np.asarray(values, dtype=float)
    N = values.shape[-1]
    start = max(1, N - math.ceil(window * N) + 1)
    avg = np.cumsum(values, axis=-1)[..., start - 1 :] / np.arange(start, N + 1)
    return avg.max(axis=-1)


def windowed_min_average(values, window=0.25):
    values = np.asarray(values, dtype=float)
    N = values.shape[-1]
    start = max(1, N - math.ceil(window * N) + 1)
    avg = np.cumsum(values, axis=-1)[..., start - 1 :] / np.arange(start, N + 1)
    return avg.min(axis=-1)


def beta_profile(model, x, p_max, N, window=0.25):
    """Array of beta_p for p = 1..p_max (limsup surrogate over the window)."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if N < 10 * p_max:
        raise ValueError("need N >= 10 p")
    pts, D, F = orbit_cocycle(model, x, N + p_max)
    vals = p_step_log_mini(D, F, p_max, N)
    return windowed_max_average(vals, window)


def beta_p(model, x, p, N, window=0.25):
    """beta_p: limsup surrogate of (1/N) sum_{i<N} log m(Df^p|F(f^i x))."""
    return float(beta_profile(model, x, p, N, window)[p - 1])


def chi_F_min(model, x, p_max, N, window=0.25):
    """max over p <= p_max of beta_p / p."""
    betas = beta_profile(model, x, p_max, N, window)
    return float(np.max(betas / np.arange(1, p_max + 1)))


def beta_profile_ensemble(model, points, p_max, N, window=0.25, chunk=100, lower=False):
    """beta_p for many starting points at once (one-dimensional F only).

    With dim F = 1 the p-step mini-norm is a product of one-step norms along
    the transported line, so log m(Df^p|F(f^i x)) is a moving sum of the
    one-step sequence.  Returns an array (K, p_max); with ``lower`` also
    the liminf surrogate of the one-step averages (K,).
    """
    if model.dim_F != 1:
        raise ValueError("ensemble beta profile needs a one-dimensional F")
    if N < 10 * p_max:
        raise ValueError("need N >= 10 p")
    points = np.asarray(points, dtype=float)
    out = np.empty((points.shape[0], p_max))
    low = np.empty(points.shape[0])
    for lo in range(0, points.shape[0], chunk):
        block = points[lo : lo + chunk]
        if isinstance(model, Solenoid):
            pts = np.stack([model.orbit_points(p, N + p_max) for p in block], axis=1)
        else:
            pts = model.orbit_points(block, N + p_max)
        model.check_orbit(pts)
        lm = log_mini_F_ensemble(model, pts)  # (N + p_max - 1, c)
        S = np.concatenate([np.zeros((1, lm.shape[1])), np.cumsum(lm, axis=0)])
        for p in range(1, p_max + 1):
            vals = (S[p : p + N] - S[:N]).T
            out[lo : lo + block.shape[0], p - 1] = windowed_max_average(vals, window)
            if p == 1:
                low[lo : lo + block.shape[0]] = windowed_min_average(vals, window)
    return (out, low) if lower else out


def chi_F_min_ensemble(model, points, p_max, N, window=0.25, chunk=100):
    betas = beta_profile_ensemble(model, points, p_max, N, window, chunk)
    return np.max(betas / np.arange(1, p_max + 1), axis=1)


def m_bar_F(values, window=0.25):
    """Upper Birkhoff average of log m(Df|F) (max of prefix averages over the final window)."""
    if np.shape(values)[-1] < 1:
        raise ValueError("empty trace")
    return windowed_max_average(values, window)


def m_lower_F(values, window=0.25):
    if np.shape(values)[-1] < 1:
        raise ValueError("empty trace")
    return windowed_min_average(values, window)


def m_bar_F_trace(trace, window=0.25):
    if trace.n < 100:
        raise ValueError("trace length must be >= 100")
    return float(m_bar_F(trace.log_mini_F, window))


def m_lower_F_trace(trace, window=0.25):
    if trace.n < 100:
        raise ValueError("trace length must be >= 100")
    return float(m_lower_F(trace.log_mini_F, window))


def jacobian_product(model, x, n):
    """Jac(Df^n|F(x)) via the transported frame, and the pointwise product."""
    pts, D, F = orbit_cocycle(model, x, n + 1)
    G = F[0]
    for k in range(n):
        G = D[k] @ G
    full = jacobian_on_subspace(np.eye(model.dim), G)
    steps = [jacobian_on_subspace(D[k], F[k]) for k in range(n)]
    return full, float(np.prod(steps))


__all__ = [
    "ExponentReport",
    "beta_p",
    "beta_profile",
    "beta_profile_ensemble",
    "chi_F_min",
    "chi_F_min_ensemble",
    "jacobian_on_subspace",
    "jacobian_product",
    "lyapunov_exponents",
    "m_bar_F",
    "m_bar_F_trace",
    "m_lower_F",
    "m_lower_F_trace",
    "mini_norm",
    "orbit",
    "orbit_cocycle",
    "orthonormalize",
    "p_step_log_mini",
    "windowed_max_average",
]
