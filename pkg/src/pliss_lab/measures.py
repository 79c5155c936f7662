"""Histogram measures on a uniform grid: empirical, Følner and Pliss-weighted
measures, push-forwards, invariance defects, and the identity between the
minimal F-exponent and exponents of empirical measures."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cocycle import orbit_cocycle, p_step_log_mini, windowed_max_average
from .models import frames_along, log_mini_norm_batch


@dataclass(frozen=True)
class Grid:
    """Uniform grid over the chart of a manifold."""

    resolution: tuple
    bounds: tuple
    manifold: str

    @property
    def cells(self):
        return int(np.prod(self.resolution))

    @property
    def widths(self):
        return np.array([(hi - lo) / r for (lo, hi), r in zip(self.bounds, self.resolution)])

    def cell_coords(self, points):
        points = np.asarray(points, dtype=float)
        lo = np.array([b[0] for b in self.bounds])
        res = np.array(self.resolution)
        idx = np.floor((points - lo) / self.widths).astype(np.int64)
        return np.clip(idx, 0, res - 1)

    def index(self, points):
        """Flat (C-order) cell index of each point."""
        c = self.cell_coords(points)
        return np.ravel_multi_index(tuple(np.moveaxis(c, -1, 0)), self.resolution)

    def centers(self):
        lo = np.array([b[0] for b in self.bounds])
        axes = [lo[i] + (np.arange(r) + 0.5) * self.widths[i] for i, r in enumerate(self.resolution)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def subsamples(self, cells, per_axis):
        """per_axis^d regularly spaced points inside each listed cell."""
        lo = np.array([b[0] for b in self.bounds])
        coords = np.stack(np.unravel_index(cells, self.resolution), axis=-1)
        offs = (np.arange(per_axis) + 0.5) / per_axis
        grid = np.stack(np.meshgrid(*([offs] * len(self.resolution)), indexing="ij"), axis=-1).reshape(-1, len(self.resolution))
        pts = lo + (coords[:, None, :] + grid[None, :, :]) * self.widths
        return pts


def grid_for(model, resolution):
    d = model.dim
    res = tuple(int(r) for r in (resolution if np.ndim(resolution) else [resolution] * d))
    if len(res) != d:
        raise ValueError("resolution must have one entry per coordinate")
    if model.manifold == "solid_torus":
        bounds = ((0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    else:
        bounds = tuple((0.0, 1.0) for _ in range(d))
    return Grid(res, bounds, model.manifold)


@dataclass(frozen=True)
class GridMeasure:
    grid: Grid
    weights: np.ndarray

    @property
    def resolution(self):
        return self.grid.resolution

    @property
    def manifold(self):
        return self.grid.manifold

    @property
    def total(self):
        return float(self.weights.sum())

    def tv(self, other):
        return 0.5 * float(np.abs(self.weights - other.weights).sum())

    def __add__(self, other):
        return GridMeasure(self.grid, self.weights + other.weights)

    def scale(self, c):
        return GridMeasure(self.grid, c * self.weights)

    def to_rows(self):
        nz = np.flatnonzero(self.weights)
        return [(int(i), float(self.weights[i])) for i in nz]

    def sidecar(self, provenance=None):
        return {
            "resolution": list(self.grid.resolution),
            "bounds": [list(b) for b in self.grid.bounds],
            "manifold": self.grid.manifold,
            "total_mass": self.total,
            "provenance": provenance or {},
        }


def histogram(grid, points, weights=None):
    points = np.asarray(points, dtype=float).reshape(-1, len(grid.resolution))
    idx = grid.index(points)
    w = np.bincount(idx, weights=None if weights is None else np.asarray(weights, dtype=float).ravel(),
                    minlength=grid.cells).astype(float)
    return w


def uniform_measure(grid):
    return GridMeasure(grid, np.full(grid.cells, 1.0 / grid.cells))


def point_mass(grid, point):
    w = np.zeros(grid.cells)
    w[grid.index(np.asarray(point, dtype=float)[None, :])[0]] = 1.0
    return GridMeasure(grid, w)


def birkhoff_empirical(model, x, n, resolution):
    """Histogram of x, f x, ..., f^{n-1} x with equal weights 1/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    grid = grid_for(model, resolution)
    pts = model.orbit_points(np.asarray(x, dtype=float), n)
    model.check_orbit(pts)
    return GridMeasure(grid, histogram(grid, pts) / n)


def push_forward(model, mu, per_axis=4):
    """One-step push-forward: each cell's mass is split over per_axis^d points, mapped and re-binned."""
    grid = mu.grid
    cells = np.flatnonzero(mu.weights)
    pts = grid.subsamples(cells, per_axis)
    k = pts.shape[1]
    w = np.repeat(mu.weights[cells] / k, k)
    img = model.forward(pts.reshape(-1, pts.shape[-1]))
    return GridMeasure(grid, histogram(grid, img, w))


def invariance_defect(model, mu, per_axis=4):
    """Total variation between mu and its one-step push-forward."""
    return mu.tv(push_forward(model, mu, per_axis))


def integrate(mu, observable):
    """Cell-center quadrature of an observable Point -> real."""
    c = mu.grid.centers()
    nz = np.flatnonzero(mu.weights)
    vals = np.asarray(observable(c[nz]), dtype=float)
    return float(np.sum(mu.weights[nz] * vals))


def log_mini_F_observable(model):
    """The function y -> log m(Df|F(y)) for use with ``integrate``."""

    def phi(y):
        E, F = model.splitting(y)
        return log_mini_norm_batch(model.derivative(y) @ F)

    return phi


# --------------------------------------------------------------------------
# Følner and Pliss-weighted measures
# --------------------------------------------------------------------------


def folner_empirical(model, orbit_pts, weights, level, resolution, pliss=None):
    """nu_l and eta_l for one plan level.

    ``orbit_pts`` has shape (T, K, d) with T > max(Q); ``weights`` are the
    disk weights of all K samples; ``pliss`` is the (K, T') boolean Pliss
    matrix (needed for eta).  mu_l is the normalized disk measure on Lambda_l.
    """
    lam = np.asarray(level.lambda_indices)
    if lam.size == 0:
        raise ValueError("empty Lambda")
    grid = grid_for(model, resolution)
    q = level.Q.members
    w = np.asarray(weights, dtype=float)[lam]
    w = w / w.sum()
    if q.size == 0:
        raise ValueError("empty Q")
    pts = orbit_pts[q][:, lam]  # (#Q, |Lambda|, d)
    ww = np.broadcast_to(w, (q.size, lam.size)) / q.size
    nu = GridMeasure(grid, histogram(grid, pts, ww))
    eta = None
    if pliss is not None:
        mask = np.asarray(pliss)[lam][:, q].T  # (#Q, |Lambda|)
        eta = GridMeasure(grid, histogram(grid, pts, np.where(mask, ww, 0.0)))
    return nu, eta


# --------------------------------------------------------------------------
# Exponent of F for empirical measures
# --------------------------------------------------------------------------


@dataclass
class AppendixResult:
    chi: float
    sup_emp: float
    gap: float
    betas: np.ndarray
    measure_side: np.ndarray  # (p_max, len(schedule))
    schedule: list
    one_sided_violation: float
    tv_spread: float = None


def appendix_schedule(n, k_from=5, k_to=10):
    return [math.ceil(n * k / 10) for k in range(k_from, k_to + 1)]


def appendix_identity_check(model, x, p_max, n, resolution=None, schedule=None):
    """Compare chi^F_min(x) with the exponents of the empirical measures mu_x^{n_k}.

    For each n_k and p the measure side is (1/p) * average over the first
    n_k points of log m(Df^p|F); the exponent of mu is the sup over p.  The
    limsup in beta_p is taken over the window of prefix lengths starting at
    the smallest n_k, so each measure side is one of the averages it ranges
    over.  With ``resolution`` given, the empirical measures are also binned
    and their pairwise total-variation spread is reported in ``tv_spread``.
    """
    schedule = appendix_schedule(n) if schedule is None else list(schedule)
    pts, D, F = orbit_cocycle(model, x, n + p_max)
    vals = p_step_log_mini(D, F, p_max, n)  # (p_max, n)
    window = (n - min(schedule) + 1) / n
    betas = windowed_max_average(vals, window)
    ps = np.arange(1, p_max + 1)
    chi = float(np.max(betas / ps))
    csum = np.cumsum(vals, axis=1)
    meas = np.stack([csum[:, nk - 1] / nk for nk in schedule], axis=1) / ps[:, None]
    sup_emp = float(meas.max())
    viol = float(np.max(meas - (betas / ps)[:, None]))
    res = AppendixResult(chi, sup_emp, abs(chi - sup_emp), betas, meas, schedule, viol)
    if resolution is not None:
        grid = grid_for(model, resolution)
        hists = [histogram(grid, pts[:nk]) / nk for nk in schedule]
        res.tv_spread = max(0.5 * float(np.abs(a - b).sum()) for a in hists for b in hists)
    return res


def log_jac_F_average(model, orbit_pts, chunk=64):
    """Average of log Jac(Df|F) over a (T, K, d) ensemble of orbits (first T-1 points)."""
    orbit_pts = np.asarray(orbit_pts, dtype=float)
    total = 0.0
    count = 0
    for lo in range(0, orbit_pts.shape[1], chunk):
        block = orbit_pts[:, lo : lo + chunk]
        _, F = frames_along(model, block, need_E=False)
        M = model.derivative(block[:-1]) @ F[:-1]
        if M.shape[-1] == 1:
            v = np.log(np.linalg.norm(M[..., 0], axis=-1))
        else:
            v = 0.5 * np.linalg.slogdet(np.swapaxes(M, -1, -2) @ M)[1]
        total += math.fsum(v.ravel())
        count += v.size
    return total / count
