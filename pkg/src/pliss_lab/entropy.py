"""Iterated partitions, atom codes, the finite-level Gibbs inequality, block
entropy rates and the Pesin / Ruelle checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import grid_for, log_jac_F_average
from .models import Solenoid, numeric_F, orthonormalize


# --------------------------------------------------------------------------
# Partitions and codes
# --------------------------------------------------------------------------


def partition_diameter(model, resolution):
    return float(np.linalg.norm(grid_for(model, resolution).widths))


def atom_code(model, x, resolution, Q):
    """Cell index of f^k x for each k in Q, in increasing order."""
    grid = grid_for(model, resolution)
    q = np.asarray(Q.members if hasattr(Q, "members") else Q, dtype=np.int64)
    if q.size == 0:
        return np.empty(0, dtype=np.int64)
    pts = model.orbit_points(np.asarray(x, dtype=float), int(q.max()) + 1)
    return grid.index(pts[q])


def ensemble_orbits(model, starts, length, chunk=64):
    """Yield (offset, points) blocks of shape (length, c, d) for chunks of starts."""
    starts = np.asarray(starts, dtype=float)
    for lo in range(0, starts.shape[0], chunk):
        block = starts[lo : lo + chunk]
        if isinstance(model, Solenoid):
            pts = np.stack([model.orbit_points(p, length) for p in block], axis=1)
        else:
            pts = model.orbit_points(block, length)
        model.check_orbit(pts)
        yield lo, pts


def orbit_codes(model, starts, length, resolution, chunk=64):
    """Codes (K, length) of K orbits in the grid partition, plus the mean log Jac(Df|F)."""
    grid = grid_for(model, resolution)
    starts = np.asarray(starts, dtype=float)
    codes = np.empty((starts.shape[0], length), dtype=np.int64)
    total = 0.0
    count = 0
    for lo, pts in ensemble_orbits(model, starts, length, chunk):
        codes[lo : lo + pts.shape[1]] = grid.index(pts).T
        if length > 1:
            avg = log_jac_F_average(model, pts, chunk=pts.shape[1])
            m = (length - 1) * pts.shape[1]
            total += avg * m
            count += m
    return codes, (total / count if count else float("nan"))


# --------------------------------------------------------------------------
# Block entropies
# --------------------------------------------------------------------------


def _entropy_from_labels(labels, correction):
    counts = np.bincount(labels)
    counts = counts[counts > 0]
    N = counts.sum()
    p = counts / N
    H = -float(np.sum(p * np.log(p)))
    if correction == "miller-madow":
        H += (counts.size - 1) / (2.0 * N)
    elif correction not in (None, "none", "plug-in"):
        raise ValueError(f"unknown correction {correction!r}")
    return H


def block_entropies(codes, block_max, correction="miller-madow"):
    """H_1..H_block_max of overlapping blocks, all computed on the same start positions."""
    codes = np.atleast_2d(np.asarray(codes, dtype=np.int64))
    R, T = codes.shape
    P = T - block_max + 1
    if P < 1:
        raise ValueError("orbit shorter than block_max")
    _, first = np.unique(codes, return_inverse=True)
    first = first.reshape(codes.shape)
    A = int(first.max()) + 1
    lab = first[:, :P].ravel()
    out = [_entropy_from_labels(lab, correction)]
    for k in range(2, block_max + 1):
        key = lab * A + first[:, k - 1 : k - 1 + P].ravel()
        _, lab = np.unique(key, return_inverse=True)
        lab = lab.ravel()
        out.append(_entropy_from_labels(lab, correction))
    return np.array(out)


def conditional_entropies(codes, block_max, correction="miller-madow"):
    """h_k = H_k - H_{k-1} for k = 1..block_max (with H_0 = 0)."""
    H = block_entropies(codes, block_max, correction)
    return np.diff(np.concatenate([[0.0], H]))


def entropy_rate(codes, block_max, correction="miller-madow"):
    """Conditional block entropy H(block_max) - H(block_max - 1), nats per iterate."""
    if block_max < 2:
        raise ValueError("block_max must be >= 2")
    return float(conditional_entropies(codes, block_max, correction)[-1])


# --------------------------------------------------------------------------
# Pesin and Ruelle
# --------------------------------------------------------------------------


@dataclass
class PesinResult:
    h_est: float
    jac_integral: float
    residual: float
    profile: np.ndarray


@dataclass
class RuelleResult:
    h_est: float
    sum_positive_exponents: float
    slack: float


def pesin_check(model, starts, length, resolution, block_max, correction="miller-madow"):
    """Entropy-rate estimate against the integral of log Jac(Df|F) along the same orbits."""
    codes, jac = orbit_codes(model, starts, length, resolution)
    prof = conditional_entropies(codes, block_max, correction)
    h = float(prof[-1])
    return PesinResult(h, jac, h - jac, prof)


def ruelle_check(h_est, exponents):
    pos = math.fsum(v for v in exponents if v > 0)
    return RuelleResult(h_est, pos, pos - h_est)


# --------------------------------------------------------------------------
# Gibbs inequality at a Følner level
# --------------------------------------------------------------------------


@dataclass
class GibbsResult:
    violations: int
    worst_margin: float
    log_lhs: np.ndarray
    log_rhs: np.ndarray
    atoms: int
    mode: str
    lhs: np.ndarray
    labels: np.ndarray


def _boundary_distances(grid, pts, t):
    """Distances from pts to the boundary of their cell along +t and -t."""
    lo = np.array([b[0] for b in grid.bounds])
    w = grid.widths
    rel = (pts - lo) / w
    pos = rel - grid.cell_coords(pts)
    pos = np.clip(pos, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        up = np.where(t > 0, (1.0 - pos) * w / t, np.where(t < 0, pos * w / -t, np.inf))
        down = np.where(t > 0, pos * w / t, np.where(t < 0, (1.0 - pos) * w / -t, np.inf))
    return down.min(axis=-1), up.min(axis=-1)


def _relabel(label, cells, ncells):
    _, inv = np.unique(label * ncells + cells, return_inverse=True)
    return inv.ravel()


def gibbs_check(disk, lam, Q, resolution, epsilon, mode="component"):
    """Compare Leb_D(A^Q(x) ∩ Lambda) with e^{eps #Q} e^{-sum_{i in Q} log Jac(Df|F(f^i x))}.

    ``mode="samples"`` takes the left side as the summed weight of Lambda
    samples sharing x's code.  ``mode="component"`` resolves the connected
    piece of the atom through x by following the tangent of the disk along
    the orbit: at each k in Q the piece cannot extend past the distance
    from f^k x to its cell boundary divided by the tangent stretch J_k, so
    the piece is [s_x - min_k a^-_k / J_k, s_x + min_k a^+_k / J_k].  Its
    intersection with the union of Lambda cells is added to the weight of
    any Lambda samples that share the code but lie outside the piece.
    """
    model = disk.model
    grid = grid_for(model, resolution)
    lam = np.asarray(lam, dtype=np.int64)
    q = Q.members
    T = int(q.max()) + 1 if q.size else 0
    if isinstance(model, Solenoid) and T > 45:
        raise ValueError("solenoid Gibbs checks use float angle doubling; keep max(Q) <= 45")
    qmask = np.zeros(T, dtype=bool)
    qmask[q] = True
    s = disk.s[lam]
    w = disk.weights[lam]
    K = lam.size
    pts = disk.point_at(s)
    t = np.broadcast_to(disk.direction, pts.shape).copy()
    logJ = np.zeros(K)
    e_an, f_an = model.analytic
    F = None if f_an else numeric_F(model, pts)
    _, F0 = model.reference_axes()
    label = np.zeros(K, dtype=np.int64)
    c_minus = np.full(K, np.inf)
    c_plus = np.full(K, np.inf)
    jac_sum = np.zeros(K)
    for k in range(T):
        D = model.derivative(pts)
        Fk = model.analytic_F(pts) if f_an else F
        if qmask[k]:
            cells = grid.index(pts)
            label = _relabel(label, cells, grid.cells)
            if mode == "component":
                dm, dp = _boundary_distances(grid, pts, t)
                with np.errstate(divide="ignore"):
                    c_minus = np.minimum(c_minus, np.log(dm) - logJ)
                    c_plus = np.minimum(c_plus, np.log(dp) - logJ)
            jac_sum += np.log(np.linalg.norm(np.einsum("kij,kj->ki", D, Fk[..., 0]), axis=-1))
        v = np.einsum("kij,kj->ki", D, t)
        nv = np.linalg.norm(v, axis=-1)
        t = v / nv[:, None]
        logJ += np.log(nv)
        if not f_an:
            F = orthonormalize(D @ F, F0)
        pts = model.forward(pts)
    log_rhs = epsilon * q.size - jac_sum
    # group samples by code
    order = np.argsort(label, kind="stable")
    groups = np.split(order, np.flatnonzero(np.diff(label[order])) + 1) if K else []
    atoms = len(groups)
    if mode == "samples":
        lhs = np.empty(K)
        for g in groups:
            lhs[g] = w[g].sum()
        with np.errstate(divide="ignore"):
            log_lhs = np.log(lhs)
    elif mode == "component":
        log_lhs = _component_log_mass(disk, lam, s, w, c_minus, c_plus, groups)
        lhs = np.exp(log_lhs)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    margin = log_lhs - log_rhs
    return GibbsResult(int(np.count_nonzero(margin > 0)), float(margin.max()), log_lhs, log_rhs, atoms, mode, lhs, label)


def _component_log_mass(disk, lam, s, w, c_minus, c_plus, groups):
    """log of Leb(piece ∩ Lambda cells) plus same-code Lambda mass outside the piece.

    Pieces inside the sample's own cell are measured in log space so that
    very short pieces (long Q) keep a finite, comparable logarithm.
    """
    edges = disk.edges
    ind = np.zeros(disk.n_cells)
    ind[lam] = 1.0
    cum = np.concatenate([[0.0], np.cumsum(ind * disk.weights)])
    own_lo = edges[lam]
    own_hi = edges[lam + 1]
    with np.errstate(over="ignore"):
        reach_lo = s - np.exp(c_minus)
        reach_hi = s + np.exp(c_plus)
    inside = (reach_lo >= own_lo) & (reach_hi <= own_hi)
    lo = np.clip(reach_lo, -disk.radius, disk.radius)
    hi = np.clip(reach_hi, -disk.radius, disk.radius)
    with np.errstate(divide="ignore"):
        log_piece = np.where(
            inside,
            np.logaddexp(c_minus, c_plus),
            np.log(np.interp(hi, edges, cum) - np.interp(lo, edges, cum)),
        )
    extra = np.zeros(s.size)
    for g in groups:
        if g.size < 2:
            continue
        for i in g:
            others = g[g != i]
            outside = (own_hi[others] < lo[i]) | (own_lo[others] > hi[i])
            extra[i] = w[others][outside].sum()
    with np.errstate(divide="ignore"):
        return np.logaddexp(log_piece, np.log(extra))
