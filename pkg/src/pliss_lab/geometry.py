"""Cone fields, one-dimensional F-disks, dynamical balls and Vitali selection.

Disks are straight segments c + s t (|s| <= r) in the flat chart, with t a
unit vector inside the F-cone.  Every quantity along a disk is expressed in
the arc parameter s, so Lebesgue measure on the disk is ds and Lebesgue
measure on an iterate is J_n(s) ds, where J_n(s) = |Df^n t| at c + s t.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .models import frames_along


class ConeError(RuntimeError):
    """A pushed tangent vector left the configured cone."""


class CalibrationError(RuntimeError):
    """A geometric constant is too large or too small for the requested check."""


# --------------------------------------------------------------------------
# Cones
# --------------------------------------------------------------------------


def split_vector(E, F, v):
    """Components (v^E, v^F) of v in the splitting with frames E, F."""
    B = np.concatenate([E, F], axis=-1)
    coef = np.linalg.solve(B, v[..., None])[..., 0]
    kE = E.shape[-1]
    vE = np.einsum("...ij,...j->...i", E, coef[..., :kE])
    vF = np.einsum("...ij,...j->...i", F, coef[..., kE:])
    return vE, vF


def cone_ratio(model, x, v, frames=None):
    """|v^E| / |v^F| at x (inf when v^F = 0)."""
    E, F = model.splitting(x) if frames is None else frames
    vE, vF = split_vector(E, F, np.asarray(v, dtype=float))
    nE = np.linalg.norm(vE, axis=-1)
    nF = np.linalg.norm(vF, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(nF > 0, nE / np.where(nF > 0, nF, 1.0), np.inf)


def in_cone(model, x, v, theta, frames=None):
    """Strict membership |v^E| < theta |v^F|."""
    return cone_ratio(model, x, v, frames) < theta


def _random_unit(rng, shape, k):
    g = rng.standard_normal(shape + (k,))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def cone_invariance_check(model, theta, samples, rng, points=None):
    """Check Df(C_theta(x)) inside C_{theta/2}(f x) on boundary vectors.

    Returns (passed, worst_ratio) with ratio = |(Df v)^E| / ((theta/2) |(Df v)^F|).
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    x = model.random_points(rng, samples) if points is None else np.asarray(points, dtype=float)
    E, F = model.splitting(x)
    a = _random_unit(rng, (x.shape[0],), model.dim_E)
    b = _random_unit(rng, (x.shape[0],), model.dim_F)
    eF = np.einsum("...ij,...j->...i", F, b)
    eE = np.einsum("...ij,...j->...i", E, a)
    eE *= (np.linalg.norm(eF, axis=-1) / np.linalg.norm(eE, axis=-1))[:, None]
    v = eF + theta * eE
    w = np.einsum("...ij,...j->...i", model.derivative(x), v)
    fx = model.forward(x)
    ratio = cone_ratio(model, fx, w) / (theta / 2)
    worst = float(np.max(ratio))
    return worst < 1.0, worst


# --------------------------------------------------------------------------
# F-disks
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FDisk:
    """Segment c + s t, |s| <= radius, sampled at n_cells cell midpoints."""

    model: object
    center: np.ndarray
    direction: np.ndarray
    radius: float
    n_cells: int = 1000
    lipschitz_bound: float = 0.0

    @property
    def edges(self):
        return np.linspace(-self.radius, self.radius, self.n_cells + 1)

    @property
    def s(self):
        e = self.edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def pitch(self):
        return 2.0 * self.radius / self.n_cells

    @property
    def weights(self):
        return np.diff(self.edges)

    @property
    def points(self):
        return self.point_at(self.s)

    @property
    def total_weight(self):
        return 2.0 * self.radius

    def point_at(self, s):
        s = np.asarray(s, dtype=float)
        return self.model.reduce(self.center + s[..., None] * self.direction)

    def index_of(self, s):
        """Index of the sample cell containing parameter s."""
        i = np.floor((np.asarray(s) + self.radius) / self.pitch).astype(np.int64)
        return np.clip(i, 0, self.n_cells - 1)


def make_fdisk(model, center, radius, n_cells=1000, direction=None):
    """F-disk through ``center``: a segment along F(center) unless ``direction`` is given."""
    if model.dim_F != 1:
        raise NotImplementedError("disks are implemented for one-dimensional F")
    center = np.asarray(center, dtype=float)
    E, F = model.splitting(center)
    t = F[:, 0] if direction is None else np.asarray(direction, dtype=float)
    t = t / np.linalg.norm(t)
    lip = float(cone_ratio(model, center, t, (E, F)))
    return FDisk(model, center, t, float(radius), int(n_cells), lip)


@dataclass
class PushResult:
    points: np.ndarray  # (n+1, K, d)
    log_jac: np.ndarray  # (n+1, K): log |Df^k t|
    tangents: np.ndarray  # (n+1, K, d), unit


def push(disk, s, n, theta=None):
    """Iterate disk points at parameters s together with their tangent.

    If ``theta`` is given, every pushed tangent must stay in C_theta; a
    violation raises ConeError naming the step.
    """
    model = disk.model
    s = np.atleast_1d(np.asarray(s, dtype=float))
    K = s.size
    pts = np.empty((n + 1, K, model.dim))
    tans = np.empty_like(pts)
    lj = np.zeros((n + 1, K))
    pts[0] = disk.point_at(s)
    tans[0] = disk.direction
    for k in range(1, n + 1):
        v = np.einsum("kij,kj->ki", model.derivative(pts[k - 1]), tans[k - 1])
        nv = np.linalg.norm(v, axis=-1)
        tans[k] = v / nv[:, None]
        lj[k] = lj[k - 1] + np.log(nv)
        pts[k] = model.forward(pts[k - 1])
        if theta is not None:
            bad = ~in_cone(model, pts[k], tans[k], theta)
            if np.any(bad):
                raise ConeError(f"pushed tangent left the cone of aperture {theta} at step {k}")
    return PushResult(pts, lj, tans)


@dataclass
class ImageDisk:
    """A piece of f^n(D): samples with image weights and their base parameters."""

    center: np.ndarray
    radius: float
    points: np.ndarray
    weights: np.ndarray
    base_s: np.ndarray
    base_weights: np.ndarray
    log_jac: np.ndarray
    step: int


def iterate_disk(disk, n, delta0, theta=None, max_nodes=2_000_000):
    """Image of the disk after n steps, re-cut into pieces of radius <= delta0.

    Nodes are pushed one step at a time; a cell whose image chord exceeds
    twice the original pitch is split at its parameter midpoint.  Samples
    are cell midpoints, carrying base weight ds and image weight J_n ds.
    """
    if n == 0:
        return [ImageDisk(disk.point_at(0.0), disk.radius, disk.points, disk.weights,
                          disk.s, disk.weights, np.zeros(disk.n_cells), 0)]
    model = disk.model
    limit = 2.0 * disk.pitch
    s_nodes = disk.edges
    pts = disk.point_at(s_nodes)
    for k in range(1, n + 1):
        pts = model.forward(pts)
        while True:
            chord = model.distance(pts[:-1], pts[1:])
            big = np.flatnonzero(chord > limit)
            if big.size == 0:
                break
            if s_nodes.size + big.size > max_nodes:
                raise CalibrationError("disk subdivision exceeded the node budget")
            s_new = 0.5 * (s_nodes[big] + s_nodes[big + 1])
            p_new = push(disk, s_new, k).points[k]
            s_nodes = np.insert(s_nodes, big + 1, s_new)
            pts = np.insert(pts, big + 1, p_new, axis=0)
    s_mid = 0.5 * (s_nodes[:-1] + s_nodes[1:])
    base_w = np.diff(s_nodes)
    res = push(disk, s_mid, n, theta)
    lj = res.log_jac[n]
    img_w = base_w * np.exp(lj)
    total = img_w.sum()
    pieces = max(1, math.ceil(total / (2.0 * delta0) - 1e-12))
    pos = np.cumsum(img_w) - 0.5 * img_w
    label = np.minimum((pos / total * pieces).astype(np.int64), pieces - 1)
    out = []
    for j in range(pieces):
        idx = np.flatnonzero(label == j)
        if idx.size == 0:
            continue
        w = img_w[idx]
        mid = idx[np.searchsorted(np.cumsum(w), 0.5 * w.sum())]
        out.append(ImageDisk(res.points[n][mid], 0.5 * float(w.sum()), res.points[n][idx], w,
                             s_mid[idx], base_w[idx], lj[idx], n))
    return out


def jacobian_integral(disk, n, nodes=64, panels=None):
    """Independent Gauss-Legendre quadrature of the integral of J_n(s) ds over the disk."""
    panels = disk.n_cells if panels is None else panels
    g, gw = np.polynomial.legendre.leggauss(nodes)
    e = np.linspace(-disk.radius, disk.radius, panels + 1)
    half = 0.5 * np.diff(e)
    mid = 0.5 * (e[:-1] + e[1:])
    s = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    lj = push(disk, s, n).log_jac[n]
    return float(np.sum(w * np.exp(lj)))


# --------------------------------------------------------------------------
# Local windows around an anchor
# --------------------------------------------------------------------------


@dataclass
class LocalWindow:
    """Fine sampling of a sub-interval of the disk around an anchor."""

    s: np.ndarray  # sample parameters, increasing
    push: PushResult
    anchor_s: float

    def arc(self, k):
        """Cumulative arc length of the step-k image, measured from the anchor."""
        J = np.exp(self.push.log_jac[k])
        cell = 0.5 * (J[:-1] + J[1:]) * np.diff(self.s)
        c = np.concatenate([[0.0], np.cumsum(cell)])
        c0 = np.interp(self.anchor_s, self.s, c)
        return c - c0


def local_window(disk, s_x, n, radius, samples=2001, grow=1.6, theta=None):
    """Sample a parameter interval whose n-th image covers arc radius ``radius`` around f^n(x).

    The interval is clipped to the disk; ``covered`` reports whether the
    requested image radius was reached on both sides.
    """
    lj0 = push(disk, np.array([s_x]), n).log_jac[n, 0]
    rho = 1.2 * radius / math.exp(lj0)
    for _ in range(200):
        lo = max(-disk.radius, s_x - rho)
        hi = min(disk.radius, s_x + rho)
        s = np.linspace(lo, hi, samples)
        s = np.unique(np.concatenate([s, [s_x]]))
        win = LocalWindow(s, push(disk, s, n, theta), float(s_x))
        c = win.arc(n)
        left_ok = c[0] <= -radius or lo <= -disk.radius
        right_ok = c[-1] >= radius or hi >= disk.radius
        if left_ok and right_ok:
            covered = c[0] <= -radius and c[-1] >= radius
            return win, covered
        rho *= grow
    raise CalibrationError("could not bracket the image ball")


# --------------------------------------------------------------------------
# Bounded distortion and backward contraction
# --------------------------------------------------------------------------


@dataclass
class DistortionResult:
    lhs: float
    mid: float
    rhs: float
    passed: bool
    leb_gamma: float
    leb_image: float
    identity_ratio: float


def anchor_log_jac_F(model, x, n):
    """sum_{i<n} log Jac(Df|F(f^i x)) along the model's F-bundle."""
    pts = model.orbit_points(np.asarray(x, dtype=float), n + 1)
    _, F = frames_along(model, pts, need_E=False)
    DF = model.derivative(pts[:-1]) @ F[:-1]
    return float(np.sum(np.log(np.linalg.norm(DF[..., 0], axis=-1))))


def distortion_check(disk, s_x, n, epsilon, delta_eps, samples=4001):
    """Two-sided bounded-distortion estimate on Gamma = points delta_eps-close to the anchor orbit."""
    model = disk.model
    win, _ = local_window(disk, s_x, n, 2.0 * delta_eps, samples)
    x_orbit = push(disk, np.array([s_x]), n).points[:, 0]
    d = model.distance(win.push.points, x_orbit[:, None, :])
    close = (d <= delta_eps).all(axis=0)
    if not close.any():
        raise CalibrationError("Gamma is empty: shrink delta_eps or n")
    # quadrature cells around each sample (midpoint weights)
    e = np.concatenate([[win.s[0]], 0.5 * (win.s[:-1] + win.s[1:]), [win.s[-1]]])
    w = np.diff(e)
    J = np.exp(win.push.log_jac[n])
    leb_gamma = float(np.sum(w[close]))
    leb_image = float(np.sum(w[close] * J[close]))
    if leb_gamma == 0.0:
        raise CalibrationError("Gamma has zero length: shrink n or enlarge delta_eps")
    jac = anchor_log_jac_F(model, disk.point_at(s_x), n)
    mid = leb_gamma * math.exp(jac)
    lhs = math.exp(-n * epsilon) * leb_image
    rhs = math.exp(n * epsilon) * leb_image
    return DistortionResult(lhs, mid, rhs, bool(lhs <= mid <= rhs), leb_gamma, leb_image, mid / leb_image)


@dataclass
class PlissIterateResult:
    max_violation: float
    distortion_C: float
    passed: bool


def pliss_iterate_check(disk, s_x, n, a, delta0, pairs=2000, rng=None, samples=2001):
    """Backward contraction of f^{-i} on the delta0-disk around f^n(x), 0 <= i <= n.

    Distances are intrinsic (arc length along the iterated disk).  Reports
    max over sampled pairs and 1 <= i <= n of log(d_{n-i} / d_n) + i a
    (<= 0 means the contraction e^{-ia} holds) and the Jacobian distortion
    ratio C.
    """
    win, covered = local_window(disk, s_x, n, delta0, samples)
    if not covered:
        raise CalibrationError("image disk around f^n x is smaller than delta0")
    c_n = win.arc(n)
    # restrict to the delta0 image disk and resample it finely
    lo = np.interp(-delta0, c_n, win.s)
    hi = np.interp(delta0, c_n, win.s)
    s = np.linspace(lo, hi, samples)
    sub = LocalWindow(s, push(disk, s, n), float(s_x))
    arcs = np.stack([sub.arc(k) for k in range(n + 1)])  # (n+1, samples)
    rng = np.random.default_rng(0) if rng is None else rng
    i1 = rng.integers(0, samples, pairs)
    i2 = rng.integers(0, samples, pairs)
    i1 = np.concatenate([i1, np.arange(samples - 1)])
    i2 = np.concatenate([i2, np.arange(1, samples)])
    keep = i1 != i2
    i1, i2 = i1[keep], i2[keep]
    dist = np.abs(arcs[:, i1] - arcs[:, i2])  # (n+1, pairs) indexed by step k
    steps_back = np.arange(n, -1, -1)  # i = n - k
    viol = np.log(dist / dist[n][None, :]) + (steps_back * a)[:, None]
    J = np.exp(sub.push.log_jac[n])
    C = float(J.max() / J.min())
    # i = 0 is the identity and contributes exactly 0
    worst = float(viol[:n].max()) if n > 0 else 0.0
    return PlissIterateResult(worst, C, worst <= 1e-9)


# --------------------------------------------------------------------------
# Dynamical balls
# --------------------------------------------------------------------------


@dataclass
class DynamicalBall:
    disk: FDisk = field(repr=False)
    anchor_s: float
    n: int
    delta: float
    s_lo: float
    s_hi: float

    @property
    def mass(self):
        return self.s_hi - self.s_lo

    @property
    def member_indices(self):
        s = self.disk.s
        return np.flatnonzero((s >= self.s_lo) & (s <= self.s_hi))

    def contains(self, s):
        return (np.asarray(s) >= self.s_lo) & (np.asarray(s) <= self.s_hi)

    def meets(self, other):
        return max(self.s_lo, other.s_lo) <= min(self.s_hi, other.s_hi)

    def subset_of(self, other, tol=0.0):
        return self.s_lo >= other.s_lo - tol and self.s_hi <= other.s_hi + tol


def ball_from_window(disk, win, n, delta):
    c = win.arc(n)
    lo = float(np.interp(-delta, c, win.s)) if c[0] <= -delta else float(win.s[0])
    hi = float(np.interp(delta, c, win.s)) if c[-1] >= delta else float(win.s[-1])
    return DynamicalBall(disk, win.anchor_s, n, delta, lo, hi)


def dynamical_ball(disk, s_x, n, delta, samples=2001):
    """B_{D,n}(x, delta) = f^{-n} of the intrinsic delta-ball around f^n x in f^n D."""
    win, _ = local_window(disk, s_x, n, delta, samples)
    return ball_from_window(disk, win, n, delta)


def dynamical_balls(disk, s_x, n, delta0, samples=2001):
    """The nested triple at radii delta0/3, 2 delta0/3 and delta0."""
    win, _ = local_window(disk, s_x, n, delta0, samples)
    return tuple(ball_from_window(disk, win, n, r * delta0) for r in (1 / 3, 2 / 3, 1.0))


def double_size_ratio(disk, anchors, times, delta0, samples=2001):
    """Largest observed Leb(hat-hat ball) / Leb(ball) over anchors and times."""
    worst = 0.0
    for s_x, ns in zip(anchors, times):
        for n in ns:
            b, _, bb = dynamical_balls(disk, s_x, n, delta0, samples)
            worst = max(worst, bb.mass / b.mass)
    return worst


def containment_violations(triples):
    """Check: n1 <= n2 and B_{n1}(z1) meets hat B_{n2}(z2) imply B_{n2}(z2) in hat-hat B_{n1}(z1).

    ``triples`` is a list of (B, hatB, hathatB) for balls on one disk.
    Returns (tested pairs, violations).
    """
    tested = 0
    bad = []
    for i, (b1, h1, hh1) in enumerate(triples):
        for j, (b2, h2, hh2) in enumerate(triples):
            if i == j or b1.n > b2.n:
                continue
            if b1.meets(h2):
                tested += 1
                if not b2.subset_of(hh1, tol=1e-15):
                    bad.append((i, j))
    return tested, bad


def density_ratio(ball, indicator, samples=513):
    """Leb(B ∩ Gamma) / Leb(B) by uniform quadrature in the ball parameter."""
    s = np.linspace(ball.s_lo, ball.s_hi, samples)
    g = np.asarray(indicator(s), dtype=float)
    w = np.full(samples, 1.0)
    w[0] = w[-1] = 0.5
    return float(np.sum(w * g) / np.sum(w))


# --------------------------------------------------------------------------
# Vitali selection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalBall:
    """Ball and its hat as closed parameter intervals on a one-dimensional disk."""

    lo: float
    hi: float
    hat_lo: float
    hat_hi: float
    n: int = 0


@dataclass
class VitaliResult:
    accepted: list
    witness: dict


def _as_interval_ball(b):
    if isinstance(b, IntervalBall):
        return b
    ball, hat = b
    return IntervalBall(ball.s_lo, ball.s_hi, hat.s_lo, hat.s_hi, ball.n)


def vitali_select(balls):
    """Greedy pass in increasing n: accept a ball iff its hat misses every accepted ball.

    Accepted balls are pairwise disjoint by construction (each ball sits
    inside its own hat).  ``witness`` maps each rejected index to an
    accepted index whose ball meets the rejected hat.
    """
    items = [_as_interval_ball(b) for b in balls]
    order = sorted(range(len(items)), key=lambda i: (items[i].n, i))
    starts, ends, owners = [], [], []
    accepted = []
    witness = {}
    for i in order:
        b = items[i]
        # accepted intervals are disjoint and sorted, so the first one ending at
        # or after hat_lo is the only candidate for an overlap
        j = bisect.bisect_left(ends, b.hat_lo)
        if j < len(starts) and starts[j] <= b.hat_hi:
            witness[i] = owners[j]
            continue
        k = bisect.bisect_left(starts, b.lo)
        starts.insert(k, b.lo)
        ends.insert(k, b.hi)
        owners.insert(k, i)
        accepted.append(i)
    return VitaliResult(sorted(accepted), witness)


def verify_vitali(balls, result):
    """Exhaustive pair check; returns (disjoint, every_rejected_covered)."""
    items = [_as_interval_ball(b) for b in balls]
    acc = result.accepted
    disjoint = True
    for a_i, a in enumerate(acc):
        for b in acc[a_i + 1 :]:
            if max(items[a].lo, items[b].lo) <= min(items[a].hi, items[b].hi):
                disjoint = False
    covered = True
    acc_set = set(acc)
    for i, b in enumerate(items):
        if i in acc_set:
            continue
        if not any(max(b.hat_lo, items[a].lo) <= min(b.hat_hi, items[a].hi) for a in acc):
            covered = False
    return disjoint, covered
