"""Sweeps for the geometric constants theta0, delta0, N and delta_eps.

Each constant is taken from a fixed descending ladder: the first rung at
which the corresponding check passes is frozen and reported in the run
manifest.  If no rung passes the model is flagged "calibration exhausted".
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import (
    CalibrationError,
    cone_invariance_check,
    distortion_check,
    make_fdisk,
    pliss_iterate_check,
    push,
)
from .models import Solenoid, log_mini_F_ensemble
from .pliss import pliss_mask

THETA_LADDER = (1.0, 0.5, 0.3, 0.2, 0.1)
DELTA_LADDER = (0.1, 0.05, 0.025, 0.0125)
N_LADDER = (1, 2, 4, 8, 16)


@dataclass
class Calibration:
    model: str
    theta0: float
    delta0: float
    n_min: int
    delta_eps: float
    disk_radius: float
    sweeps: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def calibration_disk(model, rng, radius, n_cells=1000):
    """A disk along F through a random point (pushed onto the attractor for the solenoid)."""
    x = model.random_points(rng, 1)[0]
    if isinstance(model, Solenoid):
        x = model.orbit_points(x, 40)[-1]
    return make_fdisk(model, x, radius, n_cells)


def anchor_pliss_times(disk, s_anchor, horizon, a_prime):
    """Boolean Pliss masks (anchors, horizon + 1) of the anchors' F-expansion sequences."""
    pts = push(disk, np.asarray(s_anchor, dtype=float), horizon).points
    lm = log_mini_F_ensemble(disk.model, pts)
    return pliss_mask(lm.T, a_prime)


def calibrate(model, rng, a, a_prime, epsilon=0.1, disk_radius=0.1, anchors=5,
              horizon=24, cone_samples=2000, distortion_n=10):
    sweeps = {"theta": [], "delta0": [], "delta_eps": []}
    theta0 = None
    for th in THETA_LADDER:
        ok, worst = cone_invariance_check(model, th, cone_samples, rng)
        sweeps["theta"].append([th, bool(ok), worst])
        if ok:
            theta0 = th
            break
    if theta0 is None:
        raise CalibrationError(f"calibration exhausted: no cone aperture certified for {model.name}")

    disk = calibration_disk(model, rng, disk_radius)
    s_anchor = rng.uniform(-0.5, 0.5, anchors) * disk_radius
    masks = anchor_pliss_times(disk, s_anchor, horizon, a_prime)

    delta0 = None
    n_min = None
    for d0 in DELTA_LADDER:
        for n0 in N_LADDER:
            ok = True
            for s_x, row in zip(s_anchor, masks):
                times = np.flatnonzero(row[n0:]) + n0
                for n in times[:3]:
                    try:
                        r = pliss_iterate_check(disk, s_x, int(n), a, d0, pairs=200, rng=rng, samples=401)
                    except CalibrationError:
                        ok = False
                        break
                    ok &= r.passed
                if not ok:
                    break
            sweeps["delta0"].append([d0, n0, bool(ok)])
            if ok:
                delta0, n_min = d0, n0
                break
        if delta0 is not None:
            break
    if delta0 is None:
        raise CalibrationError(f"calibration exhausted: no delta0 passes the Pliss-iterate check for {model.name}")

    delta_eps = None
    de = delta0
    for _ in range(6):
        ok = True
        for s_x in s_anchor:
            try:
                ok &= distortion_check(disk, s_x, distortion_n, epsilon, de, samples=1001).passed
            except CalibrationError:
                ok = False
        sweeps["delta_eps"].append([de, bool(ok)])
        if ok:
            delta_eps = de
            break
        de /= 2
    if delta_eps is None:
        raise CalibrationError(f"calibration exhausted: no delta_eps passes the distortion check for {model.name}")
    return Calibration(model.name, theta0, delta0, int(n_min), delta_eps, disk_radius, sweeps)
