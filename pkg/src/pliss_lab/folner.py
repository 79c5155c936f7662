"""Construction and verification of Følner time sets filled with Pliss times.

Given the Pliss sets of an ensemble of disk samples, ``folner_select``
builds levels (n_l, Lambda_l, Q_l) by a greedy interval-union rule and
``verify_folner`` evaluates the seven required properties at each level.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .pliss import TimeSet, boundary, fill


@dataclass(frozen=True)
class FolnerLevel:
    n: int
    lambda_indices: np.ndarray
    Q: TimeSet


@dataclass
class FolnerPlan:
    levels: list
    alpha: float
    sample_weights: np.ndarray
    horizon: int
    dropped: list = field(default_factory=list)


@dataclass(frozen=True)
class FolnerTolerances:
    eps_boundary: float = 0.05
    eps_mass: float = 0.05
    eps_fill: float = 0.1
    m: int = 50


@dataclass
class LevelReport:
    n: int
    q_density: float
    boundary_ratio: float
    log_mass_ratio: float
    boundary_in_pliss: bool
    fill_deficit: float
    lower_density: float
    lambda_size: int

    def as_dict(self):
        return asdict(self)


@dataclass
class FolnerReport:
    levels: list
    items: dict
    alpha: float

    @property
    def passed(self):
        return all(self.items.values())

    def as_json(self):
        return {
            "alpha": self.alpha,
            "items": dict(self.items),
            "levels": [lv.as_dict() for lv in self.levels],
        }


def geometric_schedule(N, level_count):
    """n_l = ceil(N / 2^(L-1-l)), deduplicated and strictly increasing."""
    ns = [math.ceil(N / 2 ** (level_count - 1 - l)) for l in range(level_count)]
    out = []
    for n in ns:
        if n >= 1 and (not out or n > out[-1]):
            out.append(n)
    return out


def pliss_matrix(pliss_sets, N):
    """Stack Pliss sets into a boolean (samples, N+1) matrix."""
    M = np.zeros((len(pliss_sets), N + 1), dtype=bool)
    for i, P in enumerate(pliss_sets):
        if isinstance(P, TimeSet):
            M[i] = P.mask(N + 1)
        else:
            M[i] = np.asarray(P, dtype=bool)[: N + 1]
    return M


def _intervals_from_anchors(anchors, gap):
    """Union of [a_i, a_{i+1}) over consecutive anchors with a_{i+1} - a_i <= gap."""
    if anchors.size < 2:
        return np.empty(0, dtype=np.int64)
    d = np.diff(anchors)
    keep = d <= gap
    starts = anchors[:-1][keep]
    stops = anchors[1:][keep]
    if starts.size == 0:
        return np.empty(0, dtype=np.int64)
    lengths = stops - starts
    idx = np.repeat(starts - np.cumsum(np.concatenate([[0], lengths[:-1]])), lengths)
    return idx + np.arange(lengths.sum())


def folner_select(pliss_sets, weights, alpha_target, level_count, gap=50, N=None):
    """Greedy interval-union constructor.

    For each level n: anchors are the times in [0, n] that are Pliss for a
    weighted majority of all samples; Q is the union of the gaps between
    consecutive anchors that are at most ``gap`` long, so every boundary
    point of Q is an anchor.  Lambda keeps the samples whose Pliss set
    contains the boundary of Q and whose Pliss density inside Q reaches
    ``alpha_target``.  Levels with empty Lambda are dropped with a warning.
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0) or not math.isclose(weights.sum(), 1.0, rel_tol=1e-9):
        raise ValueError("weights must be positive and sum to 1")
    if N is None:
        N = min(P.horizon for P in pliss_sets) if isinstance(pliss_sets[0], TimeSet) else len(pliss_sets[0]) - 1
    M = pliss_matrix(pliss_sets, N)
    if not M[:, 0].all():
        raise ValueError("every Pliss set must contain 0")
    votes = weights @ M
    levels = []
    dropped = []
    for n in geometric_schedule(N, level_count):
        anchors = np.flatnonzero(votes[: n + 1] > 0.5)
        members = _intervals_from_anchors(anchors, gap)
        Q = TimeSet(n, members)
        dQ = boundary(Q)
        sub = M[:, : n + 1]
        has_boundary = sub[:, dQ].all(axis=1) if dQ.size else np.ones(len(M), dtype=bool)
        in_q = sub[:, members].sum(axis=1) / n if members.size else np.zeros(len(M))
        lam = np.flatnonzero(has_boundary & (in_q >= alpha_target))
        if lam.size == 0:
            warnings.warn(f"level n={n}: no sample reaches the density target; level dropped")
            dropped.append(n)
            continue
        levels.append(FolnerLevel(n, lam, Q))
    if not levels:
        raise ValueError("every level was dropped: no sample attains the density target")
    return FolnerPlan(levels, float(alpha_target), weights, N, dropped)


def level_report(level, M, weights, m):
    n = level.n
    Q = level.Q
    q = Q.members
    dQ = boundary(Q)
    lam = level.lambda_indices
    sub = M[lam, : n + 1]
    in_boundary = bool(sub[:, dQ].all()) if dQ.size else True
    weight = float(weights[lam].sum())
    deficits = []
    lower = []
    for row in sub:
        P = TimeSet(n, np.flatnonzero(row))
        Pm = fill(P, m).mask(n + 1)
        deficits.append(np.count_nonzero(~Pm[q]) / n if q.size else 0.0)
        lower.append(np.count_nonzero(row[q]) / n if q.size else 0.0)
    return LevelReport(
        n=n,
        q_density=q.size / n,
        boundary_ratio=dQ.size / n,
        log_mass_ratio=math.log(weight) / n,
        boundary_in_pliss=in_boundary,
        fill_deficit=float(max(deficits)),
        lower_density=float(min(lower)),
        lambda_size=int(lam.size),
    )


ITEM_NAMES = (
    "increasing_times",
    "mass",
    "q_density",
    "folner",
    "boundary_in_pliss",
    "fill",
    "lower_density",
)


def verify_folner(plan, pliss_sets, tolerances=FolnerTolerances()):
    """Evaluate the seven properties; items are judged at the final level."""
    tol = tolerances
    M = pliss_matrix(pliss_sets, plan.horizon)
    reports = [level_report(lv, M, plan.sample_weights, tol.m) for lv in plan.levels]
    last = reports[-1]
    ns = [lv.n for lv in plan.levels]
    items = {
        "increasing_times": all(b > a for a, b in zip(ns, ns[1:])),
        "mass": abs(last.log_mass_ratio) <= tol.eps_mass,
        "q_density": last.q_density >= plan.alpha - tol.eps_fill,
        "folner": last.boundary_ratio <= tol.eps_boundary,
        "boundary_in_pliss": all(r.boundary_in_pliss for r in reports),
        "fill": last.fill_deficit <= tol.eps_fill,
        "lower_density": last.lower_density >= plan.alpha - tol.eps_fill,
    }
    return FolnerReport(reports, items, plan.alpha)
