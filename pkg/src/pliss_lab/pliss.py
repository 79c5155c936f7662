"""Pliss times, densities, fillings, the mean ergodic inequality on cycles,
and the finite (cyclic) bi-Pliss check.

Every fast routine has a literal brute-force twin (suffix ``_bruteforce``)
used as a test oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimeSet:
    """A finite set of integers in [0, horizon]."""

    horizon: int
    members: np.ndarray

    def __post_init__(self):
        m = np.unique(np.asarray(self.members, dtype=np.int64))
        if m.size and (m[0] < 0 or m[-1] > self.horizon):
            raise ValueError("members must lie in [0, horizon]")
        object.__setattr__(self, "members", m)
        object.__setattr__(self, "horizon", int(self.horizon))

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        return cls(mask.size - 1, np.flatnonzero(mask))

    @classmethod
    def interval(cls, start, stop, horizon):
        return cls(horizon, np.arange(start, stop))

    def mask(self, length=None):
        length = self.horizon + 1 if length is None else length
        out = np.zeros(length, dtype=bool)
        m = self.members[self.members < length]
        out[m] = True
        return out

    def __len__(self):
        return int(self.members.size)

    def __contains__(self, t):
        i = np.searchsorted(self.members, t)
        return bool(i < self.members.size and self.members[i] == t)

    def __iter__(self):
        return iter(int(t) for t in self.members)

    def __eq__(self, other):
        if not isinstance(other, TimeSet):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.members, other.members)

    def __hash__(self):
        return hash((self.horizon, self.members.tobytes()))

    def as_set(self):
        return set(int(t) for t in self.members)

    def restrict(self, n):
        """Members in [0, n], with horizon n."""
        return TimeSet(n, self.members[self.members <= n])

    def issubset(self, other):
        return bool(np.all(np.isin(self.members, other.members)))

    def count_below(self, n):
        return int(np.searchsorted(self.members, n, side="left"))


# --------------------------------------------------------------------------
# Pliss times
# --------------------------------------------------------------------------


def drifted_walk(seq, a_prime):
    """W_k = sum_{i<k} (a_i - a'), k = 0..n."""
    seq = np.asarray(seq, dtype=float)
    w = np.empty(seq.size + 1)
    w[0] = 0.0
    np.cumsum(seq - a_prime, out=w[1:])
    return w


def pliss_mask(seq, a_prime, axis=-1):
    """Boolean Pliss indicator of length n+1 along ``axis`` (batched).

    m is a Pliss time iff the drifted walk at m attains its running maximum.
    """
    seq = np.moveaxis(np.asarray(seq, dtype=float), axis, -1)
    w = np.zeros(seq.shape[:-1] + (seq.shape[-1] + 1,))
    np.cumsum(seq - a_prime, axis=-1, out=w[..., 1:])
    mask = w >= np.maximum.accumulate(w, axis=-1)
    return np.moveaxis(mask, -1, axis)


def pliss_times(seq, a_prime):
    """Pliss times of a finite sequence: O(n) running-maximum criterion."""
    seq = np.asarray(seq, dtype=float).ravel()
    return TimeSet(seq.size, np.flatnonzero(pliss_mask(seq, a_prime)))


def pliss_times_bruteforce(seq, a_prime):
    """Literal definition: m is Pliss iff every suffix sum of a[:m] - a' is >= 0.

    Suffix sums are accumulated backwards from m, independently of the
    forward drifted walk used by ``pliss_times``.
    """
    seq = np.asarray(seq, dtype=float).ravel() - a_prime
    n = seq.size
    members = [0]
    for m in range(1, n + 1):
        if np.all(np.cumsum(seq[m - 1 :: -1]) >= 0.0):
            members.append(m)
    return TimeSet(n, members)


def density(T, n):
    """d_n(T) = #(T ∩ [0, n)) / n."""
    if n < 1:
        raise ValueError("density needs n >= 1")
    return T.count_below(n) / n


def density_profile(T, horizon=None):
    """Array of d_n(T) for n = 1..horizon."""
    horizon = T.horizon if horizon is None else horizon
    counts = np.cumsum(T.mask(horizon + 1))[:horizon]
    return counts / np.arange(1, horizon + 1)


def upper_density(T, window=0.25):
    """Finite surrogate of the upper density: max d_n over the final window."""
    h = T.horizon
    if h < 1:
        raise ValueError("upper density needs horizon >= 1")
    start = max(1, h - math.ceil(window * h) + 1)
    prof = density_profile(T, h)
    return float(prof[start - 1 :].max())


def pliss_lower_bound(a_pp, a_prime, A):
    """Classical Pliss constant alpha = (a'' - a') / (A - a')."""
    if not a_pp > a_prime:
        raise ValueError("need a'' > a'")
    if not A > a_prime:
        raise ValueError("need A > a'")
    if A < a_pp:
        raise ValueError("need A >= a''")
    return (a_pp - a_prime) / (A - a_prime)


def random_pliss_instance(rng, n_max=300):
    """A sequence with mean >= a'' and values <= A, plus (a'', a', A).

    Values are drawn in one of three shapes (uniform, two-valued, sorted so
    the good times come last) and then pulled toward A just enough to lift
    the mean to a''.
    """
    n = int(rng.integers(1, n_max + 1))
    A = float(rng.uniform(0.5, 2.0))
    a_pp = float(rng.uniform(-1.0, A))
    a_prime = float(a_pp - rng.uniform(1e-3, 1.0))
    width = float(rng.uniform(0.1, 4.0))
    shape = int(rng.integers(3))
    if shape == 0:
        seq = rng.uniform(A - width, A, n)
    elif shape == 1:
        seq = np.where(rng.random(n) < rng.uniform(0.2, 0.9), A, A - width)
    else:
        seq = np.sort(rng.uniform(A - width, A, n))
    mean = math.fsum(seq) / n
    if mean < a_pp:
        seq = A - (A - seq) * (A - a_pp) / (A - mean)
    # guard against the last ulp of the rescaling
    a_pp = min(a_pp, math.fsum(seq) / n)
    return seq, a_pp, a_prime, A


# --------------------------------------------------------------------------
# Filling and boundaries
# --------------------------------------------------------------------------


def fill(T, m):
    """T^m: all integers lying between two members at distance <= m."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    mem = T.members
    if mem.size < 2 or m == 0:
        return T
    gaps = np.diff(mem)
    keep = (gaps <= m) & (gaps > 1)
    pieces = [mem]
    for a, g in zip(mem[:-1][keep], gaps[keep]):
        pieces.append(np.arange(a + 1, a + g))
    return TimeSet(T.horizon, np.concatenate(pieces))


def fill_bruteforce(T, m):
    mem = sorted(T.as_set())
    out = set(mem)
    for i, t1 in enumerate(mem):
        for t2 in mem[i + 1 :]:
            if t2 - t1 <= m:
                out.update(range(t1, t2 + 1))
    return TimeSet(T.horizon, sorted(out))


def boundary(Q):
    """∂Q = Q Δ (Q + 1) as a sorted integer array."""
    q = Q.members
    return np.setxor1d(q, q + 1)


def interval_count(Q):
    """Number of maximal runs of consecutive integers in Q."""
    q = Q.members
    if q.size == 0:
        return 0
    return int(1 + np.count_nonzero(np.diff(q) > 1))


# --------------------------------------------------------------------------
# Mean ergodic inequality on cycles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanErgodicResult:
    holds: bool
    lhs: float
    rhs: float
    A: tuple


def _positive_set(phi):
    """A = {i : some forward partial sum from i is > 0} on the cycle phi.

    If the cycle sum is > 0 every index qualifies (long multiples); otherwise
    windows longer than p never beat the best window of length <= p.
    """
    phi = np.asarray(phi, dtype=float)
    p = phi.size
    if math.fsum(phi) > 0:
        return np.ones(p, dtype=bool)
    doubled = np.concatenate([phi, phi])
    c = np.concatenate([[0.0], np.cumsum(doubled)])
    idx = np.arange(p)[:, None] + np.arange(1, p + 1)[None, :]
    sums = c[idx] - c[np.arange(p)][:, None]
    return (sums > 0).any(axis=1)


def mean_ergodic_check(phi):
    """Check sum_{i not in A} phi_i <= sum_i phi_i on the cycle phi."""
    phi = np.asarray(phi, dtype=float)
    if phi.size < 1:
        raise ValueError("cycle must be nonempty")
    A = _positive_set(phi)
    lhs = math.fsum(phi[~A])
    rhs = math.fsum(phi)
    tol = 1e-12 * math.fsum(np.abs(phi))
    return MeanErgodicResult(bool(lhs <= rhs + tol), lhs, rhs, tuple(int(i) for i in np.flatnonzero(A)))


def positive_set_bruteforce(phi, max_cap=1000):
    """Oracle for A by direct enumeration of windows.

    With S = sum(phi) > 0 any window longer than p*(ceil(p*max|phi|/S)+1)
    is positive, so the search cap below is exhaustive unless it hits
    ``max_cap * p`` (reported through the second return value).
    """
    phi = [float(v) for v in phi]
    p = len(phi)
    S = math.fsum(phi)
    amax = max(abs(v) for v in phi)
    if S > 0:
        ratio = p * amax / S
        cap = p * (math.ceil(ratio) + 1) if ratio < max_cap else (max_cap + 1) * p
    else:
        cap = 2 * p
    truncated = cap > max_cap * p
    cap = min(cap, max_cap * p)
    A = []
    for i in range(p):
        s = 0.0
        for n in range(cap):
            s += phi[(i + n) % p]
            if s > 0:
                A.append(i)
                break
    return A, truncated


# --------------------------------------------------------------------------
# Finite bi-Pliss check on dominated cycles
# --------------------------------------------------------------------------


class DominationError(ValueError):
    pass


@dataclass(frozen=True)
class BiPlissResult:
    pF: TimeSet
    pE: TimeSet
    equal: bool


def _block_mask(seq, log_gamma, backward):
    """k qualifies iff every n-step sum from k stays <= n log_gamma.

    On a cycle whose mean is <= log_gamma the walk returns below its start
    after each period, so windows of length <= p decide membership; a mean
    above log_gamma excludes every index.
    """
    seq = np.asarray(seq, dtype=float) - log_gamma
    p = seq.size
    if math.fsum(seq) > 0:
        return np.zeros(p, dtype=bool)
    if backward:
        seq = seq[::-1]
    doubled = np.concatenate([seq, seq])
    c = np.concatenate([[0.0], np.cumsum(doubled)])
    idx = np.arange(p)[:, None] + np.arange(1, p + 1)[None, :]
    sums = c[idx] - c[np.arange(p)][:, None]
    ok = (sums <= 0).all(axis=1)
    if backward:
        ok = ok[::-1]
    return ok


def domination_violations(e, u, log_lambda):
    e = np.asarray(e, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.flatnonzero(e + np.roll(u, -1) > log_lambda)


def bi_pliss_check(e, u, log_gamma, log_lambda):
    """Pesin-block membership along a periodic orbit.

    ``e[i]`` is log ||Df|E(f^i x)||, ``u[i]`` is log ||Df^{-1}|F(f^i x)||.
    pF collects k with sum_{i<n} u[k-i] <= n log_gamma for all n >= 1 and pE
    collects k with sum_{i<n} e[k+i] <= n log_gamma for all n >= 1.
    """
    e = np.asarray(e, dtype=float)
    u = np.asarray(u, dtype=float)
    if e.shape != u.shape or e.ndim != 1 or e.size == 0:
        raise ValueError("e and u must be nonempty cycles of equal length")
    bad = domination_violations(e, u, log_lambda)
    if bad.size:
        raise DominationError(f"domination e_i + u_(i+1) <= log_lambda fails at indices {bad.tolist()}")
    p = e.size
    pF = TimeSet(p - 1, np.flatnonzero(_block_mask(u, log_gamma, backward=True)))
    pE = TimeSet(p - 1, np.flatnonzero(_block_mask(e, log_gamma, backward=False)))
    return BiPlissResult(pF, pE, pF == pE)


def bi_pliss_bruteforce(e, u, log_gamma, cap=2):
    """Oracle: literal block definitions with window lengths up to cap * p."""
    p = len(e)
    pF, pE = [], []
    for k in range(p):
        okF = okE = True
        sF = sE = 0.0
        for n in range(1, cap * p + 1):
            sF += u[(k - n + 1) % p]
            sE += e[(k + n - 1) % p]
            okF = okF and sF <= n * log_gamma
            okE = okE and sE <= n * log_gamma
        if okF:
            pF.append(k)
        if okE:
            pE.append(k)
    return TimeSet(p - 1, pF), TimeSet(p - 1, pE)


def random_dominated_cycle(rng, p_max=12, require_hypotheses=True, gamma_sq_above_lambda=True, max_tries=10_000):
    """Draw (e, u, log_gamma, log_lambda) for a dominated cycle.

    With ``require_hypotheses`` both cycle means are strictly below
    log_gamma (the integrability hypotheses of the bi-Pliss statement).
    ``gamma_sq_above_lambda`` selects 2 log_gamma > log_lambda or the
    reverse.
    """
    for _ in range(max_tries):
        p = int(rng.integers(1, p_max + 1))
        log_lambda = -float(rng.uniform(0.05, 2.0))
        if gamma_sq_above_lambda:
            log_gamma = float(rng.uniform(log_lambda / 2, 0.0))
        else:
            log_gamma = float(rng.uniform(log_lambda, log_lambda / 2))
        if not (log_gamma < 0 and (2 * log_gamma > log_lambda) == gamma_sq_above_lambda):
            continue
        u = rng.uniform(-3.0, 1.0, p)
        e = log_lambda - np.roll(u, -1) - rng.exponential(0.3, p)
        if require_hypotheses and not (u.mean() < log_gamma and e.mean() < log_gamma):
            continue
        return e, u, log_gamma, log_lambda
    raise RuntimeError("could not draw a cycle satisfying the constraints")


def bi_pliss_survey(rng, trials, p_max=12, gamma_sq_above_lambda=True):
    """Run bi_pliss_check on random dominated cycles and tally outcomes."""
    unequal = 0
    f_not_e = 0
    e_not_f = 0
    empty_meet = 0
    first = None
    for _ in range(trials):
        e, u, lg, ll = random_dominated_cycle(rng, p_max, True, gamma_sq_above_lambda)
        res = bi_pliss_check(e, u, lg, ll)
        F, E = res.pF.mask(), res.pE.mask()
        if not res.equal:
            unequal += 1
            if first is None:
                first = {"e": e.tolist(), "u": u.tolist(), "log_gamma": lg, "log_lambda": ll,
                         "pF": res.pF.members.tolist(), "pE": res.pE.members.tolist()}
        f_not_e += bool((F & ~E).any())
        e_not_f += bool((E & ~F).any())
        empty_meet += not bool((F & E).any())
    return {"trials": trials, "unequal": unequal, "F_not_E": f_not_e, "E_not_F": e_not_f,
            "empty_intersection": empty_meet, "first_unequal": first}


def find_bipliss_counterexample(rng, gamma_sq_above_lambda=False, max_tries=100_000, p_max=12):
    """Search for a dominated cycle with pF != pE; returns None if none found."""
    for _ in range(max_tries):
        e, u, lg, ll = random_dominated_cycle(rng, p_max, True, gamma_sq_above_lambda)
        res = bi_pliss_check(e, u, lg, ll)
        if not res.equal:
            return {"e": e.tolist(), "u": u.tolist(), "log_gamma": lg, "log_lambda": ll,
                    "pF": res.pF.members.tolist(), "pE": res.pE.members.tolist()}
    return None
