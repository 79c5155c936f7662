"""Concrete diffeomorphisms on flat manifolds with exact derivatives.

Points are numpy arrays with the coordinate axis last, so every map accepts a
single point of shape ``(d,)`` or a batch of shape ``(..., d)``.  Frames are
arrays of shape ``(..., d, k)`` with orthonormal columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0
CAT_MATRIX = np.array([[2.0, 1.0], [1.0, 1.0]])
CAT_INVERSE = np.array([[1.0, -1.0], [-1.0, 2.0]])
CAT_EXPANSION = GOLDEN**2  # (3 + sqrt 5) / 2
LOG_CAT_EXPANSION = float(np.log(CAT_EXPANSION))
CAT_UNSTABLE = np.array([GOLDEN, 1.0]) / np.hypot(GOLDEN, 1.0)
CAT_STABLE = np.array([-1.0, GOLDEN]) / np.hypot(GOLDEN, 1.0)

SPLITTING_STEPS = 50


class DomainError(ValueError):
    """Raised when an orbit leaves the trapping region of a model."""

    def __init__(self, step, message=None):
        self.step = int(step)
        super().__init__(message or f"orbit left the model domain at step {self.step}")


def wrap01(x):
    """Reduce to [0, 1); guards against ``-tiny % 1 == 1.0``."""
    y = np.mod(x, 1.0)
    return np.where(y >= 1.0, 0.0, y)


def cat_apply(x, inverse=False):
    """Integer cat matrix (or its inverse) applied elementwise so that one
    point and a batch of points round identically."""
    a, b = x[..., 0], x[..., 1]
    if inverse:
        return np.stack([a - b, 2.0 * b - a], axis=-1)
    return np.stack([2.0 * a + b, a + b], axis=-1)


def wrap_half(x):
    """Shortest representative of a torus displacement, in [-1/2, 1/2)."""
    return x - np.floor(x + 0.5)


def orthonormalize(frames, reference=None):
    """QR-orthonormalize a stack of frames, fixing the column signs.

    Signs are chosen so that each column has a nonnegative inner product
    with the matching column of ``reference`` (or a positive diagonal of R).
    """
    q, r = np.linalg.qr(frames)
    if reference is None:
        s = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    else:
        s = np.sign(np.einsum("...ij,...ij->...j", q, np.broadcast_to(reference, q.shape)))
    s = np.where(s == 0, 1.0, s)
    return q * s[..., None, :]


class MapModel:
    """Base class; subclasses are frozen dataclasses and therefore immutable."""

    name = "model"
    dim = 2
    dim_F = 1
    manifold = "torus"
    # (E analytic, F analytic)
    analytic = (True, True)

    # ---- geometry -------------------------------------------------------
    @property
    def dim_E(self):
        return self.dim - self.dim_F

    @property
    def torus_axes(self):
        """Boolean mask of the periodic coordinates."""
        return np.ones(self.dim, dtype=bool)

    @property
    def params(self):
        return {}

    def reduce(self, x):
        x = np.array(x, dtype=float)
        mask = self.torus_axes
        x[..., mask] = wrap01(x[..., mask])
        return x

    def displacement(self, p, q):
        """Shortest displacement vector q - p (torus axes wrapped)."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.shape[-1] != self.dim or q.shape[-1] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {p.shape[-1]} and {q.shape[-1]}")
        d = q - p
        mask = self.torus_axes
        d[..., mask] = wrap_half(d[..., mask])
        return d

    def distance(self, p, q):
        return np.linalg.norm(self.displacement(p, q), axis=-1)

    def in_domain(self, x):
        return np.ones(np.shape(x)[:-1], dtype=bool)

    def random_points(self, rng, size):
        return rng.random((size, self.dim))

    def reference_axes(self):
        """Initial frames (E0, F0) for the power-iteration splitting."""
        eye = np.eye(self.dim)
        return eye[:, self.dim_F:], eye[:, : self.dim_F]

    # ---- dynamics (implemented by subclasses) --------------------------
    def forward(self, x):
        raise NotImplementedError

    def backward(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    def inverse_derivative(self, y):
        """D(f^{-1}) at y, i.e. the inverse of Df at f^{-1}(y)."""
        return np.linalg.inv(self.derivative(self.backward(y)))

    def backward_free(self, x):
        """Pre-image used for splitting estimates; never raises."""
        return self.backward(x)

    def analytic_E(self, x):
        raise NotImplementedError

    def analytic_F(self, x):
        raise NotImplementedError

    # ---- splitting ------------------------------------------------------
    def splitting(self, x, steps=SPLITTING_STEPS):
        """Return (frame_E, frame_F) at x; numeric bundles use power iteration."""
        x = np.asarray(x, dtype=float)
        e_an, f_an = self.analytic
        frame_E = self.analytic_E(x) if e_an else numeric_E(self, x, steps)
        frame_F = self.analytic_F(x) if f_an else numeric_F(self, x, steps)
        return frame_E, frame_F

    @property
    def splitting_kind(self):
        return "analytic" if all(self.analytic) else "numeric"

    # ---- orbits ---------------------------------------------------------
    def orbit_points(self, x, n):
        """Points x, f x, ..., f^{n-1} x stacked on a new leading axis."""
        x = self.reduce(x)
        out = np.empty((n,) + x.shape)
        out[0] = x
        for k in range(1, n):
            out[k] = self.forward(out[k - 1])
        return out

    def backward_orbit_points(self, x, n):
        x = self.reduce(x)
        out = np.empty((n,) + x.shape)
        out[0] = x
        for k in range(1, n):
            out[k] = self.backward(out[k - 1])
        return out

    def check_orbit(self, pts):
        """Raise DomainError naming the first step outside the domain."""
        inside = self.in_domain(pts)
        if not np.all(inside):
            bad = np.argwhere(~inside.reshape(inside.shape[0], -1).all(axis=1))
            raise DomainError(int(bad[0, 0]))


def numeric_F(model, x, steps=SPLITTING_STEPS):
    """Push the reference F-axes forward from f^{-steps} x, re-orthonormalizing."""
    E0, F0 = model.reference_axes()
    path = [np.asarray(x, dtype=float)]
    for _ in range(steps):
        path.append(model.backward_free(path[-1]))
    frame = np.broadcast_to(F0, path[0].shape[:-1] + F0.shape).copy()
    for y in reversed(path[1:]):
        frame = orthonormalize(model.derivative(y) @ frame, F0)
    return frame


def numeric_E(model, x, steps=SPLITTING_STEPS):
    """Pull the reference E-axes back from f^{steps} x, re-orthonormalizing."""
    E0, F0 = model.reference_axes()
    path = [np.asarray(x, dtype=float)]
    for _ in range(steps):
        path.append(model.forward(path[-1]))
    frame = np.broadcast_to(E0, path[0].shape[:-1] + E0.shape).copy()
    for y in reversed(path[:-1]):
        frame = orthonormalize(np.linalg.solve(model.derivative(y), frame), E0)
    return frame


# --------------------------------------------------------------------------
# Linear Anosov automorphism of T^2
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Cat2(MapModel):
    name = "cat2"
    dim = 2
    dim_F = 1

    def forward(self, x):
        return wrap01(cat_apply(np.asarray(x, dtype=float)))

    def backward(self, x):
        return wrap01(cat_apply(np.asarray(x, dtype=float), inverse=True))

    def derivative(self, x):
        return np.broadcast_to(CAT_MATRIX, np.shape(x)[:-1] + (2, 2)).copy()

    def inverse_derivative(self, y):
        return np.broadcast_to(CAT_INVERSE, np.shape(y)[:-1] + (2, 2)).copy()

    def analytic_E(self, x):
        return np.broadcast_to(CAT_STABLE[:, None], np.shape(x)[:-1] + (2, 1)).copy()

    def analytic_F(self, x):
        return np.broadcast_to(CAT_UNSTABLE[:, None], np.shape(x)[:-1] + (2, 1)).copy()

    def reference_axes(self):
        return CAT_STABLE[:, None], CAT_UNSTABLE[:, None]


# --------------------------------------------------------------------------
# Product of the cat map with a fibered circle rotation on T^3
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Cat3(MapModel):
    """f(x, y, z) = (2x + y, x + y, z + omega + kappa sin 2 pi x)."""

    omega: float = (np.sqrt(2.0) - 1.0) / 2.0
    kappa: float = 0.0
    name = "cat3"
    dim = 3
    dim_F = 2

    @property
    def analytic(self):
        return (self.kappa == 0.0, True)

    @property
    def params(self):
        return {"omega": float(self.omega), "kappa": float(self.kappa)}

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        out[..., :2] = cat_apply(x[..., :2])
        out[..., 2] = x[..., 2] + self.omega + self.kappa * np.sin(2 * np.pi * x[..., 0])
        return wrap01(out)

    def backward(self, y):
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        out[..., :2] = wrap01(cat_apply(y[..., :2], inverse=True))
        out[..., 2] = y[..., 2] - self.omega - self.kappa * np.sin(2 * np.pi * out[..., 0])
        return wrap01(out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        D = np.zeros(x.shape[:-1] + (3, 3))
        D[..., :2, :2] = CAT_MATRIX
        D[..., 2, 0] = 2 * np.pi * self.kappa * np.cos(2 * np.pi * x[..., 0])
        D[..., 2, 2] = 1.0
        return D

    def analytic_E(self, x):
        v = np.zeros(3)
        v[:2] = CAT_STABLE
        return np.broadcast_to(v[:, None], np.shape(x)[:-1] + (3, 1)).copy()

    def analytic_F(self, x):
        V = np.zeros((3, 2))
        V[:2, 0] = CAT_UNSTABLE
        V[2, 1] = 1.0
        return np.broadcast_to(V, np.shape(x)[:-1] + (3, 2)).copy()

    def reference_axes(self):
        return self.analytic_E(np.zeros(3)), self.analytic_F(np.zeros(3))


# --------------------------------------------------------------------------
# Smale-Williams solenoid on the solid torus
# --------------------------------------------------------------------------

_BITS = 53


def _leading_bits(theta):
    """First 52 binary digits of theta in [0, 1) as a 0/1 array."""
    m = int(np.floor(float(theta) * 2.0**52))
    return np.array([(m >> (51 - j)) & 1 for j in range(52)], dtype=np.float64)


@dataclass(frozen=True)
class Solenoid(MapModel):
    """f(t, x, y) = (2t mod 1, lam x + cos(2 pi t)/2, lam y + sin(2 pi t)/2).

    Orbits are generated from an explicit binary expansion of the angle so
    that angle doubling does not collapse to 0 after 53 steps in floating
    point.  The digits beyond the float's own precision come from a
    generator seeded by the starting point and ``tail_seed``; with
    ``tail_seed=None`` they are zero, which reproduces plain float doubling.
    """

    lam: float = 0.25
    trap_radius: float = 0.9
    tail_seed: int = 0
    name = "solenoid"
    dim = 3
    dim_F = 1
    manifold = "solid_torus"
    analytic = (True, False)

    @property
    def torus_axes(self):
        return np.array([True, False, False])

    @property
    def params(self):
        return {"lam": float(self.lam), "trap_radius": float(self.trap_radius), "tail_seed": None if self.tail_seed is None else int(self.tail_seed)}

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 1], x[..., 2]) <= self.trap_radius + 1e-12

    def random_points(self, rng, size):
        t = rng.random(size)
        r = self.trap_radius * np.sqrt(rng.random(size))
        phi = 2 * np.pi * rng.random(size)
        return np.stack([t, r * np.cos(phi), r * np.sin(phi)], axis=-1)

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        t = x[..., 0]
        c = 2 * np.pi * t
        return np.stack(
            [wrap01(2 * t), self.lam * x[..., 1] + 0.5 * np.cos(c), self.lam * x[..., 2] + 0.5 * np.sin(c)],
            axis=-1,
        )

    def _preimages(self, y):
        y = np.asarray(y, dtype=float)
        cands = []
        for shift in (0.0, 0.5):
            t = y[..., 0] / 2 + shift
            c = 2 * np.pi * t
            px = (y[..., 1] - 0.5 * np.cos(c)) / self.lam
            py = (y[..., 2] - 0.5 * np.sin(c)) / self.lam
            cands.append(np.stack([t, px, py], axis=-1))
        return cands

    def backward_free(self, y):
        a, b = self._preimages(y)
        ra = np.hypot(a[..., 1], a[..., 2])
        rb = np.hypot(b[..., 1], b[..., 2])
        return np.where((ra <= rb)[..., None], a, b)

    def backward(self, y):
        x = self.backward_free(y)
        if not np.all(self.in_domain(x)):
            raise DomainError(1, "pre-image lies outside the trapping region")
        return x

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        c = 2 * np.pi * x[..., 0]
        D = np.zeros(x.shape[:-1] + (3, 3))
        D[..., 0, 0] = 2.0
        D[..., 1, 0] = -np.pi * np.sin(c)
        D[..., 2, 0] = np.pi * np.cos(c)
        D[..., 1, 1] = self.lam
        D[..., 2, 2] = self.lam
        return D

    def inverse_derivative(self, y):
        return np.linalg.inv(self.derivative(self.backward_free(y)))

    def analytic_E(self, x):
        V = np.zeros((3, 2))
        V[1, 0] = V[2, 1] = 1.0
        return np.broadcast_to(V, np.shape(x)[:-1] + (3, 2)).copy()

    def reference_axes(self):
        eye = np.eye(3)
        return eye[:, 1:], eye[:, :1]

    def angle_bits(self, x, count):
        """Binary digits b_1, ..., b_count of the angle of x (float 0/1)."""
        x = np.asarray(x, dtype=float)
        lead = _leading_bits(x[0])
        if count <= lead.size:
            return lead[:count]
        if self.tail_seed is None:
            return np.concatenate([lead, np.zeros(count - lead.size)])
        key = np.frombuffer(np.ascontiguousarray(x).tobytes(), dtype=np.uint32)
        rng = np.random.default_rng([int(self.tail_seed)] + [int(k) for k in key])
        tail = rng.integers(0, 2, count - lead.size).astype(np.float64)
        return np.concatenate([lead, tail])

    def angles(self, x, n):
        """Angles t_0..t_{n-1} of the orbit of x (t_0 exact, later ones via digits)."""
        x = np.asarray(x, dtype=float)
        bits = self.angle_bits(x, n + _BITS)
        weights = 0.5 ** np.arange(1, _BITS + 1)
        windows = np.lib.stride_tricks.sliding_window_view(bits, _BITS)[:n]
        t = windows @ weights
        t[0] = x[0]
        return t

    def orbit_points(self, x, n):
        x = np.asarray(x, dtype=float)
        if x.ndim > 1:
            flat = x.reshape(-1, 3)
            out = np.stack([self.orbit_points(p, n) for p in flat], axis=1)
            return out.reshape((n,) + x.shape)
        x = self.reduce(x)
        t = self.angles(x, n)
        c = 2 * np.pi * t[:-1]
        out = np.empty((n, 3))
        out[:, 0] = t
        out[0, 1:] = x[1:]
        if n > 1:
            a = [1.0, -self.lam]
            out[1:, 1] = lfilter([1.0], a, 0.5 * np.cos(c), zi=[self.lam * x[1]])[0]
            out[1:, 2] = lfilter([1.0], a, 0.5 * np.sin(c), zi=[self.lam * x[2]])[0]
        return out

    def backward_orbit_points(self, x, n):
        x = self.reduce(x)
        out = np.empty((n,) + x.shape)
        out[0] = x
        for k in range(1, n):
            out[k] = self.backward_free(out[k - 1])
            if not np.all(self.in_domain(out[k])):
                raise DomainError(k)
        return out


# --------------------------------------------------------------------------
# Derived-from-Anosov map of T^2
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DA2(MapModel):
    """f = A o h with h a bump-supported shear along the unstable eigenline.

    In eigen-coordinates (s, u) of the displacement from the fixed point 0,
    h(s, u) = (s, u (1 - c rho)) with rho = (1 - r^2/R^2)^3 inside r < R.
    The constant c = 1 - lambda^(-2 eps) makes the unstable multiplier at
    the fixed point equal to lambda^(1 - 2 eps).  The unstable eigenline is
    invariant under Dh, so F is analytic; E comes from power iteration.
    """

    eps: float = 0.25
    radius: float = 0.2
    name = "da2"
    dim = 2
    dim_F = 1

    @property
    def strength(self):
        return 1.0 - CAT_EXPANSION ** (-2.0 * self.eps)

    @property
    def analytic(self):
        return (self.strength == 0.0, True)

    @property
    def params(self):
        return {"eps": float(self.eps), "radius": float(self.radius)}

    def reference_axes(self):
        return CAT_STABLE[:, None], CAT_UNSTABLE[:, None]

    def _coords(self, x):
        # explicit two-term sums: identical rounding for single and batched points
        d = wrap_half(np.asarray(x, dtype=float))
        s = d[..., 0] * CAT_STABLE[0] + d[..., 1] * CAT_STABLE[1]
        u = d[..., 0] * CAT_UNSTABLE[0] + d[..., 1] * CAT_UNSTABLE[1]
        return s, u

    def _bump(self, s, u):
        q = np.clip(1.0 - (s * s + u * u) / self.radius**2, 0.0, None)
        return q

    def shear(self, x):
        """The map h."""
        x = np.asarray(x, dtype=float)
        c = self.strength
        if c == 0.0:
            return x
        s, u = self._coords(x)
        q = self._bump(s, u)
        du = -c * q * q * q * u
        return wrap01(x + du[..., None] * CAT_UNSTABLE)

    def shear_inverse(self, y):
        y = np.asarray(y, dtype=float)
        c = self.strength
        if c == 0.0:
            return y
        s, v = self._coords(y)
        # solve u (1 - c rho(s, u)) = v; monotone in u with slope in [1-c, 1+c]
        q = self._bump(s, v)
        u = v / (1.0 - c * q * q * q)
        u = np.where(np.abs(u) > self.radius, v, u)
        for _ in range(60):
            q = self._bump(s, u)
            g = u * (1.0 - c * q * q * q) - v
            dg = 1.0 - c * q * q * q + 6.0 * c * u * u * q * q / self.radius**2
            step = g / dg
            u = u - step
            if np.all(np.abs(step) < 1e-17):
                break
        return wrap01(y + (u - v)[..., None] * CAT_UNSTABLE)

    def forward(self, x):
        return wrap01(cat_apply(self.shear(x)))

    def backward(self, y):
        return self.shear_inverse(wrap01(cat_apply(np.asarray(y, dtype=float), inverse=True)))

    def shear_derivative(self, x):
        x = np.asarray(x, dtype=float)
        c = self.strength
        eye = np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2)).copy()
        if c == 0.0:
            return eye
        s, u = self._coords(x)
        q = self._bump(s, u)
        R2 = self.radius**2
        # gradient of -c q^3 u with respect to the displacement
        d_ds = 6.0 * c * q * q * u * s / R2
        d_du = -c * q * q * q + 6.0 * c * q * q * u * u / R2
        grad = d_ds[..., None] * CAT_STABLE + d_du[..., None] * CAT_UNSTABLE
        return eye + CAT_UNSTABLE[:, None] * grad[..., None, :]

    def unstable_gain(self, x):
        """Factor g with Dh e_u = g e_u."""
        c = self.strength
        if c == 0.0:
            return np.ones(np.shape(x)[:-1])
        s, u = self._coords(x)
        q = self._bump(s, u)
        return 1.0 - c * q * q * q + 6.0 * c * q * q * u * u / self.radius**2

    def derivative(self, x):
        return CAT_MATRIX @ self.shear_derivative(x)

    def inverse_derivative(self, y):
        return np.linalg.inv(self.derivative(self.backward(y)))

    def analytic_E(self, x):
        return np.broadcast_to(CAT_STABLE[:, None], np.shape(x)[:-1] + (2, 1)).copy()

    def analytic_F(self, x):
        return np.broadcast_to(CAT_UNSTABLE[:, None], np.shape(x)[:-1] + (2, 1)).copy()


# --------------------------------------------------------------------------
# Isometric translation (no domination; used as a negative control)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Translation(MapModel):
    shift: tuple = (0.3819660112501051, 0.2360679774997897)
    name = "translation"
    dim = 2
    dim_F = 1

    @property
    def params(self):
        return {"shift": [float(s) for s in self.shift]}

    def forward(self, x):
        return wrap01(np.asarray(x, dtype=float) + np.asarray(self.shift))

    def backward(self, x):
        return wrap01(np.asarray(x, dtype=float) - np.asarray(self.shift))

    def derivative(self, x):
        return np.broadcast_to(np.eye(2), np.shape(x)[:-1] + (2, 2)).copy()

    def inverse_derivative(self, y):
        return self.derivative(y)

    def analytic_E(self, x):
        return np.broadcast_to(np.array([[1.0], [0.0]]), np.shape(x)[:-1] + (2, 1)).copy()

    def analytic_F(self, x):
        return np.broadcast_to(np.array([[0.0], [1.0]]), np.shape(x)[:-1] + (2, 1)).copy()


MODELS = {"cat2": Cat2, "cat3": Cat3, "solenoid": Solenoid, "da2": DA2, "translation": Translation}


def make_model(name, **params):
    key = name.lower()
    if key not in MODELS:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    cls = MODELS[key]
    if key == "translation" and "shift" in params:
        params["shift"] = tuple(params["shift"])
    return cls(**params)


def manifold_distance(model, p, q):
    """Flat distance between p and q on the model's manifold."""
    return model.distance(p, q)


# --------------------------------------------------------------------------
# Orbit traces
# --------------------------------------------------------------------------


def frames_along(model, points, need_E=True):
    """Splitting frames at each point of an orbit (leading axis = time).

    Analytic bundles are evaluated pointwise.  Numeric bundles are obtained
    once by power iteration and then transported along the orbit, which
    keeps Df(x_k) F(x_k) = F(x_{k+1}) exact up to rounding.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    e_an, f_an = model.analytic
    if f_an:
        F = model.analytic_F(points)
    else:
        F = np.empty(points.shape + (model.dim_F,))
        F[0] = numeric_F(model, points[0])
        _, F0 = model.reference_axes()
        D = model.derivative(points[:-1]) if n > 1 else None
        for k in range(1, n):
            F[k] = orthonormalize(D[k - 1] @ F[k - 1], F0)
    E = None
    if need_E:
        if e_an:
            E = model.analytic_E(points)
        else:
            E = np.empty(points.shape + (model.dim_E,))
            E[-1] = numeric_E(model, points[-1])
            E0, _ = model.reference_axes()
            D = model.derivative(points[:-1]) if n > 1 else None
            for k in range(n - 2, -1, -1):
                E[k] = orthonormalize(np.linalg.solve(D[k], E[k + 1]), E0)
    return E, F


def log_mini_norm_batch(M):
    """log of the smallest singular value of a stack of matrices."""
    if M.shape[-1] == 1:
        return np.log(np.linalg.norm(M[..., 0], axis=-1))
    return np.log(np.linalg.svd(M, compute_uv=False)[..., -1])


def log_norm_batch(M):
    if M.shape[-1] == 1:
        return np.log(np.linalg.norm(M[..., 0], axis=-1))
    return np.log(np.linalg.svd(M, compute_uv=False)[..., 0])


def log_jac_batch(M):
    if M.shape[-1] == 1:
        return np.log(np.linalg.norm(M[..., 0], axis=-1))
    G = np.swapaxes(M, -1, -2) @ M
    return 0.5 * np.linalg.slogdet(G)[1]


@dataclass
class OrbitTrace:
    """A finite orbit with per-step cocycle observables.

    ``log_mini_F[k]`` is log m(Dg|F(x_k)) where g = f for direction +1 and
    g = f^{-1} for direction -1; similarly for the other two observables.
    """

    model_name: str
    direction: int
    points: np.ndarray
    log_mini_F: np.ndarray
    log_norm_E: np.ndarray
    log_jac_F: np.ndarray
    frames_F: np.ndarray = field(repr=False, default=None)
    frames_E: np.ndarray = field(repr=False, default=None)

    @property
    def n(self):
        return self.points.shape[0]


def orbit(model, x, n, direction=1):
    """Orbit of length n with cached observables along the model's splitting."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    x = np.asarray(x, dtype=float)
    if not np.all(model.in_domain(x)):
        raise DomainError(0)
    if direction == 1:
        pts = model.orbit_points(x, n)
        model.check_orbit(pts)
    else:
        pts = model.backward_orbit_points(x, n)
    if n == 1:
        empty = np.empty(0)
        return OrbitTrace(model.name, direction, pts, empty, empty, empty)
    E, F = frames_along(model, pts)
    if direction == 1:
        D = model.derivative(pts[:-1])
    else:
        D = model.inverse_derivative(pts[:-1])
    DF = D @ F[:-1]
    DE = D @ E[:-1]
    return OrbitTrace(
        model_name=model.name,
        direction=direction,
        points=pts,
        log_mini_F=log_mini_norm_batch(DF),
        log_norm_E=log_norm_batch(DE),
        log_jac_F=log_jac_batch(DF),
        frames_F=F,
        frames_E=E,
    )


def log_mini_F_ensemble(model, points, chunk=64):
    """log m(Df|F) along a (time, sample, d) array of orbit points.

    Analytic one-dimensional bundles take a closed-form path; otherwise the
    F-frames are transported along each orbit in chunks of samples.
    """
    points = np.asarray(points, dtype=float)
    if isinstance(model, DA2):
        return LOG_CAT_EXPANSION + np.log(model.unstable_gain(points[:-1]))
    if isinstance(model, Cat2):
        return np.full(points.shape[:-1], LOG_CAT_EXPANSION)[:-1]
    T, K = points.shape[0], points.shape[1]
    out = np.empty((T - 1, K))
    for lo in range(0, K, chunk):
        block = points[:, lo : lo + chunk]
        _, F = frames_along(model, block, need_E=False)
        out[:, lo : lo + chunk] = log_mini_norm_batch(model.derivative(block[:-1]) @ F[:-1])
    return out
