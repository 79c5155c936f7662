import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pliss_lab.models import (
    CAT_EXPANSION,
    LOG_CAT_EXPANSION,
    MODELS,
    DomainError,
    make_model,
    manifold_distance,
    orbit,
)

ALL = sorted(MODELS)


def brute_torus_distance(p, q):
    """Minimum over the 3^d lattice translates of q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    best = np.inf
    for shift in itertools.product((-1, 0, 1), repeat=p.size):
        best = min(best, float(np.linalg.norm(q + np.array(shift) - p)))
    return best


def test_distance_wraps_on_circle():
    m = make_model("cat2")
    assert manifold_distance(m, [0.1, 0.0], [0.9, 0.0]) == pytest.approx(0.2)


def test_distance_to_self_is_zero():
    m = make_model("cat2")
    assert manifold_distance(m, [0.3, 0.7], [0.3, 0.7]) == 0.0


def test_distance_lattice_translates():
    m = make_model("cat2")
    d = manifold_distance(m, [0.25, 0.0], [0.75, 0.5])
    assert d == pytest.approx(brute_torus_distance([0.25, 0.0], [0.75, 0.5]), abs=1e-15)
    assert d == pytest.approx(np.sqrt(0.5))


def test_distance_dimension_mismatch():
    m = make_model("cat2")
    with pytest.raises(ValueError):
        manifold_distance(m, [0.1, 0.2], [0.1, 0.2, 0.3])


@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=4, max_size=4))
@settings(deadline=None)
def test_distance_matches_translate_search(c):
    m = make_model("cat2")
    assert manifold_distance(m, c[:2], c[2:]) == pytest.approx(brute_torus_distance(c[:2], c[2:]), abs=1e-12)


@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=6, max_size=6))
@settings(deadline=None)
def test_distance_triangle_inequality(c):
    m = make_model("cat2")
    p, q, r = np.array(c).reshape(3, 2)
    assert manifold_distance(m, p, r) <= manifold_distance(m, p, q) + manifold_distance(m, q, r) + 1e-12


@pytest.mark.parametrize("name", ALL)
def test_forward_backward_identity(name):
    m = make_model(name)
    rng = np.random.default_rng(1)
    x = m.random_points(rng, 1000)
    y = m.backward(m.forward(x))
    assert np.max(m.distance(x, y)) < 1e-10


@pytest.mark.parametrize("name", ALL)
def test_inverse_derivative(name):
    m = make_model(name)
    rng = np.random.default_rng(2)
    x = m.random_points(rng, 200)
    prod = m.derivative(x) @ m.inverse_derivative(m.forward(x))
    assert np.max(np.abs(prod - np.eye(m.dim))) < 1e-8


@pytest.mark.parametrize("name", ["cat2", "cat3", "translation"])
def test_analytic_F_is_invariant(name):
    m = make_model(name)
    rng = np.random.default_rng(3)
    x = m.random_points(rng, 200)
    v = m.derivative(x) @ m.analytic_F(x)
    F1 = m.analytic_F(m.forward(x))
    # residual of Df F(x) after projecting onto F(f x)
    res = v - F1 @ (np.swapaxes(F1, -1, -2) @ v)
    assert np.max(np.abs(res)) < 1e-8


@pytest.mark.parametrize("name", ["solenoid", "da2"])
def test_numeric_F_is_invariant(name):
    m = make_model(name)
    rng = np.random.default_rng(4)
    x = m.random_points(rng, 20)
    if name == "solenoid":
        x = np.stack([m.orbit_points(p, 30)[-1] for p in x])
    _, F = m.splitting(x)
    v = m.derivative(x) @ F
    _, F1 = m.splitting(m.forward(x))
    res = v - F1 @ (np.swapaxes(F1, -1, -2) @ v)
    assert np.max(np.abs(res)) < 1e-6


def test_cat2_orbit_observables():
    tr = orbit(make_model("cat2"), [0.2, 0.3], 3)
    assert tr.points.shape == (3, 2)
    assert np.allclose(tr.log_mini_F, np.log((3 + np.sqrt(5)) / 2), atol=1e-12)


def test_orbit_of_length_one():
    tr = orbit(make_model("cat2"), [0.2, 0.3], 1)
    assert tr.points.shape == (1, 2)
    assert tr.log_mini_F.size == 0 and tr.log_norm_E.size == 0 and tr.log_jac_F.size == 0


def test_solenoid_second_point():
    tr = orbit(make_model("solenoid"), [0.0, 0.0, 0.0], 2)
    assert np.allclose(tr.points[1], [0.0, 0.5, 0.0], atol=1e-15)


def test_solenoid_escape_names_step():
    m = make_model("solenoid")
    with pytest.raises(DomainError):
        orbit(m, [0.0, 0.95, 0.0], 5)


def test_solenoid_traps_boundary():
    m = make_model("solenoid")
    th = np.linspace(0, 1, 200, endpoint=False)
    phi = np.linspace(0, 2 * np.pi, 60, endpoint=False)
    T, P = np.meshgrid(th, phi, indexing="ij")
    r = m.trap_radius
    x = np.stack([T.ravel(), r * np.cos(P.ravel()), r * np.sin(P.ravel())], axis=-1)
    assert x.shape[0] >= 10_000
    y = m.forward(x)
    assert np.all(np.hypot(y[:, 1], y[:, 2]) <= r)


def test_da2_without_bump_is_cat2():
    da = make_model("da2", eps=0.0)
    cat = make_model("cat2")
    rng = np.random.default_rng(5)
    x = rng.random((500, 2))
    d = cat.distance(da.forward(x), cat.forward(x))
    assert np.max(d) < 1e-12
    assert np.max(np.abs(da.derivative(x) - cat.derivative(x))) < 1e-12


def test_cat_constants():
    assert CAT_EXPANSION == pytest.approx((3 + np.sqrt(5)) / 2)
    assert LOG_CAT_EXPANSION == pytest.approx(0.962424, abs=1e-6)


def test_unknown_model():
    with pytest.raises(KeyError):
        make_model("henon")


@pytest.mark.parametrize("name", ALL)
def test_models_are_immutable(name):
    m = make_model(name)
    with pytest.raises(Exception):
        m.name_of_new_field = 1
