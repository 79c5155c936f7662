import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pliss_lab.entropy import (
    atom_code,
    block_entropies,
    conditional_entropies,
    entropy_rate,
    gibbs_check,
    orbit_codes,
    partition_diameter,
    pesin_check,
    ruelle_check,
)
from pliss_lab.geometry import make_fdisk
from pliss_lab.measures import grid_for
from pliss_lab.models import LOG_CAT_EXPANSION, make_model
from pliss_lab.pliss import TimeSet, pliss_times

CAT2 = make_model("cat2")


def exact_cat_code(x, resolution, times):
    """Cell indices of the orbit computed in rational arithmetic."""
    a, b = (Fraction(v) for v in x)
    out = []
    for k in range(max(times) + 1):
        if k in times:
            out.append(math.floor(a * resolution) * resolution + math.floor(b * resolution))
        a, b = (2 * a + b) % 1, (a + b) % 1
    return out


def test_atom_code_time_zero_is_cell():
    assert list(atom_code(CAT2, [0.2, 0.3], 8, [0])) == [1 * 8 + 2]


def test_atom_code_cat2_against_rational_orbit():
    x = (Fraction(1, 5), Fraction(3, 10))
    got = atom_code(CAT2, [0.2, 0.3], 8, TimeSet(2, [0, 1, 2]))
    assert list(got) == exact_cat_code(x, 8, {0, 1, 2})


def test_atom_code_fixed_point_constant():
    code = atom_code(CAT2, [0.0, 0.0], 16, TimeSet(20, range(21)))
    assert np.all(code == code[0])


def test_atom_code_empty_q():
    assert atom_code(CAT2, [0.2, 0.3], 8, []).size == 0


def test_partition_diameter():
    assert partition_diameter(CAT2, 64) == pytest.approx(math.sqrt(2) / 64)


def test_constant_code_has_zero_rate():
    assert entropy_rate(np.zeros((3, 100), dtype=int), 4) == 0.0


def test_rate_needs_two_blocks():
    with pytest.raises(ValueError):
        entropy_rate(np.zeros(10, dtype=int), 1)


def test_iid_fair_coin_plug_in():
    # every length-2 block equally often on a de Bruijn cycle
    codes = np.tile([0, 0, 1, 1], 250)
    h = conditional_entropies(codes, 2, correction="plug-in")
    assert h[0] == pytest.approx(math.log(2))
    assert h[1] == pytest.approx(math.log(2), abs=1e-2)


def test_block_entropy_rejects_short_orbit():
    with pytest.raises(ValueError):
        block_entropies(np.zeros(3, dtype=int), 4)


def test_unknown_correction():
    with pytest.raises(ValueError):
        block_entropies(np.zeros(10, dtype=int), 2, correction="bogus")


@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
@settings(deadline=None, max_examples=30)
def test_plug_in_conditional_entropy_nearly_non_increasing(seed, alphabet):
    rng = np.random.default_rng(seed)
    # a Markov source keeps the conditional entropies informative; block
    # frequencies at finite length are not shift invariant, hence the slack
    P = rng.dirichlet(np.ones(alphabet), size=alphabet)
    T = 20_000
    x = np.empty(T, dtype=int)
    x[0] = 0
    u = rng.random(T)
    cum = np.cumsum(P, axis=1)
    for t in range(1, T):
        x[t] = min(np.searchsorted(cum[x[t - 1]], u[t]), alphabet - 1)
    h = conditional_entropies(x, 5, correction="plug-in")
    assert np.all(np.diff(h) <= 1e-3)


def test_cat2_entropy_rate_short_run():
    rng = np.random.default_rng(0)
    codes, jac = orbit_codes(CAT2, rng.random((20, 2)), 20_000, 8)
    assert jac == pytest.approx(LOG_CAT_EXPANSION, abs=1e-9)
    h = conditional_entropies(codes, 4)
    assert np.all(np.diff(h) <= 1e-3)


def test_pesin_solenoid_short_run():
    m = make_model("solenoid")
    starts = m.random_points(np.random.default_rng(1), 50)
    r = pesin_check(m, starts, 4000, [32, 1, 1], 6)
    assert r.h_est == pytest.approx(math.log(2), abs=0.05)
    assert abs(r.residual) <= 0.05


def test_point_mass_entropy_and_ruelle():
    codes, _ = orbit_codes(CAT2, np.zeros((1, 2)), 200, 32)
    h = entropy_rate(codes, 4)
    assert h == 0.0
    r = ruelle_check(h, [LOG_CAT_EXPANSION, -LOG_CAT_EXPANSION])
    assert r.sum_positive_exponents == LOG_CAT_EXPANSION and r.slack == LOG_CAT_EXPANSION


def test_ruelle_ignores_nonpositive():
    r = ruelle_check(0.5, [0.7, 0.0, -1.0, 0.2])
    assert r.sum_positive_exponents == pytest.approx(0.9)
    assert r.slack == pytest.approx(0.4)


def cat2_gibbs(n, mode, resolution=64, epsilon=0.05):
    disk = make_fdisk(CAT2, [0.3, 0.4], 0.05, n_cells=2000)
    lam = np.arange(disk.n_cells)
    return disk, lam, gibbs_check(disk, lam, TimeSet(n, range(n)), resolution, epsilon, mode=mode)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_cat2_gibbs_no_violations(n):
    _, _, g = cat2_gibbs(n, "component")
    assert g.violations == 0
    # right side is e^{eps n} lambda^{-n}
    assert np.allclose(g.log_rhs, 0.05 * n - n * LOG_CAT_EXPANSION)


@pytest.mark.parametrize("n", [1, 4, 8])
def test_gibbs_partition_property(n):
    disk, lam, g = cat2_gibbs(n, "samples", resolution=16)
    _, first = np.unique(g.labels, return_index=True)
    assert math.fsum(g.lhs[first]) == pytest.approx(math.fsum(disk.weights[lam]), rel=1e-12)
    assert g.atoms == first.size


def test_gibbs_singleton_q():
    disk, lam, g = cat2_gibbs(1, "samples", resolution=16)
    # Q = {0}: atoms are the cells the disk crosses
    cells = np.unique(atom_code_all(disk, lam, 16))
    assert g.atoms == cells.size


def atom_code_all(disk, lam, resolution):
    return grid_for(disk.model, resolution).index(disk.point_at(disk.s[lam]))


def test_gibbs_unknown_mode():
    disk = make_fdisk(CAT2, [0.3, 0.4], 0.05, n_cells=50)
    with pytest.raises(ValueError):
        gibbs_check(disk, np.arange(50), TimeSet(2, [0, 1]), 16, 0.05, mode="other")


dyadic = st.integers(-256, 256).map(lambda k: k / 128)


@given(st.lists(dyadic, max_size=60), st.integers(-128, 128).map(lambda k: k / 128))
@settings(deadline=None)
def test_pliss_sets_are_a_prime_large(seq, a_prime):
    # between any two Pliss times the sum is at least a' per step
    P = list(pliss_times(seq, a_prime))
    for k, l in zip(P, P[1:]):
        assert math.fsum(seq[k:l]) >= (l - k) * a_prime
