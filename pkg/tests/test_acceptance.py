"""Acceptance suite: one test per criterion at full size.

Each test prints a single ``[PASS]`` / ``[FAIL]`` line (shown even without
``-s``) before asserting.  Runtime budgets are part of the criteria.
"""
import shutil
import time

import pytest

from pliss_lab import experiments
from pliss_lab.cli import main
from pliss_lab.config import ExperimentConfig

SEED = 20240601

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, **detail):
        body = ", ".join(f"{k}={v}" for k, v in detail.items())
        with capsys.disabled():
            print(f"\ncriterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}: {body}")
        return passed

    return emit


def run(experiment, model=None, **params):
    cfg = ExperimentConfig(experiment, model, seed=SEED, params=params)
    t0 = time.perf_counter()
    res = getattr(experiments, "run_" + experiment.replace("-", "_"))(cfg)
    return res, time.perf_counter() - t0


def crit(res, name):
    (c,) = [c for c in res.criteria if c.name == name]
    return c


def test_01_pliss_oracle_equivalence(report):
    res, _ = run("pliss")
    c = crit(res, "pliss_oracle")
    ok = c.passed and c.detail["mismatches"] == 0 and c.detail["cases"] == 1000 and c.seconds < 5.0
    assert report(1, "Pliss oracle equivalence", ok, cases=c.detail["cases"],
                  mismatches=c.detail["mismatches"], seconds=round(c.seconds, 2))


def test_02_quantitative_pliss_lemma(report):
    res, _ = run("pliss")
    c = crit(res, "pliss_lemma")
    ok = c.passed and c.detail["failures"] == 0 and c.detail["trials"] == 10_000 and c.seconds < 10.0
    assert report(2, "quantitative Pliss lemma", ok, trials=c.detail["trials"],
                  failures=c.detail["failures"], seconds=round(c.seconds, 2))


def test_03_lyapunov_ground_truth(report):
    cat, t1 = run("lyapunov", "cat2", n=10_000)
    sol, t2 = run("lyapunov", "solenoid", n=10_000)
    e1 = crit(cat, "lyapunov_cat2").detail["max_error"]
    e2 = crit(sol, "lyapunov_solenoid_top").detail["max_error"]
    ok = e1 <= 1e-6 and e2 <= 5e-3 and t1 < 5.0 and t2 < 5.0
    assert report(3, "Lyapunov ground truth", ok, cat2_error=e1, solenoid_error=e2,
                  seconds=round(max(t1, t2), 2))


def test_04_chi_min_and_appendix_identity(report):
    chi, t0 = run("chi-min", "cat2")
    cat, t1 = run("appendix", "cat2")
    sol, t2 = run("appendix", "solenoid")
    g1 = crit(cat, "appendix_gap_cat2").detail["max_gap"]
    g2 = crit(sol, "appendix_gap_solenoid").detail["max_gap"]
    v = max(crit(r, "appendix_one_sided").detail["max_violation"] for r in (cat, sol))
    seconds = t0 + t1 + t2
    ok = crit(chi, "chi_min_cat2").passed and g1 <= 1e-6 and g2 <= 0.02 and v <= 1e-6 and seconds < 60.0
    assert report(4, "chi_min and appendix identity", ok, cat2_gap=g1, solenoid_gap=g2,
                  one_sided=v, seconds=round(seconds, 2))


def test_05_folner_verification(report):
    res, t = run("folner", "da2", N=20_000, samples=1000, eps_boundary=0.05, eps_mass=0.05, eps_fill=0.1, m=50)
    c = crit(res, "folner_items")
    items = {k: v for k, v in c.detail.items() if isinstance(v, bool)}
    ok = c.passed and len(items) == 7 and all(items.values()) and t < 300.0
    assert report(5, "Folner verification", ok, items=sum(items.values()), seconds=round(t, 1))


def test_06_gibbs_property(report):
    cat, t1 = run("gibbs", "cat2", epsilon=0.05)
    da2, t2 = run("gibbs", "da2", epsilon=0.1, resolution=64)
    v1 = crit(cat, "gibbs_cat2").detail["violations"]
    v2 = crit(da2, "gibbs_da2").detail["violations"]
    ok = v1 == 0 and v2 == 0 and t1 + t2 < 300.0
    assert report(6, "Gibbs property", ok, cat2_violations=v1, da2_violations=v2, seconds=round(t1 + t2, 1))


def test_07_entropy_and_pesin(report):
    out = {}
    seconds = 0.0
    for name in ("cat2", "solenoid"):
        res, t = run("entropy", name, orbits=1000, length=10_000)
        seconds += t
        out[name] = (crit(res, f"entropy_rate_{name}"), crit(res, f"pesin_{name}"), crit(res, "ruelle"))
    ok = all(a.passed and b.passed and c.passed for a, b, c in out.values()) and seconds < 600.0
    assert report(7, "entropy and Pesin", ok,
                  cat2_h=out["cat2"][0].detail["h_est"], solenoid_h=out["solenoid"][0].detail["h_est"],
                  max_residual=max(abs(b.detail["residual"]) for _, b, _ in out.values()),
                  min_ruelle_slack=min(c.detail["slack"] for _, _, c in out.values()),
                  seconds=round(seconds, 1))


def test_08_distortion_and_pliss_iterate(report):
    cat, t0 = run("distortion", "cat2", anchors=100)
    ok = crit(cat, "distortion_identity_cat2").passed
    seconds = t0
    for name in ("solenoid", "da2"):
        res, t = run("distortion", name, anchors=100)
        seconds += t
        ok = ok and crit(res, f"distortion_{name}").passed and crit(res, f"pliss_iterate_{name}").passed
        ok = ok and crit(res, f"distortion_{name}").detail["anchors"] == 100
    ok = ok and seconds < 120.0
    assert report(8, "bounded distortion and Pliss iterate", ok,
                  cat2_error=crit(cat, "distortion_identity_cat2").detail["max_error"], seconds=round(seconds, 1))


def test_09_bi_pliss_and_mean_ergodic(report):
    res, t = run("bipliss", trials=10_000, mean_trials=100_000)
    bp = crit(res, "bi_pliss_equal")
    me = crit(res, "mean_ergodic")
    ok = bp.detail["unequal"] == 0 and me.detail["failures"] == 0 and t < 30.0
    assert report(9, "bi-Pliss equality and mean ergodic inequality", ok, cycles=bp.detail["trials"],
                  unequal=bp.detail["unequal"], mean_ergodic_failures=me.detail["failures"], seconds=round(t, 2))


def test_10_vitali_selection(report):
    res, t = run("vitali")
    c = crit(res, "vitali")
    ok = c.passed and t < 5.0
    assert report(10, "Vitali selection", ok, runs=c.detail["runs"], seconds=round(t, 2))


def test_11_dynamical_density_trend(report):
    res, t = run("density", "da2", anchors=100)
    c = crit(res, "density_trend")
    ok = c.detail["fraction"] >= 0.9 and t < 600.0
    assert report(11, "dynamical density trend", ok, fraction=c.detail["fraction"],
                  anchors=c.detail["anchors"], seconds=round(t, 1))


def snapshot(d):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_12_reproducibility(report, tmp_path):
    out = tmp_path / "run"
    argv = ["run", "--experiment", "all", "--self-test", "--seed", str(SEED), "--out", str(out)]
    main(argv)
    first = snapshot(out)
    shutil.rmtree(out)
    main(argv)
    second = snapshot(out)
    differing = sorted(k for k in first.keys() | second.keys() if first.get(k) != second.get(k))
    ok = len(first) > 0 and not differing
    assert report(12, "reproducibility", ok, artifacts=len(first), differing=len(differing))
