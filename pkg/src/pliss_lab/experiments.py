"""Named experiments shared by the command line and the acceptance suite.

Each ``run_*`` function takes an ExperimentConfig and returns an
ExperimentResult: pass/fail criteria, CSV tables and JSON reports.  All
randomness comes from ``stream_rng(seed, stream)`` with a fixed stream index
per experiment, so results depend only on (config, seed).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import cocycle, entropy, folner, geometry, measures, pliss
from .calibration import anchor_pliss_times, calibrate, calibration_disk
from .config import ExperimentConfig, stream_rng
from .models import LOG_CAT_EXPANSION, Solenoid, log_mini_F_ensemble, make_model
from .parallel import parallel_map

LOG2 = math.log(2.0)

STREAMS = {
    "lyapunov": 1,
    "chi-min": 2,
    "pliss": 3,
    "folner": 4,
    "gibbs": 4,  # same ensemble as folner
    "entropy": 5,
    "density": 6,
    "bipliss": 7,
    "appendix": 8,
    "distortion": 9,
    "vitali": 10,
    "calibration": 11,
}


@dataclass
class Criterion:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = None  # printed, never written, so artifacts stay reproducible

    def line(self):
        body = ", ".join(f"{k}={_short(v)}" for k, v in sorted(self.detail.items()))
        if self.seconds is not None:
            body += f" ({self.seconds:.2f} s)"
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {body}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


@dataclass
class ExperimentResult:
    experiment: str
    model: str
    criteria: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.criteria)

    def failing(self):
        return [c.name for c in self.criteria if not c.passed]

    def check(self, name, passed, seconds=None, **detail):
        self.criteria.append(Criterion(name, bool(passed), detail, seconds))
        return bool(passed)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

DEFAULTS = {
    "lyapunov": {"n": 10_000, "samples": 1},
    "chi-min": {"p_max": 8, "N": 10_000, "samples": 20},
    "appendix": {"p_max": 8, "n": 10_000, "samples": 3, "resolution": 16},
    "pliss": {"trials": 1000, "lemma_trials": 10_000, "n_max": 200, "lemma_n_max": 300},
    "folner": {"N": 20_000, "samples": 1000, "level_count": 5, "disk_radius": 0.05,
               "resolution": 64, "gap": 50, "m": 50,
               "eps_boundary": 0.05, "eps_mass": 0.05, "eps_fill": 0.1},
    "gibbs": {"N": 20_000, "samples": 1000, "level_count": 5, "disk_radius": 0.05,
              "resolution": 64, "gap": 50, "short_horizon": 32},
    "entropy": {"orbits": 1000, "length": 10_000, "n_lyap": 10_000},
    "density": {"anchors": 100, "disk_radius": 0.05, "horizon": 24, "times": 4,
                "bar_horizon": 1000, "s_cut": 0.0, "threshold": 0.95, "fraction": 0.9},
    "distortion": {"anchors": 100, "disk_radius": 0.1, "pliss_horizon": 20},
    "vitali": {"trials": 5, "balls": 1000, "anchors": 200, "disk_radius": 0.05},
    "bipliss": {"trials": 10_000, "mean_trials": 100_000, "p_max": 12, "mean_p_max": 20,
                "oracle_trials": 500},
}

MODEL_DEFAULTS = {
    ("gibbs", "cat2"): {"epsilon": 0.05},
    ("gibbs", "da2"): {"epsilon": 0.1},
    ("entropy", "cat2"): {"resolution": 32, "block_max": 8},
    ("entropy", "da2"): {"resolution": 32, "block_max": 8},
    ("entropy", "solenoid"): {"resolution": [2, 1, 1], "block_max": 12},
    ("distortion", "cat2"): {"n": 10, "epsilon": 0.05},
    ("distortion", "solenoid"): {"n": 10, "epsilon": 0.1},
    ("distortion", "da2"): {"n": 15, "epsilon": 0.05},
}

ENTROPY_REFERENCE = {"cat2": LOG_CAT_EXPANSION, "solenoid": LOG2}


def resolve(cfg, experiment=None):
    exp = experiment or cfg.experiment
    p = dict(DEFAULTS.get(exp, {}))
    p.update(MODEL_DEFAULTS.get((exp, cfg.model_name), {}))
    p.setdefault("epsilon", 0.1)
    p.setdefault("resolution", 32)
    p.setdefault("block_max", 8)
    p.setdefault("n", 10)
    p.update(cfg.thresholds())
    p.update(cfg.params)
    if cfg.self_test:
        p = _smoke(exp, p, cfg.model_name)
    return p


def _smoke(exp, p, model_name=None):
    """Reduced sizes for --self-test runs of the heavier experiments."""
    small = {
        "folner": {"N": 2000, "samples": 200},
        "gibbs": {"N": 2000, "samples": 200},
        "entropy": {"orbits": 100, "length": 2000},
        "density": {"anchors": 10},
        "distortion": {"anchors": 10},
        "chi-min": {"samples": 4},
        "bipliss": {"trials": 1000, "mean_trials": 5000},
        "vitali": {"trials": 1, "balls": 300},
    }.get(exp, {})
    if exp == "entropy" and model_name in ("cat2", "da2"):
        # a coarse grid keeps 2e5 symbols enough for 7-blocks
        small = dict(small, resolution=4, block_max=7)
    for k, v in small.items():
        p[k] = min(p[k], v) if isinstance(p.get(k), (int, float)) else v
    return p


def model_of(cfg):
    return make_model(cfg.model_name, **cfg.model_params)


def start_points(model, rng, k):
    x = model.random_points(rng, k)
    if isinstance(model, Solenoid):
        x = np.stack([model.orbit_points(p, 40)[-1] for p in x])
    return x


def _new(cfg, exp, model_name, params):
    return ExperimentResult(exp, model_name, params=params)


# --------------------------------------------------------------------------
# lyapunov
# --------------------------------------------------------------------------


def _lyap_task(args):
    model, x, n = args
    return cocycle.lyapunov_exponents(model, x, n)


def run_lyapunov(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "lyapunov", model.name, p)
    rng = stream_rng(cfg.seed, STREAMS["lyapunov"])
    X = start_points(model, rng, p["samples"])
    t0 = time.perf_counter()
    reps = parallel_map(_lyap_task, [(model, x, p["n"]) for x in X], cfg.jobs)
    elapsed = time.perf_counter() - t0
    res.tables["lyapunov.csv"] = (
        cocycle.ExponentReport.csv_header(model.dim),
        [r.csv_row(model.name, cfg.seed) for r in reps],
    )
    res.check("index_order", all(r.i_u <= r.i_cu for r in reps))
    if model.name == "cat2":
        err = max(max(abs(r.exponents[0] - LOG_CAT_EXPANSION), abs(r.exponents[1] + LOG_CAT_EXPANSION)) for r in reps)
        res.check("lyapunov_cat2", err <= 1e-6, max_error=err, seconds=elapsed)
    if model.name == "solenoid":
        err = max(abs(r.exponents[0] - LOG2) for r in reps)
        res.check("lyapunov_solenoid_top", err <= 5e-3, max_error=err, seconds=elapsed)
    return res


# --------------------------------------------------------------------------
# chi-min
# --------------------------------------------------------------------------


def _chi_task(args):
    model, x, p_max, N = args
    betas = cocycle.beta_profile(model, x, p_max, N)
    pts, D, F = cocycle.orbit_cocycle(model, x, N + 1)
    one = cocycle.p_step_log_mini(D, F, 1, N)[0]
    return betas, float(cocycle.m_lower_F(one))


def run_chi_min(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "chi-min", model.name, p)
    rng = stream_rng(cfg.seed, STREAMS["chi-min"])
    X = start_points(model, rng, p["samples"])
    p_max, N = p["p_max"], p["N"]
    ps = np.arange(1, p_max + 1)
    if model.dim_F == 1:
        betas, lower = cocycle.beta_profile_ensemble(model, X, p_max, N, lower=True)
    else:
        out = parallel_map(_chi_task, [(model, x, p_max, N) for x in X], cfg.jobs)
        betas = np.stack([o[0] for o in out])
        lower = np.array([o[1] for o in out])
    chi = np.max(betas / ps, axis=1)
    m_bar = betas[:, 0]
    rows = [[model.name, cfg.seed, i, chi[i], m_bar[i], lower[i], *betas[i]] for i in range(len(X))]
    res.tables["chi_min.csv"] = (
        ["model", "seed", "sample", "chi_F_min", "m_bar_F", "m_lower_F"] + [f"beta_{k}" for k in ps],
        rows,
    )
    order = bool(np.all(lower <= m_bar) and np.all(m_bar <= chi + 1e-9))
    res.check("exponent_order", order, samples=len(X))
    if model.name == "cat2":
        err = float(np.max(np.abs(chi - LOG_CAT_EXPANSION)))
        res.check("chi_min_cat2", err <= 1e-6, max_error=err)
    if model.name == "da2":
        frac = float(np.mean(chi > 0))
        res.check("chi_min_positive_fraction", frac >= 0.99, fraction=frac, samples=len(X))
    return res


# --------------------------------------------------------------------------
# appendix identity
# --------------------------------------------------------------------------


def _appendix_task(args):
    model, x, p_max, n, resolution = args
    return measures.appendix_identity_check(model, x, p_max, n, resolution)


def run_appendix(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "appendix", model.name, p)
    rng = stream_rng(cfg.seed, STREAMS["appendix"])
    X = start_points(model, rng, p["samples"])
    t0 = time.perf_counter()
    out = parallel_map(_appendix_task, [(model, x, p["p_max"], p["n"], p["resolution"]) for x in X], cfg.jobs)
    elapsed = time.perf_counter() - t0
    res.tables["appendix.csv"] = (
        ["model", "seed", "sample", "chi_F_min", "sup_empirical", "gap", "one_sided_violation", "tv_spread"],
        [[model.name, cfg.seed, i, r.chi, r.sup_emp, r.gap, r.one_sided_violation, r.tv_spread] for i, r in enumerate(out)],
    )
    viol = max(r.one_sided_violation for r in out)
    gap = max(r.gap for r in out)
    res.check("appendix_one_sided", viol <= 1e-6, max_violation=viol)
    if model.name == "cat2":
        res.check("appendix_gap_cat2", gap <= 1e-6, max_gap=gap, seconds=elapsed)
    if model.name == "solenoid":
        res.check("appendix_gap_solenoid", gap <= 0.02, max_gap=gap, seconds=elapsed)
    return res


# --------------------------------------------------------------------------
# pliss
# --------------------------------------------------------------------------


def oracle_cases(rng, count, n_max=200):
    """Random sequences for the fast-vs-literal comparison; a quarter are
    integer valued with integer thresholds so that ties occur."""
    for _ in range(count):
        n = int(rng.integers(0, n_max + 1))
        if rng.random() < 0.25:
            yield rng.integers(-2, 3, n).astype(float), float(rng.integers(-1, 2))
        else:
            yield rng.uniform(-2, 2, n), float(rng.uniform(-1, 1))


def run_pliss(cfg):
    p = resolve(cfg)
    res = _new(cfg, "pliss", None, p)
    rng = stream_rng(cfg.seed, STREAMS["pliss"])
    t0 = time.perf_counter()
    mismatches = 0
    for seq, a in oracle_cases(rng, p["trials"], p["n_max"]):
        if pliss.pliss_times(seq, a) != pliss.pliss_times_bruteforce(seq, a):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    res.check("pliss_oracle", mismatches == 0 and elapsed < 5.0, cases=p["trials"], mismatches=mismatches, seconds=elapsed)
    summary = {"oracle": {"cases": p["trials"], "mismatches": mismatches}}
    if not cfg.self_test:
        t0 = time.perf_counter()
        failures = 0
        worst = math.inf
        rows = []
        for _ in range(p["lemma_trials"]):
            seq, a_pp, a_prime, A = pliss.random_pliss_instance(rng, p["lemma_n_max"])
            alpha = pliss.pliss_lower_bound(a_pp, a_prime, A)
            count = len(pliss.pliss_times(seq, a_prime)) - 1  # times in [1, n]
            slack = count - alpha * seq.size
            worst = min(worst, slack)
            if slack < -1e-9:
                failures += 1
                rows.append([seq.size, a_pp, a_prime, A, alpha, count])
        elapsed = time.perf_counter() - t0
        res.check("pliss_lemma", failures == 0 and elapsed < 10.0, trials=p["lemma_trials"],
                  failures=failures, min_slack=worst, seconds=elapsed)
        summary["lemma"] = {"trials": p["lemma_trials"], "failures": failures, "min_slack": worst}
        if rows:
            res.tables["pliss_lemma_failures.csv"] = (["n", "a_pp", "a_prime", "A", "alpha", "count"], rows)
    res.reports["pliss.json"] = summary
    return res


# --------------------------------------------------------------------------
# Følner ensembles (shared by folner and gibbs)
# --------------------------------------------------------------------------

_ENSEMBLES = {}


def folner_ensemble(model, seed, N, samples, radius, a_prime, keep_points=False):
    """Disk, Pliss masks (samples, N+1) and sup of log m(Df|F) for a disk ensemble."""
    key = (model.name, tuple(sorted(model.params.items())), int(seed), N, samples, radius, a_prime)
    if key in _ENSEMBLES and not keep_points:
        return _ENSEMBLES[key]
    rng = stream_rng(seed, STREAMS["folner"])
    center = start_points(model, rng, 1)[0]
    disk = geometry.make_fdisk(model, center, radius, n_cells=samples)
    masks = np.empty((samples, N + 1), dtype=bool)
    A = -math.inf
    pts_all = np.empty((N + 1, samples, model.dim)) if keep_points else None
    chunk = 100
    for lo in range(0, samples, chunk):
        block = disk.points[lo : lo + chunk]
        pts = model.orbit_points(block, N + 1)
        model.check_orbit(pts)
        lm = log_mini_F_ensemble(model, pts)
        A = max(A, float(lm.max()))
        masks[lo : lo + chunk] = pliss.pliss_mask(lm.T, a_prime)
        if keep_points:
            pts_all[:, lo : lo + chunk] = pts
    _ENSEMBLES.clear()
    _ENSEMBLES[key] = (disk, masks, A)
    return (disk, masks, A, pts_all) if keep_points else (disk, masks, A)


def _alpha(p, A):
    if A <= p["a_pp"]:
        return 1.0
    return pliss.pliss_lower_bound(p["a_pp"], p["a_prime"], A)


def _calibration(cfg, model, p):
    rng = stream_rng(cfg.seed, STREAMS["calibration"])
    return calibrate(model, rng, p["a"], p["a_prime"], epsilon=p["epsilon"])


def run_folner(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "folner", model.name, p)
    res.calibration = _calibration(cfg, model, p).as_dict()
    t0 = time.perf_counter()
    disk, masks, A, pts = folner_ensemble(model, cfg.seed, p["N"], p["samples"], p["disk_radius"], p["a_prime"], keep_points=True)
    w = disk.weights / disk.weights.sum()
    alpha = _alpha(p, A)
    plan = folner.folner_select(list(masks), w, alpha, p["level_count"], p["gap"], p["N"])
    tol = folner.FolnerTolerances(p["eps_boundary"], p["eps_mass"], p["eps_fill"], p["m"])
    report = folner.verify_folner(plan, list(masks), tol)
    rows = []
    defects = []
    eta_final = None
    for lv, rep in zip(plan.levels, report.levels):
        nu, eta = measures.folner_empirical(model, pts, w, lv, p["resolution"], pliss=masks)
        defect = measures.invariance_defect(model, nu)
        defects.append(defect)
        eta_final = eta
        rows.append([lv.n, len(lv.Q), rep.lambda_size, nu.total, eta.total, defect,
                     bool(np.all(eta.weights <= nu.weights + 1e-15))])
        nu_final = nu
    del pts
    elapsed = time.perf_counter() - t0
    res.tables["folner_levels.csv"] = (
        ["n", "q_size", "lambda_size", "nu_total", "eta_total", "invariance_defect", "eta_below_nu"], rows)
    res.tables["nu_final.csv"] = (["cell", "weight"], nu_final.to_rows())
    res.reports["nu_final.json"] = nu_final.sidecar({"experiment": "folner", "model": model.name, "level": plan.levels[-1].n})
    res.reports["folner.json"] = {**report.as_json(), "dropped_levels": plan.dropped, "sup_log_mini": A}
    res.check("folner_items", report.passed, seconds=elapsed,
              **{k: bool(v) for k, v in report.items.items()})
    res.check("eta_mass", eta_final.total >= alpha - 0.1, eta_total=eta_final.total, alpha=alpha)
    res.check("invariance_defect", defects[-1] <= 0.1 and all(b <= a for a, b in zip(defects, defects[1:])),
              final=defects[-1], first=defects[0])
    return res


# --------------------------------------------------------------------------
# gibbs
# --------------------------------------------------------------------------


def run_gibbs(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "gibbs", model.name, p)
    cal = _calibration(cfg, model, p)
    res.calibration = cal.as_dict()
    t0 = time.perf_counter()
    disk, masks, A = folner_ensemble(model, cfg.seed, p["N"], p["samples"], p["disk_radius"], p["a_prime"])
    w = disk.weights / disk.weights.sum()
    alpha = _alpha(p, A)
    long_plan = folner.folner_select(list(masks), w, alpha, p["level_count"], p["gap"], p["N"])
    sh = p["short_horizon"]
    short_levels = int(math.log2(sh)) + 1
    short_plan = folner.folner_select(list(masks[:, : sh + 1]), w, alpha, short_levels, p["gap"], sh)
    diam = entropy.partition_diameter(model, p["resolution"])
    res.check("partition_diameter", diam < cal.delta0, diameter=diam, delta0=cal.delta0)
    rows = []
    total_viol = 0
    worst = -math.inf
    checked = [("short", lv) for lv in short_plan.levels] + [("final", long_plan.levels[-1])]
    for tag, lv in checked:
        g = entropy.gibbs_check(disk, lv.lambda_indices, lv.Q, p["resolution"], p["epsilon"], mode="component")
        total_viol += g.violations
        worst = max(worst, g.worst_margin)
        rows.append([model.name, tag, lv.n, len(lv.Q), p["epsilon"], p["resolution"], g.violations, g.worst_margin, g.atoms, g.mode])
    elapsed = time.perf_counter() - t0
    res.tables["gibbs.csv"] = (
        ["model", "plan", "n", "q_size", "epsilon", "resolution", "violations", "worst_margin", "atoms", "mode"], rows)
    res.check(f"gibbs_{model.name}", total_viol == 0, violations=total_viol, worst_margin=worst,
              levels=len(checked), seconds=elapsed)
    # partition property on the first short level, sample mode: one left side per atom
    lv = short_plan.levels[0]
    gs = entropy.gibbs_check(disk, lv.lambda_indices, lv.Q, p["resolution"], p["epsilon"], mode="samples")
    _, first = np.unique(gs.labels, return_index=True)
    atom_sum = math.fsum(gs.lhs[first])
    lam_w = math.fsum(disk.weights[lv.lambda_indices])
    res.check("gibbs_partition", abs(atom_sum - lam_w) <= 1e-12 * max(1.0, lam_w),
              atom_sum=atom_sum, lambda_weight=lam_w, atoms=gs.atoms, sample_violations=gs.violations)
    return res


# --------------------------------------------------------------------------
# entropy
# --------------------------------------------------------------------------


def run_entropy(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "entropy", model.name, p)
    rng = stream_rng(cfg.seed, STREAMS["entropy"])
    starts = start_points(model, rng, p["orbits"])
    t0 = time.perf_counter()
    pes = entropy.pesin_check(model, starts, p["length"], p["resolution"], p["block_max"])
    plug = entropy.conditional_entropies(entropy.orbit_codes(model, starts[:50], p["length"], p["resolution"])[0],
                                         p["block_max"], correction="plug-in")
    lyap = cocycle.lyapunov_exponents(model, starts[0], p["n_lyap"])
    ru = entropy.ruelle_check(pes.h_est, lyap.exponents)
    elapsed = time.perf_counter() - t0
    res.tables["entropy.csv"] = (
        ["model", "resolution", "block_max", "k", "h_k_miller_madow", "h_k_plugin_subsample"],
        [[model.name, str(p["resolution"]), p["block_max"], k + 1, pes.profile[k], plug[k]] for k in range(p["block_max"])],
    )
    res.reports["pesin.json"] = {
        "h_est": pes.h_est, "jac_integral": pes.jac_integral, "residual": pes.residual,
        "sum_positive_exponents": ru.sum_positive_exponents, "ruelle_slack": ru.slack,
        "exponents": list(lyap.exponents), "orbits": p["orbits"], "length": p["length"],
    }
    incr = float(np.max(np.diff(pes.profile))) if p["block_max"] > 1 else 0.0
    res.check("entropy_monotone", incr <= 1e-3, max_increase=incr)
    res.check("ruelle", ru.slack >= -0.05, slack=ru.slack)
    ref = ENTROPY_REFERENCE.get(model.name)
    if ref is not None:
        res.check(f"entropy_rate_{model.name}", abs(pes.h_est - ref) <= 0.05, h_est=pes.h_est, reference=ref, seconds=elapsed)
        res.check(f"pesin_{model.name}", abs(pes.residual) <= 0.05, residual=pes.residual)
    if model.manifold == "torus":
        x0 = np.zeros(model.dim)
        if np.allclose(model.forward(x0), x0):
            codes, _ = entropy.orbit_codes(model, x0[None], 200, p["resolution"])
            h0 = entropy.entropy_rate(codes, 4)
            lam0 = cocycle.lyapunov_exponents(model, x0, 1000)
            r0 = entropy.ruelle_check(h0, lam0.exponents)
            res.check("ruelle_point_mass", h0 == 0.0 and r0.slack >= 0.0, h_est=h0, sum_positive=r0.sum_positive_exponents)
    return res


# --------------------------------------------------------------------------
# density points
# --------------------------------------------------------------------------


def m_bar_at(model, pts, horizon):
    orb = model.orbit_points(pts, horizon + 1)
    lm = log_mini_F_ensemble(model, orb)
    return cocycle.m_bar_F(lm.T)


def run_density(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "density", model.name, p)
    cal = _calibration(cfg, model, p)
    res.calibration = cal.as_dict()
    rng = stream_rng(cfg.seed, STREAMS["density"])
    t0 = time.perf_counter()
    disk = calibration_disk(model, rng, p["disk_radius"])
    a_pp, s_cut, H = p["a_pp"], p["s_cut"], p["bar_horizon"]

    def gamma(s):
        s = np.asarray(s, dtype=float)
        return (s <= s_cut) & (m_bar_at(model, disk.point_at(s), H) > a_pp)

    anchors = []
    while len(anchors) < p["anchors"]:
        cand = rng.uniform(-0.9 * p["disk_radius"], s_cut, 4 * p["anchors"])
        anchors.extend(cand[gamma(cand)].tolist())
    anchors = np.array(anchors[: p["anchors"]])
    masks = anchor_pliss_times(disk, anchors, p["horizon"], p["a_prime"])
    rows = []
    finals = []
    trends = []
    triples = []
    K = 0.0
    for i, (s_x, row) in enumerate(zip(anchors, masks)):
        times = np.flatnonzero(row[cal.n_min :]) + cal.n_min
        if times.size == 0:
            continue
        pick = np.unique(times[np.linspace(0, times.size - 1, min(p["times"], times.size)).round().astype(int)])
        ratios = []
        for n in pick:
            b, hb, hhb = geometry.dynamical_balls(disk, s_x, int(n), cal.delta0, samples=801)
            r = geometry.density_ratio(b, gamma)
            ratios.append(r)
            K = max(K, hhb.mass / b.mass)
            triples.append((b, hb, hhb))
            rows.append([i, s_x, int(n), r, b.mass])
        finals.append(ratios[-1])
        trends.append(all(b >= a - 0.05 for a, b in zip(ratios, ratios[1:])))
    tested, bad = geometry.containment_violations(triples)
    elapsed = time.perf_counter() - t0
    res.tables["density.csv"] = (["anchor", "s", "n", "ratio", "ball_mass"], rows)
    frac = float(np.mean(np.array(finals) >= p["threshold"]))
    res.reports["density.json"] = {
        "anchors": len(finals), "fraction_at_threshold": frac, "fraction_monotone": float(np.mean(trends)),
        "double_size_K": K, "containment_pairs": tested, "containment_violations": len(bad),
        "gamma": {"a_pp": a_pp, "s_cut": s_cut, "bar_horizon": H},
    }
    res.check("density_trend", frac >= p["fraction"], fraction=frac, anchors=len(finals), seconds=elapsed)
    equal = sum(1 for i, j in bad if triples[i][0].n == triples[j][0].n)
    res.reports["density.json"]["containment_violations_equal_n"] = equal
    res.check("ball_containment", not bad, pairs=tested, violations=len(bad), equal_n=equal)
    return res


# --------------------------------------------------------------------------
# distortion and Pliss iterates
# --------------------------------------------------------------------------


def _distortion_task(args):
    disk, s_x, n, eps, delta_eps, n_p, a, delta0, seed = args
    d = geometry.distortion_check(disk, s_x, n, eps, delta_eps, samples=2001)
    if n_p is None:
        return d, None
    q = geometry.pliss_iterate_check(disk, s_x, n_p, a, delta0, pairs=500, rng=np.random.default_rng(seed), samples=801)
    return d, q


def run_distortion(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "distortion", model.name, p)
    cal = _calibration(cfg, model, p)
    res.calibration = cal.as_dict()
    rng = stream_rng(cfg.seed, STREAMS["distortion"])
    t0 = time.perf_counter()
    disk = calibration_disk(model, rng, p["disk_radius"])
    anchors = rng.uniform(-0.5, 0.5, p["anchors"]) * p["disk_radius"]
    masks = anchor_pliss_times(disk, anchors, p["pliss_horizon"], p["a_prime"])
    tasks = []
    for i, (s_x, row) in enumerate(zip(anchors, masks)):
        times = np.flatnonzero(row[cal.n_min :]) + cal.n_min
        n_p = int(times[-1]) if times.size else None
        tasks.append((disk, float(s_x), p["n"], p["epsilon"], cal.delta_eps, n_p, p["a"], cal.delta0, i))
    out = parallel_map(_distortion_task, tasks, cfg.jobs)
    elapsed = time.perf_counter() - t0
    rows = []
    for (task, (d, q)) in zip(tasks, out):
        rows.append([task[1], d.lhs, d.mid, d.rhs, d.passed, d.identity_ratio, task[5],
                     None if q is None else q.max_violation, None if q is None else q.distortion_C,
                     None if q is None else q.passed])
    res.tables["distortion.csv"] = (
        ["s", "lhs", "mid", "rhs", "distortion_pass", "identity_ratio", "pliss_time", "max_violation", "C", "pliss_pass"], rows)
    dist_ok = all(d.passed for d, _ in out)
    iterates = [q for _, q in out if q is not None]
    it_ok = len(iterates) == len(out) and all(q.passed for q in iterates)
    C = max((q.distortion_C for q in iterates), default=float("nan"))
    if model.name == "cat2":
        err = max(abs(d.identity_ratio - 1.0) for d, _ in out)
        res.check("distortion_identity_cat2", err <= 1e-6 and dist_ok, max_error=err, anchors=len(out))
    else:
        res.check(f"distortion_{model.name}", dist_ok, anchors=len(out), passing=sum(d.passed for d, _ in out))
    res.check(f"pliss_iterate_{model.name}", it_ok, anchors=len(iterates), max_C=C, seconds=elapsed)
    return res


# --------------------------------------------------------------------------
# vitali
# --------------------------------------------------------------------------


def random_interval_balls(rng, count):
    c = rng.random(count)
    r = 10 ** rng.uniform(-3, -1, count)
    n = rng.integers(0, 30, count)
    balls = [geometry.IntervalBall(ci - ri, ci + ri, ci - 2 * ri, ci + 2 * ri, int(ni)) for ci, ri, ni in zip(c, r, n)]
    dup = rng.integers(0, count, count // 20)
    for j in dup:
        balls[int(rng.integers(0, count))] = balls[int(j)]
    return balls


def run_vitali(cfg):
    p = resolve(cfg)
    model = model_of(cfg)
    res = _new(cfg, "vitali", model.name, p)
    rng = stream_rng(cfg.seed, STREAMS["vitali"])
    t0 = time.perf_counter()
    rows = []
    ok = True
    for t in range(p["trials"]):
        balls = random_interval_balls(rng, p["balls"])
        sel = geometry.vitali_select(balls)
        dis, cov = geometry.verify_vitali(balls, sel)
        ok &= dis and cov
        rows.append(["random", t, len(balls), len(sel.accepted), dis, cov])
    # dynamical balls on an F-disk at Pliss times
    disk = calibration_disk(model, rng, p["disk_radius"])
    anchors = rng.uniform(-0.9, 0.9, p["anchors"]) * p["disk_radius"]
    masks = anchor_pliss_times(disk, anchors, 12, p["a_prime"])
    balls = []
    for s_x, row in zip(anchors, masks):
        times = np.flatnonzero(row)
        n = int(times[rng.integers(0, times.size)])
        b, hb, _ = geometry.dynamical_balls(disk, s_x, n, 0.03, samples=401)
        balls.append((b, hb))
    sel = geometry.vitali_select(balls)
    dis, cov = geometry.verify_vitali(balls, sel)
    ok &= dis and cov
    rows.append(["dynamical", 0, len(balls), len(sel.accepted), dis, cov])
    elapsed = time.perf_counter() - t0
    res.tables["vitali.csv"] = (["family", "run", "balls", "accepted", "disjoint", "covered"], rows)
    res.check("vitali", ok, runs=len(rows), seconds=elapsed)
    return res


# --------------------------------------------------------------------------
# bi-Pliss and the mean ergodic inequality
# --------------------------------------------------------------------------


def run_bipliss(cfg):
    p = resolve(cfg)
    res = _new(cfg, "bipliss", None, p)
    rng = stream_rng(cfg.seed, STREAMS["bipliss"])
    t0 = time.perf_counter()
    survey = pliss.bi_pliss_survey(rng, p["trials"], p["p_max"])
    t_bi = time.perf_counter() - t0
    t0 = time.perf_counter()
    me_fail = 0
    for _ in range(p["mean_trials"]):
        phi = rng.normal(size=int(rng.integers(1, p["mean_p_max"] + 1))) * rng.uniform(0.1, 3)
        if not pliss.mean_ergodic_check(phi).holds:
            me_fail += 1
    t_me = time.perf_counter() - t0
    # fast checkers against literal enumeration
    oracle_bad = 0
    for _ in range(p["oracle_trials"]):
        e, u, lg, ll = pliss.random_dominated_cycle(rng, p["p_max"])
        fast = pliss.bi_pliss_check(e, u, lg, ll)
        pF, pE = pliss.bi_pliss_bruteforce(e, u, lg)
        oracle_bad += (set(fast.pF) != set(pF)) or (set(fast.pE) != set(pE))
        phi = rng.normal(size=int(rng.integers(1, 9)))
        A, _ = pliss.positive_set_bruteforce(phi)
        oracle_bad += set(A) != set(pliss.mean_ergodic_check(phi).A)
    counter = pliss.find_bipliss_counterexample(rng, gamma_sq_above_lambda=False, p_max=p["p_max"])
    res.reports["bipliss.json"] = {"survey": survey, "counterexample_gamma_sq_below_lambda": counter,
                                   "mean_ergodic": {"trials": p["mean_trials"], "failures": me_fail}}
    rows = []
    for tag, ex in (("gamma_sq_above_lambda", survey.get("first_unequal")), ("gamma_sq_below_lambda", counter)):
        if ex:
            rows.append([tag, ex["log_gamma"], ex["log_lambda"], " ".join(repr(v) for v in ex["e"]),
                         " ".join(repr(v) for v in ex["u"]), " ".join(map(str, ex["pF"])), " ".join(map(str, ex["pE"]))])
    res.tables["bipliss_counterexamples.csv"] = (["hypothesis", "log_gamma", "log_lambda", "e", "u", "pF", "pE"], rows)
    res.check("checker_oracle", oracle_bad == 0, cases=2 * p["oracle_trials"], mismatches=int(oracle_bad))
    res.check("bi_pliss_equal", survey["unequal"] == 0, trials=survey["trials"], unequal=survey["unequal"],
              F_not_E=survey["F_not_E"], E_not_F=survey["E_not_F"], empty_intersection=survey["empty_intersection"],
              seconds=t_bi)
    res.check("mean_ergodic", me_fail == 0, trials=p["mean_trials"], failures=me_fail, seconds=t_me)
    return res


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

RUNNERS = {
    "lyapunov": run_lyapunov,
    "chi-min": run_chi_min,
    "pliss": run_pliss,
    "folner": run_folner,
    "gibbs": run_gibbs,
    "entropy": run_entropy,
    "density": run_density,
    "bipliss": run_bipliss,
    "appendix": run_appendix,
    "distortion": run_distortion,
    "vitali": run_vitali,
}

# (experiment, model) pairs covered by ``all``
ALL_PLAN = (
    ("pliss", None),
    ("lyapunov", "cat2"),
    ("lyapunov", "solenoid"),
    ("chi-min", "cat2"),
    ("chi-min", "da2"),
    ("appendix", "cat2"),
    ("appendix", "solenoid"),
    ("folner", "da2"),
    ("gibbs", "cat2"),
    ("gibbs", "da2"),
    ("entropy", "cat2"),
    ("entropy", "solenoid"),
    ("distortion", "cat2"),
    ("distortion", "solenoid"),
    ("distortion", "da2"),
    ("bipliss", None),
    ("vitali", "cat2"),
    ("density", "da2"),
)


def run(cfg):
    """Run one experiment (or the ``all`` plan); returns a list of results."""
    if cfg.experiment != "all":
        return [RUNNERS[cfg.experiment](cfg)]
    out = []
    for exp, model in ALL_PLAN:
        if cfg.model is not None and model is not None and model != cfg.model:
            continue
        sub = ExperimentConfig(exp, model, dict(cfg.model_params) if model == cfg.model else {},
                               cfg.seed, cfg.out, cfg.jobs, cfg.self_test, _applicable(exp, cfg.params))
        out.append(RUNNERS[exp](sub))
    return out


def _applicable(exp, params):
    keep = set(DEFAULTS.get(exp, {})) | {"a", "a_prime", "a_pp", "epsilon", "resolution", "block_max", "gamma", "n"}
    return {k: v for k, v in params.items() if k in keep}
