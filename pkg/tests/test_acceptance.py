"""One test per acceptance criterion, at the stated tolerances."""

import csv
import math

import numpy as np
import pytest

from hmc_lab import coupling as cp
from hmc_lab import diagnostics as diag
from hmc_lab import dynamics as dyn
from hmc_lab import experiments as ex
from hmc_lab import potentials as pots
from hmc_lab import samplers as smp
from hmc_lab.config import parse_config
from hmc_lab.diagnostics import GaussianSpec
from hmc_lab.dynamics import Integrator, PhasePoint, Scheme

COEFFS = (0.5, 0.8, 1.0, 1.5, 2.0)
X0_DIAG = (3.0, -3.0, 3.0, -3.0, 3.0)


def couple_text(potential, T, k, x0, seed=0, epsilon=None):
    lines = ["[experiment]", "experiment = couple",
             f"x0 = {', '.join(repr(float(v)) for v in x0)}"]
    if epsilon is not None:
        lines.append(f"epsilon = {epsilon!r}")
    lines += ["", "[potential]", *potential, "", "[sampler]",
              "sampler = idealized_hmc", f"T = {T!r}", f"k = {k}", f"seed = {seed}"]
    return "\n".join(lines) + "\n"


SPHERE10 = ["kind = spherical", "dim = 10"]
DIAG5 = ["kind = diagonal", "dim = 5",
         f"coefficients = {', '.join(map(str, COEFFS))}"]
T_STAR_DIAG = cp.predicted_contraction_gamma(1.0, 4.0)[0]
T_TOP = math.pi / (2 * math.sqrt(2 * max(COEFFS)))

# criteria 2-4 as CLI configurations; criterion 11 reruns them
RUNS = {
    "c2": couple_text(SPHERE10, math.pi / 2, 1, np.linspace(-3, 3, 10), seed=2),
    "c3_T0.2": couple_text(DIAG5, 0.2, 1, X0_DIAG, seed=3),
    "c3_T0.5": couple_text(DIAG5, 0.5, 1, X0_DIAG, seed=3),
    "c3_Ttop": couple_text(DIAG5, T_TOP, 1, X0_DIAG, seed=3),
    "c4": couple_text(DIAG5, T_STAR_DIAG, 2000, X0_DIAG, seed=4, epsilon=1e-3),
}


def run_all(root):
    reports = {}
    for name, text in RUNS.items():
        reports[name] = ex.run_experiment(parse_config(text), root / name)
    return reports


def coupled_csv(path):
    with open(path / "coupled.csv", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return np.array([[float(v) for v in r] for r in rows])


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    run_all(root)
    return root


def test_c01_conservation(record):
    rng = np.random.default_rng(1)
    targets = {"spherical": pots.spherical(3),
               "diagonal": pots.diagonal([0.5, 1.0, 2.0])}
    worst = dict(exact_drift=0.0, exact_det=0.0, exact_rev=0.0,
                 lf_det=0.0, lf_rev=0.0)
    exact = Integrator(Scheme.EXACT)
    for p in targets.values():
        for T in (0.1, 1.0, 10.0):
            for _ in range(5):
                z0 = PhasePoint(rng.standard_normal(3), rng.standard_normal(3))
                worst["exact_drift"] = max(worst["exact_drift"],
                                           diag.energy_drift(p, exact, z0, T))
                worst["exact_det"] = max(worst["exact_det"], abs(
                    dyn.jacobian_det_estimate(p, exact, z0, T) - 1))
                worst["exact_rev"] = max(worst["exact_rev"],
                                         dyn.reversibility_defect(p, exact, z0, T))
                for eta in (T / 10, T / 40):
                    lf = Integrator(Scheme.LEAPFROG, eta)
                    worst["lf_det"] = max(worst["lf_det"], abs(
                        dyn.jacobian_det_estimate(p, lf, z0, T) - 1))
                    worst["lf_rev"] = max(worst["lf_rev"],
                                          dyn.reversibility_defect(p, lf, z0, T))
    ok = (worst["exact_drift"] <= 1e-9 and worst["exact_det"] <= 1e-6
          and worst["exact_rev"] <= 1e-10 and worst["lf_det"] <= 1e-5
          and worst["lf_rev"] <= 1e-9)
    detail = ", ".join(f"{k}={v:.2e}" for k, v in worst.items())
    assert record(1, ok, f"conservation suite ({detail})")


def test_c02_spherical_coalescence(runs, record):
    table = coupled_csv(runs / "c2")
    d1 = table[1, 2]
    ok = table[0, 2] > 1 and d1 <= 1e-10
    assert record(2, ok, f"d = 10, T = pi/2: distance after one step {d1:.2e}")


def test_c03_cosine_law(runs, record):
    errs, top = [], None
    for name, T in (("c3_T0.2", 0.2), ("c3_T0.5", 0.5), ("c3_Ttop", T_TOP)):
        gaps = coupled_csv(runs / name)[:, 3:]
        ratio = gaps[1] / gaps[0]
        predicted = np.abs(np.cos(np.sqrt(2 * np.array(COEFFS)) * T))
        errs.append(np.max(np.abs(ratio - predicted)))
        if name == "c3_Ttop":
            top = gaps[1, int(np.argmax(COEFFS))]
    ok = max(errs) <= 1e-8 and top <= 1e-10
    assert record(3, ok, f"max ratio error {max(errs):.2e}, "
                         f"stiffest-coordinate gap at T = {T_TOP:.6f}: {top:.2e}")


def test_c04_quadratic_rate(runs, record):
    m, M = 1.0, 4.0
    T, gamma = cp.predicted_contraction_gamma(m, M)
    assert pots.convexity_bounds(pots.diagonal(COEFFS)) == (m, M)
    dist = coupled_csv(runs / "c4")[:, 2]
    # step ratios below 1e-10 are rounding noise
    live = dist[:-1] > 1e-10
    sq_factor = np.max((dist[1:][live] / dist[:-1][live]) ** 2)
    slope = cp.contraction_fit(dist[:201])
    hit = cp.steps_to_epsilon(cp.CoupledTrace(dist, None, None), 1e-3)
    budget = cp.step_budget(m, M, dist[0], 1e-3)
    ok = (abs(T - 0.1767767) <= 1e-7 and sq_factor <= 1 - gamma + 0.05
          and slope < 0 and hit is not None and hit <= budget)
    assert record(4, ok, f"T* = {T:.7f}, worst squared factor {sq_factor:.5f} "
                         f"(bound {1 - gamma + 0.05:.5f}), slope {slope:.4f}, "
                         f"steps to 1e-3 {hit} <= {budget}")


def test_c05_perturbed_rate(record):
    p = pots.perturbed(np.linspace(1, 2, 5), 1.0)
    m, M = pots.convexity_bounds(p)
    T, gamma = cp.predicted_contraction_gamma(m, M)
    cfg = smp.SamplerConfig("idealized_hmc", k=300, seed=5, T=T)
    traces = cp.coupled_runs(p, cfg, np.full(5, 3.0), range(50))
    slopes = [cp.contraction_fit(t) for t in traces]
    bound_ok, worst_factor = True, 0.0
    for t in traces:
        d = t.distances
        live = d[:-1] > 1e-10
        worst_factor = max(worst_factor, np.max((d[1:][live] / d[:-1][live]) ** 2))
        hit = cp.steps_to_epsilon(t, 1e-3)
        bound_ok &= hit is not None and hit <= cp.step_budget(m, M, d[0], 1e-3)
    ok = ((m, M) == (1.0, 2.25) and np.mean(slopes) < 0 and bound_ok
          and worst_factor <= 1 - gamma + 0.05)
    assert record(5, ok, f"mean slope over 50 reps {np.mean(slopes):.4f}, "
                         f"worst squared factor {worst_factor:.4f}, "
                         f"steps-to-epsilon within budget: {bound_ok}")


def test_c06_stationarity(record):
    d, n = 4, 10_000
    p = pots.spherical(d)
    x0 = pots.sample_target(p, smp.make_rng(6, cp.START_STREAM), size=n)
    traj = smp.run_ensemble(p, smp.SamplerConfig("idealized_hmc", k=20, seed=6, T=1.0), x0)
    target = GaussianSpec.standard(d)
    worst_mean, worst_var, worst_w2 = 0.0, 0.0, 0.0
    for xk in [x0, *traj]:
        fit = diag.empirical_moments(xk)
        worst_mean = max(worst_mean, np.max(np.abs(fit.mean)))
        worst_var = max(worst_var, np.max(np.abs(np.diag(fit.covariance) - 1)))
        worst_w2 = max(worst_w2, diag.w2_gaussian(fit, target))
    ok = worst_mean <= 0.04 and worst_var <= 0.06 and worst_w2 <= 0.05
    assert record(6, ok, f"worst |mean| {worst_mean:.4f}, worst |var - 1| "
                         f"{worst_var:.4f}, worst W2 {worst_w2:.4f}")


def test_c07_convergence_from_point(record):
    p = pots.spherical(4)
    T, _ = cp.predicted_contraction_gamma(1.0, 1.0)
    w2 = ex.convergence_curve(p, smp.SamplerConfig("idealized_hmc", k=25, seed=7, T=T),
                              np.zeros(4), 10_000)
    rise = float(np.max(np.diff(w2)))
    # checked over every k <= 25, including the sampling-noise floor
    below = np.flatnonzero(w2 < 0.1)
    ok = rise <= 0.01 and below.size > 0 and below[0] <= 25
    first = int(below[0]) if below.size else None
    assert record(7, ok, f"W2 {w2[0]:.3f} -> {w2[-1]:.4f}, largest rise {rise:.4f}, "
                         f"first k below 0.1: {first}")


def test_c08_integrator_order(record):
    etas = (0.2, 0.1, 0.05, 0.025)
    orders = {}
    targets = {"spherical": pots.spherical(2), "diagonal": pots.diagonal(COEFFS)}
    for name, p in targets.items():
        z0 = PhasePoint(np.linspace(0.5, 1.5, p.dim), np.zeros(p.dim))
        for scheme in (Scheme.LEAPFROG, Scheme.EULER2):
            pairs = [(eta, diag.energy_drift(p, Integrator(scheme, eta), z0, 1.0))
                     for eta in etas]
            orders[f"{scheme.value}/{name}"] = diag.order_estimate(pairs)
    p = targets["diagonal"]
    rng = np.random.default_rng(8)
    x, xi = rng.standard_normal((2, 500, 5))
    exact = smp.idealized_hmc_move(p, x, xi, 1.0)
    errs = [np.abs(smp.unadjusted_hmc_move(p, x, xi, 1.0, eta) - exact).max()
            for eta in etas]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    ok = (all(1.8 <= o <= 2.2 for o in orders.values())
          and all(3.5 <= r <= 4.5 for r in ratios))
    detail = ", ".join(f"{k} {v:.3f}" for k, v in orders.items())
    assert record(8, ok, f"drift orders: {detail}; UHMC error ratios "
                         f"{', '.join(f'{r:.3f}' for r in ratios)}")


def test_c09_unadjusted_bias(record):
    p = pots.spherical(2)
    n, k, burn = 4000, 400, 50
    x0 = pots.sample_target(p, smp.make_rng(9, cp.START_STREAM), size=n)
    target = GaussianSpec.standard(2)
    w2 = []
    for eta in (0.2, 0.05, 0.0125):
        cfg = smp.SamplerConfig("unadjusted_hmc", k=k, seed=9, T=1.0, eta=eta)
        traj = smp.run_ensemble(p, cfg, x0)
        w2.append(diag.w2_to_target(traj[burn:].reshape(-1, 2), target))
    ok = all(a > b - 0.005 for a, b in zip(w2, w2[1:]))
    assert record(9, ok, "long-run W2 at eta 0.2, 0.05, 0.0125: "
                         + ", ".join(f"{w:.5f}" for w in w2))


def test_c10_baselines(record):
    d = 100
    p = pots.spherical(d)
    x0 = pots.sample_target(p, smp.make_rng(10, cp.START_STREAM), size=20)
    cfg = smp.SamplerConfig("rwm", k=500, seed=10, eta=1 / math.sqrt(d))
    _, acc = smp.run_ensemble(p, cfg, x0, return_acceptance=True)
    rate = float(acc.mean())
    p1 = pots.spherical(1)
    x1 = pots.sample_target(p1, smp.make_rng(11, cp.START_STREAM), size=1000)
    ula = smp.run_ensemble(p1, smp.SamplerConfig("ula", k=3000, seed=11, eta=0.01), x1)
    var = float(ula[500:].var())
    ok = 0.1 < rate < 0.9 and 0.97 <= var <= 1.05
    assert record(10, ok, f"RWM acceptance (d = 100) {rate:.3f}, ULA variance {var:.4f}")


def test_c11_determinism(runs, tmp_path, record):
    run_all(tmp_path)
    mismatched = []
    for name in RUNS:
        for fname in ("coupled.csv", "summary.csv"):
            if (runs / name / fname).read_bytes() != (tmp_path / name / fname).read_bytes():
                mismatched.append(f"{name}/{fname}")
    ok = not mismatched
    assert record(11, ok, f"reran criteria 2-4 ({len(RUNS)} configs): "
                          + ("byte-identical CSVs" if ok else ", ".join(mismatched)))
