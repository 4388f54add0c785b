"""Run configured experiments and write their CSV artifacts.

CSV files (numbers written with 17 significant digits):

``trajectory.csv``
    ``chain_id, step, x_0 .. x_{d-1}`` for steps ``1 .. k`` (sample).
``coupled.csv``
    ``rep, step, distance, gap_0 .. gap_{d-1}`` for steps ``0 .. k`` (couple),
    where ``gap_j = |X_k[j] - Y_k[j]|``.
``integrate_check.csv``
    ``rep, energy_drift, jacobian_det, reversibility_defect``.
``convergence.csv``
    ``step, w2`` for steps ``0 .. k``.
``summary.csv``
    ``metric, value`` for every experiment.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import coupling, diagnostics, dynamics, samplers
from . import potentials as pots
from .config import ExperimentConfig, Expectation
from .diagnostics import GaussianSpec
from .dynamics import Integrator, PhasePoint, Scheme
from .samplers import SamplerConfig, SamplerKind

OUTPUT_DIR_ENV = "HMC_LAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "hmc_lab_runs"

OUTPUT_FILES = {
    "sample": ("trajectory.csv", "summary.csv"),
    "couple": ("coupled.csv", "summary.csv"),
    "integrate-check": ("integrate_check.csv", "summary.csv"),
    "convergence": ("convergence.csv", "summary.csv"),
}


class OutputExistsError(FileExistsError):
    """Raised instead of overwriting earlier results."""


@dataclass
class ExitReport:
    """Outcome of one experiment run.

    ``checks`` holds ``(expectation, observed value, passed)`` in the order
    the expectations were configured.
    """

    experiment: str
    metrics: dict[str, float]
    checks: list[tuple[Expectation, float, bool]] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)

    @property
    def status(self) -> int:
        return 0 if all(ok for _, _, ok in self.checks) else 1

    def lines(self) -> list[str]:
        out = [f"{name} = {fmt(v)}" for name, v in self.metrics.items()]
        for exp, value, ok in self.checks:
            tag = "PASS" if ok else "FAIL"
            out.append(f"{tag} {exp} (observed {fmt(value)})")
        return out


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def build_potential(cfg: ExperimentConfig) -> pots.Potential:
    spec = cfg.potential
    kind = pots.PotentialKind(spec.kind)
    if kind is pots.PotentialKind.SPHERICAL:
        return pots.spherical(spec.dim)
    if kind is pots.PotentialKind.DIAGONAL:
        return pots.diagonal(spec.coefficients)
    if kind is pots.PotentialKind.DENSE:
        return pots.dense(spec.spectrum, spec.spectrum_seed or 0)
    return pots.perturbed(np.asarray(spec.spectrum), spec.perturbation)


def build_sampler(cfg: ExperimentConfig) -> SamplerConfig:
    s = cfg.sampler
    return SamplerConfig(SamplerKind(s.sampler), k=s.k, seed=s.seed, T=s.T,
                         eta=s.eta)


def target_gaussian(p: pots.Potential) -> GaussianSpec:
    return GaussianSpec(np.zeros(p.dim), pots.covariance(p))


def resolve_output_dir(cfg: ExperimentConfig,
                       override: str | os.PathLike | None = None) -> Path:
    """Command-line override, then config, then ``$HMC_LAB_OUTPUT_DIR``."""
    for candidate in (override, cfg.output_dir,
                      os.environ.get(OUTPUT_DIR_ENV)):
        if candidate:
            return Path(candidate)
    return Path(DEFAULT_OUTPUT_DIR)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _start(cfg: ExperimentConfig, p: pots.Potential) -> np.ndarray:
    return np.zeros(p.dim) if cfg.x0 is None else np.asarray(cfg.x0, float)


def _run_sample(cfg, p, out: Path):
    scfg = build_sampler(cfg)
    x0s = np.tile(_start(cfg, p), (cfg.repetitions, 1))
    traj, accepted = samplers.run_ensemble(p, scfg, x0s,
                                           return_acceptance=True)
    k, n, d = traj.shape
    rows = ([c, i + 1, *traj[i, c]] for c in range(n) for i in range(k))
    _write_csv(out / "trajectory.csv",
               ["chain_id", "step", *[f"x_{j}" for j in range(d)]], rows)
    metrics = {}
    if scfg.sampler is SamplerKind.RWM and k:
        metrics["acceptance_rate"] = float(accepted.mean())
    kept = traj[cfg.burn_in:].reshape(-1, d)
    if kept.shape[0] >= 2:
        fit = diagnostics.empirical_moments(kept)
        var = np.diag(fit.full_covariance())
        metrics["max_abs_mean"] = float(np.max(np.abs(fit.mean)))
        metrics["min_variance"] = float(var.min())
        metrics["max_variance"] = float(var.max())
        if p.is_quadratic:
            metrics["w2_moment_fit"] = diagnostics.w2_gaussian(
                fit, target_gaussian(p))
    return metrics


def _run_couple(cfg, p, out: Path):
    scfg = build_sampler(cfg)
    y0_seed = scfg.seed if cfg.y0_seed is None else cfg.y0_seed
    seeds = [y0_seed + r for r in range(cfg.repetitions)]
    traces = coupling.coupled_runs(p, scfg, _start(cfg, p), seeds)
    d = p.dim
    rows = ([r, i, t.distances[i], *t.per_coordinate[i]]
            for r, t in enumerate(traces) for i in range(t.steps + 1))
    _write_csv(out / "coupled.csv",
               ["rep", "step", "distance", *[f"gap_{j}" for j in range(d)]],
               rows)
    dist = np.stack([t.distances for t in traces])
    metrics = {"initial_distance": float(dist[:, 0].max())}
    if scfg.k >= 1:
        metrics["distance_step_1"] = float(dist[:, 1].max())
    metrics["final_distance"] = float(dist[:, -1].max())
    slopes = []
    for t in traces:
        try:
            slopes.append(coupling.contraction_fit(t))
        except coupling.UndefinedFitError:
            pass
    if slopes:
        metrics["contraction_slope"] = float(np.mean(slopes))
    if cfg.epsilon is not None:
        hits = [coupling.steps_to_epsilon(t, cfg.epsilon) for t in traces]
        metrics["steps_to_epsilon"] = (math.inf if None in hits
                                       else max(hits))
    return metrics


def _run_integrate_check(cfg, p, out: Path):
    s = cfg.sampler
    integ = Integrator(Scheme(cfg.scheme), s.eta)
    rows = []
    for rep in range(cfg.repetitions):
        rng = samplers.make_rng(s.seed, rep)
        x = rng.standard_normal(p.dim) if cfg.x0 is None else cfg.x0
        v = rng.standard_normal(p.dim) if cfg.v0 is None else cfg.v0
        z0 = PhasePoint(x, v)
        rows.append([
            rep,
            diagnostics.energy_drift(p, integ, z0, s.T),
            dynamics.jacobian_det_estimate(p, integ, z0, s.T),
            dynamics.reversibility_defect(p, integ, z0, s.T),
        ])
    _write_csv(out / "integrate_check.csv",
               ["rep", "energy_drift", "jacobian_det", "reversibility_defect"],
               rows)
    arr = np.array(rows)
    return {
        "energy_drift": float(arr[:, 1].max()),
        "jacobian_det_min": float(arr[:, 2].min()),
        "jacobian_det_max": float(arr[:, 2].max()),
        "jacobian_det_error": float(np.abs(arr[:, 2] - 1.0).max()),
        "reversibility_defect": float(arr[:, 3].max()),
    }


def convergence_curve(p, scfg: SamplerConfig, x0, n_chains: int) -> np.ndarray:
    """``W2(moment fit of X_k, pi)`` for ``k = 0 .. scfg.k`` over a chain ensemble."""
    target = target_gaussian(p)
    x0s = np.tile(np.asarray(x0, dtype=float), (n_chains, 1))
    traj = samplers.run_ensemble(p, scfg, x0s)
    snapshots = [x0s, *traj]
    return np.array([diagnostics.w2_to_target(s, target) for s in snapshots])


def _run_convergence(cfg, p, out: Path):
    scfg = build_sampler(cfg)
    w2 = convergence_curve(p, scfg, _start(cfg, p), cfg.repetitions)
    _write_csv(out / "convergence.csv", ["step", "w2"], enumerate(w2))
    metrics = {"w2_initial": float(w2[0]), "w2_final": float(w2[-1]),
               "w2_min": float(w2.min())}
    if len(w2) > 1:
        metrics["max_increase"] = float(np.max(np.diff(w2)))
    end = len(w2)
    if cfg.epsilon is not None:
        below = np.flatnonzero(w2 < cfg.epsilon)
        metrics["steps_to_epsilon"] = int(below[0]) if below.size else math.inf
        if below.size:
            end = int(below[0]) + 1
    fit = w2[:end]
    fit = fit[fit > 0]
    if fit.size >= 2:
        metrics["decay_slope"] = float(
            np.polyfit(np.arange(fit.size), np.log(fit), 1)[0])
    return metrics


_RUNNERS = {
    "sample": _run_sample,
    "couple": _run_couple,
    "integrate-check": _run_integrate_check,
    "convergence": _run_convergence,
}


def run_experiment(cfg: ExperimentConfig,
                   output_dir: str | os.PathLike | None = None,
                   overwrite: bool | None = None,
                   seed: int | None = None) -> ExitReport:
    """Execute ``cfg``, write its CSV files and evaluate its expectations.

    Args:
        cfg: Validated configuration.
        output_dir: Overrides the configured output directory.
        overwrite: Overrides the configured overwrite flag.
        seed: Overrides the sampler seed.

    Raises:
        OutputExistsError: if an output file exists and overwriting is off.
    """
    if seed is not None:
        cfg = replace(cfg, sampler=replace(cfg.sampler, seed=seed))
    allow = cfg.overwrite if overwrite is None else overwrite
    out = resolve_output_dir(cfg, output_dir)
    files = [out / name for name in OUTPUT_FILES[cfg.experiment]]
    existing = [f for f in files if f.exists()]
    if existing and not allow:
        raise OutputExistsError(
            f"refusing to overwrite {', '.join(map(str, existing))}; "
            "pass --overwrite")
    out.mkdir(parents=True, exist_ok=True)

    p = build_potential(cfg)
    metrics = _RUNNERS[cfg.experiment](cfg, p, out)
    _write_csv(out / "summary.csv", ["metric", "value"], metrics.items())

    checks = []
    for exp in cfg.expectations:
        value = metrics.get(exp.metric, math.nan)
        checks.append((exp, value, exp.metric in metrics and exp.holds(value)))
    return ExitReport(cfg.experiment, metrics, checks, files)
