"""Epsilon-convergence studies and their Monte-Carlo aggregation.

For each seed the noise is drawn once on the grid lattice and shared by
every epsilon.  By default only modes with ``max|n_i| <= N/4 - 1`` are
kept: with noise reaching the grid edge, the two routes below differ by
aliasing at the top modes by more than the epsilon signal at N = 128.  The limit solution is the gauged run at ``eps = 0`` (the
grid cutoff is then the only regularization); each ``v_eps`` comes from
the physical split-step run pushed through the gauge transform, so the
two routes are independent.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .diagnostics import dispersive_norm_report, h2_growth_fit, solution_bound_report
from .dynamics import (
    BlowUpError,
    SolverConfig,
    gauge_transform,
    solve_gauged,
    solve_physical,
    well_prepared_data,
)
from .noise import (
    MIN_EPS_N,
    GaugeData,
    MollifierSpec,
    NoiseRealization,
    build_gauge_data,
    check_resolution,
    sample_noise,
    zero_noise,
)
from .spectral import GridField, grid_points, lp_norm, sobolev_norm

log = logging.getLogger(__name__)

__all__ = [
    "StudyPlan",
    "StudyReport",
    "STUDIES",
    "make_datum",
    "default_band",
    "run_seed",
    "seed_runs",
    "epsilon_convergence_study",
    "modulus_convergence_study",
    "dispersive_study",
    "monte_carlo_sweep",
]

STUDIES = ("epsilon", "modulus", "dispersive")
DEFAULT_AMPLITUDE = 0.1


def default_band(N: int) -> int:
    """Noise band used by the studies unless the plan overrides it."""
    return max(1, N // 4 - 1)
DEFAULT_DATUM = ((1, 0, 1.0, 0.0), (0, -1, 0.5, 0.0))


def make_datum(N: int, modes=DEFAULT_DATUM) -> GridField:
    """Trigonometric polynomial ``sum a exp(i n.x)``; modes are ``(n1, n2, re a, im a)``."""
    x1, x2 = grid_points(N)
    vals = np.zeros((N, N), dtype=complex)
    for n1, n2, re, im in modes:
        vals += complex(re, im) * np.exp(1j * (n1 * x1 + n2 * x2))
    return GridField(vals, copy=False)


@dataclass(frozen=True)
class StudyPlan:
    base_seed: int = 0
    sample_count: int = 8
    eps_grid: tuple[float, ...] = (2.0**-3, 2.0**-4, 2.0**-5, 2.0**-6)
    gamma_list: tuple[float, ...] = (0.0, 0.5, 1.0, 1.9)
    p: float = 3.0
    # dealias off: the split-step route is unfiltered, so a filtered reference
    # would differ from it by a fixed amount that masks the epsilon signal
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(N=128, dt=1e-4, T=0.5, p=3.0,
                                                                      store_stride=50, dealias=False))
    datum: tuple[tuple[float, float, float, float], ...] = DEFAULT_DATUM
    noise_amplitude: float = DEFAULT_AMPLITUDE
    noise_band: int | None = None
    min_eps_n: float = MIN_EPS_N
    zero_noise: bool = False
    delta: float = 0.05

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_grid)
        object.__setattr__(self, "eps_grid", eps)
        object.__setattr__(self, "gamma_list", tuple(float(g) for g in self.gamma_list))
        object.__setattr__(self, "datum", tuple(tuple(m) for m in self.datum))
        if self.sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {self.sample_count}")
        if not eps or any(e <= 0 for e in eps):
            raise ValueError("eps_grid must be a nonempty list of positive values")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"eps_grid must be strictly decreasing, got {eps}")
        for e in eps:
            check_resolution(e, self.solver.N, self.min_eps_n)
        if any(not 0 <= g < 2 for g in self.gamma_list):
            raise ValueError(f"gamma_list must lie in [0, 2), got {self.gamma_list}")
        if self.p != self.solver.p:
            object.__setattr__(self, "solver", replace(self.solver, p=float(self.p)))
        if not self.noise_amplitude >= 0:
            raise ValueError("noise_amplitude must be nonnegative")
        band = default_band(self.solver.N) if self.noise_band is None else int(self.noise_band)
        if not 1 <= band <= self.solver.N // 2 - 1:
            raise ValueError(f"noise_band must lie in [1, N/2 - 1], got {band}")
        object.__setattr__(self, "noise_band", band)

    def seeds(self) -> list[int]:
        """Derived seeds: ``base_seed + index``."""
        return [self.base_seed + i for i in range(self.sample_count)]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        return d


@dataclass
class StudyReport:
    study: str
    plan: dict
    rows: list[dict] = field(default_factory=list)
    seed_meta: list[dict] = field(default_factory=list)
    aggregates: list[dict] = field(default_factory=list)
    checks: dict[str, bool] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    def table(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]


# ---------------------------------------------------------------- per seed


@dataclass
class SeedRuns:
    seed: int
    gauge0: GaugeData
    gauges: dict[float, GaugeData]
    reference: object
    physical: dict
    gauged: dict
    failures: list[dict]


def _amplitude(plan: StudyPlan) -> float:
    # the zero field has zero renormalization, so epsilon drops out entirely
    return 0.0 if plan.zero_noise else plan.noise_amplitude


def _noise_for(plan: StudyPlan, seed: int) -> NoiseRealization:
    K = plan.solver.N // 2 - 1
    return zero_noise(K, seed) if plan.zero_noise else sample_noise(seed, K)


def seed_runs(plan: StudyPlan, seed: int, noise: NoiseRealization | None = None) -> SeedRuns:
    """All solver runs for one seed: the eps=0 reference and one physical run per epsilon."""
    N = plan.solver.N
    noise = _noise_for(plan, seed) if noise is None else noise
    w = make_datum(N, plan.datum)
    gauge0 = build_gauge_data(noise, MollifierSpec(0.0), N, _amplitude(plan), plan.noise_band)
    failures = []
    cfg_g = replace(plan.solver, scheme="rk4_gauged", dealias=plan.solver.dealias)
    ref = solve_gauged(w, cfg_g, gauge0, raise_on_blowup=False)
    if ref.failure is not None:
        failures.append({"seed": seed, "epsilon": 0.0, "error": str(ref.failure),
                         "time_reached": ref.failure.time_reached})
    gauges, phys, gauged = {}, {}, {}
    cfg_p = replace(plan.solver, scheme="strang_physical", dealias=None)
    for eps in plan.eps_grid:
        g = build_gauge_data(noise, MollifierSpec(eps), N, _amplitude(plan), plan.noise_band)
        gauges[eps] = g
        u0 = well_prepared_data(w, gauge0, g)
        traj = solve_physical(u0, cfg_p, g.xi, raise_on_blowup=False)
        if traj.failure is not None:
            failures.append({"seed": seed, "epsilon": eps, "error": str(traj.failure),
                             "time_reached": traj.failure.time_reached})
        phys[eps] = traj
        gauged[eps] = gauge_transform(traj, g)
    return SeedRuns(seed, gauge0, gauges, ref, phys, gauged, failures)


def _sup_diff(frames_a, frames_b, gamma: float) -> float:
    n = min(len(frames_a), len(frames_b))
    return max(sobolev_norm(a - b, gamma) for a, b in zip(frames_a[:n], frames_b[:n]))


def _epsilon_rows(plan: StudyPlan, runs: SeedRuns) -> tuple[list[dict], dict]:
    rows = []
    ref = runs.reference.frames
    w = make_datum(plan.solver.N, plan.datum)
    eps = plan.eps_grid
    for e in eps:
        v = runs.gauged[e].frames
        init = sobolev_norm(v[0] - w, 2.0)
        for g in plan.gamma_list:
            rows.append({"seed": runs.seed, "epsilon": e, "epsilon_next": math.nan, "gamma": g,
                         "kind": "direct", "difference": _sup_diff(v, ref, g), "initial_H2": init})
    for e0, e1 in zip(eps, eps[1:]):
        for g in plan.gamma_list:
            rows.append({"seed": runs.seed, "epsilon": e0, "epsilon_next": e1, "gamma": g,
                         "kind": "cauchy",
                         "difference": _sup_diff(runs.gauged[e0].frames, runs.gauged[e1].frames, g),
                         "initial_H2": math.nan})
    meta = {"seed": runs.seed, "C_0": runs.gauge0.C_eps,
            "Y_Linf": lp_norm(runs.gauge0.Y, np.inf),
            "reference_frames": len(ref), "failures": len(runs.failures)}
    return rows, meta


def _modulus_rows(plan: StudyPlan, runs: SeedRuns) -> tuple[list[dict], dict]:
    rows = []
    eYm = np.exp(-runs.gauge0.Y.values)
    ref_mod = [GridField(eYm * np.abs(v.values), copy=False) for v in runs.reference.frames]
    w = make_datum(plan.solver.N, plan.datum)
    gammas = [g for g in plan.gamma_list if g < 1]
    for e in plan.eps_grid:
        u = runs.physical[e].frames
        n = min(len(u), len(ref_mod))
        diffs = [GridField(np.abs(a.values), copy=False) - b for a, b in zip(u[:n], ref_mod[:n])]
        anchor = GridField((np.exp(-runs.gauges[e].Y.values) - eYm) * np.abs(w.values), copy=False)
        for g in gammas:
            rows.append({
                "seed": runs.seed, "epsilon": e, "gamma": g,
                "sup_Hgamma": max(sobolev_norm(d, g) for d in diffs),
                "sup_Linf": max(lp_norm(d, np.inf) for d in diffs),
                "t0_Hgamma": sobolev_norm(diffs[0], g),
                "t0_anchor_Hgamma": sobolev_norm(anchor, g),
            })
    return rows, {"seed": runs.seed}


def _dispersive_rows(plan: StudyPlan, runs: SeedRuns) -> tuple[list[dict], dict]:
    rows = []
    for e in plan.eps_grid:
        traj = runs.gauged[e]
        rep = dispersive_norm_report(traj, plan.delta, min_frames=min(50, len(traj.frames)))
        bounds = solution_bound_report(traj, runs.gauges[e], plan.delta)
        rows.append({"seed": runs.seed, "epsilon": e, **rep,
                     "sup_H1": bounds["sup_H1"], "ellreg_ratio": bounds["ellreg_ratio"]})
    fit = h2_growth_fit(plan.eps_grid, [r["sup_H2"] for r in rows]) if len(rows) >= 4 else None
    meta = {"seed": runs.seed}
    if fit is not None:
        meta.update(h2_exponent=fit.fitted_exponent, h2_r_squared=fit.r_squared)
    return rows, meta


_ROW_BUILDERS = {"epsilon": _epsilon_rows, "modulus": _modulus_rows, "dispersive": _dispersive_rows}


def run_seed(plan: StudyPlan, seed: int, studies: Sequence[str] = STUDIES) -> dict:
    """Per-seed rows and metadata for each requested study, sharing one set of runs."""
    runs = seed_runs(plan, seed)
    out = {}
    for name in studies:
        rows, meta = _ROW_BUILDERS[name](plan, runs)
        out[name] = (rows, meta, runs.failures)
    return out


# -------------------------------------------------------------- aggregation


def _quantiles(values) -> dict:
    a = np.sort(np.asarray(values, dtype=float))
    return {"mean": float(np.mean(a)), "max": float(a[-1]), "min": float(a[0]),
            "q25": float(np.quantile(a, 0.25)), "median": float(np.quantile(a, 0.5)),
            "q75": float(np.quantile(a, 0.75)), "count": int(a.size)}


def _aggregate(study: str, rows: list[dict]) -> list[dict]:
    value_key = {"epsilon": "difference", "modulus": "sup_Hgamma", "dispersive": "b"}[study]
    keys = {"epsilon": ("kind", "epsilon", "gamma"), "modulus": ("epsilon", "gamma"),
            "dispersive": ("epsilon",)}[study]
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value_key])
    out = []
    for key in sorted(groups, key=lambda k: tuple(str(x) if isinstance(x, str) else -x for x in k)):
        out.append({**dict(zip(keys, key)), "quantity": value_key, **_quantiles(groups[key])})
    return out


def _strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def _checks(study: str, plan: StudyPlan, rows: list[dict], min_fraction: float = 7 / 8) -> dict[str, bool]:
    seeds = sorted({r["seed"] for r in rows})
    need = math.ceil(min_fraction * len(seeds) - 1e-9) if seeds else 0
    checks = {}
    if study == "epsilon":
        ok = 0
        for s in seeds:
            d = [r["difference"] for r in rows
                 if r["seed"] == s and r["kind"] == "direct" and r["gamma"] == 1.0]
            ok += bool(d) and _strictly_decreasing(d)
        checks["D_gamma1_decreasing"] = ok >= need
        checks["initial_frame_identity"] = all(r["initial_H2"] <= 1e-12 for r in rows if r["kind"] == "direct")
        direct = {(r["seed"], r["epsilon"], r["gamma"]): r["difference"] for r in rows if r["kind"] == "direct"}
        checks["cauchy_triangle"] = all(
            r["difference"] <= direct[(r["seed"], r["epsilon"], r["gamma"])]
            + direct[(r["seed"], r["epsilon_next"], r["gamma"])] + 1e-12
            for r in rows if r["kind"] == "cauchy")
    elif study == "modulus":
        ok = 0
        for s in seeds:
            d = [r["sup_Hgamma"] for r in rows if r["seed"] == s and r["gamma"] == 0.5]
            ok += bool(d) and _strictly_decreasing(d)
        checks["modulus_gamma05_decreasing"] = ok >= need
        checks["t0_anchor"] = all(abs(r["t0_Hgamma"] - r["t0_anchor_Hgamma"]) <= 1e-10 for r in rows)
    elif study == "dispersive":
        checks["b_below_one"] = all(r["b"] < 1 for r in rows if not math.isnan(r["b"]))
    return checks


def _assemble(study: str, plan: StudyPlan, per_seed: list[tuple[list, dict, list]]) -> StudyReport:
    report = StudyReport(study, plan.to_dict())
    for rows, meta, failures in sorted(per_seed, key=lambda x: x[1]["seed"]):
        report.rows.extend(rows)
        report.seed_meta.append(meta)
        report.failures.extend(failures)
    if report.rows:
        report.aggregates = _aggregate(study, report.rows)
    report.checks = _checks(study, plan, report.rows)
    if report.failures:
        report.checks["no_blowup"] = False
    return report


def _seed_job(args):
    plan, seed, studies = args
    try:
        return seed, run_seed(plan, seed, studies), None
    except (BlowUpError, FloatingPointError, ValueError) as err:
        return seed, None, str(err)


def monte_carlo_sweep(plan: StudyPlan, task: str | Sequence[str] = "epsilon", jobs: int = 1,
                      seeds: Sequence[int] | None = None) -> dict[str, StudyReport] | StudyReport:
    """Run studies for every derived seed and aggregate.

    Each seed runs single-threaded; ``jobs > 1`` spreads seeds over worker
    processes.  Results are ordered by seed before aggregation, so the
    report does not depend on scheduling.  A single task name returns one
    report; a sequence returns a dict keyed by task.
    """
    tasks = (task,) if isinstance(task, str) else tuple(task)
    for t in tasks:
        if t not in STUDIES:
            raise ValueError(f"unknown study {t!r}; expected one of {STUDIES}")
    seeds = plan.seeds() if seeds is None else list(seeds)
    args = [(plan, s, tasks) for s in seeds]
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_seed_job, args))
    else:
        results = [_seed_job(a) for a in args]
    reports = {}
    for t in tasks:
        per_seed = []
        for seed, res, err in results:
            if res is None:
                per_seed.append(([], {"seed": seed}, [{"seed": seed, "epsilon": math.nan, "error": err,
                                                       "time_reached": math.nan}]))
            else:
                per_seed.append(res[t])
        reports[t] = _assemble(t, plan, per_seed)
    return reports[tasks[0]] if isinstance(task, str) else reports


def epsilon_convergence_study(plan: StudyPlan, seed: int | None = None) -> StudyReport:
    """``D(eps, gamma) = max_k ||v_eps(t_k) - v(t_k)||_{H^gamma}`` plus consecutive Cauchy differences."""
    return monte_carlo_sweep(plan, "epsilon", seeds=[plan.base_seed if seed is None else seed])


def modulus_convergence_study(plan: StudyPlan, seed: int | None = None) -> StudyReport:
    """Sup over frames of ``|| |u_eps| - e^{-Y}|v| ||`` in ``H^gamma`` (gamma < 1) and L^inf."""
    return monte_carlo_sweep(plan, "modulus", seeds=[plan.base_seed if seed is None else seed])


def dispersive_study(plan: StudyPlan, seed: int | None = None) -> StudyReport:
    """Dispersive norms and the exponent ``b`` per epsilon for one seed."""
    return monte_carlo_sweep(plan, "dispersive", seeds=[plan.base_seed if seed is None else seed])
