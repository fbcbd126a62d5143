"""Measurements behind the a priori estimates, and their epsilon-scaling fits.

Every fit is an ordinary least-squares line in the model's linearizing
coordinates; ``r_squared`` is computed in those coordinates too.  Random
probe data is sampled, so reported maxima are lower bounds for the
suprema appearing in the estimates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import Trajectory, apply_H_epsilon, linear_trajectory
from .noise import (
    GaugeData,
    MollifierSpec,
    NoiseRealization,
    build_gauge_data,
    check_resolution,
    sample_noise,
    MIN_EPS_N,
)
from .spectral import (
    GridField,
    _laplacian_symbol,
    dyadic_scales,
    lp_block,
    lp_norm,
    random_bandlimited,
    sobolev_norm,
    spacetime_norm,
)

__all__ = [
    "MODELS",
    "ScalingFit",
    "fit_scaling",
    "h2_growth_fit",
    "StochasticBoundReport",
    "stochastic_bound_report",
    "solution_bound_report",
    "StrichartzReport",
    "strichartz_probe",
    "dispersive_norm_report",
    "perturbation_probe",
    "DEFAULT_DELTA",
]

DEFAULT_DELTA = 0.05
MODELS = ("poly_log", "poly_log_squared", "power_law", "log_linear")


@dataclass
class ScalingFit:
    """Least-squares fit of measured values against epsilon.

    ``poly_log``/``poly_log_squared``: ``value = c |log eps|^a`` (the names
    record the expected exponent, 1 or 2); ``power_law``: ``value = c eps^a``;
    ``log_linear``: ``value = c + a log(1/eps)``.
    """

    epsilons: list[float]
    values: list[float]
    model: str
    fitted_constant: float
    fitted_exponent: float
    r_squared: float

    def to_dict(self) -> dict:
        return asdict(self)


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    if ss_tot <= 1e-28 * max(1.0, float(np.sum(y**2))):
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y**2))) else 0.0
    else:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    return float(slope), float(icept), r2


def fit_scaling(epsilons: Sequence[float], values: Sequence[float], model: str = "poly_log") -> ScalingFit:
    eps = np.asarray(epsilons, dtype=float)
    vals = np.asarray(values, dtype=float)
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    if eps.size != vals.size or eps.size < 2:
        raise ValueError("need at least two (epsilon, value) pairs of equal length")
    if np.any(eps <= 0) or np.any(eps >= 1):
        raise ValueError("epsilons must lie in (0, 1)")
    L = np.log(1.0 / eps)
    if model == "log_linear":
        a, c, r2 = _linfit(L, vals)
        return ScalingFit(eps.tolist(), vals.tolist(), model, c, a, r2)
    if np.any(vals <= 0):
        return ScalingFit(eps.tolist(), vals.tolist(), model, math.nan, math.nan, math.nan)
    x = np.log(L) if model != "power_law" else np.log(eps)
    a, lc, r2 = _linfit(x, np.log(vals))
    return ScalingFit(eps.tolist(), vals.tolist(), model, math.exp(lc), a, r2)


def h2_growth_fit(epsilons: Sequence[float], sup_h2: Sequence[float]) -> ScalingFit:
    """Fit ``sup_t ||v_eps||_{H^2} = c |log eps|^a``; needs four or more points."""
    if len(epsilons) < 4:
        raise ValueError("h2 growth fit needs at least four epsilon values")
    return fit_scaling(epsilons, sup_h2, "poly_log")


# ------------------------------------------------------------ stochastic bounds


@dataclass
class StochasticBoundReport:
    seed: int
    N: int
    rows: list[dict] = field(default_factory=list)
    fits: dict[str, ScalingFit] = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.rows])


def _grad_modulus(g: GaugeData) -> GridField:
    return GridField(np.hypot(g.grad_Y[0].values, g.grad_Y[1].values), copy=False)


def stochastic_bound_report(seed: int, eps_grid: Sequence[float], p_list: Sequence[float] = (4.0,),
                            N: int = 256, amplitude: float = 1.0,
                            noise: NoiseRealization | None = None,
                            min_eps_n: float = MIN_EPS_N) -> StochasticBoundReport:
    """Per-epsilon ``||Y_eps||_inf``, ``||grad Y_eps||_p``, ``||:|grad Y_eps|^2:||_p`` and ``C_eps``.

    Fits: sup-norm of Y against a constant (power law, exponent near 0),
    gradient norms against ``|log eps|``, Wick norms against ``|log eps|^2``,
    and ``C_eps`` linearly in ``log(1/eps)``.
    """
    for eps in eps_grid:
        if eps <= 0:
            raise ValueError("eps_grid must hold positive values")
        check_resolution(eps, N, min_eps_n)
    if noise is None:
        noise = sample_noise(seed, N // 2 - 1)
    report = StochasticBoundReport(seed, N)
    for eps in eps_grid:
        g = build_gauge_data(noise, MollifierSpec(eps), N, amplitude)
        grad = _grad_modulus(g)
        row = {"epsilon": eps, "Y_Linf": lp_norm(g.Y, np.inf), "C_eps": g.C_eps,
               "grad_L2_sq": float(np.mean(grad.values**2))}
        for p in p_list:
            row[f"grad_L{p:g}"] = lp_norm(grad, p)
            row[f"wick_L{p:g}"] = lp_norm(g.wick_square, p)
        report.rows.append(row)
    eps = list(eps_grid)
    report.fits["Y_Linf"] = fit_scaling(eps, report.column("Y_Linf"), "power_law")
    report.fits["C_eps"] = fit_scaling(eps, report.column("C_eps"), "log_linear")
    for p in p_list:
        report.fits[f"grad_L{p:g}"] = fit_scaling(eps, report.column(f"grad_L{p:g}"), "poly_log")
        report.fits[f"wick_L{p:g}"] = fit_scaling(eps, report.column(f"wick_L{p:g}"), "poly_log_squared")
    return report


# -------------------------------------------------------------- solution bounds


def solution_bound_report(traj: Trajectory, gauge: GaugeData, delta: float = DEFAULT_DELTA) -> dict:
    """Suprema over stored frames of ``H^1``, ``H^{1+delta}``, ``H^2`` and ``||e^{-Y} Lap v||_2``.

    ``ellreg_ratio`` is ``sup H^2 / (1 + sup ||e^{-Y} Lap v||_2)``, which the
    elliptic-regularity estimate keeps bounded uniformly in epsilon.
    """
    if traj.which_variable != "v_gauged":
        raise ValueError("solution bounds are defined for gauged trajectories")
    eYm = np.exp(-gauge.Y.values)
    lap = _laplacian_symbol(gauge.N)
    h1 = h1d = h2 = ell = 0.0
    for v in traj.frames:
        h1 = max(h1, sobolev_norm(v, 1.0))
        h1d = max(h1d, sobolev_norm(v, 1.0 + delta))
        h2 = max(h2, sobolev_norm(v, 2.0))
        lap_v = GridField.from_coeffs(-lap * v.coeffs)
        ell = max(ell, lp_norm(GridField(eYm * lap_v.values, copy=False), 2))
    return {"sup_H1": h1, f"sup_H{1 + delta:g}": h1d, "sup_H2": h2,
            "sup_weighted_lap_L2": ell, "ellreg_ratio": h2 / (1.0 + ell)}


# ------------------------------------------------------------------ Strichartz


@dataclass
class StrichartzReport:
    r: float
    q: float
    delta: float
    T: float
    epsilons: list[float]
    max_ratios: list[float]
    ratios: list[list[float]]
    fit: ScalingFit | None


def probe_data(N: int, sample_count: int, sobolev_index: float, seed: int,
               decay: float = 1.0) -> list[GridField]:
    """Random fields plus their Littlewood-Paley pieces, each normalized in ``H^{sobolev_index}``.

    Per-sample generators are seeded ``seed + index``.
    """
    out = []
    for i in range(sample_count):
        phi = random_bandlimited(N, np.random.default_rng(seed + i), decay=decay)
        pieces = [phi] + [lp_block(phi, M) for M in dyadic_scales(N)]
        for f in pieces:
            nrm = sobolev_norm(f, sobolev_index)
            if nrm > 1e-12:
                out.append(GridField(f.values / nrm, copy=False))
    return out


def strichartz_probe(gauges: Sequence[GaugeData], sample_count: int = 2, rq: tuple[float, float] = (4.0, 4.0),
                     delta: float = DEFAULT_DELTA, T: float = 1.0, dt: float = 5e-4,
                     frames: int = 64, seed: int = 0, data: Sequence[GridField] | None = None
                     ) -> StrichartzReport:
    """``max ||S_eps(t) phi||_{L^r L^q} / ||phi||_{H^{1/r + delta}}`` per gauge.

    One gauge per epsilon (the gauge's own ``epsilon`` labels the row).
    The ``|log eps|`` power fit is returned when two or more positive
    epsilons are probed.
    """
    r, q = rq
    if not (2 < r < np.inf and 2 < q < np.inf and abs(2 / r + 2 / q - 1) < 1e-12):
        raise ValueError(f"(r, q) = {rq} is not Strichartz-admissible")
    if not gauges:
        raise ValueError("need at least one gauge")
    s = 1.0 / r + delta
    if data is None:
        data = probe_data(gauges[0].N, sample_count, s, seed)
    all_ratios, maxima = [], []
    for g in gauges:
        row = []
        for phi in data:
            traj = linear_trajectory(phi, T, g, dt, frames=frames)
            row.append(spacetime_norm(traj, r, q) / sobolev_norm(phi, s))
        all_ratios.append(row)
        maxima.append(max(row))
    eps = [g.epsilon for g in gauges]
    fit = None
    if sum(e > 0 for e in eps) >= 2 and all(0 < e < 1 for e in eps):
        fit = fit_scaling(eps, maxima, "poly_log")
    return StrichartzReport(r, q, delta, T, eps, maxima, all_ratios, fit)


# --------------------------------------------------------------- dispersive


def dispersive_norm_report(traj: Trajectory, delta: float = DEFAULT_DELTA, min_frames: int = 50) -> dict:
    """``A = ||v||_{L^4 W^{3/4-delta,4}}``, ``B^2 = ||v||^2_{L^2 W^{1,4}}`` and their H^2 exponents.

    The exponents solve ``A = (sup H^2)^a`` and ``B^2 = (sup H^2)^b``; they
    are NaN unless ``sup H^2 > 1``.
    """
    if traj.which_variable != "v_gauged":
        raise ValueError("dispersive norms are defined for gauged trajectories")
    if len(traj.frames) < min_frames:
        raise ValueError(f"need at least {min_frames} frames, got {len(traj.frames)}")
    A = spacetime_norm(traj, 4.0, 4.0, 0.75 - delta)
    B = spacetime_norm(traj, 2.0, 4.0, 1.0)
    h2 = max(sobolev_norm(v, 2.0) for v in traj.frames)
    if h2 > 1:
        a = math.log(A) / math.log(h2)
        b = math.log(B * B) / math.log(h2)
    else:
        a = b = math.nan
    return {"A": A, "B_sq": B * B, "sup_H2": h2, "a": a, "b": b}


# ------------------------------------------------------------- perturbation


def perturbation_probe(gauges: Sequence[GaugeData], sample_count: int = 100, delta: float = DEFAULT_DELTA,
                       seed: int = 0, decay: float = 1.0) -> tuple[list[float], ScalingFit]:
    """Max over random fields of ``||(H_eps - Lap) u||_2 / ||u||_{H^{1+delta}}`` per gauge."""
    N = gauges[0].N
    data = [random_bandlimited(N, np.random.default_rng(seed + i), decay=decay) for i in range(sample_count)]
    lap = _laplacian_symbol(N)
    maxima = []
    for g in gauges:
        best = 0.0
        for u in data:
            Hu = apply_H_epsilon(u, g)
            pert = GridField.from_coeffs(Hu.coeffs + lap * u.coeffs)
            best = max(best, lp_norm(pert, 2) / sobolev_norm(u, 1.0 + delta))
        maxima.append(best)
    return maxima, fit_scaling([g.epsilon for g in gauges], maxima, "poly_log")
