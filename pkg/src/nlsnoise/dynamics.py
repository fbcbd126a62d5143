"""Time integrators for the regularized and the gauged equations.

Physical variable (sign convention ``i u_t = Lap u + xi_eps u - u|u|^p``)::

    u  --  Strang split step, both substeps exact

Gauged variable ``v = exp(+i C_eps t) exp(Y_eps) u``::

    i v_t = Lap v - 2 grad v . grad Y_eps + v :|grad Y_eps|^2: - exp(-p Y_eps) v |v|^p

integrated by classical RK4 in the interaction picture of ``exp(i|n|^2 t)``.
Both routes describe the same solution, which the test-suite exploits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .noise import GaugeData
from .spectral import (
    GridField,
    TimeSeriesNorms,
    _derivative_symbols,
    _laplacian_symbol,
    dealias_mask,
    from_coeffs,
    lp_norm,
    sobolev_norm,
    to_coeffs,
)

__all__ = [
    "SCHEMES",
    "SolverConfig",
    "Trajectory",
    "BlowUpError",
    "mass",
    "weighted_mass",
    "energy",
    "well_prepared_data",
    "solve_physical",
    "solve_gauged",
    "gauge_transform",
    "apply_H_epsilon",
    "linear_propagator",
]

SCHEMES = ("strang_physical", "rk4_gauged")
BLOWUP_THRESHOLD = 1e8


class BlowUpError(RuntimeError):
    """Non-finite or huge values met during time stepping."""

    def __init__(self, message: str, time_reached: float, step: int):
        super().__init__(f"{message} at t={time_reached:.6g} (step {step})")
        self.time_reached = time_reached
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    N: int = 128
    dt: float = 1e-4
    T: float = 1.0
    p: float = 2.0
    scheme: str = "strang_physical"
    dealias: bool | None = None
    store_stride: int = 50
    gammas: tuple[float, ...] = (1.0, 2.0)
    # test hook: scales the defocusing term, 0 switches it off
    nonlinearity: float = 1.0
    backward: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.N < 4 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 4, got {self.N}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= self.dt:
            raise ValueError(f"T={self.T} must be at least dt={self.dt}")
        if not self.p >= 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if self.store_stride < 1:
            raise ValueError(f"store_stride must be >= 1, got {self.store_stride}")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))

    @property
    def use_dealias(self) -> bool:
        # the split step multiplies pointwise by design; only RK4 products are filtered
        if self.dealias is None:
            return self.scheme == "rk4_gauged"
        return self.dealias

    @property
    def n_frames(self) -> int:
        ratio = self.T / (self.store_stride * self.dt)
        return int(math.floor(ratio + 1e-9)) + 1

    @property
    def n_steps(self) -> int:
        return (self.n_frames - 1) * self.store_stride

    @property
    def signed_dt(self) -> float:
        return -self.dt if self.backward else self.dt

    def frame_times(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.store_stride * self.signed_dt

    @staticmethod
    def with_frames(N=128, dt=1e-4, T=1.0, frames=200, **kw) -> "SolverConfig":
        """Config whose stride keeps about ``frames`` stored frames."""
        stride = max(1, int(round(T / dt / frames)))
        return SolverConfig(N=N, dt=dt, T=T, store_stride=stride, **kw)


@dataclass
class Trajectory:
    config: SolverConfig
    frames: list[GridField]
    times: np.ndarray
    norms: TimeSeriesNorms
    which_variable: str
    failure: BlowUpError | None = field(default=None, repr=False)

    def final(self) -> GridField:
        return self.frames[-1]


# ------------------------------------------------------------------ invariants


def mass(u: GridField) -> float:
    """Grid mean of ``|u|^2``."""
    a = u.values
    return float(np.mean(a.real**2 + a.imag**2))


def weighted_mass(v: GridField, gauge: GaugeData) -> float:
    """Grid mean of ``exp(-2 Y_eps) |v|^2``, the physical mass seen through the gauge."""
    a = v.values
    return float(np.mean(np.exp(-2 * gauge.Y.values) * (a.real**2 + a.imag**2)))


def energy(u: GridField, xi: GridField, p: float, nonlinearity: float = 1.0) -> float:
    """``1/2 mean|grad u|^2 - 1/2 mean(xi |u|^2) + c/(p+2) mean|u|^{p+2}``."""
    kin = np.sum(_laplacian_symbol(u.N) * np.abs(u.coeffs) ** 2)
    a2 = np.abs(u.values) ** 2
    pot = np.mean(xi.values * a2)
    nl = np.mean(a2 ** ((p + 2) / 2)) / (p + 2)
    return float(0.5 * kin - 0.5 * pot + nonlinearity * nl)


def _record(norms: TimeSeriesNorms, t: float, u: GridField, v: GridField,
            xi: GridField, cfg: SolverConfig) -> None:
    rec = {"mass": mass(u), "energy": energy(u, xi, cfg.p, cfg.nonlinearity)}
    for g in cfg.gammas:
        rec[f"H^{g:g}"] = sobolev_norm(v, g)
    rec["Linf"] = lp_norm(v, np.inf)
    norms.append(t, **rec)


def _check(a: np.ndarray, t: float, step: int) -> None:
    peak = np.max(np.abs(a))
    if not np.isfinite(peak):
        raise BlowUpError("non-finite field", t, step)
    if peak > BLOWUP_THRESHOLD:
        raise BlowUpError(f"field modulus {peak:.3g} above threshold", t, step)


def _same_grid(*fields: GridField) -> None:
    sizes = {f.N for f in fields}
    if len(sizes) != 1:
        raise ValueError(f"grid mismatch: sizes {sorted(sizes)}")


# ---------------------------------------------------------------- data & gauge


def well_prepared_data(w: GridField, Y: GaugeData, Y_eps: GaugeData) -> GridField:
    """Physical datum ``u0 exp(Y - Y_eps)`` with ``u0 = exp(-Y) w``, i.e. ``exp(-Y_eps) w``.

    ``Y`` is the unmollified gauge; it cancels, which is the point: the
    gauged datum is ``w`` for every epsilon.
    """
    _same_grid(w, Y.Y, Y_eps.Y)
    u0 = np.exp(-Y.Y.values) * w.values
    return GridField(u0 * np.exp(Y.Y.values - Y_eps.Y.values), copy=False)


@np.errstate(over="ignore", invalid="ignore")
def gauge_transform(traj: Trajectory, gauge: GaugeData) -> Trajectory:
    """Frame-wise ``v(t) = exp(i C_eps t) exp(Y_eps) u(t)``."""
    if traj.which_variable != "u_physical":
        raise ValueError("gauge_transform expects a physical trajectory")
    _same_grid(traj.frames[0], gauge.Y)
    eY = np.exp(gauge.Y.values)
    norms = TimeSeriesNorms()
    frames = []
    for t, u in zip(traj.times, traj.frames):
        v = GridField(np.exp(1j * gauge.C_eps * t) * eY * u.values, copy=False)
        frames.append(v)
        _record(norms, t, u, v, gauge.xi, traj.config)
    return Trajectory(traj.config, frames, np.array(traj.times), norms, "v_gauged", traj.failure)


def apply_H_epsilon(v: GridField, gauge: GaugeData, dealias: bool = False) -> GridField:
    """``Lap v - 2 grad v . grad Y_eps + v :|grad Y_eps|^2:``."""
    _same_grid(v, gauge.Y)
    N = v.N
    vh = np.asarray(v.coeffs)
    d1, d2 = _derivative_symbols(N)
    prod = (-2 * (from_coeffs(d1 * vh) * gauge.grad_Y[0].values
                  + from_coeffs(d2 * vh) * gauge.grad_Y[1].values)
            + v.values * gauge.wick_square.values)
    ph = to_coeffs(prod)
    if dealias:
        ph = ph * dealias_mask(N)
    return GridField.from_coeffs(ph - _laplacian_symbol(N) * vh)


# ------------------------------------------------------------------ solvers


# overflow in a diverging run is reported as BlowUpError, not as a warning
@np.errstate(over="ignore", invalid="ignore")
def solve_physical(u0: GridField, cfg: SolverConfig, xi_eps: GridField,
                   raise_on_blowup: bool = True) -> Trajectory:
    """Strang split step for ``i u_t = Lap u + xi_eps u - u|u|^p``.

    Half step of the exact pointwise phase ``exp(-i h (xi_eps - |u|^p))``,
    full step of ``exp(i |n|^2 dt)`` on the coefficients, half phase step.
    Adjacent half phases between stored frames are merged into one, which
    is exact since ``|u|`` is unchanged by the phase.
    """
    if cfg.scheme != "strang_physical":
        raise ValueError(f"solve_physical needs scheme strang_physical, got {cfg.scheme}")
    _same_grid(u0, xi_eps)
    if not xi_eps.is_real:
        raise ValueError("xi_eps must be real")
    N, dt, p, c = cfg.N, cfg.signed_dt, cfg.p, cfg.nonlinearity
    if u0.N != N:
        raise ValueError(f"datum has N={u0.N}, config has N={N}")
    xi = xi_eps.values
    prop = np.exp(1j * _laplacian_symbol(N) * dt)
    half = p / 2

    def phase(u, h):
        a2 = u.real**2 + u.imag**2
        pot = xi - c * a2**half if c else xi
        return u * np.exp(-1j * h * pot)

    norms = TimeSeriesNorms()
    times = cfg.frame_times()
    u = np.array(u0.values, dtype=complex)
    frames = [GridField(u)]
    _record(norms, times[0], frames[0], frames[0], xi_eps, cfg)
    failure = None
    step = 0
    try:
        for k in range(1, cfg.n_frames):
            u = phase(u, dt / 2)
            for j in range(cfg.store_stride):
                u = from_coeffs(to_coeffs(u) * prop)
                step += 1
                u = phase(u, dt if j < cfg.store_stride - 1 else dt / 2)
                if step % 50 == 0:
                    _check(u, step * dt, step)
            _check(u, times[k], step)
            f = GridField(u)
            frames.append(f)
            _record(norms, times[k], f, f, xi_eps, cfg)
    except BlowUpError as err:
        if raise_on_blowup:
            raise
        failure = err
    return Trajectory(cfg, frames, times[:len(frames)], norms, "u_physical", failure)


class _GaugedRHS:
    """``-i F[-2 grad v.grad Y + v wick - c exp(-pY) v|v|^p]`` from coefficients."""

    def __init__(self, gauge: GaugeData, cfg: SolverConfig):
        N = cfg.N
        self.d1, self.d2 = _derivative_symbols(N)
        self.Y1 = gauge.grad_Y[0].values
        self.Y2 = gauge.grad_Y[1].values
        self.wick = gauge.wick_square.values
        self.c = cfg.nonlinearity
        self.weight = self.c * np.exp(-cfg.p * gauge.Y.values)
        self.half = cfg.p / 2
        self.mask = dealias_mask(N) if cfg.use_dealias else None

    def __call__(self, vh: np.ndarray) -> np.ndarray:
        v = from_coeffs(vh)
        r = -2 * (from_coeffs(self.d1 * vh) * self.Y1 + from_coeffs(self.d2 * vh) * self.Y2)
        r += v * self.wick
        if self.c:
            r -= self.weight * v * (v.real**2 + v.imag**2) ** self.half
        rh = to_coeffs(r)
        if self.mask is not None:
            rh *= self.mask
        return -1j * rh


@np.errstate(over="ignore", invalid="ignore")
def solve_gauged(v0: GridField, cfg: SolverConfig, gauge: GaugeData,
                 raise_on_blowup: bool = True) -> Trajectory:
    """Integrating-factor RK4 for the gauged equation.

    The Laplacian is absorbed exactly by ``exp(i |n|^2 t)``; RK4 handles the
    first-order, potential and nonlinear terms.
    """
    if cfg.scheme != "rk4_gauged":
        raise ValueError(f"solve_gauged needs scheme rk4_gauged, got {cfg.scheme}")
    _same_grid(v0, gauge.Y)
    if v0.N != cfg.N:
        raise ValueError(f"datum has N={v0.N}, config has N={cfg.N}")
    dt = cfg.signed_dt
    rhs = _GaugedRHS(gauge, cfg)
    Eh = np.exp(0.5j * _laplacian_symbol(cfg.N) * dt)
    E = Eh * Eh

    norms = TimeSeriesNorms()
    times = cfg.frame_times()
    vh = np.array(v0.coeffs, dtype=complex)
    eYm = np.exp(-gauge.Y.values)

    def store(t, vh):
        v = GridField.from_coeffs(vh)
        u = GridField(np.exp(-1j * gauge.C_eps * t) * eYm * v.values, copy=False)
        _record(norms, t, u, v, gauge.xi, cfg)
        return v

    frames = [store(times[0], vh)]
    failure = None
    step = 0
    try:
        for k in range(1, cfg.n_frames):
            for _ in range(cfg.store_stride):
                k1 = rhs(vh)
                k2 = rhs(Eh * (vh + 0.5 * dt * k1))
                k3 = rhs(Eh * vh + 0.5 * dt * k2)
                k4 = rhs(E * vh + dt * Eh * k3)
                vh = E * vh + (dt / 6) * (E * k1 + 2 * Eh * (k2 + k3) + k4)
                step += 1
                if step % 50 == 0:
                    _check(vh, step * dt, step)
            _check(vh, times[k], step)
            frames.append(store(times[k], vh))
    except BlowUpError as err:
        if raise_on_blowup:
            raise
        failure = err
    return Trajectory(cfg, frames, times[:len(frames)], norms, "v_gauged", failure)


def linear_propagator(phi: GridField, t: float, gauge: GaugeData, dt: float,
                      dealias: bool = False) -> GridField:
    """``S_eps(t) phi`` for ``i u_t = H_eps u`` (gauged solver, nonlinearity off).

    The step is shrunk so that an integer number of steps lands on ``t``.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return phi
    n = max(1, int(math.ceil(t / dt - 1e-9)))
    cfg = SolverConfig(N=phi.N, dt=t / n, T=t, p=2.0, scheme="rk4_gauged", dealias=dealias,
                       store_stride=n, gammas=(), nonlinearity=0.0)
    return solve_gauged(phi, cfg, gauge).final()


def linear_trajectory(phi: GridField, T: float, gauge: GaugeData, dt: float,
                      frames: int = 64, dealias: bool = False) -> Trajectory:
    """``S_eps(t) phi`` on ``frames + 1`` equispaced times in ``[0, T]``."""
    n = max(1, int(math.ceil(T / dt / frames - 1e-9)))
    cfg = SolverConfig(N=phi.N, dt=T / (n * frames), T=T, p=2.0, scheme="rk4_gauged",
                       dealias=dealias, store_stride=n, gammas=(), nonlinearity=0.0)
    return solve_gauged(phi, cfg, gauge)


def config_replace(cfg: SolverConfig, **changes) -> SolverConfig:
    return replace(cfg, **changes)
