"""INI-style run and study configuration.

Schema (every key optional; defaults in brackets)::

    [solver]
    N = 128                    # grid size, power of two
    dt = 1e-4
    T = 0.5
    p = 3                      # nonlinearity power, >= 2
    scheme = strang_physical   # or rk4_gauged
    dealias = auto             # auto | true | false  [study plans: false]
    store_stride = 50
    gammas = 1, 2              # Sobolev indices recorded per frame
    nonlinearity = 1           # 0 switches the defocusing term off
    backward = false           # integrate towards negative times

    [noise]
    seed = 0
    epsilon = 0.0625           # 0 means unmollified (grid-truncated)
    amplitude = 0.1
    band = 31                  # keep noise modes max|n_i| <= band [N/4 - 1]
    zero = false               # replace the sample by the zero field
    min_eps_n = 8              # resolution gate: eps * N >= min_eps_n

    [datum]
    modes = 1 0 1 0; 0 -1 0.5 0    # "n1 n2 re im" terms of w, separated by ";"

    [study]
    base_seed = 0
    sample_count = 8
    eps_grid = 0.125, 0.0625, 0.03125, 0.015625
    gamma_list = 0, 0.5, 1, 1.9
    delta = 0.05
    bounds_N = 256             # grid of the stochastic-bound study
    lp_exponents = 4           # L^p exponents of the stochastic-bound study
    strichartz_samples = 2
    strichartz_dt = 5e-4
    strichartz_T = 1
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import SolverConfig
from .experiments import DEFAULT_AMPLITUDE, DEFAULT_DATUM, StudyPlan, default_band
from .noise import MIN_EPS_N, check_resolution

__all__ = ["ConfigError", "RunConfig", "StudyConfig", "load_run_config", "load_study_config",
           "config_hash", "parse_floats"]


class ConfigError(ValueError):
    """Invalid configuration file or value."""


def parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _parse_modes(text: str) -> tuple[tuple[float, float, float, float], ...]:
    modes = []
    for term in text.split(";"):
        if not term.strip():
            continue
        vals = parse_floats(term)
        if len(vals) != 4 or vals[0] != int(vals[0]) or vals[1] != int(vals[1]):
            raise ConfigError(f"datum term {term.strip()!r} must be 'n1 n2 re im' with integer modes")
        modes.append((int(vals[0]), int(vals[1]), vals[2], vals[3]))
    if not modes:
        raise ConfigError("datum has no modes")
    return tuple(modes)


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_SOLVER_KEYS = {"n", "dt", "t", "p", "scheme", "dealias", "store_stride", "gammas", "nonlinearity", "backward"}
_NOISE_KEYS = {"seed", "epsilon", "amplitude", "band", "zero", "min_eps_n"}
_STUDY_KEYS = {"base_seed", "sample_count", "eps_grid", "gamma_list", "delta", "bounds_n",
               "lp_exponents", "strichartz_samples", "strichartz_dt", "strichartz_t"}
_SECTIONS = {"solver": _SOLVER_KEYS, "noise": _NOISE_KEYS, "datum": {"modes"}, "study": _STUDY_KEYS}


def _read(path) -> tuple[configparser.ConfigParser, bytes]:
    raw = Path(path).read_bytes()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(raw.decode("utf-8"))
    except configparser.Error as err:
        raise ConfigError(str(err)) from err
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        unknown = set(cp[sec]) - _SECTIONS[sec]
        if unknown:
            raise ConfigError(f"unknown keys in [{sec}]: {sorted(unknown)}")
    return cp, raw


def config_hash(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def _solver(cp, defaults: dict) -> SolverConfig:
    s = cp["solver"] if cp.has_section("solver") else {}
    kw = dict(defaults)
    try:
        if "n" in s: kw["N"] = int(s["n"])
        if "dt" in s: kw["dt"] = float(s["dt"])
        if "t" in s: kw["T"] = float(s["t"])
        if "p" in s: kw["p"] = float(s["p"])
        if "scheme" in s: kw["scheme"] = s["scheme"].strip()
        if "dealias" in s:
            kw["dealias"] = None if s["dealias"].strip().lower() == "auto" else _bool(s["dealias"])
        if "store_stride" in s: kw["store_stride"] = int(s["store_stride"])
        if "gammas" in s: kw["gammas"] = parse_floats(s["gammas"])
        if "nonlinearity" in s: kw["nonlinearity"] = float(s["nonlinearity"])
        if "backward" in s: kw["backward"] = _bool(s["backward"])
        return SolverConfig(**kw)
    except ValueError as err:
        raise ConfigError(f"[solver]: {err}") from err


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    seed: int = 0
    epsilon: float = 2.0**-4
    amplitude: float = DEFAULT_AMPLITUDE
    band: int = 0
    zero_noise: bool = False
    min_eps_n: float = MIN_EPS_N
    datum: tuple = DEFAULT_DATUM
    hash: str = ""


def load_run_config(path) -> RunConfig:
    cp, raw = _read(path)
    solver = _solver(cp, {"N": 128, "dt": 1e-4, "T": 0.5, "p": 3.0, "store_stride": 50})
    n = cp["noise"] if cp.has_section("noise") else {}
    try:
        seed = int(n.get("seed", 0))
        eps = float(n.get("epsilon", 2.0**-4))
        amp = float(n.get("amplitude", DEFAULT_AMPLITUDE))
        band = int(n.get("band", default_band(solver.N)))
        if not 1 <= band <= solver.N // 2 - 1:
            raise ValueError(f"band must lie in [1, N/2 - 1], got {band}")
        zero = _bool(n.get("zero", "false"))
        gate = float(n.get("min_eps_n", MIN_EPS_N))
        if seed < 0 or eps < 0 or amp < 0:
            raise ValueError("seed, epsilon and amplitude must be nonnegative")
        check_resolution(eps, solver.N, gate)
    except ValueError as err:
        raise ConfigError(f"[noise]: {err}") from err
    datum = _parse_modes(cp["datum"]["modes"]) if cp.has_section("datum") and "modes" in cp["datum"] \
        else DEFAULT_DATUM
    return RunConfig(solver, seed, eps, amp, band, zero, gate, datum, config_hash(raw))


@dataclass(frozen=True)
class StudyConfig:
    plan: StudyPlan
    bounds_N: int = 256
    lp_exponents: tuple[float, ...] = (4.0,)
    strichartz_samples: int = 2
    strichartz_dt: float = 5e-4
    strichartz_T: float = 1.0
    hash: str = ""
    extra: dict = field(default_factory=dict)


def load_study_config(path) -> StudyConfig:
    cp, raw = _read(path)
    solver = _solver(cp, {"N": 128, "dt": 1e-4, "T": 0.5, "p": 3.0, "store_stride": 50, "dealias": False})
    n = cp["noise"] if cp.has_section("noise") else {}
    st = cp["study"] if cp.has_section("study") else {}
    datum = _parse_modes(cp["datum"]["modes"]) if cp.has_section("datum") and "modes" in cp["datum"] \
        else DEFAULT_DATUM
    try:
        kw = {}
        if "base_seed" in st: kw["base_seed"] = int(st["base_seed"])
        if "sample_count" in st: kw["sample_count"] = int(st["sample_count"])
        if "eps_grid" in st: kw["eps_grid"] = parse_floats(st["eps_grid"])
        if "gamma_list" in st: kw["gamma_list"] = parse_floats(st["gamma_list"])
        if "delta" in st: kw["delta"] = float(st["delta"])
        if "amplitude" in n: kw["noise_amplitude"] = float(n["amplitude"])
        if "band" in n: kw["noise_band"] = int(n["band"])
        if "zero" in n: kw["zero_noise"] = _bool(n["zero"])
        if "min_eps_n" in n: kw["min_eps_n"] = float(n["min_eps_n"])
        if kw.get("base_seed", 0) < 0:
            raise ValueError("base_seed must be nonnegative")
        plan = StudyPlan(p=solver.p, solver=solver, datum=datum, **kw)
        bounds_N = int(st.get("bounds_n", 256))
        for e in plan.eps_grid:
            check_resolution(e, bounds_N, plan.min_eps_n)
        return StudyConfig(
            plan, bounds_N,
            parse_floats(st.get("lp_exponents", "4")),
            int(st.get("strichartz_samples", 2)),
            float(st.get("strichartz_dt", 5e-4)),
            float(st.get("strichartz_t", 1.0)),
            config_hash(raw),
        )
    except ValueError as err:
        raise ConfigError(f"[study]: {err}") from err
