"""Discrete Fourier machinery on the periodic square [0, 2*pi)^2.

Conventions
-----------
Grid points are ``x_j = 2*pi*j/N``; ``values[j1, j2]`` sits at
``(x_{j1}, x_{j2})``, so the first array axis carries the first wavenumber
component.  Coefficients use the normalized measure ``(2*pi)^-2 dx``::

    u(x) = sum_n uhat(n) exp(i n.x),   uhat(n) = mean_j u(x_j) exp(-i n.x_j)

which makes ``{exp(i n.x)}`` orthonormal and Parseval read
``sum |uhat|^2 = mean |u|^2``.  All Lebesgue norms are grid means.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridField",
    "TimeSeriesNorms",
    "wavenumbers",
    "grid_points",
    "dealias_mask",
    "to_coeffs",
    "from_coeffs",
    "sobolev_norm",
    "lp_norm",
    "wsp_norm",
    "bessel_multiplier",
    "lp_block",
    "dyadic_scales",
    "spacetime_norm",
    "random_bandlimited",
]


def _check_size(N: int) -> None:
    if N < 2 or N & (N - 1):
        raise ValueError(f"grid size must be a power of two >= 2, got {N}")


@lru_cache(maxsize=16)
def _wavenumbers(N: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.fft.fftfreq(N, 1.0 / N).astype(np.int64)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    k1.setflags(write=False)
    k2.setflags(write=False)
    return k1, k2


def wavenumbers(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer wavenumber arrays ``(n1, n2)`` in FFT order (read-only)."""
    _check_size(N)
    return _wavenumbers(N)


@lru_cache(maxsize=16)
def _laplacian_symbol(N: int) -> np.ndarray:
    k1, k2 = _wavenumbers(N)
    out = (k1 * k1 + k2 * k2).astype(float)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _derivative_symbols(N: int) -> tuple[np.ndarray, np.ndarray]:
    # the Nyquist row/column has no odd-derivative partner, so it is zeroed
    k1, k2 = _wavenumbers(N)
    d1 = 1j * np.where(k1 == -N // 2, 0, k1)
    d2 = 1j * np.where(k2 == -N // 2, 0, k2)
    d1.setflags(write=False)
    d2.setflags(write=False)
    return d1, d2


def grid_points(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Collocation coordinates ``(x1, x2)`` as two N x N arrays."""
    _check_size(N)
    x = 2 * np.pi * np.arange(N) / N
    return np.meshgrid(x, x, indexing="ij")


def dealias_mask(N: int) -> np.ndarray:
    """Boolean 2/3-rule mask: keep modes with ``max|n_i| <= N/3``."""
    k1, k2 = wavenumbers(N)
    return (np.abs(k1) <= N // 3) & (np.abs(k2) <= N // 3)


def to_coeffs(values: np.ndarray) -> np.ndarray:
    N = values.shape[0]
    return sfft.fft2(values) / (N * N)


def from_coeffs(coeffs: np.ndarray) -> np.ndarray:
    N = coeffs.shape[0]
    return sfft.ifft2(coeffs) * (N * N)


class GridField:
    """Samples of a (complex or real) function on the N x N collocation grid.

    Immutable; the Fourier coefficients are computed on first access and
    cached.
    """

    __slots__ = ("_values", "_coeffs")

    def __init__(self, values, *, copy: bool = True):
        arr = np.array(values, copy=copy)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"expected a square 2D array, got shape {arr.shape}")
        _check_size(arr.shape[0])
        if not np.iscomplexobj(arr):
            arr = arr.astype(float, copy=False)
        arr.setflags(write=False)
        self._values = arr
        self._coeffs = None

    @classmethod
    def from_coeffs(cls, coeffs, *, real: bool = False) -> "GridField":
        vals = from_coeffs(np.asarray(coeffs))
        if real:
            vals = vals.real
        return cls(vals, copy=False)

    @classmethod
    def constant(cls, N: int, c: complex = 1.0) -> "GridField":
        return cls(np.full((N, N), c), copy=False)

    @classmethod
    def plane_wave(cls, N: int, n: tuple[int, int], amplitude: complex = 1.0) -> "GridField":
        x1, x2 = grid_points(N)
        return cls(amplitude * np.exp(1j * (n[0] * x1 + n[1] * x2)), copy=False)

    @property
    def N(self) -> int:
        return self._values.shape[0]

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            c = to_coeffs(self._values)
            c.setflags(write=False)
            self._coeffs = c
        return self._coeffs

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self._values)

    def coefficient(self, n: tuple[int, int]) -> complex:
        return complex(self.coeffs[n[0] % self.N, n[1] % self.N])

    def mean(self) -> complex:
        return complex(self._values.mean())

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self._values + _vals(other), copy=False)

    def __sub__(self, other: "GridField") -> "GridField":
        return GridField(self._values - _vals(other), copy=False)

    def __mul__(self, other) -> "GridField":
        return GridField(self._values * _vals(other), copy=False)

    __rmul__ = __mul__

    def __neg__(self) -> "GridField":
        return GridField(-self._values, copy=False)

    def __repr__(self) -> str:
        kind = "real" if self.is_real else "complex"
        return f"GridField(N={self.N}, {kind})"


def _vals(x):
    return x.values if isinstance(x, GridField) else x


@dataclass
class TimeSeriesNorms:
    """Named scalar records sampled at strictly monotone times (decreasing for backward runs)."""

    times: list[float] = field(default_factory=list)
    records: dict[str, list[float]] = field(default_factory=dict)

    def append(self, t: float, **values: float) -> None:
        if self.times:
            step = t - self.times[-1]
            ref = self.times[1] - self.times[0] if len(self.times) > 1 else step
            if step == 0 or (step > 0) != (ref > 0):
                raise ValueError(f"times must be strictly monotone: {t} after {self.times[-1]}")
        if self.times and set(values) != set(self.records):
            raise ValueError("every record must be given at every time")
        self.times.append(float(t))
        for key, val in values.items():
            self.records.setdefault(key, []).append(float(val))

    def validate(self) -> None:
        t = np.asarray(self.times)
        d = np.diff(t)
        if t.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("times are not strictly monotone")
        for key, series in self.records.items():
            if len(series) != t.size:
                raise ValueError(f"record {key!r} has {len(series)} entries for {t.size} times")

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.records[name])


def _bessel(N: int, s: float) -> np.ndarray:
    return (1.0 + _laplacian_symbol(N)) ** (s / 2)


def bessel_multiplier(f: GridField, s: float) -> GridField:
    """Apply ``(1 + |n|^2)^{s/2}`` in Fourier space."""
    return GridField.from_coeffs(f.coeffs * _bessel(f.N, s), real=f.is_real)


def sobolev_norm(f: GridField, gamma: float) -> float:
    """``(sum_n (1+|n|^2)^gamma |fhat(n)|^2)^{1/2}``."""
    if not -2.0 <= gamma <= 4.0:
        raise ValueError(f"gamma must lie in [-2, 4], got {gamma}")
    weights = _bessel(f.N, 2.0 * gamma)
    return float(np.sqrt(np.sum(weights * np.abs(f.coeffs) ** 2)))


def lp_norm(f: GridField, p: float) -> float:
    """Normalized-measure L^p norm by grid quadrature; ``p=inf`` is the max modulus."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    if p == 2:
        return float(np.sqrt(np.mean(a * a)))
    return float(np.mean(a**p) ** (1.0 / p))


def wsp_norm(f: GridField, s: float, p: float) -> float:
    """Bessel-potential W^{s,p} norm: L^p norm of ``(1-Laplacian)^{s/2} f``."""
    if not 0.0 <= s <= 2.0:
        raise ValueError(f"s must lie in [0, 2], got {s}")
    if not 1.0 < p < np.inf:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    if s == 0:
        return lp_norm(f, p)
    return lp_norm(bessel_multiplier(f, s), p)


def dyadic_scales(N: int) -> list[int]:
    """The dyadic block labels ``1, 2, 4, ..., N/2`` for an N-point grid."""
    _check_size(N)
    return [2**j for j in range(int(np.log2(N)))]


def _block_mask(N: int, ndyad: int) -> np.ndarray:
    r = np.sqrt(_laplacian_symbol(N))
    if ndyad == 1:
        return r < 2
    return (r >= ndyad) & (r < 2 * ndyad)


def lp_block(f: GridField, ndyad: int) -> GridField:
    """Sharp Littlewood-Paley projector onto ``ndyad <= |n| < 2*ndyad``.

    The lowest block (``ndyad == 1``) also takes the zero mode, so the
    blocks over :func:`dyadic_scales` partition the whole grid spectrum.
    """
    if ndyad not in dyadic_scales(f.N):
        raise ValueError(f"ndyad must be one of {dyadic_scales(f.N)}, got {ndyad}")
    return GridField.from_coeffs(np.where(_block_mask(f.N, ndyad), f.coeffs, 0), real=f.is_real)


def spacetime_norm(traj, r: float, q: float, s: float = 0.0) -> float:
    """L^r in time (trapezoid over stored frames) of the spatial W^{s,q} norm.

    ``traj`` needs ``times`` and ``frames``; ``r = inf`` takes the max over
    frames.  ``s = 0`` uses the plain L^q norm, which also allows ``q`` in
    ``{1, inf}``.
    """
    frames = traj.frames
    times = np.asarray(traj.times, dtype=float)
    if len(frames) < 2:
        raise ValueError("space-time norm needs at least two stored frames")
    if not (r >= 1 and q >= 1 and s >= 0):
        raise ValueError(f"invalid exponents r={r}, q={q}, s={s}")
    if s == 0:
        spatial = np.array([lp_norm(f, q) for f in frames])
    else:
        spatial = np.array([wsp_norm(f, s, q) for f in frames])
    if np.isinf(r):
        return float(spatial.max())
    # abs: backward runs store decreasing times
    return float(abs(np.trapezoid(spatial**r, times)) ** (1.0 / r))


def random_bandlimited(N: int, rng: np.random.Generator, decay: float = 1.0,
                       band: int | None = None) -> GridField:
    """Random field with complex Gaussian coefficients scaled by ``(1+|n|^2)^{-decay}``.

    Modes with ``max|n_i| > band`` (default ``N/4``) are zero.
    """
    band = N // 4 if band is None else band
    k1, k2 = wavenumbers(N)
    z = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    amp = (1.0 + _laplacian_symbol(N)) ** (-decay)
    keep = (np.abs(k1) <= band) & (np.abs(k2) <= band)
    return GridField.from_coeffs(np.where(keep, z * amp, 0) / np.sqrt(2))
