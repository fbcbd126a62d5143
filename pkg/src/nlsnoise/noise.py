"""Periodic white noise, its mollification, and the gauge potentials.

The noise is ``xi(x) = sum_{n != 0} g_n exp(i n.x)`` with standard complex
Gaussians ``g_n`` (``E|g_n|^2 = 1``) subject to ``g_{-n} = conj(g_n)``.
Mollifying with ``chi_eps = eps^-2 chi(x/eps)`` multiplies ``g_n`` by
``chi_hat(eps n)``, and ``Y_eps`` solves ``Laplacian Y_eps = xi_eps`` with
zero mean.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .spectral import GridField, from_coeffs, wavenumbers

__all__ = [
    "NoiseRealization",
    "MollifierSpec",
    "GaugeData",
    "sample_noise",
    "zero_noise",
    "mollifier_symbol",
    "build_gauge_data",
    "noise_on_grid",
    "renormalization_constant",
    "check_resolution",
    "MIN_EPS_N",
]

MIN_EPS_N = 8.0
_MAX_SEED = 2**64


# ---------------------------------------------------------------- sampling


@lru_cache(maxsize=8)
def _canonical_order(K: int) -> tuple[np.ndarray, np.ndarray]:
    """Half-lattice modes in draw order: by shell ``max|n_i|``, then n2, then n1.

    The order inside each shell does not depend on K, which gives the
    nested coupling between lattices of different sizes.
    """
    r = np.arange(-K, K + 1)
    n1, n2 = (a.ravel() for a in np.meshgrid(r, r, indexing="ij"))
    half = (n2 > 0) | ((n2 == 0) & (n1 > 0))
    n1, n2 = n1[half], n2[half]
    shell = np.maximum(np.abs(n1), np.abs(n2))
    order = np.lexsort((n1, n2, shell))
    return n1[order], n2[order]


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """White-noise coefficients on the lattice ``max|n_i| <= K``.

    ``coeffs[n1 + K, n2 + K]`` holds ``g_n``; ``g_0 = 0``.
    """

    seed: int
    K: int
    coeffs: np.ndarray

    def coefficient(self, n: tuple[int, int]) -> complex:
        if max(abs(n[0]), abs(n[1])) > self.K:
            raise IndexError(f"mode {n} outside lattice of half-width {self.K}")
        return complex(self.coeffs[n[0] + self.K, n[1] + self.K])

    def restrict(self, K: int) -> "NoiseRealization":
        if not 1 <= K <= self.K:
            raise ValueError(f"cannot restrict half-width {self.K} to {K}")
        d = self.K - K
        sub = self.coeffs[d:d + 2 * K + 1, d:d + 2 * K + 1].copy()
        sub.setflags(write=False)
        return NoiseRealization(self.seed, K, sub)

    def check_invariants(self) -> None:
        g = self.coeffs
        if g.shape != (2 * self.K + 1,) * 2:
            raise ValueError(f"coefficient array has shape {g.shape} for K={self.K}")
        if g[self.K, self.K] != 0:
            raise ValueError("zero mode must vanish")
        if not np.array_equal(g[::-1, ::-1], np.conj(g)):
            raise ValueError("coefficients violate g(-n) = conj(g(n))")


def sample_noise(seed: int, K: int) -> NoiseRealization:
    """Draw ``g_n`` for ``0 < max|n_i| <= K`` from the seed's PCG64 stream.

    Real and imaginary parts have variance 1/2.  Only the canonical half
    lattice is drawn; the rest follows by conjugation.  The draws run
    shell by shell, so a larger K extends a smaller one without touching
    the shared modes.
    """
    if K < 1:
        raise ValueError(f"lattice half-width K must be >= 1, got {K}")
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    n1, n2 = _canonical_order(K)
    z = np.random.default_rng(seed).standard_normal((n1.size, 2))
    g = (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)
    coeffs = np.zeros((2 * K + 1, 2 * K + 1), dtype=complex)
    coeffs[n1 + K, n2 + K] = g
    coeffs[K - n1, K - n2] = np.conj(g)
    coeffs.setflags(write=False)
    return NoiseRealization(int(seed), K, coeffs)


def zero_noise(K: int, seed: int = 0) -> NoiseRealization:
    """The identically vanishing realization (test and override hook)."""
    coeffs = np.zeros((2 * K + 1, 2 * K + 1), dtype=complex)
    coeffs.setflags(write=False)
    return NoiseRealization(seed, K, coeffs)


# --------------------------------------------------------------- mollifier


def _bump(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    inside = r < 0.5
    out[inside] = np.exp(-1.0 / (1.0 - 4.0 * r[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_quadrature(order: int = 400) -> tuple[np.ndarray, np.ndarray]:
    # radial Hankel transform: chi_hat(k) = 2 pi int_0^{1/2} chi(r) J0(k r) r dr
    x, w = np.polynomial.legendre.leggauss(order)
    r = 0.25 * (x + 1.0)
    weights = 0.25 * w * 2 * np.pi * r * _bump(r)
    return r, weights / weights.sum()


def _bump_transform(k: np.ndarray) -> np.ndarray:
    r, w = _bump_quadrature()
    k = np.asarray(k, dtype=float)
    out = np.empty(k.shape)
    flat_k, flat_out = k.ravel(), out.reshape(-1)
    for start in range(0, flat_k.size, 4096):
        chunk = flat_k[start:start + 4096]
        flat_out[start:start + 4096] = special.j0(np.outer(chunk, r)) @ w
    return out


_PROFILES = {"bump": _bump_transform}


@dataclass(frozen=True)
class MollifierSpec:
    """Rescaled bump ``chi_eps``; ``epsilon = 0`` means no mollification.

    ``chi(x) = c exp(-1/(1-|2x|^2))`` on ``|x| < 1/2`` with unit mass.
    Symbol values are cached per ``|n|^2``.
    """

    epsilon: float
    kind: str = "bump"
    _table: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not (self.epsilon >= 0 and np.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be a finite nonnegative number, got {self.epsilon}")
        if self.kind not in _PROFILES:
            raise ValueError(f"unknown mollifier kind {self.kind!r}")

    def symbol_r2(self, r2: np.ndarray) -> np.ndarray:
        """``chi_hat(eps n)`` as a function of the integer ``|n|^2``."""
        r2 = np.asarray(r2, dtype=np.int64)
        if self.epsilon == 0:
            return np.ones(r2.shape)
        uniq, inv = np.unique(r2, return_inverse=True)
        missing = [v for v in uniq.tolist() if v not in self._table]
        if missing:
            vals = _PROFILES[self.kind](self.epsilon * np.sqrt(np.asarray(missing, dtype=float)))
            self._table.update(zip(missing, vals.tolist()))
        table = np.array([self._table[v] for v in uniq.tolist()])
        return table[inv].reshape(r2.shape)


@lru_cache(maxsize=64)
def _spec(kind: str, epsilon: float) -> MollifierSpec:
    # shared instances keep one symbol table per (kind, epsilon)
    return MollifierSpec(epsilon, kind)


@lru_cache(maxsize=32)
def _grid_symbol(kind: str, epsilon: float, N: int) -> np.ndarray:
    k1, k2 = wavenumbers(N)
    out = _spec(kind, epsilon).symbol_r2(k1 * k1 + k2 * k2)
    out.setflags(write=False)
    return out


def mollifier_symbol(spec: MollifierSpec, n: tuple[int, int]) -> float:
    """``chi_hat(eps n)``, so that ``xi_eps_hat(n) = chi_hat(eps n) g_n``."""
    return float(spec.symbol_r2(np.array(n[0] ** 2 + n[1] ** 2)))


def renormalization_constant(spec: MollifierSpec, K: int) -> float:
    """``C_eps = sum_{0 < max|n_i| <= K} chi_hat(eps n)^2 / |n|^2``.

    This is ``E|grad Y_eps(x)|^2`` for the field truncated to the same
    lattice, at every x.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    return _renormalization_constant(spec.kind, spec.epsilon, K)


@lru_cache(maxsize=64)
def _renormalization_constant(kind: str, epsilon: float, K: int) -> float:
    spec = _spec(kind, epsilon)
    r = np.arange(-K, K + 1)
    r2 = (r[:, None] ** 2 + r[None, :] ** 2).ravel()
    r2 = r2[r2 > 0]
    # group equal |n|^2 so the sum is independent of lattice traversal order
    uniq, counts = np.unique(r2, return_counts=True)
    chi = spec.symbol_r2(uniq)
    return float(np.sum(counts * chi**2 / uniq))


def check_resolution(epsilon: float, N: int, min_eps_n: float = MIN_EPS_N) -> None:
    """Reject ``0 < eps`` with ``eps * N < min_eps_n`` (symbol not resolved)."""
    if epsilon > 0 and epsilon * N < min_eps_n:
        raise ValueError(
            f"eps*N = {epsilon * N:g} is below the resolution threshold {min_eps_n:g} "
            f"(eps={epsilon:g}, N={N})"
        )


# ------------------------------------------------------------------- gauge


@dataclass(frozen=True, eq=False)
class GaugeData:
    """Gauge potential ``Y_eps`` and the quantities derived from it on one grid."""

    Y: GridField
    grad_Y: tuple[GridField, GridField]
    wick_square: GridField
    C_eps: float
    epsilon: float
    xi: GridField

    @property
    def N(self) -> int:
        return self.Y.N

    @classmethod
    def zero(cls, N: int, C_eps: float = 0.0, epsilon: float = 0.0) -> "GaugeData":
        z = GridField(np.zeros((N, N)), copy=False)
        wick = GridField(np.full((N, N), -float(C_eps)), copy=False)
        return cls(z, (z, z), wick, float(C_eps), float(epsilon), z)


def _band(N: int, band: int | None) -> int:
    Kg = N // 2 - 1
    if band is None:
        return Kg
    if not 1 <= band <= Kg:
        raise ValueError(f"band must lie in [1, {Kg}] for N={N}, got {band}")
    return int(band)


def noise_on_grid(noise: NoiseRealization, spec: MollifierSpec, N: int,
                  band: int | None = None) -> np.ndarray:
    """Coefficients ``chi_hat(eps n) g_n`` in FFT layout, zero outside ``max|n_i| <= band``.

    ``band`` defaults to the grid lattice ``N/2 - 1``.
    """
    Kg = N // 2 - 1
    if noise.K < Kg:
        raise ValueError(f"noise lattice K={noise.K} does not cover grid modes up to {Kg} (N={N})")
    Kb = _band(N, band)
    k1, k2 = wavenumbers(N)
    keep = (np.abs(k1) <= Kb) & (np.abs(k2) <= Kb)
    g = np.where(keep, noise.coeffs[np.clip(k1 + noise.K, 0, 2 * noise.K),
                                    np.clip(k2 + noise.K, 0, 2 * noise.K)], 0)
    return _grid_symbol(spec.kind, spec.epsilon, N) * g


def build_gauge_data(noise: NoiseRealization, spec: MollifierSpec, N: int,
                     amplitude: float = 1.0, band: int | None = None) -> GaugeData:
    """Grid fields ``Y_eps``, ``grad Y_eps``, ``:|grad Y_eps|^2:``, ``xi_eps`` and ``C_eps``.

    Modes with ``max|n_i| <= N/2 - 1`` are kept, so the Nyquist row and
    column stay empty and every field is real.  A smaller ``band`` zeroes
    the noise outside ``max|n_i| <= band``; ``C_eps`` is then summed over
    the band, so the Wick square stays exactly centered.  ``amplitude``
    scales the noise (``xi -> amplitude * xi``), hence ``C_eps`` by its
    square.
    """
    if not amplitude >= 0:
        raise ValueError(f"amplitude must be nonnegative, got {amplitude}")
    Kg = N // 2 - 1
    if Kg < 1:
        raise ValueError(f"grid size N={N} too small")
    if noise.K < Kg:
        raise ValueError(f"noise lattice K={noise.K} does not cover grid modes up to {Kg} (N={N})")
    k1, k2 = wavenumbers(N)
    r2 = k1 * k1 + k2 * k2
    Kb = _band(N, band)
    xi_hat = amplitude * noise_on_grid(noise, spec, N, Kb)
    Y_hat = np.where(r2 > 0, -xi_hat / np.where(r2 > 0, r2, 1), 0)

    def real_field(c):
        v = from_coeffs(c)
        return GridField(v.real, copy=False)

    Y = real_field(Y_hat)
    grad = (real_field(1j * k1 * Y_hat), real_field(1j * k2 * Y_hat))
    C = amplitude**2 * renormalization_constant(spec, Kb)
    wick = GridField(grad[0].values ** 2 + grad[1].values ** 2 - C, copy=False)
    return GaugeData(Y, grad, wick, C, spec.epsilon, real_field(xi_hat))
