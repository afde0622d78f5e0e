"""Seeded random initial data: c_xi = |xi|^(-decay) * complex gaussian,
Hermitian-symmetrized, mean removed."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, ScalarField, SpectralField, hermitian_part


@dataclass(frozen=True)
class EnsembleSpec:
    decay: float = 3.0
    band: float | None = None  # keep max(|xi1|,|xi2|) <= band
    h1_norm: float | None = None  # rescale to this H^1 norm

    def sample(self, grid: GridSpec, seed: int) -> SpectralField:
        return random_field(grid, seed, self.decay, self.band, self.h1_norm)


def random_field(
    grid: GridSpec,
    seed: int,
    decay: float = 3.0,
    band: float | None = None,
    h1_norm: float | None = None,
) -> SpectralField:
    rng = np.random.default_rng(seed)
    n = grid.n
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    xi = np.hypot(*grid.lattice)
    amp = np.zeros_like(xi)
    amp[xi > 0] = xi[xi > 0] ** (-decay)
    c = hermitian_part(amp * z)
    c[0, 0] = 0.0
    if band is not None:
        c[grid.supnorm_index > band] = 0.0
    F = SpectralField(grid, c)
    if h1_norm is not None:
        F = F * (h1_norm / h1(F))
    return F


def h1(F: SpectralField) -> float:
    w = 1.0 + F.grid.kmag**2
    return float(F.grid.domain_length * np.sqrt(np.sum(w * np.abs(F.coefficients) ** 2)))


def single_mode(grid: GridSpec) -> ScalarField:
    x1, _ = grid.coordinates()
    return ScalarField(grid, np.sin(grid.scale * x1))


def two_mode(grid: GridSpec) -> ScalarField:
    x1, x2 = grid.coordinates()
    return ScalarField(grid, np.sin(grid.scale * x1) + np.cos(2 * grid.scale * x2))


def active_modes(c: np.ndarray, rtol: float = 1e-14) -> np.ndarray:
    """Modes above roundoff relative to the largest coefficient."""
    a = np.abs(c)
    return a > rtol * a.max() if a.max() > 0 else np.zeros(a.shape, dtype=bool)


def rescale_space(F: SpectralField, lam: int) -> SpectralField:
    """Coefficients of f(lam x): mode xi moves to lam * xi."""
    g = F.grid
    n = g.n
    xi1, xi2 = g.lattice
    c = F.coefficients
    active = active_modes(c)
    if np.any(lam * g.supnorm_index[active] >= n // 2):
        raise ValueError("rescaled frequencies leave the lattice")
    out = np.zeros_like(c)
    out[(lam * xi1[active]) % n, (lam * xi2[active]) % n] = c[active]
    out[0, 0] = c[0, 0]
    return SpectralField(g, out)
