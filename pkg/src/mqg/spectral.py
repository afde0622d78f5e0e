"""Fourier multipliers and the pseudo-spectral advection term.

Conventions: ``R_j`` has symbol ``i k_j / |k|`` so that ``R_perp = grad_perp
Lambda^{-1}``; every multiplier that is singular at ``k = 0`` maps the mean to
zero.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .grid import (
    FieldError,
    GridSpec,
    ScalarField,
    SpectralField,
    VectorField,
    _ifft_real,
)

ORACLE_MAX_N = 32


class Variant(str, Enum):
    MQG = "MQG"
    QG = "QG"


def _power_symbol(grid: GridSpec, gamma: float) -> np.ndarray:
    k = grid.kmag
    if gamma == 0:
        return np.ones_like(k)
    out = np.zeros_like(k)
    nz = k > 0
    out[nz] = k[nz] ** gamma
    return out


def fractional_laplacian(F: SpectralField, gamma: float) -> SpectralField:
    """Apply ``Lambda^gamma``, the multiplier ``|k|^gamma``."""
    if gamma < 0 and abs(F.mean) > 0:
        raise FieldError("negative power of Lambda is undefined on a field with nonzero mean")
    return F.with_coefficients(_power_symbol(F.grid, gamma) * F.coefficients)


def velocity_symbols(grid: GridSpec, alpha: float, variant: Variant | str = Variant.MQG):
    """Multipliers (m1, m2) with u_hat_j = m_j * theta_hat."""
    variant = Variant(variant)
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    k1, k2 = grid.odd_wavenumbers
    power = alpha - 2 if variant is Variant.MQG else -1.0
    # zeroed on Nyquist rows/columns so xi . u_hat = 0 on the full lattice
    amp = _power_symbol(grid, power) * (k1 == grid.wavenumbers[0]) * (k2 == grid.wavenumbers[1])
    return -1j * k2 * amp, 1j * k1 * amp


def riesz_perp_velocity_hat(theta: SpectralField, alpha: float, variant=Variant.MQG):
    m1, m2 = velocity_symbols(theta.grid, alpha, variant)
    c = theta.coefficients
    return m1 * c, m2 * c


def riesz_perp_velocity(theta: SpectralField, alpha: float, variant=Variant.MQG) -> VectorField:
    """Velocity ``Lambda^{alpha-1} R_perp theta`` (MQG) or ``R_perp theta`` (QG)."""
    u1, u2 = riesz_perp_velocity_hat(theta, alpha, variant)
    g = theta.grid
    return VectorField(ScalarField(g, _ifft_real(u1)), ScalarField(g, _ifft_real(u2)))


def dealias_mask(grid: GridSpec) -> np.ndarray:
    return grid.supnorm_index <= grid.n / 3


def dealias(F: SpectralField) -> SpectralField:
    """2/3 rule: drop every mode with max(|xi1|, |xi2|) > n/3."""
    return F.with_coefficients(np.where(dealias_mask(F.grid), F.coefficients, 0))


def spectral_cutoff(F: SpectralField, radius: float) -> SpectralField:
    """Keep the modes with |k| <= radius (the ball projector J_radius)."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return F.with_coefficients(np.where(F.grid.kmag <= radius * (1 + 1e-12), F.coefficients, 0))


def advection_hat(u1_hat, u2_hat, theta_hat, grid: GridSpec, dealias_on: bool = True):
    """Coefficients of u . grad(theta), products formed on the grid."""
    n = grid.n
    k1, k2 = grid.odd_wavenumbers
    u1 = _ifft_real(u1_hat)
    u2 = _ifft_real(u2_hat)
    d1 = _ifft_real(1j * k1 * theta_hat)
    d2 = _ifft_real(1j * k2 * theta_hat)
    out = np.fft.fft2(u1 * d1 + u2 * d2) / n**2
    if dealias_on:
        out = np.where(dealias_mask(grid), out, 0)
    # u . grad(theta) = div(u theta) has no mean
    out[0, 0] = 0.0
    return out


def nonlinear_term(
    theta: SpectralField, alpha: float, variant=Variant.MQG, dealias_on: bool = True
) -> SpectralField:
    """Pseudo-spectral ``u . grad(theta)`` with u built from theta itself."""
    u1, u2 = riesz_perp_velocity_hat(theta, alpha, variant)
    return theta.with_coefficients(
        advection_hat(u1, u2, theta.coefficients, theta.grid, dealias_on)
    )


def nonlinear_term_oracle(theta: SpectralField, alpha: float, variant=Variant.MQG) -> SpectralField:
    """Direct frequency-pair convolution of u_hat with i k theta_hat.

    Works on the integer lattice without transforms; output modes outside the
    lattice are dropped, so nothing is aliased. Cost is O(n^4).
    """
    grid = theta.grid
    n = grid.n
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle refuses n={n} > {ORACLE_MAX_N}")
    variant = Variant(variant)
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    s = grid.scale
    nyq = n // 2
    ints = np.arange(-nyq + 1, nyq + 1)
    # centered layout: position p holds integer frequency ints[p]
    idx = ints % n
    th = theta.coefficients[np.ix_(idx, idx)]
    a1, a2 = np.meshgrid(ints, ints, indexing="ij")
    odd1 = np.where(a1 == nyq, 0, a1) * s
    odd2 = np.where(a2 == nyq, 0, a2) * s
    kk = np.hypot(a1 * s, a2 * s)
    power = alpha - 2 if variant is Variant.MQG else -1.0
    amp = np.zeros_like(kk)
    amp[kk > 0] = kk[kk > 0] ** power
    u1 = -1j * odd2 * amp * th
    u2 = 1j * odd1 * amp * th
    g1 = 1j * odd1 * th
    g2 = 1j * odd2 * th

    out = np.zeros((n, n), dtype=complex)
    for p in range(n):
        for q in range(n):
            if g1[p, q] == 0 and g2[p, q] == 0:
                continue
            # eta = ints[p], ints[q]; output xi = eta + zeta for every zeta
            e1, e2 = ints[p], ints[q]
            # zeta index z maps to xi index z + e1; keep 0 <= z + e1 < n
            z1 = slice(max(0, -e1), min(n, n - e1))
            z2 = slice(max(0, -e2), min(n, n - e2))
            x1 = slice(z1.start + e1, z1.stop + e1)
            x2 = slice(z2.start + e2, z2.stop + e2)
            out[x1, x2] += u1[z1, z2] * g1[p, q] + u2[z1, z2] * g2[p, q]
    result = np.zeros((n, n), dtype=complex)
    result[np.ix_(idx, idx)] = out
    return theta.with_coefficients(result)
