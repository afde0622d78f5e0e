"""Periodic grid geometry and the physical/Fourier field containers.

Coefficients are stored in numpy FFT order on an ``(n, n)`` array; axis 0 is
``x1`` and axis 1 is ``x2``. The integer frequency lattice is
``{-n/2+1, ..., n/2}`` per axis, so the Nyquist index carries ``+n/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

HERMITIAN_RTOL = 1e-12


class FieldError(ValueError):
    """Raised when a field violates one of its invariants."""


@dataclass(frozen=True)
class GridSpec:
    """Square periodic grid with ``n`` points per side."""

    n: int
    domain_length: float = 2 * np.pi

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {n!r}")
        if not np.isfinite(self.domain_length) or self.domain_length <= 0:
            raise ValueError(f"domain_length must be positive, got {self.domain_length!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "domain_length", float(self.domain_length))

    @property
    def dx(self) -> float:
        return self.domain_length / self.n

    @property
    def scale(self) -> float:
        """Physical wavenumber of the unit lattice frequency, 2*pi/L."""
        return 2 * np.pi / self.domain_length

    @cached_property
    def lattice(self) -> tuple[np.ndarray, np.ndarray]:
        """Integer frequencies (xi1, xi2), broadcast to ``(n, n)``."""
        m = np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)
        m[self.n // 2] = self.n // 2
        return np.meshgrid(m, m, indexing="ij")

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical wavenumbers (k1, k2) as floats."""
        xi1, xi2 = self.lattice
        return self.scale * xi1.astype(float), self.scale * xi2.astype(float)

    @cached_property
    def odd_wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers for odd symbols (derivatives, Riesz); Nyquist zeroed."""
        xi1, xi2 = self.lattice
        k1, k2 = self.wavenumbers
        nyq = self.n // 2
        return np.where(xi1 == nyq, 0.0, k1), np.where(xi2 == nyq, 0.0, k2)

    @cached_property
    def kmag(self) -> np.ndarray:
        k1, k2 = self.wavenumbers
        return np.hypot(k1, k2)

    @cached_property
    def supnorm_index(self) -> np.ndarray:
        """max(|xi1|, |xi2|) on the integer lattice."""
        xi1, xi2 = self.lattice
        return np.maximum(np.abs(xi1), np.abs(xi2))

    @property
    def max_kmag(self) -> float:
        return float(self.kmag.max())

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.dx * np.arange(self.n)
        return np.meshgrid(x, x, indexing="ij")

    def mode_index(self, xi1: int, xi2: int) -> tuple[int, int]:
        """Array index of the integer frequency (xi1, xi2)."""
        return xi1 % self.n, xi2 % self.n


def _conjugate_partner(c: np.ndarray) -> np.ndarray:
    """c[-xi] with indices taken modulo n."""
    return np.roll(c[::-1, ::-1], 1, axis=(0, 1))


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.grid.n, self.grid.n):
            raise FieldError(f"expected {(self.grid.n,) * 2} samples, got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise FieldError("samples must be finite")
        object.__setattr__(self, "samples", s)

    def l2(self) -> float:
        return float(self.grid.dx * np.sqrt(np.sum(self.samples**2)))

    def lp(self, p: float) -> float:
        """Grid-quadrature L^p norm, (dx^2 sum |f|^p)^(1/p)."""
        a = np.abs(self.samples)
        if np.isinf(p):
            return float(a.max())
        return float((self.grid.dx**2 * np.sum(a**p)) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients c_xi of a real field, true (1/n^2) normalization."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (self.grid.n, self.grid.n):
            raise FieldError(f"expected {(self.grid.n,) * 2} coefficients, got {c.shape}")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralField:
        return cls(grid, np.zeros((grid.n, grid.n), dtype=complex))

    @classmethod
    def from_modes(cls, grid: GridSpec, modes: dict[tuple[int, int], complex]) -> SpectralField:
        """Build from ``{(xi1, xi2): c}``; partners are not filled in."""
        c = np.zeros((grid.n, grid.n), dtype=complex)
        for (a, b), v in modes.items():
            c[grid.mode_index(a, b)] = v
        return cls(grid, c)

    def hermitian_defect(self) -> float:
        c = self.coefficients
        scale = np.abs(c).max()
        if scale == 0:
            return 0.0
        return float(np.abs(c - np.conj(_conjugate_partner(c))).max() / scale)

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return self.hermitian_defect() <= rtol

    @property
    def mean(self) -> complex:
        return complex(self.coefficients[0, 0])

    def l2(self) -> float:
        """Physical L^2 norm via Parseval."""
        return float(self.grid.domain_length * np.sqrt(np.sum(np.abs(self.coefficients) ** 2)))

    def with_coefficients(self, c: np.ndarray) -> SpectralField:
        return SpectralField(self.grid, c)

    def __add__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other: SpectralField) -> SpectralField:
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, a: float) -> SpectralField:
        return SpectralField(self.grid, a * self.coefficients)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    u1: ScalarField
    u2: ScalarField

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise FieldError("vector components live on different grids")

    @property
    def grid(self) -> GridSpec:
        return self.u1.grid

    def max_speed(self) -> float:
        return float(np.sqrt(self.u1.samples**2 + self.u2.samples**2).max())


def hermitian_part(c: np.ndarray) -> np.ndarray:
    """Project a coefficient array onto the real-field subspace."""
    return 0.5 * (c + np.conj(_conjugate_partner(c)))


def forward_transform(f: ScalarField) -> SpectralField:
    n = f.grid.n
    return SpectralField(f.grid, np.fft.fft2(f.samples) / n**2)


def _ifft_real(c: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    return np.fft.ifft2(c).real * n**2


def inverse_transform(F: SpectralField, rtol: float = HERMITIAN_RTOL) -> ScalarField:
    """Synthesize samples; refuses coefficient sets that are not Hermitian."""
    defect = F.hermitian_defect()
    if defect > rtol:
        raise FieldError(f"coefficients are not Hermitian (relative defect {defect:.3e})")
    n = F.grid.n
    z = np.fft.ifft2(F.coefficients) * n**2
    scale = max(np.abs(z).max(), np.finfo(float).tiny)
    if np.abs(z.imag).max() > 1e-10 * scale:
        raise FieldError("inverse transform left a non-negligible imaginary part")
    return ScalarField(F.grid, z.real)
