"""Ensemble probes of the harmonic-analysis inequalities.

Each probe reports the ratio of the left-hand side to the right-hand scaling
expression with the unknown constant stripped. These are scaling checks on
the lattice, not estimates of sharp constants.
"""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import random_field
from .grid import GridSpec, ScalarField, SpectralField, _ifft_real
from .littlewood_paley import build_partition, delta_q
from .spectral import fractional_laplacian, riesz_perp_velocity_hat

PROBES = ("bernstein_lower", "bernstein_upper", "riesz_lp", "product", "commutator")
MIN_ENSEMBLE = 10


@dataclass
class ProbeReport:
    inequality: str
    ensemble_size: int
    seeds: list[int]
    qs: list[int | None]
    measured: np.ndarray
    threshold: float
    params: dict = field(default_factory=dict)
    bracket: tuple[float, float] | None = None

    @property
    def summary(self) -> dict[str, float]:
        m = self.measured
        return {"min": float(m.min()), "median": float(np.median(m)), "max": float(m.max())}

    @property
    def spread(self) -> float:
        lo = self.measured.min()
        return math.inf if lo <= 0 else float(self.measured.max() / lo)

    @property
    def verdict(self) -> bool:
        """True when the ratios are bounded at the threshold."""
        m = self.measured
        if m.size == 0 or not np.all(np.isfinite(m)):
            return False
        if self.bracket is not None:
            lo, hi = self.bracket
            return bool(np.all((m >= lo) & (m <= hi)))
        return self.spread <= self.threshold

    def rows(self):
        return [(s, q, float(r)) for s, q, r in zip(self.seeds, self.qs, self.measured)]


def _phys(c: np.ndarray, grid: GridSpec) -> ScalarField:
    return ScalarField(grid, _ifft_real(c))


def _vector_lp(u1: np.ndarray, u2: np.ndarray, grid: GridSpec, p: float) -> float:
    mag = np.hypot(_ifft_real(u1), _ifft_real(u2))
    return ScalarField(grid, mag).lp(p)


def _hdot(F: SpectralField, s: float) -> float:
    return fractional_laplacian(F, s).l2()


def _product_hat(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.fft.fft2(_ifft_real(a) * _ifft_real(b)) / n**2


def _bernstein_lower(grid, seeds, gamma=0.25, q_values=range(-1, 5), decay=1.0):
    p = build_partition(grid)
    out = []
    for seed in seeds:
        g = random_field(grid, seed, decay)
        for q in q_values:
            f = delta_q(g, p, q)
            base = f.l2()
            if base == 0:
                continue
            out.append((seed, q, fractional_laplacian(f, gamma).l2() / (2.0 ** (gamma * q) * base)))
    return out, (2.0 ** (-2 * gamma), 2.0 ** (2 * gamma))


def _bernstein_upper(grid, seeds, gamma=0.25, beta=(1, 0), p=2.0, r=math.inf, q_values=range(0, 5), decay=1.0):
    if not 1 <= p <= r:
        raise ValueError("need 1 <= p <= r")
    part = build_partition(grid)
    k1, k2 = grid.odd_wavenumbers
    deriv = (1j * k1) ** beta[0] * (1j * k2) ** beta[1]
    order = beta[0] + beta[1]
    out = []
    for seed in seeds:
        g = random_field(grid, seed, decay)
        for q in q_values:
            f = delta_q(g, part, q)
            lhs = _phys(deriv * fractional_laplacian(f, gamma).coefficients, grid).lp(r)
            base = _phys(f.coefficients, grid).lp(p)
            if base == 0:
                continue
            scale = 2.0 ** (q * (gamma + order) + 2 * q * (1 / p - (0 if math.isinf(r) else 1 / r)))
            out.append((seed, q, lhs / (scale * base)))
    return out, None


def riesz_lp_ratio(f: SpectralField, gamma: float) -> float:
    """||Lambda^(gamma-1) R_perp f||_{2/gamma} / ||f||_2."""
    u1, u2 = riesz_perp_velocity_hat(f, gamma)
    return _vector_lp(u1, u2, f.grid, 2.0 / gamma) / f.l2()


def _riesz_lp(grid, seeds, gamma=0.5, decay=2.0):
    if not 0 < gamma < 1:
        raise ValueError("riesz_lp needs gamma in (0, 1)")
    return [(seed, None, riesz_lp_ratio(random_field(grid, seed, decay), gamma)) for seed in seeds], None


def product_ratio(f: SpectralField, g: SpectralField, sigma1: float, sigma2: float) -> float:
    """||fg||_{H^sigma} over ||f||_{H^sigma1} ||g||_{H^sigma2}, sigma = sigma1 + sigma2 - 1."""
    sigma = sigma1 + sigma2 - 1
    fg = _product_hat(f.coefficients, g.coefficients, f.grid.n)
    if sigma < 0:
        fg[0, 0] = 0.0
    return _hdot(SpectralField(f.grid, fg), sigma) / (_hdot(f, sigma1) * _hdot(g, sigma2))


def _product(grid, seeds, sigma1=0.5, sigma2=0.5, decay=2.0):
    if not (sigma1 < 1 and sigma2 < 1 and sigma1 + sigma2 > 0):
        raise ValueError("product law needs sigma1, sigma2 < 1 and sigma1 + sigma2 > 0")
    band = grid.n // 4 - 1  # products stay on the lattice without aliasing
    out = []
    for seed in seeds:
        f = random_field(grid, seed, decay, band=band)
        g = random_field(grid, seed + 10_000, decay, band=band)
        out.append((seed, None, product_ratio(f, g, sigma1, sigma2)))
    return out, None


def commutator_ratio(f: SpectralField, g: SpectralField, q: int, alpha: float, s: float, p=None):
    """||[Delta_q, u] grad g||_2 over its scaling, u = Lambda^(alpha-1) R_perp f."""
    grid = f.grid
    n = grid.n
    p = p or build_partition(grid)
    k1, k2 = grid.odd_wavenumbers
    u1, u2 = riesz_perp_velocity_hat(f, alpha)

    def adv(c):
        return _product_hat(u1, 1j * k1 * c, n) + _product_hat(u2, 1j * k2 * c, n)

    sym = p.block_symbol(q)
    comm = sym * adv(g.coefficients) - adv(sym * g.coefficients)
    lhs = SpectralField(grid, comm).l2()
    crit = 1 + alpha / 2
    rhs = 2.0 ** (-q * (s - alpha / 2)) * (_hdot(f, crit) * _hdot(g, s) + _hdot(g, crit) * _hdot(f, s))
    return lhs / rhs


def _commutator(grid, seeds, alpha=0.5, s=1.0, q_values=range(0, 5), decay=2.0):
    if not 0 < alpha < 1 or s < 0:
        raise ValueError("commutator probe needs alpha in (0, 1) and s >= 0")
    p = build_partition(grid)
    band = grid.n // 4 - 1
    out = []
    for seed in seeds:
        f = random_field(grid, seed, decay, band=band)
        g = random_field(grid, seed + 10_000, decay, band=band)
        for q in q_values:
            out.append((seed, q, commutator_ratio(f, g, q, alpha, s, p)))
    return out, None


_DISPATCH = {
    "bernstein_lower": _bernstein_lower,
    "bernstein_upper": _bernstein_upper,
    "riesz_lp": _riesz_lp,
    "product": _product,
    "commutator": _commutator,
}


def probe_inequality(
    name: str,
    grid: GridSpec,
    ensemble_size: int = 20,
    seed: int = 0,
    threshold: float = 1e3,
    **params,
) -> ProbeReport:
    """Run probe ``name`` over ``ensemble_size`` seeded random fields.

    Sample ``i`` uses seed ``seed + i``. The verdict is the annulus bracket for
    ``bernstein_lower`` and ``max/min <= threshold`` for the others.
    """
    if name not in _DISPATCH:
        raise ValueError(f"unknown probe {name!r}; choose from {PROBES}")
    if ensemble_size < MIN_ENSEMBLE:
        raise ValueError(f"ensemble_size must be >= {MIN_ENSEMBLE}")
    seeds = [seed + i for i in range(ensemble_size)]
    fn = _DISPATCH[name]
    try:
        inspect.signature(fn).bind(grid, seeds, **params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from None
    rows, bracket = fn(grid, seeds, **params)
    return ProbeReport(
        name,
        ensemble_size,
        [r[0] for r in rows],
        [r[1] for r in rows],
        np.array([r[2] for r in rows]),
        threshold,
        dict(params),
        bracket,
    )
