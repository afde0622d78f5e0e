"""Dyadic Littlewood-Paley blocks, Sobolev and Chemin-Lerner norms, and the
local-existence functional K_{r,s}.

The cutoff profile is ``phi(r) = 1`` on ``r <= 1``, ``0`` on ``r >= 2`` and the
``exp(-1/x)`` bridge in between. Block ``q`` is the multiplier
``phi(|k| / 2^(q+1)) - phi(|k| / 2^q)``, supported on ``2^q <= |k| <= 2^(q+2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .grid import FieldError, GridSpec, SpectralField
from .spectral import fractional_laplacian


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def profile(r):
    """Radial cutoff phi(r); vectorized."""
    r = np.asarray(r, dtype=float)
    a = _h(2.0 - r)
    b = _h(r - 1.0)
    with np.errstate(invalid="ignore"):
        mid = a / (a + b)
    out = np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, mid))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PartitionSpec:
    grid: GridSpec
    q_min: int
    q_max: int

    @property
    def q_range(self) -> range:
        return range(self.q_min, self.q_max + 1)

    def check_q(self, q: int, upper: int | None = None):
        upper = self.q_max if upper is None else upper
        if not self.q_min <= q <= upper:
            raise ValueError(f"q={q} outside [{self.q_min}, {upper}]")

    def low_symbol(self, q: int) -> np.ndarray:
        return profile(self.grid.kmag / 2.0**q)

    def block_symbol(self, q: int) -> np.ndarray:
        k = self.grid.kmag
        return profile(k / 2.0 ** (q + 1)) - profile(k / 2.0**q)

    def telescoped(self, k) -> np.ndarray:
        """Sum of the block symbols over the range, evaluated at |k|."""
        k = np.asarray(k, dtype=float)
        return sum(profile(k / 2.0 ** (q + 1)) - profile(k / 2.0**q) for q in self.q_range)


def build_partition(grid: GridSpec) -> PartitionSpec:
    """Dyadic range covering the lattice: S_{q_min} keeps only the mean and
    S_{q_max+1} is the identity on every lattice mode."""
    kmin = grid.scale
    q_min = math.floor(math.log2(kmin)) - 1
    q_max = math.ceil(math.log2(grid.max_kmag))
    return PartitionSpec(grid, q_min, q_max)


def s_q(f: SpectralField, p: PartitionSpec, q: int) -> SpectralField:
    p.check_q(q, p.q_max + 1)
    return f.with_coefficients(p.low_symbol(q) * f.coefficients)


def delta_q(f: SpectralField, p: PartitionSpec, q: int) -> SpectralField:
    p.check_q(q)
    return f.with_coefficients(p.block_symbol(q) * f.coefficients)


@dataclass
class LPDecomposition:
    partition: PartitionSpec
    low: SpectralField
    blocks: dict[int, SpectralField] = field(default_factory=dict)

    def reconstruct(self) -> SpectralField:
        out = self.low
        for b in self.blocks.values():
            out = out + b
        return out

    def block_norms(self) -> dict[int, float]:
        return {q: b.l2() for q, b in self.blocks.items()}


def decompose(f: SpectralField, p: PartitionSpec) -> LPDecomposition:
    return LPDecomposition(
        p, s_q(f, p, p.q_min), {q: delta_q(f, p, q) for q in p.q_range}
    )


def block_l2_norms(f: SpectralField, p: PartitionSpec) -> np.ndarray:
    """||Delta_q f||_2 for q in the partition range, as an array."""
    L = f.grid.domain_length
    a2 = np.abs(f.coefficients) ** 2
    return np.array([L * np.sqrt(np.sum(p.block_symbol(q) ** 2 * a2)) for q in p.q_range])


def sobolev_norm(
    f: SpectralField,
    sigma: float,
    kind: str = "homogeneous",
    method: str = "direct",
    partition: PartitionSpec | None = None,
) -> float:
    """H^sigma (inhomogeneous) or homogeneous H^sigma norm.

    ``direct`` sums the weighted lattice energy; ``lp`` uses the dyadic block
    form, which is only equivalent (not equal) to the direct one.
    """
    if kind not in ("homogeneous", "inhomogeneous"):
        raise ValueError(f"unknown kind {kind!r}")
    if kind == "homogeneous" and sigma < 0 and abs(f.mean) > 0:
        raise FieldError("homogeneous norm with sigma < 0 needs a mean-zero field")
    g = f.grid
    if method == "direct":
        if kind == "homogeneous":
            return fractional_laplacian(f, sigma).l2()
        w = (1.0 + g.kmag**2) ** sigma
        return float(g.domain_length * np.sqrt(np.sum(w * np.abs(f.coefficients) ** 2)))
    if method != "lp":
        raise ValueError(f"unknown method {method!r}")
    p = partition or build_partition(g)
    qs = np.array(p.q_range)
    norms = block_l2_norms(f, p)
    if kind == "homogeneous":
        return float(np.sqrt(np.sum(2.0 ** (2 * sigma * qs) * norms**2)))
    keep = qs >= 0
    low = s_q(f, p, 0).l2() if p.q_min <= 0 <= p.q_max + 1 else f.l2()
    return float(low + np.sqrt(np.sum(2.0 ** (2 * sigma * qs[keep]) * norms[keep] ** 2)))


def block_energy_table(f: SpectralField, sigma: float, p: PartitionSpec):
    """Rows (q, ||Delta_q f||_2, 2^(2 sigma q) ||Delta_q f||_2^2)."""
    norms = block_l2_norms(f, p)
    return [(q, float(b), float(2.0 ** (2 * sigma * q) * b * b)) for q, b in zip(p.q_range, norms)]


def chemin_lerner_norm(traj, r: float, s: float, p: PartitionSpec | None = None) -> float:
    """Discrete ``L~^r_T H^s`` norm: time norm per block, then l^2 over q.

    The time norm is the trapezoid rule on the saved snapshots, or the max
    over snapshots when ``r`` is infinite.
    """
    snaps = traj.snapshots
    times = np.asarray(traj.times, dtype=float)
    if len(snaps) < 2 and not np.isinf(r):
        raise ValueError("need at least two snapshots for a finite time exponent")
    p = p or build_partition(snaps[0].grid)
    table = np.array([block_l2_norms(th, p) for th in snaps])  # (time, q)
    if np.isinf(r):
        per_q = table.max(axis=0)
    else:
        per_q = np.trapezoid(table**r, times, axis=0) ** (1.0 / r)
    qs = np.array(p.q_range)
    return float(np.sqrt(np.sum(2.0 ** (2 * s * qs) * per_q**2)))


def k_weights(qs, alpha: float, nu: float, r: float, T: float) -> np.ndarray:
    qs = np.asarray(qs, dtype=float)
    if np.isinf(r):
        return np.ones_like(qs)
    rate = nu * r * 2.0 ** (alpha * qs)
    return (-np.expm1(-rate * T) / (nu * r)) ** (1.0 / r)


def k_functional(
    theta0: SpectralField,
    alpha: float,
    nu: float,
    r: float,
    s: float,
    T: float,
    p: PartitionSpec | None = None,
) -> float:
    """K_{r,s}(theta0, T) = || w_q(T) 2^(sq) ||Delta_q theta0||_2 ||_{l^2(q)}."""
    if nu <= 0:
        raise ValueError("nu must be positive")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if r < 2:
        raise ValueError("r must be >= 2")
    p = p or build_partition(theta0.grid)
    qs = np.array(p.q_range)
    terms = k_weights(qs, alpha, nu, r, T) * 2.0 ** (s * qs) * block_l2_norms(theta0, p)
    return float(np.sqrt(np.sum(terms**2)))


@dataclass
class KEstimate:
    nu: float
    r: float
    s: float
    T_grid: np.ndarray
    K_values: np.ndarray

    def rows(self):
        return [(float(t), float(k)) for t, k in zip(self.T_grid, self.K_values)]


def k_curve(theta0, alpha, nu, r, s, T_grid, p=None) -> KEstimate:
    T_grid = np.asarray(T_grid, dtype=float)
    vals = np.array([k_functional(theta0, alpha, nu, r, s, T, p) for T in T_grid])
    return KEstimate(nu, r, s, T_grid, vals)


def k_limit(theta0, alpha, nu, s=1.0, p=None) -> float:
    """T -> infinity limit of K_{2,s}: (2 nu)^(-1/2) times the LP H^s norm."""
    p = p or build_partition(theta0.grid)
    return sobolev_norm(theta0, s, "homogeneous", "lp", p) / math.sqrt(2 * nu)


def existence_time_estimate(
    theta0: SpectralField,
    alpha: float,
    nu: float,
    epsilon: float,
    p: PartitionSpec | None = None,
    xtol: float = 1e-14,
) -> float:
    """Largest T with K_{2,1}(theta0, T) <= epsilon; ``inf`` if never exceeded."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    p = p or build_partition(theta0.grid)

    def K(T):
        return k_functional(theta0, alpha, nu, 2.0, 1.0, T, p)

    if k_limit(theta0, alpha, nu, 1.0, p) <= epsilon:
        return math.inf
    lo, hi = 0.0, 1.0
    while K(hi) <= epsilon:
        lo, hi = hi, 2.0 * hi
    return brentq(lambda T: K(T) - epsilon, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
