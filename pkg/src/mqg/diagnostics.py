"""Trajectory-level checks: energy identity, L^2 maximum principle, blowup
monitor, scaling invariance and high-frequency smoothing."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .ensemble import active_modes, rescale_space
from .grid import SpectralField, _ifft_real
from .littlewood_paley import PartitionSpec, block_energy_table, build_partition, sobolev_norm
from .solver import SolverConfig, Trajectory, _as_spectral, integrate
from .spectral import fractional_laplacian

ENERGY_FLOOR = 1e-300
SUSPECT_GROWTH = 10.0


def _energy_and_dissipation(traj: Trajectory):
    a = traj.config.alpha
    E = np.array([th.l2() ** 2 for th in traj.snapshots])
    D = np.array([fractional_laplacian(th, a / 2).l2() ** 2 for th in traj.snapshots])
    return E, D


def energy_identity_residual(traj: Trajectory) -> np.ndarray:
    """Relative residual of 1/2 dE/dt + ||Lambda^(alpha/2) theta||^2 = 0 at the
    interior snapshots, dE/dt by centered differences."""
    if len(traj.snapshots) < 3:
        raise ValueError("energy residual needs at least three snapshots")
    t = np.asarray(traj.times, dtype=float)
    E, D = _energy_and_dissipation(traj)
    dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    Dk = D[1:-1]
    return np.abs(dEdt + 2.0 * Dk) / np.maximum(Dk, ENERGY_FLOOR)


@dataclass
class MaximumPrincipleReport:
    passed: bool
    worst_violation: float
    worst_index: int | None


def verify_maximum_principle(traj: Trajectory, rtol: float = 1e-12) -> MaximumPrincipleReport:
    """Check that ||theta(t)||_2 never grows between consecutive snapshots."""
    l2 = np.array([th.l2() for th in traj.snapshots])
    if len(l2) < 2:
        return MaximumPrincipleReport(True, 0.0, None)
    prev = l2[:-1]
    growth = np.where(prev > 0, l2[1:] / np.where(prev > 0, prev, 1.0) - 1.0, l2[1:])
    worst = int(np.argmax(growth))
    violation = max(float(growth[worst]), 0.0)
    return MaximumPrincipleReport(violation <= rtol, violation, worst + 1 if violation > 0 else None)


@dataclass
class BlowupReport:
    times: np.ndarray
    integral: np.ndarray
    verdict: str
    exponent: float | None
    growth: float


def blowup_monitor(traj: Trajectory, window: int = 10) -> BlowupReport:
    """Running integral of ||theta||^2 in H^(1+alpha/2)-dot and a verdict.

    ``suspect`` when the run ended on a blowup signal or when the integral's
    increments grew by a factor >= 10 over the last ``window`` intervals.
    For failed runs the exponent of ||theta||_crit against (T* - t) is fitted
    on the last window; the lower bound predicts -1/2.
    """
    t = np.asarray(traj.times, dtype=float)
    if traj.records:
        integral = np.array([r.blowup_integral for r in traj.records])
        crit = np.array([r.hdot_crit for r in traj.records])
    else:
        a = traj.config.alpha
        crit = np.array([fractional_laplacian(th, 1 + a / 2).l2() for th in traj.snapshots])
        integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (crit[1:] ** 2 + crit[:-1] ** 2))])
    inc = np.diff(integral)[-window:]
    growth = 0.0
    if len(inc) >= 2 and inc[0] > 0:
        growth = float(inc[-1] / inc[0])
    failed = traj.blowup_step is not None
    exponent = None
    if failed and len(t) >= 2:
        t_star = (traj.blowup_step + 1) * traj.config.dt
        tail = slice(max(0, len(t) - window), len(t))
        tt, cc = t[tail], crit[tail]
        ok = (t_star - tt > 0) & (cc > 0)
        if ok.sum() >= 2:
            exponent = float(np.polyfit(np.log(t_star - tt[ok]), np.log(cc[ok]), 1)[0])
    verdict = "suspect" if failed or growth >= SUSPECT_GROWTH else "healthy"
    return BlowupReport(t, integral, verdict, exponent, growth)


@dataclass
class ScalingReport:
    lam: int
    times: np.ndarray
    differences: np.ndarray
    scale: float

    @property
    def max_relative_difference(self) -> float:
        if self.scale == 0:
            return float(self.differences.max(initial=0.0))
        return float(self.differences.max(initial=0.0) / self.scale)


def _truncated_rescale(F: SpectralField, lam: int) -> SpectralField:
    """f(lam x) keeping only the modes that still fit on the lattice."""
    keep = lam * F.grid.supnorm_index < F.grid.n // 2
    return rescale_space(F.with_coefficients(np.where(keep, F.coefficients, 0)), lam)


def scaling_check(theta0, lam: int, cfg: SolverConfig) -> ScalingReport:
    """Compare the run from theta0(lam x) with the rescaled run from theta0.

    ``cfg.t_end`` is the check time of the rescaled run; the reference run goes
    to lam^alpha * t_end with the same number of steps.
    """
    if lam < 2 or lam & (lam - 1):
        raise ValueError("lambda must be a power of two >= 2")
    theta0 = _as_spectral(theta0)
    g = theta0.grid
    active = active_modes(theta0.coefficients)
    if np.any(lam * g.supnorm_index[active] > g.n / 3):
        raise ValueError("lambda times the data's top frequency leaves the dealias band")
    factor = lam**cfg.alpha
    steps = math.ceil(round(factor * cfg.t_end / cfg.dt, 9))
    cfg_a = replace(cfg, dt=factor * cfg.t_end / steps, t_end=factor * cfg.t_end)
    cfg_b = replace(cfg, dt=cfg.t_end / steps, t_end=cfg.t_end)
    run_a = integrate(theta0, cfg_a)
    run_b = integrate(rescale_space(theta0, lam), cfg_b)
    diffs = []
    for a, b in zip(run_a.snapshots, run_b.snapshots):
        d = b.coefficients - _truncated_rescale(a, lam).coefficients
        diffs.append(np.abs(_ifft_real(d)).max())
    scale = float(np.abs(_ifft_real(run_b.snapshots[0].coefficients)).max())
    return ScalingReport(lam, np.asarray(run_b.times), np.asarray(diffs), scale)


@dataclass
class SmoothingReport:
    times: np.ndarray
    q_half: int
    tail: np.ndarray
    h2: np.ndarray

    @property
    def tail_ratios(self) -> np.ndarray:
        t0 = self.tail[0]
        if t0 == 0:
            return np.zeros_like(self.tail)
        return self.tail / t0


def tail_energy(F: SpectralField, p: PartitionSpec, q_half: int) -> float:
    return float(sum(w for q, _, w in block_energy_table(F, 1.0, p) if q >= q_half))


def smoothing_report(traj: Trajectory, p: PartitionSpec | None = None) -> SmoothingReport:
    """Weighted dyadic tail sum_{q >= q_half} 2^(2q) ||Delta_q theta||^2 and
    ||theta||_{H^2} per snapshot; q_half is the midpoint of the dyadic range."""
    if len(traj.snapshots) < 2:
        raise ValueError("smoothing report needs at least two snapshots")
    p = p or build_partition(traj.grid)
    q_half = (p.q_min + p.q_max) // 2
    tail = np.array([tail_energy(th, p, q_half) for th in traj.snapshots])
    h2 = np.array([sobolev_norm(th, 2.0, "inhomogeneous") for th in traj.snapshots])
    return SmoothingReport(np.asarray(traj.times), q_half, tail, h2)
