"""Integrating-factor RK4 time stepping for the MQG/QG dynamics, the
frozen-velocity linear problem, and the Picard iteration built on it."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .grid import GridSpec, ScalarField, SpectralField, VectorField, forward_transform
from .spectral import (
    Variant,
    _power_symbol,
    advection_hat,
    dealias_mask,
    riesz_perp_velocity_hat,
    spectral_cutoff,
)

log = logging.getLogger(__name__)

MEAN_TOL = 1e-12


class BlowupError(RuntimeError):
    """A step produced non-finite values; ``trajectory`` holds the healthy part."""

    def __init__(self, step_index: int, t: float, trajectory=None):
        super().__init__(f"non-finite field at step {step_index} (t={t:.6g})")
        self.step_index = step_index
        self.t = t
        self.trajectory = trajectory


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.5
    dt: float = 1e-3
    t_end: float = 1.0
    variant: Variant = Variant.MQG
    dealias_on: bool = True
    snapshot_every: int = 10
    integrator: str = "IFRK4"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 < self.dt < self.t_end:
            raise ValueError(f"need 0 < dt < t_end, got dt={self.dt}, t_end={self.t_end}")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        if self.integrator != "IFRK4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")

    @property
    def n_steps(self) -> int:
        m = round(self.t_end / self.dt)
        if abs(m * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ValueError("t_end must be an integer multiple of dt")
        return m

    @property
    def classical_limit(self) -> bool:
        """alpha = 1 is admitted but lies outside the open interval (0, 1)."""
        return self.alpha == 1


@dataclass
class DiagnosticsRecord:
    t: float
    l2: float
    hdot_half_alpha: float
    hdot_one: float
    hdot_crit: float
    energy_residual: float = math.nan
    blowup_integral: float = 0.0

    FIELDS = (
        "t",
        "l2",
        "hdot_half_alpha",
        "hdot_one",
        "hdot_crit",
        "energy_residual",
        "blowup_integral",
    )

    def row(self):
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class Trajectory:
    config: SolverConfig
    times: list[float] = field(default_factory=list)
    snapshots: list[SpectralField] = field(default_factory=list)
    records: list[DiagnosticsRecord] = field(default_factory=list)
    blowup_step: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def grid(self) -> GridSpec:
        return self.snapshots[0].grid

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1]

    def spacing(self) -> float:
        return self.config.dt * self.config.snapshot_every


def _norms(c: np.ndarray, grid: GridSpec, alpha: float):
    L = grid.domain_length
    a2 = np.abs(c) ** 2
    k = grid.kmag
    l2 = L * math.sqrt(a2.sum())
    half = L * math.sqrt(np.sum(_power_symbol(grid, alpha) * a2))
    one = L * math.sqrt(np.sum(k**2 * a2))
    crit = L * math.sqrt(np.sum(k ** (2 + alpha) * a2))
    return l2, half, one, crit


class _Stepper:
    """IFRK4 for d/dt c = -|k|^alpha c + g(c, t) with a cached exact factor."""

    def __init__(self, grid: GridSpec, alpha: float, dt: float, rhs: Callable):
        lin = _power_symbol(grid, alpha)
        lin[0, 0] = 0.0
        self.E = np.exp(-lin * dt)
        self.E2 = np.exp(-lin * dt / 2)
        self.dt = dt
        self.rhs = rhs

    def __call__(self, c: np.ndarray, t: float) -> np.ndarray:
        h, E, E2, g = self.dt, self.E, self.E2, self.rhs
        k1 = g(c, t)
        k2 = g(E2 * (c + 0.5 * h * k1), t + 0.5 * h)
        k3 = g(E2 * c + 0.5 * h * k2, t + 0.5 * h)
        k4 = g(E * c + h * E2 * k3, t + h)
        return E * c + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def _nonlinear_rhs(grid: GridSpec, cfg: SolverConfig):
    def g(c, t):
        u1, u2 = riesz_perp_velocity_hat(SpectralField(grid, c), cfg.alpha, cfg.variant)
        return -advection_hat(u1, u2, c, grid, cfg.dealias_on)

    return g


def _check_mean(c: np.ndarray):
    scale = np.abs(c).max()
    if scale > 0 and abs(c[0, 0]) > MEAN_TOL * scale:
        raise ValueError("the solver works in the mean-zero subspace; theta has a nonzero mean")


def step(theta: SpectralField, cfg: SolverConfig, step_index: int = 0) -> SpectralField:
    """One IFRK4 step of size ``cfg.dt`` for the nonlinear equation."""
    _check_mean(theta.coefficients)
    stepper = _Stepper(theta.grid, cfg.alpha, cfg.dt, _nonlinear_rhs(theta.grid, cfg))
    with np.errstate(over="ignore", invalid="ignore"):
        c = stepper(theta.coefficients, 0.0)
    if not np.all(np.isfinite(c)):
        raise BlowupError(step_index, cfg.dt * (step_index + 1))
    c[0, 0] = 0.0
    return theta.with_coefficients(c)


def _as_spectral(theta0) -> SpectralField:
    if isinstance(theta0, ScalarField):
        return forward_transform(theta0)
    return theta0


def _prepare(theta0, cfg: SolverConfig) -> np.ndarray:
    c = _as_spectral(theta0).coefficients.copy()
    _check_mean(c)
    c[0, 0] = 0.0
    if cfg.dealias_on:
        # skew symmetry of the advection term needs theta inside the band
        c = np.where(dealias_mask(_as_spectral(theta0).grid), c, 0)
    return c


def _run(grid: GridSpec, c: np.ndarray, cfg: SolverConfig, rhs, cfl_speed=None) -> Trajectory:
    stepper = _Stepper(grid, cfg.alpha, cfg.dt, rhs)
    n_steps = cfg.n_steps
    traj = Trajectory(cfg)
    if cfg.classical_limit:
        traj.metadata["alpha_classical_limit"] = True
    blowup_integral = 0.0
    norms = _norms(c, grid, cfg.alpha)
    prev_crit2 = norms[3] ** 2
    warned = False

    def save(t, c, norms, bi):
        traj.times.append(t)
        traj.snapshots.append(SpectralField(grid, c.copy()))
        traj.records.append(DiagnosticsRecord(t, *norms, blowup_integral=bi))

    save(0.0, c, norms, 0.0)
    for i in range(n_steps):
        t = i * cfg.dt
        if cfl_speed is not None and not warned and i % cfg.snapshot_every == 0:
            speed = cfl_speed(c, t)
            if speed > 0 and cfg.dt > 0.5 * grid.dx / speed:
                warnings.warn(
                    f"dt={cfg.dt:g} exceeds 0.5*dx/max|u| = {0.5 * grid.dx / speed:.3g}",
                    RuntimeWarning,
                    stacklevel=3,
                )
                warned = True
        with np.errstate(over="ignore", invalid="ignore"):
            c_new = stepper(c, t)
            healthy = np.all(np.isfinite(c_new))
            if healthy:
                new_norms = _norms(c_new, grid, cfg.alpha)
                healthy = all(math.isfinite(v) for v in new_norms)
        if not healthy:
            traj.blowup_step = i
            if traj.times[-1] != t:
                save(t, c, norms, blowup_integral)
            _fill_energy_residuals(traj)
            log.warning("blowup signal at step %d (t=%g)", i, t + cfg.dt)
            raise BlowupError(i, t + cfg.dt, traj)
        c_new[0, 0] = 0.0
        c = c_new
        norms = new_norms
        crit2 = norms[3] ** 2
        blowup_integral += 0.5 * cfg.dt * (prev_crit2 + crit2)
        prev_crit2 = crit2
        last = i + 1 == n_steps
        if (i + 1) % cfg.snapshot_every == 0 or last:
            save((i + 1) * cfg.dt, c, norms, blowup_integral)
    _fill_energy_residuals(traj)
    return traj


def _fill_energy_residuals(traj: Trajectory):
    from .diagnostics import energy_identity_residual

    if len(traj.snapshots) >= 3:
        res = energy_identity_residual(traj)
        for rec, r in zip(traj.records[1:-1], res):
            rec.energy_residual = float(r)


def _speed_fn(grid: GridSpec, velocity_hat):
    def speed(c, t):
        u1, u2 = velocity_hat(c, t)
        return float(np.sqrt(np.fft.ifft2(u1).real ** 2 + np.fft.ifft2(u2).real ** 2).max()) * grid.n**2

    return speed


def integrate(theta0, cfg: SolverConfig) -> Trajectory:
    """Run the nonlinear dynamics from ``theta0`` to ``cfg.t_end``.

    Raises BlowupError (carrying the healthy part of the trajectory) if any
    step turns non-finite.
    """
    grid = _as_spectral(theta0).grid
    c = _prepare(theta0, cfg)

    def vel(c, t):
        return riesz_perp_velocity_hat(SpectralField(grid, c), cfg.alpha, cfg.variant)

    return _run(grid, c, cfg, _nonlinear_rhs(grid, cfg), _speed_fn(grid, vel))


@dataclass
class VelocityTrack:
    """Divergence-free velocity samples u(t_i), interpolated linearly in time."""

    times: np.ndarray
    u1_hat: np.ndarray  # (m, n, n)
    u2_hat: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) < 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("velocity sample times must be increasing")

    @classmethod
    def from_fields(cls, times, fields: list[VectorField]) -> VelocityTrack:
        n = fields[0].grid.n
        u1 = np.array([np.fft.fft2(f.u1.samples) / n**2 for f in fields])
        u2 = np.array([np.fft.fft2(f.u2.samples) / n**2 for f in fields])
        return cls(times, u1, u2)

    @classmethod
    def from_trajectory(cls, traj: Trajectory, alpha=None, variant=None) -> VelocityTrack:
        cfg = traj.config
        alpha = cfg.alpha if alpha is None else alpha
        variant = cfg.variant if variant is None else variant
        pairs = [riesz_perp_velocity_hat(th, alpha, variant) for th in traj.snapshots]
        return cls(traj.times, np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))

    @classmethod
    def zero(cls, grid: GridSpec, t_end: float) -> VelocityTrack:
        z = np.zeros((2, grid.n, grid.n), dtype=complex)
        return cls(np.array([0.0, t_end]), z, z.copy())

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def at(self, t: float):
        ts = self.times
        if len(ts) == 1:
            return self.u1_hat[0], self.u2_hat[0]
        j = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
        w = (t - ts[j]) / (ts[j + 1] - ts[j])
        w = min(max(w, 0.0), 1.0)
        return (
            (1 - w) * self.u1_hat[j] + w * self.u1_hat[j + 1],
            (1 - w) * self.u2_hat[j] + w * self.u2_hat[j + 1],
        )


def linear_advect_diffuse(theta0, velocity: VelocityTrack, cfg: SolverConfig) -> Trajectory:
    """Solve d_t theta + Lambda^alpha theta + u . grad(theta) = 0 for given u."""
    if velocity.t_max < cfg.t_end * (1 - 1e-12):
        raise ValueError(
            f"velocity samples end at t={velocity.t_max:g} before t_end={cfg.t_end:g}"
        )
    grid = _as_spectral(theta0).grid
    c = _prepare(theta0, cfg)

    def rhs(c, t):
        u1, u2 = velocity.at(t)
        return -advection_hat(u1, u2, c, grid, cfg.dealias_on)

    return _run(grid, c, cfg, rhs, _speed_fn(grid, lambda c, t: velocity.at(t)))


@dataclass
class PicardReport:
    increments: list[float]
    ratios: list[float]
    radii: list[float]
    converged: bool
    iterations: int
    final: Trajectory | None = field(default=None, repr=False)

    @property
    def contractive(self) -> bool:
        return all(r < 1 for r in self.ratios)

    def rows(self):
        out = []
        for k, d in enumerate(self.increments):
            ratio = self.ratios[k - 1] if k >= 1 else math.nan
            out.append((k, self.radii[k], d, ratio))
        return out


def _sup_diff(a: Trajectory, b: Trajectory) -> float:
    return max((x - y).l2() for x, y in zip(a.snapshots, b.snapshots))


def picard_iterate(theta0, cfg: SolverConfig, k_max: int = 8, tol: float = 1e-10) -> PicardReport:
    """Picard scheme: theta^(0) = 0 and theta^(k+1) solves the linear problem
    with velocity built from theta^(k) and data J_{2^(k+1)} theta0.

    Increments d_k = sup_t ||theta^(k+1)(t) - theta^(k)(t)||_2.
    """
    theta0 = _as_spectral(theta0)
    grid = theta0.grid
    inner = replace(cfg, snapshot_every=1)
    cap = grid.max_kmag
    current = linear_advect_diffuse(theta0 * 0.0, VelocityTrack.zero(grid, cfg.t_end), inner)
    increments, radii = [], []
    converged = False
    for k in range(k_max):
        radius = min(2.0 ** (k + 1), cap)
        velocity = VelocityTrack.from_trajectory(current)
        nxt = linear_advect_diffuse(spectral_cutoff(theta0, radius), velocity, inner)
        d = _sup_diff(nxt, current)
        increments.append(d)
        radii.append(radius)
        current = nxt
        if d <= tol:
            converged = True
            break
    ratios = [b / a if a > 0 else math.nan for a, b in zip(increments, increments[1:])]
    return PicardReport(increments, ratios, radii, converged, len(increments), current)
