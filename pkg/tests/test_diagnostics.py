import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from mqg.diagnostics import (
    blowup_monitor,
    energy_identity_residual,
    scaling_check,
    smoothing_report,
    verify_maximum_principle,
)
from mqg.ensemble import random_field, rescale_space
from mqg.grid import GridSpec, SpectralField
from mqg.littlewood_paley import build_partition
from mqg.solver import BlowupError, SolverConfig, Trajectory, VelocityTrack, integrate, linear_advect_diffuse


def sine(g, k=1):
    return SpectralField.from_modes(g, {(k, 0): -0.5j, (-k, 0): 0.5j})


@pytest.fixture(scope="module")
def decay_run():
    cfg = SolverConfig(alpha=0.5, dt=1e-3, t_end=1.0, snapshot_every=10)
    return integrate(sine(GridSpec(32)), cfg)


class TestEnergyResidual:
    def test_pure_decay(self, decay_run):
        res = energy_identity_residual(decay_run)
        assert len(res) == len(decay_run.snapshots) - 2
        assert res.max() <= 2e-4

    def test_zero_run(self):
        traj = integrate(SpectralField.zeros(GridSpec(16)), SolverConfig(dt=0.01, t_end=0.1, snapshot_every=1))
        assert np.all(energy_identity_residual(traj) == 0)

    def test_matches_closed_form_difference(self, decay_run):
        # E = 2 pi^2 e^{-2t}; centered difference of e^{-2t} gives sinh(2h)/(2h) factor
        h = 0.01
        expect = abs(math.sinh(2 * h) / (2 * h) - 1) * 2
        assert energy_identity_residual(decay_run)[0] == pytest.approx(expect, rel=1e-6)

    def test_needs_three(self):
        g = GridSpec(16)
        traj = Trajectory(SolverConfig(dt=0.1, t_end=1.0), [0.0, 0.1], [sine(g)] * 2, [])
        with pytest.raises(ValueError):
            energy_identity_residual(traj)

    def test_second_order(self):
        g = GridSpec(32)
        theta0 = random_field(g, 2, h1_norm=1.0)
        r = []
        for every in (20, 10):
            traj = integrate(theta0, SolverConfig(dt=1e-3, t_end=0.2, snapshot_every=every))
            r.append(energy_identity_residual(traj).max())
        assert 3 <= r[0] / r[1] <= 5


class TestMaximumPrinciple:
    def test_pure_decay(self, decay_run):
        rep = verify_maximum_principle(decay_run)
        assert rep.passed and rep.worst_violation == 0 and rep.worst_index is None

    def test_time_reversed(self, decay_run):
        rev = replace(decay_run, snapshots=decay_run.snapshots[::-1])
        rep = verify_maximum_principle(rev)
        assert not rep.passed and rep.worst_violation > 0

    def test_random_run(self):
        g = GridSpec(32)
        traj = integrate(random_field(g, 1, h1_norm=1.0), SolverConfig(dt=1e-3, t_end=0.1, snapshot_every=2))
        assert verify_maximum_principle(traj).passed


class TestBlowupMonitor:
    def test_pure_decay_closed_form(self, decay_run):
        rep = blowup_monitor(decay_run)
        t = np.asarray(decay_run.times)
        closed = 2 * math.pi**2 * (1 - np.exp(-2 * t)) / 2
        dt = decay_run.config.dt
        assert np.all(np.abs(rep.integral - closed) <= dt**2 * t * closed.max() + 1e-15)
        assert rep.verdict == "healthy"

    def test_zero_run(self):
        traj = integrate(SpectralField.zeros(GridSpec(16)), SolverConfig(dt=0.01, t_end=0.1, snapshot_every=1))
        rep = blowup_monitor(traj)
        assert np.all(rep.integral == 0) and rep.verdict == "healthy"

    def test_failed_run_suspect(self):
        g = GridSpec(32)
        F = random_field(g, 1, decay=2.0, h1_norm=1.0) * 1000.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(BlowupError) as info:
                integrate(F, SolverConfig(dt=0.5, t_end=5.0, snapshot_every=1))
        rep = blowup_monitor(info.value.trajectory)
        assert rep.verdict == "suspect"
        assert rep.exponent is not None and math.isfinite(rep.exponent)

    def test_growth_heuristic(self):
        g = GridSpec(16)
        times = list(np.arange(12) * 0.1)
        snaps = [sine(g) * (1.5**k) for k in range(12)]
        traj = Trajectory(SolverConfig(dt=0.1, t_end=1.1, snapshot_every=1), times, snaps, [])
        assert blowup_monitor(traj).verdict == "suspect"


class TestScaling:
    def test_sine(self):
        g = GridSpec(32)
        rep = scaling_check(sine(g), 2, SolverConfig(alpha=0.5, dt=1e-3, t_end=0.25, snapshot_every=50))
        assert rep.max_relative_difference <= 1e-10

    def test_zero(self):
        g = GridSpec(32)
        rep = scaling_check(SpectralField.zeros(g), 2, SolverConfig(dt=1e-2, t_end=0.1))
        assert rep.max_relative_difference == 0

    def test_band_violation(self):
        g = GridSpec(32)
        with pytest.raises(ValueError):
            scaling_check(random_field(g, 0, band=8), 2, SolverConfig(dt=1e-2, t_end=0.1))

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            scaling_check(sine(GridSpec(32)), 3, SolverConfig(dt=1e-2, t_end=0.1))

    def test_rescale_space(self):
        g = GridSpec(32)
        out = rescale_space(sine(g), 2)
        np.testing.assert_allclose(out.coefficients, sine(g, 2).coefficients)

    def test_small_random(self):
        g = GridSpec(32)
        theta0 = random_field(g, 4, band=3, h1_norm=1.0)
        rep = scaling_check(theta0, 2, SolverConfig(alpha=0.5, dt=1e-3, t_end=0.1, snapshot_every=20))
        assert rep.max_relative_difference <= 1e-5


class TestSmoothing:
    def test_sine_tail_zero(self):
        g = GridSpec(32)
        traj = integrate(sine(g), SolverConfig(dt=1e-2, t_end=0.2, snapshot_every=5))
        rep = smoothing_report(traj)
        assert np.all(rep.tail == 0)
        assert np.all(rep.tail_ratios == 0)

    def test_heat_flow_tail_decreases(self):
        g = GridSpec(64)
        theta0 = random_field(g, 0, decay=2.0, h1_norm=1.0)
        cfg = SolverConfig(alpha=0.5, dt=1e-2, t_end=0.2, snapshot_every=10)
        traj = linear_advect_diffuse(theta0, VelocityTrack.zero(g, 0.2), cfg)
        rep = smoothing_report(traj, build_partition(g))
        assert np.all(np.diff(rep.tail) < 0) and np.all(np.isfinite(rep.h2))

    def test_needs_two(self):
        g = GridSpec(16)
        with pytest.raises(ValueError):
            smoothing_report(Trajectory(SolverConfig(dt=0.1, t_end=1.0), [0.0], [sine(g)], []))
