import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from mqg.ensemble import random_field
from mqg.grid import GridSpec, ScalarField, SpectralField, VectorField, forward_transform, inverse_transform
from mqg.solver import (
    BlowupError,
    SolverConfig,
    Trajectory,
    VelocityTrack,
    integrate,
    linear_advect_diffuse,
    picard_iterate,
    step,
)
from mqg.spectral import Variant, dealias, fractional_laplacian, nonlinear_term


def sine(g, k=1):
    return SpectralField.from_modes(g, {(k, 0): -0.5j, (-k, 0): 0.5j})


def sup_err(F, G):
    return np.abs(inverse_transform(F).samples - inverse_transform(G).samples).max()


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [dict(alpha=0.0), dict(alpha=1.2), dict(dt=0.0), dict(dt=2.0, t_end=1.0), dict(snapshot_every=0), dict(integrator="RK2")],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_steps(self):
        assert SolverConfig(dt=1e-3, t_end=0.5).n_steps == 500
        with pytest.raises(ValueError):
            SolverConfig(dt=0.3, t_end=1.0).n_steps

    def test_classical_limit_flag(self):
        assert SolverConfig(alpha=1.0).classical_limit
        assert not SolverConfig(alpha=0.5).classical_limit


class TestStep:
    @pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0])
    def test_sine_decay(self, alpha):
        g = GridSpec(32)
        h = 0.05
        cfg = SolverConfig(alpha=alpha, dt=h, t_end=1.0)
        out = step(sine(g), cfg)
        assert sup_err(out, sine(g) * math.exp(-h)) <= 1e-13

    def test_sin2_decay(self):
        g = GridSpec(32)
        h = 0.02
        out = step(sine(g, 2), SolverConfig(alpha=0.5, dt=h, t_end=1.0))
        assert sup_err(out, sine(g, 2) * math.exp(-math.sqrt(2) * h)) <= 1e-13

    def test_mean_stays_zero(self):
        g = GridSpec(32)
        out = step(random_field(g, 1), SolverConfig(dt=0.01, t_end=1.0))
        assert out.coefficients[0, 0] == 0

    def test_rejects_nonzero_mean(self):
        g = GridSpec(16)
        F = random_field(g, 0) + SpectralField.from_modes(g, {(0, 0): 1.0})
        with pytest.raises(ValueError):
            step(F, SolverConfig(dt=0.01, t_end=1.0))

    def test_richardson_local_order(self):
        g = GridSpec(32)
        F = dealias(random_field(g, 2, decay=2.0, h1_norm=1.0))
        hs = [0.08, 0.04, 0.02, 0.01]
        diffs = []
        for h in hs:
            one = step(F, SolverConfig(dt=h, t_end=1.0))
            half = SolverConfig(dt=h / 2, t_end=1.0)
            two = step(step(F, half), half)
            diffs.append((one - two).l2())
        orders = np.log2(np.array(diffs[:-1]) / np.array(diffs[1:]))
        assert np.all(orders >= 3.8), orders

    def test_blowup_signal(self):
        g = GridSpec(16)
        F = SpectralField(g, np.full((16, 16), np.nan + 0j))
        F.coefficients[0, 0] = 0
        with pytest.raises(BlowupError) as info:
            step(F, SolverConfig(dt=0.1, t_end=1.0), step_index=7)
        assert info.value.step_index == 7


class TestIntegrate:
    def test_sine_exact(self):
        g = GridSpec(32)
        traj = integrate(sine(g), SolverConfig(alpha=0.5, dt=1e-3, t_end=1.0, snapshot_every=100))
        assert sup_err(traj.final, sine(g) * math.exp(-1.0)) <= 1e-7
        assert traj.times[0] == 0 and traj.times[-1] == pytest.approx(1.0)
        np.testing.assert_allclose(np.diff(traj.times), 0.1, rtol=1e-12)
        assert len(traj.records) == len(traj.snapshots) == 11

    def test_accepts_scalar_field(self):
        g = GridSpec(16)
        x1, _ = g.coordinates()
        traj = integrate(ScalarField(g, np.sin(x1)), SolverConfig(dt=0.01, t_end=0.1))
        assert traj.final.l2() == pytest.approx(math.pi * math.sqrt(2) * math.exp(-0.1), rel=1e-10)

    def test_zero(self):
        g = GridSpec(16)
        traj = integrate(SpectralField.zeros(g), SolverConfig(dt=0.01, t_end=0.1))
        assert all(np.all(s.coefficients == 0) for s in traj.snapshots)

    def test_maximum_principle_small(self):
        g = GridSpec(32)
        traj = integrate(random_field(g, 4, h1_norm=1.0), SolverConfig(dt=1e-3, t_end=0.1, snapshot_every=1))
        l2 = np.array([s.l2() for s in traj.snapshots])
        assert np.all(l2[1:] <= l2[:-1] * (1 + 1e-12))

    def test_records(self):
        g = GridSpec(32)
        traj = integrate(random_field(g, 4, h1_norm=1.0), SolverConfig(dt=1e-3, t_end=0.05, snapshot_every=5))
        bi = np.array([r.blowup_integral for r in traj.records])
        assert bi[0] == 0 and np.all(np.diff(bi) >= 0)
        r = traj.records[3]
        th = traj.snapshots[3]
        assert r.hdot_crit == pytest.approx(fractional_laplacian(th, 1.25).l2(), rel=1e-12)
        assert r.hdot_one == pytest.approx(fractional_laplacian(th, 1.0).l2(), rel=1e-12)
        assert math.isnan(traj.records[0].energy_residual)
        assert not math.isnan(r.energy_residual)

    def test_equation_residual(self):
        g = GridSpec(32)
        dt = 1e-3
        cfg = SolverConfig(dt=dt, t_end=0.02, snapshot_every=1)
        traj = integrate(dealias(random_field(g, 8, h1_norm=1.0)), cfg)
        for k in range(1, len(traj.snapshots) - 1):
            th = traj.snapshots[k]
            dthdt = (traj.snapshots[k + 1] - traj.snapshots[k - 1]) * (1 / (2 * dt))
            res = dthdt + fractional_laplacian(th, 0.5) + nonlinear_term(th, 0.5, Variant.MQG)
            assert res.l2() <= 10 * dt**2 * th.l2()

    def test_cfl_warning(self):
        g = GridSpec(32)
        F = random_field(g, 1, h1_norm=50.0)
        with pytest.warns(RuntimeWarning, match="exceeds"):
            integrate(F, SolverConfig(dt=0.05, t_end=0.1, snapshot_every=1))

    def test_blowup_carries_trajectory(self):
        g = GridSpec(32)
        F = random_field(g, 1, decay=2.0, h1_norm=1.0) * 1000.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(BlowupError) as info:
                integrate(F, SolverConfig(dt=0.5, t_end=5.0, snapshot_every=1))
        traj = info.value.trajectory
        assert traj.blowup_step == info.value.step_index
        assert all(np.all(np.isfinite(s.coefficients)) for s in traj.snapshots)

    def test_deterministic(self):
        g = GridSpec(32)
        cfg = SolverConfig(dt=1e-3, t_end=0.02, snapshot_every=5)
        a = integrate(random_field(g, 3), cfg)
        b = integrate(random_field(g, 3), cfg)
        np.testing.assert_array_equal(a.final.coefficients, b.final.coefficients)


class TestLinear:
    def test_zero_velocity_is_heat_flow(self):
        g = GridSpec(32)
        F = dealias(random_field(g, 5))
        cfg = SolverConfig(alpha=0.5, dt=1e-2, t_end=0.5, snapshot_every=10)
        traj = linear_advect_diffuse(F, VelocityTrack.zero(g, 0.5), cfg)
        for t, s in zip(traj.times, traj.snapshots):
            expect = F.coefficients * np.exp(-(g.kmag**0.5) * t)
            assert np.abs(s.coefficients - expect).max() <= 1e-14

    def test_self_consistent_shear(self):
        g = GridSpec(32)
        cfg = SolverConfig(alpha=0.5, dt=1e-2, t_end=0.5, snapshot_every=5)
        nonlin = integrate(sine(g), cfg)
        u = VelocityTrack.from_trajectory(nonlin)
        lin = linear_advect_diffuse(sine(g), u, cfg)
        for a, b in zip(lin.snapshots, nonlin.snapshots):
            assert (a - b).l2() <= 1e-13

    def test_short_velocity_rejected(self):
        g = GridSpec(16)
        with pytest.raises(ValueError):
            linear_advect_diffuse(sine(g), VelocityTrack.zero(g, 0.1), SolverConfig(dt=0.01, t_end=0.2))

    def test_constant_translation(self):
        g = GridSpec(32)
        k, c, alpha, T = 2, 3.0, 0.5, 0.5
        x1, _ = g.coordinates()
        u = VectorField(ScalarField(g, np.full((32, 32), c)), ScalarField(g, np.zeros((32, 32))))
        track = VelocityTrack.from_fields([0.0, T], [u, u])
        theta0 = forward_transform(ScalarField(g, np.sin(k * x1)))
        traj = linear_advect_diffuse(theta0, track, SolverConfig(alpha=alpha, dt=1e-3, t_end=T, snapshot_every=500))
        exact = math.exp(-(k**alpha) * T) * np.sin(k * (x1 - c * T))
        assert sup_err(traj.final, forward_transform(ScalarField(g, exact))) <= 1e-9

    def test_r1_bound_random_velocity(self):
        g = GridSpec(32)
        cfg = SolverConfig(alpha=0.5, dt=5e-3, t_end=0.2, snapshot_every=4)
        theta0 = random_field(g, 100, h1_norm=1.0)
        for seed in range(3):
            fields = [random_field(g, seed * 10 + j, decay=2.0, h1_norm=2.0) for j in range(3)]
            cfg_u = SolverConfig(alpha=0.5, dt=0.1, t_end=0.2, snapshot_every=1)
            track = VelocityTrack.from_trajectory(Trajectory(cfg_u, [0.0, 0.1, 0.2], fields, []))
            traj = linear_advect_diffuse(theta0, track, cfg)
            assert max(s.l2() for s in traj.snapshots) <= theta0.l2() + 1e-10


class TestVelocityTrack:
    def test_interpolation(self):
        g = GridSpec(8)
        a = np.ones((8, 8), complex)
        tr = VelocityTrack(np.array([0.0, 1.0]), np.array([0 * a, 2 * a]), np.array([a, a]))
        assert tr.at(0.25)[0][0, 0] == pytest.approx(0.5)
        assert tr.at(5.0)[0][0, 0] == pytest.approx(2.0)

    def test_times_increasing(self):
        z = np.zeros((2, 8, 8), complex)
        with pytest.raises(ValueError):
            VelocityTrack(np.array([1.0, 0.0]), z, z)


class TestPicard:
    cfg = SolverConfig(alpha=0.5, dt=1e-2, t_end=0.1, snapshot_every=10)

    def test_zero_data(self):
        rep = picard_iterate(SpectralField.zeros(GridSpec(16)), self.cfg)
        assert rep.converged and rep.iterations == 1 and rep.increments[0] == 0

    def test_shear_fixed_point(self):
        rep = picard_iterate(sine(GridSpec(32)), self.cfg, k_max=4)
        assert rep.increments[1] <= 1e-13
        assert rep.converged

    def test_small_data_contracts(self):
        g = GridSpec(32)
        theta0 = random_field(g, 0, h1_norm=0.05)
        rep = picard_iterate(theta0, replace(self.cfg, t_end=0.1), k_max=6, tol=0.0)
        assert rep.contractive
        assert all(b < a for a, b in zip(rep.increments, rep.increments[1:]))
        assert [row[0] for row in rep.rows()] == list(range(rep.iterations))
        assert rep.radii[0] == 2.0 and rep.radii[-1] <= g.max_kmag

    def test_report_flagged_when_not_contracting(self):
        g = GridSpec(32)
        theta0 = random_field(g, 0, decay=1.0, h1_norm=200.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = picard_iterate(theta0, SolverConfig(alpha=0.5, dt=1e-3, t_end=0.05, snapshot_every=50), k_max=4)
        assert not rep.converged
