import numpy as np
import pytest

from tdhf import make_grid
from tdhf.propagate import (PropagatorConfig, StepSizeError, Trajectory, WindowTooLargeError,
                            _gauss_collocation, free_evolve, picard_solve, picard_window,
                            run_orbital, strang_step)
from tdhf.runner import gaussian_orbital
from tdhf.state import new_state, norm_report, particle_density, rediagonalize, trace_norm_distance

from conftest import random_state
from oracles import free_gaussian_variance


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        dict(dt=0, t_final=1), dict(dt=0.1, t_final=0.05), dict(dt=0.1, t_final=1, scheme="rk4"),
        dict(dt=0.1, t_final=1, picard_tol=0), dict(dt=0.1, t_final=1, sample_stride=0)])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            PropagatorConfig(**kwargs)

    def test_trajectory_times_increase(self, grid1d, pair1d):
        traj = Trajectory()
        traj.append(0.0, pair1d)
        with pytest.raises(ValueError):
            traj.append(0.0, pair1d)


class TestFreeEvolve:
    def test_zero_time(self, pair3d):
        assert free_evolve(pair3d, 0.0) is pair3d

    def test_plane_wave_invariant(self):
        g = make_grid(3, 8, 2 * np.pi)
        rho = new_state(g, [1.0], [np.exp(1j * g.coords[1])])
        out = free_evolve(rho, 0.8)
        assert np.max(np.abs(particle_density(out) - particle_density(rho))) < 1e-14
        assert trace_norm_distance(out, rho) < 1e-12

    def test_gaussian_dispersion(self):
        g = make_grid(3, 32, 20.0)
        rho = new_state(g, [1.0], [gaussian_orbital(g, (0, 0, 0), 1.0)])
        out = free_evolve(rho, 2.0)
        assert abs(norm_report(out).kinetic_energy - norm_report(rho).kinetic_energy) < 1e-12
        n = particle_density(out)
        assert abs(g.integrate(g.coords[0] ** 2 * n) - free_gaussian_variance(1.0, 2.0)) < 1e-3

    def test_isometry_and_group_law(self, rng, grid3d):
        rho = random_state(grid3d, 3, rng, positive=False)
        s, t = rng.uniform(-2, 2, 2)
        a, b = norm_report(rho), norm_report(free_evolve(rho, t))
        for field in ("trace", "trace_norm", "z_norm", "kinetic_energy", "y_norm"):
            assert abs(getattr(a, field) - getattr(b, field)) < 1e-10 * max(1, abs(getattr(a, field)))
        composed = free_evolve(free_evolve(rho, s), t)
        assert trace_norm_distance(composed, free_evolve(rho, s + t)) < 1e-10
        assert np.array_equal(free_evolve(rho, t).occupations, rho.occupations)


class TestStrang:
    def test_rank_one_is_free(self, rng, grid3d):
        rho = random_state(grid3d, 1, rng)
        assert trace_norm_distance(strang_step(rho, 0.01), free_evolve(rho, 0.01)) < 1e-10

    def test_zero_occupations(self, pair3d):
        zero = pair3d.scaled(0.0)
        out = strang_step(zero, 0.01)
        assert np.all(out.occupations == 0)
        assert norm_report(out).trace_norm == 0

    def test_coupling_off_matches_free(self, pair1d):
        traj = run_orbital(pair1d, PropagatorConfig(dt=0.01, t_final=0.2, coupling=0.0, sample_stride=5))
        for t, rho in zip(traj.times, traj.states):
            assert trace_norm_distance(rho, free_evolve(pair1d, t)) < 1e-10

    def test_second_order(self, pair1d):
        ref = run_orbital(pair1d, PropagatorConfig(dt=0.0025, t_final=0.5, sample_stride=200)).final
        errs = [trace_norm_distance(run_orbital(pair1d, PropagatorConfig(dt=dt, t_final=0.5,
                                                                         sample_stride=int(0.5 / dt))).final, ref)
                for dt in (0.05, 0.025)]
        assert 3.5 < errs[0] / errs[1] < 4.5

    def test_series_divergence(self, pair1d):
        with pytest.raises(StepSizeError):
            strang_step(pair1d, 50.0, coupling=10.0)

    def test_occupations_fixed(self, pair3d):
        out = strang_step(pair3d, 0.02)
        assert np.array_equal(out.occupations, pair3d.occupations)
        assert abs(out.gram_defect) < 1e-12


class TestRunOrbital:
    def test_sampling(self, pair1d):
        traj = run_orbital(pair1d, PropagatorConfig(dt=0.01, t_final=0.1, sample_stride=3))
        assert np.allclose(traj.times, [0, 0.03, 0.06, 0.09])
        assert traj.initial is pair1d

    def test_rank_one_gaussian_dispersion(self):
        g = make_grid(3, 32, 20.0)
        rho = new_state(g, [1.0], [gaussian_orbital(g, (0, 0, 0), 1.0)])
        traj = run_orbital(rho, PropagatorConfig(dt=0.01, t_final=1.0, sample_stride=100))
        n = particle_density(traj.final)
        assert abs(g.integrate(g.coords[2] ** 2 * n) - free_gaussian_variance(1.0, 1.0)) < 1e-4

    def test_reorthonormalization(self, pair1d):
        traj = run_orbital(pair1d, PropagatorConfig(dt=0.01, t_final=0.1, reorthonormalize_every=5,
                                                    sample_stride=10))
        assert traj.final.gram_defect < 1e-13


class TestPicard:
    def test_collocation_exact_for_polynomials(self):
        tau, S, w = _gauss_collocation(4, 0.3)
        f = lambda s: 1 + 2 * s - 3 * s ** 3
        F = lambda s: s + s ** 2 - 0.75 * s ** 4
        assert np.allclose(S @ f(tau), F(tau), atol=1e-14)
        assert abs(w @ f(tau) - F(0.3)) < 1e-14

    def test_interactions_off_first_iterate_exact(self, pair1d):
        cfg = PropagatorConfig(dt=0.05, t_final=0.05, scheme="picard_operator", coupling=0.0)
        end, info = picard_window(pair1d, 0.05, cfg)
        assert len(info["distances"]) == 1
        assert trace_norm_distance(end, free_evolve(pair1d, 0.05)) < 1e-12

    def test_rank_one_one_iteration(self, rng, grid1d):
        rho = random_state(grid1d, 1, rng)
        cfg = PropagatorConfig(dt=0.05, t_final=0.05, scheme="picard_operator")
        end, info = picard_window(rho, 0.05, cfg)
        assert len(info["distances"]) == 1
        assert trace_norm_distance(end, free_evolve(rho, 0.05)) < 1e-12

    def test_matches_orbital(self, pair1d):
        ref = run_orbital(pair1d, PropagatorConfig(dt=2e-4, t_final=0.05, sample_stride=250)).final
        traj = picard_solve(pair1d, 0.05, PropagatorConfig(dt=0.05, t_final=0.05, scheme="picard_operator"))
        assert trace_norm_distance(traj.final, ref) < 1e-5
        assert min(rediagonalize(traj.final)[0]) >= -1e-8

    def test_window_too_large(self, pair1d):
        cfg = PropagatorConfig(dt=4.0, t_final=4.0, scheme="picard_operator", coupling=30.0,
                               picard_max_iter=4, max_window_halvings=0)
        with pytest.raises(WindowTooLargeError):
            picard_solve(pair1d, 4.0, cfg)

    def test_halving_recovers(self, pair1d):
        cfg = PropagatorConfig(dt=0.4, t_final=0.4, scheme="picard_operator", coupling=5.0,
                               picard_max_iter=6, max_window_halvings=4)
        traj = picard_solve(pair1d, 0.4, cfg)
        assert len(traj.picard_log) > 1
        assert all(w["converged"] for w in traj.picard_log)
