"""Split-step solver: conservation, convergence, equivalences."""

import math

import numpy as np
import pytest

from nediff.analytic import apply_interaction, build_phase_mask, vacuum_propagate
from nediff.analysis import momentum_density, rel_l2, sideband_populations
from nediff.core import Grid2D, gaussian_wavepacket, to_momentum
from nediff.errors import ConfigurationError, NumericalError
from nediff.nearfield import (LaserParams, UniformStripeModel, WireModel,
                              coupling_profile)
from nediff.numeric import (EvolutionParams, choose_steps, split_step_evolve,
                            validate_evolution)
from nediff.units import HBAR, electron_kinematics

LASER = LaserParams(wavelength_nm=2000.0, field_v_per_nm=0.2)
WIRE = WireModel(radius_nm=10.0, response=0.5)


@pytest.fixture(scope="module")
def grid():
    return Grid2D.centered(512, 256, 0.5, 0.5)


@pytest.fixture(scope="module")
def packet(grid):
    return gaussian_wavepacket(grid, 100.0, 40.0, 16.0)


@pytest.fixture(scope="module")
def evolved(grid, packet):
    params = choose_steps(LASER, WIRE, grid, -20.0, 20.0, safety=0.9)
    psi_n, trace = split_step_evolve(packet, params)
    return params, psi_n, trace


class TestChooseSteps:
    def test_respects_potential_bound(self, grid):
        params = choose_steps(LASER, WIRE, grid, -20.0, 20.0)
        v_peak = WIRE.peak_potential(LASER.field_v_per_nm)
        assert params.dt <= 0.1 * HBAR / v_peak
        validate_evolution(params, grid)

    def test_weaker_field_never_shrinks_dt(self, grid):
        strong = choose_steps(LASER, WIRE, grid, -20.0, 20.0)
        weak_laser = LaserParams(wavelength_nm=2000.0, field_v_per_nm=0.1)
        weak = choose_steps(weak_laser, WIRE, grid, -20.0, 20.0)
        assert weak.dt >= strong.dt

    def test_step_count_covers_window(self, grid):
        params = choose_steps(LASER, WIRE, grid, -17.0, 20.0)
        assert params.n_steps * params.dt == pytest.approx(37.0, rel=1e-12)

    def test_rejects_empty_window(self, grid):
        with pytest.raises(ConfigurationError):
            choose_steps(LASER, WIRE, grid, 10.0, 10.0)
        with pytest.raises(ConfigurationError):
            choose_steps(LASER, WIRE, grid, 10.0, 5.0)

    def test_rejects_stripe_model(self, grid):
        stripe = UniformStripeModel(coupling_rad=1.0, y_min=-5.0, y_max=5.0)
        with pytest.raises(ConfigurationError):
            choose_steps(LASER, stripe, grid, -10.0, 10.0)


class TestValidation:
    def test_oversized_dt_rejected_before_stepping(self, grid, packet):
        params = EvolutionParams(dt=4.0, n_steps=5, t_start=-10.0, t_end=10.0,
                                 laser=LASER, model=WIRE)
        with pytest.raises(ConfigurationError):
            split_step_evolve(packet, params)

    def test_inconsistent_dt_rejected(self):
        with pytest.raises(ConfigurationError):
            EvolutionParams(dt=0.5, n_steps=10, t_start=0.0, t_end=10.0,
                            laser=LASER, model=WIRE)

    def test_edge_proximity_abort(self):
        g = Grid2D.centered(256, 128, 0.5, 0.5)
        psi = gaussian_wavepacket(g, 100.0, 30.0, 12.0, center=(-35.0, 0.0))
        params = choose_steps(LASER, WIRE, g, -5.0, 5.0, safety=0.9)
        with pytest.raises(NumericalError) as excinfo:
            split_step_evolve(psi, params)
        assert excinfo.value.partial is not None  # trace up to the abort


class TestConservation:
    def test_norm_drift(self, evolved):
        _, _, trace = evolved
        assert np.max(np.abs(trace.norm - 1.0)) < 1e-9

    def test_final_time(self, evolved):
        params, psi_n, trace = evolved
        assert psi_n.t == params.t_end
        assert trace.t[0] == params.t_start
        assert trace.t[-1] == params.t_end

    def test_time_reversal(self, grid, packet):
        params = choose_steps(LASER, WIRE, grid, -8.0, 8.0, safety=0.8)
        fwd, _ = split_step_evolve(packet, params)
        back, _ = split_step_evolve(fwd, params.reversed())
        assert np.max(np.abs(back.amplitudes - packet.amplitudes)) < 1e-8


class TestFreeParticle:
    def test_matches_vacuum_propagator(self, grid, packet):
        free_wire = WireModel(radius_nm=10.0, response=0.0)
        params = choose_steps(LASER, free_wire, grid, -10.0, 10.0, safety=0.9,
                              include_vector_potential=False)
        psi_n, _ = split_step_evolve(packet, params)
        psi_a = vacuum_propagate(packet, 20.0)
        spec_n = to_momentum(psi_n)
        spec_a = to_momentum(psi_a)
        assert np.max(np.abs(spec_n.values - spec_a.values)) < 1e-10


class TestConvergence:
    def _run(self, packet, grid, dt):
        window = 16.0
        n = int(round(window / dt))
        params = EvolutionParams(dt=window / n, n_steps=n, t_start=-8.0,
                                 t_end=8.0, laser=LASER, model=WIRE)
        psi, _ = split_step_evolve(packet, params)
        return momentum_density(psi).values

    def test_second_order_in_dt(self):
        g = Grid2D.centered(256, 128, 0.5, 0.5)
        psi = gaussian_wavepacket(g, 100.0, 18.0, 10.0)
        base = 0.064
        ref = self._run(psi, g, base / 8.0)
        err1 = rel_l2(self._run(psi, g, base), ref)
        err2 = rel_l2(self._run(psi, g, base / 2.0), ref)
        ratio = err1 / err2
        assert 2.0 < ratio < 8.0  # order 2 within a factor of two

    def test_dt_refinement_converged(self):
        # With a conservative step the dt -> dt/2 change is already tiny.
        g = Grid2D.centered(256, 128, 0.5, 0.5)
        weak = LaserParams(wavelength_nm=2000.0, field_v_per_nm=0.02)
        psi = gaussian_wavepacket(g, 100.0, 18.0, 10.0)
        window = 8.0

        def run(dt):
            n = int(round(window / dt))
            params = EvolutionParams(dt=window / n, n_steps=n, t_start=-4.0,
                                     t_end=4.0, laser=weak, model=WIRE)
            out, _ = split_step_evolve(psi, params)
            return momentum_density(out).values

        d1 = run(0.004)
        d2 = run(0.002)
        assert rel_l2(d1, d2) < 1e-6


class TestAgainstAnalyticModel:
    def test_quantitative_agreement_reduced_scenario(self, grid, packet, evolved):
        _, psi_n, _ = evolved
        _, v0 = electron_kinematics(100.0)
        profile = coupling_profile(WIRE, LASER, v0, grid.y)
        psi_a = apply_interaction(packet, build_phase_mask(profile, grid))
        d_n = momentum_density(psi_n)
        d_a = momentum_density(psi_a)
        assert rel_l2(d_n.values, d_a.values) < 0.05

    def test_phase_scan_insensitive(self):
        # Packet longer than one optical period: the common optical phase must
        # not move the sideband populations at the 2% level.
        g = Grid2D.centered(512, 256, 0.5, 0.5)
        psi = gaussian_wavepacket(g, 100.0, 45.0, 16.0)
        _, v0 = electron_kinematics(100.0)
        pops = []
        for phase in (0.0, math.pi / 3.0, math.pi / 2.0):
            laser = LaserParams(wavelength_nm=2000.0, field_v_per_nm=0.2,
                                phase_rad=phase)
            params = choose_steps(laser, WIRE, g, -15.0, 15.0, safety=0.9)
            out, _ = split_step_evolve(psi, params)
            table = sideband_populations(momentum_density(out), psi.k0,
                                         laser.omega / v0)
            pops.append([table.population(n) for n in range(-3, 4)])
        base = np.array(pops[0])
        for other in pops[1:]:
            assert np.max(np.abs(np.array(other) - base)) < 0.02


def test_trace_csv(tmp_path, evolved):
    _, _, trace = evolved
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_fs,norm,x_mean_nm,kx_mean_per_nm,ky_mean_per_nm,energy_mean_ev"
    data = np.genfromtxt(path, delimiter=",", skip_header=1)
    assert data.shape[1] == 6
    assert np.allclose(data[:, 1], 1.0, atol=1e-9)
    # kinetic energy stays near the carrier energy for this weak drive
    assert np.all(np.abs(data[:, 5] - 100.0) < 2.0)
