"""Scenario orchestration: trivial limits and optional artifact surfaces."""

import numpy as np
import pytest

from nediff.analysis import momentum_density, run_sweep
from nediff.analytic import export_order_decomposition, order_amplitudes_exact
from nediff.config import ElectronSpec, NumericSpec, ScenarioConfig
from nediff.core import Grid2D, gaussian_wavepacket
from nediff.gridio import read_grid
from nediff.nearfield import LaserParams, WireModel, coupling_profile
from nediff.presets import build_preset
from nediff.scenario import build_initial_state, run_scenario
from nediff.units import electron_kinematics


def small_config(engine="analytic", field=0.2, outputs=None, numeric=None):
    return ScenarioConfig(
        engine=engine,
        electron=ElectronSpec(energy_ev=100.0, fwhm_x_nm=40.0, fwhm_y_nm=16.0),
        laser=LaserParams(wavelength_nm=2000.0, field_v_per_nm=field),
        model=WireModel(radius_nm=10.0, response=0.5),
        grid=Grid2D.centered(512, 256, 0.5, 0.5),
        numeric=numeric,
        outputs=outputs if outputs is not None else ("summary",),
    )


def test_zero_field_run_keeps_initial_spectrum():
    result = run_scenario(small_config(field=0.0))
    initial = momentum_density(result.psi_initial)
    final = result.analytic.density
    assert np.array_equal(final.values, initial.values)


def test_chirped_preset_prepropagates():
    cfg = build_preset("fig4-chirped").scenario
    psi = build_initial_state(cfg)
    assert psi.t == pytest.approx(cfg.electron.prepropagation_fs)


def test_outputs_filter(tmp_path):
    cfg = small_config(outputs=("profile", "summary"))
    run_scenario(cfg, outdir=tmp_path)
    names = {p.name for p in tmp_path.iterdir()}
    assert "profile.csv" in names and "summary.txt" in names
    assert "density_analytic.pgm" not in names
    assert "analytic.grid" not in names


def test_numeric_snapshot_dumps(tmp_path):
    cfg = small_config(
        engine="numeric",
        outputs=("snapshots", "trace", "summary"),
        numeric=NumericSpec(window_fs=4.0, safety=0.9, snapshot_stride=20),
    )
    result = run_scenario(cfg, outdir=tmp_path)
    snaps = sorted((tmp_path / "snapshots").glob("snap_*.grid"))
    assert len(snaps) == len(result.trace.t)
    first = read_grid(snaps[0])
    assert first.t == result.trace.t[0]
    assert first.amplitudes.shape == (cfg.grid.ny, cfg.grid.nx)


def test_sweep_grid_dumps(tmp_path):
    result = run_sweep(small_config(), "radius_nm", [8.0, 12.0],
                       dump_grids_to=tmp_path)
    assert not any(p.error for p in result.points)
    names = sorted(p.name for p in tmp_path.glob("*.grid"))
    assert names == ["radius_nm_12.grid", "radius_nm_8.grid"]
    psi = read_grid(tmp_path / "radius_nm_8.grid")
    assert psi.norm() == pytest.approx(1.0, abs=1e-9)


def test_order_decomposition_export(tmp_path):
    grid = Grid2D.centered(512, 256, 0.5, 0.5)
    psi = gaussian_wavepacket(grid, 100.0, 40.0, 16.0)
    _, v0 = electron_kinematics(100.0)
    profile = coupling_profile(WireModel(radius_nm=10.0, response=0.5),
                               LaserParams(wavelength_nm=2000.0,
                                           field_v_per_nm=0.2),
                               v0, grid.y)
    dec = order_amplitudes_exact(psi, profile)
    written = export_order_decomposition(dec, tmp_path)
    assert "manifest.txt" in written
    manifest = (tmp_path / "manifest.txt").read_text()
    assert "delta_k_per_nm" in manifest
    n0 = tmp_path / "order_+00.csv"
    assert n0.exists()
    data = np.genfromtxt(n0, delimiter=",", skip_header=1)
    dky = dec.ky[1] - dec.ky[0]
    pop0 = float(data[:, 1].sum() * dky)
    assert pop0 == pytest.approx(dec.populations()[dec.order_index(0)], rel=1e-9)
