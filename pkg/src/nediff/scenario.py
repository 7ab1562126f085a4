"""Scenario orchestration: build, run, analyze and write artifacts."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import gridio
from .analysis import (Crosscut, DensityMap, SidebandTable, SweepPoint, crosscut,
                       max_deflection, momentum_density, peak_spacing, rel_l2,
                       sideband_populations, transverse_splitting)
from .analytic import (apply_interaction, build_phase_mask, transverse_envelope,
                       vacuum_propagate)
from .config import ScenarioConfig
from .core import Wavepacket, check_coverage, gaussian_wavepacket
from .errors import AnalysisError, ConfigurationError
from .nearfield import (CouplingProfile, GapResonatorModel, UniformStripeModel,
                        calibrate_gap_amplitude, coupling_profile,
                        export_profile_csv)
from .numeric import EvolutionParams, EvolutionTrace, choose_steps, split_step_evolve, validate_evolution
from .presets import bandwidth_to_fwhm_x
from .render import render_heatmap
from .units import electron_kinematics


@dataclass(frozen=True)
class EngineOutput:
    """Final state and observables for one engine."""

    psi: Wavepacket
    density: DensityMap
    sidebands: SidebandTable | None


@dataclass(frozen=True)
class ScenarioResult:
    """Everything a single run produces."""

    config: ScenarioConfig
    psi_initial: Wavepacket
    profile: CouplingProfile
    analytic: EngineOutput | None
    numeric: EngineOutput | None
    trace: EvolutionTrace | None
    delta_k: float
    rel_l2_densities: float | None

    def primary(self) -> EngineOutput:
        out = self.analytic if self.analytic is not None else self.numeric
        assert out is not None
        return out


def resolve_model(cfg: ScenarioConfig):
    model = cfg.model
    if isinstance(model, GapResonatorModel) and not model.calibrated:
        model = calibrate_gap_amplitude(model)
    return model


def build_initial_state(cfg: ScenarioConfig) -> Wavepacket:
    e = cfg.electron
    if e.fwhm_x_nm is not None:
        fwhm_x = e.fwhm_x_nm
    else:
        fwhm_x = bandwidth_to_fwhm_x(e.bandwidth_ev, e.energy_ev)
    if e.fwhm_y_nm is not None:
        fwhm_y = e.fwhm_y_nm
    else:
        fwhm_y = e.fwhm_y_radius_scale * cfg.model.radius_nm
    psi = gaussian_wavepacket(cfg.grid, e.energy_ev, fwhm_x, fwhm_y,
                              center=(e.center_x_nm, e.center_y_nm))
    check_coverage(psi)
    if e.prepropagation_fs > 0.0:
        psi = vacuum_propagate(psi, e.prepropagation_fs,
                               axes=e.prepropagation_axes)
    return psi


def _engine_output(psi: Wavepacket, delta_k: float) -> EngineOutput:
    dmap = momentum_density(psi)
    try:
        table = sideband_populations(dmap, psi.k0, delta_k)
    except ConfigurationError:
        table = None
    return EngineOutput(psi=psi, density=dmap, sidebands=table)


def run_scenario(cfg: ScenarioConfig, outdir=None) -> ScenarioResult:
    """Execute one scenario; optionally write the artifact bundle."""
    model = resolve_model(cfg)
    _, v0 = electron_kinematics(cfg.electron.energy_ev)
    psi0 = build_initial_state(cfg)
    profile = coupling_profile(model, cfg.laser, v0, cfg.grid.y)
    delta_k = profile.delta_k

    analytic_out = None
    numeric_out = None
    trace = None
    if cfg.engine in ("analytic", "both"):
        mask = build_phase_mask(profile, cfg.grid)
        psi_a = apply_interaction(psi0, mask)
        analytic_out = _engine_output(psi_a, delta_k)
    if cfg.engine in ("numeric", "both"):
        nu = cfg.numeric
        half = 0.5 * nu.window_fs
        if nu.dt_fs is None:
            params = choose_steps(cfg.laser, model, cfg.grid, -half, half,
                                  safety=nu.safety,
                                  include_vector_potential=nu.vector_potential,
                                  snapshot_stride=nu.snapshot_stride)
        else:
            n = max(1, int(round(nu.window_fs / nu.dt_fs)))
            params = EvolutionParams(
                dt=nu.window_fs / n, n_steps=n, t_start=-half, t_end=half,
                laser=cfg.laser, model=model,
                include_vector_potential=nu.vector_potential,
                snapshot_stride=nu.snapshot_stride)
            validate_evolution(params, cfg.grid)
        snapshot_callback = None
        if outdir is not None and "snapshots" in cfg.outputs:
            snap_dir = Path(outdir) / "snapshots"
            snap_dir.mkdir(parents=True, exist_ok=True)
            counter = iter(range(10**6))

            def snapshot_callback(t, psi_snap):
                gridio.write_grid(
                    snap_dir / f"snap_{next(counter):06d}.grid", psi_snap)

        psi_n, trace = split_step_evolve(psi0, params,
                                         snapshot_callback=snapshot_callback)
        numeric_out = _engine_output(psi_n, delta_k)

    distance = None
    if analytic_out is not None and numeric_out is not None:
        distance = rel_l2(numeric_out.density.values, analytic_out.density.values)

    result = ScenarioResult(
        config=cfg, psi_initial=psi0, profile=profile,
        analytic=analytic_out, numeric=numeric_out, trace=trace,
        delta_k=delta_k, rel_l2_densities=distance,
    )
    if outdir is not None:
        write_artifacts(result, outdir)
    return result


def _write_crosscut_csv(cut: Crosscut, path) -> None:
    lines = [f"# axis: {cut.axis}", f"# fixed_value_per_nm: {float(cut.value)!r}",
             "k_per_nm,density"]
    for c, d in zip(cut.coords, cut.density):
        lines.append(f"{float(c)!r},{float(d)!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_artifacts(result: ScenarioResult, outdir) -> list[str]:
    """Write the configured artifact bundle; returns the relative file names."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    wanted = set(cfg.outputs)
    written: list[str] = []

    def emit(name: str):
        written.append(name)
        return outdir / name

    with open(emit("config.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfg.serialize())
    if "profile" in wanted:
        export_profile_csv(result.profile, emit("profile.csv"))
    if "grids" in wanted:
        gridio.write_grid(emit("initial.grid"), result.psi_initial)
    for label, out in (("analytic", result.analytic), ("numeric", result.numeric)):
        if out is None:
            continue
        if "grids" in wanted:
            gridio.write_grid(emit(f"{label}.grid"), out.psi)
        if "density" in wanted:
            render_heatmap(out.density, emit(f"density_{label}.pgm"),
                           colormap="log")
        if "populations" in wanted and out.sidebands is not None:
            out.sidebands.write_csv(emit(f"populations_{label}.csv"))
        if "crosscuts" in wanted:
            _write_crosscut_csv(crosscut(out.density, "kx", 0.0),
                                emit(f"crosscut_{label}_kx_ky0.csv"))
            for n in (0, 1, 2):
                kxn = out.psi.k0 + n * result.delta_k
                if out.density.kx[0] <= kxn <= out.density.kx[-1]:
                    _write_crosscut_csv(
                        crosscut(out.density, "ky", kxn),
                        emit(f"crosscut_{label}_ky_n{n}.csv"))
    if result.trace is not None and "trace" in wanted:
        result.trace.write_csv(emit("trace.csv"))
    if result.rel_l2_densities is not None and "compare" in wanted:
        with open(emit("compare.txt"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                "relative_l2_momentum_density = "
                f"{float(result.rel_l2_densities)!r}\n")
    if "summary" in wanted:
        with open(emit("summary.txt"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_summary_text(result))
    return written


def _summary_text(result: ScenarioResult) -> str:
    cfg = result.config
    k0, v0 = electron_kinematics(cfg.electron.energy_ev)
    lines = [
        f"engine = {cfg.engine}",
        f"k0_per_nm = {k0!r}",
        f"v0_nm_fs = {v0!r}",
        f"delta_k_per_nm = {float(result.delta_k)!r}",
    ]
    out = result.analytic or result.numeric
    if out is not None:
        lines.append(f"max_deflection_deg = {max_deflection(out.density)!r}")
        if out.sidebands is not None:
            lines.append(f"p0 = {out.sidebands.population(0)!r}")
    if result.rel_l2_densities is not None:
        lines.append(f"rel_l2_densities = {float(result.rel_l2_densities)!r}")
    return "\n".join(lines) + "\n"


def apply_axis_value(template: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """Derive one sweep-point configuration from the template."""
    if axis == "energy_ev":
        return replace(template, electron=replace(template.electron, energy_ev=value))
    if axis == "radius_nm":
        if not hasattr(template.model, "radius_nm"):
            raise ConfigurationError("radius sweeps require a wire model")
        return replace(template, model=replace(template.model, radius_nm=value))
    if axis == "field_v_per_nm":
        return replace(template, laser=replace(template.laser, field_v_per_nm=value))
    raise ConfigurationError(f"unknown sweep axis {axis!r}")


def run_sweep_point(template: ScenarioConfig, axis: str, value: float,
                    engine: str = "analytic", dump_grid_to=None) -> SweepPoint:
    """Run one sweep point and extract the scan metrics."""
    cfg = replace(apply_axis_value(template, axis, value), engine=engine,
                  outputs=("summary",))
    result = run_scenario(cfg)
    out = result.primary()
    if dump_grid_to is not None:
        target = Path(dump_grid_to)
        target.mkdir(parents=True, exist_ok=True)
        gridio.write_grid(target / f"{axis}_{value:g}.grid", out.psi)
    dmap = out.density
    k0 = out.psi.k0
    ix = int(np.argmin(np.abs(dmap.kx - k0)))
    iy = int(np.argmin(np.abs(dmap.ky)))
    depletion = float(dmap.values[iy, ix])
    marginal = Crosscut(axis="kx", value=math.nan, coords=dmap.kx,
                        density=dmap.values.sum(axis=0) * dmap.dky)
    try:
        dkx_measured = peak_spacing(marginal)
    except AnalysisError:
        dkx_measured = math.nan
    if isinstance(template.model, UniformStripeModel):
        dky = math.nan
    else:
        try:
            envelope = transverse_envelope(result.psi_initial)
            dky = transverse_splitting(result.profile, envelope=envelope)
        except AnalysisError:
            dky = math.nan
    return SweepPoint(
        parameter=value,
        populations=out.sidebands,
        depletion=depletion,
        alpha_max_deg=max_deflection(dmap),
        delta_kx=dkx_measured,
        delta_ky=dky,
    )


def resolve_output_root(out) -> Path:
    """Apply the NEDIFF_OUT environment override to a relative output path."""
    root = os.environ.get("NEDIFF_OUT")
    out = Path(out)
    if root and not out.is_absolute():
        return Path(root) / out
    return out
