"""Direct split-step integration of the 2D time-dependent Schrodinger equation.

The solver works on the carrier-factored envelope in the frame comoving with
the electron: the kinetic operator is diagonal in the envelope momenta and
the structure potential sweeps through the box at -v0.  Strang splitting
alternates exact kinetic segments with midpoint-sampled potential kicks; the
spatially uniform laser vector potential (dipole approximation) enters the
kinetic segments through an exactly integrated momentum-space phase, with
its A^2 part dropped as a global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft as _fft

from .core import Grid2D, Wavepacket
from .errors import ConfigurationError, NumericalError
from .nearfield import LaserParams, NearFieldModel, UniformStripeModel
from .units import ELECTRON_CHARGE, ELECTRON_MASS, HBAR

#: Invariant bounds on the per-step phases.
POTENTIAL_PHASE_BOUND = 0.1
KINETIC_PHASE_BOUND = 0.5

#: Mass fraction tolerated within the outer 10% border of the grid.
EDGE_MASS_TOL = 1e-6


@dataclass(frozen=True)
class EvolutionParams:
    """Time stepping description for one interaction run."""

    dt: float
    n_steps: int
    t_start: float
    t_end: float
    laser: LaserParams
    model: NearFieldModel
    include_vector_potential: bool = True
    snapshot_stride: int = 50

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigurationError("need at least one step")
        if self.t_end == self.t_start:
            raise ConfigurationError("evolution window must have nonzero length")
        # dt is signed; t_end < t_start runs the conjugated steps backward.
        expected = (self.t_end - self.t_start) / self.n_steps
        if not math.isclose(self.dt, expected, rel_tol=1e-12, abs_tol=0.0):
            raise ConfigurationError(
                f"dt {self.dt!r} inconsistent with window and step count "
                f"(expected {expected!r})")
        if self.snapshot_stride < 1:
            raise ConfigurationError("snapshot stride must be >= 1")

    def reversed(self) -> "EvolutionParams":
        """Parameters retracing this window backward (conjugated steps)."""
        return replace(self, t_start=self.t_end, t_end=self.t_start, dt=-self.dt)


@dataclass(frozen=True)
class EvolutionTrace:
    """Per-snapshot observables recorded during the evolution."""

    t: np.ndarray
    norm: np.ndarray
    x_mean: np.ndarray
    kx_mean: np.ndarray
    ky_mean: np.ndarray
    energy_ev: np.ndarray
    stride: int

    def write_csv(self, path) -> None:
        lines = ["t_fs,norm,x_mean_nm,kx_mean_per_nm,ky_mean_per_nm,energy_mean_ev"]
        for row in zip(self.t, self.norm, self.x_mean, self.kx_mean,
                       self.ky_mean, self.energy_ev):
            lines.append(",".join(repr(float(v)) for v in row))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _grid_kmax_sq(grid: Grid2D) -> float:
    return (math.pi / grid.dx) ** 2 + (math.pi / grid.dy) ** 2


def _peak_interaction_energy(params: EvolutionParams) -> float:
    return abs(ELECTRON_CHARGE) * params.model.peak_potential(
        params.laser.field_v_per_nm)


def validate_evolution(params: EvolutionParams, grid: Grid2D) -> None:
    """Check the per-step phase bounds before any stepping happens."""
    if isinstance(params.model, UniformStripeModel):
        raise ConfigurationError(
            "the uniform stripe model is synthetic and has no potential; "
            "run it through the analytic engine"
        )
    v_phase = abs(params.dt) * _peak_interaction_energy(params) / HBAR
    if v_phase > POTENTIAL_PHASE_BOUND * (1.0 + 1e-12):
        raise ConfigurationError(
            f"potential phase per step {v_phase:.3g} rad exceeds the "
            f"{POTENTIAL_PHASE_BOUND} rad bound; reduce dt"
        )
    k_phase = abs(params.dt) * HBAR * _grid_kmax_sq(grid) / (2.0 * ELECTRON_MASS)
    if k_phase > KINETIC_PHASE_BOUND * (1.0 + 1e-12):
        raise ConfigurationError(
            f"kinetic phase per step {k_phase:.3g} rad exceeds the "
            f"{KINETIC_PHASE_BOUND} rad bound; reduce dt"
        )


def choose_steps(laser: LaserParams, model: NearFieldModel, grid: Grid2D,
                 t_start: float, t_end: float, safety: float = 0.5,
                 include_vector_potential: bool = True,
                 snapshot_stride: int = 50) -> EvolutionParams:
    """Largest time step satisfying both phase bounds, with a safety factor.

    The step is then shrunk so an integer number of steps covers the window.
    """
    if not 0.0 < safety <= 1.0:
        raise ConfigurationError("safety factor must be in (0, 1]")
    window = t_end - t_start
    if not window > 0.0:
        raise ConfigurationError("evolution window must have positive length")
    if isinstance(model, UniformStripeModel):
        raise ConfigurationError(
            "the uniform stripe model is synthetic and has no potential; "
            "run it through the analytic engine"
        )
    v_peak = abs(ELECTRON_CHARGE) * model.peak_potential(laser.field_v_per_nm)
    dt_pot = POTENTIAL_PHASE_BOUND * HBAR / v_peak if v_peak > 0.0 else math.inf
    dt_kin = KINETIC_PHASE_BOUND * 2.0 * ELECTRON_MASS / (HBAR * _grid_kmax_sq(grid))
    dt0 = safety * min(dt_pot, dt_kin)
    if not dt0 > 0.0 or not math.isfinite(window / dt0):
        raise ConfigurationError("cannot choose a positive time step")
    n = max(1, int(math.ceil(window / dt0 - 1e-12)))
    params = EvolutionParams(
        dt=window / n, n_steps=n, t_start=t_start, t_end=t_end,
        laser=laser, model=model,
        include_vector_potential=include_vector_potential,
        snapshot_stride=snapshot_stride,
    )
    validate_evolution(params, grid)
    return params


def _vector_potential_integral(laser: LaserParams, ta: float, tb: float) -> float:
    """Integral of A_L(t) = -(E_L/omega) sin(omega t) over [ta, tb]."""
    w = laser.omega
    return laser.field_v_per_nm / (w * w) * (math.cos(w * tb) - math.cos(w * ta))


def split_step_evolve(psi0: Wavepacket, params: EvolutionParams,
                      snapshot_callback=None
                      ) -> tuple[Wavepacket, EvolutionTrace]:
    """Strang-split evolution over the window; returns final state and trace.

    The incoming amplitudes are taken as the envelope at t_start.  Each step
    applies the exact kinetic (and gauge) phase between potential midpoints
    and the potential phase sampled at the midpoint time.  When given,
    snapshot_callback(t, Wavepacket) fires at every trace snapshot.
    """
    grid = psi0.grid
    validate_evolution(params, grid)
    model, laser = params.model, params.laser
    dt = params.dt
    n = params.n_steps
    v0 = psi0.velocity
    q = ELECTRON_CHARGE

    kx1 = 2.0 * np.pi * np.fft.fftfreq(grid.nx, grid.dx)
    ky1 = 2.0 * np.pi * np.fft.fftfreq(grid.ny, grid.dy)
    ksq = kx1[None, :] ** 2 + ky1[:, None] ** 2
    kin_full = np.exp(-1j * (HBAR * dt / (2.0 * ELECTRON_MASS)) * ksq)
    kin_half = np.exp(-1j * (HBAR * 0.5 * dt / (2.0 * ELECTRON_MASS)) * ksq)

    def gauge_column(ta: float, tb: float):
        if not params.include_vector_potential:
            return None
        integral = _vector_potential_integral(laser, ta, tb)
        return np.exp(1j * (q / ELECTRON_MASS) * integral * ky1)[:, None]

    x = grid.x
    y_col = grid.y[:, None]
    cell = grid.cell_area
    n_border_x = max(1, grid.nx // 10)
    n_border_y = max(1, grid.ny // 10)

    snaps: list[tuple[float, float, float, float, float, float]] = []

    def record(t, psi_r, spec_raw):
        rho = psi_r.real**2 + psi_r.imag**2
        mass = float(rho.sum())
        norm = math.sqrt(mass * cell)
        if not math.isfinite(norm):
            raise NumericalError(
                f"non-finite amplitudes at t={t:g} fs",
                partial=_trace_from(snaps, params.snapshot_stride),
            )
        border = (float(rho[:, :n_border_x].sum()) + float(rho[:, -n_border_x:].sum())
                  + float(rho[:n_border_y, n_border_x:-n_border_x].sum())
                  + float(rho[-n_border_y:, n_border_x:-n_border_x].sum()))
        if border / mass > EDGE_MASS_TOL:
            raise NumericalError(
                f"wavepacket reached the outer 10% grid border at t={t:g} fs "
                f"(border mass fraction {border / mass:.3g})",
                partial=_trace_from(snaps, params.snapshot_stride),
            )
        x_mean = float((rho.sum(axis=0) * x).sum()) / mass
        rho_k = spec_raw.real**2 + spec_raw.imag**2
        mass_k = float(rho_k.sum())
        kx_mean = psi0.k0 + float((rho_k.sum(axis=0) * kx1).sum()) / mass_k
        ky_mean = float((rho_k.sum(axis=1) * ky1).sum()) / mass_k
        e_mean = (HBAR**2 / (2.0 * ELECTRON_MASS)) * float(
            (rho_k * ((psi0.k0 + kx1[None, :]) ** 2 + ky1[:, None] ** 2)).sum()
        ) / mass_k
        snaps.append((t, norm, x_mean, kx_mean, ky_mean, e_mean))
        if snapshot_callback is not None:
            snapshot_callback(t, Wavepacket(grid=grid, amplitudes=psi_r.copy(),
                                            t=t, k0=psi0.k0))

    t0 = params.t_start
    psi = np.array(psi0.amplitudes, dtype=np.complex128, copy=True)
    spec = _fft.fft2(psi)
    record(t0, psi, spec)

    # Leading half segment [t0, t0 + dt/2].
    spec *= kin_half
    gc = gauge_column(t0, t0 + 0.5 * dt)
    if gc is not None:
        spec *= gc

    phase_sign = -q / HBAR  # exp(-i q Phi dt / hbar) = exp(i phase_sign * Phi * dt)
    cos_buf = np.empty((grid.ny, grid.nx))
    sin_buf = np.empty((grid.ny, grid.nx))
    factor = np.empty((grid.ny, grid.nx), dtype=np.complex128)
    for k in range(n):
        t_mid = t0 + (k + 0.5) * dt
        psi = _fft.ifft2(spec, overwrite_x=True)
        theta = model.potential(x[None, :] + v0 * t_mid, y_col, laser.field_v_per_nm)
        theta *= phase_sign * dt * math.cos(laser.omega * t_mid + laser.phase_rad)
        np.cos(theta, out=cos_buf)
        np.sin(theta, out=sin_buf)
        factor.real = cos_buf
        factor.imag = sin_buf
        psi *= factor
        spec = _fft.fft2(psi)
        take_snap = ((k + 1) % params.snapshot_stride == 0) or (k == n - 1)
        if take_snap:
            record(t_mid, psi, spec)
        if k < n - 1:
            spec *= kin_full
            gc = gauge_column(t_mid, t_mid + dt)
            if gc is not None:
                spec *= gc

    t_end = params.t_end
    spec *= kin_half
    gc = gauge_column(t0 + (n - 0.5) * dt, t_end)
    if gc is not None:
        spec *= gc
    psi = _fft.ifft2(spec, overwrite_x=True)
    final = Wavepacket(grid=grid, amplitudes=psi, t=t_end, k0=psi0.k0)
    record(t_end, psi, _fft.fft2(psi))
    return final, _trace_from(snaps, params.snapshot_stride)


def _trace_from(snaps, stride) -> EvolutionTrace:
    arr = np.array(snaps, dtype=float).reshape(-1, 6)
    return EvolutionTrace(
        t=arr[:, 0], norm=arr[:, 1], x_mean=arr[:, 2], kx_mean=arr[:, 3],
        ky_mean=arr[:, 4], energy_ev=arr[:, 5], stride=stride,
    )
