"""Scalar near-field models and the coupling integrals they induce.

A monochromatic near field Phi0(x, y) cos(omega t + phase) imprints on a
passing electron a phase set entirely by two transverse profiles: the cosine
and sine Fourier components of Phi0 along the trajectory at the spatial
frequency delta_k = omega / v0 (the wavevector mismatch).  This module
computes those components by adaptive quadrature for each model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.integrate

from .errors import ConfigurationError, DomainError, NumericalError, StateError, UnsupportedPathError
from .quadrature import adaptive_quad
from .units import C0, ELECTRON_CHARGE, HBAR

_SQRT8LN2 = math.sqrt(8.0 * math.log(2.0))


@dataclass(frozen=True)
class LaserParams:
    """Monochromatic, y-polarized excitation."""

    wavelength_nm: float
    field_v_per_nm: float
    phase_rad: float = 0.0

    def __post_init__(self):
        if not self.wavelength_nm > 0.0:
            raise DomainError("wavelength must be positive")
        if self.field_v_per_nm < 0.0:
            raise DomainError("field amplitude must be nonnegative")

    @property
    def omega(self) -> float:
        """Angular frequency in rad/fs."""
        return 2.0 * math.pi * C0 / self.wavelength_nm

    def photon_energy_ev(self) -> float:
        return HBAR * self.omega


def retardation_phase(eps: complex) -> float:
    """Phase lag of the induced near field relative to the incident laser.

    Taken as the argument of the complex response ratio (eps-1)/(eps+1).
    """
    eps = complex(eps)
    if eps == -1.0:
        raise DomainError("permittivity -1 is a pole of the response")
    return float(np.angle((eps - 1.0) / (eps + 1.0)))


@dataclass(frozen=True)
class WireModel:
    """Infinite wire of radius R perpendicular to the simulation plane.

    `response` is the magnitude |(eps-1)/(eps+1)| of the quasi-static
    polarizability ratio; the induced surface field enhancement is
    1 + response at the poles.
    """

    radius_nm: float
    response: float = 0.5
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.radius_nm > 0.0:
            raise DomainError("wire radius must be positive")
        if not 0.0 <= self.response <= 1.0:
            raise DomainError("response factor must be in [0, 1]")

    @classmethod
    def from_permittivity(cls, eps: complex, radius_nm: float,
                          center: tuple[float, float] = (0.0, 0.0)) -> "WireModel":
        eps = complex(eps)
        if eps == -1.0:
            raise DomainError("permittivity -1 is a pole of the response")
        beta = abs((eps - 1.0) / (eps + 1.0))
        return cls(radius_nm=radius_nm, response=beta, center=center)

    def potential(self, x, y, field_v_per_nm: float):
        """Static envelope of the near-field potential, in volts.

        Inside the wire the potential is linear in y; outside it carries the
        R^2/r^2 image decay.  Both branches meet continuously at r = R, which
        the single max(r^2, R^2) expression exploits.
        """
        cx, cy = self.center
        xs = np.asarray(x, dtype=float) - cx
        ys = np.asarray(y, dtype=float) - cy
        r2 = xs * xs + ys * ys
        r2 = np.maximum(r2, self.radius_nm**2)
        return field_v_per_nm * self.response * self.radius_nm**2 * ys / r2

    def peak_potential(self, field_v_per_nm: float) -> float:
        return field_v_per_nm * self.response * self.radius_nm

    @property
    def extent_hint(self) -> float:
        return self.radius_nm


@dataclass(frozen=True)
class GapResonatorModel:
    """Pair of Gaussian-smoothed in-plane dipoles forming a nanogap.

    Two identical dipoles oriented along +y sit at (0, +-s/2); their fields
    add along y inside the gap and the combined potential is odd in y and
    even in x.  Smoothing a 2D point dipole p*r/r^2 with an isotropic
    Gaussian of std sigma has the closed form

        Phi(r) = p . r / r^2 * (1 - exp(-r^2 / (2 sigma^2)))

    which is what `potential` evaluates (singularity-free via expm1).
    The dipole moment is fixed by `calibrate`, which rescales it so the peak
    |E_y| on the gap axis equals `peak_field_v_per_nm`.
    """

    separation_nm: float
    smoothing_fwhm_nm: float
    peak_field_v_per_nm: float
    center: tuple[float, float] = (0.0, 0.0)
    moment: float | None = None
    peak_potential_v: float | None = None

    def __post_init__(self):
        if not self.separation_nm > 0.0:
            raise DomainError("dipole separation must be positive")
        if not self.smoothing_fwhm_nm > 0.0:
            raise DomainError("smoothing FWHM must be positive")
        if not self.peak_field_v_per_nm > 0.0:
            raise DomainError("peak gap field must be positive")
        if self.smoothing_fwhm_nm >= self.separation_nm:
            raise DomainError(
                "smoothing FWHM must be smaller than the separation, "
                "otherwise no open gap remains"
            )

    @property
    def sigma(self) -> float:
        return self.smoothing_fwhm_nm / _SQRT8LN2

    @property
    def calibrated(self) -> bool:
        return self.moment is not None

    def _dipole_y(self):
        s = self.separation_nm
        return (self.center[1] + 0.5 * s, self.center[1] - 0.5 * s)

    def _potential_unit(self, x, y):
        # Potential for unit dipole moment on each site.
        cx, _ = self.center
        xs = np.asarray(x, dtype=float) - cx
        ys = np.asarray(y, dtype=float)
        sig2 = self.sigma**2
        out = 0.0
        for yc in self._dipole_y():
            eta = ys - yc
            rho2 = xs * xs + eta * eta
            u = rho2 / (2.0 * sig2)
            # (1 - exp(-u)) / (2 sigma^2 u) is finite at u = 0 (limit 1/(2 sigma^2)).
            with np.errstate(invalid="ignore"):
                fac = np.where(u > 1e-14, -np.expm1(-u) / np.where(u > 1e-14, u, 1.0), 1.0)
            out = out + eta * fac / (2.0 * sig2)
        return out

    def _axis_field_unit(self, y):
        # -dPhi/dy on the x = center_x axis for unit moment; closed form.
        ys = np.asarray(y, dtype=float)
        sig2 = self.sigma**2
        out = 0.0
        for yc in self._dipole_y():
            eta = ys - yc
            u = eta * eta / (2.0 * sig2)
            with np.errstate(invalid="ignore"):
                fac = np.where(u > 1e-14, -np.expm1(-u) / np.where(u > 1e-14, u, 1.0), 1.0)
            fprime = (2.0 * np.exp(-u) - fac) / (2.0 * sig2)
            out = out - fprime
        return out

    def potential(self, x, y, field_v_per_nm: float | None = None):
        """Calibrated gap potential in volts; the laser field amplitude is
        not used because the in-gap amplitude is fixed by calibration."""
        if self.moment is None:
            raise StateError("gap resonator must be calibrated before use")
        return self.moment * self._potential_unit(x, y)

    def peak_potential(self, field_v_per_nm: float | None = None) -> float:
        if self.peak_potential_v is None:
            raise StateError("gap resonator must be calibrated before use")
        return self.peak_potential_v

    @property
    def extent_hint(self) -> float:
        return 0.5 * self.separation_nm + 2.0 * self.smoothing_fwhm_nm


def calibrate_gap_amplitude(model: GapResonatorModel) -> GapResonatorModel:
    """Rescale the dipole moments so the in-gap peak |E_y| equals the target.

    The field is linear in the moment, so the rescaling is exact and
    deterministic.  The gap interior is the region between the smoothing
    clouds, |y - cy| <= (s - w)/2 on the gap axis.
    """
    half_open = 0.5 * (model.separation_nm - model.smoothing_fwhm_nm)
    ys = model.center[1] + np.linspace(-half_open, half_open, 2001)
    ey_unit = model._axis_field_unit(ys)
    peak = float(np.max(np.abs(ey_unit)))
    if peak <= 0.0:
        raise DomainError("degenerate geometry: no field on the gap axis")
    moment = model.peak_field_v_per_nm / peak
    # Record the global potential maximum for time-step bounds; the extremes
    # sit on the gap axis where the dipole fields align.
    probe_y = model.center[1] + np.linspace(
        -model.extent_hint - 2 * model.smoothing_fwhm_nm,
        model.extent_hint + 2 * model.smoothing_fwhm_nm, 4001)
    probe_x = model.center[0] + np.linspace(0.0, 3.0 * model.smoothing_fwhm_nm, 61)
    pot = model._potential_unit(probe_x[None, :], probe_y[:, None])
    peak_pot = moment * float(np.max(np.abs(pot)))
    return replace(model, moment=moment, peak_potential_v=peak_pot)


@dataclass(frozen=True)
class UniformStripeModel:
    """Synthetic model with a constant cosine coupling over a y interval.

    It bypasses the potential integrals entirely and exists to reduce the 2D
    problem to the known one-dimensional sideband limit in tests.
    """

    coupling_rad: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not self.y_max > self.y_min:
            raise DomainError("stripe interval must have positive length")

    def potential(self, x, y, field_v_per_nm: float | None = None):
        raise UnsupportedPathError(
            "the uniform stripe is a synthetic analytic-engine model and has "
            "no potential; use the analytic engine"
        )

    @property
    def extent_hint(self) -> float:
        return max(abs(self.y_min), abs(self.y_max))


NearFieldModel = WireModel | GapResonatorModel | UniformStripeModel


def wire_potential(model: WireModel, field_v_per_nm: float, x, y):
    """Quasi-static wire potential at (x, y) in volts."""
    return model.potential(x, y, field_v_per_nm)


def gap_resonator_potential(model: GapResonatorModel, x, y):
    """Calibrated gap-resonator potential at (x, y) in volts."""
    return model.potential(x, y)


@dataclass(frozen=True)
class CouplingProfile:
    """Sampled coupling integrals for one (model, laser, velocity) triple.

    coupling_cos multiplies cos(delta_k x') in the interaction phase and
    coupling_sin multiplies sin(delta_k x').
    """

    y: np.ndarray
    coupling_cos: np.ndarray
    coupling_sin: np.ndarray
    delta_k: float
    model: NearFieldModel
    laser: LaserParams
    v0: float

    @cached_property
    def max_sin(self) -> float:
        return float(np.max(np.abs(self.coupling_sin)))


def default_x_bounds(model: NearFieldModel, delta_k: float) -> tuple[float, float]:
    """Truncation window for the trajectory integral.

    The quasi-static potentials fall off like 1/x^2, so the window is taken
    large against both the structure size and the oscillation period.
    """
    half = max(40.0 * model.extent_hint, 10.0 / delta_k)
    return (-half, half)


def _oscillatory_tails(model, field, ys, x_lo, x_hi, delta_k, phase, tol):
    """Semi-infinite continuations of the two trajectory integrals.

    Uses Fourier-weighted quadrature (QUADPACK QAWF) per transverse sample;
    this handles the algebraically decaying, oscillating tails that a plain
    truncation cannot reach at tight tolerances.
    """
    cphi, sphi = math.cos(phase), math.sin(phase)
    cos_tot = np.zeros(len(ys))
    sin_tot = np.zeros(len(ys))
    eps = tol / 4.0
    for i, yv in enumerate(ys):
        def f_right(x):
            return model.potential(x, yv, field)

        def f_left(u):
            return model.potential(-u, yv, field)

        c_p, ec1 = scipy.integrate.quad(
            f_right, x_hi, np.inf, weight="cos", wvar=delta_k, epsabs=eps, limlst=200)
        s_p, ec2 = scipy.integrate.quad(
            f_right, x_hi, np.inf, weight="sin", wvar=delta_k, epsabs=eps, limlst=200)
        c_m, ec3 = scipy.integrate.quad(
            f_left, -x_lo, np.inf, weight="cos", wvar=delta_k, epsabs=eps, limlst=200)
        s_m, ec4 = scipy.integrate.quad(
            f_left, -x_lo, np.inf, weight="sin", wvar=delta_k, epsabs=eps, limlst=200)
        achieved = max(ec1, ec2, ec3, ec4)
        if achieved > 10.0 * eps:
            raise NumericalError(
                f"oscillatory tail integral did not converge at y={yv:g}",
                achieved=achieved,
            )
        # cos-kernel integrand: cos(dk x + phase); sin-kernel: sin(dk x + phase).
        # Left tails carry x -> -u, flipping the sign of the sine transforms.
        cos_tot[i] = cphi * (c_p + c_m) - sphi * (s_p - s_m)
        sin_tot[i] = sphi * (c_p + c_m) + cphi * (s_p - s_m)
    return cos_tot, sin_tot


def coupling_integrals(model: NearFieldModel, laser: LaserParams, v0: float, y,
                       x_bounds: tuple[float, float] | None = None,
                       tol: float = 1e-10):
    """Cosine and sine coupling integrals at transverse positions y, in rad.

    Evaluates the trajectory integrals of Phi0(x, y) against
    cos/sin(delta_k x + phase), scaled by -q/(hbar v0).  Pass infinite
    x_bounds to include the oscillatory tails exactly; the default window
    truncates them, which is adequate for mask construction.
    """
    if not v0 > 0.0:
        raise DomainError("electron velocity must be positive")
    delta_k = laser.omega / v0
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    scalar = np.ndim(y) == 0

    if isinstance(model, UniformStripeModel):
        inside = (ys >= model.y_min) & (ys <= model.y_max)
        c = np.where(inside, model.coupling_rad, 0.0)
        s = np.zeros_like(c)
        if scalar:
            return float(c[0]), float(s[0])
        return c, s

    prefactor = -ELECTRON_CHARGE / (HBAR * v0)
    phase = laser.phase_rad
    field = laser.field_v_per_nm
    if x_bounds is None:
        x_lo, x_hi = default_x_bounds(model, delta_k)
        infinite = False
    else:
        x_lo, x_hi = x_bounds
        infinite = math.isinf(x_lo) or math.isinf(x_hi)
        if infinite:
            if not (math.isinf(x_lo) and math.isinf(x_hi)):
                raise ConfigurationError("x bounds must be both finite or both infinite")
            x_lo, x_hi = default_x_bounds(model, delta_k)
    if not x_hi > x_lo:
        raise ConfigurationError(f"empty integration window ({x_lo}, {x_hi})")

    max_panel = math.pi / (4.0 * delta_k)

    def integrand_cos(xs):
        pot = model.potential(xs[:, None], ys[None, :], field)
        return pot * np.cos(delta_k * xs + phase)[:, None]

    def integrand_sin(xs):
        pot = model.potential(xs[:, None], ys[None, :], field)
        return pot * np.sin(delta_k * xs + phase)[:, None]

    # The requested tolerance is on the coupling in rad; the quadrature runs
    # on the bare potential integral, so rescale by the prefactor magnitude.
    raw_tol = tol / abs(prefactor)
    core_tol = raw_tol / 2.0 if infinite else raw_tol
    c_core, _ = adaptive_quad(integrand_cos, x_lo, x_hi, core_tol, max_panel=max_panel)
    s_core, _ = adaptive_quad(integrand_sin, x_lo, x_hi, core_tol, max_panel=max_panel)

    if infinite:
        c_tail, s_tail = _oscillatory_tails(
            model, field, ys, x_lo, x_hi, delta_k, phase, raw_tol)
        c_core = c_core + c_tail
        s_core = s_core + s_tail

    c = prefactor * c_core
    s = prefactor * s_core
    if scalar:
        return float(c[0]), float(s[0])
    return c, s


def coupling_profile(model: NearFieldModel, laser: LaserParams, v0: float,
                     y_grid: np.ndarray,
                     x_bounds: tuple[float, float] | None = None,
                     tol: float = 1e-10) -> CouplingProfile:
    """Sample the coupling integrals on a uniform transverse grid."""
    ys = np.asarray(y_grid, dtype=float)
    c, s = coupling_integrals(model, laser, v0, ys, x_bounds=x_bounds, tol=tol)
    return CouplingProfile(
        y=ys, coupling_cos=np.asarray(c), coupling_sin=np.asarray(s),
        delta_k=laser.omega / v0, model=model, laser=laser, v0=v0,
    )


@dataclass(frozen=True)
class ProfileTransform:
    """Unitary 1D Fourier transform of the cosine coupling profile."""

    ky: np.ndarray
    values: np.ndarray
    dky: float


def profile_transform(profile: CouplingProfile) -> ProfileTransform:
    """Transverse spectrum of the cosine coupling; odd and imaginary for an
    odd real profile."""
    ys = profile.y
    steps = np.diff(ys)
    if not np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
        raise ConfigurationError("profile must be sampled on a uniform y grid")
    dy = float(steps[0])
    n = len(ys)
    ky = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, dy))
    vals = np.fft.fftshift(np.fft.fft(profile.coupling_cos))
    vals = vals * (dy / math.sqrt(2.0 * math.pi)) * np.exp(-1j * ky * ys[0])
    return ProfileTransform(ky=ky, values=vals, dky=2.0 * np.pi / (n * dy))


def _fmt(v: float) -> str:
    return repr(float(v))


def export_profile_csv(profile: CouplingProfile, path) -> None:
    """CSV export with a comment header recording the provenance."""
    lines = [
        f"# model: {profile.model!r}",
        f"# laser: wavelength_nm={_fmt(profile.laser.wavelength_nm)} "
        f"field_v_per_nm={_fmt(profile.laser.field_v_per_nm)} "
        f"phase_rad={_fmt(profile.laser.phase_rad)}",
        f"# v0_nm_fs: {_fmt(profile.v0)}",
        f"# delta_k_per_nm: {_fmt(profile.delta_k)}",
        "y_nm,I1_rad,I2_rad",
    ]
    for yv, c, s in zip(profile.y, profile.coupling_cos, profile.coupling_sin):
        lines.append(f"{_fmt(yv)},{_fmt(c)},{_fmt(s)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
