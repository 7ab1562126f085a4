"""Grids, wavepackets and momentum transforms.

Wavepacket amplitudes hold the slowly varying envelope g(x, y); the carrier
exp(i k0 x - i E0 t / hbar) is kept analytically and never sampled, because
the carrier wavelength (~0.12 nm at 100 eV) is far below practical grid
spacings.  Momentum axes are therefore reported as absolute wavenumbers
k_x = k0 + kappa_x, where kappa is the envelope frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.fft as _fft

from .errors import ConfigurationError, DomainError
from .units import ELECTRON_MASS, HBAR, electron_kinematics, kinetic_energy

_SQRT8LN2 = math.sqrt(8.0 * math.log(2.0))  # FWHM / sigma for a Gaussian density


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Uniform real-space grid with power-of-two cell counts.

    x0, y0 are the coordinates of the first cell center; cell j sits at
    x0 + j*dx.  The implied momentum grid has spacing 2*pi/(n*d) per axis.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float

    def __post_init__(self):
        if not (_is_power_of_two(self.nx) and _is_power_of_two(self.ny)):
            raise DomainError(
                f"grid counts must be powers of two, got {self.nx} x {self.ny}"
            )
        if not (self.dx > 0.0 and self.dy > 0.0):
            raise DomainError("grid spacings must be positive")

    @classmethod
    def centered(cls, nx: int, ny: int, dx: float, dy: float) -> "Grid2D":
        """Grid whose cell centers include the origin, spanning ~[-L/2, L/2)."""
        return cls(nx, ny, dx, dy, -(nx // 2) * dx, -(ny // 2) * dy)

    @cached_property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.ny)

    @cached_property
    def kx(self) -> np.ndarray:
        """Envelope momentum axis along x, ascending (fftshifted)."""
        return 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(self.nx, self.dx))

    @cached_property
    def ky(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(self.ny, self.dy))

    @property
    def dkx(self) -> float:
        return 2.0 * np.pi / (self.nx * self.dx)

    @property
    def dky(self) -> float:
        return 2.0 * np.pi / (self.ny * self.dy)

    @property
    def extent_x(self) -> float:
        return self.nx * self.dx

    @property
    def extent_y(self) -> float:
        return self.ny * self.dy

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy


@dataclass(frozen=True)
class Wavepacket:
    """Envelope samples on a grid, tagged with time and carrier wavenumber.

    amplitudes has shape (ny, nx); axis 0 runs over y, axis 1 over x.
    """

    grid: Grid2D
    amplitudes: np.ndarray
    t: float
    k0: float

    def __post_init__(self):
        if self.amplitudes.shape != (self.grid.ny, self.grid.nx):
            raise ConfigurationError(
                f"amplitude shape {self.amplitudes.shape} does not match grid "
                f"({self.grid.ny}, {self.grid.nx})"
            )

    @property
    def energy_ev(self) -> float:
        """Carrier kinetic energy E0 = (hbar k0)^2 / 2m."""
        return kinetic_energy(self.k0)

    @property
    def velocity(self) -> float:
        return HBAR * self.k0 / ELECTRON_MASS

    def norm(self) -> float:
        """L2 norm, sqrt(sum |g|^2 dx dy)."""
        a = self.amplitudes
        return math.sqrt(float(np.sum(a.real**2 + a.imag**2)) * self.grid.cell_area)

    def density(self) -> np.ndarray:
        a = self.amplitudes
        return a.real**2 + a.imag**2

    def with_amplitudes(self, amplitudes: np.ndarray, t: float | None = None) -> "Wavepacket":
        return replace(self, amplitudes=amplitudes, t=self.t if t is None else t)


@dataclass(frozen=True)
class MomentumSpectrum:
    """Complex momentum-space field over absolute wavenumbers (k_x, k_y).

    Normalized so that sum |values|^2 dkx dky equals the real-space norm
    squared (Parseval), i.e. the continuum unitary convention with a
    symmetric 1/(2 pi) split.
    """

    values: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    dkx: float
    dky: float
    k0: float
    t: float
    grid: Grid2D
    normalization: str = "unitary-continuum"

    def density(self) -> np.ndarray:
        v = self.values
        return v.real**2 + v.imag**2

    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.density())) * self.dkx * self.dky)


def _axis_phases(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    # Phase factors referencing the DFT to the physical cell-center coordinates.
    px = np.exp(-1j * grid.kx * grid.x0)
    py = np.exp(-1j * grid.ky * grid.y0)
    return px, py


def to_momentum(psi: Wavepacket) -> MomentumSpectrum:
    """Forward transform of the envelope, x -> k with an exp(-i k x) kernel.

    The returned k_x axis is shifted by the carrier, so a plane-wave envelope
    peaks at k_x = k0.
    """
    g = psi.grid
    raw = _fft.fft2(psi.amplitudes)
    vals = np.fft.fftshift(raw) * (g.cell_area / (2.0 * np.pi))
    px, py = _axis_phases(g)
    vals = vals * px[None, :]
    vals *= py[:, None]
    return MomentumSpectrum(
        values=vals,
        kx=psi.k0 + g.kx,
        ky=g.ky.copy(),
        dkx=g.dkx,
        dky=g.dky,
        k0=psi.k0,
        t=psi.t,
        grid=g,
    )


def from_momentum(spectrum: MomentumSpectrum) -> Wavepacket:
    """Inverse of :func:`to_momentum`; round trips to machine precision."""
    g = spectrum.grid
    px, py = _axis_phases(g)
    vals = spectrum.values * np.conj(px)[None, :]
    vals = vals * np.conj(py)[:, None]
    raw = np.fft.ifftshift(vals) / (g.cell_area / (2.0 * np.pi))
    amps = _fft.ifft2(raw)
    return Wavepacket(grid=g, amplitudes=amps, t=spectrum.t, k0=spectrum.k0)


def gaussian_wavepacket(
    grid: Grid2D,
    energy_ev: float,
    fwhm_x: float,
    fwhm_y: float,
    center: tuple[float, float] = (0.0, 0.0),
) -> Wavepacket:
    """Normalized Gaussian envelope with carrier along +x.

    Widths are FWHM of the probability density |psi|^2.  The grid extent must
    be at least four times each FWHM so the envelope is well contained.
    """
    if not (fwhm_x > 0.0 and fwhm_y > 0.0):
        raise DomainError("FWHM values must be positive")
    if grid.extent_x < 4.0 * fwhm_x or grid.extent_y < 4.0 * fwhm_y:
        raise ConfigurationError(
            f"grid extent ({grid.extent_x:g} x {grid.extent_y:g} nm) must be "
            f">= 4x FWHM ({fwhm_x:g} x {fwhm_y:g} nm)"
        )
    k0, _ = electron_kinematics(energy_ev)
    cx, cy = center
    sx = fwhm_x / _SQRT8LN2
    sy = fwhm_y / _SQRT8LN2
    # |g|^2 is Gaussian with std sigma, so the amplitude carries 1/(4 sigma^2).
    gx = np.exp(-((grid.x - cx) ** 2) / (4.0 * sx * sx))
    gy = np.exp(-((grid.y - cy) ** 2) / (4.0 * sy * sy))
    amps = gy[:, None] * gx[None, :]
    amps = amps.astype(np.complex128)
    amps /= math.sqrt(float(np.sum(amps.real**2)) * grid.cell_area)
    return Wavepacket(grid=grid, amplitudes=amps, t=0.0, k0=k0)


def check_coverage(psi: Wavepacket, n_sigma: float = 4.0) -> None:
    """Require the packet's +-n_sigma support to fit inside the grid."""
    g = psi.grid
    rho = psi.density()
    mass = float(rho.sum())
    x_mean = float((rho.sum(axis=0) * g.x).sum()) / mass
    y_mean = float((rho.sum(axis=1) * g.y).sum()) / mass
    x_var = float((rho.sum(axis=0) * (g.x - x_mean) ** 2).sum()) / mass
    y_var = float((rho.sum(axis=1) * (g.y - y_mean) ** 2).sum()) / mass
    sx, sy = math.sqrt(x_var), math.sqrt(y_var)
    x_lo, x_hi = g.x[0], g.x[-1]
    y_lo, y_hi = g.y[0], g.y[-1]
    ok = (
        x_mean - n_sigma * sx >= x_lo
        and x_mean + n_sigma * sx <= x_hi
        and y_mean - n_sigma * sy >= y_lo
        and y_mean + n_sigma * sy <= y_hi
    )
    if not ok:
        raise ConfigurationError(
            f"grid does not cover the wavepacket to {n_sigma:g} sigma on all "
            f"sides (center ({x_mean:.3g}, {y_mean:.3g}), sigma "
            f"({sx:.3g}, {sy:.3g}) nm)"
        )


def fwhm_interpolated(coords: np.ndarray, values: np.ndarray) -> float:
    """Full width at half maximum with linear interpolation at the crossings."""
    values = np.asarray(values, dtype=float)
    imax = int(np.argmax(values))
    half = values[imax] / 2.0
    if values[imax] <= 0.0:
        raise DomainError("profile has no positive maximum")
    above = values >= half
    idx = np.nonzero(above)[0]
    i_lo, i_hi = idx[0], idx[-1]

    def _cross(i_in, i_out):
        # linear interpolation between the inside and outside samples
        if i_out < 0 or i_out >= len(values):
            return coords[i_in]
        f = (values[i_in] - half) / (values[i_in] - values[i_out])
        return coords[i_in] + f * (coords[i_out] - coords[i_in])

    left = _cross(i_lo, i_lo - 1)
    right = _cross(i_hi, i_hi + 1)
    return float(abs(right - left))


def temporal_spread(psi: Wavepacket) -> float:
    """Temporal FWHM in fs: longitudinal density FWHM divided by v0."""
    g = psi.grid
    profile = psi.density().sum(axis=0) * g.dy
    width = fwhm_interpolated(g.x, profile)
    return width / psi.velocity


def mean_momentum(psi: Wavepacket) -> tuple[float, float]:
    """Density-weighted mean of (k_x, k_y) including the carrier."""
    spec = to_momentum(psi)
    rho = spec.density()
    mass = float(rho.sum())
    kx = float((rho.sum(axis=0) * spec.kx).sum()) / mass
    ky = float((rho.sum(axis=1) * spec.ky).sum()) / mass
    return kx, ky
