"""Closed-form interaction engine: phase masks, photon orders, free flight.

The near-field interaction multiplies the envelope by exp(i dphi) with
dphi(x, y) = C(y) cos(dk x) + S(y) sin(dk x).  For S = 0 the Jacobi-Anger
identity resolves the result into photon orders n with transverse
amplitudes i^n J_n(C(y)) g_perp(y), which this module evaluates exactly,
as a truncated power series, and in the single-path weak-field limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.special

from .core import Grid2D, MomentumSpectrum, Wavepacket, from_momentum, to_momentum
from .errors import ConfigurationError, DomainError, UnsupportedPathError
from .nearfield import CouplingProfile
from .units import ELECTRON_MASS, HBAR

#: Orders with total weight below this are dropped when truncating adaptively.
ORDER_TAIL_WEIGHT = 1e-8
ORDER_CAP = 24


@dataclass(frozen=True)
class PhaseMask:
    """Interaction phase sampled on a grid."""

    values: np.ndarray
    delta_k: float
    profile: CouplingProfile
    grid: Grid2D


def mask_phase(profile: CouplingProfile, x) -> np.ndarray:
    """Phase dphi at arbitrary longitudinal positions, shape (ny, len(x))."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    arg = profile.delta_k * xs
    return (
        profile.coupling_cos[:, None] * np.cos(arg)[None, :]
        + profile.coupling_sin[:, None] * np.sin(arg)[None, :]
    )


def build_phase_mask(profile: CouplingProfile, grid: Grid2D) -> PhaseMask:
    """Sample the interaction phase on the full grid."""
    if len(profile.y) != grid.ny or not np.allclose(
            profile.y, grid.y, rtol=0.0, atol=1e-12):
        raise ConfigurationError(
            "coupling profile is not sampled on the grid's y axis")
    return PhaseMask(values=mask_phase(profile, grid.x),
                     delta_k=profile.delta_k, profile=profile, grid=grid)


def apply_interaction(psi: Wavepacket, mask: PhaseMask) -> Wavepacket:
    """Multiply the envelope by the unimodular interaction factor."""
    if mask.grid != psi.grid:
        raise ConfigurationError("mask and wavepacket live on different grids")
    return psi.with_amplitudes(psi.amplitudes * np.exp(1j * mask.values))


@dataclass(frozen=True)
class OrderDecomposition:
    """Per-photon-order transverse amplitudes and their spectra.

    orders runs over [-n_max, n_max]; amplitudes[i] is a_n(y) for
    orders[i] and spectra[i] its unitary transform over k_y.
    """

    orders: np.ndarray
    y: np.ndarray
    amplitudes: np.ndarray
    ky: np.ndarray
    spectra: np.ndarray
    delta_k: float
    series_depth: int | None = None

    def populations(self) -> np.ndarray:
        dy = float(self.y[1] - self.y[0])
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1) * dy

    def order_index(self, n: int) -> int:
        idx = np.nonzero(self.orders == n)[0]
        if len(idx) != 1:
            raise DomainError(f"order {n} not present in decomposition")
        return int(idx[0])


def transverse_envelope(psi: Wavepacket) -> np.ndarray:
    """Normalized transverse slice through the packet's center column.

    Valid for envelopes that factorize into longitudinal and transverse
    parts, which holds for Gaussian construction and stays true under free
    dispersion.
    """
    rho_x = psi.density().sum(axis=0)
    ix = int(np.argmax(rho_x))
    gy = psi.amplitudes[:, ix].astype(np.complex128)
    dy = psi.grid.dy
    nrm = math.sqrt(float(np.sum(np.abs(gy) ** 2)) * dy)
    if nrm == 0.0:
        raise DomainError("wavepacket has an empty center column")
    return gy / nrm


def _unitary_transform_1d(values: np.ndarray, y: np.ndarray):
    dy = float(y[1] - y[0])
    n = len(y)
    ky = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, dy))
    out = np.fft.fftshift(np.fft.fft(values, axis=-1), axes=-1)
    out = out * (dy / math.sqrt(2.0 * math.pi)) * np.exp(-1j * ky * y[0])
    return ky, out


def order_amplitudes_exact(psi: Wavepacket, profile: CouplingProfile,
                           n_max: int | None = None) -> OrderDecomposition:
    """Exact photon-order amplitudes for a pure cosine coupling.

    Requires the sine coupling to vanish (odd-potential symmetry with zero
    near-field phase); otherwise the order structure is not a plain Bessel
    ladder and the caller should apply the full mask instead.
    """
    if profile.max_sin > 1e-9:
        raise UnsupportedPathError(
            "sine coupling is nonzero; photon orders are not Bessel-resolved. "
            "Use build_phase_mask + apply_interaction and bin the spectrum."
        )
    gy = transverse_envelope(psi)
    c = profile.coupling_cos
    w_env = np.abs(gy) ** 2 * psi.grid.dy

    if n_max is None:
        # Smallest truncation whose discarded weight is below the tail target;
        # sum_n J_n^2 = 1 makes the accounting exact.
        covered = float(np.sum(scipy.special.jv(0, c) ** 2 * w_env))
        n_max = 0
        while 1.0 - covered > ORDER_TAIL_WEIGHT and n_max < ORDER_CAP:
            n_max += 1
            covered += 2.0 * float(np.sum(scipy.special.jv(n_max, c) ** 2 * w_env))
    orders = np.arange(-n_max, n_max + 1)
    amps = np.empty((len(orders), len(gy)), dtype=np.complex128)
    for i, n in enumerate(orders):
        # i^n J_n = i^|n| J_|n| for both signs of n.
        amps[i] = (1j ** abs(n)) * scipy.special.jv(abs(n), c) * gy
    ky, spectra = _unitary_transform_1d(amps, profile.y)
    return OrderDecomposition(orders=orders, y=profile.y.copy(), amplitudes=amps,
                              ky=ky, spectra=spectra, delta_k=profile.delta_k)


def order_series_taylor(coupling: float, n: int, l_max: int) -> complex:
    """Partial sum of the excitation-path series for one photon order.

    Sums paths with l = |n| .. l_max photon exchanges in powers
    coupling^(2l - |n|).  The power/factorial bookkeeping follows the Bessel
    expansion, i.e. each power of the coupling carries a factor 1/2
    (coefficient i^(2l-|n|) / (2^(2l-|n|) (l-|n|)! l!)); with all powers of
    two collected as 2^(2l) the partial sums do not converge to the Bessel
    limit, so that variant is not used.  Converges to i^n J_n(coupling).
    """
    n_abs = abs(int(n))
    if l_max < n_abs:
        raise DomainError(f"series depth {l_max} is below the order |n|={n_abs}")
    half = coupling / 2.0
    total = 0.0
    for l in range(n_abs, l_max + 1):
        j = l - n_abs
        term = ((-1.0) ** j) * half ** (2 * j + n_abs) / (
            math.factorial(j) * math.factorial(l))
        total += term
    return (1j ** n_abs) * total


@dataclass(frozen=True)
class OrderSpectrum:
    """Transverse spectrum of a single photon order."""

    order: int
    ky: np.ndarray
    values: np.ndarray


def weak_field_order(psi: Wavepacket, profile: CouplingProfile, n: int) -> OrderSpectrum:
    """Single-path (weak-field) transverse spectrum of order n.

    Keeps only the most direct path, a_n = i^n (C/2)^n / n! g_perp, whose
    spectrum is the (n-fold) convolution of the initial transverse spectrum
    with the coupling transform.
    """
    if n < 0:
        raise DomainError("weak-field orders are indexed by n >= 0")
    gy = transverse_envelope(psi)
    amp = (1j ** n) * (profile.coupling_cos / 2.0) ** n / math.factorial(n) * gy
    ky, vals = _unitary_transform_1d(amp, profile.y)
    return OrderSpectrum(order=n, ky=ky, values=vals)


def export_order_decomposition(dec: OrderDecomposition, outdir) -> list[str]:
    """Write one CSV per photon order plus a manifest; returns file names."""
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, n in enumerate(dec.orders):
        name = f"order_{int(n):+03d}.csv"
        lines = ["ky_per_nm,intensity,phase_rad"]
        for ky, val in zip(dec.ky, dec.spectra[i]):
            lines.append(f"{float(ky)!r},{float(abs(val))**2!r},"
                         f"{float(np.angle(val))!r}")
        (outdir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(name)
    pops = dec.populations()
    manifest = [
        f"orders = {','.join(str(int(n)) for n in dec.orders)}",
        f"delta_k_per_nm = {float(dec.delta_k)!r}",
        f"series_depth = {dec.series_depth if dec.series_depth is not None else 'exact'}",
        "populations = " + ",".join(repr(float(p)) for p in pops),
    ]
    (outdir / "manifest.txt").write_text("\n".join(manifest) + "\n",
                                         encoding="utf-8")
    written.append("manifest.txt")
    return written


def vacuum_propagate(psi: Wavepacket, tau: float, axes: str = "xy") -> Wavepacket:
    """Free flight for tau fs in the frame comoving with the carrier.

    Multiplies each momentum component by the dispersion phase
    exp(-i hbar (kappa_x^2 + kappa_y^2) tau / 2m), where kappa is measured
    from the carrier; the packet disperses in place instead of translating
    across the periodic grid.  axes "x" restricts the dispersion to the
    longitudinal axis, modelling a long flight whose transverse state is
    re-prepared by an aperture.
    """
    if axes not in ("xy", "x"):
        raise DomainError(f"axes must be 'xy' or 'x', got {axes!r}")
    if tau == 0.0:
        return psi
    _check_dispersal_fits(psi, tau, axes=axes)
    g = psi.grid
    spec = to_momentum(psi)
    kp_x = spec.kx - psi.k0
    ksq = kp_x[None, :] ** 2
    if axes == "xy":
        ksq = ksq + spec.ky[:, None] ** 2
    phase = (-HBAR * tau / (2.0 * ELECTRON_MASS)) * ksq
    vals = spec.values * np.exp(1j * phase)
    out = from_momentum(MomentumSpectrum(
        values=vals, kx=spec.kx, ky=spec.ky, dkx=spec.dkx, dky=spec.dky,
        k0=spec.k0, t=psi.t + tau, grid=g))
    return out


def _check_dispersal_fits(psi: Wavepacket, tau: float, n_sigma: float = 4.0,
                          axes: str = "xy") -> None:
    g = psi.grid
    rho = psi.density()
    mass = float(rho.sum())
    spec = to_momentum(psi)
    rho_k = spec.density()
    mass_k = float(rho_k.sum())

    def _axis_stats(marg, coords):
        mean = float((marg * coords).sum())
        var = float((marg * (coords - mean) ** 2).sum())
        return mean, math.sqrt(max(var, 0.0))

    checks = [(1, g.x, spec.kx - psi.k0, g.x[0], g.x[-1])]
    if axes == "xy":
        checks.append((0, g.y, spec.ky, g.y[0], g.y[-1]))
    for axis, coords, kcoords, lo, hi in checks:
        marg = rho.sum(axis=(1 - axis)) / mass
        mean, sig = _axis_stats(marg, coords)
        marg_k = rho_k.sum(axis=(1 - axis)) / mass_k
        _, sig_k = _axis_stats(marg_k, kcoords)
        sig_final = math.hypot(sig, HBAR * sig_k * tau / ELECTRON_MASS)
        if mean - n_sigma * sig_final < lo or mean + n_sigma * sig_final > hi:
            raise ConfigurationError(
                f"packet would outgrow the grid during {tau:g} fs of free "
                f"flight (projected sigma {sig_final:.3g} nm)"
            )
