"""Observables: densities, crosscuts, sideband populations, scan metrics."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Wavepacket, fwhm_interpolated, to_momentum
from .errors import AnalysisError, ConfigurationError, DomainError
from .nearfield import CouplingProfile, profile_transform
from .units import ELECTRON_MASS, HBAR


@dataclass(frozen=True)
class DensityMap:
    """Momentum-space probability density with absolute wavenumber axes."""

    values: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    dkx: float
    dky: float
    k0: float

    def total(self) -> float:
        return float(self.values.sum()) * self.dkx * self.dky


def momentum_density(psi: Wavepacket) -> DensityMap:
    spec = to_momentum(psi)
    return DensityMap(values=spec.density(), kx=spec.kx, ky=spec.ky,
                      dkx=spec.dkx, dky=spec.dky, k0=spec.k0)


@dataclass(frozen=True)
class Crosscut:
    """1D section through a density map.

    axis "kx" varies k_x at fixed k_y = value; axis "ky" varies k_y at
    fixed k_x = value.
    """

    axis: str
    value: float
    coords: np.ndarray
    density: np.ndarray


def crosscut(dmap: DensityMap, axis: str, value: float) -> Crosscut:
    """Extract a section, linearly interpolating between adjacent rows."""
    if axis == "kx":
        fixed, coords, data = dmap.ky, dmap.kx, dmap.values
    elif axis == "ky":
        fixed, coords, data = dmap.kx, dmap.ky, dmap.values.T
    else:
        raise DomainError(f"axis must be 'kx' or 'ky', got {axis!r}")
    if value < fixed[0] or value > fixed[-1]:
        raise DomainError(
            f"cut position {value:g} outside [{fixed[0]:g}, {fixed[-1]:g}]")
    pos = (value - fixed[0]) / (fixed[1] - fixed[0])
    i0 = min(int(math.floor(pos)), len(fixed) - 2)
    frac = pos - i0
    cut = (1.0 - frac) * data[i0] + frac * data[i0 + 1]
    return Crosscut(axis=axis, value=value, coords=coords.copy(), density=cut)


@dataclass(frozen=True)
class SidebandTable:
    """Populations binned by photon order."""

    orders: np.ndarray
    populations: np.ndarray
    ky_spread: np.ndarray
    delta_k: float

    def population(self, n: int) -> float:
        idx = np.nonzero(self.orders == n)[0]
        if len(idx) != 1:
            raise DomainError(f"order {n} not in table")
        return float(self.populations[idx[0]])

    def write_csv(self, path) -> None:
        lines = ["order,population,ky_spread_per_nm"]
        for n, p, s in zip(self.orders, self.populations, self.ky_spread):
            lines.append(f"{int(n)},{repr(float(p))},{repr(float(s))}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def sideband_populations(dmap: DensityMap, k0: float, delta_k: float,
                         min_cells: int = 6) -> SidebandTable:
    """Integrate k_x bins of width delta_k centered on k0 + n delta_k.

    Only complete bins inside the grid are reported, so the populations sum
    to at most the total mass.
    """
    if delta_k < min_cells * dmap.dkx:
        raise ConfigurationError(
            f"sideband spacing {delta_k:g} spans fewer than {min_cells} grid "
            f"cells (dkx = {dmap.dkx:g}); refine the momentum grid"
        )
    offs = dmap.kx - k0
    n_lo = int(math.ceil((offs[0] + 0.5 * delta_k) / delta_k))
    n_hi = int(math.floor((offs[-1] - 0.5 * delta_k) / delta_k))
    orders = np.arange(n_lo, n_hi + 1)
    mass_x = dmap.values.sum(axis=0) * dmap.dky * dmap.dkx
    ky2_x = (dmap.values * dmap.ky[:, None] ** 2).sum(axis=0) * dmap.dky * dmap.dkx
    pops = np.empty(len(orders))
    spread = np.empty(len(orders))
    idx = np.floor(offs / delta_k + 0.5).astype(int)
    for i, n in enumerate(orders):
        sel = idx == n
        m = float(mass_x[sel].sum())
        pops[i] = m
        spread[i] = math.sqrt(float(ky2_x[sel].sum()) / m) if m > 0.0 else 0.0
    return SidebandTable(orders=orders, populations=pops, ky_spread=spread,
                         delta_k=delta_k)


def find_peaks(coords: np.ndarray, values: np.ndarray,
               threshold: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Local maxima above threshold*max, refined by 3-point parabolas.

    Returns (positions, heights) in ascending position order.
    """
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        raise AnalysisError("profile too short for peak detection")
    vmax = float(v.max())
    if vmax <= 0.0:
        raise AnalysisError("profile has no positive values")
    level = threshold * vmax
    inner = v[1:-1]
    is_peak = (inner >= v[:-2]) & (inner > v[2:]) & (inner >= level)
    idx = np.nonzero(is_peak)[0] + 1
    positions = []
    heights = []
    for i in idx:
        y0, y1, y2 = v[i - 1], v[i], v[i + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0.0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
        positions.append(coords[i] + shift * (coords[1] - coords[0]))
        heights.append(y1 - 0.25 * (y0 - y2) * shift)
    return np.array(positions), np.array(heights)


def peak_spacing(cut: Crosscut, threshold: float = 0.01) -> float:
    """Median spacing of adjacent local maxima above the threshold."""
    positions, _ = find_peaks(cut.coords, cut.density, threshold)
    if len(positions) < 2:
        raise AnalysisError(
            f"need at least two peaks to measure a spacing, found {len(positions)}")
    return float(np.median(np.diff(positions)))


def energy_axis(kx: np.ndarray, k0: float) -> tuple[np.ndarray, np.ndarray]:
    """Energy change per k_x column: exact and first order in (k_x - k0)."""
    kx = np.asarray(kx, dtype=float)
    exact = HBAR**2 * (kx**2 - k0**2) / (2.0 * ELECTRON_MASS)
    first = HBAR**2 * k0 * (kx - k0) / ELECTRON_MASS
    return exact, first


def deflection_angle(ky, k0: float):
    """Transverse scattering angle atan(k_y / k0) in degrees."""
    if not k0 > 0.0:
        raise DomainError("carrier wavenumber must be positive")
    return np.degrees(np.arctan(np.asarray(ky, dtype=float) / k0))


def max_deflection(dmap: DensityMap, threshold: float = 0.01) -> float:
    """Largest |deflection| carrying at least threshold*max marginal density."""
    marg = dmap.values.sum(axis=1)
    level = threshold * float(marg.max())
    sel = np.nonzero(marg >= level)[0]
    ky_max = max(abs(dmap.ky[sel[0]]), abs(dmap.ky[sel[-1]]))
    return float(deflection_angle(ky_max, dmap.k0))


def energy_bandwidth_fwhm(psi: Wavepacket) -> float:
    """FWHM of the kinetic-energy density, in eV.

    Maps the longitudinal momentum marginal onto the exact energy axis; the
    half-width (fwhm/2) is the conventional single-sided energy spread.
    """
    spec = to_momentum(psi)
    marg = spec.density().sum(axis=0)
    e_exact, _ = energy_axis(spec.kx, psi.k0)
    return fwhm_interpolated(e_exact, marg)


def transverse_splitting(profile: CouplingProfile, envelope=None,
                         method: str = "slit") -> float:
    """Transverse diffraction scale delta_ky of a coupling profile.

    method "lobes" returns half the separation of the two dominant lobes of
    the coupling transform (the literal peak splitting; clean for singly
    humped profiles).  method "slit" locates the coupling maximum y_slit
    (weighted by the transverse envelope when given) and returns
    pi / (2 y_slit), the fringe half-spacing of an effective double slit at
    +-y_slit.  The slit measure stays single-valued through the coupling
    recurrences where individual transform lobes appear and vanish.
    """
    if method == "lobes":
        tf = profile_transform(profile)
        mag = np.abs(tf.values)
        positions, heights = find_peaks(tf.ky, mag**2, threshold=0.05)
        if len(positions) < 2:
            raise AnalysisError("coupling transform has fewer than two lobes")
        order = np.argsort(heights)[::-1]
        top = np.sort(positions[order[:2]])
        if not (top[0] < 0.0 < top[1]):
            raise AnalysisError("coupling transform lobes are not symmetric")
        return float(0.5 * (top[1] - top[0]))
    if method != "slit":
        raise DomainError(f"unknown splitting method {method!r}")
    mag = np.abs(profile.coupling_cos.astype(float))
    if envelope is not None:
        mag = mag * np.abs(np.asarray(envelope))
    if float(mag.max()) <= 0.0:
        raise AnalysisError("coupling profile carries no weight")
    positions, heights = find_peaks(profile.y, mag, threshold=0.5)
    if len(positions) == 0:
        raise AnalysisError("coupling profile has no interior maximum")
    y_slit = float(np.abs(positions[int(np.argmax(heights))]))
    if y_slit <= 0.0:
        raise AnalysisError("degenerate coupling geometry")
    return float(math.pi / (2.0 * y_slit))


def rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    """Relative L2 distance ||a - b|| / ||b||, with b as the reference."""
    ref = math.sqrt(float(np.sum(np.asarray(b, dtype=float) ** 2)))
    if ref == 0.0:
        raise DomainError("reference field is identically zero")
    return math.sqrt(float(np.sum((np.asarray(a, float) - np.asarray(b, float)) ** 2))) / ref


@dataclass(frozen=True)
class SweepPoint:
    """Metrics collected for one swept parameter value."""

    parameter: float
    populations: SidebandTable | None
    depletion: float
    alpha_max_deg: float
    delta_kx: float
    delta_ky: float
    error: str = ""


@dataclass(frozen=True)
class SweepResult:
    """Parameter scan summary, ordered by parameter value."""

    axis: str
    points: list[SweepPoint]
    config_hash: str
    order_range: int = 6

    def parameters(self) -> np.ndarray:
        return np.array([p.parameter for p in self.points])

    def population_matrix(self) -> np.ndarray:
        """Populations P_n for n in [-order_range, order_range], one row per point."""
        m = np.zeros((len(self.points), 2 * self.order_range + 1))
        for i, p in enumerate(self.points):
            if p.populations is None:
                m[i] = np.nan
                continue
            for j, n in enumerate(range(-self.order_range, self.order_range + 1)):
                sel = np.nonzero(p.populations.orders == n)[0]
                m[i, j] = p.populations.populations[sel[0]] if len(sel) else 0.0
        return m

    def ground_state_minimum(self) -> float:
        """Parameter value at which the initial-state occupation is smallest.

        The ground state here is the initial momentum state (k0, 0); its
        occupation is the central density, not the binned n=0 population,
        which bottoms out at a different drive mismatch.
        """
        dep = np.array([p.depletion for p in self.points])
        ok = ~np.isnan(dep)
        if not ok.any():
            raise AnalysisError("sweep produced no valid points")
        params = self.parameters()
        return float(params[ok][int(np.argmin(dep[ok]))])

    def write_csv(self, path) -> None:
        ns = range(-self.order_range, self.order_range + 1)
        header = [self.axis] + [f"P_{n}" for n in ns] + [
            "depletion", "alpha_max_deg", "delta_kx_per_nm", "delta_ky_per_nm",
            "depletion_min_flag", "error"]
        pops = self.population_matrix()
        try:
            argmin = self.ground_state_minimum()
        except AnalysisError:
            argmin = math.nan
        lines = [",".join(header)]
        for i, p in enumerate(self.points):
            row = [repr(float(p.parameter))]
            row += [repr(float(v)) for v in pops[i]]
            row += [repr(float(p.depletion)), repr(float(p.alpha_max_deg)),
                    repr(float(p.delta_kx)), repr(float(p.delta_ky))]
            row.append("1" if p.parameter == argmin else "0")
            row.append(p.error.replace(",", ";"))
            lines.append(",".join(row))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def run_sweep(template, axis: str, values, engine: str = "analytic",
              threads: int = 1, order_range: int = 6,
              dump_grids_to=None) -> SweepResult:
    """Run one scenario per parameter value and collect scan metrics.

    Points run concurrently (the FFT work releases the GIL) and are assembled
    in parameter order.  A failing point is recorded and the sweep continues.
    With dump_grids_to set, every point's final wavepacket is dumped there.
    """
    from .scenario import run_sweep_point  # local import to avoid a cycle

    values = [float(v) for v in values]
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigurationError("sweep values must be strictly increasing")
    cfg_hash = hashlib.sha256(
        (template.serialize() + f"|{axis}").encode()).hexdigest()[:16]

    def one(value: float) -> SweepPoint:
        try:
            return run_sweep_point(template, axis, value, engine=engine,
                                   dump_grid_to=dump_grids_to)
        except Exception as exc:  # per-point failures must not kill the sweep
            return SweepPoint(parameter=value, populations=None,
                              depletion=math.nan, alpha_max_deg=math.nan,
                              delta_kx=math.nan, delta_ky=math.nan,
                              error=f"{type(exc).__name__}: {exc}")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(one, values))
    else:
        points = [one(v) for v in values]
    return SweepResult(axis=axis, points=points, config_hash=cfg_hash,
                       order_range=order_range)
