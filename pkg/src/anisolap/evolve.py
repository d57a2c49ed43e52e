"""Spectral (DFT) evolution of densities under a generator symbol.

The transform convention is g_hat(k) = int e^{+i k.x} g(x) dx, so a symbol
psi plugs in without conjugation; on the discrete grid this makes the
multiplier application  fftn(psi * ifftn(values)).  Grids are periodic
truncations of free space, so densities must be negligible at the box
boundary; a boundary-mass check fails loudly when they are not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpectralGrid",
    "DensityField",
    "BoundaryMassError",
    "delta_density",
    "gaussian_density",
    "evolve_spectral",
    "evolve_time_fractional",
    "TimeFractionalResult",
    "density_from_samples",
    "compare_densities",
    "spectral_apply",
    "continuum_dft_abs2",
]


class BoundaryMassError(RuntimeError):
    """Too much probability mass near the periodic boundary."""


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid on [-L, L)^n with N points per axis.

    Wavenumbers per axis are k_j = pi*j/L for j in {-N/2, ..., N/2 - 1}
    (fftfreq ordering).
    """

    dimension: int
    half_width: float
    n_points: int

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2, or 3")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if self.n_points < 8 or self.n_points % 2:
            raise ValueError("n_points must be even and at least 8")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n_points)

    def points(self) -> np.ndarray:
        """(N^n, n) array of grid coordinates."""
        mesh = np.meshgrid(*([self.axis()] * self.dimension), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def k_axis(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.n_points, d=self.spacing)

    def k_points(self) -> np.ndarray:
        """(N^n, n) array of wavenumbers in fftfreq ordering."""
        mesh = np.meshgrid(*([self.k_axis()] * self.dimension), indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def shape(self) -> tuple:
        return (self.n_points,) * self.dimension


@dataclass(frozen=True)
class DensityField:
    """Density sampled on a periodic grid.

    ringing_estimate bounds the oscillatory error from spectral content at
    the grid cutoff; evolution from nonnegative data can undershoot zero by
    at most that amount (plus rounding)."""

    grid: SpectralGrid
    values: np.ndarray
    time: float = 0.0
    ringing_estimate: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape():
            raise ValueError(f"values must have shape {self.grid.shape()}")
        if not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def total_mass(self) -> float:
        return float(self.values.sum()) * self.grid.cell_volume

    def boundary_mass_fraction(self) -> float:
        """Share of |mass| in the outermost shell of cells."""
        v = np.abs(self.values)
        total = v.sum()
        if total == 0:
            return 0.0
        core = np.zeros_like(v, dtype=bool)
        core[tuple(slice(1, -1) for _ in range(self.grid.dimension))] = True
        return float(v[~core].sum() / total)


def delta_density(grid: SpectralGrid, center=None) -> DensityField:
    """Unit mass concentrated in the cell nearest to center."""
    c = np.zeros(grid.dimension) if center is None else np.asarray(center, dtype=float)
    idx = tuple(
        int(round((ci + grid.half_width) / grid.spacing)) % grid.n_points for ci in c
    )
    v = np.zeros(grid.shape())
    v[idx] = 1.0 / grid.cell_volume
    return DensityField(grid, v, 0.0)


def gaussian_density(grid: SpectralGrid, variance: float, center=None) -> DensityField:
    c = np.zeros(grid.dimension) if center is None else np.asarray(center, dtype=float)
    pts = grid.points()
    d2 = np.sum((pts - c) ** 2, axis=-1)
    vals = np.exp(-0.5 * d2 / variance) / (2.0 * math.pi * variance) ** (grid.dimension / 2.0)
    return DensityField(grid, vals.reshape(grid.shape()), 0.0)


def _symbol_on_grid(symbol, grid: SpectralGrid) -> np.ndarray:
    psi = np.asarray(symbol(grid.k_points()), dtype=complex)
    return psi.reshape(grid.shape())


def spectral_apply(values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """Apply a Fourier multiplier under the e^{+ikx} forward convention."""
    return np.real(np.fft.fftn(multiplier * np.fft.ifftn(values)))


def _nyquist_shell_mass(transform: np.ndarray, grid: SpectralGrid) -> float:
    """Sum of |transform| over the extreme-frequency shell, scaled to density
    units: an upper estimate for truncation ringing."""
    n = grid.dimension
    N = grid.n_points
    shell = np.zeros(grid.shape(), dtype=bool)
    for ax in range(n):
        sl = [slice(None)] * n
        sl[ax] = N // 2  # the unpaired most-negative frequency plane
        shell[tuple(sl)] = True
    dk = math.pi / grid.half_width
    return float(np.abs(transform[shell]).sum() * (dk / (2.0 * math.pi)) ** n)


def evolve_spectral(p0: DensityField, symbol, t: float, *,
                    boundary_tol: float = 1e-6, check_boundary: bool = True) -> DensityField:
    """Exact grid semigroup: multiply the transform by exp(t*psi(k))."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    psi = _symbol_on_grid(symbol, p0.grid)
    if not np.all(np.isfinite(psi)):
        raise ValueError("symbol evaluation returned non-finite values")
    mult = np.exp(t * psi)
    out = spectral_apply(p0.values, mult)
    phat = np.fft.ifftn(p0.values) * (2.0 * p0.grid.half_width) ** p0.grid.dimension
    ringing = _nyquist_shell_mass(mult * phat, p0.grid)
    result = DensityField(p0.grid, out, p0.time + t, ringing)
    if check_boundary:
        frac = result.boundary_mass_fraction()
        if frac > boundary_tol:
            raise BoundaryMassError(
                f"boundary cells hold {frac:.2e} of the mass (> {boundary_tol:.1e}); "
                "enlarge the box"
            )
    return result


@dataclass(frozen=True)
class TimeFractionalResult:
    density: DensityField
    stderr: np.ndarray
    n_samples: int
    tau_mean: float


def evolve_time_fractional(p0: DensityField, symbol, alpha: float, t: float,
                           n_subordination_samples: int, rng, *,
                           resolution: float | None = None,
                           check_boundary: bool = False) -> TimeFractionalResult:
    """Subordinated evolution: average the semigroup over inverse-subordinator
    times E(t); the Monte Carlo standard-error field is reported."""
    from .sampler import sample_inverse_subordinator

    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0,1)")
    taus = sample_inverse_subordinator(
        alpha, t, rng, size=n_subordination_samples, resolution=resolution
    )
    psi = _symbol_on_grid(symbol, p0.grid)
    base = np.fft.ifftn(p0.values)
    mean = np.zeros(p0.grid.shape())
    m2 = np.zeros(p0.grid.shape())
    for i, tau in enumerate(np.asarray(taus, dtype=float)):
        vals = np.real(np.fft.fftn(np.exp(tau * psi) * base))
        delta = vals - mean
        mean += delta / (i + 1)
        m2 += delta * (vals - mean)
    n = len(taus)
    stderr = np.sqrt(m2 / max(n - 1, 1) / n)
    out = DensityField(p0.grid, mean, p0.time + t)
    if check_boundary and out.boundary_mass_fraction() > 1e-6:
        raise BoundaryMassError("boundary mass check failed")
    return TimeFractionalResult(out, stderr, n, float(np.mean(taus)))


def density_from_samples(endpoints: np.ndarray, grid: SpectralGrid, *,
                         max_outside: float = 0.01) -> DensityField:
    """Normalised histogram of sample endpoints on the grid cells.

    Cells are centred on the grid points; points outside the box are counted
    and an error is raised when they exceed max_outside of the total.
    """
    pts = np.asarray(endpoints, dtype=float)
    if pts.size == 0:
        raise ValueError("empty sample ensemble")
    if grid.dimension == 1 and pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] != grid.dimension:
        raise ValueError("endpoints must have shape (N, n)")
    n_total = len(pts)
    idx = np.round((pts + grid.half_width) / grid.spacing).astype(int)
    inside = np.all((idx >= 0) & (idx < grid.n_points), axis=1)
    n_out = int(n_total - inside.sum())
    if n_out > max_outside * n_total:
        raise ValueError(
            f"{n_out} of {n_total} samples fall outside the box; enlarge it"
        )
    idx = idx[inside]
    counts = np.zeros(grid.shape())
    np.add.at(counts, tuple(idx.T), 1.0)
    vals = counts / (n_total * grid.cell_volume)
    return DensityField(grid, vals, 0.0)


def compare_densities(a: DensityField, b: DensityField) -> dict:
    """Riemann-sum L1, L2 and max distances between two fields on one grid."""
    if a.grid != b.grid:
        raise ValueError("density fields live on different grids")
    d = a.values - b.values
    cell = a.grid.cell_volume
    return {
        "l1": float(np.abs(d).sum() * cell),
        "l2": float(math.sqrt((d * d).sum() * cell)),
        "max": float(np.abs(d).max()),
    }


def continuum_dft_abs2(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """|g_hat(k)|^2 on the fftfreq grid for g sampled on the spatial grid."""
    ghat = np.fft.ifftn(values) * (2.0 * grid.half_width) ** grid.dimension
    return np.abs(ghat) ** 2
