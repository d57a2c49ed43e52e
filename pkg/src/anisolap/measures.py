"""Directional probability measures on the unit sphere in 1, 2, and 3 dimensions.

A measure is a mixture of point atoms and piecewise-constant angular bands.
In 2D a band is an arc parametrised by its polar angle; in 3D it is a
latitude-longitude rectangle with density taken with respect to the surface
measure sin(theta) dtheta dphi.  In 1D the "sphere" is the two-point set
{-1, +1} and only atoms are allowed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "AngularBand",
    "DirectionalMeasure",
    "MomentSummary",
    "StabilityProfile",
    "make_atomic_measure",
    "make_banded_measure",
    "make_measure",
    "uniform_measure",
    "sphere_integrate",
    "band_nodes",
    "measure_nodes",
    "support_directions",
    "is_nondegenerate",
    "moments",
    "measure_to_json",
    "measure_from_json",
    "is_symmetric",
]

MASS_TOL = 1e-10
RANK_TOL = 1e-8
_TWO_PI = 2.0 * math.pi


def _unit(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("direction vector must be nonzero")
    return v / norm


@dataclass(frozen=True)
class AngularBand:
    """Constant-density angular region of the unit sphere.

    bounds is (theta0, theta1) in 2D with the arc [theta0, theta1), and
    (theta0, theta1, phi0, phi1) in 3D where theta is the polar angle from
    the +z axis and phi the azimuth.  The density is constant with respect
    to arc length (2D) / surface area (3D).
    """

    bounds: tuple
    density: float

    def __post_init__(self):
        b = tuple(float(x) for x in self.bounds)
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "density", float(self.density))
        if self.density < 0:
            raise ValueError("band density must be nonnegative")
        if len(b) == 2:
            t0, t1 = b
            if not 0.0 < t1 - t0 <= _TWO_PI + 1e-12:
                raise ValueError("2D band must have width in (0, 2*pi]")
        elif len(b) == 4:
            t0, t1, p0, p1 = b
            if not (0.0 <= t0 < t1 <= math.pi + 1e-12):
                raise ValueError("3D band polar bounds must satisfy 0 <= theta0 < theta1 <= pi")
            if not 0.0 < p1 - p0 <= _TWO_PI + 1e-12:
                raise ValueError("3D band azimuthal width must be in (0, 2*pi]")
        else:
            raise ValueError("bounds must have length 2 (2D) or 4 (3D)")

    @property
    def dimension(self) -> int:
        return 2 if len(self.bounds) == 2 else 3

    def angular_measure(self) -> float:
        """Surface measure of the region (arc length in 2D)."""
        if self.dimension == 2:
            t0, t1 = self.bounds
            return t1 - t0
        t0, t1, p0, p1 = self.bounds
        return (math.cos(t0) - math.cos(t1)) * (p1 - p0)

    def mass(self) -> float:
        return self.density * self.angular_measure()


def _angles_to_dirs_2d(theta: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _angles_to_dirs_3d(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class DirectionalMeasure:
    """Probability measure on the unit sphere: atoms plus constant-density bands."""

    dimension: int
    atoms: tuple  # of (direction ndarray, weight)
    bands: tuple  # of AngularBand

    def __post_init__(self):
        n = int(self.dimension)
        if n not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2, or 3")
        object.__setattr__(self, "dimension", n)
        atoms = []
        for coords, w in self.atoms:
            d = _unit(coords)
            if d.shape != (n,):
                raise ValueError(f"atom direction has wrong dimension: {d.shape}")
            w = float(w)
            if w < 0:
                raise ValueError("atom weights must be nonnegative")
            d.setflags(write=False)
            atoms.append((d, w))
        object.__setattr__(self, "atoms", tuple(atoms))
        bands = tuple(self.bands)
        if bands and n == 1:
            raise ValueError("1D measures admit only atoms at +1 and -1")
        for b in bands:
            if b.dimension != n:
                raise ValueError("band dimensionality does not match the measure")
        _check_disjoint(bands)
        object.__setattr__(self, "bands", bands)
        total = self.total_mass()
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {total!r} differs from 1 by more than {MASS_TOL}")

    def total_mass(self) -> float:
        return sum(w for _, w in self.atoms) + sum(b.mass() for b in self.bands)

    @property
    def n_components(self) -> int:
        return len(self.atoms) + len(self.bands)

    def component_masses(self) -> np.ndarray:
        """Mass per component, atoms first then bands."""
        return np.array([w for _, w in self.atoms] + [b.mass() for b in self.bands])


def _check_disjoint(bands) -> None:
    # pairwise overlap test on interval interiors, 2D arcs taken mod 2*pi
    def intervals_2d(b):
        t0, t1 = b.bounds
        t0m = t0 % _TWO_PI
        t1m = t0m + (t1 - t0)
        if t1m <= _TWO_PI + 1e-15:
            return [(t0m, t1m)]
        return [(t0m, _TWO_PI), (0.0, t1m - _TWO_PI)]

    def overlap(a0, a1, b0, b1):
        return min(a1, b1) - max(a0, b0) > 1e-12

    for i in range(len(bands)):
        for j in range(i + 1, len(bands)):
            bi, bj = bands[i], bands[j]
            if bi.dimension == 2:
                hit = any(
                    overlap(*u, *v) for u in intervals_2d(bi) for v in intervals_2d(bj)
                )
            else:
                ti = bi.bounds[:2]
                tj = bj.bounds[:2]
                polar = overlap(*ti, *tj)
                hit = polar and any(
                    overlap(*u, *v)
                    for u in intervals_2d(AngularBand(bi.bounds[2:], 0.0))
                    for v in intervals_2d(AngularBand(bj.bounds[2:], 0.0))
                )
            if hit:
                raise ValueError("angular bands must be pairwise disjoint")


def make_measure(dimension, atoms=(), bands=()) -> DirectionalMeasure:
    """General constructor; total mass must already be 1 within tolerance."""
    bands = tuple(b if isinstance(b, AngularBand) else AngularBand(*b) for b in bands)
    return DirectionalMeasure(dimension, tuple(atoms), bands)


def make_atomic_measure(dimension, atoms) -> DirectionalMeasure:
    """Purely atomic measure; weights are renormalised to sum to one."""
    atoms = list(atoms)
    if not atoms:
        raise ValueError("atom list must be nonempty")
    total = sum(float(w) for _, w in atoms)
    if total <= 0:
        raise ValueError("total atom weight must be positive")
    atoms = [(c, float(w) / total) for c, w in atoms]
    return DirectionalMeasure(dimension, tuple(atoms), ())


def make_banded_measure(dimension, bands) -> DirectionalMeasure:
    """Banded measure; the densities must integrate to one (no renormalisation)."""
    bands = tuple(b if isinstance(b, AngularBand) else AngularBand(*b) for b in bands)
    if not bands:
        raise ValueError("band list must be nonempty")
    return DirectionalMeasure(dimension, (), bands)


def uniform_measure(dimension) -> DirectionalMeasure:
    """Isotropic measure: density 1/omega_n, with atoms at +-1 in 1D."""
    if dimension == 1:
        return make_atomic_measure(1, [((1.0,), 0.5), ((-1.0,), 0.5)])
    if dimension == 2:
        return make_banded_measure(2, [AngularBand((0.0, _TWO_PI), 1.0 / _TWO_PI)])
    return make_banded_measure(3, [AngularBand((0.0, math.pi, 0.0, _TWO_PI), 1.0 / (4.0 * math.pi))])


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

_GL_CACHE: dict = {}


def _gl(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    return _GL_CACHE[order]


def _segment_nodes(a, b, order):
    x, w = _gl(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def band_nodes(band: AngularBand, refinement: int = 64, order: int = 8,
               split_angles=()):
    """Fixed quadrature nodes/weights (w.r.t. the sphere surface measure).

    Returns (directions (M, n), weights (M,)); weights include the density.
    split_angles lists 2D polar angles at which the integrand is known to be
    non-smooth; panels never straddle them.
    """
    if band.dimension == 2:
        t0, t1 = band.bounds
        cuts = sorted({t0, t1} | {
            s for s0 in split_angles
            for s in (t0 + ((s0 - t0) % _TWO_PI),)
            if t0 + 1e-14 < s < t1 - 1e-14
        })
        thetas, weights = [], []
        total = t1 - t0
        for a, b in zip(cuts[:-1], cuts[1:]):
            n_pan = max(2, int(round(refinement * (b - a) / total)))
            edges = np.linspace(a, b, n_pan + 1)
            for u, v in zip(edges[:-1], edges[1:]):
                x, w = _segment_nodes(u, v, order)
                thetas.append(x)
                weights.append(w)
        theta = np.concatenate(thetas)
        w = np.concatenate(weights) * band.density
        return _angles_to_dirs_2d(theta), w
    # 3D: tensor rule in (cos(theta), phi); surface measure absorbed by the substitution
    t0, t1, p0, p1 = band.bounds
    n_t = max(2, refinement // 4)
    n_p = max(2, refinement // 4)
    ct_edges = np.linspace(math.cos(t1), math.cos(t0), n_t + 1)
    p_edges = np.linspace(p0, p1, n_p + 1)
    cts, wts = [], []
    for a, b in zip(ct_edges[:-1], ct_edges[1:]):
        x, w = _segment_nodes(a, b, order)
        cts.append(x)
        wts.append(w)
    ct = np.concatenate(cts)
    wt = np.concatenate(wts)
    ps, wps = [], []
    for a, b in zip(p_edges[:-1], p_edges[1:]):
        x, w = _segment_nodes(a, b, order)
        ps.append(x)
        wps.append(w)
    ph = np.concatenate(ps)
    wp = np.concatenate(wps)
    CT, PH = np.meshgrid(ct, ph, indexing="ij")
    W = np.outer(wt, wp) * band.density
    theta = np.arccos(np.clip(CT.ravel(), -1.0, 1.0))
    dirs = _angles_to_dirs_3d(theta, PH.ravel())
    return dirs, W.ravel()


def measure_nodes(measure: DirectionalMeasure, refinement: int = 64, order: int = 8,
                  split_angles=()):
    """All quadrature nodes of a measure: exact atoms plus band rules.

    Returns (directions (M, n), weights (M,), component_index (M,)) where
    component_index labels atoms then bands in measure order.
    """
    dirs, weights, comp = [], [], []
    for i, (d, w) in enumerate(measure.atoms):
        dirs.append(d[None, :])
        weights.append(np.array([w]))
        comp.append(np.array([i]))
    for j, band in enumerate(measure.bands):
        d, w = band_nodes(band, refinement=refinement, order=order,
                          split_angles=split_angles)
        dirs.append(d)
        weights.append(w)
        comp.append(np.full(len(w), len(measure.atoms) + j, dtype=int))
    return np.concatenate(dirs), np.concatenate(weights), np.concatenate(comp)


def _integrate_band_adaptive(band, f, tol, split_angles, order=15):
    """Adaptive composite Gauss-Legendre over one band."""
    if band.dimension == 2:
        t0, t1 = band.bounds
        cuts = sorted({t0, t1} | {
            t0 + ((s - t0) % _TWO_PI)
            for s in split_angles
            if t0 + 1e-13 < t0 + ((s - t0) % _TWO_PI) < t1 - 1e-13
        })

        def eval_seg(a, b):
            x, w = _segment_nodes(a, b, order)
            vals = f(_angles_to_dirs_2d(x))
            if not np.all(np.isfinite(vals)):
                raise ValueError("non-finite integrand value on the sphere")
            return np.sum(w * vals)

        total = 0.0 + 0.0j
        stack = [(a, b, eval_seg(a, b), 0) for a, b in zip(cuts[:-1], cuts[1:])]
        while stack:
            a, b, coarse, depth = stack.pop()
            mid = 0.5 * (a + b)
            left, right = eval_seg(a, mid), eval_seg(mid, b)
            if abs(left + right - coarse) < max(tol, 1e-16) or depth >= 40:
                total += left + right
            else:
                stack.append((a, mid, left, depth + 1))
                stack.append((mid, b, right, depth + 1))
        return complex(total) * band.density

    t0, t1, p0, p1 = band.bounds

    def eval_rect(c0, c1, q0, q1):
        xt, wt = _segment_nodes(c0, c1, 7)
        xp, wp = _segment_nodes(q0, q1, 7)
        CT, PH = np.meshgrid(xt, xp, indexing="ij")
        theta = np.arccos(np.clip(CT.ravel(), -1.0, 1.0))
        vals = f(_angles_to_dirs_3d(theta, PH.ravel()))
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite integrand value on the sphere")
        return np.sum(np.outer(wt, wp).ravel() * vals)

    c0, c1 = math.cos(t1), math.cos(t0)
    total = 0.0 + 0.0j
    stack = [(c0, c1, p0, p1, eval_rect(c0, c1, p0, p1), 0)]
    while stack:
        a, b, q0, q1, coarse, depth = stack.pop()
        am, qm = 0.5 * (a + b), 0.5 * (q0 + q1)
        parts = [
            (a, am, q0, qm), (am, b, q0, qm), (a, am, qm, q1), (am, b, qm, q1)
        ]
        fine_vals = [eval_rect(*p) for p in parts]
        fine = sum(fine_vals)
        if abs(fine - coarse) < max(tol, 1e-16) or depth >= 14:
            total += fine
        else:
            for p, v in zip(parts, fine_vals):
                stack.append((*p, v, depth + 1))
    return complex(total) * band.density


def sphere_integrate(measure: DirectionalMeasure, integrand, tol: float = 1e-10,
                     split_angles=(), order: int = 15):
    """Integrate a function of the direction against the measure.

    integrand is called with an (M, n) array of unit vectors and must return
    an (M,) array (real or complex).  Atoms are summed exactly; bands use
    adaptive composite Gauss-Legendre of the given order with absolute
    tolerance tol, never straddling the listed split angles (2D).
    """
    total = 0.0 + 0.0j
    for d, w in measure.atoms:
        val = np.asarray(integrand(d[None, :]))[0]
        if not np.isfinite(complex(val)):
            raise ValueError("non-finite integrand value on the sphere")
        total += w * complex(val)
    n_bands = max(1, len(measure.bands))
    for band in measure.bands:
        total += _integrate_band_adaptive(band, integrand, tol / n_bands,
                                          split_angles, order=order)
    return complex(total)


# ---------------------------------------------------------------------------
# moments, nondegeneracy, symmetry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSummary:
    """Second moment matrix A = int phi phi^T dm and mean b = int phi dm."""

    covariance: np.ndarray
    mean: np.ndarray


def moments(measure: DirectionalMeasure, tol: float = 1e-12) -> MomentSummary:
    n = measure.dimension
    A = np.empty((n, n))
    b = np.empty(n)
    for i in range(n):
        b[i] = sphere_integrate(measure, lambda d, i=i: d[:, i], tol=tol).real
        for j in range(i, n):
            A[i, j] = A[j, i] = sphere_integrate(
                measure, lambda d, i=i, j=j: d[:, i] * d[:, j], tol=tol
            ).real
    A.setflags(write=False)
    b.setflags(write=False)
    return MomentSummary(A, b)


def support_directions(measure: DirectionalMeasure) -> np.ndarray:
    """Sample directions covering the support of the measure."""
    dirs = [d for d, w in measure.atoms if w > 0]
    for band in measure.bands:
        if band.density <= 0:
            continue
        if band.dimension == 2:
            t0, t1 = band.bounds
            frac = np.array([1.0 / 6.0, 0.5, 5.0 / 6.0])
            dirs.extend(_angles_to_dirs_2d(t0 + frac * (t1 - t0)))
        else:
            t0, t1, p0, p1 = band.bounds
            ft = np.array([0.25, 0.5, 0.75, 0.5, 0.5])
            fp = np.array([0.5, 0.5, 0.5, 0.25, 0.75])
            dirs.extend(_angles_to_dirs_3d(t0 + ft * (t1 - t0), p0 + fp * (p1 - p0)))
    if not dirs:
        return np.zeros((0, measure.dimension))
    return np.asarray(dirs)


def is_nondegenerate(measure: DirectionalMeasure):
    """Whether the support spans R^n; returns (flag, spanning directions or None).

    Rank is decided from the singular values of the stacked support
    directions with relative threshold RANK_TOL.
    """
    dirs = support_directions(measure)
    n = measure.dimension
    if dirs.shape[0] == 0:
        return False, None
    s = np.linalg.svd(dirs, compute_uv=False)
    rank = int(np.sum(s > RANK_TOL * s[0]))
    if rank < n:
        return False, None
    # greedy selection of n independent rows
    chosen = []
    for d in dirs:
        trial = np.asarray(chosen + [d])
        if np.linalg.matrix_rank(trial, tol=RANK_TOL) == len(trial):
            chosen.append(d)
        if len(chosen) == n:
            break
    return True, [np.array(c) for c in chosen]


def _reflected(measure: DirectionalMeasure) -> DirectionalMeasure:
    atoms = tuple((-d, w) for d, w in measure.atoms)
    bands = []
    for b in measure.bands:
        if b.dimension == 2:
            t0, t1 = b.bounds
            bands.append(AngularBand((t0 + math.pi, t1 + math.pi), b.density))
        else:
            t0, t1, p0, p1 = b.bounds
            bands.append(AngularBand((math.pi - t1, math.pi - t0, p0 + math.pi, p1 + math.pi), b.density))
    return DirectionalMeasure(measure.dimension, atoms, tuple(bands))


def is_symmetric(measure: DirectionalMeasure, tol: float = 1e-9) -> bool:
    """m(phi) == m(-phi), tested by comparing odd moments and band structure."""
    refl = _reflected(measure)
    # compare via integrals of a small separating family of test functions
    tests = []
    n = measure.dimension
    for i in range(n):
        tests.append(lambda d, i=i: d[:, i])
        tests.append(lambda d, i=i: d[:, i] ** 3)
        for j in range(i + 1, n):
            tests.append(lambda d, i=i, j=j: d[:, i] * d[:, j] ** 2)
    tests.append(lambda d: np.exp(np.sum(d * np.arange(1, n + 1), axis=-1)))
    tests.append(lambda d: np.cos(1.7 * d[:, 0] + (d[:, 1] if n > 1 else 0.0)))
    for f in tests:
        a = sphere_integrate(measure, f, tol=1e-11)
        b = sphere_integrate(refl, f, tol=1e-11)
        if abs(a - b) > tol:
            return False
    return True


# ---------------------------------------------------------------------------
# stability profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityProfile:
    """Per-component jump exponent and tempering rate, aligned with the
    measure's components (atoms first, then bands).

    betas in (0,1) u (1,2]; beta == 2 is admitted only through the quadratic
    reduction and beta == 1 only through the dedicated symbol path, so the
    generic evaluators reject those values themselves.
    """

    betas: tuple
    lambdas: tuple

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        lams = tuple(float(l) for l in self.lambdas)
        if len(betas) != len(lams):
            raise ValueError("betas and lambdas must have equal length")
        for b in betas:
            if not (0.0 < b <= 2.0):
                raise ValueError(f"beta {b} outside (0, 2]")
        for l in lams:
            if l < 0:
                raise ValueError("lambda must be nonnegative")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "lambdas", lams)

    @classmethod
    def constant(cls, measure: DirectionalMeasure, beta: float, lam: float):
        m = measure.n_components
        return cls((beta,) * m, (lam,) * m)

    def for_measure(self, measure: DirectionalMeasure):
        if len(self.betas) != measure.n_components:
            raise ValueError("profile length does not match measure components")
        return self

    @property
    def has_beta_one(self) -> bool:
        return any(abs(b - 1.0) < 1e-6 for b in self.betas)

    @property
    def has_beta_two(self) -> bool:
        return any(b == 2.0 for b in self.betas)


# ---------------------------------------------------------------------------
# JSON serialisation
# ---------------------------------------------------------------------------

def measure_to_json(measure: DirectionalMeasure) -> dict:
    return {
        "dimension": measure.dimension,
        "atoms": [[list(map(float, d)), float(w)] for d, w in measure.atoms],
        "bands": [
            {"region": list(b.bounds), "density": b.density} for b in measure.bands
        ],
    }


def measure_from_json(doc) -> DirectionalMeasure:
    if isinstance(doc, str):
        doc = json.loads(doc)
    atoms = tuple((np.asarray(c, dtype=float), float(w)) for c, w in doc.get("atoms", []))
    bands = tuple(
        AngularBand(tuple(b["region"]), float(b["density"])) for b in doc.get("bands", [])
    )
    return DirectionalMeasure(int(doc["dimension"]), atoms, bands)
