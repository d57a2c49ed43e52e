"""Generator symbols (Fourier multipliers) of the nonlocal diffusion operators.

Every evaluator returns the symbol psi(k) of a Markov generator, so psi(0) = 0,
Re psi <= 0, and psi(-k) = conj(psi(k)).  Fractional powers use the principal
branch through the polar representation

    (lam - i*u)^beta = (lam^2 + u^2)^(beta/2) * exp(-i*beta*eta),
    eta = arctan2(u, lam),

which is exact for lam = 0 as well (eta = +-pi/2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.special as sc

from .measures import (
    DirectionalMeasure,
    StabilityProfile,
    band_nodes,
    is_symmetric,
    moments,
    sphere_integrate,
)

__all__ = [
    "GeneratorSymbol",
    "MixedStabilityRangeWarning",
    "gaussian_symbol",
    "tempered_symbol",
    "beta1_symbol",
    "beta2_symbol",
    "general_profile_symbol",
    "isotropic_reference_symbol",
    "make_generator",
]

_BETA1_GAP = 1e-6


class MixedStabilityRangeWarning(UserWarning):
    """A direction-dependent exponent profile mixes (0,1) and (1,2); the
    sign prefactor is applied per component."""


def _k_points(k, n: int):
    """Normalise wavenumber input to an (P, n) array plus the output shape."""
    k = np.asarray(k, dtype=float)
    if n == 1:
        if k.ndim == 0:
            return k.reshape(1, 1), ()
        if k.shape[-1] == 1:
            return k.reshape(-1, 1), k.shape[:-1]
        return k.reshape(-1, 1), k.shape
    if k.shape == (n,):
        return k.reshape(1, n), ()
    if k.ndim >= 1 and k.shape[-1] == n:
        return k.reshape(-1, n), k.shape[:-1]
    raise ValueError(f"wavenumber array must have last axis of length {n}")


def _restore(vals: np.ndarray, shape):
    if shape == ():
        return complex(vals[0])
    return vals.reshape(shape)


def _bracket(u, beta: float, lam: float):
    """(lam - i*u)^beta - lam^beta on the principal branch (vectorised).

    The u = 0 value is pinned to exactly zero (it vanishes identically);
    array and scalar pow differ in the last ulp otherwise."""
    u = np.asarray(u, dtype=float)
    eta = np.arctan2(u, lam)
    mag = (lam * lam + u * u) ** (0.5 * beta)
    out = mag * np.exp(-1j * beta * eta) - lam ** beta
    return np.where(u == 0.0, 0.0 + 0.0j, out)


def _ceil_sign(beta: float) -> float:
    return (-1.0) ** math.ceil(beta)


# ---------------------------------------------------------------------------
# closed-form |cos|^beta integrals for untempered band contributions
# ---------------------------------------------------------------------------

def _F_cos_pow(x, beta: float):
    """int_0^x cos(t)^beta dt for x in [-pi/2, pi/2] (odd in x)."""
    x = np.asarray(x, dtype=float)
    s = np.sin(np.clip(x, -0.5 * math.pi, 0.5 * math.pi))
    total = 0.5 * sc.beta(0.5, 0.5 * (beta + 1.0))
    return np.sign(x) * total * sc.betainc(0.5, 0.5 * (beta + 1.0), s * s)


def _cos_pow_band(a, b, beta: float):
    """(Cpos, Cneg): integrals of |cos w|^beta over [a, b] restricted to
    cos w > 0 and cos w < 0.  a, b arrays with 0 < b - a <= 2*pi."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cpos = np.zeros_like(a)
    cneg = np.zeros_like(a)
    j0 = np.floor((a + 0.5 * math.pi) / math.pi)
    for off in range(4):
        j = j0 + off
        lo = np.maximum(a, -0.5 * math.pi + j * math.pi)
        hi = np.minimum(b, 0.5 * math.pi + j * math.pi)
        seg = np.clip(hi - lo, 0.0, None)
        active = seg > 0
        if not np.any(active):
            continue
        val = np.where(
            active, _F_cos_pow(hi - j * math.pi, beta) - _F_cos_pow(lo - j * math.pi, beta), 0.0
        )
        even = (np.mod(j, 2.0) == 0.0)
        cpos += np.where(active & even, val, 0.0)
        cneg += np.where(active & ~even, val, 0.0)
    return cpos, cneg


def _stable_band_2d(pts, band, beta: float):
    """Exact band contribution to int (-i k.phi)^beta m(phi) dphi for lam = 0."""
    kn = np.hypot(pts[:, 0], pts[:, 1])
    theta_k = np.arctan2(pts[:, 1], pts[:, 0])
    t0, t1 = band.bounds
    cpos, cneg = _cos_pow_band(t0 - theta_k, t1 - theta_k, beta)
    rot = np.exp(-1j * beta * 0.5 * math.pi)
    out = band.density * kn ** beta * (cpos * rot + cneg * np.conj(rot))
    return np.where(kn > 0, out, 0.0 + 0.0j)


# ---------------------------------------------------------------------------
# symbol evaluators
# ---------------------------------------------------------------------------

def _band_quadrature(pts, measure, per_component, refinement, order, skip=()):
    """Sum of band contributions via fixed Gauss-Legendre nodes.

    per_component(u, comp_index) maps dot products (P, M_c) to the integrand
    values for component comp_index; skip lists band indices handled elsewhere.
    """
    out = np.zeros(pts.shape[0], dtype=complex)
    for j, band in enumerate(measure.bands):
        if j in skip:
            continue
        dirs, w = band_nodes(band, refinement=refinement, order=order)
        u = pts @ dirs.T
        out += (per_component(u, len(measure.atoms) + j) * w).sum(axis=1)
    return out


def _resolve_method(method: str, n_points: int, measure) -> str:
    if method != "auto":
        return method
    if not measure.bands:
        return "nodes"
    return "adaptive" if n_points <= 64 else "nodes"


def _adaptive_bands(pts, measure, integrand_of_u, tol):
    """Per-point adaptive band integration with kink-aware splitting (2D)."""
    from .measures import _integrate_band_adaptive  # shared quadrature core

    out = np.zeros(pts.shape[0], dtype=complex)
    for p in range(pts.shape[0]):
        kvec = pts[p]
        splits = ()
        if measure.dimension == 2 and (kvec[0] != 0 or kvec[1] != 0):
            tk = math.atan2(kvec[1], kvec[0])
            splits = (tk - 0.5 * math.pi, tk + 0.5 * math.pi)
        for band in measure.bands:
            out[p] += _integrate_band_adaptive(
                band, lambda d: integrand_of_u(d @ kvec), tol, splits
            )
    return out


def tempered_symbol(measure: DirectionalMeasure, beta: float, lam: float, k, *,
                    method: str = "auto", refinement: int = 96, order: int = 8,
                    tol: float = 1e-12):
    """Symbol of the anisotropic (tempered) stable generator.

    Returns (-1)^ceil(beta) * int ((lam - i k.phi)^beta - lam^beta) m(phi) dphi.
    beta must lie in (0,1) or (1,2); beta near 1 is rejected (use beta1_symbol)
    and beta = 2 has its own quadratic reduction (beta2_symbol).
    """
    if not (0.0 < beta < 2.0) or abs(beta - 1.0) < _BETA1_GAP:
        raise ValueError("beta must lie in (0,1) or (1,2); use beta1_symbol/beta2_symbol otherwise")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    pts, shape = _k_points(k, measure.dimension)
    sign = _ceil_sign(beta)
    out = np.zeros(pts.shape[0], dtype=complex)
    for d, w in measure.atoms:
        out += w * _bracket(pts @ d, beta, lam)
    if measure.bands:
        if lam == 0.0 and measure.dimension == 2:
            for band in measure.bands:
                out += _stable_band_2d(pts, band, beta)
        elif _resolve_method(method, pts.shape[0], measure) == "adaptive":
            out += _adaptive_bands(pts, measure, lambda u: _bracket(u, beta, lam), tol)
        else:
            out += _band_quadrature(
                pts, measure, lambda u, c: _bracket(u, beta, lam),
                refinement, order,
            )
    return _restore(sign * out, shape)


def beta1_symbol(measure: DirectionalMeasure, lam: float, k, *,
                 method: str = "auto", refinement: int = 96, order: int = 8,
                 tol: float = 1e-12, _skip_symmetry_check: bool = False):
    """Generator symbol for exponent 1 (symmetric measures only).

    lam = 0:  -(pi/2) * int |k.phi| m(phi) dphi.
    lam > 0:  -int [ u*arctan(u/lam) - (lam/2)*log1p(u^2/lam^2) ] m(phi) dphi
    with u = k.phi; the lam*log(lam) terms cancel in this arrangement, making
    psi(0) = 0 exact.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not _skip_symmetry_check and not is_symmetric(measure):
        raise ValueError("the exponent-1 symbol is defined here only for symmetric measures")
    pts, shape = _k_points(k, measure.dimension)

    if lam == 0.0:
        def g(u):
            return 0.5 * math.pi * np.abs(u)
    else:
        def g(u):
            u = np.asarray(u, dtype=float)
            return u * np.arctan(u / lam) - 0.5 * lam * np.log1p((u / lam) ** 2)

    out = np.zeros(pts.shape[0], dtype=complex)
    for d, w in measure.atoms:
        out += w * g(pts @ d)
    if measure.bands:
        if lam == 0.0 and measure.dimension == 2:
            kn = np.hypot(pts[:, 0], pts[:, 1])
            theta_k = np.arctan2(pts[:, 1], pts[:, 0])
            for band in measure.bands:
                t0, t1 = band.bounds
                cpos, cneg = _cos_pow_band(t0 - theta_k, t1 - theta_k, 1.0)
                out += 0.5 * math.pi * band.density * kn * (cpos + cneg)
        elif _resolve_method(method, pts.shape[0], measure) == "adaptive":
            out += _adaptive_bands(pts, measure, g, tol)
        else:
            out += _band_quadrature(pts, measure, lambda u, c: g(u), refinement, order)
    return _restore(-out, shape)


def beta2_symbol(measure: DirectionalMeasure, lam: float, k):
    """Quadratic reduction at exponent 2: (ik)^T A (ik) - 2*lam*(ik)^T b."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    pts, shape = _k_points(k, measure.dimension)
    mom = moments(measure)
    quad = np.einsum("pi,ij,pj->p", pts, mom.covariance, pts)
    drift = pts @ mom.mean
    return _restore(-quad - 2j * lam * drift, shape)


def general_profile_symbol(measure: DirectionalMeasure, profile: StabilityProfile, k, *,
                           method: str = "auto", refinement: int = 96, order: int = 8,
                           tol: float = 1e-12):
    """Symbol with direction-dependent beta(phi), lambda(phi).

    Each atom/band carries its own (beta, lambda) and the sign prefactor
    (-1)^ceil(beta) is applied inside the integral per component.  Profiles
    mixing the ranges (0,1) and (1,2) are admitted but flagged with
    MixedStabilityRangeWarning since the global sign convention is ambiguous.
    """
    profile = profile.for_measure(measure)
    for b in profile.betas:
        if not (0.0 < b < 2.0) or abs(b - 1.0) < _BETA1_GAP:
            raise ValueError("profile exponents must lie in (0,1) or (1,2)")
    lo = any(b < 1.0 for b in profile.betas)
    hi = any(b > 1.0 for b in profile.betas)
    if lo and hi:
        warnings.warn(
            "profile mixes exponents below and above 1; per-component sign applied",
            MixedStabilityRangeWarning,
        )
    pts, shape = _k_points(k, measure.dimension)
    out = np.zeros(pts.shape[0], dtype=complex)
    for i, (d, w) in enumerate(measure.atoms):
        bi, li = profile.betas[i], profile.lambdas[i]
        out += _ceil_sign(bi) * w * _bracket(pts @ d, bi, li)
    from .measures import _integrate_band_adaptive

    for j, band in enumerate(measure.bands):
        ci = len(measure.atoms) + j
        bj, lj = profile.betas[ci], profile.lambdas[ci]
        sign = _ceil_sign(bj)
        if lj == 0.0 and measure.dimension == 2:
            out += sign * _stable_band_2d(pts, band, bj)
        elif _resolve_method(method, pts.shape[0], measure) == "adaptive":
            for p in range(pts.shape[0]):
                kvec = pts[p]
                splits = ()
                if measure.dimension == 2 and np.any(kvec != 0):
                    tk = math.atan2(kvec[1], kvec[0])
                    splits = (tk - 0.5 * math.pi, tk + 0.5 * math.pi)
                out[p] += sign * _integrate_band_adaptive(
                    band, lambda d: _bracket(d @ kvec, bj, lj), tol, splits
                )
        else:
            dirs, w = band_nodes(band, refinement=refinement, order=order)
            u = pts @ dirs.T
            out += sign * (_bracket(u, bj, lj) * w).sum(axis=1)
    return _restore(out, shape)


def gaussian_symbol(variant: str, k, *, sigma: Optional[float] = None,
                    measure: Optional[DirectionalMeasure] = None,
                    sigmas=None, dimension: int = 2,
                    refinement: int = 96, order: int = 8):
    """Phi_0(k) - 1 for compound-Poisson Gaussian jump laws.

    iso:  exp(-sigma^2 |k|^2 / 2) - 1.
    axes: mean over coordinate axes of exp(-sigma^2 k_i^2 / 2), minus 1.
    aniso: normalised radial-Gaussian mixture over a 2D directional measure
           with per-component spread sigmas (Rayleigh radial law per ray).
    """
    if variant in ("iso", "axes"):
        if sigma is None or sigma <= 0:
            raise ValueError("sigma must be positive")
        pts, shape = _k_points(k, dimension)
        if variant == "iso":
            vals = np.exp(-0.5 * sigma ** 2 * np.sum(pts ** 2, axis=-1)) - 1.0
        else:
            vals = np.mean(np.exp(-0.5 * sigma ** 2 * pts ** 2), axis=-1) - 1.0
        return _restore(vals.astype(complex), shape)
    if variant != "aniso":
        raise ValueError(f"unknown gaussian variant {variant!r}")
    if measure is None or measure.dimension != 2:
        raise ValueError("the aniso variant requires a 2D directional measure")
    sig = np.asarray(sigmas, dtype=float)
    if sig.shape == ():
        sig = np.full(measure.n_components, float(sig))
    if sig.shape != (measure.n_components,) or np.any(sig <= 0):
        raise ValueError("sigmas must give one positive spread per measure component")
    pts, shape = _k_points(k, 2)
    dirs, w, comp = _measure_nodes_cached(measure, refinement, order)
    s = sig[comp]
    u = pts @ dirs.T
    x = u * s / math.sqrt(2.0)
    radial = (
        s ** 2
        - u * s ** 3 * math.sqrt(2.0) * sc.dawsn(x)
        + 1j * u * s ** 3 * math.sqrt(0.5 * math.pi) * np.exp(-0.5 * (u * s) ** 2)
    )
    c_m = 1.0 / np.sum(w * sig[comp] ** 2)
    phi0 = c_m * (radial * w).sum(axis=1)
    return _restore(phi0 - 1.0, shape)


def _measure_nodes_cached(measure, refinement, order):
    from .measures import measure_nodes

    return measure_nodes(measure, refinement=refinement, order=order)


def isotropic_reference_symbol(beta: float, lam: float, k, n: int, *,
                               n_panels: int = 40, order: int = 12):
    """Nonnegative reference multiplier of the isotropic operator.

    Returns (-1)^ceil(beta) * (1/omega_n) * int (lam^beta -
    (lam^2 + (k.phi)^2)^(beta/2) cos(beta*eta)) dphi, a real value >= 0 used
    as the denominator of the coercivity ratio.
    """
    if not (0.0 < beta < 2.0) or abs(beta - 1.0) < _BETA1_GAP:
        raise ValueError("beta must lie in (0,1) or (1,2)")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    pts, shape = _k_points(k, n)
    kn = np.linalg.norm(pts, axis=-1)
    sign = _ceil_sign(beta)

    def f(u):
        u = np.asarray(u, dtype=float)
        eta = np.arctan2(u, lam)
        val = sign * (lam ** beta
                      - (lam * lam + u * u) ** (0.5 * beta) * np.cos(beta * eta))
        return np.where(u == 0.0, 0.0, val)

    if n == 1:
        out = f(kn)
    elif lam == 0.0:
        cbeta = abs(math.cos(0.5 * math.pi * beta))
        if n == 2:
            mean_cos = sc.beta(0.5, 0.5 * (beta + 1.0)) / math.pi
        else:
            mean_cos = 1.0 / (beta + 1.0)
        out = cbeta * kn ** beta * mean_cos
    elif n == 2:
        # (2/pi) * int_0^{pi/2} f(|k| cos(theta)) dtheta with panels graded
        # toward theta = pi/2, where f has its (smoothed) |u|^beta kink
        theta_edges = 0.5 * math.pi - np.concatenate(
            [0.5 * math.pi * np.geomspace(1e-10, 1.0, n_panels)[::-1], [0.0]]
        )
        t, tw = _panel_nodes(theta_edges, order)
        vals = f(kn[:, None] * np.cos(t)[None, :])
        out = (2.0 / math.pi) * (vals * tw[None, :]).sum(axis=1)
    else:
        # int_0^1 f(|k| t) dt, graded toward the kink at t = 0
        t_edges = np.concatenate([[0.0], np.geomspace(1e-10, 1.0, n_panels)])
        t, tw = _panel_nodes(t_edges, order)
        vals = f(kn[:, None] * t[None, :])
        out = (vals * tw[None, :]).sum(axis=1)
    out = np.maximum(out, 0.0)
    if shape == ():
        return float(out[0])
    return out.reshape(shape)


def _panel_nodes(edges, order):
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


# ---------------------------------------------------------------------------
# generator objects
# ---------------------------------------------------------------------------

_KINDS = (
    "gaussian_iso", "gaussian_axes", "gaussian_aniso", "stable_aniso",
    "tempered_aniso", "beta1_aniso", "beta2_quadratic", "general_profile",
    "isotropic_reference",
)


@dataclass(frozen=True)
class GeneratorSymbol:
    """Immutable symbol evaluator psi(k) for one operator family.

    zeta scales the whole symbol (jump rate of the compound-Poisson picture,
    or a plain diffusion-coefficient rescale); evaluation is pure and safe to
    share across threads.
    """

    kind: str
    dimension: int
    zeta: float = 1.0
    measure: Optional[DirectionalMeasure] = None
    profile: Optional[StabilityProfile] = None
    beta: Optional[float] = None
    lam: Optional[float] = None
    sigma: Optional[float] = None
    sigmas: Optional[tuple] = None
    method: str = "auto"
    refinement: int = 96

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "beta1_aniso" and not is_symmetric(self.measure):
            raise ValueError("exponent-1 symbols require a symmetric measure")
        if self.kind in ("gaussian_aniso", "stable_aniso", "tempered_aniso",
                         "beta1_aniso", "beta2_quadratic", "general_profile"):
            if self.measure is None:
                raise ValueError(f"{self.kind} requires a directional measure")
            if self.measure.dimension != self.dimension:
                raise ValueError("measure dimension mismatch")

    def evaluate(self, k):
        kind = self.kind
        if kind == "gaussian_iso":
            base = gaussian_symbol("iso", k, sigma=self.sigma, dimension=self.dimension)
        elif kind == "gaussian_axes":
            base = gaussian_symbol("axes", k, sigma=self.sigma, dimension=self.dimension)
        elif kind == "gaussian_aniso":
            base = gaussian_symbol("aniso", k, measure=self.measure,
                                   sigmas=self.sigmas, refinement=self.refinement)
        elif kind == "stable_aniso":
            base = tempered_symbol(self.measure, self.beta, 0.0, k,
                                   method=self.method, refinement=self.refinement)
        elif kind == "tempered_aniso":
            base = tempered_symbol(self.measure, self.beta, self.lam, k,
                                   method=self.method, refinement=self.refinement)
        elif kind == "beta1_aniso":
            base = beta1_symbol(self.measure, self.lam, k, method=self.method,
                                refinement=self.refinement, _skip_symmetry_check=True)
        elif kind == "beta2_quadratic":
            base = beta2_symbol(self.measure, self.lam or 0.0, k)
        elif kind == "general_profile":
            base = general_profile_symbol(self.measure, self.profile, k,
                                          method=self.method, refinement=self.refinement)
        else:  # isotropic_reference, as a generator: the negated reference value
            base = -1.0 * isotropic_reference_symbol(self.beta, self.lam or 0.0, k, self.dimension)
        arr = np.atleast_1d(np.asarray(base))
        slack = 1e-10 * max(1.0, float(np.max(np.abs(arr))))
        if float(np.max(arr.real)) > slack:
            raise RuntimeError(
                f"{self.kind} symbol violated Re psi <= 0 (quadrature failure?)")
        return self.zeta * base

    __call__ = evaluate


def make_generator(kind: str, dimension: int, **params) -> GeneratorSymbol:
    return GeneratorSymbol(kind=kind, dimension=dimension, **params)


def symbol_to_json(sym: GeneratorSymbol) -> dict:
    from .measures import measure_to_json

    doc = {"kind": sym.kind, "dimension": sym.dimension, "zeta": sym.zeta}
    if sym.measure is not None:
        doc["measure"] = measure_to_json(sym.measure)
    if sym.profile is not None:
        doc["profile"] = {"betas": list(sym.profile.betas),
                          "lambdas": list(sym.profile.lambdas)}
    for name in ("beta", "lam", "sigma"):
        if getattr(sym, name) is not None:
            doc[name] = getattr(sym, name)
    if sym.sigmas is not None:
        doc["sigmas"] = list(sym.sigmas)
    return doc


def symbol_from_json(doc: dict) -> GeneratorSymbol:
    from .measures import measure_from_json

    measure = measure_from_json(doc["measure"]) if "measure" in doc else None
    profile = None
    if "profile" in doc:
        profile = StabilityProfile(tuple(doc["profile"]["betas"]),
                                   tuple(doc["profile"]["lambdas"]))
    return GeneratorSymbol(
        kind=doc["kind"],
        dimension=int(doc["dimension"]),
        zeta=float(doc.get("zeta", 1.0)),
        measure=measure,
        profile=profile,
        beta=doc.get("beta"),
        lam=doc.get("lam"),
        sigma=doc.get("sigma"),
        sigmas=tuple(doc["sigmas"]) if "sigmas" in doc else None,
    )
