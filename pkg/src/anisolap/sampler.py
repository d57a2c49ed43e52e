"""Monte Carlo machinery for the jump processes behind the nonlocal operators.

Power-law jump radii use an inner cutoff r0 (compound-Poisson regularisation
of the stable law); tempering is exact rejection with acceptance e^{-lam r}.
All draws go through a numpy Generator, so a fixed seed reproduces every
trajectory bit for bit; parallel ensembles split the master seed per chunk
with SeedSequence.spawn, which keeps results independent of the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.special as sc

from .measures import DirectionalMeasure, measure_nodes

__all__ = [
    "JumpSpec",
    "Trajectory",
    "EcfEstimate",
    "MsdEstimate",
    "sample_direction",
    "sample_jump",
    "simulate_compound_poisson",
    "compound_poisson_endpoints",
    "empirical_cf",
    "sample_one_sided_stable",
    "sample_inverse_subordinator",
    "ensemble_msd",
    "matched_rate",
    "jump_cf",
]

_JUMP_KINDS = ("gaussian_iso", "gaussian_axes", "gaussian_aniso", "stable", "tempered_stable")


@dataclass(frozen=True)
class JumpSpec:
    """One jump law: Gaussian variants or (tempered) power-law radius with
    direction drawn from a directional measure.  r0 > 0 is the inner radial
    cutoff of the power-law kinds."""

    kind: str
    dimension: int
    sigma: Optional[float] = None
    sigmas: Optional[tuple] = None
    measure: Optional[DirectionalMeasure] = None
    beta: Optional[float] = None
    lam: float = 0.0
    r0: float = 1e-3
    max_rejections: int = 10_000

    def __post_init__(self):
        if self.kind not in _JUMP_KINDS:
            raise ValueError(f"unknown jump kind {self.kind!r}")
        if self.kind in ("gaussian_iso", "gaussian_axes"):
            if self.sigma is None or self.sigma <= 0:
                raise ValueError("sigma must be positive")
        if self.kind == "gaussian_aniso":
            if self.measure is None or self.measure.dimension != 2:
                raise ValueError("gaussian_aniso requires a 2D measure")
            if self.sigmas is None:
                raise ValueError("gaussian_aniso requires per-component sigmas")
            object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
            if any(s <= 0 for s in self.sigmas):
                raise ValueError("sigmas must be positive")
        if self.kind in ("stable", "tempered_stable"):
            if self.measure is None:
                raise ValueError("power-law kinds require a directional measure")
            if self.beta is None or not (0.0 < self.beta < 2.0):
                raise ValueError("beta must lie in (0,2)")
            if self.r0 <= 0:
                raise ValueError("r0 must be positive")
            if self.lam < 0:
                raise ValueError("lambda must be nonnegative")
        if self.measure is not None and self.measure.dimension != self.dimension:
            raise ValueError("measure dimension mismatch")


@dataclass(frozen=True)
class Trajectory:
    """Event times (starting at 0), positions at those times, and the
    optional internal-state labels / accumulated functional values."""

    times: np.ndarray
    positions: np.ndarray
    states: Optional[np.ndarray] = None
    functional: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        if t.ndim != 1 or len(t) != len(x):
            raise ValueError("times and positions must have equal length")
        if len(t) and (t[0] != 0.0 or np.any(np.diff(t) <= 0)):
            raise ValueError("times must start at 0 and be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", x)

    def position_at(self, t: float) -> np.ndarray:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.positions[max(idx, 0)]


@dataclass(frozen=True)
class EcfEstimate:
    value: complex
    stderr: float


@dataclass(frozen=True)
class MsdEstimate:
    value: float
    stderr: float
    heavy_tail_warning: bool


# ---------------------------------------------------------------------------
# directions and jumps
# ---------------------------------------------------------------------------

def _component_sampler(measure: DirectionalMeasure):
    masses = measure.component_masses()
    return masses / masses.sum()


def sample_direction(measure: DirectionalMeasure, rng, size: Optional[int] = None):
    """Draw directions from the measure: atoms by weight, bands uniformly
    within their region (with respect to the sphere surface measure)."""
    n = 1 if size is None else int(size)
    probs = _component_sampler(measure)
    comp = rng.choice(len(probs), size=n, p=probs)
    out = np.empty((n, measure.dimension))
    n_atoms = len(measure.atoms)
    for ci in range(len(probs)):
        sel = comp == ci
        cnt = int(sel.sum())
        if cnt == 0:
            continue
        if ci < n_atoms:
            out[sel] = measure.atoms[ci][0]
        else:
            band = measure.bands[ci - n_atoms]
            if band.dimension == 2:
                t0, t1 = band.bounds
                theta = rng.uniform(t0, t1, size=cnt)
                out[sel] = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            else:
                t0, t1, p0, p1 = band.bounds
                ct = rng.uniform(math.cos(t1), math.cos(t0), size=cnt)
                phi = rng.uniform(p0, p1, size=cnt)
                st = np.sqrt(1.0 - ct * ct)
                out[sel] = np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)
    return out[0] if size is None else out


def _pareto_radii(beta: float, r0: float, rng, n: int) -> np.ndarray:
    return r0 * rng.uniform(size=n) ** (-1.0 / beta)


def _tempered_radii(beta: float, lam: float, r0: float, rng, n: int,
                    max_rejections: int) -> np.ndarray:
    out = np.empty(n)
    todo = np.arange(n)
    for _ in range(max_rejections):
        prop = _pareto_radii(beta, r0, rng, len(todo))
        accept = rng.uniform(size=len(todo)) <= np.exp(-lam * prop)
        out[todo[accept]] = prop[accept]
        todo = todo[~accept]
        if len(todo) == 0:
            return out
    raise RuntimeError(
        f"tempered radius rejection exceeded {max_rejections} rounds "
        f"(lambda*r0 = {lam * r0:.3g})"
    )


def sample_jump(spec: JumpSpec, rng, size: Optional[int] = None) -> np.ndarray:
    """Draw jump vectors from the spec's law."""
    n = 1 if size is None else int(size)
    dim = spec.dimension
    if spec.kind == "gaussian_iso":
        out = spec.sigma * rng.standard_normal((n, dim))
    elif spec.kind == "gaussian_axes":
        axis = rng.integers(0, dim, size=n)
        amp = spec.sigma * rng.standard_normal(n)
        out = np.zeros((n, dim))
        out[np.arange(n), axis] = amp
    elif spec.kind == "gaussian_aniso":
        # direction density prop. to m(phi) sigma(phi)^2, radius Rayleigh(sigma)
        probs = _component_sampler(spec.measure)
        sig = np.asarray(spec.sigmas)
        w = probs * sig ** 2
        w = w / w.sum()
        comp = rng.choice(len(w), size=n, p=w)
        out = np.empty((n, dim))
        n_atoms = len(spec.measure.atoms)
        for ci in range(len(w)):
            sel = comp == ci
            cnt = int(sel.sum())
            if cnt == 0:
                continue
            if ci < n_atoms:
                d = np.broadcast_to(spec.measure.atoms[ci][0], (cnt, dim))
            else:
                band = spec.measure.bands[ci - n_atoms]
                t0, t1 = band.bounds
                theta = rng.uniform(t0, t1, size=cnt)
                d = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
            r = sig[ci] * np.sqrt(2.0 * rng.exponential(size=cnt))
            out[sel] = r[:, None] * d
    else:
        d = sample_direction(spec.measure, rng, size=n)
        if spec.kind == "tempered_stable" and spec.lam > 0:
            r = _tempered_radii(spec.beta, spec.lam, spec.r0, rng, n, spec.max_rejections)
        else:
            r = _pareto_radii(spec.beta, spec.r0, rng, n)
        out = r[:, None] * d
    return out[0] if size is None else out


# ---------------------------------------------------------------------------
# compound Poisson
# ---------------------------------------------------------------------------

def simulate_compound_poisson(spec: JumpSpec, zeta: float, T: float, start,
                              rng) -> Trajectory:
    """Exponential(zeta) inter-event times up to T; one jump per event."""
    if zeta <= 0 or T <= 0:
        raise ValueError("zeta and T must be positive")
    x = np.asarray(start, dtype=float).reshape(spec.dimension)
    times = [0.0]
    t = 0.0
    while True:
        t += rng.exponential(1.0 / zeta)
        if t > T:
            break
        times.append(t)
    n_jumps = len(times) - 1
    pos = np.empty((n_jumps + 1, spec.dimension))
    pos[0] = x
    if n_jumps:
        jumps = sample_jump(spec, rng, size=n_jumps)
        pos[1:] = x + np.cumsum(jumps, axis=0)
    return Trajectory(np.asarray(times), pos)


def compound_poisson_endpoints(spec: JumpSpec, zeta: float, t: float,
                               n_paths: int, rng, start=None) -> np.ndarray:
    """Vectorised endpoint ensemble X(t) for n_paths independent walks."""
    if zeta <= 0 or t < 0:
        raise ValueError("zeta must be positive and t nonnegative")
    x0 = np.zeros(spec.dimension) if start is None else np.asarray(start, dtype=float)
    counts = rng.poisson(zeta * t, size=n_paths)
    total = int(counts.sum())
    out = np.broadcast_to(x0, (n_paths, spec.dimension)).copy()
    if total == 0:
        return out
    jumps = sample_jump(spec, rng, size=total)
    csum = np.concatenate([np.zeros((1, spec.dimension)), np.cumsum(jumps, axis=0)])
    stops = np.cumsum(counts)
    starts = stops - counts
    out += csum[stops] - csum[starts]
    return out


def ensemble_endpoints_parallel(spec: JumpSpec, zeta: float, t: float,
                                n_paths: int, seed: int, n_chunks: int = 16) -> np.ndarray:
    """Chunk-deterministic ensemble; results do not depend on the worker
    count (ANISOLAP_THREADS bounds the pool)."""
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [n_paths // n_chunks + (1 if i < n_paths % n_chunks else 0)
             for i in range(n_chunks)]
    max_workers = int(os.environ.get("ANISOLAP_THREADS", "0")) or None

    def work(args):
        sq, sz = args
        return compound_poisson_endpoints(spec, zeta, t, sz, np.random.default_rng(sq))

    if max_workers == 1:
        parts = [work(a) for a in zip(seqs, sizes)]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as ex:
            parts = list(ex.map(work, zip(seqs, sizes)))
    return np.concatenate(parts, axis=0)


def empirical_cf(endpoints: np.ndarray, k) -> EcfEstimate:
    """(1/N) sum exp(i k.X_j) with the 1/sqrt(N) standard-error scale."""
    pts = np.asarray(endpoints, dtype=float)
    if pts.size == 0:
        raise ValueError("empty ensemble")
    if pts.ndim == 1:
        pts = pts[:, None]
    k = np.asarray(k, dtype=float).reshape(pts.shape[1])
    phases = pts @ k
    val = complex(np.mean(np.exp(1j * phases)))
    return EcfEstimate(val, 1.0 / math.sqrt(len(pts)))


def ensemble_msd(endpoints: np.ndarray, start=None) -> MsdEstimate:
    """Mean squared displacement of an endpoint ensemble with its standard
    error; flags heavy-tail domination when a single path carries more than
    10% of the total square displacement."""
    pts = np.asarray(endpoints, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size == 0:
        raise ValueError("empty ensemble")
    x0 = np.zeros(pts.shape[1]) if start is None else np.asarray(start, dtype=float)
    sq = np.sum((pts - x0) ** 2, axis=1)
    n = len(sq)
    mean = float(sq.mean())
    stderr = float(sq.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    heavy = bool(sq.max() > 0.1 * sq.sum()) if sq.sum() > 0 else False
    return MsdEstimate(mean, stderr, heavy)


# ---------------------------------------------------------------------------
# one-sided stable subordination
# ---------------------------------------------------------------------------

def sample_one_sided_stable(alpha: float, rng, size: Optional[int] = None):
    """Standard totally skewed positive stable variable, E e^{-sS} = e^{-s^alpha}
    (Kanter's representation)."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0,1)")
    n = 1 if size is None else int(size)
    u = rng.uniform(0.0, math.pi, size=n)
    w = rng.exponential(size=n)
    s = (
        np.sin(alpha * u)
        * np.sin((1.0 - alpha) * u) ** ((1.0 - alpha) / alpha)
        / (np.sin(u) ** (1.0 / alpha) * w ** ((1.0 - alpha) / alpha))
    )
    return s[0] if size is None else s


def sample_inverse_subordinator(alpha: float, t: float, rng,
                                size: Optional[int] = None,
                                resolution: float | None = None):
    """First-passage inverse E(t) = inf{tau : S(tau) > t} of the stable
    subordinator, simulated on a tau-grid of step resolution * t^alpha."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0,1)")
    if t <= 0:
        raise ValueError("t must be positive")
    n = 1 if size is None else int(size)
    dtau = (resolution if resolution is not None else 1e-3) * t ** alpha
    scale = dtau ** (1.0 / alpha)
    s = np.zeros(n)
    tau = np.zeros(n)
    active = np.ones(n, dtype=bool)
    while np.any(active):
        idx = np.flatnonzero(active)
        incr = scale * sample_one_sided_stable(alpha, rng, size=len(idx))
        s[idx] += incr
        tau[idx] += dtau
        active[idx] = s[idx] <= t
    return tau[0] if size is None else tau


# ---------------------------------------------------------------------------
# symbol-side helpers for the compound-Poisson picture
# ---------------------------------------------------------------------------

def matched_rate(spec: JumpSpec) -> float:
    """Jump rate zeta for which zeta*(Phi_0(k)-1) approximates the Levy symbol
    of the same (beta, lambda, measure): the kernel mass above the cutoff over
    |Gamma(-beta)|."""
    if spec.kind not in ("stable", "tempered_stable"):
        raise ValueError("matched_rate applies to power-law jump kinds")
    from .realspace import radial_moment_upper

    mass = radial_moment_upper(0, spec.beta, spec.lam, spec.r0)
    return mass / abs(sc.gamma(-spec.beta))


def jump_cf(spec: JumpSpec, k) -> complex:
    """Characteristic function Phi_0(k) = E exp(i k.Y) of a single jump."""
    k = np.asarray(k, dtype=float).reshape(spec.dimension)
    if spec.kind == "gaussian_iso":
        return complex(math.exp(-0.5 * spec.sigma ** 2 * float(k @ k)))
    if spec.kind == "gaussian_axes":
        return complex(np.mean(np.exp(-0.5 * spec.sigma ** 2 * k ** 2)))
    if spec.kind == "gaussian_aniso":
        from .symbols import gaussian_symbol

        return 1.0 + complex(gaussian_symbol("aniso", k, measure=spec.measure,
                                             sigmas=spec.sigmas))
    # power-law kinds: directional quadrature of the radial transform
    dirs, w, _ = measure_nodes(spec.measure, refinement=64)
    u = dirs @ k
    vals = np.array([_truncated_power_cf(spec.beta, spec.lam, spec.r0, ui) for ui in u])
    return complex((w * vals).sum() / w.sum())


def _truncated_power_cf(beta: float, lam: float, r0: float, u: float) -> complex:
    """E e^{iuR} for the radius law with survival prop. to the kernel tail on
    [r0, inf): int_{r0}^inf e^{iur} e^{-lam r} r^{-1-beta} dr, normalised."""
    import mpmath as mp

    z = mp.mpc(lam, -u)
    norm = mp.gammainc(-beta, lam * r0) * lam ** beta if lam > 0 else r0 ** (-beta) / beta
    if abs(u) < 1e-14:
        return 1.0 + 0.0j
    val = z ** beta * mp.gammainc(-beta, z * r0)
    return complex(val / norm)


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def jump_to_json(spec: JumpSpec) -> dict:
    from .measures import measure_to_json

    doc = {"kind": spec.kind, "dimension": spec.dimension}
    if spec.sigma is not None:
        doc["sigma"] = spec.sigma
    if spec.sigmas is not None:
        doc["sigmas"] = list(spec.sigmas)
    if spec.measure is not None:
        doc["measure"] = measure_to_json(spec.measure)
    if spec.beta is not None:
        doc["beta"] = spec.beta
    if spec.kind in ("stable", "tempered_stable"):
        doc["lam"] = spec.lam
        doc["r0"] = spec.r0
    return doc


def jump_from_json(doc: dict) -> JumpSpec:
    from .measures import measure_from_json

    measure = measure_from_json(doc["measure"]) if "measure" in doc else None
    return JumpSpec(
        kind=doc["kind"],
        dimension=int(doc["dimension"]),
        sigma=doc.get("sigma"),
        sigmas=tuple(doc["sigmas"]) if "sigmas" in doc else None,
        measure=measure,
        beta=doc.get("beta"),
        lam=float(doc.get("lam", 0.0)),
        r0=float(doc.get("r0", 1e-3)),
    )
