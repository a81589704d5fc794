"""Probability measures on the real line, the Marchenko-Pastur law and
logarithmic potentials.

Potentials follow the convention u(z) = int log|z - w| dmu(w), so that a
probability measure has u(z) - log|z| -> 0 at infinity.  Potentials evaluated
on an atom return ``NEG_INF`` instead of raising.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import ParameterError, DomainError

NEG_INF = float("-inf")

_WEIGHT_TOL = 1e-12
_CDF_GRID = 4096


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Finite atomic probability measure on the real line.

    Locations are strictly increasing; equal locations passed to
    :meth:`from_points` are merged and their weights added.
    """

    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if loc.ndim != 1 or loc.shape != w.shape or loc.size == 0:
            raise ParameterError("locations and weights must be equal-length 1-d arrays")
        if not np.all(np.isfinite(loc)):
            raise ParameterError("atom locations must be finite")
        if np.any(w <= 0) or np.any(w > 1 + _WEIGHT_TOL):
            raise ParameterError("atom weights must lie in (0, 1]")
        if abs(w.sum() - 1.0) > _WEIGHT_TOL * max(1, loc.size):
            raise ParameterError(f"weights sum to {w.sum()!r}, not 1")
        if np.any(np.diff(loc) <= 0):
            raise ParameterError("locations must be strictly increasing")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_points(cls, points, weights=None) -> "EmpiricalMeasure":
        pts = np.asarray(points, dtype=float).ravel()
        if weights is None:
            w = np.full(pts.size, 1.0 / pts.size)
        else:
            w = np.asarray(weights, dtype=float).ravel()
        order = np.argsort(pts, kind="stable")
        pts, w = pts[order], w[order]
        uniq, inverse = np.unique(pts, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, w)
        return cls(uniq, merged)

    @classmethod
    def dirac(cls, c: float) -> "EmpiricalMeasure":
        return cls(np.array([float(c)]), np.array([1.0]))

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    @property
    def support_radius(self) -> float:
        return float(np.max(np.abs(self.locations)))

    def cdf(self, t, left: bool = False):
        """Right-continuous CDF; ``left=True`` gives the left limit F(t-)."""
        side = "left" if left else "right"
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        idx = np.searchsorted(self.locations, t, side=side)
        return cum[idx]

    def to_json(self) -> str:
        return json.dumps(
            {"atoms": [[float(f"{x:.17g}"), float(f"{w:.17g}")] for x, w in self.atoms]}
        )

    @classmethod
    def from_json(cls, text: str) -> "EmpiricalMeasure":
        data = json.loads(text)
        atoms = np.asarray(data["atoms"], dtype=float).reshape(-1, 2)
        return cls(atoms[:, 0], atoms[:, 1])


def mp_edges(phi: float) -> tuple[float, float]:
    if not (0.0 < phi <= 1.0) or math.isnan(phi):
        raise ParameterError(f"aspect ratio phi must lie in (0, 1], got {phi!r}")
    s = math.sqrt(phi)
    return (1.0 - s) ** 2, (1.0 + s) ** 2


@dataclass(frozen=True)
class MPLaw:
    """Marchenko-Pastur law with aspect ratio ``phi``.

    With ``plus=True`` the object stands for the normalized continuous part
    (the density divided by ``phi``, no atom at 0).
    """

    phi: float
    plus: bool = False
    a: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self):
        a, b = mp_edges(self.phi)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def atom_mass(self) -> float:
        return 0.0 if self.plus else 1.0 - self.phi

    @property
    def continuous_mass(self) -> float:
        return 1.0 if self.plus else self.phi

    @property
    def support_radius(self) -> float:
        return self.b

    def positive_part(self) -> "MPLaw":
        return replace(self, plus=True)

    # (t - a)(b - t) in the angle variable t = c - h cos(theta), theta in [0, pi]
    @property
    def _center(self) -> float:
        return 0.5 * (self.a + self.b)

    @property
    def _half_width(self) -> float:
        return 0.5 * (self.b - self.a)

    def _theta_of(self, t):
        s = (self._center - np.asarray(t, dtype=float)) / self._half_width
        return np.arccos(np.clip(s, -1.0, 1.0))

    def _theta_density(self, theta):
        """Mass density of the continuous part in the angle variable."""
        theta = np.asarray(theta, dtype=float)
        h = self._half_width
        t = self._center - h * np.cos(theta)
        s2 = np.sin(theta) ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            val = h * h * s2 / (2.0 * math.pi * t)
        if self.a == 0.0:
            # phi = 1: t = h (1 - cos), so the ratio simplifies
            val = h * (1 + np.cos(theta)) / (2.0 * math.pi)
        return val / (self.phi if self.plus else 1.0)

    @property
    def _cdf_table(self):
        return _cdf_table_for(self.phi, self.plus)


@lru_cache(maxsize=64)
def _cdf_table_for(phi: float, plus: bool):
    law = MPLaw(phi, plus)
    # Chebyshev-spaced nodes in t are equispaced in theta
    thetas = np.linspace(0.0, math.pi, _CDF_GRID)
    incr = np.empty(_CDF_GRID - 1)
    for i in range(_CDF_GRID - 1):
        incr[i] = integrate.quad(law._theta_density, thetas[i], thetas[i + 1],
                                 epsabs=1e-15, epsrel=1e-13)[0]
    cum = np.concatenate([[0.0], np.cumsum(incr)])
    return PchipInterpolator(thetas, cum), cum[-1]


def mp_density(law: MPLaw, t, plus: bool | None = None):
    """Lebesgue density of the continuous part; zero outside [a, b]."""
    if plus is not None and plus != law.plus:
        law = replace(law, plus=plus)
    t = np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        inner = (t - law.a) * (law.b - t)
        val = np.sqrt(np.where(inner > 0, inner, 0.0)) / (2.0 * math.pi * np.where(t > 0, t, 1.0))
    val = np.where((t > law.a) & (t < law.b) & (t > 0), val, 0.0)
    if law.plus:
        val = val / law.phi
    return val if val.ndim else float(val)


def mp_cdf(law: MPLaw, t, left: bool = False):
    """Right-continuous CDF of ``law``, including the atom at 0.

    ``left=True`` returns the left limit F(t-).
    """
    t = np.asarray(t, dtype=float)
    interp, total = law._cdf_table
    cont = interp(law._theta_of(t)) / total * law.continuous_mass
    cont = np.where(t <= law.a, 0.0, np.where(t >= law.b, law.continuous_mass, cont))
    atom = (t > 0) if left else (t >= 0)
    out = cont + law.atom_mass * atom
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------


def mp_potential_plus(law: MPLaw, z: float) -> float:
    """Logarithmic potential of the normalized continuous part at real ``z``.

    Uses the closed form on [a, b]; elsewhere falls back to quadrature.
    """
    phi = law.phi
    z = float(z)
    if law.a <= z <= law.b:
        if z <= 0.0:
            if phi < 1.0:
                raise DomainError("closed form needs z > 0 when phi < 1")
            return (z - 1 - phi) / (2 * phi) + math.log(phi) / 2
        return ((z - 1 - phi) / (2 * phi)
                - (1 - phi) / (2 * phi) * math.log(z)
                + math.log(phi) / 2)
    return potential_quadrature(law.positive_part(), z)


def mp_potential(law: MPLaw, z: float) -> float:
    """Potential of the full law, (1 - phi) log|z| + phi * u_plus(z)."""
    phi = law.phi
    if z == 0 and phi < 1.0:
        return NEG_INF
    atom = (1 - phi) * math.log(abs(z)) if phi < 1.0 else 0.0
    return atom + phi * mp_potential_plus(law, z)


def _mp_plus_quad(law: MPLaw, z: complex) -> float:
    x, y = z.real, z.imag
    c, h = law._center, law._half_width
    dens = law.positive_part()._theta_density

    def f(theta):
        t = c - h * math.cos(theta)
        return 0.5 * math.log((x - t) ** 2 + y * y) * dens(theta)

    pts = None
    if law.a < x < law.b:
        pts = [float(law._theta_of(x))]
    val = integrate.quad(f, 0.0, math.pi, points=pts, epsabs=1e-11, epsrel=1e-11, limit=400)[0]
    return val


def potential_quadrature(measure, z) -> float:
    """Potential of ``measure`` at a single point ``z`` (real or complex).

    Atomic measures are summed exactly.  Marchenko-Pastur laws are integrated
    by adaptive quadrature in the angle variable with a breakpoint at Re z.
    """
    z = complex(z)
    if isinstance(measure, EmpiricalMeasure):
        d = np.abs(z - measure.locations)
        if np.any(d == 0):
            return NEG_INF
        return float(np.dot(measure.weights, np.log(d)))
    if isinstance(measure, MPLaw):
        plus_part = _mp_plus_quad(measure, z)
        if measure.plus or measure.phi == 1.0:
            return plus_part
        if z == 0:
            return NEG_INF
        return (1 - measure.phi) * math.log(abs(z)) + measure.phi * plus_part
    raise ParameterError(f"unsupported measure type {type(measure).__name__}")


class _PlusSpectral:
    """Fast potential of the MP continuous part for many points.

    Writes z = c - h * (W + 1/W) / 2 with |W| <= 1 and expands the log kernel
    in cosines of the angle variable; the cosine moments of the density are
    computed once with the midpoint rule (spectrally accurate for periodic
    integrands).
    """

    def __init__(self, law: MPLaw, nodes: int = 8192, tol: float = 1e-13):
        plus = law.positive_part()
        self.c, self.h = plus._center, plus._half_width
        theta = (np.arange(nodes) + 0.5) * math.pi / nodes
        dens = plus._theta_density(theta)
        weights = dens * (math.pi / nodes)
        weights /= weights.sum()
        m = np.arange(1, nodes // 4)
        moments = np.cos(np.outer(m, theta)) @ weights
        keep = np.nonzero(np.abs(moments) > tol)[0]
        last = keep[-1] + 1 if keep.size else 0
        self.coef = 2.0 * moments[:last] / m[:last]

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        zeta = (self.c - z) / self.h
        W = zeta - np.sqrt(zeta - 1) * np.sqrt(zeta + 1)
        big = np.abs(W) > 1
        W = np.where(big, 1 / np.where(big, W, 1), W)
        absW = np.minimum(np.abs(W), 1.0)
        out = math.log(self.h / 2) - np.log(absW)
        # Re(W^k) obeys x_k = 2 Re(W) x_{k-1} - |W|^2 x_{k-2}
        two_re, mod2 = 2.0 * W.real, absW * absW
        prev, cur = np.ones(z.shape), W.real.copy()
        acc = np.zeros(z.shape)
        for ck in self.coef:
            acc += ck * cur
            prev, cur = cur, two_re * cur - mod2 * prev
        return out - acc


_SPECTRAL_CACHE: dict[float, _PlusSpectral] = {}


def _spectral_for(law: MPLaw) -> _PlusSpectral:
    key = float(law.phi)
    sp = _SPECTRAL_CACHE.get(key)
    if sp is None:
        sp = _SPECTRAL_CACHE[key] = _PlusSpectral(law)
    return sp


def _atomic_grid(measure: EmpiricalMeasure, z: np.ndarray) -> np.ndarray:
    flat = z.ravel()
    re, im2 = flat.real, flat.imag ** 2
    loc, w = measure.locations, 0.5 * measure.weights
    out = np.empty(flat.size)
    chunk = max(1, (1 << 20) // loc.size)
    with np.errstate(divide="ignore"):
        for s in range(0, flat.size, chunk):
            d = (re[s:s + chunk, None] - loc[None, :]) ** 2 + im2[s:s + chunk, None]
            out[s:s + chunk] = np.log(d) @ w
    return out.reshape(z.shape)


def potential_grid(measure, z) -> np.ndarray:
    """Vectorized potential on an array of points; atoms give ``-inf``."""
    z = np.asarray(z, dtype=complex)
    if isinstance(measure, EmpiricalMeasure):
        return _atomic_grid(measure, z)
    if isinstance(measure, MPLaw):
        plus_part = _spectral_for(measure)(z)
        if measure.plus or measure.phi == 1.0:
            return plus_part
        with np.errstate(divide="ignore"):
            return (1 - measure.phi) * np.log(np.abs(z)) + measure.phi * plus_part
    raise ParameterError(f"unsupported measure type {type(measure).__name__}")


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

Measure = Union[EmpiricalMeasure, MPLaw]


@dataclass(frozen=True)
class DistResult:
    value: float
    tail_bound: float
    refinement_change: float | None
    radius: float

    def __float__(self):
        return self.value


def _check_measure(m):
    if not isinstance(m, (EmpiricalMeasure, MPLaw)):
        raise ParameterError(f"expected a probability measure, got {type(m).__name__}")


def _features(m) -> np.ndarray:
    if isinstance(m, EmpiricalMeasure):
        return m.locations
    pts = [m.a, m.b]
    if not m.plus and m.phi < 1.0:
        pts.append(0.0)
    return np.asarray(pts)


def _panels(breaks: np.ndarray, k: int):
    x, w = leggauss(k)
    lo, hi = breaks[:-1], breaks[1:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _x_breaks(feat: np.ndarray, y: float, radius: float, scale: float) -> np.ndarray:
    """Panel edges along a horizontal line at height ``y``.

    Features (atoms, support edges) are kept as breakpoints when they are
    further apart than ~y; panels are graded geometrically away from the
    feature hull.
    """
    span = max(y, 1e-12)
    kept = [feat[0]]
    for f in feat[1:]:
        if f - kept[-1] >= 0.5 * span:
            kept.append(f)
    if kept[-1] != feat[-1]:
        kept[-1] = feat[-1]
    inner = np.asarray(kept)
    # split long gaps in the hull into panels of width <= max(y, scale/8)
    fill = max(span, scale / 8)
    if inner.size > 1:
        gap = np.diff(inner)
        nsub = np.maximum(1, np.ceil(gap / fill).astype(int))
        start = np.repeat(inner[:-1], nsub)
        step = np.repeat(gap / nsub, nsub)
        offs = np.arange(nsub.sum()) - np.repeat(np.cumsum(nsub) - nsub, nsub) + 1
        inner = np.concatenate([inner[:1], start + step * offs])
        inner[-1] = kept[-1]
    # geometric grading outward, first step comparable to local panel size
    step0 = max(min(span, scale / 8), 1e-6)
    right, left = [], []
    d = step0
    while inner[-1] + d < radius:
        right.append(inner[-1] + d)
        d *= 1.6
    right.append(radius)
    d = step0
    while inner[0] - d > -radius:
        left.append(inner[0] - d)
        d *= 1.6
    left.append(-radius)
    return np.concatenate([np.asarray(left[::-1]), inner, np.asarray(right)])


def _fs_integral(mu, nu, radius: float, level: int) -> float:
    feat = np.unique(np.concatenate([_features(mu), _features(nu)]))
    scale = max(feat[-1] - feat[0], 1e-3)
    k = 4 + 2 * level
    # heights: graded towards the real axis where the log spikes live
    gaps = np.diff(feat)
    hmin = max(float(gaps.min()) if gaps.size else scale, 1e-9) * 1e-3
    ybreaks = [0.0]
    y = hmin
    ratio = 2.0 ** (1.0 / (1 + level))
    while y < radius:
        ybreaks.append(y)
        y *= ratio * 1.6
    ybreaks.append(radius)
    ybreaks = np.asarray(ybreaks)
    ys, wy = _panels(ybreaks, k)
    total = 0.0
    for yv, wyv in zip(ys, wy):
        half_span = math.sqrt(max(radius * radius - yv * yv, 0.0))
        xb = _x_breaks(feat, yv / (1 + level), half_span, scale)
        xs, wx = _panels(xb, k)
        zz = xs + 1j * yv
        diff = np.abs(potential_grid(mu, zz) - potential_grid(nu, zz))
        diff = np.where(np.isfinite(diff), diff, 0.0)
        dens = 1.0 / (math.pi * (1 + xs * xs + yv * yv) ** 2)
        total += wyv * float(np.dot(wx, diff * dens))
    # both measures live on R, so the lower half plane mirrors the upper
    return 2.0 * total


def dist_fs(mu: Measure, nu: Measure, *, level: int = 1, certify: bool = False) -> DistResult:
    """L1 distance between logarithmic potentials w.r.t. the Fubini-Study area.

    The plane is truncated at R = 16 (1 + support radius).  Beyond R the
    difference of potentials is harmonic and vanishes at infinity, so its
    sup on |z| = R times the Fubini-Study mass outside R bounds the tail.
    With ``certify=True`` the grid is refined once and the relative change is
    reported in ``refinement_change``.
    """
    _check_measure(mu)
    _check_measure(nu)
    radius = 16.0 * (1.0 + max(mu.support_radius, nu.support_radius))
    value = _fs_integral(mu, nu, radius, level)
    ring = radius * np.exp(1j * np.linspace(0, math.pi, 257))
    sup = float(np.max(np.abs(potential_grid(mu, ring) - potential_grid(nu, ring))))
    tail = sup / (1.0 + radius * radius)
    change = None
    if certify:
        finer = _fs_integral(mu, nu, radius, level + 1)
        change = abs(finer - value) / max(abs(finer), 1e-300)
        value = finer
    return DistResult(value, tail, change, radius)


def _cdf(m, t, left=False):
    if isinstance(m, EmpiricalMeasure):
        return m.cdf(t, left=left)
    return mp_cdf(m, t, left=left)


def wasserstein1(mu: Measure, nu: Measure) -> float:
    """Integral of |F_mu - F_nu| over the line."""
    _check_measure(mu)
    _check_measure(nu)
    if isinstance(mu, EmpiricalMeasure) and isinstance(nu, EmpiricalMeasure):
        pts = np.union1d(mu.locations, nu.locations)
        d = np.abs(mu.cdf(pts[:-1]) - nu.cdf(pts[:-1]))
        return float(np.dot(d, np.diff(pts)))
    pieces = [_features(mu), _features(nu)]
    for m in (mu, nu):
        if isinstance(m, MPLaw):
            pieces.append(m.a + (m.b - m.a) * 0.5 * (1 - np.cos(np.linspace(0, math.pi, _CDF_GRID))))
    breaks = np.unique(np.concatenate(pieces))
    xs, wx = _panels(breaks, 6)
    d = np.abs(_cdf(mu, xs) - _cdf(nu, xs))
    return float(np.dot(wx, d))


def interval_discrepancy(mu: Measure, nu: Measure) -> float:
    """sup over intervals I of |mu(I) - nu(I)|.

    Equal to max - min of D = F_mu - F_nu over all one-sided limits,
    including D(-inf) = D(+inf) = 0.
    """
    _check_measure(mu)
    _check_measure(nu)
    pieces = [_features(mu), _features(nu), [0.0]]
    for m in (mu, nu):
        if isinstance(m, MPLaw):
            pieces.append(np.linspace(0.0, m.b, 1025))
    pts = np.unique(np.concatenate(pieces))
    right = _cdf(mu, pts) - _cdf(nu, pts)
    left = _cdf(mu, pts, left=True) - _cdf(nu, pts, left=True)
    vals = np.concatenate([right, left, [0.0]])
    return float(vals.max() - vals.min())
