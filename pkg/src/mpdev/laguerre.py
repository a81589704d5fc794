"""Generalized Laguerre polynomials in overflow-safe signed-log form.

L_p^(alpha)(x) = sum_k binom(p + alpha, p - k) (-x)^k / k!

Degrees in the hundreds with alpha in the thousands overflow doubles, so
every evaluation carries its magnitude as a natural log.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import ParameterError, DomainError
from .measures import EmpiricalMeasure, MPLaw, mp_potential_plus


@dataclass(frozen=True)
class LaguerreSpec:
    p: int
    alpha: float

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 0:
            raise ParameterError(f"degree must be a nonnegative integer, got {self.p!r}")
        if not self.alpha >= 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha!r}")

    @property
    def phi(self) -> float:
        return self.p / (self.p + self.alpha)

    @property
    def scale(self) -> float:
        """The rescaling factor p + alpha."""
        return self.p + self.alpha


@dataclass(frozen=True)
class SignedLogValue:
    """A real number stored as sign * exp(log_abs); sign 0 means exactly 0."""

    log_abs: float
    sign: int

    @classmethod
    def of(cls, x: float) -> "SignedLogValue":
        if x == 0:
            return cls(float("-inf"), 0)
        return cls(math.log(abs(x)), 1 if x > 0 else -1)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)


def _recurrence(p: int, alpha: float, x: float):
    """Run the three-term recurrence up to degree p.

    Returns (L_p, L_{p-1}, log_scale) with both values divided by
    exp(log_scale).  The pair is rescaled to unit max magnitude each step.
    """
    prev, cur = 1.0, 1.0 + alpha - x
    log_scale = 0.0
    if p == 0:
        return 1.0, 0.0, 0.0
    for k in range(1, p):
        nxt = ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
        prev, cur = cur, nxt
        m = max(abs(prev), abs(cur))
        if m != 0.0 and (m > 1e8 or m < 1e-8):
            prev /= m
            cur /= m
            log_scale += math.log(m)
    return cur, prev, log_scale


def laguerre_eval(spec: LaguerreSpec, x: float) -> SignedLogValue:
    cur, _, log_scale = _recurrence(spec.p, spec.alpha, float(x))
    if cur == 0.0:
        return SignedLogValue(float("-inf"), 0)
    return SignedLogValue(math.log(abs(cur)) + log_scale, 1 if cur > 0 else -1)


def _log_prefactor(spec: LaguerreSpec) -> float:
    # log(p! (p + alpha)^-p)
    return float(gammaln(spec.p + 1)) - spec.p * math.log(spec.scale) if spec.p else 0.0


def monic_scaled_log(spec: LaguerreSpec, z: float) -> SignedLogValue:
    """(-1)^p p! (p + alpha)^-p L_p^(alpha)((p + alpha) z), the monic polynomial
    whose zeros are the rescaled Laguerre zeros."""
    val = laguerre_eval(spec, spec.scale * z)
    if val.sign == 0:
        return val
    sign = val.sign * (-1) ** spec.p
    return SignedLogValue(val.log_abs + _log_prefactor(spec), sign)


def _jacobi_zeros(p: int, alpha: float) -> np.ndarray:
    k = np.arange(p, dtype=float)
    diag = 2 * k + alpha + 1
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    return eigh_tridiagonal(diag, off, eigvals_only=True)


def _newton_polish(p: int, alpha: float, x: np.ndarray) -> np.ndarray:
    out = x.copy()
    gaps = np.diff(x)
    near = np.minimum(np.concatenate([[np.inf], gaps]), np.concatenate([gaps, [np.inf]]))
    for i, xi in enumerate(x):
        cur, prev, _ = _recurrence(p, alpha, xi)
        # x L_p' = p L_p - (p + alpha) L_{p-1}
        deriv = p * cur - (p + alpha) * prev
        if deriv == 0.0 or xi == 0.0:
            continue
        step = xi * cur / deriv
        if abs(step) < 1e-3 * near[i]:
            out[i] = xi - step
    return out


def laguerre_zeros(spec: LaguerreSpec) -> EmpiricalMeasure:
    """Empirical measure of the zeros of L_p^(alpha)((p + alpha) z).

    Zeros are eigenvalues of the symmetric tridiagonal Jacobi matrix, then one
    Newton step on the unscaled polynomial.
    """
    if spec.p < 1:
        raise ParameterError("zero measure needs degree p >= 1")
    x = _newton_polish(spec.p, spec.alpha, _jacobi_zeros(spec.p, spec.alpha))
    return EmpiricalMeasure.from_points(x / spec.scale)


def _log_min_factor(spec: LaguerreSpec) -> float:
    # min(p, 1 + p/alpha) with min(p, inf) = p at alpha = 0
    if spec.alpha == 0:
        return math.log(spec.p)
    return math.log(min(spec.p, 1 + spec.p / spec.alpha))


def envelope_rhs(spec: LaguerreSpec, z: float, c: float = 1.0) -> float:
    """Log of the upper bound for |L_p^(alpha)((p + alpha) z)|, z >= 0."""
    p, alpha = spec.p, spec.alpha
    if z < 0:
        raise DomainError(f"envelope needs z >= 0, got {z!r}")
    if z == 0 and alpha > 0:
        return math.inf
    n = p + alpha
    out = math.log(c) + _log_min_factor(spec)
    out += 0.5 * p * (math.log(n) - math.log(p))
    if alpha > 0:
        out -= 0.5 * alpha * math.log(z)
    return out + 0.5 * n * z - 0.5 * alpha


def monic_envelope_rhs(spec: LaguerreSpec, z: float, c: float = 1.0) -> float:
    """Log of the bound c min(p, 1 + p/alpha) sqrt(p) exp(p u_plus(z))."""
    law = MPLaw(spec.phi)
    u = mp_potential_plus(law, z)
    return math.log(c) + _log_min_factor(spec) + 0.5 * math.log(spec.p) + spec.p * u
