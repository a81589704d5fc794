"""Exact moment combinatorics for characteristic polynomials of W = M* M.

Everything here is exact rational arithmetic on Python integers; floats only
appear in the bound helpers at the end, where exact quantities meet
floating-point potentials.
"""
from __future__ import annotations

import itertools
import math
import warnings
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .ensembles import EnsembleSpec, EntryDistribution, covariance_spectrum, sample_matrix
from .errors import CapacityError, DomainError, ParameterError
from .measures import MPLaw, mp_potential
from .polynomial import ExactPolynomial

BRUTE_FORCE_LIMIT = 1 << 20


def _nonneg(*vals):
    for v in vals:
        if int(v) != v or v < 0:
            raise ParameterError(f"expected a nonnegative integer, got {v!r}")


# -- count table -------------------------------------------------------------

@lru_cache(maxsize=None)
def factorial(k: int) -> int:
    return math.factorial(k)


@lru_cache(maxsize=None)
def binomial(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


@lru_cache(maxsize=None)
def falling(p: int, k: int) -> int:
    """p! / (p - k)!: injective maps from a k-set into a p-set."""
    return math.perm(p, k) if 0 <= k <= p else 0


@lru_cache(maxsize=None)
def stirling_unsigned(k: int, m: int) -> int:
    """Number of permutations of k elements with exactly m cycles."""
    _nonneg(k, m)
    if m > k:
        return 0
    if k == 0:
        return 1 if m == 0 else 0
    if m == 0:
        return 0
    return stirling_unsigned(k - 1, m - 1) + (k - 1) * stirling_unsigned(k - 1, m)


def count_injective_pairs(k1: int, k2: int, m: int, p: int) -> int:
    """Pairs of injective maps J1 -> [p], J2 -> [p] that disagree on every
    point of J1 & J2, where |J1| = k1, |J2| = k2, |J1 & J2| = m.

    Inclusion-exclusion over the set of points where the maps are forced to
    agree.
    """
    _nonneg(k1, k2, m, p)
    if m > min(k1, k2):
        raise ParameterError(f"intersection size {m} exceeds min({k1}, {k2})")
    if k1 > p or k2 > p:
        return 0
    total = 0
    for s in range(m + 1):
        total += (-1) ** s * binomial(m, s) * falling(p, k1) * falling(p - s, k2 - s)
    return total


# -- characteristic polynomials ----------------------------------------------

def expected_charpoly(n: int, p: int) -> ExactPolynomial:
    """E det(z - W) = sum_k (-1)^k C(n, k) p!/(p-k)! z^(n-k)."""
    _nonneg(n, p)
    if not 1 <= p <= n:
        raise ParameterError(f"need 1 <= p <= n, got p={p}, n={n}")
    coeffs = [0] * (n + 1)
    for k in range(p + 1):
        coeffs[n - k] = (-1) ** k * binomial(n, k) * falling(p, k)
    return ExactPolynomial(coeffs)


@lru_cache(maxsize=None)
def r1_direct(n: int, p: int) -> ExactPolynomial:
    """R1(n, p, z) summed over the sizes (k1, k2, m) of J1, J2, J1 & J2."""
    _nonneg(n, p)
    if p > n:
        raise ParameterError(f"need p <= n, got p={p}, n={n}")
    coeffs = [0] * (2 * n + 1)
    top = min(n, p)
    for k1 in range(top + 1):
        for k2 in range(top + 1):
            acc = 0
            for m in range(max(0, k1 + k2 - n), min(k1, k2) + 1):
                pairs = binomial(n, m) * binomial(n - m, k1 - m) * binomial(n - k1, k2 - m)
                if pairs:
                    acc += pairs * count_injective_pairs(k1, k2, m, p)
            coeffs[2 * n - k1 - k2] += (-1) ** (k1 + k2) * acc
    return ExactPolynomial(coeffs)


@lru_cache(maxsize=None)
def r1_recursive(n: int, p: int) -> ExactPolynomial:
    """R1(n, p, z) from |E det(z - W)|^2 minus the lower diagonal terms."""
    _nonneg(n, p)
    if p > n:
        raise ParameterError(f"need p <= n, got p={p}, n={n}")
    if p == 0:
        return ExactPolynomial.monomial(2 * n)
    e = expected_charpoly(n, p)
    out = e * e
    for k in range(1, p + 1):
        weight = Fraction(factorial(n) * factorial(p),
                          factorial(k) * factorial(n - k) * factorial(p - k))
        out = out - r1_recursive(n - k, p - k).scale(weight)
    return out


def r2_uniform(n: int, p: int, m4) -> ExactPolynomial:
    """R2 for entries with common fourth moment ``m4`` (exact rational)."""
    _nonneg(n, p)
    if p > n:
        raise ParameterError(f"need p <= n, got p={p}, n={n}")
    m4 = Fraction(m4)
    if m4 < 1:
        warnings.warn(f"fourth moment {m4} < 1 is impossible for unit-variance entries",
                      stacklevel=2)
    out = ExactPolynomial()
    for k in range(p + 1):
        out = out + r1_direct(n - k, p - k).scale(binomial(n, k) * falling(p, k) * m4 ** k)
    return out


# -- brute force oracle -------------------------------------------------------

def _charpoly_exact(A: tuple[tuple[int, ...], ...]) -> ExactPolynomial:
    """det(z I - A) for an exact square matrix (Faddeev-LeVerrier)."""
    n = len(A)
    ident = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    Mk = [[Fraction(0)] * n for _ in range(n)]
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{n-k+1} I
        prod = [[sum(A[i][l] * Mk[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        Mk = [[prod[i][j] + coeffs[n - k + 1] * ident[i][j] for j in range(n)] for i in range(n)]
        AM = [[sum(A[i][l] * Mk[l][j] for l in range(n)) for j in range(n)] for i in range(n)]
        coeffs[n - k] = -sum(AM[i][i] for i in range(n)) / k
    return ExactPolynomial(coeffs)


def bruteforce_expectations(p: int, n: int, entry: EntryDistribution):
    """Exact (E det(z - W), E det(z - W)^2) by enumerating every matrix.

    Only real entry laws with a finite rational support qualify.
    """
    support = entry.support
    if support is None:
        raise CapacityError(f"entry law {entry.kind!r} has no finite exact support")
    if not 1 <= p <= n:
        raise ParameterError(f"need 1 <= p <= n, got p={p}, n={n}")
    states = len(support) ** (p * n)
    if states > BRUTE_FORCE_LIMIT:
        raise CapacityError(f"{states} assignments exceed the limit {BRUTE_FORCE_LIMIT}")
    cache: dict = {}
    mean = ExactPolynomial()
    second = ExactPolynomial()
    weight_sum = Fraction(0)
    for assignment in itertools.product(support, repeat=p * n):
        prob = Fraction(1)
        for _, pr in assignment:
            prob *= pr
        t = [[assignment[i * n + j][0] for j in range(n)] for i in range(p)]
        W = tuple(tuple(sum(t[l][j] * t[l][k] for l in range(p)) for k in range(n))
                  for j in range(n))
        key = W
        if key not in cache:
            cp = _charpoly_exact(W)
            cache[key] = (cp, cp * cp)
        cp, cp2 = cache[key]
        mean = mean + cp.scale(prob)
        second = second + cp2.scale(prob)
        weight_sum += prob
    assert weight_sum == 1
    return mean, second


# -- bound helpers -------------------------------------------------------------

def detw_bound_log(n: int, p: int, beta: float, z: float, c: float = 1.0) -> float:
    """log of c p^(13/2) n^(1/2) e^beta e^(2 n u_phi(z)), phi = p/n, z in [a, b]."""
    law = MPLaw(p / n)
    if not law.a <= z <= law.b:
        raise DomainError(f"z={z!r} outside [{law.a}, {law.b}]")
    return math.log(c) + 6.5 * math.log(p) + 0.5 * math.log(n) + beta + 2 * n * mp_potential(law, z)


def r1_bound_log(n: int, p: int, z: float, c: float = 1.0) -> float:
    """log of c (p+1)^3 n! p! z^(n-p) e^z."""
    return (math.log(c) + 3 * math.log(p + 1) + math.lgamma(n + 1) + math.lgamma(p + 1)
            + (n - p) * math.log(z) + z)


def exact_second_moment_scaled(poly2: ExactPolynomial, n: int, z: float) -> float:
    """E|det(z - W/n)|^2 = n^(-2n) E|det(nz - W)|^2 from an exact polynomial."""
    val = poly2(Fraction(z).limit_denominator(10 ** 12) * n) / Fraction(n) ** (2 * n)
    return float(val)


def mc_det_moments(spec: EnsembleSpec, zs, trials: int, first_trial: int = 0):
    """Monte-Carlo E det(z - W/n) and E|det(z - W/n)|^2 with standard errors.

    Returns a dict of arrays keyed 'mean', 'mean_se', 'second', 'second_se'.
    """
    zs = np.asarray(zs, dtype=float)
    dets = np.empty((trials, zs.size), dtype=complex)
    for i in range(trials):
        spectrum = covariance_spectrum(sample_matrix(spec, first_trial + i), spec.n)
        lam = spectrum.eigenvalues
        dets[i] = np.prod(zs[:, None] - lam[None, :], axis=1)
    sq = np.abs(dets) ** 2
    root = math.sqrt(trials)
    return {
        "mean": dets.mean(axis=0),
        "mean_se": dets.std(axis=0, ddof=1) / root,
        "second": sq.mean(axis=0),
        "second_se": sq.std(axis=0, ddof=1) / root,
    }
