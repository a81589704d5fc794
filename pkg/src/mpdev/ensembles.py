"""Random p x n matrices with independent standardized entries and the
spectra of their normalized covariance matrices."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParameterError, ConsistencyError
from .measures import EmpiricalMeasure

_MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15
_MAX_ENTRIES = 1 << 31

# kind -> (E|t|^4, finite support as [(value, probability)] or None)
_KINDS = {
    "gaussian-real": (3.0, None),
    "gaussian-complex": (2.0, None),
    "rademacher-real": (1.0, [(Fraction(1), Fraction(1, 2)), (Fraction(-1), Fraction(1, 2))]),
    "rademacher-complex": (1.0, None),
    "uniform-centered": (1.8, None),
}
ENTRY_KINDS = tuple(_KINDS)


@dataclass(frozen=True)
class EntryDistribution:
    """Law of the matrix entries: mean 0, E|t|^2 = 1.

    ``rademacher-complex`` is uniform on {1, -1, i, -i}.  Setting
    ``checker_kind`` draws entry (i, j) from ``checker_kind`` when i + j is
    odd, giving independent but non-identically distributed entries.
    """

    kind: str = "gaussian-real"
    checker_kind: str | None = None

    def __post_init__(self):
        for k in (self.kind, self.checker_kind):
            if k is not None and k not in _KINDS:
                raise ParameterError(f"unknown entry kind {k!r}; choose from {sorted(_KINDS)}")

    @property
    def fourth_moment(self) -> float:
        m = _KINDS[self.kind][0]
        if self.checker_kind is not None:
            m = max(m, _KINDS[self.checker_kind][0])
        return m

    @property
    def is_complex(self) -> bool:
        return any(k is not None and "complex" in k for k in (self.kind, self.checker_kind))

    @property
    def support(self):
        """Exact finite support [(value, probability)], or None."""
        if self.checker_kind is not None:
            return None
        return _KINDS[self.kind][1]


@dataclass(frozen=True)
class EnsembleSpec:
    p: int
    n: int
    entry: EntryDistribution = EntryDistribution()
    master_seed: int = 0
    beta: float | None = None

    def __post_init__(self):
        if int(self.p) != self.p or int(self.n) != self.n or not (1 <= self.p <= self.n):
            raise ParameterError(f"need integers 1 <= p <= n, got p={self.p!r}, n={self.n!r}")
        if self.p * self.n > _MAX_ENTRIES:
            raise ParameterError(f"matrix with {self.p * self.n} entries is too large")
        if not (0 <= self.master_seed <= _MASK64):
            raise ParameterError("master_seed must be an unsigned 64-bit integer")
        if self.beta is not None and self.entry.fourth_moment > self.beta:
            raise ParameterError(
                f"fourth moment {self.entry.fourth_moment} exceeds declared beta {self.beta}")

    @property
    def phi(self) -> float:
        return self.p / self.n

    @property
    def fourth_moment_bound(self) -> float:
        return self.beta if self.beta is not None else self.entry.fourth_moment


def mix64(x: int) -> int:
    """SplitMix64 finalizer."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    """Per-trial stream seed: mix64(master ^ golden * (trial + 1))."""
    if trial < 0:
        raise ParameterError("trial index must be >= 0")
    return mix64(master_seed ^ ((GOLDEN64 * (trial + 1)) & _MASK64))


def _draw(kind: str, rng: np.random.Generator, shape) -> np.ndarray:
    if kind == "gaussian-real":
        return rng.standard_normal(shape)
    if kind == "gaussian-complex":
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    if kind == "rademacher-real":
        return rng.integers(0, 2, size=shape) * 2.0 - 1.0
    if kind == "rademacher-complex":
        return np.array([1, 1j, -1, -1j])[rng.integers(0, 4, size=shape)]
    if kind == "uniform-centered":
        return rng.uniform(-math.sqrt(3), math.sqrt(3), size=shape)
    raise ParameterError(f"unknown entry kind {kind!r}")


def sample_matrix(spec: EnsembleSpec, trial: int) -> np.ndarray:
    """The p x n matrix for ``trial``; a pure function of (spec, trial)."""
    rng = np.random.Generator(np.random.PCG64(trial_seed(spec.master_seed, trial)))
    shape = (spec.p, spec.n)
    m = _draw(spec.entry.kind, rng, shape)
    if spec.entry.checker_kind is not None:
        other = _draw(spec.entry.checker_kind, rng, shape)
        odd = (np.add.outer(np.arange(spec.p), np.arange(spec.n)) % 2).astype(bool)
        m = np.where(odd, other, m)
    return m


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues of (1/n) M* M in ascending order (length n)."""

    eigenvalues: np.ndarray
    trace_check: float
    p: int

    @property
    def n(self) -> int:
        return self.eigenvalues.size


def covariance_spectrum(M: np.ndarray, n: int | None = None) -> SpectrumResult:
    """Spectrum of (1/n) M* M from the p x p Gram matrix (1/n) M M*.

    The remaining n - p eigenvalues are exact zeros.
    """
    M = np.asarray(M)
    p, cols = M.shape
    n = cols if n is None else n
    if n != cols:
        raise ParameterError(f"matrix has {cols} columns but n={n}")
    if p > n:
        raise ParameterError(f"need p <= n, got {p} x {n}")
    G = (M @ M.conj().T) / n
    lam = np.linalg.eigvalsh(G)
    norm = float(np.linalg.norm(G, 2)) if p else 0.0
    if lam.size and lam[0] < -1e-10 * max(norm, 1.0):
        raise ConsistencyError(f"Gram matrix has eigenvalue {lam[0]!r} below roundoff")
    lam = np.where(lam < 0, 0.0, lam)
    eig = np.concatenate([np.zeros(n - p), lam])
    eig.sort()
    fro = float(np.sum(np.abs(M) ** 2)) / n
    return SpectrumResult(eig, fro - float(lam.sum()), p)


def esd(spectrum: SpectrumResult) -> EmpiricalMeasure:
    """Empirical spectral distribution (1/n) sum delta_lambda."""
    vals, counts = np.unique(spectrum.eigenvalues, return_counts=True)
    return EmpiricalMeasure(vals, counts / spectrum.n)


def esd_plus(spectrum: SpectrumResult) -> EmpiricalMeasure:
    """Zero measure of z^-(n-p) det(z - W/n): the p Gram eigenvalues, each 1/p."""
    lam = spectrum.eigenvalues[spectrum.n - spectrum.p:]
    vals, counts = np.unique(lam, return_counts=True)
    return EmpiricalMeasure(vals, counts / spectrum.p)


def charpoly_at(spectrum: SpectrumResult, z: complex) -> complex:
    """det(z - W/n) = prod_k (z - lambda_k), accumulated as log-modulus and
    argument."""
    z = complex(z)
    d = z - spectrum.eigenvalues
    if np.any(d == 0):
        return 0j
    log_mod = float(np.sum(np.log(np.abs(d))))
    arg = float(np.sum(np.angle(d)))
    return cmath.rect(math.exp(log_mod), arg) if log_mod < 709 else complex(math.inf)
