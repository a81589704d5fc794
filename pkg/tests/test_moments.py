import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import eval_genlaguerre

from mpdev import moments
from mpdev.ensembles import EntryDistribution, EnsembleSpec
from mpdev.errors import CapacityError, DomainError, ParameterError
from mpdev.measures import MPLaw
from mpdev.polynomial import ExactPolynomial as P

RAD = EntryDistribution("rademacher-real")


def _cycles(perm):
    seen, count = set(), 0
    for start in range(len(perm)):
        if start not in seen:
            count += 1
            j = start
            while j not in seen:
                seen.add(j)
                j = perm[j]
    return count


@pytest.mark.parametrize("k", range(0, 8))
def test_stirling_vs_permutation_enumeration(k):
    counts = [0] * (k + 1)
    for perm in itertools.permutations(range(k)):
        counts[_cycles(perm)] += 1
    assert [moments.stirling_unsigned(k, m) for m in range(k + 1)] == counts


def test_stirling_examples():
    assert [moments.stirling_unsigned(3, m) for m in (1, 2, 3)] == [2, 3, 1]
    assert all(moments.stirling_unsigned(k, k) == 1 for k in range(15))
    assert sum(moments.stirling_unsigned(2, m) * 2 ** m for m in range(3)) == 6
    assert moments.stirling_unsigned(2, 5) == 0
    with pytest.raises(ParameterError):
        moments.stirling_unsigned(-1, 0)


def _enumerate_pairs(k1, k2, m, p):
    J1 = list(range(k1))
    J2 = list(range(k1 - m, k1 - m + k2))
    shared = set(J1) & set(J2)
    total = 0
    for s1 in itertools.permutations(range(p), k1):
        f1 = dict(zip(J1, s1))
        for s2 in itertools.permutations(range(p), k2):
            f2 = dict(zip(J2, s2))
            if all(f1[j] != f2[j] for j in shared):
                total += 1
    return total


@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4), st.integers(0, 4))
def test_injective_pairs_vs_enumeration(k1, k2, m, p):
    m = min(m, k1, k2)
    assert moments.count_injective_pairs(k1, k2, m, p) == _enumerate_pairs(k1, k2, m, p)


def test_injective_pairs_examples():
    assert moments.count_injective_pairs(2, 2, 2, 2) == 2
    assert moments.count_injective_pairs(1, 1, 1, 1) == 0
    # the count depends on the overlap: 2 when J1 = J2, 4 when disjoint
    assert moments.count_injective_pairs(1, 1, 1, 2) == 2
    assert moments.count_injective_pairs(1, 1, 0, 2) == 4
    for k1, k2, p in ((2, 3, 5), (1, 4, 4)):
        assert moments.count_injective_pairs(k1, k2, 0, p) == math.perm(p, k1) * math.perm(p, k2)
    with pytest.raises(ParameterError):
        moments.count_injective_pairs(1, 2, 2, 3)


def test_expected_charpoly_examples():
    assert moments.expected_charpoly(1, 1) == P([-1, 1])
    assert moments.expected_charpoly(2, 1) == P([0, -2, 1])
    for n in range(1, 8):
        for p in range(1, n + 1):
            c = moments.expected_charpoly(n, p).coeff(n - p)
            assert c == (-1) ** p * math.factorial(n) // math.factorial(n - p)
    with pytest.raises(ParameterError):
        moments.expected_charpoly(2, 3)


@given(st.integers(1, 10), st.integers(0, 9), st.floats(0.1, 5.0))
def test_expected_charpoly_laguerre_form(p, extra, z):
    n = p + extra
    ref = (-1) ** p * math.factorial(p) * z ** (n - p) * eval_genlaguerre(p, n - p, z)
    val = float(moments.expected_charpoly(n, p)(Fraction(z)))
    assert val == pytest.approx(ref, rel=1e-9, abs=1e-9)


def _r1_enumerated(n, p):
    """R1 straight from its definition: sum over subsets and injection pairs."""
    coeffs = [0] * (2 * n + 1)
    for k1 in range(min(n, p) + 1):
        for k2 in range(min(n, p) + 1):
            acc = 0
            for J1 in itertools.combinations(range(n), k1):
                for J2 in itertools.combinations(range(n), k2):
                    shared = set(J1) & set(J2)
                    for s1 in itertools.permutations(range(p), k1):
                        f1 = dict(zip(J1, s1))
                        for s2 in itertools.permutations(range(p), k2):
                            f2 = dict(zip(J2, s2))
                            acc += all(f1[j] != f2[j] for j in shared)
            coeffs[2 * n - k1 - k2] += (-1) ** (k1 + k2) * acc
    return P(coeffs)


@pytest.mark.parametrize("n,p", [(n, p) for n in range(0, 4) for p in range(0, min(n, 3) + 1)])
def test_r1_direct_vs_definition(n, p):
    assert moments.r1_direct(n, p) == _r1_enumerated(n, p)


def test_r1_examples():
    assert moments.r1_direct(3, 0) == P.monomial(6)
    assert moments.r1_direct(1, 1) == P([0, -2, 1])
    assert moments.r1_direct(2, 1) == P([0, 0, 2, -4, 1])
    assert moments.r1_recursive(1, 1) == P([0, -2, 1])
    assert moments.r1_recursive(2, 1) == P([0, 0, 2, -4, 1])
    assert moments.r1_recursive(0, 0) == P([1])


def test_r2_examples():
    assert moments.r2_uniform(1, 1, 3) == P([3, -2, 1])
    assert moments.r2_uniform(4, 0, 2) == P.monomial(8)
    with pytest.warns(UserWarning):
        moments.r2_uniform(1, 1, Fraction(1, 2))


def test_bruteforce_examples():
    mean, second = moments.bruteforce_expectations(1, 1, RAD)
    assert mean == P([-1, 1]) and second == P([1, -2, 1])
    mean, _ = moments.bruteforce_expectations(1, 2, RAD)
    assert mean == moments.expected_charpoly(2, 1)
    mean, _ = moments.bruteforce_expectations(2, 2, RAD)
    assert mean == moments.expected_charpoly(2, 2)


def test_bruteforce_capacity():
    with pytest.raises(CapacityError):
        moments.bruteforce_expectations(5, 5, RAD)
    with pytest.raises(CapacityError):
        moments.bruteforce_expectations(1, 1, EntryDistribution("gaussian-real"))
    with pytest.raises(ParameterError):
        moments.bruteforce_expectations(3, 2, RAD)


def test_charpoly_exact_vs_numpy():
    A = ((2, 1, 0), (1, 3, 1), (0, 1, 4))
    cp = moments._charpoly_exact(A)
    ref = np.poly(np.array(A, dtype=float))[::-1]
    assert [float(c) for c in cp.coeffs] == pytest.approx(list(ref))


def test_bound_helpers():
    base = moments.detw_bound_log(4, 2, 1.0, 1.0, c=1.0)
    assert moments.detw_bound_log(4, 2, 1.0, 1.0, c=math.e) == pytest.approx(base + 1)
    law = MPLaw(0.5)
    with pytest.raises(DomainError):
        moments.detw_bound_log(4, 2, 1.0, law.b + 0.1)
    assert moments.r1_bound_log(3, 1, 1.0, c=math.e) == pytest.approx(
        moments.r1_bound_log(3, 1, 1.0) + 1)


def test_exact_second_moment_scaled_brute_force():
    _, second = moments.bruteforce_expectations(2, 4, RAD)
    val = moments.exact_second_moment_scaled(second, 4, 1.0)
    # brute-force average of det(1 - W/4)^2 in floating point
    acc = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=8):
        M = np.array(signs).reshape(2, 4)
        acc += np.linalg.det(np.eye(4) - M.T @ M / 4) ** 2
    assert val == pytest.approx(acc / 256, rel=1e-10)


def test_mc_det_moments_shapes_and_mean():
    spec = EnsembleSpec(3, 5, EntryDistribution("gaussian-real"), 1)
    res = moments.mc_det_moments(spec, [1.0, 2.0], 4000)
    assert res["mean"].shape == (2,)
    closed = [float(moments.expected_charpoly(5, 3)(Fraction(5 * z))) / 5 ** 5 for z in (1, 2)]
    assert np.all(np.abs(res["mean"].real - closed) <= 4 * res["mean_se"])
    assert np.all(res["second"] > 0)
