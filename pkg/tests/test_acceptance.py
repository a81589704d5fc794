"""End-to-end acceptance criteria 1-12.

Each test records one PASS/FAIL line (printed and repeated in the pytest
terminal summary) and then asserts the same condition.
"""
import math
import time
from fractions import Fraction

import numpy as np
from scipy.special import eval_genlaguerre

from mpdev import moments
from mpdev.config import ExperimentConfig
from mpdev.ensembles import EntryDistribution, EnsembleSpec, covariance_spectrum, sample_matrix
from mpdev.experiments import (laguerre_envelope_fit, run, run_convergence, run_laguerre_rate,
                               run_tail)
from mpdev.measures import MPLaw, mp_potential_plus, potential_quadrature
from mpdev.report import emit_report


def test_01_expected_charpoly_identity(acceptance_report):
    start = time.perf_counter()
    coeff_ok, worst = True, 0.0
    for n in range(1, 13):
        for p in range(1, n + 1):
            poly = moments.expected_charpoly(n, p)
            ref = {n - k: (-1) ** k * math.comb(n, k) * math.perm(p, k) for k in range(p + 1)}
            coeff_ok &= all(poly.coeff(d) == ref.get(d, 0) for d in range(n + 1))
            coeff_ok &= poly.degree == n
            for z in (0.5, 1.0, 2.0):
                lag = (-1) ** p * math.factorial(p) * z ** (n - p) * eval_genlaguerre(p, n - p, z)
                val = float(poly(Fraction(z)))
                worst = max(worst, abs(val - lag) / max(abs(lag), 1e-300))
    elapsed = time.perf_counter() - start
    ok = coeff_ok and worst <= 1e-9 and elapsed < 5
    acceptance_report(1, "expected_charpoly = signed Laguerre form", ok,
                      f"exact={coeff_ok} max rel err={worst:.2e} t={elapsed:.2f}s")
    assert ok


def test_02_r1_cross_validation(acceptance_report):
    moments.r1_direct.cache_clear()
    moments.r1_recursive.cache_clear()
    start = time.perf_counter()
    bad = [(n, p) for n in range(9) for p in range(n + 1)
           if moments.r1_direct(n, p) != moments.r1_recursive(n, p)]
    base = all(moments.r1_direct(n, 0) == moments.ExactPolynomial.monomial(2 * n)
               for n in range(9))
    elapsed = time.perf_counter() - start
    ok = not bad and base and elapsed < 10
    acceptance_report(2, "r1_direct == r1_recursive, n <= 8", ok,
                      f"mismatches={bad} base_row={base} t={elapsed:.2f}s")
    assert ok


def test_03_bruteforce_oracle(acceptance_report):
    start = time.perf_counter()
    rad = EntryDistribution("rademacher-real")
    mean_ok = all(moments.bruteforce_expectations(p, n, rad)[0] == moments.expected_charpoly(n, p)
                  for p, n in ((1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (2, 4)))
    second_ok = all(moments.bruteforce_expectations(1, n, rad)[1] == moments.r2_uniform(n, 1, 1)
                    for n in range(1, 7))
    elapsed = time.perf_counter() - start
    ok = mean_ok and second_ok and elapsed < 30
    acceptance_report(3, "brute-force Rademacher moments", ok,
                      f"E det={mean_ok} E det^2={second_ok} t={elapsed:.2f}s")
    assert ok


def test_04_stirling_identity(acceptance_report):
    moments.stirling_unsigned.cache_clear()
    start = time.perf_counter()
    ok_vals = all(sum(moments.stirling_unsigned(k, m) * 2 ** m for m in range(k + 1))
                  == math.factorial(k + 1) for k in range(21))
    elapsed = time.perf_counter() - start
    ok = ok_vals and elapsed < 1
    acceptance_report(4, "sum_m s(k,m) 2^m = (k+1)!, k <= 20", ok, f"t={elapsed:.3f}s")
    assert ok


def test_05_closed_form_potential(acceptance_report):
    start = time.perf_counter()
    worst = 0.0
    for phi in (0.25, 0.5, 0.75, 1.0):
        law = MPLaw(phi)
        for z in np.linspace(law.a, law.b, 22)[1:-1]:
            closed = mp_potential_plus(law, z)
            quad = potential_quadrature(law.positive_part(), z)
            worst = max(worst, abs(closed - quad))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10
    acceptance_report(5, "closed-form u+ vs quadrature", ok,
                      f"max abs err={worst:.2e} t={elapsed:.2f}s")
    assert ok


def test_06_laguerre_envelope(acceptance_report):
    running = laguerre_envelope_fit(p_max=40)
    c_fit = running[-1]
    q3 = running[(3 * len(running)) // 4 - 1]
    increase = c_fit / q3 - 1
    ok = math.isfinite(c_fit) and c_fit > 0 and increase < 0.05
    acceptance_report(6, "Laguerre envelope constant stabilizes", ok,
                      f"c_fit={c_fit:.4g} last-quartile increase={increase:.2%}")
    assert ok


def test_07_zero_equidistribution_rate(acceptance_report):
    start = time.perf_counter()
    cfg = ExperimentConfig("laguerre-rate", ladder=tuple((p, p) for p in (10, 20, 40, 80, 160)),
                           phi=0.5)
    rows, _ = run_laguerre_rate(cfg)
    dists = [r.dist_fs for r in rows]
    ratios = [r.extras["dist_ratio"] for r in rows]
    spread = max(ratios) / min(ratios)
    decreasing = all(a > b for a, b in zip(dists, dists[1:]))
    elapsed = time.perf_counter() - start
    ok = spread <= 3 and decreasing and elapsed < 120
    acceptance_report(7, "Laguerre zeros: dist p/log p bounded", ok,
                      f"max/min={spread:.3f} decreasing={decreasing} t={elapsed:.1f}s")
    assert ok


def test_08_mp_convergence(acceptance_report):
    start = time.perf_counter()
    cfg = ExperimentConfig("convergence", ladder=((50, 100), (100, 200), (200, 400)),
                           trials=20, entry=EntryDistribution("gaussian-real"))
    rows, _ = run_convergence(cfg)
    med = [r for r in rows if r.row_type == "median"]
    d = [r.dist_fs for r in med]
    disc = [r.interval_discrepancy for r in med]
    dec = all(a > b for a, b in zip(d, d[1:])) and all(a > b for a, b in zip(disc, disc[1:]))
    elapsed = time.perf_counter() - start
    ok = dec and disc[-1] < 0.05 and elapsed < 300
    acceptance_report(8, "ESD -> MP convergence across rungs", ok,
                      "median dist_fs=" + ",".join(f"{x:.3g}" for x in d)
                      + " median disc=" + ",".join(f"{x:.3g}" for x in disc)
                      + f" t={elapsed:.0f}s")
    assert ok


def test_09_tail_decay(acceptance_report):
    start = time.perf_counter()
    cfg = ExperimentConfig("tail", ladder=((25, 50), (50, 100), (75, 150), (100, 200)),
                           trials=400, delta_factor=2.0, reference=(50, 100))
    rep = run_tail(cfg)
    elapsed = time.perf_counter() - start
    ok = rep.decay_evidence and elapsed < 900
    fit = rep.fit
    detail = "q=" + ",".join(f"{r['q']:.4g}" for r in rep.rungs)
    if fit.available:
        detail += f" slope={fit.slope:.4g} CI=[{fit.slope_lo:.4g},{fit.slope_hi:.4g}]"
    else:
        detail += " fit unavailable"
    acceptance_report(9, "tail probability decays in n", ok, detail + f" t={elapsed:.0f}s")
    assert ok


def _mid_grid(p, n, k=9):
    law = MPLaw(p / n)
    return law.a + (law.b - law.a) * np.arange(1, k + 1) / (k + 1)


def test_10_second_moment_bound(acceptance_report):
    trials = 100_000
    exact = []
    _, second = moments.bruteforce_expectations(2, 4, EntryDistribution("rademacher-real"))
    for z in _mid_grid(2, 4):
        lhs = moments.exact_second_moment_scaled(second, 4, z)
        exact.append(lhs / math.exp(moments.detw_bound_log(4, 2, 1.0, z)))
    batches = []
    for batch in (0, 1):
        per_rung = {}
        for p, n in ((4, 8), (8, 12)):
            spec = EnsembleSpec(p, n, EntryDistribution("gaussian-real"), 20261016)
            zs = _mid_grid(p, n)
            mc = moments.mc_det_moments(spec, zs, trials, first_trial=batch * trials)
            rhs = np.exp([moments.detw_bound_log(n, p, spec.fourth_moment_bound, z) for z in zs])
            per_rung[(p, n)] = mc["second"] / rhs
        batches.append(per_rung)
    c_fit = [max(max(exact), *(r.max() for r in b.values())) for b in batches]
    # LHS <= c_fit * RHS over the whole battery, with c_fit from the other batch
    holds = all(max(exact) <= c * (1 + 1e-12) for c in c_fit)
    holds &= all(batches[i][k].max() <= c_fit[1 - i] * 1.5 for i in (0, 1) for k in batches[i])
    stable = abs(c_fit[1] / c_fit[0] - 1) <= 0.5
    mc_stable = all(abs(batches[1][k].max() / batches[0][k].max() - 1) <= 0.5 for k in batches[0])
    ok = holds and stable and mc_stable and all(0 < c < math.inf for c in c_fit)
    acceptance_report(10, "second-moment bound with fitted c", ok,
                      f"c_fit={c_fit[0]:.4g}/{c_fit[1]:.4g} mc max (4,8)="
                      f"{batches[0][(4, 8)].max():.3g}/{batches[1][(4, 8)].max():.3g} (8,12)="
                      f"{batches[0][(8, 12)].max():.3g}/{batches[1][(8, 12)].max():.3g}")
    assert ok


def test_11_gram_path_spectrum(acceptance_report):
    start = time.perf_counter()
    spec = EnsembleSpec(4, 7, EntryDistribution("gaussian-real"), 11)
    worst = 0.0
    for t in range(50):
        M = sample_matrix(spec, t)
        gram = covariance_spectrum(M, 7).eigenvalues
        direct = np.linalg.eigvalsh(M.conj().T @ M / 7)
        worst = max(worst, float(np.max(np.abs(np.sort(gram) - np.sort(direct)))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 5
    acceptance_report(11, "Gram-path spectrum = direct n x n spectrum", ok,
                      f"max diff={worst:.2e} t={elapsed:.2f}s")
    assert ok


def test_12_determinism_across_workers(acceptance_report, tmp_path):
    configs = [
        ExperimentConfig("convergence", ladder=((10, 20), (20, 40)), trials=6, delta=0.01),
        ExperimentConfig("tail", ladder=((10, 20), (20, 40)), trials=8, reference=(10, 20)),
    ]
    same = True
    for i, cfg in enumerate(configs):
        blobs = []
        for workers in (1, 8):
            for fmt in ("csv", "json"):
                rows, series = run(cfg.with_overrides(workers=workers))
                path = tmp_path / f"{i}_{workers}.{fmt}"
                written = emit_report(rows, fmt, str(path), series)
                blobs.append((fmt, tuple(open(p, "rb").read() for p in written)))
        by_fmt = {}
        for fmt, blob in blobs:
            by_fmt.setdefault(fmt, set()).add(blob)
        same &= all(len(v) == 1 for v in by_fmt.values())
    acceptance_report(12, "byte-identical reports at 1 and 8 workers", same)
    assert same


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-q", "-s"]))
