"""Experiment drivers: convergence and tail of covariance ESDs, Laguerre
zero equidistribution rates, exact/statistical moment checks and bound
sweeps.

Every trial is a pure function of (config, rung, trial index), and all
aggregates are computed from rows sorted by (rung, trial), so the worker
count cannot change any output.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import moments
from .config import ExperimentConfig
from .ensembles import EntryDistribution, EnsembleSpec, covariance_spectrum, esd, esd_plus, \
    sample_matrix, trial_seed
from .errors import CapacityError, ConfigError
from .laguerre import LaguerreSpec, envelope_rhs, laguerre_eval, laguerre_zeros
from .measures import MPLaw, dist_fs, interval_discrepancy, mp_potential, wasserstein1
from .report import ReportRow, Series

log = logging.getLogger(__name__)

Z95 = 1.959963984540054


# -- per-trial work -------------------------------------------------------------

def _trial_distances(args):
    config, p, n, trial = args
    start = time.perf_counter()
    spec = config.ensemble(p, n)
    spectrum = covariance_spectrum(sample_matrix(spec, trial), n)
    law = MPLaw(spec.phi)
    out = {"trial": trial, "seed": trial_seed(spec.master_seed, trial)}
    if "dist_fs" in config.distances:
        # the common atom (1 - phi) delta_0 cancels: dist = phi * dist of the + parts
        plus = dist_fs(esd_plus(spectrum), law.positive_part(), level=config.level)
        out["dist_fs"] = spec.phi * plus.value
    measure = esd(spectrum)
    if "wasserstein1" in config.distances:
        out["wasserstein1"] = wasserstein1(measure, law)
    if "interval_discrepancy" in config.distances:
        out["interval_discrepancy"] = interval_discrepancy(measure, law)
    out["trace_check"] = spectrum.trace_check
    out["wall_time"] = time.perf_counter() - start
    return out


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _collect(config: ExperimentConfig):
    tasks = [(config, p, n, t) for p, n in config.ladder for t in range(config.trials)]
    results = _map(_trial_distances, tasks, config.workers)
    by_rung: dict = {}
    for (_, p, n, _), res in zip(tasks, results):
        by_rung.setdefault((p, n), []).append(res)
    for rung in by_rung:
        by_rung[rung].sort(key=lambda r: r["trial"])
    return by_rung


def _stats(values):
    arr = np.sort(np.asarray(values, dtype=float))
    return {"median": float(np.median(arr)), "mean": float(np.mean(arr)),
            "max": float(arr[-1]), "min": float(arr[0])}


# -- convergence ------------------------------------------------------------------

def run_convergence(config: ExperimentConfig):
    """Per-trial distances of the ESD to the MP law plus per-rung aggregates.

    Returns (rows, series).
    """
    if config.kind != "convergence":
        raise ConfigError(f"run_convergence got kind {config.kind!r}")
    by_rung = _collect(config)
    rows, series_pts = [], {m: [] for m in config.distances}
    for (p, n), results in by_rung.items():
        phi = p / n
        findings = 0
        for r in results:
            exceed = None
            if config.delta is not None and "dist_fs" in r:
                exceed = bool(r["dist_fs"] >= config.delta)
                if not exceed and phi < 1 and "interval_discrepancy" in r:
                    bound = math.sqrt(config.delta) / (1 - phi)
                    if r["interval_discrepancy"] > bound + 1e-9:
                        findings += 1
                        log.warning("rung %dx%d trial %d: discrepancy %.4g above %.4g",
                                    p, n, r["trial"], r["interval_discrepancy"], bound)
            rows.append(ReportRow("convergence", p, n, phi, "trial", r["trial"], r["seed"],
                                  r.get("dist_fs"), r.get("wasserstein1"),
                                  r.get("interval_discrepancy"), exceed, r["wall_time"],
                                  {"trace_check": r["trace_check"]}))
        stats = {m: _stats([r[m] for r in results]) for m in config.distances}
        for name in ("median", "mean", "max"):
            extras = {}
            if config.delta is not None and "dist_fs" in stats:
                extras["exceed_rate"] = sum(r["dist_fs"] >= config.delta for r in results) / len(results)
                extras["findings"] = findings
            rows.append(ReportRow("convergence", p, n, phi, name, -1, config.seed,
                                  stats.get("dist_fs", {}).get(name),
                                  stats.get("wasserstein1", {}).get(name),
                                  stats.get("interval_discrepancy", {}).get(name),
                                  None, None, extras))
        for m, st in stats.items():
            series_pts[m].append((n, st["median"], st["min"], st["max"]))
    series = [Series(f"median_{m}", *map(list, zip(*pts))) for m, pts in series_pts.items() if pts]
    return rows, series


# -- tail -------------------------------------------------------------------------

def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("need n > 0")
    q = k / n
    denom = 1 + z * z / n
    centre = (q + z * z / (2 * n)) / denom
    half = z * math.sqrt(q * (1 - q) / n + z * z / (4 * n * n)) / denom
    # the bounds are exactly 0 / 1 at k = 0 / k = n; avoid roundoff there
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class TailFit:
    slope: float | None
    intercept: float | None
    slope_lo: float | None
    slope_hi: float | None
    points: int
    available: bool
    note: str = ""


def fit_log_decay(ns, ks, trials) -> TailFit:
    """Weighted least squares of log q on n over uncensored rungs.

    Variances come from the Wilson interval of each q on the log scale;
    with more than two points the standard error is inflated by the
    reduced chi-square when it exceeds one.
    """
    pts = [(n, k, t) for n, k, t in zip(ns, ks, trials) if k > 0]
    if len(pts) < 2:
        return TailFit(None, None, None, None, len(pts), False,
                       "fewer than two uncensored rungs")
    x = np.array([n for n, _, _ in pts], dtype=float)
    y = np.array([math.log(k / t) for _, k, t in pts])
    var = []
    for _, k, t in pts:
        lo, hi = wilson_interval(k, t)
        var.append(((math.log(hi) - math.log(lo)) / (2 * Z95)) ** 2)
    w = 1.0 / np.array(var)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    se = math.sqrt(1.0 / sxx)
    if len(pts) > 2:
        chi2 = float(np.sum(w * (y - intercept - slope * x) ** 2)) / (len(pts) - 2)
        se *= math.sqrt(max(1.0, chi2))
    return TailFit(slope, intercept, slope - Z95 * se, slope + Z95 * se, len(pts), True)


@dataclass
class TailReport:
    delta: float
    rows: list
    fit: TailFit
    rungs: list = field(default_factory=list)   # dicts per rung
    series: list = field(default_factory=list)

    @property
    def decay_evidence(self) -> bool:
        """Negative slope with a 95% interval excluding 0, or every rung
        above the reference censored."""
        if self.fit.available and self.fit.slope_hi is not None and self.fit.slope_hi < 0:
            return True
        upper = [r for r in self.rungs if r["n"] > self.rungs[0]["reference_n"]]
        return bool(upper) and all(r["k"] == 0 for r in upper)


def run_tail(config: ExperimentConfig) -> TailReport:
    """Estimate q(n) = Prob(dist >= delta) per rung and fit the log-decay."""
    if config.kind != "tail":
        raise ConfigError(f"run_tail got kind {config.kind!r}")
    if "dist_fs" not in config.distances:
        raise ConfigError("tail experiments need dist_fs")
    by_rung = _collect(config)
    ref = config.reference_rung
    if config.delta is not None:
        delta = config.delta
    else:
        delta = config.delta_factor * float(np.median([r["dist_fs"] for r in by_rung[ref]]))
    rows, rungs = [], []
    for (p, n), results in by_rung.items():
        phi = p / n
        k = 0
        for r in results:
            exceed = bool(r["dist_fs"] >= delta)
            k += exceed
            rows.append(ReportRow("tail", p, n, phi, "trial", r["trial"], r["seed"],
                                  r.get("dist_fs"), r.get("wasserstein1"),
                                  r.get("interval_discrepancy"), exceed, r["wall_time"]))
        t = len(results)
        lo, hi = wilson_interval(k, t)
        info = {"p": p, "n": n, "k": k, "trials": t, "q": k / t, "q_lo": lo, "q_hi": hi,
                "censored": k == 0, "reference_n": ref[1]}
        rungs.append(info)
        extras = {"delta": delta, "exceed_count": k, "q": k / t, "q_lo": lo, "q_hi": hi,
                  "log_q": math.log(k / t) if k else None,
                  "censored_upper": 1.0 / t if k == 0 else None}
        rows.append(ReportRow("tail", p, n, phi, "rate", -1, config.seed,
                              float(np.median([r["dist_fs"] for r in results])),
                              None, None, None, None, extras))
    fit = fit_log_decay([r["n"] for r in rungs], [r["k"] for r in rungs],
                        [r["trials"] for r in rungs])
    fit_extras = {"delta": delta, "fit_available": fit.available, "slope": fit.slope,
                  "intercept": fit.intercept, "slope_lo": fit.slope_lo,
                  "slope_hi": fit.slope_hi, "fit_points": fit.points, "note": fit.note}
    rows.append(ReportRow("tail", ref[0], ref[1], ref[0] / ref[1], "fit", -1, config.seed,
                          extras=fit_extras))
    series = [Series("q", [r["n"] for r in rungs], [r["q"] for r in rungs],
                     [r["q_lo"] for r in rungs], [r["q_hi"] for r in rungs])]
    return TailReport(delta, rows, fit, rungs, series)


# -- laguerre rate ----------------------------------------------------------------

def run_laguerre_rate(config: ExperimentConfig):
    """Distances from rescaled Laguerre zeros to the MP+ law along a p ladder.

    Ladder entries are read as degrees p (the n of each rung is ignored);
    alpha = p (1 - phi) / phi.  Returns (rows, series).
    """
    if config.kind != "laguerre-rate":
        raise ConfigError(f"run_laguerre_rate got kind {config.kind!r}")
    phi = config.phi
    target = MPLaw(phi, plus=True)
    rows, xs, ys = [], [], []
    degrees = sorted({p for p, _ in config.ladder})
    if phi == 1:
        log.warning("phi = 1: discrepancy normalization (1 - phi) is degenerate, skipped")
    for p in degrees:
        start = time.perf_counter()
        alpha = p * (1 - phi) / phi
        mu = laguerre_zeros(LaguerreSpec(p, alpha))
        d = dist_fs(mu, target, level=max(config.level, 1), certify=True)
        w1 = wasserstein1(mu, target)
        disc = interval_discrepancy(mu, target)
        lp = math.log(p)
        extras = {"alpha": alpha, "dist_ratio": d.value * p / lp,
                  "refinement_change": d.refinement_change, "tail_bound": d.tail_bound}
        if phi < 1:
            extras["discrepancy_ratio"] = disc * (1 - phi) * math.sqrt(p) / math.sqrt(lp)
        rows.append(ReportRow("laguerre-rate", p, round(p / phi), phi, "rung", -1, 0,
                              d.value, w1, disc, None, time.perf_counter() - start, extras))
        xs.append(p)
        ys.append(extras["dist_ratio"])
    return rows, [Series("dist_ratio", xs, ys, ys, ys)]


# -- moment check -----------------------------------------------------------------

@dataclass
class CheckItem:
    item: str
    passed: bool | None           # None = skipped
    value: float | None = None
    detail: str = ""
    p: int = 0
    n: int = 0


BRUTE_FORCE_CASES = ((1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (2, 4))


def exact_suite(max_n: int = 8, max_stirling: int = 20,
                brute_cases=BRUTE_FORCE_CASES, max_second_n: int = 6):
    items = []
    bad = [(n, p) for n in range(max_n + 1) for p in range(n + 1)
           if moments.r1_direct(n, p) != moments.r1_recursive(n, p)]
    items.append(CheckItem("r1_direct==r1_recursive", not bad, len(bad),
                           f"n<={max_n}; mismatches {bad}" if bad else f"n<={max_n}"))
    base = all(moments.r1_direct(n, 0) == moments.ExactPolynomial.monomial(2 * n)
               for n in range(max_n + 1))
    items.append(CheckItem("r1(n,0)=z^(2n)", base))
    rad = EntryDistribution("rademacher-real")
    for p, n in brute_cases:
        try:
            mean, _ = moments.bruteforce_expectations(p, n, rad)
        except CapacityError as exc:
            log.warning("brute force %dx%d skipped: %s", p, n, exc)
            items.append(CheckItem(f"bruteforce E det {p}x{n}", None, detail=str(exc), p=p, n=n))
            continue
        items.append(CheckItem(f"bruteforce E det {p}x{n}",
                               mean == moments.expected_charpoly(n, p), p=p, n=n))
    for n in range(1, max_second_n + 1):
        try:
            _, second = moments.bruteforce_expectations(1, n, rad)
        except CapacityError as exc:
            items.append(CheckItem(f"bruteforce E det^2 1x{n}", None, detail=str(exc), p=1, n=n))
            continue
        items.append(CheckItem(f"bruteforce E det^2 1x{n}",
                               second == moments.r2_uniform(n, 1, 1), p=1, n=n))
    ok = all(sum(moments.stirling_unsigned(k, m) * 2 ** m for m in range(k + 1))
             == math.factorial(k + 1) for k in range(1, max_stirling + 1))
    items.append(CheckItem("stirling sum 2^m = (k+1)!", ok, detail=f"k<={max_stirling}"))
    return items


def _second_moment_ratios(p, n, beta, zs, second):
    return [second[i] / math.exp(moments.detw_bound_log(n, p, beta, z)) for i, z in enumerate(zs)]


def statistical_suite(config: ExperimentConfig):
    """Monte-Carlo E det against the closed form and E|det|^2 against the
    second-moment bound, on two disjoint trial batches."""
    items = []
    ladder = config.ladder or ((3, 5),)
    trials = config.mc_trials
    fitted = {0: 0.0, 1: 0.0}
    for p, n in ladder:
        spec = config.ensemble(p, n)
        law = MPLaw(spec.phi)
        zs = np.asarray(config.z_values or (1.0,), dtype=float)
        mid = [z for z in zs if law.a <= z <= law.b]
        ec = moments.expected_charpoly(n, p)
        closed = np.array([float(ec(Fraction(float(z)) * n)) / float(n) ** n for z in zs])
        for batch in (0, 1):
            mc = moments.mc_det_moments(spec, zs, trials, first_trial=batch * trials)
            dev = np.abs(mc["mean"].real - closed) / np.where(mc["mean_se"] > 0, mc["mean_se"], 1)
            items.append(CheckItem(f"mc E det {p}x{n} batch{batch}", bool(np.all(dev <= 4)),
                                   float(dev.max()), "max |mean - closed| / se", p, n))
            if mid:
                idx = [i for i, z in enumerate(zs) if law.a <= z <= law.b]
                ratios = _second_moment_ratios(p, n, spec.fourth_moment_bound,
                                               zs[idx], mc["second"][idx])
                fitted[batch] = max(fitted[batch], max(ratios))
    if fitted[0] > 0 and fitted[1] > 0:
        change = abs(fitted[1] / fitted[0] - 1)
        items.append(CheckItem("second-moment bound c_fit batch0", True, fitted[0]))
        items.append(CheckItem("second-moment bound c_fit batch1", True, fitted[1]))
        items.append(CheckItem("second-moment bound c_fit stable", change <= 0.5, change,
                               "relative change between batches"))
    return items


def run_moment_check(config: ExperimentConfig, statistical: bool = True):
    """Exact suites plus (optionally) the Monte-Carlo suite; returns (rows, items)."""
    if config.kind != "moment-check":
        raise ConfigError(f"run_moment_check got kind {config.kind!r}")
    items = exact_suite()
    if statistical:
        items += statistical_suite(config)
    rows = []
    for it in items:
        status = "skip" if it.passed is None else ("pass" if it.passed else "fail")
        rows.append(ReportRow("moment-check", it.p, it.n, it.p / it.n if it.n else 0.0,
                              "item", -1, config.seed,
                              extras={"item": it.item, "status": status, "value": it.value,
                                      "detail": it.detail}))
    return rows, items


# -- bound sweep -------------------------------------------------------------------

LAGUERRE_ALPHAS = (0.0, 0.5, 1.0, 5.0, 20.0, 100.0)


def laguerre_envelope_fit(p_max: int = 40, alphas=LAGUERRE_ALPHAS, points: int = 64,
                          z_max: float = 6.0):
    """Running max over p of |L_p((p+alpha) z)| / envelope(c=1).

    Returns the list of running maxima indexed by p = 1..p_max.
    """
    zs = np.linspace(z_max / points, z_max, points)
    running, best = [], 0.0
    for p in range(1, p_max + 1):
        for alpha in alphas:
            spec = LaguerreSpec(p, alpha)
            for z in zs:
                val = laguerre_eval(spec, spec.scale * z)
                if val.sign == 0:
                    continue
                best = max(best, math.exp(val.log_abs - envelope_rhs(spec, z)))
        running.append(best)
    return running


def r1_bound_fit(max_n: int = 8, zs=(0.5, 1.0, 2.0, 4.0)) -> float:
    """Max over the battery of |R1(n, p, z)| / ((p+1)^3 n! p! z^(n-p) e^z)."""
    best = 0.0
    for n in range(1, max_n + 1):
        for p in range(n + 1):
            poly = moments.r1_direct(n, p)
            for z in zs:
                val = abs(float(poly(Fraction(z))))
                if val:
                    best = max(best, math.exp(math.log(val) - moments.r1_bound_log(n, p, z)))
    return best


def run_bound_sweep(config: ExperimentConfig):
    if config.kind != "bound-sweep":
        raise ConfigError(f"run_bound_sweep got kind {config.kind!r}")
    running = laguerre_envelope_fit()
    rows = [ReportRow("bound-sweep", p, p, 1.0, "laguerre_envelope", -1, config.seed,
                      extras={"c_running_max": c}) for p, c in enumerate(running, start=1)]
    rows.append(ReportRow("bound-sweep", 8, 8, 1.0, "r1_bound", -1, config.seed,
                          extras={"c_fit": r1_bound_fit()}))
    series = [Series("laguerre_c_running_max", list(range(1, len(running) + 1)),
                     running, running, running)]
    return rows, series


def run(config: ExperimentConfig):
    """Dispatch on ``config.kind``; returns (rows, series)."""
    if config.kind == "convergence":
        return run_convergence(config)
    if config.kind == "tail":
        rep = run_tail(config)
        return rep.rows, rep.series
    if config.kind == "laguerre-rate":
        return run_laguerre_rate(config)
    if config.kind == "moment-check":
        rows, _ = run_moment_check(config)
        return rows, []
    if config.kind == "bound-sweep":
        return run_bound_sweep(config)
    raise ConfigError(f"unknown kind {config.kind!r}")
