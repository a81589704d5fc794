"""Command-line interface.

Subcommands
-----------
mp        tabulate density, CDF and potential of a Marchenko-Pastur law
laguerre  evaluate a Laguerre polynomial or list its (rescaled) zeros
sample    eigenvalues of sampled covariance matrices
moments   exact and Monte-Carlo moment suites
ldp       convergence / tail experiments from a config file
run       any experiment kind from a config file
report    re-render a saved report in another format

Exit codes: 0 success, 2 config/parameter error, 3 capacity error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys

import numpy as np

from . import experiments
from .config import DEFAULT_SEED, FORMATS, ExperimentConfig, load_config, parse_ladder
from .ensembles import ENTRY_KINDS, EntryDistribution, EnsembleSpec, covariance_spectrum, \
    sample_matrix
from .errors import ConfigError, MPDevError, ReportIOError
from .laguerre import LaguerreSpec, laguerre_eval, laguerre_zeros
from .measures import MPLaw, mp_cdf, mp_density, mp_potential
from .report import _fmt, emit_report, read_report, render_csv, render_jsonl

log = logging.getLogger("mpdev")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _output(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc.strerror}") from exc


def _common(p: argparse.ArgumentParser, trials=True):
    p.add_argument("--config", metavar="PATH", help="INI experiment config")
    p.add_argument("--seed", type=_u64, help="master seed (u64)")
    if trials:
        p.add_argument("--trials", type=int, help="trials per rung")
    p.add_argument("--out", metavar="PATH", help="output file (stdout if omitted)")
    p.add_argument("--format", choices=FORMATS, help="report format")
    p.add_argument("--workers", type=int, help="parallel worker processes")


# -- subcommand handlers --------------------------------------------------------

def cmd_mp(args) -> int:
    law = MPLaw(args.phi, plus=args.plus)
    ts = args.t if args.t else list(np.linspace(law.a, law.b, args.points))
    rows = []
    for t in ts:
        try:
            pot = mp_potential(law, t)
        except MPDevError:
            pot = None
        rows.append((float(t), float(mp_density(law, t)), float(mp_cdf(law, t)), pot))
    _output(_table(["t", "density", "cdf", "potential"], rows), args.out)
    return 0


def cmd_laguerre(args) -> int:
    spec = LaguerreSpec(args.p, args.alpha)
    if args.action == "zeros":
        mu = laguerre_zeros(spec)
        rows = [(spec.p, spec.alpha, i, float(z)) for i, z in enumerate(mu.locations)]
        _output(_table(["p", "alpha", "index", "zero"], rows), args.out)
    else:
        if not args.x:
            raise ConfigError("laguerre eval needs --x")
        rows = []
        for x in args.x:
            v = laguerre_eval(spec, x)
            rows.append((spec.p, spec.alpha, x, v.log_abs, v.sign, float(v)))
        _output(_table(["p", "alpha", "x", "log_abs", "sign", "value"], rows), args.out)
    return 0


def cmd_sample(args) -> int:
    entry = EntryDistribution(args.entry, args.checker)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    spec = EnsembleSpec(args.p, args.n, entry, seed)
    trials = 1 if args.trials is None else args.trials
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    rows = []
    for t in range(trials):
        eig = covariance_spectrum(sample_matrix(spec, t), spec.n).eigenvalues
        rows.extend((t, i, float(lam)) for i, lam in enumerate(eig))
    _output(_table(["trial", "index", "eigenvalue"], rows), args.out)
    return 0


def _config(args, kind: str | None = None, **defaults) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if kind is not None and cfg.kind not in (kind if isinstance(kind, tuple) else (kind,)):
            raise ConfigError(f"config kind {cfg.kind!r} not valid for this subcommand")
    else:
        if kind is None or isinstance(kind, tuple):
            raise ConfigError("--config is required")
        cfg = ExperimentConfig(kind, **defaults)
    return cfg.with_overrides(seed=args.seed, trials=getattr(args, "trials", None),
                              workers=args.workers, output=args.out, format=args.format)


def _emit(cfg: ExperimentConfig, rows, series):
    path = cfg.output
    if path is None:
        text = render_csv(rows) if cfg.format == "csv" else render_jsonl(rows)
        sys.stdout.write(text)
        return
    for p in emit_report(rows, cfg.format, path, series):
        log.info("wrote %s", p)


def cmd_moments(args) -> int:
    defaults = {"ladder": tuple(parse_ladder(args.ladder)), "z_values": tuple(args.z),
                "mc_trials": args.mc_trials}
    cfg = _config(args, "moment-check", **defaults)
    rows, items = experiments.run_moment_check(cfg, statistical=not args.exact_only)
    _emit(cfg, rows, [])
    return 0 if all(i.passed is not False for i in items) else 1


def cmd_ldp(args) -> int:
    cfg = _config(args, ("convergence", "tail"))
    rows, series = experiments.run(cfg)
    _emit(cfg, rows, series)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    rows, series = experiments.run(cfg)
    _emit(cfg, rows, series)
    return 0


def cmd_report(args) -> int:
    rows = read_report(args.input)
    fmt = args.format or "csv"
    text = render_csv(rows) if fmt == "csv" else render_jsonl(rows)
    _output(text, args.out)
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpdev", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mp", help="Marchenko-Pastur law tables")
    p.add_argument("--phi", type=float, required=True)
    p.add_argument("--plus", action="store_true", help="use the normalized continuous part")
    p.add_argument("--t", type=_floats, help="comma-separated evaluation points")
    p.add_argument("--points", type=int, default=11, help="grid size over [a, b] if --t absent")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_mp)

    p = sub.add_parser("laguerre", help="Laguerre evaluation and zeros")
    p.add_argument("action", choices=("eval", "zeros"))
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--x", type=_floats, help="comma-separated points for eval")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_laguerre)

    p = sub.add_parser("sample", help="eigenvalues of sampled covariance matrices")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--entry", choices=ENTRY_KINDS, default="gaussian-real")
    p.add_argument("--checker", choices=ENTRY_KINDS, help="second law for a checkerboard mix")
    p.add_argument("--seed", type=_u64)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("moments", help="exact and Monte-Carlo moment suites")
    _common(p, trials=False)
    p.add_argument("--ladder", default="3x5", help="(p,n) rungs for the Monte-Carlo suite")
    p.add_argument("--z", type=_floats, default=[1.0], help="comma-separated z values")
    p.add_argument("--mc-trials", type=int, default=2000)
    p.add_argument("--exact-only", action="store_true")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("ldp", help="convergence / tail experiments (needs --config)")
    _common(p)
    p.set_defaults(func=cmd_ldp)

    p = sub.add_parser("run", help="run any experiment kind from --config")
    _common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-render a saved report")
    p.add_argument("input", help="CSV or JSON-lines report")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MPDevError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
