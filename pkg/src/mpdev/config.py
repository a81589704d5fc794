"""Experiment configuration.

Config files are INI-style (``configparser``): flat ``key = value`` pairs
under section headers.  Example::

    [experiment]
    kind = convergence
    trials = 20
    ladder = 50x100, 100x200, 200x400
    seed = 20261016
    workers = 1

    [ensemble]
    entry = gaussian-real

    [tail]
    delta = auto          ; or a positive number
    delta_factor = 2
    reference = 50x100

    [output]
    path = convergence.csv
    format = csv
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

from .ensembles import EntryDistribution, EnsembleSpec
from .errors import ConfigError, ParameterError

KINDS = ("convergence", "tail", "laguerre-rate", "moment-check", "bound-sweep")
FORMATS = ("csv", "json")

DEFAULT_SEED = 20261016


def parse_ladder(text: str) -> list[tuple[int, int]]:
    """'50x100, 100x200' -> [(50, 100), (100, 200)]; bare integers mean p only."""
    rungs = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            if "x" in item:
                p, n = item.split("x")
                rungs.append((int(p), int(n)))
            else:
                rungs.append((int(item), int(item)))
        except ValueError as exc:
            raise ConfigError(f"bad ladder rung {item!r}") from exc
    return rungs


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    ladder: tuple[tuple[int, int], ...] = ()
    trials: int = 20
    seed: int = DEFAULT_SEED
    entry: EntryDistribution = EntryDistribution()
    beta: float | None = None
    delta: float | None = None           # None with kind=tail means anchor to a median
    delta_factor: float = 2.0
    reference: tuple[int, int] | None = None
    phi: float = 0.5                     # laguerre-rate
    z_values: tuple[float, ...] = ()     # moment-check / bound-sweep
    mc_trials: int = 2000
    level: int = 0                       # dist_fs grid level
    distances: tuple[str, ...] = ("dist_fs", "wasserstein1", "interval_discrepancy")
    workers: int = 1
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown report format {self.format!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not (0 <= self.seed < 2 ** 64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for p, n in self.ladder:
            if self.kind == "laguerre-rate":
                if p < 2:
                    raise ConfigError(f"laguerre-rate needs p >= 2 (log p normalization), got {p}")
            elif not 1 <= p <= n:
                raise ConfigError(f"rung {p}x{n} violates 1 <= p <= n")
        if self.kind in ("convergence", "tail", "laguerre-rate") and not self.ladder:
            raise ConfigError(f"{self.kind} needs a nonempty ladder")
        if self.delta is not None and not (self.delta > 0 and math.isfinite(self.delta)):
            raise ConfigError(f"delta must be a finite positive number, got {self.delta!r}")
        if self.kind == "tail" and self.delta is None:
            ref = self.reference_rung
            if ref not in self.ladder:
                raise ConfigError(f"reference rung {ref} is not on the ladder")
        if not 0 < self.phi <= 1:
            raise ConfigError(f"phi must lie in (0, 1], got {self.phi}")
        bad = set(self.distances) - {"dist_fs", "wasserstein1", "interval_discrepancy"}
        if bad:
            raise ConfigError(f"unknown distances {sorted(bad)}")
        for p, n in self.ladder:
            if self.kind in ("convergence", "tail"):
                try:
                    self.ensemble(p, n)
                except ParameterError as exc:
                    raise ConfigError(str(exc)) from exc

    @property
    def reference_rung(self) -> tuple[int, int]:
        if self.reference is not None:
            return self.reference
        # default anchor: the rung with n = 100 if present, else the first
        for rung in self.ladder:
            if rung[1] == 100:
                return rung
        return self.ladder[0]

    def ensemble(self, p: int, n: int) -> EnsembleSpec:
        return EnsembleSpec(p, n, self.entry, self.seed, self.beta)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_parser(parser)


def config_from_parser(parser: configparser.ConfigParser) -> ExperimentConfig:
    get = lambda sec, key, default=None: parser.get(sec, key, fallback=default)  # noqa: E731
    kind = get("experiment", "kind")
    if kind is None:
        raise ConfigError("missing [experiment] kind")
    kw: dict = {"kind": kind.strip()}
    try:
        if (v := get("experiment", "ladder")) is not None:
            kw["ladder"] = tuple(parse_ladder(v))
        if (v := get("experiment", "trials")) is not None:
            kw["trials"] = int(v)
        if (v := get("experiment", "seed")) is not None:
            kw["seed"] = int(v, 0)
        if (v := get("experiment", "workers")) is not None:
            kw["workers"] = int(v)
        if (v := get("experiment", "level")) is not None:
            kw["level"] = int(v)
        if (v := get("experiment", "distances")) is not None:
            kw["distances"] = tuple(x.strip() for x in v.split(",") if x.strip())
        kw["entry"] = EntryDistribution(get("ensemble", "entry", "gaussian-real").strip(),
                                        (get("ensemble", "checker") or "").strip() or None)
        if (v := get("ensemble", "beta")) is not None:
            kw["beta"] = float(v)
        if (v := get("tail", "delta")) is not None and v.strip() != "auto":
            kw["delta"] = float(v)
        if (v := get("tail", "delta_factor")) is not None:
            kw["delta_factor"] = float(v)
        if (v := get("tail", "reference")) is not None:
            kw["reference"] = parse_ladder(v)[0]
        if (v := get("laguerre", "phi")) is not None:
            kw["phi"] = float(v)
        if (v := get("moments", "z")) is not None:
            kw["z_values"] = _floats(v)
        if (v := get("moments", "mc_trials")) is not None:
            kw["mc_trials"] = int(v)
        if (v := get("output", "path")) is not None:
            kw["output"] = v.strip()
        if (v := get("output", "format")) is not None:
            kw["format"] = v.strip()
    except ValueError as exc:
        if isinstance(exc, (ConfigError, ParameterError)):
            raise ConfigError(str(exc)) from exc
        raise ConfigError(f"bad config value: {exc}") from exc
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(**kw)
