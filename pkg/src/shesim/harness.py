"""Seeded Monte Carlo experiments and their file formats.

Rep ``r`` draws from the substream ``(master_seed, r)``; samplers split it
further per mode class ``m`` into ``(master_seed, r, m)``. Results are
collected in rep order, so a report depends only on its configuration and
not on the number of worker threads.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.stats

from ._streams import substream_seed
from .model import Grid, InitialCondition, Parameters, DEFAULT_PARAMETERS
from .oracle import exact_sample
from .samplers import (
    ReplacementConfig,
    SampleField,
    TruncationConfig,
    sample_replacement,
    sample_truncation,
)
from .stats import Statistic, normalize_spatial, normalize_temporal, qv_spatial, qv_temporal

log = logging.getLogger(__name__)

REPORT_SCHEMA = 1
HIST_BINS = 30
HIST_RANGE = (-4.0, 4.0)


class ExperimentError(RuntimeError):
    def __init__(self, rep: int, cause: BaseException):
        super().__init__(f"rep {rep} failed: {type(cause).__name__}: {cause}")
        self.rep = rep
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    parameters: Parameters = DEFAULT_PARAMETERS
    grid: Grid = Grid(N=100, M=100, T=1.0)
    init: InitialCondition = InitialCondition.STATIONARY
    method: str = "replacement"
    L: int = 1
    K: int | None = None
    cutoff: int | None = None
    statistic: Statistic = Statistic.NONE
    reps: int = 1
    seed: int = 0
    out_field: str | None = None
    out_report: str | None = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "init", InitialCondition(self.init))
        object.__setattr__(self, "statistic", Statistic(self.statistic))
        if self.method not in ("replacement", "truncation", "oracle"):
            raise ValueError(f"unknown method {self.method!r}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError(f"reps must be a positive integer, got {self.reps!r}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.method == "truncation":
            if self.K is None:
                raise ValueError("truncation needs K")
            TruncationConfig(self.K)
        else:
            ReplacementConfig(self.L)
        if self.method in ("replacement", "oracle") and self.grid.M < 2:
            raise ValueError(f"{self.method} needs M >= 2")
        if self.statistic is not Statistic.NONE and self.grid.N < 1:
            raise ValueError("quadratic variations need N >= 1")

    def method_config(self) -> dict:
        if self.method == "replacement":
            return {"method": "replacement", "L": self.L}
        if self.method == "truncation":
            return {"method": "truncation", "K": self.K}
        return {"method": "oracle", "cutoff": self.cutoff}

    def as_dict(self) -> dict:
        return {
            "parameters": self.parameters.as_dict(),
            "grid": {"N": self.grid.N, "M": self.grid.M, "T": self.grid.T},
            "init": self.init.value,
            "method": self.method_config(),
            "statistic": self.statistic.value,
            "reps": self.reps,
            "seed": int(self.seed),
            "out_field": self.out_field,
            "out_report": self.out_report,
            "threads": self.threads,
        }


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    raw: np.ndarray
    normalized: np.ndarray
    wall_time: float = field(default=0.0, compare=False)

    @property
    def summary(self) -> dict | None:
        return summarize(self.normalized) if self.normalized.size else None

    @property
    def histogram(self) -> dict | None:
        return histogram(self.normalized) if self.normalized.size else None

    def to_dict(self, include_timing: bool = False) -> dict:
        has_stat = self.config.statistic is not Statistic.NONE
        out = {
            "schema": REPORT_SCHEMA,
            "config": self.config.as_dict(),
            "statistic": self.config.statistic.value,
            "raw": [float(v) for v in self.raw] if has_stat else None,
            "normalized": [float(v) for v in self.normalized] if has_stat else None,
            "summary": self.summary if has_stat else None,
            "histogram": self.histogram if has_stat else None,
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, allow_nan=False) + "\n"


def ks_distance(x) -> float:
    """Kolmogorov-Smirnov distance of the sample to the standard normal."""
    return float(scipy.stats.kstest(np.asarray(x, dtype=float), "norm").statistic)


def summarize(x) -> dict:
    x = np.asarray(x, dtype=float)
    n = x.size
    return {
        "n": int(n),
        "mean": float(np.mean(x)),
        "variance": float(np.var(x, ddof=1)) if n > 1 else 0.0,
        "skewness": float(scipy.stats.skew(x)) if n > 2 else 0.0,
        "ks_distance": ks_distance(x),
    }


def histogram(x, bins: int = HIST_BINS, value_range=HIST_RANGE) -> dict:
    """Equal-width bins on ``value_range``; values outside are counted in
    ``below`` and ``above`` so that everything sums to ``len(x)``."""
    x = np.asarray(x, dtype=float)
    lo, hi = value_range
    counts, edges = np.histogram(x[(x >= lo) & (x <= hi)], bins=bins, range=value_range)
    return {
        "edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
        "below": int(np.sum(x < lo)),
        "above": int(np.sum(x > hi)),
    }


def sample_field(cfg: ExperimentConfig, rep: int) -> SampleField:
    seed = substream_seed(cfg.seed, rep)
    p, grid = cfg.parameters, cfg.grid
    if cfg.method == "replacement":
        return sample_replacement(p, grid, cfg.init, ReplacementConfig(cfg.L), seed)
    if cfg.method == "truncation":
        return sample_truncation(p, grid, cfg.init, TruncationConfig(cfg.K), seed)
    return exact_sample(p, grid, cfg.init, cfg.cutoff, seed)


def _statistic(cfg: ExperimentConfig, field_: SampleField) -> tuple[float, float]:
    p, grid = cfg.parameters, cfg.grid
    if cfg.statistic is Statistic.TEMPORAL:
        raw = qv_temporal(field_, p, grid)
        return raw, float(normalize_temporal(raw, p, grid))
    if cfg.statistic is Statistic.SPATIAL:
        raw = qv_spatial(field_, p, grid)
        return raw, float(normalize_spatial(raw, p, grid))
    return math.nan, math.nan


def _run_rep(cfg: ExperimentConfig, rep: int):
    try:
        f = sample_field(cfg, rep)
        stat = _statistic(cfg, f)
    except Exception as exc:  # surfaced with the rep index
        raise ExperimentError(rep, exc) from exc
    return f if (rep == 0 and cfg.out_field) else None, stat


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run ``cfg.reps`` independent reps and collect their statistics.

    Writes the rep-0 field and the report when output paths are set.
    """
    start = time.perf_counter()
    if cfg.threads > 1 and cfg.reps > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(lambda r: _run_rep(cfg, r), range(cfg.reps)))
    else:
        results = [_run_rep(cfg, r) for r in range(cfg.reps)]
    wall = time.perf_counter() - start

    stats = np.array([s for _, s in results], dtype=float).reshape(-1, 2)
    if cfg.statistic is Statistic.NONE:
        stats = np.zeros((0, 2))
    report = ExperimentReport(cfg, stats[:, 0], stats[:, 1], wall)
    log.info("%d reps of %s in %.2f s", cfg.reps, cfg.method, wall)

    if cfg.out_field:
        emit_field(results[0][0], cfg.out_field)
    if cfg.out_report:
        write_text(cfg.out_report, report.to_json())
    return report


def write_text(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def emit_field(field_: SampleField, path) -> None:
    """Write ``t,y,x`` rows (time outer, space inner) plus a JSON sidecar.

    Floats use Python's shortest round-trip representation.
    """
    values = np.asarray(field_.values)
    if values.ndim != 2:
        raise ValueError("emit_field writes one field; drop batch axes first")
    grid = field_.grid
    t = grid.times
    y = grid.points
    lines = ["t,y,x"]
    for i in range(grid.N + 1):
        ti = repr(float(t[i]))
        row = values[i]
        lines.extend(f"{ti},{float(y[k])!r},{float(row[k])!r}" for k in range(grid.M + 1))
    write_text(path, "\n".join(lines) + "\n")
    write_text(sidecar_path(path), json.dumps(field_.meta(), indent=2) + "\n")


def read_field(path) -> tuple[np.ndarray, dict]:
    """Inverse of :func:`emit_field`: the ``(N+1, M+1)`` array and the metadata."""
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    N, M = meta["grid"]["N"], meta["grid"]["M"]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != ((N + 1) * (M + 1), 3):
        raise ValueError(f"{path}: expected {(N + 1) * (M + 1)} rows, got {data.shape[0]}")
    return data[:, 2].reshape(N + 1, M + 1), meta
