"""Synthetic benchmark harness.

Each (grid point, replicate) pair gets its own ``SeedSequence`` with
``spawn_key=(grid_index, replicate)`` under the configured seed, split into
one stream for the instance and one for the sampled network. Every method
sees the same sampled network. Rows come out in grid order whatever the
number of workers.
"""

from __future__ import annotations

import configparser
import csv
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Sequence, TextIO

import numpy as np

from .metrics import hamming_error, relative_error
from .model import sample_network, synth_instance
from .pipeline import METHODS, detect

log = logging.getLogger(__name__)

TABLE_COLUMNS = (
    "n", "L", "rho", "method", "hamming_mean", "hamming_sd", "relative_mean", "relative_sd", "replicates", "failures",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid over ``n``, ``L`` and ``rho`` with everything else fixed.

    ``n0_r`` and ``n0_c`` are pure-node counts per community; a value in
    (0, 1) is read as a fraction of ``n``.
    """

    n: tuple = (200,)
    L: tuple = (10,)
    rho: tuple = (0.1,)
    K: int = 3
    n0_r: float = 50
    n0_c: float = 40
    replicates: int = 100
    seed: int = 0
    methods: tuple = METHODS

    def __post_init__(self):
        for name in ("n", "L", "rho", "methods"):
            v = getattr(self, name)
            object.__setattr__(self, name, tuple(v) if isinstance(v, (list, tuple)) else (v,))
        if not self.n or not self.L or not self.rho or not self.methods:
            raise ValueError("grid axes and method list must be nonempty")
        if any(int(v) < 1 for v in self.n) or any(int(v) < 1 for v in self.L):
            raise ValueError("n and L values must be positive")
        if any(not (0 < r <= 1) for r in self.rho):
            raise ValueError("rho values must lie in (0, 1]")
        if self.K < 1 or self.replicates < 1:
            raise ValueError("K and replicates must be at least 1")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")

    def pure_counts(self, n: int):
        def resolve(v):
            return int(round(v * n)) if 0 < v < 1 else int(v)
        return resolve(self.n0_r), resolve(self.n0_c)

    def grid(self) -> list:
        return list(itertools.product(self.n, self.L, self.rho))


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    L: int
    rho: float
    method: str
    hamming_mean: float
    hamming_sd: float
    relative_mean: float
    relative_sd: float
    replicates: int
    failures: int


def load_config(stream: TextIO) -> ExperimentConfig:
    """Read an INI-style ``[experiment]`` section.

    Lists are comma-separated, e.g. ``L = 10, 20, 30``.
    """
    cp = configparser.ConfigParser()
    cp.read_file(stream)
    if not cp.has_section("experiment"):
        raise ValueError("config needs an [experiment] section")
    sec = cp["experiment"]

    def floats(key):
        return tuple(float(x) for x in sec[key].split(",") if x.strip())

    kwargs = {}
    if "n" in sec:
        kwargs["n"] = tuple(int(x) for x in floats("n"))
    if "L" in sec:
        kwargs["L"] = tuple(int(x) for x in floats("L"))
    if "rho" in sec:
        kwargs["rho"] = floats("rho")
    for key in ("K", "replicates", "seed"):
        if key in sec:
            kwargs[key] = sec.getint(key)
    for key in ("n0_r", "n0_c"):
        if key in sec:
            kwargs[key] = sec.getfloat(key)
    if "methods" in sec:
        kwargs["methods"] = tuple(m.strip() for m in sec["methods"].split(",") if m.strip())
    unknown = set(sec) - {"n", "l", "rho", "k", "replicates", "seed", "n0_r", "n0_c", "methods"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**kwargs)


def run_replicate(cfg: ExperimentConfig, g: int, r: int) -> dict:
    """``{method: (hamming, relative)}`` for one replicate; failures map to ``None``."""
    n, L, rho = cfg.grid()[g]
    n0_r, n0_c = cfg.pure_counts(n)
    ss_inst, ss_net = np.random.SeedSequence(cfg.seed, spawn_key=(g, r)).spawn(2)
    truth, _, omega = synth_instance(int(n), cfg.K, n0_r, n0_c, int(L), rho, ss_inst)
    A = sample_network(omega, ss_net)
    out = {}
    for m in cfg.methods:
        try:
            res = detect(A, cfg.K, m)
            out[m] = (
                hamming_error(res.pi_r_hat, truth.pi_r, res.pi_c_hat, truth.pi_c),
                relative_error(res.pi_r_hat, truth.pi_r, res.pi_c_hat, truth.pi_c),
            )
        except Exception as exc:
            log.warning("grid point %d replicate %d method %s failed: %s", g, r, m, exc)
            out[m] = None
    return out


def _summary(values):
    if not values:
        return math.nan, math.nan
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def run_experiment(cfg: ExperimentConfig, workers: int = 1, raw: list = None) -> list:
    """One :class:`ExperimentRow` per (grid point, method), in grid order.

    If ``raw`` is a list, per-replicate results are appended to it as
    ``(grid_index, replicate, {method: (hamming, relative) or None})``.
    """
    grid = cfg.grid()
    tasks = [(g, r) for g in range(len(grid)) for r in range(cfg.replicates)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: run_replicate(cfg, *t), tasks))
    else:
        results = [run_replicate(cfg, g, r) for g, r in tasks]
    if raw is not None:
        raw.extend((g, r, res) for (g, r), res in zip(tasks, results))

    rows = []
    for g, (n, L, rho) in enumerate(grid):
        chunk = results[g * cfg.replicates:(g + 1) * cfg.replicates]
        for m in cfg.methods:
            ok = [res[m] for res in chunk if res[m] is not None]
            h_mean, h_sd = _summary([h for h, _ in ok])
            r_mean, r_sd = _summary([e for _, e in ok])
            rows.append(ExperimentRow(int(n), int(L), float(rho), m, h_mean, h_sd, r_mean, r_sd,
                                      len(ok), cfg.replicates - len(ok)))
    return rows


def write_table(rows: Sequence[ExperimentRow], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for row in rows:
        d = asdict(row)
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in TABLE_COLUMNS])


def read_table(stream: TextIO) -> list:
    reader = csv.DictReader(stream)
    types = {f.name: f.type for f in fields(ExperimentRow)}
    conv = {"int": int, "float": float, "str": str}
    return [ExperimentRow(**{k: conv[types[k]](v) for k, v in rec.items()}) for rec in reader]
