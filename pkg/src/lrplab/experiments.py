"""Parameter sweeps: config parsing, per-cell measurements, CSV/JSON output.

A config file is plain text in INI style, for example::

    [model]
    d = 1
    s = 1.5
    beta = 1.0

    [sweep]
    L = 4096, 16384
    seeds = 10
    seed_base = 0

    [measure]
    diameter = yes
    pairs = 200
    ball_r_max = 0
    hierarchy = no

    [output]
    csv = sweep.csv

    [budget]
    max_vertices = 1e8
    max_bfs = 0
    wall_clock = 0

Zero disables a budget or measurement.  Cells are ``(L, seed)`` pairs in
grid order; rows are written in that order whatever the worker count.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, PreconditionError
from .fitting import fit_ball_curve
from .metrics import ball_growth, diameter_exact, typical_distance_sample
from .model import ModelParams, build_schedule
from .sampler import sample_graph

COLUMNS = (
    "L", "seed", "n_vertices", "n_long_edges", "status",
    "diameter", "diameter_lower", "diameter_upper", "diameter_method", "bfs_count",
    "typical_median", "T_L", "restricted_median", "restricted_max",
    "cert_attempts", "cert_success", "cert_max_length", "cert_bound",
    "ball_slope", "ball_ref",
    "t_sample", "t_diameter", "t_typical", "t_hierarchy", "t_ball",
)
RUNTIME_COLUMNS = tuple(c for c in COLUMNS if c.startswith("t_"))


@dataclass
class ExperimentConfig:
    """Everything a sweep needs; see the module docstring for the file format."""

    d: int = 1
    s: float = 1.5
    beta: float = 1.0
    nn_always: bool = True
    L_values: tuple = (4096,)
    seeds: int = 1
    seed_base: int = 0
    # measurements
    diameter: bool = True
    diameter_method: str = "bounds"
    pairs: int = 0
    ball_r_max: int = 0
    hierarchy: bool = False
    cert_pairs: int = 10
    # schedule (hierarchy only)
    schedule_mode: str = "demo"
    s_prime: float = 1.52
    gamma: float = 0.9694
    zeta: float = 0.83
    eta: float = 4.2
    theta: float = 4.5
    epsilon: float = 2.9
    delta: Optional[float] = None
    # outputs
    out_csv: Optional[str] = None
    out_json: Optional[str] = None
    ball_dir: Optional[str] = None
    # budgets
    max_vertices: int = 200_000_000
    max_bfs: int = 0
    wall_clock: float = 0.0
    workers: int = 1

    def __post_init__(self):
        self.L_values = tuple(int(v) for v in self.L_values)
        self.validate()

    def validate(self) -> None:
        if not self.L_values:
            raise PreconditionError("the L grid is empty")
        if any(v < 1 for v in self.L_values):
            raise PreconditionError("every L must be >= 1")
        if self.seeds < 1:
            raise PreconditionError("seeds per L must be >= 1")
        if self.max_vertices <= 0 or self.max_bfs < 0 or self.wall_clock < 0:
            raise PreconditionError("budgets must be positive (0 disables max_bfs/wall_clock)")
        if self.workers < 1:
            raise PreconditionError("workers must be >= 1")
        if self.diameter_method not in ("bounds", "fringe"):
            raise PreconditionError(f"unknown diameter method {self.diameter_method!r}")
        if self.schedule_mode not in ("demo", "strict"):
            raise PreconditionError(f"unknown schedule mode {self.schedule_mode!r}")

    def cells(self) -> list:
        return [(L, self.seed_base + i) for L in self.L_values for i in range(self.seeds)]

    def model(self, L: int, seed: int) -> ModelParams:
        return ModelParams(self.d, self.s, self.beta, L, seed=seed, nn_always=self.nn_always)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_string(Path(path).read_text())

    @classmethod
    def from_string(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        kw = {}
        known = {f for f in cls.__dataclass_fields__}
        aliases = {("sweep", "L"): "L_values", ("sweep", "l"): "L_values",
                   ("schedule", "mode"): "schedule_mode",
                   ("output", "csv"): "out_csv", ("output", "json"): "out_json"}
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                name = aliases.get((sec, key), key)
                if name not in known:
                    raise PreconditionError(f"unknown config key [{sec}] {key}")
                kw[name] = _coerce(cls.__dataclass_fields__[name].type, name, raw)
        return cls(**kw)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["L_values"] = list(self.L_values)
        return out


def _coerce(type_name, name: str, raw: str):
    raw = raw.strip()
    t = str(type_name)
    if name == "L_values":
        return tuple(int(float(v)) for v in raw.replace(",", " ").split())
    if raw.lower() in ("none", ""):
        return None
    if t == "bool":
        if raw.lower() in ("1", "yes", "true", "on"):
            return True
        if raw.lower() in ("0", "no", "false", "off"):
            return False
        raise PreconditionError(f"{name}: expected a boolean, got {raw!r}")
    if t == "int":
        return int(float(raw))
    if "float" in t:
        return float(raw)
    return raw


@dataclass
class SweepResult:
    """Rows keyed by ``COLUMNS``; ``censored`` counts rows hit by a budget."""

    config: ExperimentConfig
    rows: list = field(default_factory=list)

    @property
    def censored(self) -> int:
        return sum(r["status"] != "ok" for r in self.rows)

    def to_csv(self, runtimes: bool = True) -> str:
        buf = io.StringIO()
        cols = COLUMNS if runtimes else tuple(c for c in COLUMNS if c not in RUNTIME_COLUMNS)
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({c: _fmt(r.get(c)) for c in cols})
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"config": self.config.to_dict(), "rows": self.rows,
                           "censored": self.censored}, indent=2, default=_json_default)

    def medians(self, column: str = "diameter") -> dict:
        out = {}
        for L in self.config.L_values:
            vals = [r[column] for r in self.rows
                    if r["L"] == L and r["status"] == "ok" and r.get(column) is not None]
            out[L] = float(np.median(vals)) if vals else None
        return out


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    return v


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(type(o))


def _hierarchy_stats(cfg: ExperimentConfig, graph, L: int, seed: int) -> dict:
    from .hierarchy import (LinkIndex, PathCertificate, bad_components, build_block_tree,
                            certificate_bound, classify_blocks, construct_path,
                            restricted_distance, sample_good_pairs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sched = build_schedule(L, s_prime=cfg.s_prime, gamma=cfg.gamma, zeta=cfg.zeta,
                               eta=cfg.eta, theta=cfg.theta, epsilon=cfg.epsilon,
                               delta=cfg.delta, mode=cfg.schedule_mode, d=cfg.d, s=cfg.s)
    tree = build_block_tree(L, sched, cfg.d)
    labels = classify_blocks(graph, tree, sched)
    comps = bad_components(labels, tree)
    out = {"T_L": comps.T_L, "cert_bound": certificate_bound(tree)}
    pairs = sample_good_pairs(labels, cfg.cert_pairs, rng=seed)
    links = LinkIndex(graph, tree, labels)
    restricted, lengths, ok = [], [], 0
    for x, y in pairs:
        restricted.append(restricted_distance(graph, labels, x, y))
        cert = construct_path(graph, tree, labels, x, y, links)
        if isinstance(cert, PathCertificate):
            cert.replay(graph)
            ok += 1
            lengths.append(cert.length)
    finite = [v for v in restricted if math.isfinite(v)]
    out.update(cert_attempts=len(pairs), cert_success=ok,
               cert_max_length=max(lengths) if lengths else None,
               restricted_median=float(np.median(finite)) if finite else None,
               restricted_max=float(max(restricted)) if restricted else None)
    return out


def run_cell(cfg: ExperimentConfig, L: int, seed: int) -> dict:
    """All selected measurements for one ``(L, seed)`` cell."""
    row = {c: None for c in COLUMNS}
    row.update(L=L, seed=seed, status="ok")
    t = time.perf_counter()
    try:
        g = sample_graph(cfg.model(L, seed), max_vertices=cfg.max_vertices)
    except CapacityError:
        row["status"] = "censored-capacity"
        return row
    row.update(n_vertices=g.n_vertices, n_long_edges=g.n_long_edges,
               t_sample=time.perf_counter() - t)
    if cfg.diameter:
        t = time.perf_counter()
        res = diameter_exact(g, max_bfs=cfg.max_bfs or None, strategy=cfg.diameter_method)
        row.update(diameter=res.value if res.exact else None, diameter_lower=res.lower,
                   diameter_upper=res.upper, diameter_method=res.method,
                   bfs_count=res.bfs_count, t_diameter=time.perf_counter() - t)
        if not res.exact:
            row["status"] = "censored-bfs"
    if cfg.pairs:
        t = time.perf_counter()
        sample = typical_distance_sample(g, cfg.pairs, rng=seed)
        row["typical_median"] = float(np.median([dd for _, _, dd in sample]))
        row["t_typical"] = time.perf_counter() - t
    if cfg.hierarchy:
        t = time.perf_counter()
        row.update(_hierarchy_stats(cfg, g, L, seed))
        row["t_hierarchy"] = time.perf_counter() - t
    if cfg.ball_r_max:
        t = time.perf_counter()
        curve = ball_growth(g, g.origin, cfg.ball_r_max)
        try:
            row["ball_slope"] = fit_ball_curve(curve).slope
        except PreconditionError:
            row["ball_slope"] = None
        if cfg.ball_dir:
            path = Path(cfg.ball_dir) / f"ball_L{L}_seed{seed}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(curve.to_csv())
            row["ball_ref"] = str(path)
        row["t_ball"] = time.perf_counter() - t
    return row


def _cell_star(args):
    return run_cell(*args)


def run_sweep(config: ExperimentConfig,
              progress: Optional[Callable[[dict], None]] = None) -> SweepResult:
    """Run every cell, flushing rows to ``config.out_csv`` as they complete.

    Once the wall-clock budget is spent, remaining cells are recorded with
    status ``censored-wallclock``.
    """
    cfg = config
    result = SweepResult(cfg)
    cells = cfg.cells()
    start = time.perf_counter()
    sink = None
    writer = None
    if cfg.out_csv:
        Path(cfg.out_csv).parent.mkdir(parents=True, exist_ok=True)
        sink = open(cfg.out_csv, "w", newline="")
        writer = csv.DictWriter(sink, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()

    def emit(row):
        result.rows.append(row)
        if writer is not None:
            writer.writerow({c: _fmt(row.get(c)) for c in COLUMNS})
            sink.flush()
        if progress is not None:
            progress(row)

    def out_of_time():
        return cfg.wall_clock and time.perf_counter() - start > cfg.wall_clock

    def censored_row(L, seed):
        row = {c: None for c in COLUMNS}
        row.update(L=L, seed=seed, status="censored-wallclock")
        return row

    try:
        if cfg.workers == 1:
            for L, seed in cells:
                emit(censored_row(L, seed) if out_of_time() else run_cell(cfg, L, seed))
        else:
            with ProcessPoolExecutor(cfg.workers) as pool:
                futures = [pool.submit(_cell_star, (cfg, L, seed)) for L, seed in cells]
                for (L, seed), fut in zip(cells, futures):
                    if out_of_time() and not fut.done():
                        fut.cancel()
                        emit(censored_row(L, seed))
                    else:
                        emit(fut.result())
    finally:
        if sink is not None:
            sink.close()
    if cfg.out_json:
        Path(cfg.out_json).write_text(result.to_json())
    return result


def read_csv_rows(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
