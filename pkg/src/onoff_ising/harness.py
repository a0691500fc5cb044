"""Experiment orchestration: solve, benchmark statistics, ablation grids, PCA."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import gaussian_kde

from .annealer import EXP_DECAY, EXPONENTIAL, FN_LOG, GAUSSIAN, INVERSE_TIME, UNIFORM
from .core import IsingProblem
from .io import RunRecord, config_to_dict, pack_state, read_gset
from .network import RunTrace, SolverConfig, derive_seed, run_parallel
from .problems import (
    DEFAULT_MIS_BETA,
    WeightedGraph,
    complexity_metrics,
    cut_from_energy,
    maxcut_encode,
    mis_decode,
    mis_encode,
    planar_union,
    random_graph,
    toroidal_grid,
)

MAXCUT = "maxcut"
MIS = "mis"
KINDS = (MAXCUT, MIS)

ABLATION_SCHEDULES = (FN_LOG, INVERSE_TIME, EXP_DECAY)
ABLATION_NOISES = (EXPONENTIAL, GAUSSIAN, UNIFORM)


def load_sota(path: Optional[str] = None) -> dict:
    """Best-known values keyed by instance name; the bundled table covers Gset."""
    if path is None:
        text = resources.files("onoff_ising").joinpath("data/sota.json").read_text()
    else:
        text = Path(path).read_text()
    return {str(k): float(v) for k, v in json.loads(text).items()}


def encode(graph: WeightedGraph, kind: str, beta: float = DEFAULT_MIS_BETA) -> IsingProblem:
    if kind == MAXCUT:
        return maxcut_encode(graph)
    if kind == MIS:
        return mis_encode(graph, beta)
    raise ValueError(f"kind must be one of {KINDS}")


def gain_unit(kind: str) -> float:
    """Energy change worth one cut edge (MAX-CUT) or one set member (MIS)."""
    return 2.0 if kind == MAXCUT else 0.5


def objective(kind: str, graph: WeightedGraph, energy_value: float) -> float:
    """Objective-space value of an energy: cut size, or penalized set size for MIS."""
    if kind == MAXCUT:
        return cut_from_energy(graph, energy_value)
    return -2.0 * energy_value


def best_value(kind: str, graph: WeightedGraph, trace: RunTrace) -> float:
    if kind == MAXCUT:
        return cut_from_energy(graph, trace.best_energy)
    return float(mis_decode(graph, trace.best_state, repair=True).size)


def make_record(trace: RunTrace, cfg: SolverConfig, kind: str, graph: WeightedGraph,
                problem: IsingProblem, sota: Optional[float] = None,
                source: Optional[str] = None, replica: int = 0,
                timing: bool = False) -> RunRecord:
    checkpoints = [[int(i), objective(kind, graph, float(e))]
                   for i, e in zip(trace.improvement_iteration, trace.improvement_value)]
    return RunRecord(
        problem=graph.name,
        objective=kind,
        config=config_to_dict(replace(cfg, seed=trace.seed)),
        seed=int(trace.seed),
        best_value=best_value(kind, graph, trace),
        best_energy=float(trace.best_energy),
        best_state=pack_state(trace.best_state),
        dim=problem.dim,
        domain=problem.domain,
        iterations=int(trace.iterations),
        spike_count=int(trace.spike_count),
        checkpoints=checkpoints,
        wall_time=float(trace.wall_time) if timing else None,
        sota=sota,
        source=source,
        replica=replica,
    )


def solve_graph(graph: WeightedGraph, kind: str, cfg: SolverConfig, replicas: int = 1,
                workers: int = 1, beta: float = DEFAULT_MIS_BETA, sota: Optional[float] = None,
                source: Optional[str] = None, timing: bool = False):
    """Run ``replicas`` seeded instances; returns ``(records, traces)`` in replica order."""
    problem = encode(graph, kind, beta)
    if cfg.stop_ratio is not None and cfg.gain_unit is None:
        cfg = replace(cfg, gain_unit=gain_unit(kind))
    traces = run_parallel(problem, cfg, replicas, workers)
    records = [make_record(t, cfg, kind, graph, problem, sota, source, k, timing)
               for k, t in enumerate(traces)]
    return records, traces


# ---------------------------------------------------------------- statistics


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    sd: float
    min: float
    max: float


def summarize(values) -> Summary:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("no values to summarize")
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return Summary(int(v.size), float(v.mean()), sd, float(v.min()), float(v.max()))


@dataclass(frozen=True)
class DensityTable:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    degenerate: bool

    def integral(self) -> float:
        if self.degenerate:
            return 1.0
        return float(trapezoid(self.density, self.grid))


def kde_table(values, points: int = 2048, reach: float = 8.0) -> DensityTable:
    """Gaussian KDE with Silverman bandwidth on a grid spanning ``reach`` bandwidths.

    Constant samples give a degenerate table: the grid is the single value
    and the density is reported as NaN.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2 or np.ptp(v) == 0:
        return DensityTable(np.array([v[0]]) if v.size else np.array([]),
                            np.array([np.nan] * min(v.size, 1)), 0.0, True)
    kde = gaussian_kde(v, bw_method="silverman")
    bw = float(np.sqrt(kde.covariance[0, 0]))
    grid = np.linspace(v.min() - reach * bw, v.max() + reach * bw, points)
    return DensityTable(grid, kde(grid), bw, False)


def histogram_table(values, bins="auto"):
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins)
    return edges, counts


@dataclass
class BenchReport:
    graph: str
    values: list
    qualities: Optional[list]
    summary: Summary
    quality_summary: Optional[Summary]
    metrics: dict


def bench_report(records: Iterable[RunRecord], graph: Optional[WeightedGraph] = None) -> BenchReport:
    """Statistics of one instance's records; pure function of the records."""
    records = sorted(records, key=lambda r: (r.problem, r.seed))
    if not records:
        raise ValueError("no records")
    values = [r.best_value for r in records]
    sota = records[0].sota
    qualities = None
    qsum = None
    if sota:
        qualities = [v / sota for v in values]
        qsum = summarize(qualities)
    else:
        warnings.warn(f"no reference value for {records[0].problem}; reporting raw values only",
                      stacklevel=2)
    return BenchReport(records[0].problem, values, qualities, summarize(values), qsum,
                       complexity_metrics(graph) if graph is not None else {})


def load_instance(desc: str) -> WeightedGraph:
    """Gset file path, or a generator descriptor.

    Generator descriptors: ``planar:N:SEED``, ``torus:ROWS:COLS:SEED`` and
    ``random:N:P:SEED`` (signed weights with a trailing ``:signed``).
    """
    if Path(desc).exists():
        return read_gset(desc)
    head, _, rest = desc.partition(":")
    args = rest.split(":") if rest else []
    try:
        if head == "planar" and len(args) == 2:
            return planar_union(int(args[0]), int(args[1]), name=desc)
        if head == "torus" and len(args) == 3:
            return toroidal_grid(int(args[0]), int(args[1]), int(args[2]), name=desc)
        if head == "random" and len(args) in (3, 4):
            signed = len(args) == 4 and args[3] == "signed"
            return random_graph(int(args[0]), float(args[1]), int(args[2]), signed, name=desc)
    except ValueError as exc:
        raise ValueError(f"bad instance descriptor {desc!r}: {exc}") from None
    raise FileNotFoundError(f"{desc!r} is neither a file nor a generator descriptor")


# ---------------------------------------------------------------- ablation


def ablation_grid(base: SolverConfig, schedules=ABLATION_SCHEDULES, noises=ABLATION_NOISES):
    """``(schedule_kind, noise_dist, config)`` cells, schedule-major order."""
    cells = []
    for s in schedules:
        for nz in noises:
            cells.append((s, nz, replace(base, schedule=replace(base.schedule, kind=s),
                                         noise=replace(base.noise, dist=nz))))
    return cells


def run_ablation(graph: WeightedGraph, kind: str, base: SolverConfig, seeds: int,
                 sota: Optional[float] = None, workers: int = 1,
                 schedules=ABLATION_SCHEDULES, noises=ABLATION_NOISES) -> dict:
    """Records per cell; seeds come from :func:`derive_seed` on ``base.seed``."""
    out = {}
    for s, nz, cfg in ablation_grid(base, schedules, noises):
        records, _ = solve_graph(graph, kind, replace(cfg, record_spikes=False), seeds,
                                 workers, sota=sota)
        out[(s, nz)] = records
    return out


# ---------------------------------------------------------------- PCA of spike trajectories


@dataclass
class TrajectoryPCA:
    window_start: np.ndarray
    coordinates: np.ndarray
    eigenvalues: np.ndarray
    loadings: np.ndarray
    explained: float
    degenerate: bool


def window_counts(spike_iteration, spike_neuron, n_neurons: int, total_iterations: int,
                  window: int, overlap: int) -> tuple[np.ndarray, np.ndarray]:
    """Spike counts per neuron pair in sliding windows ``[start, start + window)``."""
    if not window > overlap >= 0:
        raise ValueError("need window > overlap >= 0")
    step = window - overlap
    starts = np.arange(0, max(total_iterations - window, 0) + 1, step, dtype=np.int64)
    counts = np.zeros((starts.size, n_neurons))
    it = np.asarray(spike_iteration, dtype=np.int64) - 1  # iterations count from 1
    nrn = np.asarray(spike_neuron, dtype=np.int64)
    for w, s in enumerate(starts):
        sel = (it >= s) & (it < s + window)
        np.add.at(counts[w], nrn[sel], 1.0)
    return starts, counts


def analyze_trace(spike_iteration, spike_neuron, n_neurons: int, total_iterations: int,
                  window: int = 10_000, overlap: int = 5_000, components: int = 3) -> TrajectoryPCA:
    """Project windowed spike-count vectors onto their top principal directions."""
    starts, counts = window_counts(spike_iteration, spike_neuron, n_neurons,
                                   total_iterations, window, overlap)
    if starts.size < components:
        raise ValueError(f"{starts.size} windows is fewer than {components} components")
    centered = counts - counts.mean(axis=0)
    cov = centered.T @ centered / max(starts.size - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    total = evals.sum()
    degenerate = not total > 0
    top = evecs[:, :components]
    # deterministic sign: largest-magnitude loading positive
    flip = np.sign(top[np.argmax(np.abs(top), axis=0), np.arange(components)])
    flip[flip == 0] = 1.0
    top = top * flip
    coords = centered @ top
    explained = 0.0 if degenerate else float(evals[:components].sum() / total)
    return TrajectoryPCA(starts, coords, evals, top, explained, degenerate)


__all__ = [
    "ABLATION_NOISES", "ABLATION_SCHEDULES", "BenchReport", "DensityTable", "KINDS", "MAXCUT",
    "MIS", "Summary", "TrajectoryPCA", "ablation_grid", "analyze_trace", "bench_report",
    "best_value", "derive_seed", "encode", "gain_unit", "histogram_table", "kde_table",
    "load_instance", "load_sota", "make_record", "objective", "run_ablation", "solve_graph", "summarize",
    "window_counts",
]
