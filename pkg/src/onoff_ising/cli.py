"""Command-line entry point: ``onoff-ising {solve,bench,ablate,oracle,analyze}``."""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import harness
from .annealer import COLD_RESTART, NOISE_KINDS, DEFAULT_C, DEFAULT_NOISE_MEAN, DEFAULT_T0, SCHEDULE_KINDS
from .annealer import AnnealSchedule, NoiseConfig, QuantFormat
from .io import load_config_file, read_spikes, write_best_series, write_run_record, write_spikes, write_table
from .network import ARBITERS, SELECT_THEN_TEST, SolverConfig
from .oracle import brute_force, brute_force_mis
from .problems import DEFAULT_MIS_BETA, cut_from_energy


def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--kind", choices=harness.KINDS, default=harness.MAXCUT)
    g.add_argument("--beta", type=float, default=DEFAULT_MIS_BETA, help="MIS edge penalty")
    g.add_argument("--iterations", type=int, default=1_000_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--schedule", choices=SCHEDULE_KINDS, default="fn-log")
    g.add_argument("--T0", type=float, default=DEFAULT_T0)
    g.add_argument("--C", type=float, default=DEFAULT_C)
    g.add_argument("--dt", type=float, default=1.0)
    g.add_argument("--cold-T", type=float, default=None)
    g.add_argument("--restart-at", type=int, default=None)
    g.add_argument("--noise", choices=NOISE_KINDS, default="exponential")
    g.add_argument("--noise-mean", type=float, default=DEFAULT_NOISE_MEAN)
    g.add_argument("--B", type=float, default=float(np.e))
    g.add_argument("--eps", type=float, default=None)
    g.add_argument("--eta", type=float, default=1.0)
    g.add_argument("--quant-bits", type=int, choices=(8, 16, 32, 64), default=None)
    g.add_argument("--arbiter", choices=ARBITERS, default=SELECT_THEN_TEST)
    g.add_argument("--A", type=float, default=1.0e6)
    g.add_argument("--hardware", action="store_true", help="A-coupled neurons with RESET by subtraction")
    g.add_argument("--trace-every", type=int, default=0)
    g.add_argument("--stop-ratio", type=float, default=None,
                   help="halt once the last unit gain took more than this share of the run")
    g.add_argument("--sota", type=float, default=None, help="reference value for quality")
    g.add_argument("--sota-file", default=None, help="JSON table name -> reference value")
    g.add_argument("--timing", action="store_true", help="store wall time in records")


def config_from_args(a) -> SolverConfig:
    kind = a.schedule
    if a.cold_T is not None and a.restart_at is not None:
        kind = COLD_RESTART
    sched = AnnealSchedule(kind, a.T0, a.C, a.dt, a.restart_at, a.cold_T)
    noise = NoiseConfig(a.noise, a.B, a.eps, a.noise_mean, a.eta,
                        None if a.quant_bits is None else QuantFormat(a.quant_bits))
    return SolverConfig(
        max_iter=a.iterations, seed=a.seed, arbiter=a.arbiter, A=a.A, schedule=sched,
        noise=noise, trace_every=a.trace_every, hardware=a.hardware,
        record_spikes=bool(getattr(a, "spikes", None)), stop_ratio=a.stop_ratio,
    )


def _reference(a, name: str):
    if a.sota is not None:
        return a.sota
    table = harness.load_sota(a.sota_file)
    return table.get(name)


def _quality_text(value, ref):
    return f"{value:g}" if ref is None else f"{value:g} (quality {value / ref:.4f})"


def cmd_solve(a) -> int:
    graph = harness.load_instance(a.problem)
    cfg = config_from_args(a)
    ref = _reference(a, graph.name)
    records, traces = harness.solve_graph(graph, a.kind, cfg, a.replicas, a.workers, a.beta,
                                          ref, a.problem, a.timing)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for rec, tr in zip(records, traces):
        stem = f"{graph.name}-r{rec.replica}"
        write_run_record(rec, out / f"{stem}.json")
        write_best_series(rec.checkpoints, out / f"{stem}-best.csv")
        if a.spikes:
            write_spikes(tr, out / f"{stem}-spikes.csv")
        print(f"{stem} seed={rec.seed} best={_quality_text(rec.best_value, ref)}")
    return 0


def cmd_bench(a) -> int:
    cfg = config_from_args(a)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    stats_rows, kde_rows, hist_rows = [], [], []
    for desc in a.problems:
        graph = harness.load_instance(desc)
        ref = _reference(a, graph.name)
        if ref is None:
            warnings.warn(f"no reference value for {graph.name}")
        records, _ = harness.solve_graph(graph, a.kind, cfg, a.runs, a.workers, a.beta, ref,
                                         desc, a.timing)
        for rec in records:
            write_run_record(rec, out / f"{graph.name}-r{rec.replica}.json")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = harness.bench_report(records, graph)
        s, q = rep.summary, rep.quality_summary
        stats_rows.append([graph.name, s.count, s.mean, s.sd, s.min, s.max,
                           *((None,) * 4 if q is None else (q.mean, q.sd, q.min, q.max)),
                           rep.metrics["average_fanout"], rep.metrics["degree_entropy"],
                           rep.metrics["transitivity"]])
        samples = rep.qualities if rep.qualities is not None else rep.values
        dens = harness.kde_table(samples)
        kde_rows += [[graph.name, x, y] for x, y in zip(dens.grid, dens.density)]
        edges, counts = harness.histogram_table(samples)
        hist_rows += [[graph.name, lo, hi, c] for lo, hi, c in zip(edges[:-1], edges[1:], counts)]
        print(f"{graph.name}: mean={_quality_text(s.mean, ref)} sd={s.sd:g} "
              f"min={s.min:g} max={s.max:g}")
    write_table(out / "bench_stats.csv",
                ["graph", "runs", "mean", "sd", "min", "max", "quality_mean", "quality_sd",
                 "quality_min", "quality_max", "average_fanout", "degree_entropy", "transitivity"],
                stats_rows)
    write_table(out / "bench_kde.csv", ["graph", "x", "density"], kde_rows)
    write_table(out / "bench_hist.csv", ["graph", "lower", "upper", "count"], hist_rows)
    return 0


def cmd_ablate(a) -> int:
    graph = harness.load_instance(a.problem)
    cfg = config_from_args(a)
    ref = _reference(a, graph.name)
    grid = harness.run_ablation(graph, a.kind, cfg, a.seeds, ref, a.workers,
                                a.schedules, a.noises)
    rows, summary = [], []
    for (sched, noise), records in grid.items():
        vals = [r.best_value for r in records]
        for r in records:
            rows.append([sched, noise, r.seed, r.best_value, r.quality])
        s = harness.summarize(vals)
        summary.append([sched, noise, s.count, s.mean, s.sd, s.min, s.max])
        print(f"{sched:>12} x {noise:<11} mean={_quality_text(s.mean, ref)} sd={s.sd:g}")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "ablation_runs.csv", ["schedule", "noise", "seed", "best_value", "quality"], rows)
    write_table(out / "ablation_summary.csv",
                ["schedule", "noise", "runs", "mean", "sd", "min", "max"], summary)
    return 0


def cmd_oracle(a) -> int:
    graph = harness.load_instance(a.problem)
    if a.kind == harness.MIS:
        size, x = brute_force_mis(graph)
        print(f"maximum independent set size {size}")
        print("members " + " ".join(str(i) for i in np.flatnonzero(x)))
        return 0
    res = brute_force(harness.encode(graph, a.kind))
    print(f"ground energy {res.best_value:g}, optima {res.optima_count}, "
          f"max cut {cut_from_energy(graph, res.best_value):g}")
    print("state " + "".join("1" if v > 0 else "0" for v in res.best_state))
    return 0


def cmd_analyze(a) -> int:
    it, nrn, _ = read_spikes(a.spikes)
    dim = a.dim if a.dim is not None else (int(nrn.max()) + 1 if nrn.size else 1)
    total = a.iterations if a.iterations is not None else (int(it.max()) if it.size else 0)
    pca = harness.analyze_trace(it, nrn, dim, total, a.window, a.overlap, a.components)
    if pca.degenerate:
        print("degenerate: no spike-count variance, projection undefined")
    else:
        print(f"{pca.window_start.size} windows, top-{a.components} explained variance "
              f"{pca.explained:.4f}")
    header = ["window_start"] + [f"pc{k + 1}" for k in range(a.components)]
    rows = [[int(s), *map(float, c)] for s, c in zip(pca.window_start, pca.coordinates)]
    write_table(a.out, header, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onoff-ising", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON file of option defaults; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="anneal one instance")
    p.add_argument("problem", help="Gset file or generator descriptor (planar:N:SEED, torus:R:C:SEED, ...)")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--out", default="runs")
    p.add_argument("--spikes", action="store_true", help="also write spike CSV tables")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="repeated runs with distribution statistics")
    p.add_argument("problems", nargs="+")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--out", default="bench")
    _solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ablate", help="schedule x noise grid on one instance")
    p.add_argument("problem")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--schedules", nargs="+", choices=SCHEDULE_KINDS, default=list(harness.ABLATION_SCHEDULES))
    p.add_argument("--noises", nargs="+", choices=NOISE_KINDS, default=list(harness.ABLATION_NOISES))
    p.add_argument("--out", default="ablation")
    _solver_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("oracle", help="exact optimum by exhaustive search")
    p.add_argument("problem")
    p.add_argument("--kind", choices=harness.KINDS, default=harness.MAXCUT)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("analyze", help="PCA of windowed spike counts")
    p.add_argument("spikes", help="spike CSV written by solve --spikes")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--window", type=int, default=10_000)
    p.add_argument("--overlap", type=int, default=5_000)
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--out", default="trajectory.csv")
    p.set_defaults(func=cmd_analyze)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    pre, _ = parser.parse_known_args(argv)
    if pre.config is None:
        return parser.parse_args(argv)
    values = load_config_file(pre.config)
    sub = parser._subparsers._group_actions[0].choices[pre.command]
    known = {act.dest for act in sub._actions}
    unknown = sorted(set(values) - known)
    if unknown:
        parser.error(f"unknown config keys: {', '.join(unknown)}")
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
