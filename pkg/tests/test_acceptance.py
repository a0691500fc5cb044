"""Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.

Criteria 5 and 6 need the published G15 and G11 files, looked up in
``$ONOFF_GSET_DIR`` and then ``tests/data/gset``. Without them those checks
fail. The surrogate variants apply the same 99% bar to generated
instances of the same size and family whose reference values are known.
"""

import os
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_problem
from onoff_ising.annealer import (
    COLD_RESTART, DEFAULT_C, DEFAULT_NOISE_MEAN, DEFAULT_T0, AnnealSchedule, NoiseConfig, QuantFormat,
    fn_integrate, sample_threshold_noise,
)
from onoff_ising.core import BINARY, energy, flip
from onoff_ising.harness import MAXCUT, MIS, run_ablation, solve_graph
from onoff_ising.io import read_gset, unpack_state
from onoff_ising.network import SolverConfig, drive, init_network, run, run_parallel
from onoff_ising.oracle import brute_force, brute_force_mis, reference_sa, torus_ground_state
from onoff_ising.problems import (
    cut_from_energy, cut_value, maxcut_encode, mis_decode, planar_union, random_graph,
    random_spin_problem, toroidal_grid,
)
pytestmark = pytest.mark.acceptance

DATA = Path(__file__).parent / "data"

# pinned tolerances and budgets
ORACLE_HIT_RATE = 0.90
SCHEDULE_REL_TOL = 1e-4
NOISE_MEAN_TOL = 0.01
GSET_FRACTION = 0.99
COLD_FRACTION = 0.95
COLD_SPEEDUP = 100.0
G15_SOTA, G11_SOTA = 3050, 564
LONG_RUN = 10**8
MEDIUM_RUN = 10**7

# surrogates: 800-node instances from the same generator families as G15 and G11
PLANAR_SEED = 15
PLANAR_REFERENCE = 3097  # best cut over six runs of 2e8-1e9 iterations; state stored in tests/data
TORUS_SEED = 11
TORUS_OPTIMUM = 534  # exact, transfer-matrix oracle


def verdict(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def first_hit(trace, graph, target):
    for it, e in zip(trace.improvement_iteration, trace.improvement_value):
        if cut_from_energy(graph, float(e)) >= target:
            return int(it)
    return None


def gset_file(name):
    for root in (os.environ.get("ONOFF_GSET_DIR"), DATA / "gset"):
        if root and (Path(root) / name).is_file():
            return Path(root) / name
    return None


@pytest.fixture(scope="module")
def planar():
    return planar_union(800, PLANAR_SEED)


@pytest.fixture(scope="module")
def torus():
    return toroidal_grid(8, 100, TORUS_SEED)


def test_surrogate_references(planar, torus):
    state = unpack_state((DATA / "planar-800-15-best.txt").read_text().strip(), 800)
    assert cut_value(planar, state) == PLANAR_REFERENCE
    assert cut_from_energy(torus, torus_ground_state(torus, 8, 100).best_value) == TORUS_OPTIMUM


def test_criterion_01_oracle_equivalence():
    cfg = SolverConfig(max_iter=10**6, seed=1, schedule=AnnealSchedule(C=800.0), record_spikes=False)
    start = time.perf_counter()
    rates = []
    for s in range(10):
        p = random_spin_problem(12, 0.4, s)
        ground = brute_force(p).best_value
        traces = run_parallel(p, cfg, 50)
        rates.append(np.mean([t.best_energy == ground for t in traces]))
    elapsed = time.perf_counter() - start
    ok = min(rates) >= ORACLE_HIT_RATE and elapsed < 120
    verdict(1, "oracle equivalence on 10 x 50 runs", ok,
            f"min hit rate {min(rates):.2f} >= {ORACLE_HIT_RATE}, {elapsed:.0f}s < 120s")


def test_criterion_02_isomorphism():
    p = maxcut_encode(random_graph(50, 0.2, 5, signed=True))
    cfg = SolverConfig(max_iter=10**5, seed=7)
    net = run(p, cfg)
    ref = reference_sa(p, cfg.schedule, cfg.noise, cfg.seed, cfg.max_iter)
    a = np.stack([net.spike_iteration, net.spike_neuron, net.spike_direction])
    b = np.stack([ref.spike_iteration, ref.spike_neuron, ref.spike_direction])
    mismatches = abs(a.shape[1] - b.shape[1])
    n = min(a.shape[1], b.shape[1])
    mismatches += int(np.any(a[:, :n] != b[:, :n], axis=0).sum())
    verdict(2, "network flips equal reference SA flips", mismatches == 0 and n > 0,
            f"{n} flips, {mismatches} mismatches")


def _recompute_spikes(p, trace):
    s = np.ones(p.dim, dtype=np.int8)
    bad = 0
    for nrn, dh in zip(trace.spike_neuron, trace.spike_delta_h):
        t = flip(p, s, int(nrn))
        bad += energy(p, t) - energy(p, s) != dh
        s = t
    return bad


def test_criterion_03_bookkeeping():
    cases = {
        "spin": (random_problem(30, 1), {}),
        "bias": (random_problem(30, 2, bias=True), {}),
        "binary": (random_problem(30, 3, bias=True, diagonal=True, domain=BINARY), {}),
        "hardware": (random_problem(30, 4), {"hardware": True, "noise": NoiseConfig(eta=0.5)}),
        "test-then-select": (random_problem(30, 5), {"arbiter": "test-then-select"}),
    }
    failures = []
    spikes = 0
    for name, (p, extra) in cases.items():
        cfg = SolverConfig(max_iter=50_000, seed=3, **extra)
        state = init_network(p, cfg)
        trace = drive(state, cfg)
        vp, vm = state.rest_potentials()
        exact = np.array_equal(state.v_plus, vp) and np.array_equal(state.v_minus, vm)
        bad = _recompute_spikes(p, trace)
        spikes += trace.spike_count
        if not exact or bad:
            failures.append(f"{name}: potentials exact={exact}, {bad} bad deltas")
    verdict(3, "membrane bookkeeping and spike deltas", not failures,
            "; ".join(failures) or f"{len(cases)} configurations, {spikes} spikes checked")


def test_criterion_04_schedule_and_noise():
    sched = AnnealSchedule(T0=DEFAULT_T0, C=DEFAULT_C)
    n = 10**5
    closed = DEFAULT_T0 / np.log1p(np.arange(1, n + 1) / DEFAULT_C)
    err = float(np.max(np.abs(fn_integrate(sched, n) / closed - 1)))
    mean = float(sample_threshold_noise(NoiseConfig(), np.random.default_rng(0), 10**6).mean())
    ok = err < SCHEDULE_REL_TOL and abs(mean - DEFAULT_NOISE_MEAN) <= NOISE_MEAN_TOL
    verdict(4, "FN integration and noise mean", ok,
            f"max rel err {err:.2e} < {SCHEDULE_REL_TOL:g}, mean {mean:.4f} vs {DEFAULT_NOISE_MEAN}")


def _long_cuts(graph, seeds=5):
    cfg = SolverConfig(max_iter=LONG_RUN, seed=0, record_spikes=False)
    return [cut_from_energy(graph, t.best_energy) for t in run_parallel(maxcut_encode(graph), cfg, seeds)]


def test_criterion_05_g15():
    path = gset_file("G15")
    if path is None:
        verdict(5, "G15 best cut >= 3020 in 4/5 runs", False,
                "G15 not found in $ONOFF_GSET_DIR or tests/data/gset")
    cuts = _long_cuts(read_gset(path))
    hits = sum(c >= GSET_FRACTION * G15_SOTA for c in cuts)
    verdict(5, "G15 best cut >= 3020 in 4/5 runs", hits >= 4, f"cuts {cuts}")


def test_criterion_05_planar_surrogate(planar):
    cuts = _long_cuts(planar)
    bar = GSET_FRACTION * PLANAR_REFERENCE
    hits = sum(c >= bar for c in cuts)
    verdict(5, f"planar surrogate cut >= {bar:.1f} in 4/5 runs", hits >= 4, f"cuts {cuts}")


def test_criterion_06_g11():
    path = gset_file("G11")
    if path is None:
        verdict(6, "G11 best cut >= 558 in 5/5 runs", False,
                "G11 not found in $ONOFF_GSET_DIR or tests/data/gset")
    cuts = _long_cuts(read_gset(path))
    hits = sum(c >= 558 for c in cuts)
    verdict(6, "G11 best cut >= 558 in 5/5 runs", hits == 5, f"cuts {cuts}")


def test_criterion_06_torus_surrogate(torus):
    cuts = _long_cuts(torus)
    bar = GSET_FRACTION * TORUS_OPTIMUM
    hits = sum(c >= bar for c in cuts)
    verdict(6, f"torus surrogate cut >= {bar:.2f} in 5/5 runs", hits == 5, f"cuts {cuts}")


def test_criterion_07_mis():
    optimal = 0
    infeasible = 0
    cfg = SolverConfig(max_iter=10**6, seed=0, schedule=AnnealSchedule(C=800.0), record_spikes=False)
    for s in range(10):
        g = random_graph(16, 0.25, 100 + s)
        records, traces = solve_graph(g, MIS, cfg, replicas=5)
        infeasible += sum(not mis_decode(g, t.best_state, repair=True).feasible for t in traces)
        optimal += max(r.best_value for r in records) == brute_force_mis(g)[0]
    verdict(7, "MIS feasible and best-of-5 optimal on >= 9/10", infeasible == 0 and optimal >= 9,
            f"{optimal}/10 optimal, {infeasible} infeasible decodes")


def test_criterion_08_quantization(torus):
    p = maxcut_encode(torus)
    base = SolverConfig(max_iter=MEDIUM_RUN, seed=0, record_spikes=False)
    runs = {}
    for bits in (8, 16, 32, 64):
        cfg = replace(base, noise=NoiseConfig(quant=QuantFormat(bits)))
        runs[bits] = run_parallel(p, cfg, 20)
    quality = {b: np.mean([cut_from_energy(torus, t.best_energy) / TORUS_OPTIMUM for t in tr])
               for b, tr in runs.items()}
    same = all(
        np.array_equal(a.improvement_iteration, b.improvement_iteration)
        and np.array_equal(a.best_state, b.best_state)
        and np.array_equal(a.sample_energy, b.sample_energy)
        for a, b in zip(runs[32], runs[64])
    )
    ok = quality[8] < quality[16] and same
    verdict(8, "8-bit worse than 16-bit, 32-bit equals 64-bit", ok,
            ", ".join(f"{b}-bit {q:.5f}" for b, q in quality.items()) + f", 32==64: {same}")


def test_criterion_09_ablation(planar):
    grid = run_ablation(planar, MAXCUT, SolverConfig(max_iter=MEDIUM_RUN, seed=0), 5,
                        sota=PLANAR_REFERENCE)
    means = {cell: np.mean([r.quality for r in recs]) for cell, recs in grid.items()}
    top = means[("fn-log", "exponential")]
    beaten = [f"{s}+{n} {m:.5f}" for (s, n), m in means.items() if m > top]
    verdict(9, "fn-log + exponential is the best ablation cell", not beaten,
            f"fn-log+exponential {top:.5f}" + (f"; higher: {', '.join(beaten)}" if beaten else ""))


def test_criterion_10_cold_start(planar):
    p = maxcut_encode(planar)
    target = COLD_FRACTION * PLANAR_REFERENCE
    warm = SolverConfig(max_iter=MEDIUM_RUN, seed=0, record_spikes=False)
    cold = SolverConfig(max_iter=MEDIUM_RUN, seed=0, record_spikes=False,
                        schedule=AnnealSchedule(COLD_RESTART, restart_at=MEDIUM_RUN + 1))
    hits = {}
    for name, cfg in (("warm", warm), ("cold", cold)):
        hits[name] = [first_hit(t, planar, target) for t in run_parallel(p, cfg, 5)]
    if None in hits["warm"] or None in hits["cold"]:
        verdict(10, "cold start reaches 95% >= 100x sooner", False, f"unreached: {hits}")
    speedup = np.median(hits["warm"]) / np.median(hits["cold"])
    verdict(10, "cold start reaches 95% >= 100x sooner", speedup >= COLD_SPEEDUP,
            f"median first hit warm {np.median(hits['warm']):.0f} vs cold "
            f"{np.median(hits['cold']):.0f} iterations, speedup {speedup:.1f}x")


def test_criterion_11_determinism():
    g = random_graph(60, 0.1, 9, signed=True)
    cfg = SolverConfig(max_iter=200_000, seed=21, noise=NoiseConfig(quant=QuantFormat(16)))
    texts = [[r.to_json() for r in solve_graph(g, MAXCUT, cfg, replicas=4, workers=w)[0]]
             for w in (1, 1, 2)]
    verdict(11, "byte-identical records across executions and worker counts",
            texts[0] == texts[1] == texts[2], f"{len(texts[0])} records x 3 executions")
