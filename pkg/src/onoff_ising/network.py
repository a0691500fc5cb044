"""Network of ON-OFF integrate-and-fire neuron pairs driven by a noisy threshold.

Each variable is a pair of neurons with state bits ``s_plus``/``s_minus``
(spin = ``s_plus - s_minus``) and membrane potentials holding the negated and
the plain local field. The ON unit may fire only while the spin is -1, the
OFF unit only while it is +1; a spike flips the spin and is broadcast to the
neighbours as a ``-/+ 2 Q_jp`` potential update.

Binary problems are rewritten over spins, and a linear term is carried by a
static neuron pinned at +1 (index 0 of the network) that never fires.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numba import njit

from .annealer import (
    COLD_RESTART,
    CONSTANT,
    EXPONENTIAL,
    GAUSSIAN,
    AnnealSchedule,
    NoiseConfig,
    _draw_bernoulli,
    _draw_noise,
    _quantize,
    _temperature,
    temperature,
)
from .core import BINARY, SPIN, IsingProblem, energy, fold_bias, spins_to_bits, to_spin
from .gain import GainTracker

SELECT_THEN_TEST = "select-then-test"
TEST_THEN_SELECT = "test-then-select"
ARBITERS = (SELECT_THEN_TEST, TEST_THEN_SELECT)

ON = 1
OFF = -1


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.

    ``A`` is only used by the hardware-faithful neuron (``hardware=True``),
    where it couples the two units of a pair and gates firing through the
    Bernoulli term of the threshold. ``trace_every=0`` samples the energy
    about a thousand times per run. ``stop_ratio`` enables the
    time-per-unit-gain stopping rule, checked every ``check_every``
    iterations.
    """

    max_iter: int = 1_000_000
    seed: int = 0
    arbiter: str = SELECT_THEN_TEST
    A: float = 1.0e6
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    trace_every: int = 0
    hardware: bool = False
    record_spikes: bool = True
    max_spikes: int = 1_000_000
    stop_ratio: Optional[float] = None
    gain_unit: Optional[float] = None
    check_every: int = 1 << 20

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if self.arbiter not in ARBITERS:
            raise ValueError(f"arbiter must be one of {ARBITERS}, got {self.arbiter!r}")
        if not self.A > 0:
            raise ValueError("A must be positive")
        if self.trace_every < 0:
            raise ValueError("trace_every must be non-negative")
        if self.stop_ratio is not None and not 0 < self.stop_ratio <= 1:
            raise ValueError("stop_ratio must lie in (0, 1]")
        if self.check_every < 1:
            raise ValueError("check_every must be positive")

    @property
    def sample_stride(self) -> int:
        if self.trace_every:
            return self.trace_every
        return max(1, self.max_iter // 1000)

    def with_seed(self, seed: int) -> "SolverConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class SpikeEvent:
    iteration: int
    neuron: int
    direction: int
    delta_h: float


@dataclass
class NetworkState:
    """Mutable neuron-pair state of one solver instance.

    ``problem`` is the spin-domain network problem (static neuron included);
    ``source`` is the problem the caller handed in. ``shift`` is the index
    offset between the two (1 when a static neuron was added).
    """

    problem: IsingProblem
    source: IsingProblem
    shift: int
    s_plus: np.ndarray
    s_minus: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    free: np.ndarray
    rng: np.random.Generator
    hardware: bool
    A: float
    iteration: int = 0
    energy: float = 0.0
    best_energy: float = 0.0
    best_spins: Optional[np.ndarray] = None
    best_iteration: int = 0
    spike_total: int = 0

    @property
    def spins(self) -> np.ndarray:
        return (self.s_plus - self.s_minus).astype(np.int8)

    @property
    def frozen(self) -> np.ndarray:
        mask = np.ones(self.problem.dim, dtype=bool)
        mask[self.free] = False
        return mask

    def to_source(self, spins) -> np.ndarray:
        s = np.asarray(spins, dtype=np.int8)[self.shift:]
        return spins_to_bits(s) if self.source.domain == BINARY else s.copy()

    def source_state(self) -> np.ndarray:
        return self.to_source(self.spins)

    def rest_potentials(self) -> tuple[np.ndarray, np.ndarray]:
        """Potentials recomputed from scratch for the current spins."""
        h = _offdiag_field(self.problem, self.spins)
        vp, vm = -h, h.copy()
        if self.hardware:
            vp = vp - self.A * self.s_plus
            vm = vm - self.A * self.s_minus
        return vp, vm


def _offdiag_field(problem: IsingProblem, spins) -> np.ndarray:
    q = problem.couplings
    s = np.asarray(spins, dtype=np.float64)
    return np.asarray(q @ s).ravel() - problem.diagonal * s


def network_problem(problem: IsingProblem) -> tuple[IsingProblem, int]:
    """Spin-domain, bias-free problem the neurons run on, plus index shift."""
    spin = to_spin(problem)
    if spin.bias is None:
        return spin, 0
    folded, _ = fold_bias(spin)
    return folded, 1


def required_A(problem: IsingProblem, cfg: SolverConfig) -> float:
    """Smallest ``A`` for which the hardware-faithful gating is exact."""
    net, _ = network_problem(problem)
    q = abs(net.couplings).tocsr()
    row = np.asarray(q.sum(axis=1)).ravel() - np.abs(net.diagonal)
    sched = cfg.schedule
    if sched.kind == CONSTANT:
        tmax = sched.T0
    elif sched.kind == COLD_RESTART:
        tmax = max(sched.effective_cold_T, sched.T0 / np.log1p(sched.dt / sched.C))
    else:
        tmax = temperature(sched, 1)
    noise = cfg.noise
    if noise.dist == EXPONENTIAL:
        nmax = abs(noise.scale) * max(abs(np.log(noise.effective_eps)),
                                      abs(np.log(1.0 / noise.B + noise.effective_eps)))
    elif noise.dist == GAUSSIAN:
        nmax = abs(noise.target_mean) + 10.0
    else:
        nmax = abs(noise.target_mean) + 1.0
    return float(2.0 * row.max(initial=0.0) + tmax * nmax)


def init_network(problem: IsingProblem, cfg: SolverConfig, initial=None) -> NetworkState:
    """Build the neuron pairs for ``problem`` at rest.

    ``initial`` is a state in the problem's own domain; by default every
    variable starts "on" (spin +1), as in the reference pseudo-code.
    """
    if not isinstance(problem, IsingProblem):
        raise TypeError("init_network expects an IsingProblem (couplings are symmetrized on construction)")
    if cfg.hardware and cfg.A <= required_A(problem, cfg):
        raise ValueError(
            f"A={cfg.A:g} is too small for exact gating; need more than {required_A(problem, cfg):.6g}"
        )
    net, shift = network_problem(problem)
    n = net.dim
    spins = np.ones(n, dtype=np.int8)
    if initial is not None:
        src = np.asarray(initial)
        if src.shape != (problem.dim,):
            raise ValueError(f"initial state has shape {src.shape}, expected ({problem.dim},)")
        allowed = (0, 1) if problem.domain == BINARY else (-1, 1)
        if not np.all(np.isin(src, allowed)):
            raise ValueError(f"initial state entries must be in {allowed}")
        s = (2 * src - 1) if problem.domain == BINARY else src
        spins[shift:] = s
    free = net.free_indices
    frozen = np.ones(n, dtype=bool)
    frozen[free] = False
    if np.any(spins[frozen] != 1):
        raise ValueError("frozen variables must start at their on value")
    s_plus = (spins == 1).astype(np.int8)
    s_minus = (spins == -1).astype(np.int8)
    state = NetworkState(
        problem=net, source=problem, shift=shift, s_plus=s_plus, s_minus=s_minus,
        v_plus=np.zeros(n), v_minus=np.zeros(n), free=free,
        rng=np.random.Generator(np.random.PCG64(cfg.seed)),
        hardware=cfg.hardware, A=float(cfg.A),
    )
    state.v_plus, state.v_minus = state.rest_potentials()
    state.energy = energy(net, spins)
    state.best_energy = state.energy
    state.best_spins = spins.copy()
    return state


@njit(cache=True)
def _run_chunk(indptr, indices, data, free, sp, sm, vp, vm, rng,
               sched, noise, fmt, a_const, hardware, arbiter, start, stop,
               fstate, counters, best_state,
               spk_it, spk_nrn, spk_dir, spk_dh, imp_it, imp_val,
               stride, tr_it, tr_e, tr_best, tr_thr, tr_act, act_buf, act_dir):
    nfree = free.shape[0]
    eta = noise[5]
    ebits = fmt[0]
    mbits = fmt[1]
    energy = fstate[0]
    best = fstate[1]
    for n in range(start + 1, stop + 1):
        temp = _temperature(sched, float(n))
        p = -1
        direction = 0
        mu_rec = 0.0
        active = -1
        if arbiter == 0:
            q = free[rng.integers(0, nfree)]
            nz = _draw_noise(rng, noise)
            bern = 0
            if hardware:
                bern = _draw_bernoulli(rng, eta)
            mu = _quantize(temp * nz + a_const * bern, ebits, mbits)
            mu_rec = mu
            if hardware:
                if vp[q] > mu:
                    p = q
                    direction = 1
                elif vm[q] > mu:
                    p = q
                    direction = -1
            else:
                if sp[q] == 0 and vp[q] > mu:
                    p = q
                    direction = 1
                elif sm[q] == 0 and vm[q] > mu:
                    p = q
                    direction = -1
        else:
            count = 0
            for k in range(nfree):
                q = free[k]
                nz = _draw_noise(rng, noise)
                bern = 0
                if hardware:
                    bern = _draw_bernoulli(rng, eta)
                mu = _quantize(temp * nz + a_const * bern, ebits, mbits)
                if k == 0:
                    mu_rec = mu
                fire = 0
                if hardware:
                    if vp[q] > mu:
                        fire = 1
                    elif vm[q] > mu:
                        fire = -1
                else:
                    if sp[q] == 0 and vp[q] > mu:
                        fire = 1
                    elif sm[q] == 0 and vm[q] > mu:
                        fire = -1
                if fire != 0:
                    act_buf[count] = q
                    act_dir[count] = fire
                    count += 1
            u = rng.random()
            active = count
            if count > 0:
                j = int(u * count)
                if j >= count:
                    j = count - 1
                p = act_buf[j]
                direction = act_dir[j]
        if p >= 0:
            if direction == 1:
                dh = -2.0 * vp[p]
                sp[p] = 1
                sm[p] = 0
            else:
                dh = -2.0 * vm[p]
                sp[p] = 0
                sm[p] = 1
            for idx in range(indptr[p], indptr[p + 1]):
                j = indices[idx]
                if j != p:
                    delta = 2.0 * data[idx] * direction
                    vp[j] -= delta
                    vm[j] += delta
            if hardware:
                # RESET by subtraction on the firing unit, excitatory A onto its partner
                if direction == 1:
                    vp[p] -= a_const
                    vm[p] += a_const
                else:
                    vm[p] -= a_const
                    vp[p] += a_const
            energy += dh
            c = counters[1]
            if c < spk_it.shape[0]:
                spk_it[c] = n
                spk_nrn[c] = p
                spk_dir[c] = direction
                spk_dh[c] = dh
                counters[1] = c + 1
            counters[0] += 1
            if energy < best:
                best = energy
                for i in range(sp.shape[0]):
                    best_state[i] = sp[i] - sm[i]
                c = counters[2]
                if c < imp_it.shape[0]:
                    imp_it[c] = n
                    imp_val[c] = energy
                    counters[2] = c + 1
                fstate[2] = n
        if stride > 0 and n % stride == 0:
            c = counters[3]
            if c < tr_it.shape[0]:
                tr_it[c] = n
                tr_e[c] = energy
                tr_best[c] = best
                tr_thr[c] = mu_rec
                tr_act[c] = active
                counters[3] = c + 1
    fstate[0] = energy
    fstate[1] = best


@dataclass
class RunTrace:
    """Everything recorded during one run.

    States are in the domain of the problem that was solved. Spike neuron
    indices refer to that problem's variables. ``samples`` columns are
    iteration, current energy, best energy, threshold and active-neuron
    count (-1 when not measured).
    """

    name: str
    seed: int
    iterations: int
    initial_energy: float
    best_energy: float
    best_state: np.ndarray
    best_iteration: int
    final_energy: float
    final_state: np.ndarray
    spike_count: int
    spike_iteration: np.ndarray
    spike_neuron: np.ndarray
    spike_direction: np.ndarray
    spike_delta_h: np.ndarray
    spikes_truncated: bool
    improvement_iteration: np.ndarray
    improvement_value: np.ndarray
    sample_iteration: np.ndarray
    sample_energy: np.ndarray
    sample_best: np.ndarray
    sample_threshold: np.ndarray
    sample_active: np.ndarray
    stopped_early: bool = False
    wall_time: float = 0.0

    def spikes(self):
        for it, nrn, d, dh in zip(self.spike_iteration, self.spike_neuron,
                                  self.spike_direction, self.spike_delta_h):
            yield SpikeEvent(int(it), int(nrn), int(d), float(dh))

    def gain_tracker(self, unit: Optional[float] = None) -> GainTracker:
        tracker = GainTracker(unit=unit)
        tracker.extend(self.improvement_iteration, self.improvement_value)
        return tracker


class _Buffers:
    def __init__(self, state: NetworkState, cfg: SolverConfig, n_iter: int):
        n = state.problem.dim
        spike_cap = min(cfg.max_spikes, n_iter) if cfg.record_spikes else 0
        self.stride = cfg.sample_stride
        self.spk_it = np.zeros(spike_cap, dtype=np.int64)
        self.spk_nrn = np.zeros(spike_cap, dtype=np.int64)
        self.spk_dir = np.zeros(spike_cap, dtype=np.int8)
        self.spk_dh = np.zeros(spike_cap, dtype=np.float64)
        imp_cap = min(n_iter, 1 << 20)
        self.imp_it = np.zeros(imp_cap, dtype=np.int64)
        self.imp_val = np.zeros(imp_cap, dtype=np.float64)
        tr_cap = n_iter // self.stride + 1
        self.tr_it = np.zeros(tr_cap, dtype=np.int64)
        self.tr_e = np.zeros(tr_cap)
        self.tr_best = np.zeros(tr_cap)
        self.tr_thr = np.zeros(tr_cap)
        self.tr_act = np.zeros(tr_cap, dtype=np.int64)
        self.act_buf = np.zeros(n, dtype=np.int64)
        self.act_dir = np.zeros(n, dtype=np.int8)
        self.counters = np.zeros(4, dtype=np.int64)


def _advance(state: NetworkState, cfg: SolverConfig, n_iter: int, buf: _Buffers) -> None:
    indptr, indices, data = state.problem.csr_arrays()
    fstate = np.array([state.energy, state.best_energy, float(state.best_iteration)])
    fmt = cfg.noise.quant.packed() if cfg.noise.quant is not None else np.zeros(2, dtype=np.int64)
    spikes_before = buf.counters[0]
    _run_chunk(
        indptr, indices, data, state.free, state.s_plus, state.s_minus,
        state.v_plus, state.v_minus, state.rng,
        cfg.schedule.packed(), cfg.noise.packed(), fmt, float(cfg.A),
        bool(cfg.hardware), ARBITERS.index(cfg.arbiter),
        state.iteration, state.iteration + n_iter,
        fstate, buf.counters, state.best_spins,
        buf.spk_it, buf.spk_nrn, buf.spk_dir, buf.spk_dh, buf.imp_it, buf.imp_val,
        buf.stride, buf.tr_it, buf.tr_e, buf.tr_best, buf.tr_thr, buf.tr_act,
        buf.act_buf, buf.act_dir,
    )
    state.iteration += n_iter
    state.energy = float(fstate[0])
    state.best_energy = float(fstate[1])
    state.best_iteration = int(fstate[2])
    state.spike_total += int(buf.counters[0] - spikes_before)


def step(state: NetworkState, cfg: SolverConfig) -> Optional[SpikeEvent]:
    """Advance one iteration; return the spike it produced, if any."""
    buf = _Buffers(state, replace(cfg, record_spikes=True, max_spikes=1, trace_every=1), 1)
    _advance(state, cfg, 1, buf)
    if buf.counters[1] == 0:
        return None
    return SpikeEvent(int(buf.spk_it[0]), int(buf.spk_nrn[0]) - state.shift,
                      int(buf.spk_dir[0]), float(buf.spk_dh[0]))


def run(problem: IsingProblem, cfg: SolverConfig, initial=None) -> RunTrace:
    """Execute ``cfg.max_iter`` iterations from a fresh network."""
    state = init_network(problem, cfg, initial)
    return drive(state, cfg)


def drive(state: NetworkState, cfg: SolverConfig) -> RunTrace:
    """Run ``state`` for ``cfg.max_iter`` more iterations and collect a trace."""
    t0 = time.perf_counter()
    total = cfg.max_iter
    buf = _Buffers(state, cfg, total)
    start_iter = state.iteration
    initial_energy = state.energy
    stopped = False
    if cfg.stop_ratio is None:
        if total:
            _advance(state, cfg, total, buf)
    else:
        tracker_unit = cfg.gain_unit
        done = 0
        while done < total:
            chunk = min(cfg.check_every, total - done)
            _advance(state, cfg, chunk, buf)
            done += chunk
            tracker = GainTracker(unit=tracker_unit)
            k = int(buf.counters[2])
            tracker.extend(buf.imp_it[:k] - start_iter, buf.imp_val[:k])
            r = tracker.ratio(done)
            if r is not None and r > cfg.stop_ratio and done < total:
                stopped = True
                break
    shift = state.shift
    ns = int(buf.counters[1])
    ni = int(buf.counters[2])
    nt = int(buf.counters[3])
    sample_it = np.concatenate([[start_iter], buf.tr_it[:nt]])
    sample_e = np.concatenate([[initial_energy], buf.tr_e[:nt]])
    sample_best = np.concatenate([[initial_energy], buf.tr_best[:nt]])
    sample_thr = np.concatenate([[np.nan], buf.tr_thr[:nt]])
    sample_act = np.concatenate([[-1], buf.tr_act[:nt]])
    return RunTrace(
        name=state.source.name,
        seed=-1,
        iterations=state.iteration - start_iter,
        initial_energy=initial_energy,
        best_energy=state.best_energy,
        best_state=state.to_source(state.best_spins),
        best_iteration=state.best_iteration,
        final_energy=state.energy,
        final_state=state.source_state(),
        spike_count=int(buf.counters[0]),
        spike_iteration=buf.spk_it[:ns].copy(),
        spike_neuron=buf.spk_nrn[:ns] - shift,
        spike_direction=buf.spk_dir[:ns].copy(),
        spike_delta_h=buf.spk_dh[:ns].copy(),
        spikes_truncated=bool(buf.counters[0] > ns),
        improvement_iteration=buf.imp_it[:ni].copy(),
        improvement_value=buf.imp_val[:ni].copy(),
        sample_iteration=sample_it.astype(np.int64),
        sample_energy=sample_e,
        sample_best=sample_best,
        sample_threshold=sample_thr,
        sample_active=sample_act.astype(np.int64),
        stopped_early=stopped,
        wall_time=time.perf_counter() - t0,
    )


def derive_seed(seed: int, replica: int) -> int:
    """Seed of replica ``replica``.

    Replica 0 keeps ``seed``; replica ``k >= 1`` uses the first 64-bit word of
    ``numpy.random.SeedSequence([seed, k])`` masked to 63 bits.
    """
    if replica == 0:
        return int(seed)
    word = np.random.SeedSequence([int(seed) & (2**64 - 1), int(replica)]).generate_state(1, np.uint64)[0]
    return int(word) & (2**63 - 1)


def _run_seeded(args):
    problem, cfg = args
    trace = run(problem, cfg)
    trace.seed = cfg.seed
    return trace


def run_parallel(problem: IsingProblem, cfg: SolverConfig, replicas: int,
                 workers: int = 1) -> list:
    """Independent replicas with seeds from :func:`derive_seed`.

    Results are returned in replica order and do not depend on ``workers``.
    """
    if replicas < 1:
        raise ValueError("replicas must be at least 1")
    jobs = [(problem, cfg.with_seed(derive_seed(cfg.seed, k))) for k in range(replicas)]
    if workers <= 1 or replicas == 1:
        return [_run_seeded(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_seeded, jobs))


def solve(problem: IsingProblem, cfg: SolverConfig, initial=None) -> RunTrace:
    """:func:`run` with the seed stamped on the trace."""
    trace = run(problem, cfg, initial)
    trace.seed = cfg.seed
    return trace


__all__ = [
    "ARBITERS", "ON", "OFF", "SELECT_THEN_TEST", "TEST_THEN_SELECT", "SPIN",
    "NetworkState", "RunTrace", "SolverConfig", "SpikeEvent",
    "derive_seed", "drive", "init_network", "network_problem", "required_A",
    "run", "run_parallel", "solve", "step",
]
