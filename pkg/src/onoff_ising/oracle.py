"""Exact and reference solvers used to check the network.

``brute_force`` enumerates every assignment of the free variables in Gray
code order. ``reference_sa`` is a textbook single-flip annealer that consumes
random numbers in the same order as the network's select-then-test arbiter,
so the two can be compared flip by flip.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .annealer import AnnealSchedule, NoiseConfig, _draw_noise, _quantize, _temperature
from .core import BINARY, IsingProblem, energy, spins_to_bits, to_spin
from .network import RunTrace

MAX_BRUTE_FORCE_DIM = 26


class OracleSizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OracleResult:
    best_state: np.ndarray
    best_value: float
    optima_count: int


@njit(cache=True)
def _gray_enumerate(indptr, indices, data, bias, free, spins, tol):
    n = spins.shape[0]
    nfree = free.shape[0]
    field = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                acc += data[k] * spins[j]
        field[i] = acc
    e = 0.0
    for i in range(n):
        e += 0.5 * spins[i] * field[i] + bias[i] * spins[i]
    best = e
    best_code = 0
    count = 1
    total = 1 << nfree
    for step in range(1, total):
        # index of the lowest set bit picks the variable to flip
        bit = 0
        t = step
        while (t & 1) == 0:
            t >>= 1
            bit += 1
        p = free[bit]
        sp_ = spins[p]
        e += -2.0 * sp_ * (field[p] + bias[p])
        spins[p] = -sp_
        d = -2.0 * sp_
        for k in range(indptr[p], indptr[p + 1]):
            j = indices[k]
            if j != p:
                field[j] += data[k] * d
        scale = abs(best) if abs(best) > 1.0 else 1.0
        if e < best - tol * scale:
            best = e
            best_code = step ^ (step >> 1)
            count = 1
        elif abs(e - best) <= tol * scale:
            count += 1
    return best, best_code, count


def brute_force(problem: IsingProblem, tol: float = 1e-9) -> OracleResult:
    """Exact minimum energy, one minimizer and the number of minimizers.

    Frozen variables stay at their on value and are not enumerated. States
    are reported in the problem's own domain.
    """
    free = problem.free_indices
    if free.size > MAX_BRUTE_FORCE_DIM:
        raise OracleSizeError(
            f"{free.size} free variables exceeds the enumeration limit of {MAX_BRUTE_FORCE_DIM}"
        )
    spin = to_spin(problem)
    indptr, indices, data = spin.csr_arrays()
    spins = np.ones(spin.dim)
    spins[free] = -1.0
    best, code, count = _gray_enumerate(
        indptr, indices, data, spin.bias_or_zeros(), free, spins, tol
    )
    state = np.ones(spin.dim, dtype=np.int8)
    state[free] = -1
    for k in range(free.size):
        if (code >> k) & 1:
            state[free[k]] = 1
    out = spins_to_bits(state) if problem.domain == BINARY else state
    return OracleResult(out, float(best + spin.offset), int(count))


def brute_force_cut(g) -> tuple[int, np.ndarray]:
    """Maximum cut by direct enumeration of partitions, independent of the Ising mapping."""
    n = g.n
    if n > 22:
        raise OracleSizeError("direct cut enumeration is limited to 22 vertices")
    e = g.edges
    codes = np.arange(1 << (n - 1), dtype=np.int64)  # vertex n-1 fixed on side 0
    side_i = (codes[:, None] >> e[None, :, 0]) & 1
    side_j = (codes[:, None] >> e[None, :, 1]) & 1
    cuts = ((side_i != side_j) * e[None, :, 2]).sum(axis=1)
    k = int(np.argmax(cuts))
    s = np.where((k >> np.arange(n)) & 1, 1, -1).astype(np.int8)
    return int(cuts[k]), s


def brute_force_mis(g) -> tuple[int, np.ndarray]:
    """Maximum independent set size and one maximizer (bitmask branching)."""
    n = g.n
    if n > 63:
        raise OracleSizeError("bitmask MIS search is limited to 63 vertices")
    nbr = [0] * n
    for i, j, _ in g.edges:
        nbr[i] |= 1 << int(j)
        nbr[j] |= 1 << int(i)

    @lru_cache(maxsize=None)
    def best(mask: int) -> tuple[int, int]:
        if mask == 0:
            return 0, 0
        v = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << v)
        if nbr[v] & mask == 0:
            size, chosen = best(rest)
            return size + 1, chosen | (1 << v)
        size_out, chosen_out = best(rest)
        size_in, chosen_in = best(rest & ~nbr[v])
        if size_in + 1 >= size_out:
            return size_in + 1, chosen_in | (1 << v)
        return size_out, chosen_out

    size, chosen = best((1 << n) - 1)
    x = np.array([(chosen >> i) & 1 for i in range(n)], dtype=np.int8)
    return size, x


@njit(cache=True)
def _torus_dp(intra, cross, rows, cols, start, back):
    """Min-plus transfer over columns with column 0 pinned to ``start``."""
    k = 1 << rows
    f = np.full(k, np.inf)
    f[start] = intra[0, start]
    for c in range(1, cols):
        g = np.empty(k)
        for b in range(k):
            best = np.inf
            arg = 0
            for a in range(k):
                v = f[a] + cross[c - 1, a ^ b]
                if v < best:
                    best = v
                    arg = a
            g[b] = best + intra[c, b]
            back[c, b] = arg
        f = g
    best = np.inf
    last = 0
    for b in range(k):
        v = f[b] + cross[cols - 1, b ^ start]
        if v < best:
            best = v
            last = b
    return best, last


def torus_ground_state(g, rows: int, cols: int) -> OracleResult:
    """Exact ground state of a spin problem on a ``rows x cols`` torus.

    Vertex ``(r, c)`` must have index ``c * rows + r``. Column states are
    ``rows``-bit masks (bit set means spin -1) and the periodic chain of
    columns is solved by min-plus transfer for each state of column 0 with
    bit 0 clear (the other half follows from the global spin flip).
    """
    if rows > 12:
        raise OracleSizeError("transfer-matrix width is limited to 12 rows")
    adj = g.adjacency.tocsr()
    k = 1 << rows
    masks = np.arange(k)
    bits = ((masks[:, None] >> np.arange(rows)[None, :]) & 1).astype(np.int8)
    spins = 1 - 2 * bits
    intra = np.zeros((cols, k))
    cross = np.zeros((cols, k))
    for c in range(cols):
        wv = np.array([adj[c * rows + r, c * rows + (r + 1) % rows] for r in range(rows)])
        intra[c] = (spins * np.roll(spins, -1, axis=1) * wv).sum(axis=1)
        wh = np.array([adj[c * rows + r, ((c + 1) % cols) * rows + r] for r in range(rows)])
        # a_r b_r = 1 - 2 [bit r of a^b]
        cross[c] = wh.sum() - 2.0 * (bits * wh).sum(axis=1)
    back = np.zeros((cols, k), dtype=np.int64)
    best, best_start, best_last = np.inf, 0, 0
    for start in range(0, k, 2):
        val, last = _torus_dp(intra, cross, rows, cols, start, back)
        if val < best:
            best, best_start, best_last = val, start, last
    _torus_dp(intra, cross, rows, cols, best_start, back)
    cols_state = np.zeros(cols, dtype=np.int64)
    cols_state[-1] = best_last
    for c in range(cols - 1, 0, -1):
        cols_state[c - 1] = back[c, cols_state[c]]
    state = spins[cols_state].reshape(-1).astype(np.int8)
    return OracleResult(state, float(best), -1)


# ---------------------------------------------------------------- reference annealer


def accepts(delta_h: float, T: float, u: float, noise: NoiseConfig) -> bool:
    """Acceptance rule of the reference annealer for one uniform draw ``u``.

    A flip is taken iff ``delta_h < -2 T N(u)`` with
    ``N(u) = scale * log(u / B + eps)``; the network fires on the equivalent
    condition that half the energy drop exceeds ``T N(u)``.
    """
    n = noise.scale * math.log(u / noise.B + noise.effective_eps)
    fmt = noise.quant.packed() if noise.quant is not None else np.zeros(2, dtype=np.int64)
    mu = float(_quantize(T * n, fmt[0], fmt[1]))
    return bool(delta_h < -2.0 * mu)


@njit(cache=True)
def _sa_chunk(indptr, indices, data, diag, bias, binary, free, x, rng, sched, noise, fmt,
              max_iter, fstate, counters, best_state,
              acc_it, acc_var, acc_dir, acc_dh, imp_it, imp_val,
              stride, tr_it, tr_e, tr_best, tr_thr):
    nfree = free.shape[0]
    e = fstate[0]
    best = fstate[1]
    for n in range(1, max_iter + 1):
        temp = _temperature(sched, float(n))
        p = free[rng.integers(0, nfree)]
        nz = _draw_noise(rng, noise)
        mu = _quantize(temp * nz, fmt[0], fmt[1])
        h = 0.0
        for k in range(indptr[p], indptr[p + 1]):
            j = indices[k]
            if j != p:
                h += data[k] * x[j]
        if binary:
            d = 1.0 - 2.0 * x[p]
            dh = d * (h + 0.5 * diag[p] + bias[p])
        else:
            dh = -2.0 * x[p] * (h + bias[p])
        if dh < -2.0 * mu:
            if binary:
                x[p] = 1.0 - x[p]
                direction = 1 if x[p] == 1.0 else -1
            else:
                x[p] = -x[p]
                direction = 1 if x[p] == 1.0 else -1
            e += dh
            c = counters[1]
            if c < acc_it.shape[0]:
                acc_it[c] = n
                acc_var[c] = p
                acc_dir[c] = direction
                acc_dh[c] = dh
                counters[1] = c + 1
            counters[0] += 1
            if e < best:
                best = e
                for i in range(x.shape[0]):
                    best_state[i] = x[i]
                c = counters[2]
                if c < imp_it.shape[0]:
                    imp_it[c] = n
                    imp_val[c] = e
                    counters[2] = c + 1
                fstate[2] = n
        if stride > 0 and n % stride == 0:
            c = counters[3]
            if c < tr_it.shape[0]:
                tr_it[c] = n
                tr_e[c] = e
                tr_best[c] = best
                tr_thr[c] = mu
                counters[3] = c + 1
    fstate[0] = e
    fstate[1] = best


def reference_sa(problem: IsingProblem, schedule: AnnealSchedule, noise: NoiseConfig,
                 seed: int, max_iter: int, trace_every: int = 0, max_flips: int = 1_000_000,
                 initial=None) -> RunTrace:
    """Single-flip annealer with the energy change recomputed from row ``p``.

    Draw order per iteration: variable index, then threshold noise. The
    start state is all variables on unless ``initial`` is given.
    """
    t0 = time.perf_counter()
    free = problem.free_indices
    x = np.ones(problem.dim)
    if initial is not None:
        x = np.asarray(initial, dtype=np.float64).copy()
    e0 = energy(problem, x.astype(np.int8))
    indptr, indices, data = problem.csr_arrays()
    rng = np.random.Generator(np.random.PCG64(seed))
    fmt = noise.quant.packed() if noise.quant is not None else np.zeros(2, dtype=np.int64)
    stride = trace_every or max(1, max_iter // 1000)
    cap = min(max_flips, max_iter)
    acc_it = np.zeros(cap, dtype=np.int64)
    acc_var = np.zeros(cap, dtype=np.int64)
    acc_dir = np.zeros(cap, dtype=np.int8)
    acc_dh = np.zeros(cap)
    imp_cap = min(max_iter, 1 << 20)
    imp_it = np.zeros(imp_cap, dtype=np.int64)
    imp_val = np.zeros(imp_cap)
    tr_cap = max_iter // stride + 1
    tr_it = np.zeros(tr_cap, dtype=np.int64)
    tr_e, tr_best, tr_thr = np.zeros(tr_cap), np.zeros(tr_cap), np.zeros(tr_cap)
    fstate = np.array([e0, e0, 0.0])
    counters = np.zeros(4, dtype=np.int64)
    best_state = x.copy()
    _sa_chunk(indptr, indices, data, problem.diagonal, problem.bias_or_zeros(),
              problem.domain == BINARY, free, x, rng, schedule.packed(), noise.packed(), fmt,
              int(max_iter), fstate, counters, best_state,
              acc_it, acc_var, acc_dir, acc_dh, imp_it, imp_val,
              stride, tr_it, tr_e, tr_best, tr_thr)
    na, ni, nt = (int(c) for c in counters[1:4])
    return RunTrace(
        name=problem.name, seed=int(seed), iterations=int(max_iter),
        initial_energy=e0, best_energy=float(fstate[1]),
        best_state=best_state.astype(np.int8), best_iteration=int(fstate[2]),
        final_energy=float(fstate[0]), final_state=x.astype(np.int8),
        spike_count=int(counters[0]),
        spike_iteration=acc_it[:na].copy(), spike_neuron=acc_var[:na].copy(),
        spike_direction=acc_dir[:na].copy(), spike_delta_h=acc_dh[:na].copy(),
        spikes_truncated=bool(counters[0] > na),
        improvement_iteration=imp_it[:ni].copy(), improvement_value=imp_val[:ni].copy(),
        sample_iteration=np.concatenate([[0], tr_it[:nt]]).astype(np.int64),
        sample_energy=np.concatenate([[e0], tr_e[:nt]]),
        sample_best=np.concatenate([[e0], tr_best[:nt]]),
        sample_threshold=np.concatenate([[np.nan], tr_thr[:nt]]),
        sample_active=np.full(nt + 1, -1, dtype=np.int64),
        wall_time=time.perf_counter() - t0,
    )


__all__ = [
    "MAX_BRUTE_FORCE_DIM", "OracleResult", "OracleSizeError", "accepts",
    "brute_force", "brute_force_cut", "brute_force_mis", "reference_sa",
    "torus_ground_state",
]
