"""MAX-CUT and maximum-independent-set encodings plus instance generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import BINARY, SPIN, DimensionError, IsingProblem, check_state

DEFAULT_MIS_BETA = 0.75


class GraphError(ValueError):
    """Invalid edge list."""


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph with integer edge weights, stored as ``(i, j, w)`` with ``i < j``."""

    n: int
    edges: np.ndarray
    name: str = ""
    _adj: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        e = np.asarray(self.edges)
        if e.size == 0:
            e = np.zeros((0, 3), dtype=np.int64)
        if e.ndim != 2 or e.shape[1] != 3:
            raise GraphError("edges must be an (m, 3) array of (i, j, w)")
        e = e.astype(np.int64)
        i, j = e[:, 0], e[:, 1]
        if np.any(i == j):
            k = int(np.flatnonzero(i == j)[0])
            raise GraphError(f"self-loop on vertex {i[k]} (edge {k})")
        if np.any((i < 0) | (j < 0) | (i >= self.n) | (j >= self.n)):
            raise GraphError(f"edge endpoint outside [0, {self.n})")
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        e = np.column_stack([lo, hi, e[:, 2]])
        keys = lo * self.n + hi
        uniq, counts = np.unique(keys, return_counts=True)
        if np.any(counts > 1):
            dup = int(uniq[counts > 1][0])
            raise GraphError(f"duplicate edge ({dup // self.n}, {dup % self.n})")
        adj = sp.csr_matrix((np.concatenate([e[:, 2], e[:, 2]]).astype(np.float64),
                             (np.concatenate([lo, hi]), np.concatenate([hi, lo]))),
                            shape=(self.n, self.n))
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "_adj", adj)

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    @property
    def adjacency(self) -> sp.csr_matrix:
        return self._adj

    @property
    def total_weight(self) -> int:
        return int(self.edges[:, 2].sum())

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, :2].ravel(), minlength=self.n)

    def is_unweighted(self) -> bool:
        return bool(np.all(self.edges[:, 2] == 1))

    @classmethod
    def from_edges(cls, n, edges, name: str = "") -> "WeightedGraph":
        return cls(int(n), np.asarray(list(edges), dtype=np.int64).reshape(-1, 3), name)


@dataclass(frozen=True)
class CutSolution:
    partition: np.ndarray
    cut_value: int


@dataclass(frozen=True)
class MisSolution:
    members: np.ndarray
    size: int
    feasible: bool
    violations: int = 0


# ---------------------------------------------------------------- MAX-CUT


def maxcut_encode(g: WeightedGraph) -> IsingProblem:
    """Spin problem with ``Q_ij = w_ij``; energy ``H = sum_{i<j} w_ij s_i s_j``."""
    return IsingProblem(g.adjacency, None, SPIN, name=g.name)


def cut_value(g: WeightedGraph, s) -> int:
    s = np.asarray(s)
    if s.shape != (g.n,):
        raise DimensionError(f"partition has shape {s.shape}, expected ({g.n},)")
    e = g.edges
    return int(e[s[e[:, 0]] != s[e[:, 1]], 2].sum())


def maxcut_decode(g: WeightedGraph, s) -> CutSolution:
    s = check_state(maxcut_encode(g), s) if g.n else np.asarray(s)
    return CutSolution(s, cut_value(g, s))


def cut_from_energy(g: WeightedGraph, h: float) -> float:
    """``cut = (W - H) / 2`` where ``W`` is the total edge weight."""
    return 0.5 * (g.total_weight - h)


def energy_from_cut(g: WeightedGraph, cut: float) -> float:
    return g.total_weight - 2.0 * cut


# ---------------------------------------------------------------- MIS


def mis_encode(g: WeightedGraph, beta: float = DEFAULT_MIS_BETA) -> IsingProblem:
    """Binary problem with ``Q_ii = -1`` and ``Q_ij = Q_ji = beta`` on each edge.

    The energy ``1/2 x^T Q x`` equals ``-(|x| - 2 beta * violations) / 2``.
    Dropping one endpoint of a violated edge changes it by ``1/2 - beta``
    or less, so any ``beta > 1/2`` makes every optimum an independent set.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if not g.is_unweighted():
        raise GraphError("MIS encoding expects an unweighted graph")
    e = g.edges
    rows = np.concatenate([e[:, 0], e[:, 1], np.arange(g.n)])
    cols = np.concatenate([e[:, 1], e[:, 0], np.arange(g.n)])
    vals = np.concatenate([np.full(2 * g.m, beta), -np.ones(g.n)])
    q = sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    return IsingProblem(q, None, BINARY, name=g.name)


def mis_objective(g: WeightedGraph, x, beta: float = DEFAULT_MIS_BETA) -> float:
    """Penalized size ``|x| - 2 beta * (violated edges)``, i.e. ``-2 * energy``."""
    x = np.asarray(x)
    return float(x.sum() - 2.0 * beta * _violations(g, x))


def _violations(g: WeightedGraph, x) -> int:
    e = g.edges
    return int(np.count_nonzero((x[e[:, 0]] == 1) & (x[e[:, 1]] == 1)))


def repair_independent_set(g: WeightedGraph, x) -> np.ndarray:
    """Drop the lower-degree endpoint of each violated edge until none remain.

    Ties go to the higher vertex index. Each removal clears at least one
    violation, so at most ``m`` removals happen.
    """
    out = np.array(x, dtype=np.int8, copy=True)
    deg = g.degrees()
    for i, j, _ in g.edges:
        if out[i] and out[j]:
            if deg[i] != deg[j]:
                drop = i if deg[i] < deg[j] else j
            else:
                drop = max(i, j)
            out[drop] = 0
    return out


def mis_decode(g: WeightedGraph, x, repair: bool = False) -> MisSolution:
    x = np.asarray(x)
    if x.shape != (g.n,):
        raise DimensionError(f"state has shape {x.shape}, expected ({g.n},)")
    if not np.all(np.isin(x, (0, 1))):
        raise ValueError("MIS states are binary")
    x = x.astype(np.int8)
    if repair:
        x = repair_independent_set(g, x)
    viol = _violations(g, x)
    return MisSolution(x, int(x.sum()), viol == 0, viol)


# ---------------------------------------------------------------- generators


def random_graph(n: int, p: float, seed: int, signed: bool = False, name: str = "") -> WeightedGraph:
    """Erdos-Renyi ``G(n, p)``; weights are +1, or uniform +/-1 when ``signed``."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    w = rng.choice(np.array([-1, 1]), keep.sum()) if signed else np.ones(keep.sum(), dtype=np.int64)
    return WeightedGraph(n, np.column_stack([iu[keep], ju[keep], w]), name or f"er{n}-{p:g}-{seed}")


def toroidal_grid(rows: int, cols: int, seed: int, signed: bool = True, name: str = "") -> WeightedGraph:
    """``rows x cols`` grid with wrap-around in both directions.

    Vertex ``(r, c)`` has index ``c * rows + r``. With ``rows = 8`` and
    ``cols = 100`` this is the layout of the toroidal Gset graphs (800 nodes,
    1600 edges, weights +/-1).
    """
    if rows < 3 or cols < 3:
        raise ValueError("toroidal grid needs at least 3 rows and 3 columns")
    rng = np.random.default_rng(seed)
    idx = np.arange(rows * cols).reshape(cols, rows)
    vert = np.column_stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()])
    horiz = np.column_stack([idx.ravel(), np.roll(idx, -1, axis=0).ravel()])
    pairs = np.vstack([vert, horiz])
    w = rng.choice(np.array([-1, 1]), len(pairs)) if signed else np.ones(len(pairs), dtype=np.int64)
    return WeightedGraph(rows * cols, np.column_stack([pairs, w]), name or f"torus{rows}x{cols}-{seed}")


def _planar_edges(n: int, density: float, rng) -> set:
    from scipy.spatial import Delaunay

    pts = rng.random((n, 2))
    tri = Delaunay(pts)
    edges = set()
    for a, b, c in tri.simplices:
        for u, v in ((a, b), (b, c), (a, c)):
            edges.add((min(u, v), max(u, v)))
    edges = sorted(edges)
    keep = rng.random(len(edges)) < density
    return {e for e, k in zip(edges, keep) if k}


def planar_union(n: int, seed: int, density: float = 0.99, layers: int = 2, name: str = "") -> WeightedGraph:
    """Union of ``layers`` random near-maximal planar graphs, unit weights.

    Each layer is a Delaunay triangulation of random points with each edge
    kept with probability ``density``. Shared edges appear once. At
    ``n = 800`` this yields about 4.7k edges, the size class of the planar
    Gset instances.
    """
    rng = np.random.default_rng(seed)
    edges = set()
    for _ in range(layers):
        edges |= _planar_edges(n, density, rng)
    arr = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return WeightedGraph(n, np.column_stack([arr, np.ones(len(arr), dtype=np.int64)]),
                         name or f"planar{n}-{seed}")


def random_spin_problem(n: int, p: float, seed: int) -> IsingProblem:
    """Random +/-1 couplings on ``G(n, p)``, zero bias."""
    return maxcut_encode(random_graph(n, p, seed, signed=True))


def ten_node_instance(seed: int = 0) -> WeightedGraph:
    """Small 10-node frustrated instance with a unique ground-state gauge pair.

    Random signed graphs are drawn until exhaustive search finds exactly two
    ground states; ``seed`` picks the first candidate.
    """
    from .oracle import brute_force

    k = seed
    while True:
        g = random_graph(10, 0.5, k, signed=True, name=f"ten-node-{k}")
        if g.m and brute_force(maxcut_encode(g)).optima_count == 2:
            return g
        k += 1


# ---------------------------------------------------------------- complexity metrics


def average_fanout(g: WeightedGraph) -> float:
    return 2.0 * g.m / g.n


def degree_entropy(g: WeightedGraph) -> float:
    """Shannon entropy (nats) of the empirical degree distribution."""
    deg = g.degrees()
    _, counts = np.unique(deg, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def transitivity(g: WeightedGraph) -> float:
    """``3 * triangles / connected triples``; 0 for triangle-free graphs."""
    a = (g.adjacency != 0).astype(np.float64).tocsr()
    closed = float((a @ a).multiply(a).sum())  # 6 * triangles
    deg = g.degrees().astype(np.float64)
    triples = float((deg * (deg - 1)).sum())  # 2 * connected triples
    return closed / triples if triples else 0.0


def complexity_metrics(g: WeightedGraph) -> dict:
    return {
        "nodes": g.n,
        "edges": g.m,
        "average_fanout": average_fanout(g),
        "degree_entropy": degree_entropy(g),
        "transitivity": transitivity(g),
    }
