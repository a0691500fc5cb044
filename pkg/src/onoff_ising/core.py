"""Ising / QUBO problem representation and exact energy bookkeeping.

Energies follow ``H(s) = 1/2 s^T Q s + b^T s`` over either the spin domain
``{-1, +1}`` or the binary domain ``{0, 1}``. Couplings are kept as a CSR
matrix, i.e. one (index, weight) adjacency list per row, so a single-flip
energy change only touches one row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

SPIN = "spin"
BINARY = "binary"
DOMAINS = (SPIN, BINARY)


class DimensionError(ValueError):
    """Raised for non-square or mis-sized inputs."""


def symmetrize(raw) -> sp.csr_matrix:
    """Return ``(M + M^T) / 2`` as a canonical CSR matrix.

    Symmetric input comes back numerically unchanged.
    """
    m = sp.csr_matrix(raw, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"coupling matrix must be square, got {m.shape}")
    sym = ((m + m.T) * 0.5).tocsr()
    sym.eliminate_zeros()
    sym.sort_indices()
    return sym


@dataclass(frozen=True, eq=False)
class IsingProblem:
    """Quadratic problem over spins or bits.

    ``couplings`` is symmetrized on construction. ``frozen`` optionally marks
    variables pinned at their "on" value (+1 for spins); they are never
    flipped by the solvers and are skipped by the oracle.
    """

    couplings: sp.csr_matrix
    bias: Optional[np.ndarray] = None
    domain: str = SPIN
    frozen: Optional[np.ndarray] = None
    name: str = ""
    offset: float = 0.0
    _diag: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        q = symmetrize(self.couplings)
        n = q.shape[0]
        if n < 1:
            raise DimensionError("problem needs at least one variable")
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        bias = None
        if self.bias is not None:
            bias = np.asarray(self.bias, dtype=np.float64).reshape(-1)
            if bias.shape != (n,):
                raise DimensionError(f"bias has length {bias.size}, expected {n}")
            if not np.any(bias):
                bias = None
        frozen = None
        if self.frozen is not None:
            frozen = np.asarray(self.frozen, dtype=bool).reshape(-1)
            if frozen.shape != (n,):
                raise DimensionError(f"frozen mask has length {frozen.size}, expected {n}")
            if frozen.all():
                raise ValueError("at least one variable must be free")
            if not frozen.any():
                frozen = None
        object.__setattr__(self, "couplings", q)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "frozen", frozen)
        object.__setattr__(self, "_diag", q.diagonal().copy())

    @property
    def dim(self) -> int:
        return self.couplings.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return self._diag

    @property
    def has_diagonal(self) -> bool:
        return bool(np.any(self._diag))

    @property
    def free_indices(self) -> np.ndarray:
        if self.frozen is None:
            return np.arange(self.dim, dtype=np.int64)
        return np.flatnonzero(~self.frozen).astype(np.int64)

    @property
    def on_value(self) -> int:
        return 1

    def csr_arrays(self):
        """``(indptr, indices, data)`` of the couplings, int64/float64."""
        q = self.couplings
        return (
            q.indptr.astype(np.int64),
            q.indices.astype(np.int64),
            q.data.astype(np.float64),
        )

    def bias_or_zeros(self) -> np.ndarray:
        if self.bias is None:
            return np.zeros(self.dim)
        return self.bias

    def is_integral(self) -> bool:
        vals = self.couplings.data
        ok = np.all(vals == np.round(vals))
        if self.bias is not None:
            ok = ok and np.all(self.bias == np.round(self.bias))
        return bool(ok)

    def __repr__(self):
        return (
            f"IsingProblem(name={self.name!r}, dim={self.dim}, nnz={self.couplings.nnz}, "
            f"domain={self.domain!r}, bias={'yes' if self.bias is not None else 'no'})"
        )


def check_state(problem: IsingProblem, s) -> np.ndarray:
    """Validate a state against the problem's length and domain."""
    arr = np.asarray(s)
    if arr.ndim != 1 or arr.shape[0] != problem.dim:
        raise DimensionError(f"state has shape {arr.shape}, expected ({problem.dim},)")
    allowed = (-1, 1) if problem.domain == SPIN else (0, 1)
    if not np.all(np.isin(arr, allowed)):
        raise ValueError(f"state entries must be in {allowed} for the {problem.domain} domain")
    return arr.astype(np.int8)


def energy(problem: IsingProblem, s) -> float:
    """``1/2 s^T Q s + b^T s + offset``."""
    x = check_state(problem, s).astype(np.float64)
    e = 0.5 * float(x @ (problem.couplings @ x))
    if problem.bias is not None:
        e += float(problem.bias @ x)
    return e + problem.offset


def local_field(problem: IsingProblem, s, p: int) -> float:
    """Off-diagonal field ``sum_{j != p} Q_pj s_j`` on variable ``p``."""
    q = problem.couplings
    lo, hi = q.indptr[p], q.indptr[p + 1]
    idx = q.indices[lo:hi]
    w = q.data[lo:hi]
    mask = idx != p
    return float(np.dot(w[mask], np.asarray(s, dtype=np.float64)[idx[mask]]))


def delta_energy(problem: IsingProblem, s, p: int) -> float:
    """Energy change from flipping variable ``p``, using row ``p`` only.

    Spin domain: ``d = -2 s_p`` and ``dH = d (h_p + b_p)``; the diagonal drops
    out because ``s_p**2 == 1``. Binary domain: ``d = 1 - 2 x_p`` and
    ``dH = d (h_p + Q_pp / 2 + b_p)``.
    """
    if not 0 <= p < problem.dim:
        raise IndexError(f"variable index {p} out of range [0, {problem.dim})")
    h = local_field(problem, s, p)
    b = 0.0 if problem.bias is None else float(problem.bias[p])
    sp_ = int(s[p])
    if problem.domain == SPIN:
        return -2.0 * sp_ * (h + b)
    d = 1 - 2 * sp_
    return d * (h + 0.5 * problem.diagonal[p] + b)


def flip(problem: IsingProblem, s, p: int) -> np.ndarray:
    out = np.array(s, dtype=np.int8, copy=True)
    out[p] = -out[p] if problem.domain == SPIN else 1 - out[p]
    return out


def fold_bias(problem: IsingProblem) -> tuple[IsingProblem, float]:
    """Move the linear term onto a static neuron pinned at +1.

    Returns ``(augmented, offset)`` where the augmented problem has variable 0
    frozen, ``Q'_{0,p} = Q'_{p,0} = b_p`` and no bias. The energy of
    ``(1, s)`` under the augmented problem equals ``energy(problem, s) - offset``.
    """
    if problem.domain != SPIN:
        raise ValueError("fold_bias expects a spin-domain problem; convert with to_spin first")
    n = problem.dim
    b = problem.bias_or_zeros()
    q = problem.couplings.tocoo()
    rows = np.concatenate([q.row + 1, np.arange(1, n + 1), np.zeros(n, dtype=np.int64)])
    cols = np.concatenate([q.col + 1, np.zeros(n, dtype=np.int64), np.arange(1, n + 1)])
    vals = np.concatenate([q.data, b, b])
    aug = sp.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))
    frozen = np.zeros(n + 1, dtype=bool)
    frozen[0] = True
    if problem.frozen is not None:
        frozen[1:] = problem.frozen
    folded = IsingProblem(
        aug, None, SPIN, frozen=frozen, name=problem.name, offset=problem.offset
    )
    # Pinned spin contributes Q'_00 / 2 = 0; offset is carried on the problem itself.
    return folded, 0.0


def to_spin(problem: IsingProblem) -> IsingProblem:
    """Rewrite a binary problem over spins via ``x = (1 + s) / 2``.

    The returned problem has identical energies state-for-state (the constant
    lands in ``offset``), so single-flip energy changes are preserved exactly.
    """
    if problem.domain == SPIN:
        return problem
    q = problem.couplings
    b = problem.bias_or_zeros()
    diag = problem.diagonal
    offdiag = (q - sp.diags(diag)).tocsr()
    ones = np.ones(problem.dim)
    rowsum = np.asarray(offdiag @ ones).ravel()
    j = offdiag * 0.25
    h = 0.25 * rowsum + 0.5 * b + 0.25 * diag
    const = 0.125 * float(rowsum.sum()) + 0.25 * float(diag.sum()) + 0.5 * float(b.sum())
    return IsingProblem(
        j, h, SPIN, frozen=problem.frozen, name=problem.name, offset=problem.offset + const
    )


def spins_to_bits(s) -> np.ndarray:
    return ((np.asarray(s, dtype=np.int8) + 1) // 2).astype(np.int8)


def bits_to_spins(x) -> np.ndarray:
    return (2 * np.asarray(x, dtype=np.int8) - 1).astype(np.int8)
