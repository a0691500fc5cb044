"""Gset text format, run records (JSON) and CSV trace tables.

Gset layout: a header line ``n m`` followed by ``m`` lines ``i j w`` with
1-based vertex indices. Indices are shifted to 0-based here and nowhere else.

Run records are JSON objects with ``schema_version`` set to
:data:`SCHEMA_VERSION`; see the README for the field list. CSV tables use
``,`` separators, ``\\n`` line endings and Python's shortest float repr, so
output bytes depend only on the data.
"""

from __future__ import annotations

import csv
import dataclasses
import io as _io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .annealer import AnnealSchedule, NoiseConfig, QuantFormat
from .network import RunTrace, SolverConfig
from .problems import WeightedGraph

SCHEMA_VERSION = 1

PathLike = Union[str, os.PathLike]


class GsetParseError(ValueError):
    """Malformed Gset line; the message carries the 1-based line number."""


class GsetIntegrityError(ValueError):
    """Header and body disagree (edge count, duplicate edges, bad indices)."""


# ---------------------------------------------------------------- Gset


def parse_gset(text: Union[str, bytes], name: str = "") -> WeightedGraph:
    if isinstance(text, bytes):
        text = text.decode("ascii")
    lines = [(k + 1, ln.split()) for k, ln in enumerate(text.splitlines())]
    lines = [(k, toks) for k, toks in lines if toks]
    if not lines:
        raise GsetParseError("empty input: expected header 'n m' on line 1")
    k, head = lines[0]
    if len(head) != 2:
        raise GsetParseError(f"line {k}: header must be 'n m', got {' '.join(head)!r}")
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise GsetParseError(f"line {k}: header fields must be integers") from None
    if n < 1 or m < 0:
        raise GsetParseError(f"line {k}: invalid header n={n} m={m}")
    body = lines[1:]
    if len(body) != m:
        raise GsetIntegrityError(f"header declares {m} edges but {len(body)} edge lines follow")
    edges = np.empty((m, 3), dtype=np.int64)
    seen = {}
    for row, (k, toks) in enumerate(body):
        if len(toks) != 3:
            raise GsetParseError(f"line {k}: expected 'i j w', got {' '.join(toks)!r}")
        try:
            i, j, w = (int(t) for t in toks)
        except ValueError:
            raise GsetParseError(f"line {k}: edge fields must be integers") from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise GsetIntegrityError(f"line {k}: vertex index outside [1, {n}]")
        if i == j:
            raise GsetIntegrityError(f"line {k}: self-loop on vertex {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GsetIntegrityError(f"line {k}: duplicate edge {key} (first on line {seen[key]})")
        seen[key] = k
        edges[row] = (i - 1, j - 1, w)
    return WeightedGraph(n, edges, name)


def read_gset(path: PathLike) -> WeightedGraph:
    p = Path(path)
    return parse_gset(p.read_bytes(), name=p.stem)


def write_gset(g: WeightedGraph) -> str:
    out = [f"{g.n} {g.m}"]
    out += [f"{i + 1} {j + 1} {w}" for i, j, w in g.edges.tolist()]
    return "\n".join(out) + "\n"


def save_gset(g: WeightedGraph, path: PathLike) -> None:
    Path(path).write_text(write_gset(g), encoding="ascii", newline="\n")


# ---------------------------------------------------------------- config snapshots


def config_to_dict(cfg: SolverConfig) -> dict:
    d = dataclasses.asdict(cfg)
    quant = cfg.noise.quant
    d["noise"]["quant"] = None if quant is None else quant.total_bits
    return d


def config_from_dict(d: dict) -> SolverConfig:
    d = dict(d)
    sched = AnnealSchedule(**d.pop("schedule", {}))
    noise = dict(d.pop("noise", {}))
    bits = noise.pop("quant", None)
    noise_cfg = NoiseConfig(**noise, quant=None if bits is None else QuantFormat(int(bits)))
    return SolverConfig(**d, schedule=sched, noise=noise_cfg)


# ---------------------------------------------------------------- run records


def pack_state(state) -> str:
    """Hex string of the state's bits (spin +1 or binary 1 maps to bit 1)."""
    bits = (np.asarray(state) > 0).astype(np.uint8)
    return np.packbits(bits).tobytes().hex()


def unpack_state(hexbits: str, n: int, domain: str = "spin") -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(bytes.fromhex(hexbits), dtype=np.uint8))[:n]
    if bits.size != n:
        raise ValueError(f"bitstring holds {bits.size} bits, expected {n}")
    bits = bits.astype(np.int8)
    return bits if domain == "binary" else (2 * bits - 1).astype(np.int8)


@dataclass
class RunRecord:
    """Serializable summary of one run.

    ``best_value`` is in objective units (cut size, set size, or energy,
    according to ``objective``). ``checkpoints`` holds ``[iteration,
    best_value]`` pairs at each improvement. ``wall_time`` stays ``None``
    unless timing was requested, which keeps records byte-reproducible.
    """

    problem: str
    objective: str
    config: dict
    seed: int
    best_value: float
    best_energy: float
    best_state: str
    dim: int
    domain: str
    iterations: int
    spike_count: int
    checkpoints: list = field(default_factory=list)
    wall_time: Optional[float] = None
    sota: Optional[float] = None
    source: Optional[str] = None
    replica: int = 0
    schema_version: int = SCHEMA_VERSION

    @property
    def quality(self) -> Optional[float]:
        if self.sota is None or self.sota == 0:
            return None
        return self.best_value / self.sota

    def state(self) -> np.ndarray:
        return unpack_state(self.best_state, self.dim, self.domain)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported run-record schema_version {version!r}")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown run-record fields: {sorted(unknown)}")
        d["checkpoints"] = [list(c) for c in d.get("checkpoints", [])]
        return cls(**d)


def write_run_record(record: RunRecord, path: PathLike) -> None:
    p = Path(path)
    try:
        p.write_text(record.to_json(), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write run record to {p}: {exc}") from exc


def read_run_record(path: PathLike) -> RunRecord:
    p = Path(path)
    try:
        return RunRecord.from_json(p.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ValueError(f"{p}: invalid run record ({exc})") from exc


# ---------------------------------------------------------------- CSV tables


def _write_csv(path: Optional[PathLike], header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def _read_csv(path: PathLike, header):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != list(header):
        raise ValueError(f"{path}: expected header {list(header)}")
    return rows[1:]


BEST_COLUMNS = ("iteration", "best_value")
SPIKE_COLUMNS = ("iteration", "neuron", "direction")


def write_best_series(checkpoints, path: Optional[PathLike] = None) -> str:
    return _write_csv(path, BEST_COLUMNS, ([int(i), repr(float(v))] for i, v in checkpoints))


def read_best_series(path: PathLike) -> list:
    return [[int(i), float(v)] for i, v in _read_csv(path, BEST_COLUMNS)]


def write_spikes(trace: RunTrace, path: Optional[PathLike] = None) -> str:
    rows = zip(trace.spike_iteration.tolist(), trace.spike_neuron.tolist(),
               trace.spike_direction.tolist())
    return _write_csv(path, SPIKE_COLUMNS, rows)


def read_spikes(path: PathLike) -> tuple:
    rows = _read_csv(path, SPIKE_COLUMNS)
    arr = np.array(rows, dtype=np.int64).reshape(-1, 3)
    return arr[:, 0], arr[:, 1], arr[:, 2].astype(np.int8)


def write_table(path: Optional[PathLike], header, rows) -> str:
    """Generic CSV table; floats use ``repr`` for exact round trips."""
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        if isinstance(v, np.integer):
            return int(v)
        return "" if v is None else v

    return _write_csv(path, header, ([fmt(v) for v in row] for row in rows))


def load_config_file(path: PathLike) -> dict:
    """JSON object whose keys mirror the CLI long options (dashes or underscores)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}
