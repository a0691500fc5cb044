"""Spiking ON-OFF neuron Ising machine with a Fowler-Nordheim annealing schedule."""

from .annealer import AnnealSchedule, NoiseConfig, QuantFormat, temperature
from .core import BINARY, SPIN, IsingProblem, delta_energy, energy
from .estimator import OnOffAnnealer
from .network import RunTrace, SolverConfig, run, run_parallel
from .oracle import brute_force, reference_sa
from .problems import (
    WeightedGraph, cut_from_energy, maxcut_decode, maxcut_encode, mis_decode, mis_encode,
    random_graph,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "BINARY", "IsingProblem", "NoiseConfig", "OnOffAnnealer", "QuantFormat",
    "RunTrace", "SPIN", "SolverConfig", "WeightedGraph", "brute_force", "cut_from_energy",
    "delta_energy", "energy", "maxcut_decode", "maxcut_encode", "mis_decode", "mis_encode", "random_graph", "reference_sa", "run",
    "run_parallel", "temperature",
]
