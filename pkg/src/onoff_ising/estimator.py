"""scikit-learn style front end to the ON-OFF network solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .annealer import FN_LOG, NOISE_KINDS, DEFAULT_C, DEFAULT_NOISE_MEAN, DEFAULT_T0, SCHEDULE_KINDS
from .annealer import AnnealSchedule, NoiseConfig, QuantFormat
from .core import SPIN, energy
from .network import ARBITERS, SELECT_THEN_TEST, SolverConfig, run_parallel
from .validation import check_choice, check_count, check_positive, check_problem


class OnOffAnnealer(BaseEstimator):
    """Minimize an Ising or QUBO energy with independent annealing replicas.

    ``fit(X)`` takes an ``IsingProblem``, a ``WeightedGraph`` (solved as
    MAX-CUT) or a square coupling matrix. After fitting, ``best_state_`` and
    ``best_energy_`` hold the lowest-energy state over all replicas and
    ``traces_`` the per-replica run traces.

    Example::

        est = OnOffAnnealer(max_iter=100_000, C=800, random_state=0).fit(Q)
        est.best_energy_
    """

    def __init__(self, max_iter=1_000_000, random_state=0, n_replicas=1, n_jobs=1,
                 schedule=FN_LOG, T0=DEFAULT_T0, C=DEFAULT_C, dt=1.0, noise="exponential",
                 noise_mean=DEFAULT_NOISE_MEAN, eta=1.0, quant_bits=None,
                 arbiter=SELECT_THEN_TEST, A=1.0e6, hardware=False, domain=SPIN,
                 record_spikes=False):
        self.max_iter = max_iter
        self.random_state = random_state
        self.n_replicas = n_replicas
        self.n_jobs = n_jobs
        self.schedule = schedule
        self.T0 = T0
        self.C = C
        self.dt = dt
        self.noise = noise
        self.noise_mean = noise_mean
        self.eta = eta
        self.quant_bits = quant_bits
        self.arbiter = arbiter
        self.A = A
        self.hardware = hardware
        self.domain = domain
        self.record_spikes = record_spikes

    def solver_config(self) -> SolverConfig:
        check_count(self.max_iter, "max_iter")
        check_count(self.n_replicas, "n_replicas", 1)
        check_count(self.n_jobs, "n_jobs", 1)
        check_choice(self.schedule, "schedule", SCHEDULE_KINDS)
        check_choice(self.noise, "noise", NOISE_KINDS)
        check_choice(self.arbiter, "arbiter", ARBITERS)
        check_positive(self.A, "A")
        seed = 0 if self.random_state is None else check_count(self.random_state, "random_state")
        quant = None if self.quant_bits is None else QuantFormat(self.quant_bits)
        return SolverConfig(
            max_iter=self.max_iter, seed=seed, arbiter=self.arbiter, A=self.A,
            schedule=AnnealSchedule(self.schedule, self.T0, self.C, self.dt),
            noise=NoiseConfig(self.noise, target_mean=self.noise_mean, eta=self.eta, quant=quant),
            hardware=self.hardware, record_spikes=self.record_spikes,
        )

    def fit(self, X, y=None, bias=None):
        cfg = self.solver_config()
        problem = check_problem(X, bias, self.domain)
        traces = run_parallel(problem, cfg, self.n_replicas, self.n_jobs)
        best = min(range(len(traces)), key=lambda k: (traces[k].best_energy, k))
        self.problem_ = problem
        self.traces_ = traces
        self.trace_ = traces[best]
        self.best_state_ = traces[best].best_state
        self.best_energy_ = float(traces[best].best_energy)
        self.replica_energies_ = np.array([t.best_energy for t in traces])
        self.n_features_in_ = problem.dim
        return self

    def _check_fitted(self):
        if not hasattr(self, "best_state_"):
            raise NotFittedError("call fit before using this OnOffAnnealer")

    def predict(self, X=None):
        """Best state found; ``X`` is accepted for API symmetry and must match the fitted size."""
        self._check_fitted()
        if X is not None and check_problem(X, domain=self.domain).dim != self.n_features_in_:
            raise ValueError("X has a different size than the fitted problem")
        return self.best_state_.copy()

    def fit_predict(self, X, y=None, bias=None):
        return self.fit(X, y, bias).predict()

    def score(self, X=None, y=None):
        """Negated best energy, so larger is better."""
        self._check_fitted()
        if X is None:
            return -self.best_energy_
        return -energy(check_problem(X, domain=self.domain), self.best_state_)
