"""Time-per-unit-gain bookkeeping used as an optional stopping rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class GainTracker:
    """Log of best-value improvements, in energy units (lower is better).

    A *gain event* is recorded whenever the best energy has dropped by at
    least ``unit`` since the previous gain event. With ``unit=None`` the unit
    is the smallest nonzero improvement seen so far.
    """

    unit: Optional[float] = None
    iterations: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def record(self, iteration: int, best_value: float) -> None:
        self.iterations.append(int(iteration))
        self.values.append(float(best_value))

    def extend(self, iterations, values) -> None:
        for it, v in zip(np.asarray(iterations).tolist(), np.asarray(values).tolist()):
            self.record(it, v)

    def _unit(self) -> Optional[float]:
        if self.unit is not None:
            return self.unit
        if len(self.values) < 2:
            return None
        steps = -np.diff(np.asarray(self.values))
        steps = steps[steps > 0]
        return float(steps.min()) if steps.size else None

    def gain_iterations(self) -> list:
        """Iterations at which a unit gain was completed."""
        if not self.iterations:
            return []
        unit = self._unit()
        out = [self.iterations[0]]
        ref = self.values[0]
        for it, v in zip(self.iterations[1:], self.values[1:]):
            if unit is None or ref - v >= unit - 1e-12 * max(1.0, abs(unit)):
                out.append(it)
                ref = v
        return out

    def ratio(self, total_iterations: int) -> Optional[float]:
        """Share of the run spent on the most recent unit gain.

        That is ``max(last gap between gains, time since the last gain)``
        divided by ``total_iterations``; ``None`` before any improvement.
        """
        gains = self.gain_iterations()
        if not gains or total_iterations <= 0:
            return None
        last = gains[-1]
        prev = gains[-2] if len(gains) > 1 else 0
        span = max(last - prev, total_iterations - last)
        return min(1.0, max(0.0, span / total_iterations))


def stopping_ratio(tracker: GainTracker, total_iterations: int) -> Optional[float]:
    return tracker.ratio(total_iterations)
