"""Temperature schedules, threshold noise and threshold quantization.

The scalar kernels (``_temperature``, ``_draw_noise``, ``_quantize``) are
numba-compiled so the network and the reference annealer can share them
inside their own compiled loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

FN_LOG = "fn-log"
INVERSE_TIME = "inverse-time"
EXP_DECAY = "exp-decay"
CONSTANT = "constant"
COLD_RESTART = "cold-restart"
SCHEDULE_KINDS = (FN_LOG, INVERSE_TIME, EXP_DECAY, CONSTANT, COLD_RESTART)

EXPONENTIAL = "exponential"
GAUSSIAN = "gaussian"
UNIFORM = "uniform"
NOISE_KINDS = (EXPONENTIAL, GAUSSIAN, UNIFORM)

DEFAULT_T0 = 0.3125
DEFAULT_C = 8.0e4
DEFAULT_NOISE_MEAN = -0.916
DEFAULT_EPS = 1e-12


@dataclass(frozen=True)
class AnnealSchedule:
    """Temperature envelope ``T(n)`` indexed by iteration ``n >= 1``.

    ``restart_at`` and ``cold_T`` only matter for ``cold-restart``: the
    temperature is held at ``cold_T`` for ``n < restart_at`` and follows the
    log schedule with its clock reset from ``restart_at`` on.
    """

    kind: str = FN_LOG
    T0: float = DEFAULT_T0
    C: float = DEFAULT_C
    dt: float = 1.0
    restart_at: Optional[int] = None
    cold_T: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if not self.T0 > 0:
            raise ValueError("T0 must be positive")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.cold_T is not None and self.cold_T < 0:
            raise ValueError("cold_T must be non-negative")
        if self.kind == COLD_RESTART and self.restart_at is None:
            raise ValueError("cold-restart needs restart_at")

    @property
    def code(self) -> int:
        return SCHEDULE_KINDS.index(self.kind)

    @property
    def effective_cold_T(self) -> float:
        return 0.01 * self.T0 if self.cold_T is None else float(self.cold_T)

    def packed(self) -> np.ndarray:
        restart = -1.0 if self.restart_at is None else float(self.restart_at)
        return np.array(
            [self.code, self.T0, self.C, self.dt, restart, self.effective_cold_T],
            dtype=np.float64,
        )


@njit(cache=True)
def _temperature(sched, n):
    kind = int(sched[0])
    t0 = sched[1]
    c = sched[2]
    dt = sched[3]
    if kind == 0:
        return t0 / math.log1p(n * dt / c)
    if kind == 1:
        return t0 * c / (n * dt)
    if kind == 2:
        return t0 * math.exp(-n * dt / c)
    if kind == 3:
        return t0
    restart = sched[4]
    if n < restart:
        return sched[5]
    return t0 / math.log1p((n - restart + 1.0) * dt / c)


def temperature(schedule: AnnealSchedule, n) -> float:
    """Temperature at iteration ``n`` (``n >= 1``)."""
    if n < 1:
        raise ValueError("iterations are counted from 1")
    return float(_temperature(schedule.packed(), float(n)))


def fn_rate(T: float, schedule: AnnealSchedule) -> float:
    """``dT/dt`` of the Fowler-Nordheim integrator, ``-(T^2/T0) exp(-T0/T) / C``."""
    return -(T * T / schedule.T0) * math.exp(-schedule.T0 / T) / schedule.C


def fn_integrate(schedule: AnnealSchedule, n_steps: int) -> np.ndarray:
    """Forward-Euler integration of the FN dynamical system.

    The state is integrated as inverse temperature ``y = 1/T``, for which the
    same equation reads ``dy/dt = exp(-T0 y) / (C T0)``. This keeps the
    explicit step stable during the first iterations where ``T`` falls
    roughly as ``1/t``. Entry ``k`` approximates ``T`` at time ``(k+1) dt``.
    """
    if schedule.kind != FN_LOG:
        raise ValueError("fn_integrate only applies to the fn-log schedule")
    return _fn_euler(schedule.T0, schedule.C, schedule.dt, int(n_steps))


@njit(cache=True)
def _fn_euler(t0, c, dt, n_steps):
    out = np.empty(n_steps)
    if n_steps == 0:
        return out
    y = math.log1p(dt / c) / t0
    out[0] = 1.0 / y
    k = dt / (c * t0)
    for i in range(1, n_steps):
        y += k * math.exp(-t0 * y)
        out[i] = 1.0 / y
    return out


# --------------------------------------------------------------------------
# quantization


_FORMATS = {8: (4, 3), 16: (5, 10), 32: (8, 23), 64: (11, 52)}


@dataclass(frozen=True)
class QuantFormat:
    """IEEE-style binary floating-point format with round-to-nearest-even.

    8 bits is a 1-4-3 minifloat (bias 7, max 240); 16 and 32 bits match
    IEEE half and single precision; 64 bits is the identity.
    """

    total_bits: int = 64

    def __post_init__(self):
        if self.total_bits not in _FORMATS:
            raise ValueError(f"total_bits must be one of {sorted(_FORMATS)}")

    @property
    def exponent_bits(self) -> int:
        return _FORMATS[self.total_bits][0]

    @property
    def mantissa_bits(self) -> int:
        return _FORMATS[self.total_bits][1]

    @property
    def is_identity(self) -> bool:
        return self.total_bits == 64

    @property
    def smallest_normal(self) -> float:
        bias = 2 ** (self.exponent_bits - 1) - 1
        return 2.0 ** (1 - bias)

    @property
    def max_value(self) -> float:
        bias = 2 ** (self.exponent_bits - 1) - 1
        return (2.0 - 2.0 ** -self.mantissa_bits) * 2.0 ** bias

    def packed(self) -> np.ndarray:
        if self.is_identity:
            return np.zeros(2, dtype=np.int64)
        return np.array([self.exponent_bits, self.mantissa_bits], dtype=np.int64)


@njit(cache=True)
def _round_half_even(x):
    r = math.floor(x)
    diff = x - r
    if diff > 0.5:
        return r + 1.0
    if diff < 0.5:
        return r
    if r % 2.0 == 0.0:
        return r
    return r + 1.0


@njit(cache=True)
def _quantize(x, ebits, mbits):
    if ebits == 0 or x == 0.0 or x != x:
        return x
    a = abs(x)
    if a == math.inf:
        return x
    bias = (1 << (ebits - 1)) - 1
    emin = 1 - bias
    m, e = math.frexp(a)
    exp = e - 1
    if exp < emin:
        exp = emin
    step = math.ldexp(1.0, exp - mbits)
    y = _round_half_even(a / step) * step
    top = (2.0 - math.ldexp(1.0, -mbits)) * math.ldexp(1.0, bias)
    if y > top:
        y = math.inf
    return y if x > 0 else -y


@njit(cache=True)
def _quantize_array(xs, ebits, mbits):
    out = np.empty_like(xs)
    for i in range(xs.size):
        out[i] = _quantize(xs[i], ebits, mbits)
    return out


def quantize(x, fmt: Optional[QuantFormat]):
    """Round ``x`` (scalar or array) to the nearest value representable in ``fmt``."""
    if fmt is None or fmt.is_identity:
        return x
    if np.isscalar(x):
        return float(_quantize(float(x), fmt.exponent_bits, fmt.mantissa_bits))
    arr = np.asarray(x, dtype=np.float64)
    return _quantize_array(arr.ravel(), fmt.exponent_bits, fmt.mantissa_bits).reshape(arr.shape)


# --------------------------------------------------------------------------
# noise


def raw_exponential_mean(B: float, eps: float) -> float:
    """Exact mean of ``log(u/B + eps)`` for ``u ~ Uniform(0, 1]``."""
    hi = 1.0 / B + eps

    def prim(w):
        return w * math.log(w) - w if w > 0 else 0.0

    return B * (prim(hi) - prim(eps))


@dataclass(frozen=True)
class NoiseConfig:
    """Threshold noise source.

    The exponential draw ``log(u/B + eps)`` is multiplied by a positive
    constant chosen so that its long-run mean equals ``target_mean``; the
    sign of every draw is kept. When ``eps`` is left unset it defaults to
    ``1e-12`` at full precision and to the smallest normal number of the
    quantization format otherwise. ``eta`` is the probability that the
    Bernoulli gate reads 0 (i.e. the pair is allowed to fire).
    """

    dist: str = EXPONENTIAL
    B: float = math.e
    eps: Optional[float] = None
    target_mean: float = DEFAULT_NOISE_MEAN
    eta: float = 1.0
    quant: Optional[QuantFormat] = None

    def __post_init__(self):
        if self.dist not in NOISE_KINDS:
            raise ValueError(f"unknown noise distribution {self.dist!r}; expected one of {NOISE_KINDS}")
        if self.dist == EXPONENTIAL and not self.B > 1:
            raise ValueError("B must exceed 1")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.dist == EXPONENTIAL and self.target_mean >= 0:
            raise ValueError("target_mean must be negative for exponential noise")

    @property
    def effective_eps(self) -> float:
        if self.eps is not None:
            return float(self.eps)
        if self.quant is None or self.quant.is_identity:
            return DEFAULT_EPS
        return self.quant.smallest_normal

    @property
    def scale(self) -> float:
        if self.dist != EXPONENTIAL:
            return 1.0
        return self.target_mean / raw_exponential_mean(self.B, self.effective_eps)

    @property
    def code(self) -> int:
        return NOISE_KINDS.index(self.dist)

    def packed(self) -> np.ndarray:
        return np.array(
            [self.code, self.B, self.effective_eps, self.scale, self.target_mean, self.eta],
            dtype=np.float64,
        )


@njit(cache=True)
def _draw_noise(rng, noise):
    kind = int(noise[0])
    if kind == 0:
        u = 1.0 - rng.random()
        return noise[3] * math.log(u / noise[1] + noise[2])
    if kind == 1:
        return noise[4] + rng.standard_normal()
    return noise[4] + 2.0 * rng.random() - 1.0


@njit(cache=True)
def _draw_bernoulli(rng, eta):
    # degenerate rates consume no draw so eta in {0, 1} keeps stream alignment
    if eta <= 0.0:
        return 1
    if eta >= 1.0:
        return 0
    return 0 if rng.random() < eta else 1


@njit(cache=True)
def _draw_noise_block(rng, noise, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = _draw_noise(rng, noise)
    return out


def sample_threshold_noise(cfg: NoiseConfig, rng: np.random.Generator, size: Optional[int] = None):
    """One noise draw (or ``size`` draws) from ``rng``."""
    if size is None:
        return float(_draw_noise(rng, cfg.packed()))
    return _draw_noise_block(rng, cfg.packed(), int(size))


@njit(cache=True)
def _draw_bernoulli_block(rng, eta, n):
    out = np.empty(n, dtype=np.int8)
    for i in range(n):
        out[i] = _draw_bernoulli(rng, eta)
    return out


def sample_bernoulli(cfg: NoiseConfig, rng: np.random.Generator, size: Optional[int] = None):
    """1 with probability ``1 - eta``, else 0 (or ``size`` such draws)."""
    if size is None:
        return int(_draw_bernoulli(rng, cfg.eta))
    return _draw_bernoulli_block(rng, float(cfg.eta), int(size))


@njit(cache=True)
def _threshold(temp, noise, a, bern, ebits, mbits):
    return _quantize(temp * noise + a * bern, ebits, mbits)


def make_threshold(T: float, noise: float, A: float, bernoulli: int,
                   quant: Optional[QuantFormat] = None) -> float:
    """Firing threshold ``T * noise + A * bernoulli``, quantized if requested."""
    if not T > 0:
        raise ValueError("temperature must be positive")
    if not A > 0:
        raise ValueError("A must be positive")
    fmt = quant.packed() if quant is not None else np.zeros(2, dtype=np.int64)
    return float(_threshold(float(T), float(noise), float(A), int(bernoulli), fmt[0], fmt[1]))
