"""Discrete-time SIR dynamics under transmission reduction.

The environment layer: forward-Euler SIR with a reduction factor ``b`` in
``[0, 1]`` scaling the transmission rate, the analytic peak bounds used to
design static and dynamic policies, and the root finder for the largest
safe static reduction ``b*``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol, TextIO

import numpy as np

__all__ = [
    "SirParams",
    "SirState",
    "ReductionPolicy",
    "NoReduction",
    "FixedReduction",
    "AdaptiveGlobal",
    "TimeLimited",
    "DynamicLocal",
    "SirTrace",
    "PeakBound",
    "NoEpidemicError",
    "HeterogeneityError",
    "sir_step",
    "simulate_sir",
    "imax",
    "f_w",
    "peak_bound_static",
    "solve_b_star",
    "dynamic_peak_bound",
    "static_heterogeneity_bound",
    "dynamic_heterogeneity_bound",
]

_CLAMP_LIMIT = 1e-12
BSTAR_TOL = 1e-9
BSTAR_MAX_ITER = 200


class NoEpidemicError(ValueError):
    """Raised when R0 <= 1, where no outbreak occurs."""


class HeterogeneityError(ValueError):
    """Raised when the heterogeneity bound leaves no admissible b*."""


@dataclass(frozen=True)
class SirParams:
    beta: float
    gamma: float
    dt: float

    def __post_init__(self):
        if not (self.beta > 0 and self.gamma > 0 and self.dt > 0):
            raise ValueError(
                f"beta, gamma and dt must be positive, got {self.beta}, {self.gamma}, {self.dt}"
            )

    @property
    def r0(self) -> float:
        return self.beta / self.gamma

    @classmethod
    def from_r0(cls, r0: float, gamma: float = 0.1, dt: float = 0.01) -> "SirParams":
        return cls(beta=r0 * gamma, gamma=gamma, dt=dt)


@dataclass(frozen=True)
class SirState:
    s: float
    i: float
    r: float
    k: int = 0

    def __post_init__(self):
        for name in ("s", "i", "r"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} outside [0, 1]")
        if abs(self.s + self.i + self.r - 1.0) > 1e-12:
            raise ValueError(f"fractions sum to {self.s + self.i + self.r!r}, expected 1")
        if self.k < 0:
            raise ValueError("step index must be nonnegative")

    @classmethod
    def initial(cls, s0: float, i0: float) -> "SirState":
        r0 = 1.0 - s0 - i0
        # drop rounding residue such as 1 - 0.99 - 0.01
        return cls(s=s0, i=i0, r=r0 if r0 > 1e-12 else 0.0, k=0)


def _clamp(v: float) -> float:
    if v < 0.0:
        if v < -_CLAMP_LIMIT:
            raise FloatingPointError(f"component {v!r} below 0 beyond rounding; step too large")
        return 0.0
    if v > 1.0:
        if v > 1.0 + _CLAMP_LIMIT:
            raise FloatingPointError(f"component {v!r} above 1 beyond rounding; step too large")
        return 1.0
    return v


def sir_step(state: SirState, params: SirParams, b: float) -> SirState:
    """Advance one Euler step with reduction ``b``.

    Raises ValueError when ``b`` is outside [0, 1].
    """
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"reduction b={b!r} outside [0, 1]")
    s, i, r = state.s, state.i, state.r
    infect = b * params.beta * s * i * params.dt
    recover = params.gamma * i * params.dt
    return SirState(
        s=_clamp(s - infect),
        i=_clamp(i + infect - recover),
        r=_clamp(r + recover),
        k=state.k + 1,
    )


class ReductionPolicy(Protocol):
    def __call__(self, k: int, state: SirState) -> float: ...


def _unit(b: float) -> float:
    return min(1.0, max(0.0, b))


@dataclass(frozen=True)
class NoReduction:
    def __call__(self, k: int, state: SirState) -> float:
        return 1.0


@dataclass(frozen=True)
class FixedReduction:
    b0: float

    def __post_init__(self):
        if not 0.0 <= self.b0 <= 1.0:
            raise ValueError("b0 must lie in [0, 1]")

    def __call__(self, k: int, state: SirState) -> float:
        return self.b0


@dataclass(frozen=True)
class AdaptiveGlobal:
    """b(k) = 1 - c I(k)."""

    c: float = 2.0

    def __call__(self, k: int, state: SirState) -> float:
        return _unit(1.0 - self.c * state.i)


@dataclass(frozen=True)
class TimeLimited:
    """b0 on steps k_start..k_end inclusive, no reduction otherwise."""

    b0: float
    k_start: int
    k_end: int

    def __post_init__(self):
        if not 0.0 <= self.b0 <= 1.0:
            raise ValueError("b0 must lie in [0, 1]")

    def __call__(self, k: int, state: SirState) -> float:
        return self.b0 if self.k_start <= k <= self.k_end else 1.0


@dataclass(frozen=True)
class DynamicLocal:
    """Largest admissible dynamic reduction, max(0, 1 - 2I - 2w)."""

    w_bar: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.w_bar <= 1.0:
            raise ValueError("w_bar must lie in [0, 1]")

    def __call__(self, k: int, state: SirState) -> float:
        return _unit(1.0 - 2.0 * state.i - 2.0 * self.w_bar)


@dataclass
class SirTrace:
    k: np.ndarray
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return len(self.k)

    def peak(self) -> tuple[float, int]:
        idx = int(np.argmax(self.i))
        return float(self.i[idx]), int(self.k[idx])

    def first_below(self, level: float, start: int = 1) -> int | None:
        hits = np.flatnonzero(self.i[start:] < level)
        return int(self.k[start + hits[0]]) if hits.size else None

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "S", "I", "R", "b"])
        for row in zip(self.k, self.s, self.i, self.r, self.b):
            w.writerow([int(row[0])] + [f"{v:.10g}" for v in row[1:]])


def simulate_sir(
    params: SirParams, policy: ReductionPolicy, initial: SirState, horizon: int
) -> SirTrace:
    """Run ``horizon`` steps; row k holds the state and the b applied from it.

    The final row's b is the policy evaluated on the final state (it would
    drive the next step).  The policy observes I(k) with no delay.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    ks = np.arange(initial.k, initial.k + horizon + 1)
    out = np.empty((4, horizon + 1))
    state = initial
    for t in range(horizon + 1):
        b = float(policy(state.k, state))
        out[:, t] = (state.s, state.i, state.r, b)
        if t < horizon:
            state = sir_step(state, params, b)
    return SirTrace(k=ks, s=out[0], i=out[1], r=out[2], b=out[3])


class PeakBound(NamedTuple):
    value: float
    outbreak: bool


def imax(b: float, r0: float) -> float:
    """Peak infectious fraction for constant reduction, assuming S(0) ~ 1.

    Only meaningful when ``b * r0 > 1``.
    """
    inv = 1.0 / (b * r0)
    return 1.0 - inv + inv * math.log(inv)


def peak_bound_static(b0: float, params: SirParams | float) -> PeakBound:
    """Static-policy peak bound; zero with ``outbreak=False`` when b0 R0 <= 1.

    Derived with S(0) close to 1; it underestimates the peak for larger I(0).
    """
    r0 = params.r0 if isinstance(params, SirParams) else float(params)
    if b0 * r0 <= 1.0:
        return PeakBound(0.0, False)
    return PeakBound(imax(b0, r0), True)


def f_w(b: float, r0: float, w_bar: float = 0.0) -> float:
    """2 I_max(b) + 2 w - (1 - b); I_max taken as 0 outside the outbreak regime."""
    return 2.0 * peak_bound_static(b, r0).value + 2.0 * w_bar - (1.0 - b)


def static_heterogeneity_bound(r0: float) -> float:
    return 0.5 * (1.0 - 1.0 / r0)


def dynamic_heterogeneity_bound(r0: float) -> float:
    return 1.0 / (2.0 * r0) - 0.25


def _r0_of(params: SirParams | float) -> float:
    return params.r0 if isinstance(params, SirParams) else float(params)


def solve_b_star(params: SirParams | float, w_bar: float = 0.0) -> float:
    """Largest static reduction whose peak keeps 2(I_max + w) <= 1 - b.

    Bisection on (1/R0, 1], where f_w is strictly increasing.
    """
    r0 = _r0_of(params)
    if r0 <= 1.0:
        raise NoEpidemicError(f"R0={r0} <= 1: no epidemic regime")
    if w_bar < 0:
        raise ValueError("w_bar must be nonnegative")
    if w_bar >= static_heterogeneity_bound(r0):
        raise HeterogeneityError(
            f"w_bar={w_bar} >= W_s={static_heterogeneity_bound(r0)}: heterogeneity exceeds static bound"
        )

    def fn(b: float) -> float:
        return 2.0 * imax(b, r0) + 2.0 * w_bar - (1.0 - b)

    lo, hi = 1.0 / r0, 1.0
    f_hi = fn(hi)
    if f_hi <= 0.0:  # only reachable through rounding for R0 -> 1+
        return hi
    best, best_f = hi, abs(f_hi)
    for _ in range(BSTAR_MAX_ITER):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if abs(fm) < best_f:
            best, best_f = mid, abs(fm)
        if best_f < BSTAR_TOL:
            break
        if fm < 0.0:
            lo = mid
        else:
            hi = mid
    return best


def dynamic_peak_bound(params: SirParams | float) -> float:
    """Upper bound on I(k) under b(k) <= 1 - 2I(k)."""
    r0 = _r0_of(params)
    if r0 <= 1.0:
        raise NoEpidemicError(f"R0={r0} <= 1: no epidemic regime")
    return 0.5 * (1.0 - 1.0 / r0)
