"""MSR resilient consensus over a network whose agents get infected.

Regular agents (susceptible or recovered) sort their own value together
with their in-neighbours' values, drop the ``f`` largest and ``f`` smallest
and average what is left.  Their own value can be dropped too.  A cured
agent does the same without its own value.  Infectious agents broadcast
the adversary value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, TextIO

import numpy as np

from . import _kernels
from .network import Graph
from .population import Status, StatusLedger

__all__ = [
    "ConstantAdversary",
    "PruningError",
    "Verdict",
    "ResilienceReport",
    "ResilienceMonitor",
    "msr_kept",
    "msr_update",
    "roles_from_ledger",
    "step_network",
    "check_resilient",
    "TimeResponseWriter",
    "DEFAULT_EPS",
]

DEFAULT_EPS = 1e-3


class PruningError(RuntimeError):
    """An agent's pruning number leaves nothing to average."""

    def __init__(self, agent: int, message: str | None = None):
        self.agent = int(agent)
        super().__init__(message or f"agent {agent}: kept set is empty")


@dataclass(frozen=True)
class ConstantAdversary:
    """Every infectious agent broadcasts ``value`` to all its neighbours."""

    value: float = -1.0

    def __call__(self, k: int, agents: np.ndarray) -> np.ndarray:
        return np.full(agents.shape[0], self.value)


def msr_kept(own: float, neighbor_values: Sequence[float], f: int, cured: bool = False) -> list[float]:
    """Values left after trimming ``f`` from each end.

    Descending order with ties broken by neighbour position, own value
    last among equals; the result is listed in that order.
    """
    items = [(-float(v), 0, j) for j, v in enumerate(neighbor_values)]
    if not cured:
        items.append((-float(own), 1, 0))
    if f < 0:
        raise ValueError("pruning number must be nonnegative")
    if len(items) <= 2 * f:
        raise PruningError(-1, f"{len(items)} values cannot survive pruning f={f} from both ends")
    items.sort()
    return [-t[0] for t in items[f : len(items) - f]]


def msr_update(own: float, neighbor_values: Sequence[float], f: int, cured: bool = False) -> float:
    kept = msr_kept(own, neighbor_values, f, cured)
    acc = 0.0
    for v in sorted(kept):
        acc += v
    return acc / len(kept)


# indexed by Status value
_ROLE_OF = np.zeros(4, dtype=np.int8)
_ROLE_OF[int(Status.CURED)] = _kernels.ROLE_CURED
_ROLE_OF[int(Status.INFECTIOUS)] = _kernels.ROLE_INFECTIOUS
_S, _R = int(Status.SUSCEPTIBLE), int(Status.RECOVERED)


def roles_from_ledger(ledger: StatusLedger) -> np.ndarray:
    return _ROLE_OF[ledger.status]


def step_network(
    x: np.ndarray,
    g: Graph,
    ledger: StatusLedger,
    f: np.ndarray,
    adversary: ConstantAdversary = ConstantAdversary(),
) -> np.ndarray:
    """One synchronous round: returns the state vector for step k+1.

    Raises PruningError naming the first agent whose kept set is empty.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    f = np.asarray(f, dtype=np.int64)
    if f.shape != x.shape:
        f = np.ascontiguousarray(np.broadcast_to(f, x.shape))
    if f.min(initial=0) < 0:
        raise ValueError("pruning numbers must be nonnegative")
    role = roles_from_ledger(ledger)
    out = x.copy()
    bad = _kernels.msr_round(x, g.adj, np.asarray(g.degrees, dtype=np.int64), role, f, out)
    if bad >= 0:
        raise PruningError(bad, f"agent {bad}: pruning number {f[bad]} empties its kept set")
    inf = np.flatnonzero(role == _kernels.ROLE_INFECTIOUS)
    if inf.size:
        out[inf] = adversary(ledger.k, inf)
    return out


class Verdict(str, Enum):
    SUCCESS = "success"
    SAFETY_VIOLATION = "safety_violation"
    NO_CONSENSUS = "no_consensus"


@dataclass
class ResilienceReport:
    verdict: Verdict
    reason: str
    final_spread: float
    first_violation: int | None
    neg_ratio: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray


@dataclass
class ResilienceMonitor:
    """Online safety/consensus bookkeeping, one ``observe`` per step.

    Susceptible and recovered agents must stay inside ``safety``; cured
    agents are exempt for their round.
    """

    safety: tuple[float, float] = (0.0, 1.0)
    eps: float = DEFAULT_EPS
    first_violation: int | None = None
    violator: int | None = None
    neg_ratio: list = field(default_factory=list)
    x_min: list = field(default_factory=list)
    x_max: list = field(default_factory=list)

    def observe(self, k: int, x: np.ndarray, status: np.ndarray) -> bool:
        """Record step ``k``; returns False once safety has been violated."""
        regular = (status == _S) | (status == _R)
        neg, lo, hi, cnt = _kernels.summarize(x, regular)
        self.neg_ratio.append(neg / x.shape[0])
        self.x_min.append(lo)
        self.x_max.append(hi)
        if self.first_violation is None and cnt and (lo < self.safety[0] or hi > self.safety[1]):
            self.first_violation = k
            reg = np.flatnonzero(regular)
            outside = (x[reg] < self.safety[0]) | (x[reg] > self.safety[1])
            self.violator = int(reg[np.argmax(outside)])
        return self.first_violation is None

    @property
    def spread(self) -> float:
        if not self.x_min or not np.isfinite(self.x_min[-1]):
            return 0.0
        return float(self.x_max[-1] - self.x_min[-1])

    def report(self, pruning_failure: int | None = None) -> ResilienceReport:
        arrays = dict(
            neg_ratio=np.asarray(self.neg_ratio),
            x_min=np.asarray(self.x_min),
            x_max=np.asarray(self.x_max),
        )
        spread = self.spread
        if self.first_violation is not None:
            v, why = Verdict.SAFETY_VIOLATION, f"agent {self.violator} left safety at step {self.first_violation}"
        elif pruning_failure is not None:
            v, why = Verdict.NO_CONSENSUS, "pruning_infeasible"
        elif spread < self.eps:
            v, why = Verdict.SUCCESS, "ok"
        else:
            v, why = Verdict.NO_CONSENSUS, f"final spread {spread:.3g} >= eps {self.eps:g}"
        return ResilienceReport(v, why, spread, self.first_violation, **arrays)


def check_resilient(
    states: np.ndarray,
    statuses: np.ndarray,
    safety: tuple[float, float] = (0.0, 1.0),
    eps: float = DEFAULT_EPS,
) -> ResilienceReport:
    """Verdict over a stored run: ``states`` and ``statuses`` are (steps, n)."""
    states = np.asarray(states, dtype=np.float64)
    statuses = np.asarray(statuses)
    if states.ndim != 2 or states.shape != statuses.shape or states.shape[0] == 0:
        raise ValueError("states and statuses must be matching nonempty (steps, n) arrays")
    mon = ResilienceMonitor(safety=safety, eps=eps)
    for k in range(states.shape[0]):
        mon.observe(k, states[k], statuses[k])
    return mon.report()


class TimeResponseWriter:
    """CSV rows ``k,S,I,R,neg_ratio,x_min_regular,x_max_regular,spread``."""

    HEADER = ["k", "S", "I", "R", "neg_ratio", "x_min_regular", "x_max_regular", "spread"]

    def __init__(self, fh: TextIO):
        self._w = csv.writer(fh, lineterminator="\n")
        self._w.writerow(self.HEADER)

    def write(self, k, s, i, r, neg_ratio, x_min, x_max) -> None:
        spread = x_max - x_min if np.isfinite(x_min) else 0.0
        self._w.writerow([int(k)] + [f"{v:.10g}" for v in (s, i, r, neg_ratio, x_min, x_max, spread)])
