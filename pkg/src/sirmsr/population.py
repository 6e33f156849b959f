"""Per-agent epidemic statuses driven by the SIR fractions.

Each step the continuous fractions are turned into integer cardinalities
(ceilings of S n and R n, the remainder infectious) and the ledger moves
exactly that many agents along S -> I -> Cured -> R.  Cured lasts one step:
the agent has just recovered but still carries the value it held while
infectious.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, TextIO

import numpy as np

from .epidemic import SirState
from .network import Partition

__all__ = [
    "Status",
    "Cardinalities",
    "InfectionMode",
    "StatusLedger",
    "LedgerError",
    "integer_cardinalities",
    "advance_statuses",
    "regular_set",
    "StatusTraceWriter",
]

# S n and R n within this of an integer are treated as that integer, so
# representation error in e.g. 0.07 * 100 does not add a spurious agent.
_CEIL_TOL = 1e-9


class Status(IntEnum):
    SUSCEPTIBLE = 0
    INFECTIOUS = 1
    CURED = 2
    RECOVERED = 3


_SUSCEPTIBLE, _INFECTIOUS, _CURED, _RECOVERED = (int(s) for s in Status)


class LedgerError(RuntimeError):
    """Cardinality targets that an SIR trajectory cannot produce."""


class Cardinalities(NamedTuple):
    susceptible: int
    recovered: int
    infectious: int


def integer_cardinalities(state: SirState, n: int) -> Cardinalities:
    """|S| = ceil(S n), |R| = ceil(R n), |I| = n - |S| - |R|.

    When the two ceilings overshoot n, |I| is 0 and |R| takes n - |S|.
    """
    ns = min(n, math.ceil(state.s * n - _CEIL_TOL))
    nr = min(n, math.ceil(state.r * n - _CEIL_TOL))
    ns, nr = max(ns, 0), max(nr, 0)
    ni = n - ns - nr
    if ni < 0:
        nr, ni = n - ns, 0
    return Cardinalities(ns, nr, ni)


@dataclass(frozen=True)
class InfectionMode:
    """Where new infections land: uniformly, or gathered in one subgroup first."""

    kind: str = "homogeneous"
    target: int = 2

    def __post_init__(self):
        if self.kind not in ("homogeneous", "gathered"):
            raise ValueError(f"unknown infection mode {self.kind!r}")

    @classmethod
    def gathered(cls, target: int = 2) -> "InfectionMode":
        return cls("gathered", target)


@dataclass(frozen=True, eq=False)
class StatusLedger:
    """Per-agent status at step ``k``.

    ``infected_since`` holds the step an agent became infected, or -1 if it
    never was; it is kept after recovery, so an agent infected and healed
    in the same step is still visible as a fresh infection.
    """

    status: np.ndarray
    infected_since: np.ndarray
    k: int = 0

    def __post_init__(self):
        for arr in (self.status, self.infected_since):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.status.shape[0]

    def mask(self, s: Status) -> np.ndarray:
        return self.status == s

    @property
    def counts(self) -> Cardinalities:
        """Status counts with Cured counted as recovered."""
        c = np.bincount(self.status, minlength=4)
        return Cardinalities(int(c[0]), int(c[2] + c[3]), int(c[1]))

    @property
    def n_cured(self) -> int:
        return int(np.count_nonzero(self.status == Status.CURED))

    @classmethod
    def initial(
        cls,
        target: Cardinalities,
        mode: InfectionMode,
        partition: Partition | None,
        rng: np.random.Generator,
    ) -> "StatusLedger":
        """All agents susceptible, then seed infections and prior recoveries.

        Initially recovered agents start Recovered, not Cured.
        """
        n = sum(target)
        status = np.full(n, Status.SUSCEPTIBLE, dtype=np.int8)
        since = np.full(n, -1, dtype=np.int64)
        chosen = _pick_infections(status, target.infectious, mode, partition, rng)
        status[chosen] = Status.INFECTIOUS
        since[chosen] = 0
        if target.recovered:
            pool = np.flatnonzero(status == Status.SUSCEPTIBLE)
            status[rng.choice(pool, size=target.recovered, replace=False)] = Status.RECOVERED
        return cls(status=status, infected_since=since, k=0)


def _pick_infections(status, count, mode, partition, rng) -> np.ndarray:
    if count == 0:
        return np.empty(0, dtype=np.int64)
    pool = np.flatnonzero(status == _SUSCEPTIBLE)
    if mode.kind == "homogeneous" or partition is None:
        return rng.choice(pool, size=count, replace=False)
    if not 1 <= mode.target <= partition.m:
        raise ValueError(f"gathered target {mode.target} not in 1..{partition.m}")
    inside = pool[partition.assignment[pool] == mode.target]
    if count <= inside.size:
        return rng.choice(inside, size=count, replace=False)
    outside = pool[partition.assignment[pool] != mode.target]
    extra = rng.choice(outside, size=count - inside.size, replace=False)
    return np.concatenate([inside, extra])


def advance_statuses(
    ledger: StatusLedger,
    target: Cardinalities,
    mode: InfectionMode,
    partition: Partition | None,
    rng: np.random.Generator,
) -> StatusLedger:
    """Move agents so the ledger matches ``target`` one step later.

    Previously cured agents become recovered; exactly the required number of
    susceptibles become infectious and of infectious agents become cured.
    Recoveries are drawn uniformly among agents infectious before this step,
    falling back on the new infections only when those run out.
    """
    old = ledger.counts
    if sum(target) != ledger.n:
        raise LedgerError(f"targets {target} do not sum to n={ledger.n}")
    new_inf = old.susceptible - target.susceptible
    new_rec = target.recovered - old.recovered
    if new_inf < 0 or new_rec < 0:
        raise LedgerError(f"non-monotone SIR targets: {old} -> {target}")

    k = ledger.k + 1
    if new_inf == 0 and new_rec == 0 and not np.any(ledger.status == _CURED):
        return StatusLedger(status=ledger.status, infected_since=ledger.infected_since, k=k)
    status = ledger.status.copy()
    since = ledger.infected_since.copy()
    status[status == _CURED] = _RECOVERED

    previously = np.flatnonzero(status == _INFECTIOUS)
    fresh = _pick_infections(status, new_inf, mode, partition, rng)
    status[fresh] = _INFECTIOUS
    since[fresh] = k

    if new_rec:
        if new_rec <= previously.size:
            healed = rng.choice(previously, size=new_rec, replace=False)
        else:
            spill = rng.choice(fresh, size=new_rec - previously.size, replace=False)
            healed = np.concatenate([previously, spill])
        status[healed] = _CURED
    out = StatusLedger(status=status, infected_since=since, k=k)
    if out.counts != target:
        raise LedgerError(f"ledger counts {out.counts} differ from target {target}")
    return out


def regular_set(ledger: StatusLedger) -> np.ndarray:
    """Susceptible and recovered agents; cured agents are excluded for their round."""
    st = ledger.status
    return np.flatnonzero((st == Status.SUSCEPTIBLE) | (st == Status.RECOVERED))


class StatusTraceWriter:
    """CSV rows ``k,n_S,n_I,n_C,n_R,I_1..I_m,w_max``."""

    def __init__(self, fh: TextIO, m: int):
        self._w = csv.writer(fh, lineterminator="\n")
        self._w.writerow(
            ["k", "n_S", "n_I", "n_C", "n_R"] + [f"I_{s}" for s in range(1, m + 1)] + ["w_max"]
        )

    def write(self, ledger: StatusLedger, local_ratios, w_max: float) -> None:
        self.write_counts(ledger.k, np.bincount(ledger.status, minlength=4), local_ratios, w_max)

    def write_counts(self, k: int, counts, local_ratios, w_max: float) -> None:
        """``counts`` indexed by Status value."""
        c = [int(v) for v in counts]
        self._w.writerow(
            [int(k), c[Status.SUSCEPTIBLE], c[Status.INFECTIOUS], c[Status.CURED], c[Status.RECOVERED]]
            + [f"{v:.10g}" for v in local_ratios]
            + [f"{w_max:.10g}"]
        )
