"""Policy makers: choose the reduction b and the pruning numbers F.

Four kinds are supported:

* ``static_global``: fixed b0 (default b*) and one F for every agent.
* ``dynamic_global``: b(k) = 1 - 2 I(k) - 2 w from the global ratio.
* ``static_local``: fixed b0 with degree-scaled pruning.
* ``dynamic_local``: per-subgroup b_s(k) from local ratios, degree-scaled pruning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .epidemic import (
    NoEpidemicError,
    SirParams,
    SirState,
    dynamic_heterogeneity_bound,
    f_w,
    solve_b_star,
    static_heterogeneity_bound,
)
from .network import Graph, Partition, neighborhood_unions
from .population import Status, StatusLedger

__all__ = [
    "POLICY_KINDS",
    "PRUNING_RULES",
    "PolicyConfig",
    "Infeasible",
    "FeasibilityReport",
    "StepDecision",
    "PolicyMaker",
    "static_setup_complete",
    "static_setup_noncomplete",
    "dynamic_assign",
    "static_assign",
    "feasibility_report",
]

POLICY_KINDS = ("static_global", "dynamic_global", "static_local", "dynamic_local")
PRUNING_RULES = ("auto", "half_n", "half_degree", "absolute")

_INF, _CURED = int(Status.INFECTIOUS), int(Status.CURED)

# Absorbs representation error before a ceiling, e.g. (1 - 0.8) * 100 / 2.
_CEIL_TOL = 1e-9


def _ceil(v):
    return np.ceil(np.asarray(v) - _CEIL_TOL).astype(np.int64)


class Infeasible(ValueError):
    """A design-procedure inequality does not hold."""

    def __init__(self, condition: str, detail: str):
        self.condition = condition
        super().__init__(f"{condition}: {detail}")


@dataclass(frozen=True)
class PolicyConfig:
    """``b0=None`` means the largest safe static value b*(w_bar).

    ``pruning_rule='auto'`` picks half_n for global kinds and half_degree for
    local kinds.  ``absolute`` uses ``f0`` when given, else ceil(I n).
    """

    kind: str = "static_global"
    b0: float | None = None
    w_bar: float = 0.0
    pruning_rule: str = "auto"
    f0: int | None = None
    stride: int = 1

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if self.pruning_rule not in PRUNING_RULES:
            raise ValueError(f"unknown pruning rule {self.pruning_rule!r}")
        if self.b0 is not None and not 0.0 <= self.b0 <= 1.0:
            raise ValueError("b0 must lie in [0, 1]")
        if not 0.0 <= self.w_bar <= 1.0:
            raise ValueError("w_bar must lie in [0, 1]")
        if self.f0 is not None and self.f0 < 0:
            raise ValueError("f0 must be nonnegative")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def is_static(self) -> bool:
        return self.kind.startswith("static")

    @property
    def is_local(self) -> bool:
        return self.kind.endswith("local")

    @property
    def rule(self) -> str:
        if self.pruning_rule != "auto":
            return self.pruning_rule
        return "half_degree" if self.is_local else "half_n"


def static_setup_complete(params: SirParams | float, n: int) -> tuple[float, int]:
    """b0 = b*, F0 = ceil((1 - b0)(n - 1)/2) for a complete graph on n nodes."""
    r0 = params.r0 if isinstance(params, SirParams) else float(params)
    if r0 <= 1.0:
        raise Infeasible("R0 > 1", f"R0={r0} is not an epidemic regime")
    b0 = solve_b_star(r0, 0.0)
    f0 = int(_ceil((1.0 - b0) * (n - 1) / 2.0))
    if n >= 3 and not f0 < (n - 1) / 2.0:
        raise Infeasible("F0 < (n-1)/2", f"F0={f0}, n={n}")
    return b0, f0


def static_setup_noncomplete(
    params: SirParams | float, n: int, d_min: int, w_bar: float = 0.0
) -> tuple[float, int]:
    """Static design for a noncomplete graph; raises Infeasible naming the failed check."""
    r0 = params.r0 if isinstance(params, SirParams) else float(params)
    if not 1.0 < r0 < 2.0:
        raise Infeasible("R0 in (1,2)", f"R0={r0}")
    ws = static_heterogeneity_bound(r0)
    if not w_bar < ws:
        raise Infeasible("w_bar < W_s", f"w_bar={w_bar}, W_s={ws}")
    b_star = solve_b_star(r0, w_bar)
    if not d_min > (1.5 - b_star) * n:
        raise Infeasible("d_min > (3/2 - b*) n", f"d_min={d_min}, bound={(1.5 - b_star) * n:.6g}")
    lo = 1.5 - d_min / n
    if not f_w(lo, r0, w_bar) < 0.0:
        raise Infeasible("f_w(3/2 - d_min/n) < 0", f"f_w={f_w(lo, r0, w_bar):.6g}")
    b0 = 0.5 * (lo + b_star)
    f0 = int(_ceil((1.0 - b0) * n / 2.0))
    if not f0 < d_min / 2.0 - n / 4.0:
        raise Infeasible("F0 < d_min/2 - n/4", f"F0={f0}, bound={d_min / 2.0 - n / 4.0:.6g}")
    return b0, f0


def _pruning(one_minus_b: np.ndarray, rule: str, n: int, degrees: np.ndarray, ratio: float, f0):
    if rule == "half_n":
        return _ceil(one_minus_b * n / 2.0)
    if rule == "half_degree":
        return _ceil(one_minus_b * degrees / 2.0)
    if rule == "absolute":
        val = f0 if f0 is not None else int(_ceil(ratio * n))
        return np.full(degrees.shape[0], val, dtype=np.int64)
    raise ValueError(f"unknown pruning rule {rule!r}")


def dynamic_assign(
    i_s,
    w_bar: float,
    n: int,
    d_min: int,
    rule: str,
    *,
    partition: Partition | None = None,
    degrees=None,
    global_ratio: float | None = None,
    f0: int | None = None,
):
    """Per-subgroup b_s = max(0, 1 - 2 I_s - 2 w) and per-agent F.

    Returns ``(b_s, F, flags)``.  ``flags['half_n_margin']`` marks agents
    with F >= d_min/2 - n/4 under half_n; nothing is corrected here.
    """
    i_s = np.atleast_1d(np.asarray(i_s, dtype=np.float64))
    b_s = np.maximum(0.0, 1.0 - 2.0 * i_s - 2.0 * w_bar)
    if partition is None:
        if i_s.size != 1:
            raise ValueError("a partition is needed for several subgroups")
        group = np.zeros(n if degrees is None else len(degrees), dtype=np.int64)
    else:
        group = partition.assignment - 1
    deg = np.full(group.shape[0], n - 1) if degrees is None else np.asarray(degrees)
    ratio = float(i_s.max()) if global_ratio is None else global_ratio
    f = _pruning(1.0 - b_s[group], rule, n, deg, ratio, f0)
    flags = {}
    if rule == "half_n":
        flags["half_n_margin"] = f >= d_min / 2.0 - n / 4.0
    return b_s, f, flags


def static_assign(b0: float, n: int, degrees, rule: str, f0: int | None = None, complete: bool = False):
    """Constant F per agent for a fixed b0."""
    deg = np.asarray(degrees)
    if rule == "half_n" and complete:
        return _ceil(np.full(deg.shape[0], (1.0 - b0) * (n - 1) / 2.0))
    return _pruning(np.full(deg.shape[0], 1.0 - b0), rule, n, deg, 0.0, f0)


@dataclass
class FeasibilityReport:
    lemma1: bool
    lemma1_slack: float
    lemma2: bool
    lemma2_slack: float
    eq24: bool | None
    eq24_slack: float | None
    pruning_covers: bool | None = None

    def render(self) -> str:
        def fmt(v):
            if v is None:
                return "n/a"
            if isinstance(v, bool):
                return "pass" if v else "fail"
            return f"{v:.6g}"

        rows = [
            ("lemma1", self.lemma1),
            ("lemma1_slack", self.lemma1_slack),
            ("lemma2", self.lemma2),
            ("lemma2_slack", self.lemma2_slack),
            ("eq24", self.eq24),
            ("eq24_slack", self.eq24_slack),
            ("pruning_covers", self.pruning_covers),
        ]
        return "\n".join(f"{k} = {fmt(v)}" for k, v in rows) + "\n"


def feasibility_report(
    n: int,
    d_min: int,
    f_max: int,
    i_s_max: float | None = None,
    *,
    r0: float | None = None,
    w_bar: float = 0.0,
    degrees=None,
) -> FeasibilityReport:
    """Evaluate the complete-graph, noncomplete and dynamic-degree conditions.

    ``lemma1``: n > 2 F + 1.  ``lemma2``: d_min > 2 F + n/2.  ``eq24``: every
    d_i > (3/2 + 2 w - 1/R0) n (needs ``r0``).  ``pruning_covers``: 2 F >= 2 I_s n.
    """
    l1 = n - (2 * f_max + 1)
    l2 = d_min - (2 * f_max + n / 2.0)
    eq24 = eq24_slack = None
    if r0 is not None:
        thr = (1.5 + 2.0 * w_bar - 1.0 / r0) * n
        deg = np.asarray([d_min] if degrees is None else degrees)
        eq24_slack = float(deg.min() - thr)
        eq24 = bool(eq24_slack > 0)
    covers = None if i_s_max is None else bool(2 * f_max >= 2 * i_s_max * n - 1e-9)
    return FeasibilityReport(
        lemma1=bool(l1 > 0),
        lemma1_slack=float(l1),
        lemma2=bool(l2 > 0),
        lemma2_slack=float(l2),
        eq24=eq24,
        eq24_slack=eq24_slack,
        pruning_covers=covers,
    )


@dataclass
class StepDecision:
    b: float
    f: np.ndarray
    b_s: np.ndarray
    local_ratios: np.ndarray
    clamped: bool = False


@dataclass
class PolicyMaker:
    """Per-trial driver producing (b, F) each step.

    Global kinds read the SIR fraction I(k); local kinds read the ledger's
    local ratios, counting cured agents as infected since their old value
    is still visible for that round.  Decisions refresh every ``stride``
    steps.
    """

    cfg: PolicyConfig
    params: SirParams
    graph: Graph
    partition: Partition
    b0: float = field(init=False)
    _unions: np.ndarray = field(init=False, repr=False)
    _union_size: np.ndarray = field(init=False, repr=False)
    _weights: np.ndarray = field(init=False, repr=False)
    _static_f: np.ndarray | None = field(init=False, default=None, repr=False)
    _last: StepDecision | None = field(init=False, default=None, repr=False)
    f_max_seen: int = field(init=False, default=0)
    clamp_events: int = field(init=False, default=0)

    def __post_init__(self):
        g, p = self.graph, self.partition
        self._unions = neighborhood_unions(g, p).astype(np.float64)
        self._union_size = self._unions.sum(axis=1)
        self._weights = p.sizes() / g.n
        if self.cfg.is_static:
            if self.cfg.b0 is not None:
                self.b0 = self.cfg.b0
            else:
                try:
                    self.b0 = solve_b_star(self.params, self.cfg.w_bar)
                except NoEpidemicError:
                    self.b0 = 1.0
            self._static_f = static_assign(
                self.b0, g.n, g.degrees, self.cfg.rule, self.cfg.f0, complete=g.is_complete()
            )
        else:
            self.b0 = float("nan")

    def observed(self, ledger: StatusLedger) -> np.ndarray:
        st = ledger.status
        mask = ((st == _INF) | (st == _CURED)).astype(np.float64)
        hit = self._unions @ mask
        return np.divide(hit, self._union_size, out=np.zeros_like(hit), where=self._union_size > 0)

    def decide(self, state: SirState, ledger: StatusLedger) -> StepDecision:
        if self._last is not None and state.k % self.cfg.stride:
            return self._last
        ratios = self.observed(ledger)
        cfg, g = self.cfg, self.graph
        clamped = False
        if cfg.is_static:
            b_s = np.full(self.partition.m, self.b0)
            f = self._static_f
        else:
            i_s = np.full(self.partition.m, state.i) if not cfg.is_local else ratios
            b_s, f, _ = dynamic_assign(
                i_s,
                cfg.w_bar,
                g.n,
                int(g.degrees.min()),
                cfg.rule,
                partition=self.partition,
                degrees=g.degrees,
                global_ratio=state.i,
                f0=cfg.f0,
            )
            if cfg.rule == "absolute" and cfg.f0 is None:
                cap = math.ceil(g.n / 2) - 1
                if f.max(initial=0) > cap:
                    f = np.minimum(f, cap)
                    clamped = True
                    self.clamp_events += 1
        b = float(np.clip(np.dot(self._weights, b_s), 0.0, 1.0))
        self.f_max_seen = max(self.f_max_seen, int(f.max(initial=0)))
        self._last = StepDecision(b=b, f=f, b_s=b_s, local_ratios=ratios, clamped=clamped)
        return self._last

    def report(self, i_s_max: float | None = None) -> FeasibilityReport:
        g = self.graph
        r0 = self.params.r0
        return feasibility_report(
            g.n,
            int(g.degrees.min()),
            self.f_max_seen,
            i_s_max,
            r0=r0 if r0 > 1 else None,
            w_bar=self.cfg.w_bar,
            degrees=g.degrees,
        )


def bounds_summary(r0: float) -> dict:
    """W_s, W_d and b* for quick reporting."""
    out = {"W_s": static_heterogeneity_bound(r0), "W_d": dynamic_heterogeneity_bound(r0)}
    out["b_star"] = solve_b_star(r0) if r0 > 1 else None
    return out
