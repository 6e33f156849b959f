"""Trial driver, Monte-Carlo sweeps and the pure-SIR policy comparison."""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence, TextIO

import numpy as np

from .consensus import (
    DEFAULT_EPS,
    ConstantAdversary,
    PruningError,
    ResilienceMonitor,
    TimeResponseWriter,
    Verdict,
    step_network,
)
from .epidemic import (
    AdaptiveGlobal,
    DynamicLocal,
    FixedReduction,
    NoEpidemicError,
    SirParams,
    SirState,
    simulate_sir,
    sir_step,
    solve_b_star,
)
from .network import Graph, generate_rgg, partition_nodes
from .policy import FeasibilityReport, PolicyConfig, PolicyMaker
from .population import (
    InfectionMode,
    Status,
    StatusLedger,
    StatusTraceWriter,
    advance_statuses,
    integer_cardinalities,
)
from . import _kernels

__all__ = [
    "TrialConfig",
    "TrialResult",
    "SweepGrid",
    "SweepCell",
    "run_trial",
    "run_sweep",
    "run_policy_comparison",
    "trial_seed",
    "SWEEP_HEADER",
    "COMPARE_HEADER",
]

log = logging.getLogger(__name__)

_SUS, _INF, _CURED = int(Status.SUSCEPTIBLE), int(Status.INFECTIOUS), int(Status.CURED)

TAIL_LEVEL = 1e-4
TAIL_FRACTION = 0.1
CERTIFY_EVERY = 50
STATIC_I0_WARN = 0.03
SWEEP_HEADER = ["axis1", "axis2", "success_rate", "trials", "mean_peak_I", "lemma1", "lemma2", "eq24"]
COMPARE_HEADER = ["R0", "policy", "I_max", "t_below"]


@dataclass(frozen=True)
class TrialConfig:
    n: int = 100
    side: float = 100.0
    radius: float = 150.0
    m: int = 2
    partition_mode: str = "index"
    params: SirParams = SirParams(beta=0.5, gamma=0.1, dt=0.01)
    s0: float = 0.99
    i0: float = 0.01
    infection: InfectionMode = InfectionMode()
    policy: PolicyConfig = PolicyConfig()
    adversary: float = -1.0
    horizon: int = 6000
    max_horizon: int = 60000
    eps: float = DEFAULT_EPS
    seed: int | Sequence[int] = 0
    early_stop: bool = False
    record: bool = True
    graph: Graph | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.side <= 0 or self.radius <= 0:
            raise ValueError("side and radius must be positive")
        if not 1 <= self.m <= self.n:
            raise ValueError("need 1 <= m <= n")
        if not (0 <= self.s0 <= 1 and 0 <= self.i0 <= 1 and self.s0 + self.i0 <= 1 + 1e-12):
            raise ValueError("initial fractions must lie in [0, 1] and sum to at most 1")
        if self.horizon < 1 or self.max_horizon < self.horizon:
            raise ValueError("need 1 <= horizon <= max_horizon")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.graph is not None and self.graph.n != self.n:
            raise ValueError("supplied graph does not have n nodes")
        if self.infection.kind == "gathered" and not 1 <= self.infection.target <= self.m:
            raise ValueError("gathered target must be a valid subgroup")

    def with_r0(self, r0: float) -> "TrialConfig":
        p = self.params
        return replace(self, params=SirParams(beta=r0 * p.gamma, gamma=p.gamma, dt=p.dt))


def trial_seed(base, *path: int) -> np.random.SeedSequence:
    base = list(base) if isinstance(base, (list, tuple)) else [int(base)]
    return np.random.SeedSequence(base + [int(v) for v in path])


@dataclass
class TrialResult:
    verdict: Verdict
    reason: str
    peak_i: float
    w_bar: float
    final_spread: float
    neg_ratio_max: float
    neg_excess_max: int
    feasibility: FeasibilityReport
    steps: int
    horizon_used: int
    horizon_capped: bool
    early_stopped: bool
    wall_time: float
    b0: float
    f_max: int
    clamp_events: int = 0
    warnings: list = field(default_factory=list)
    trace: dict | None = field(default=None, repr=False)

    @property
    def success(self) -> bool:
        return self.verdict is Verdict.SUCCESS

    def write_time_response(self, fh: TextIO) -> None:
        if self.trace is None:
            raise ValueError("trial was run without recording")
        t = self.trace
        w = TimeResponseWriter(fh)
        for row in zip(t["k"], t["S"], t["I"], t["R"], t["neg_ratio"], t["x_min"], t["x_max"]):
            w.write(*row)

    def save_states(self, path) -> None:
        """Per-step agent values and statuses as ``.npz`` (keys ``x``, ``status``)."""
        if self.trace is None:
            raise ValueError("trial was run without recording")
        np.savez_compressed(path, x=self.trace["x"], status=self.trace["status"])

    def write_status_trace(self, fh: TextIO) -> None:
        if self.trace is None:
            raise ValueError("trial was run without recording")
        t = self.trace
        m = t["local"].shape[1]
        w = StatusTraceWriter(fh, m)
        for idx in range(len(t["k"])):
            w.write_counts(t["k"][idx], t["counts"][idx], t["local"][idx], t["w_max"][idx])


def _no_more_infections(state: SirState, params: SirParams, n: int, n_s: int) -> bool:
    """True when the SIR layer can no longer drop ceil(S n) below ``n_s``.

    Once beta S < gamma the infectious fraction decays geometrically, which
    bounds the total future loss of S.
    """
    floor_s = _infection_floor(state, params)
    return floor_s is not None and floor_s * n > n_s - 1 + 1e-9


def _infection_floor(state: SirState, params: SirParams) -> float | None:
    """Lower bound on S over the remaining run, or None if S can still fall fast."""
    beta, gamma, dt = params.beta, params.gamma, params.dt
    s, i = state.s, state.i
    if i == 0.0:
        return s
    if beta * s >= gamma or beta * i * dt >= 1.0:
        return None
    return s * math.exp(-beta * i / ((gamma - beta * s) * (1.0 - beta * i * dt)))


def _static_outcome_fixed(
    state: SirState, params: SirParams, g: Graph, status: np.ndarray, f: np.ndarray, spread: float, eps: float
) -> bool:
    """Certificate that a constant-F run can no longer change its verdict.

    Holds when every agent prunes at least its current corrupted neighbours
    plus every infection still possible, kept sets stay nonempty and the
    regular spread is already below eps.  MSR then keeps each regular and
    cured output inside the current regular hull for the rest of the run.
    """
    if not spread < eps:
        return False
    floor_s = _infection_floor(state, params)
    if floor_s is None:
        return False
    n = g.n
    n_s = int(np.count_nonzero(status == _SUS))
    m_new = max(0, n_s - max(0, int(math.ceil(floor_s * n - 1e-9))))
    corrupt = (status == _INF) | (status == _CURED)
    seen = g.adj.astype(np.int64) @ corrupt.astype(np.int64)
    if np.any(f < seen + m_new):
        return False
    deg = g.degrees
    if np.any(deg + 1 - 2 * f < 1):
        return False
    may_cure = status == _INF
    if m_new > 0:
        may_cure = may_cure | (status == _SUS)
    return not np.any(deg[may_cure] - 2 * f[may_cure] < 1)


def _tail_ok(i_trace: list, horizon: int) -> bool:
    start = horizon - int(math.ceil(TAIL_FRACTION * horizon))
    return max(i_trace[start : horizon + 1]) < TAIL_LEVEL


def run_trial(cfg: TrialConfig, seed: np.random.SeedSequence | None = None) -> TrialResult:
    """Simulate one coupled epidemic/consensus run.

    Each step: the policy reads step-k ratios, the SIR layer advances with
    the effective b, the network runs one MSR round on step-k statuses, then
    the ledger moves to the new cardinalities and newly infected agents take
    the adversary value.
    """
    t0 = time.perf_counter()
    ss = seed if seed is not None else trial_seed(cfg.seed)
    g_ss, p_ss, l_ss, x_ss = ss.spawn(4)
    n = cfg.n
    if cfg.graph is not None:
        g = cfg.graph
    else:
        g = generate_rgg(n, cfg.side, cfg.radius, int(g_ss.generate_state(1, np.uint64)[0]))
    part = partition_nodes(g, cfg.m, cfg.partition_mode, int(p_ss.generate_state(1, np.uint64)[0]))
    rng = np.random.default_rng(l_ss)
    params = cfg.params
    adversary = ConstantAdversary(cfg.adversary)

    warnings_ = []
    if cfg.policy.is_static and cfg.i0 > STATIC_I0_WARN:
        msg = f"I(0)={cfg.i0} > {STATIC_I0_WARN}: the static peak bound assumes S(0) close to 1"
        warnings_.append(msg)
        log.info(msg)
    if g.isolated.size:
        warnings_.append(f"{g.isolated.size} isolated node(s)")

    state = SirState.initial(cfg.s0, cfg.i0)
    ledger = StatusLedger.initial(integer_cardinalities(state, n), cfg.infection, part, rng)
    x = np.random.default_rng(x_ss).uniform(0.0, 1.0, n)
    x[ledger.status == Status.INFECTIOUS] = cfg.adversary

    maker = PolicyMaker(cfg.policy, params, g, part)
    monitor = ResilienceMonitor(safety=(0.0, 1.0), eps=cfg.eps)
    i_trace = [state.i]
    keys = ("k", "S", "I", "R", "counts", "local", "w_max", "x", "status")
    rec = {key: [] for key in keys} if cfg.record else None
    peak_i = state.i
    w_emp = 0.0
    neg_excess = 0
    horizon = cfg.horizon
    pruning_failure = None
    early = False

    while True:
        k = state.k
        st = ledger.status
        counts = np.bincount(st, minlength=4)
        dec = maker.decide(state, ledger)
        global_ledger = (counts[_INF] + counts[_CURED]) / n
        w_k = float(np.max(np.abs(dec.local_ratios - global_ledger)))
        w_emp = max(w_emp, w_k)
        safe = monitor.observe(k, x, st)
        neg_excess = max(
            neg_excess,
            int(round(monitor.neg_ratio[-1] * n)) - int(counts[_INF] + counts[_CURED]),
        )
        if rec is not None:
            for key, v in (("k", k), ("S", state.s), ("I", state.i), ("R", state.r)):
                rec[key].append(v)
            rec["counts"].append(counts)
            rec["local"].append(dec.local_ratios)
            rec["w_max"].append(w_k)
            rec["x"].append(x)
            rec["status"].append(st)

        if cfg.early_stop:
            if not safe:
                early = True
                break
            if (
                counts[_INF] == 0
                and counts[_CURED] == 0
                and monitor.spread < cfg.eps
                and _no_more_infections(state, params, n, int(counts[_SUS]))
            ):
                early = True
                break
            if (
                cfg.policy.is_static
                and k % CERTIFY_EVERY == 0
                and _static_outcome_fixed(state, params, g, st, dec.f, monitor.spread, cfg.eps)
            ):
                early = True
                break
        if k >= horizon:
            if _tail_ok(i_trace, horizon) or horizon >= cfg.max_horizon:
                break
            horizon = min(cfg.max_horizon, int(math.ceil(horizon * 1.5)))

        try:
            x_next = step_network(x, g, ledger, dec.f, adversary)
        except PruningError as exc:
            pruning_failure = exc.agent
            break
        state = sir_step(state, params, dec.b)
        i_trace.append(state.i)
        peak_i = max(peak_i, state.i)
        ledger = advance_statuses(ledger, integer_cardinalities(state, n), cfg.infection, part, rng)
        fresh = ledger.infected_since == ledger.k
        if fresh.any():
            x_next[fresh] = cfg.adversary
        x = x_next

    rep = monitor.report(pruning_failure)
    trace = None
    if rec is not None:
        trace = {k: np.asarray(v) for k, v in rec.items()}
        trace["neg_ratio"] = rep.neg_ratio
        trace["x_min"] = rep.x_min
        trace["x_max"] = rep.x_max
    capped = not _tail_ok(i_trace, len(i_trace) - 1) and horizon >= cfg.max_horizon and not early
    return TrialResult(
        verdict=rep.verdict,
        reason=rep.reason if pruning_failure is None else f"pruning_infeasible at agent {pruning_failure}",
        peak_i=float(peak_i),
        w_bar=float(w_emp),
        final_spread=rep.final_spread,
        neg_ratio_max=float(rep.neg_ratio.max(initial=0.0)),
        neg_excess_max=int(neg_excess),
        feasibility=maker.report(),
        steps=state.k,
        horizon_used=horizon,
        horizon_capped=bool(capped),
        early_stopped=early,
        wall_time=time.perf_counter() - t0,
        b0=float(maker.b0),
        f_max=maker.f_max_seen,
        clamp_events=maker.clamp_events,
        warnings=warnings_,
        trace=trace,
    )


SWEEP_AXES = ("r0", "radius", "f", "b0")


@dataclass(frozen=True)
class SweepGrid:
    axis1: str
    values1: tuple
    axis2: str
    values2: tuple
    trials: int = 50

    def __post_init__(self):
        for name in (self.axis1, self.axis2):
            if name not in SWEEP_AXES:
                raise ValueError(f"unknown sweep axis {name!r}; expected one of {SWEEP_AXES}")
        if self.axis1 == self.axis2:
            raise ValueError("sweep axes must differ")
        if not self.values1 or not self.values2:
            raise ValueError("sweep axes must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "values1", tuple(float(v) for v in self.values1))
        object.__setattr__(self, "values2", tuple(float(v) for v in self.values2))

    def cells(self):
        return list(itertools.product(self.values1, self.values2))


def _apply_axis(cfg: TrialConfig, name: str, value: float) -> TrialConfig:
    if name == "r0":
        return cfg.with_r0(value)
    if name == "radius":
        return replace(cfg, radius=value)
    if name == "f":
        return replace(cfg, policy=replace(cfg.policy, pruning_rule="absolute", f0=int(round(value))))
    if name == "b0":
        return replace(cfg, policy=replace(cfg.policy, b0=value))
    raise ValueError(name)


@dataclass
class SweepCell:
    v1: float
    v2: float
    successes: int
    trials: int
    mean_peak_i: float
    lemma1: bool
    lemma2: bool
    eq24: bool | None
    reasons: dict

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials


def _sweep_job(args):
    cfg, base_seed, cell, trial = args
    res = run_trial(cfg, trial_seed(base_seed, cell, trial))
    f = res.feasibility
    return cell, res.success, res.peak_i, f.lemma1, f.lemma2, f.eq24, res.verdict.value, res.reason


def run_sweep(
    grid: SweepGrid,
    base: TrialConfig,
    out: TextIO | None = None,
    workers: int = 1,
) -> list[SweepCell]:
    """Success rate per grid cell; trial seeds derive from (seed, cell, trial)."""
    base = replace(base, record=False, early_stop=True)
    jobs = []
    for c, (v1, v2) in enumerate(grid.cells()):
        cfg = _apply_axis(_apply_axis(base, grid.axis1, v1), grid.axis2, v2)
        jobs.extend((cfg, base.seed, c, t) for t in range(grid.trials))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        results = [_sweep_job(j) for j in jobs]

    cells = []
    for c, (v1, v2) in enumerate(grid.cells()):
        rows = [r for r in results if r[0] == c]
        reasons: dict = {}
        for r in rows:
            key = "success" if r[1] else r[6]
            reasons[key] = reasons.get(key, 0) + 1
        eq = [r[5] for r in rows]
        cells.append(
            SweepCell(
                v1=v1,
                v2=v2,
                successes=sum(r[1] for r in rows),
                trials=len(rows),
                mean_peak_i=float(np.mean([r[2] for r in rows])),
                lemma1=all(r[3] for r in rows),
                lemma2=all(r[4] for r in rows),
                eq24=None if any(v is None for v in eq) else all(eq),
                reasons=reasons,
            )
        )
    if out is not None:
        write_sweep_csv(cells, out)
    return cells


def _flag(v) -> str:
    return "n/a" if v is None else ("pass" if v else "fail")


def write_sweep_csv(cells: list[SweepCell], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for c in cells:
        w.writerow(
            [f"{c.v1:.10g}", f"{c.v2:.10g}", f"{c.success_rate:.10g}", c.trials, f"{c.mean_peak_i:.10g}",
             _flag(c.lemma1), _flag(c.lemma2), _flag(c.eq24)]
        )


def sweep_metadata(grid: SweepGrid, base: TrialConfig) -> dict:
    cfg = {k: v for k, v in asdict(replace(base, graph=None)).items() if k != "graph"}
    return {
        "axis1": grid.axis1,
        "axis2": grid.axis2,
        "trials": grid.trials,
        "base": cfg,
        "backend": _kernels.backend(),
        "tail_level": TAIL_LEVEL,
        "tail_fraction": TAIL_FRACTION,
    }


def write_sweep_metadata(grid: SweepGrid, base: TrialConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sweep_metadata(grid, base), fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


COMPARE_POLICIES = ("static", "dynamic", "fixed_0.5", "relaxed")


def _compare_policy(name: str, r0: float):
    if name == "static":
        try:
            return FixedReduction(solve_b_star(r0))
        except NoEpidemicError:
            return FixedReduction(1.0)
    if name == "dynamic":
        return DynamicLocal(0.0)
    if name == "fixed_0.5":
        return FixedReduction(0.5)
    if name == "relaxed":
        return AdaptiveGlobal(c=1.0)
    raise ValueError(name)


def run_policy_comparison(
    r0_values: Sequence[float] = tuple(range(1, 20)),
    gamma: float = 0.1,
    dt: float = 0.01,
    s0: float = 0.9,
    i0: float = 0.1,
    level: float = 0.1,
    horizon: int = 20000,
    max_horizon: int = 400000,
    out: TextIO | None = None,
) -> list[tuple[float, str, float, int | None]]:
    """Pure-SIR peak and first step with I < ``level`` for each policy and R0.

    The horizon grows until the drop below ``level`` is seen.
    """
    rows = []
    init = SirState.initial(s0, i0)
    for r0 in r0_values:
        params = SirParams(beta=r0 * gamma, gamma=gamma, dt=dt)
        for name in COMPARE_POLICIES:
            pol = _compare_policy(name, r0)
            h = horizon
            while True:
                tr = simulate_sir(params, pol, init, h)
                t_below = tr.first_below(level)
                if t_below is not None or h >= max_horizon:
                    break
                h = min(max_horizon, h * 2)
            rows.append((float(r0), name, tr.peak()[0], t_below))
    if out is not None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        for r0, name, peak, t in rows:
            w.writerow([f"{r0:.10g}", name, f"{peak:.10g}", "" if t is None else t])
    return rows
