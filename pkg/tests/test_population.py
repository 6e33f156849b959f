import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sirmsr.epidemic import FixedReduction, SirParams, SirState, simulate_sir
from sirmsr.network import Partition
from sirmsr.population import (
    Cardinalities,
    InfectionMode,
    LedgerError,
    Status,
    StatusLedger,
    StatusTraceWriter,
    advance_statuses,
    integer_cardinalities,
    regular_set,
)

HOMO = InfectionMode()


def _half_partition(n):
    return Partition(2, np.repeat([1, 2], n // 2))


def test_cardinalities_examples():
    assert integer_cardinalities(SirState(0.99, 0.01, 0.0), 1000) == (990, 0, 10)
    assert integer_cardinalities(SirState(1.0, 0.0, 0.0), 37) == (37, 0, 0)
    assert integer_cardinalities(SirState(0.5, 0.0, 0.5), 10) == (5, 5, 0)


def test_cardinalities_overshoot_clamps():
    # ceil(0.55*10) + ceil(0.44*10) = 6 + 5 > 10
    c = integer_cardinalities(SirState(0.55, 0.01, 0.44), 10)
    assert c == Cardinalities(6, 4, 0)


@settings(max_examples=300, deadline=None)
@given(s=st.floats(0, 1), frac=st.floats(0, 1), n=st.integers(1, 500))
def test_cardinalities_partition_n(s, frac, n):
    i = (1 - s) * frac
    c = integer_cardinalities(SirState(s, i, max(0.0, 1 - s - i)), n)
    assert sum(c) == n and min(c) >= 0
    assert c.infectious <= max(0, round(i * n + 1e-6))


def _ledger(n, ni, seed=0, mode=HOMO, part=None):
    return StatusLedger.initial(Cardinalities(n - ni, 0, ni), mode, part, np.random.default_rng(seed))


def test_unchanged_targets_only_retire_cured():
    rng = np.random.default_rng(1)
    led = _ledger(20, 5)
    led = advance_statuses(led, Cardinalities(15, 2, 3), HOMO, None, rng)
    assert led.n_cured == 2
    nxt = advance_statuses(led, Cardinalities(15, 2, 3), HOMO, None, rng)
    assert nxt.n_cured == 0
    assert np.array_equal(nxt.status == Status.RECOVERED, led.status == Status.CURED)
    assert np.array_equal(nxt.status == Status.INFECTIOUS, led.status == Status.INFECTIOUS)


def test_gathered_spills_after_target_exhausted():
    n = 10
    part = _half_partition(n)
    # subgroup 2 = agents 5..9, make them all infectious first
    led = StatusLedger.initial(Cardinalities(5, 0, 5), InfectionMode.gathered(2), part, np.random.default_rng(0))
    assert set(np.flatnonzero(led.status == Status.INFECTIOUS)) == {5, 6, 7, 8, 9}
    nxt = advance_statuses(led, Cardinalities(4, 0, 6), InfectionMode.gathered(2), part, np.random.default_rng(3))
    new = np.flatnonzero((nxt.status == Status.INFECTIOUS) & (led.status == Status.SUSCEPTIBLE))
    assert new.size == 1 and part.assignment[new[0]] == 1


def test_gathered_targets_subgroup_first():
    part = _half_partition(100)
    led = _ledger(100, 0, part=part)
    nxt = advance_statuses(led, Cardinalities(70, 0, 30), InfectionMode.gathered(2), part, np.random.default_rng(0))
    assert np.all(part.assignment[nxt.status == Status.INFECTIOUS] == 2)


def test_homogeneous_split_is_binomial():
    part = _half_partition(100)
    counts = []
    for seed in range(1000):
        led = _ledger(100, 0, part=part)
        nxt = advance_statuses(led, Cardinalities(95, 0, 5), HOMO, part, np.random.default_rng(seed))
        counts.append(np.count_nonzero(part.assignment[nxt.status == Status.INFECTIOUS] == 1))
    # without replacement from 50/50 the variance is a bit below binomial
    mean = np.mean(counts)
    sigma = np.sqrt(5 * 0.25 / 1000)
    assert abs(mean - 2.5) < 3 * sigma
    assert np.var(counts) < 5 * 0.25 * 1.1


def test_monotonicity_violation_is_error():
    led = _ledger(10, 2)
    with pytest.raises(LedgerError):
        advance_statuses(led, Cardinalities(9, 0, 1), HOMO, None, np.random.default_rng(0))
    with pytest.raises(LedgerError):
        advance_statuses(led, Cardinalities(8, 1, 2), HOMO, None, np.random.default_rng(0))


def test_regular_set_filter():
    rng = np.random.default_rng(4)
    led = _ledger(30, 6)
    led = advance_statuses(led, Cardinalities(20, 3, 7), HOMO, None, rng)
    oracle = [i for i, s in enumerate(led.status) if s in (Status.SUSCEPTIBLE, Status.RECOVERED)]
    assert regular_set(led).tolist() == oracle
    cured = np.flatnonzero(led.status == Status.CURED)
    assert not set(cured) & set(regular_set(led).tolist())
    nxt = advance_statuses(led, Cardinalities(20, 3, 7), HOMO, None, rng)
    assert set(cured) <= set(regular_set(nxt).tolist())


def test_all_susceptible_regular():
    assert regular_set(_ledger(12, 0)).tolist() == list(range(12))


def _drive(n, s0, beta, steps, seed, mode=HOMO, part=None):
    tr = simulate_sir(SirParams(beta, 0.1, 0.01), FixedReduction(1.0), SirState.initial(s0, 1 - s0), steps)
    rng = np.random.default_rng(seed)
    led = StatusLedger.initial(
        integer_cardinalities(SirState(tr.s[0], tr.i[0], tr.r[0]), n), mode, part, rng
    )
    ledgers = [led]
    for k in range(1, steps + 1):
        tgt = integer_cardinalities(SirState(tr.s[k], tr.i[k], tr.r[k]), n)
        led = advance_statuses(led, tgt, mode, part, rng)
        assert led.counts == tgt
        ledgers.append(led)
    return ledgers


@pytest.mark.parametrize("seed", range(5))
def test_flows_along_a_trajectory(seed):
    leds = _drive(60, 0.95, 0.6, 1500, seed)
    for a, b in zip(leds, leds[1:]):
        sa, sb = a.status, b.status
        assert np.all(sb[sa == Status.CURED] == Status.RECOVERED)
        assert np.all(sb[sa == Status.RECOVERED] == Status.RECOVERED)
        assert np.all(np.isin(sb[sa == Status.INFECTIOUS], [Status.INFECTIOUS, Status.CURED]))
        assert np.all(np.isin(sa[sb == Status.SUSCEPTIBLE], [Status.SUSCEPTIBLE]))
        assert b.k == a.k + 1


def test_determinism_per_seed():
    a = _drive(40, 0.9, 0.5, 400, 7)[-1]
    b = _drive(40, 0.9, 0.5, 400, 7)[-1]
    assert np.array_equal(a.status, b.status)
    assert np.array_equal(a.infected_since, b.infected_since)


def test_infection_mode_validation():
    with pytest.raises(ValueError):
        InfectionMode("clustered")
    part = _half_partition(10)
    with pytest.raises(ValueError):
        StatusLedger.initial(Cardinalities(8, 0, 2), InfectionMode.gathered(3), part, np.random.default_rng(0))


def test_status_trace_csv():
    buf = io.StringIO()
    w = StatusTraceWriter(buf, 2)
    led = _ledger(4, 1)
    w.write(led, [0.25, 0.5], 0.25)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "k,n_S,n_I,n_C,n_R,I_1,I_2,w_max"
    assert lines[1] == "0,3,1,0,0,0.25,0.5,0.25"


def test_same_step_infection_and_recovery_stays_marked():
    led = _ledger(5, 0)
    nxt = advance_statuses(led, Cardinalities(4, 1, 0), HOMO, None, np.random.default_rng(0))
    cured = np.flatnonzero(nxt.status == Status.CURED)
    assert cured.size == 1
    assert nxt.infected_since[cured[0]] == nxt.k == 1
