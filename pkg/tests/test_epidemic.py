import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from sirmsr.epidemic import (
    AdaptiveGlobal,
    DynamicLocal,
    FixedReduction,
    HeterogeneityError,
    NoEpidemicError,
    NoReduction,
    SirParams,
    SirState,
    TimeLimited,
    dynamic_heterogeneity_bound,
    dynamic_peak_bound,
    f_w,
    imax,
    peak_bound_static,
    simulate_sir,
    sir_step,
    solve_b_star,
    static_heterogeneity_bound,
)

DEMO = SirParams(beta=0.4, gamma=0.1, dt=0.01)


def test_step_hand_value():
    s = sir_step(SirState(0.99, 0.01, 0.0), DEMO, 1.0)
    assert s.k == 1
    assert s.s == pytest.approx(0.9899604, abs=1e-12)
    assert s.i == pytest.approx(0.0100296, abs=1e-12)
    assert s.r == pytest.approx(0.00001, abs=1e-15)


def test_step_without_infection_only_advances_k():
    s0 = SirState(0.7, 0.0, 0.3, k=5)
    s1 = sir_step(s0, DEMO, 0.6)
    assert (s1.s, s1.i, s1.r, s1.k) == (0.7, 0.0, 0.3, 6)


def test_step_rejects_bad_b():
    for b in (-0.1, 1.0001, float("nan")):
        with pytest.raises(ValueError):
            sir_step(SirState(0.9, 0.1, 0.0), DEMO, b)


@pytest.mark.parametrize("fields", [(1.1, 0.0, -0.1), (0.5, 0.4, 0.2), (0.5, 0.5, 0.0, -1)])
def test_state_validation(fields):
    with pytest.raises(ValueError):
        SirState(*fields)


def test_params_validation_and_r0():
    with pytest.raises(ValueError):
        SirParams(0.0, 0.1, 0.01)
    assert SirParams.from_r0(5).beta == pytest.approx(0.5)
    assert DEMO.r0 == 0.4 / 0.1


@settings(max_examples=300, deadline=None)
@given(
    s=st.floats(0, 1),
    frac=st.floats(0, 1),
    beta=st.floats(0.01, 50),
    gamma=st.floats(0.01, 1),
    b=st.floats(0, 1),
)
def test_conservation_and_monotone_recovered(s, frac, beta, gamma, b):
    i = (1 - s) * frac
    r = 1 - s - i
    if r < 0:
        r = 0.0
    state = SirState(s, i, r)
    nxt = sir_step(state, SirParams(beta, gamma, 0.01), b)
    assert abs((nxt.s + nxt.i + nxt.r) - (s + i + r)) < 1e-12
    assert nxt.r >= state.r
    assert nxt.s <= state.s


def test_trace_shape_and_first_row():
    init = SirState.initial(0.99, 0.01)
    tr = simulate_sir(DEMO, NoReduction(), init, 50)
    assert len(tr) == 51
    assert (tr.s[0], tr.i[0], tr.r[0]) == (init.s, init.i, init.r)
    assert np.all(tr.b == 1.0)


def test_trace_csv_format():
    tr = simulate_sir(DEMO, FixedReduction(0.7), SirState.initial(0.99, 0.01), 3)
    buf = io.StringIO()
    tr.write_csv(buf)
    lines = buf.getvalue().split("\n")
    assert lines[0] == "k,S,I,R,b"
    assert lines[1] == "0,0.99,0.01,0,0.7"
    assert len(lines) == 6 and lines[-1] == ""


def test_policies_emit_clamped_values():
    st_ = SirState(0.2, 0.7, 0.1)
    assert AdaptiveGlobal(2.0)(0, st_) == 0.0
    assert DynamicLocal(0.1)(0, SirState(1.0, 0.0, 0.0)) == pytest.approx(0.8)
    tl = TimeLimited(0.7, 10, 20)
    assert [tl(k, st_) for k in (9, 10, 20, 21)] == [1.0, 0.7, 0.7, 1.0]
    with pytest.raises(ValueError):
        FixedReduction(1.5)
    with pytest.raises(ValueError):
        DynamicLocal(-0.1)


def test_peak_bound_values():
    assert peak_bound_static(0.5, 2.0) == (0.0, False)
    assert peak_bound_static(1.0, 2.0).value == pytest.approx(0.15343, abs=1e-4)
    assert peak_bound_static(0.5, 19.0).value == pytest.approx(0.6578, abs=1e-3)
    assert peak_bound_static(0.3, 2.0).outbreak is False


def _bstar_oracle(r0, w=0.0):
    def fn(b):
        x = 1.0 / (b * r0)
        return 2 * (1 - x + x * math.log(x)) + 2 * w - (1 - b)

    return brentq(fn, 1.0 / r0 * (1 + 1e-12), 1.0, xtol=1e-15)


# frozen from the brentq oracle above
BSTAR_FROZEN = {1.2: 0.9771809, 1.5: 0.9173868, 2.0: 0.8216133, 5.0: 0.5134926, 19.0: 0.2065155, 200.0: 0.0257152}


@pytest.mark.parametrize("r0", sorted(BSTAR_FROZEN))
def test_bstar_matches_oracle(r0):
    b = solve_b_star(r0)
    assert b == pytest.approx(_bstar_oracle(r0), abs=1e-8)
    assert b == pytest.approx(BSTAR_FROZEN[r0], abs=1e-6)
    assert abs(f_w(b, r0)) < 1e-9


def test_bstar_r0_2_bracket():
    assert f_w(0.82, 2.0) < 0 < f_w(0.83, 2.0)
    assert solve_b_star(SirParams.from_r0(2.0)) == pytest.approx(0.822, abs=1e-3)


def test_bstar_with_heterogeneity():
    b = solve_b_star(3.0, 0.1)
    assert b == pytest.approx(_bstar_oracle(3.0, 0.1), abs=1e-8)
    assert b < solve_b_star(3.0)


def test_bstar_errors():
    with pytest.raises(NoEpidemicError):
        solve_b_star(1.0)
    with pytest.raises(HeterogeneityError, match="exceeds static bound"):
        solve_b_star(2.0, 0.25)


@pytest.mark.parametrize("r0", [1.1, 2.0, 7.5, 20.0])
def test_f_w_monotone_on_domain(r0):
    bs = np.linspace(1.0 / r0, 1.0, 101)[1:]
    vals = [f_w(b, r0) for b in bs]
    assert np.all(np.diff(vals) > 0)
    assert f_w(1.0 / r0 + 1e-9, r0) < 0 < f_w(1.0, r0)


def test_bounds():
    assert static_heterogeneity_bound(2.0) == 0.25
    assert dynamic_heterogeneity_bound(2.0) == 0.0
    assert dynamic_peak_bound(2.0) == 0.25
    assert dynamic_peak_bound(SirParams.from_r0(5.0)) == pytest.approx(0.4)
    with pytest.raises(NoEpidemicError):
        dynamic_peak_bound(1.0)
    # the dynamic allowance is the tighter one once R0 > 4/3
    r = np.linspace(4 / 3 + 1e-6, 1.99, 50)
    assert np.all(dynamic_heterogeneity_bound(r) < static_heterogeneity_bound(r))
    assert dynamic_heterogeneity_bound(1.2) > static_heterogeneity_bound(1.2)


@pytest.mark.parametrize("r0", [1.5, 2.0, 5.0, 19.0])
@pytest.mark.parametrize("s0", [0.9, 0.99, 0.999, 1.0])
def test_dynamic_policy_respects_peak_bound(r0, s0):
    # the bound presumes the outbreak starts below it
    i0 = 1 - s0
    assert i0 < dynamic_peak_bound(r0)
    tr = simulate_sir(SirParams.from_r0(r0), AdaptiveGlobal(2.0), SirState.initial(s0, i0), 8000)
    assert np.all(tr.i < dynamic_peak_bound(r0))


@settings(max_examples=60, deadline=None)
@given(r0=st.floats(1.05, 25), i0=st.floats(0, 0.02), r_init=st.floats(0, 0.5))
def test_dynamic_bound_for_small_initial_outbreaks(r0, i0, r_init):
    init = SirState(1 - i0 - r_init, i0, r_init)
    if i0 >= dynamic_peak_bound(r0):
        return
    tr = simulate_sir(SirParams.from_r0(r0), DynamicLocal(0.0), init, 4000)
    assert np.all(tr.i < dynamic_peak_bound(r0))


def test_peak_ordering_in_fixed_b():
    init = SirState.initial(0.99, 0.01)
    peaks = [simulate_sir(DEMO, FixedReduction(b), init, 6000).peak()[0] for b in (0.3, 0.5, 0.7, 0.9, 1.0)]
    assert peaks == sorted(peaks)


def test_imax_raw_formula():
    assert imax(1.0, 1.0) == 0.0
    assert imax(1.0, math.e) == pytest.approx(1 - 2 / math.e)
