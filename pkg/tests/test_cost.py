import math

import pytest
from hypothesis import given, strategies as st

from uavoffload import cost
from uavoffload.scenario import Task


def test_local_example(up):
    out = cost.local_outcome(Task(2e6, 500, 1.0), 1e9, up)
    assert out.delay_s == pytest.approx(1.0)
    assert out.energy_j == pytest.approx(0.1)


def test_mec_example(up):
    out = cost.mec_outcome(Task(2e6, 500, 1.0), 1e10, 4e6, 0.1, up)
    assert out.delay_s == pytest.approx(0.6)
    assert out.energy_j == pytest.approx(0.05)
    expect = 0.9 * math.log(1.4) - 0.1 * 0.05 - 1e-12 * 1e10
    assert out.utility == pytest.approx(expect)


def test_utility_example(up):
    u = cost.utility(0.5, 0.05, Task(1.0, 1.0, 1.0), up)
    assert u == pytest.approx(0.9 * math.log(1.5) - 0.1 * 0.05)
    assert u == pytest.approx(0.3599, abs=1e-4)


def test_deadline_exact_and_past(up):
    t = Task(1.0, 1.0, 1.0)
    assert cost.utility(1.0, 0.0, t, up) == 0.0
    assert cost.utility(1.0 + 1e-9, 0.0, t, up) == cost.INFEASIBLE


def test_vfc_examples(up):
    t = Task(2e6, 500, 1.0)
    out = cost.vfc_outcome(t, (0.5, 0.5), (2e6, 2e6), (1e9, 1e9), 0.1, up)
    assert out.delay_s == pytest.approx(1.0)
    single = cost.vfc_outcome(t, (1.0,), (4e6,), (2e9,), 0.1, up)
    assert single.delay_s == pytest.approx(2e6 / 4e6 + 1e9 / 2e9)
    assert single.energy_j == pytest.approx(0.1 * 0.5)
    zero = cost.vfc_outcome(t, (1.0, 0.0), (4e6, 1e6), (2e9, 0.0), 0.1, up)
    assert zero.delay_s == single.delay_s and zero.energy_j == single.energy_j


def test_vfc_zero_cpu_with_share_is_infeasible(up):
    out = cost.vfc_outcome(Task(2e6, 500, 1.0), (0.5, 0.5), (4e6, 4e6), (1e9, 0.0), 0.1, up)
    assert not out.feasible and out.utility == cost.INFEASIBLE


@given(st.floats(1e5, 5e6), st.floats(50, 2000), st.floats(0.2, 1.0), st.floats(5e8, 3e9))
def test_local_outcome_identities(d, eta, tmax, f):
    from uavoffload.scenario import UtilityParams
    up = UtilityParams()
    t = Task(d, eta, tmax)
    out = cost.local_outcome(t, f, up)
    assert out.delay_s == pytest.approx(d * eta / f)
    assert out.energy_j == pytest.approx(1e-28 * f ** 2 * d * eta)
    assert out.feasible == (out.delay_s <= tmax)
