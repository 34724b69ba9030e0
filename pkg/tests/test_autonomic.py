import pytest
from hypothesis import assume, given, strategies as st

from chordsched.autonomic import (
    POLICIES, AutonomicManager, CycleMetrics, EventKind, PolicyConfig, change_proportion,
    evaluate_cycle, recommend_interval_ec, recommend_interval_wmc,
)
from chordsched.chord import ManagerEvent
from chordsched.errors import InvalidArgument

counts = st.integers(min_value=0, max_value=10**4)
ks = st.floats(min_value=0.01, max_value=1000.0)
intervals = st.floats(min_value=0.25, max_value=600.0)


def test_change_proportion_examples():
    for k in (1, 8, 32):
        assert change_proportion(0, k) == 0.0
    assert change_proportion(1, 1) == 0.5
    assert change_proportion(32, 32) == 0.5
    assert change_proportion(32, 1) == pytest.approx(32 / 33, abs=1e-12)


@pytest.mark.parametrize("k", [0, -1])
def test_change_proportion_rejects_bad_k(k):
    with pytest.raises(InvalidArgument):
        change_proportion(1, k)


def test_recommendation_examples():
    assert recommend_interval_wmc(2, 0, 1) == 2
    assert recommend_interval_wmc(2, 1, 1) == 3
    assert recommend_interval_wmc(2, 8, 8) == 3
    assert recommend_interval_ec(2, 0, 1) == 2
    assert recommend_interval_ec(2, 1, 1) == 1
    assert recommend_interval_ec(10, 32, 32) == 5


def test_evaluate_cycle_examples():
    p2 = POLICIES["policy2"]
    d = evaluate_cycle(2, CycleMetrics(wmc=1, ec=0), p2)
    assert d.new_interval == 2.5 and not d.immediate_maintenance
    d = evaluate_cycle(2, CycleMetrics(wmc=0, ec=1), p2)
    assert d.new_interval == 1.5 and d.immediate_maintenance
    d = evaluate_cycle(2, CycleMetrics(), p2)
    assert d.new_interval == 2 and not d.immediate_maintenance


def test_null_policy_never_changes():
    p0 = POLICIES["policy0"]
    d = evaluate_cycle(2, CycleMetrics(wmc=5, ec=7), p0)
    assert d.new_interval == 2 and not d.immediate_maintenance


def test_policy_parameters():
    assert (POLICIES["policy1"].k_wmc, POLICIES["policy1"].k_ec) == (8, 32)
    assert (POLICIES["policy2"].k_wmc, POLICIES["policy2"].k_ec) == (1, 1)
    assert POLICIES["policy2"].cycle_duration == 2
    assert POLICIES["policy2"].initial_interval == 2


def test_policy_config_validation():
    with pytest.raises(InvalidArgument):
        PolicyConfig(k_wmc=0)
    with pytest.raises(InvalidArgument):
        PolicyConfig(mode="sometimes")
    with pytest.raises(InvalidArgument):
        PolicyConfig(interval_min=5, initial_interval=2)


@given(counts, counts, ks)
def test_p_monotone_in_metric(a, b, k):
    assume(a < b)
    assert change_proportion(a, k) < change_proportion(b, k)


@given(st.integers(1, 10**4), ks, ks)
def test_p_antimonotone_in_k(m, k1, k2):
    assume(k1 < k2)
    assert change_proportion(m, k1) > change_proportion(m, k2)


@given(counts, ks)
def test_p_in_unit_interval(m, k):
    assert 0.0 <= change_proportion(m, k) < 1.0


@given(intervals, counts, counts, ks, ks)
def test_bounds_and_fixpoint(current, wmc, ec, kw, ke):
    cfg = PolicyConfig(k_wmc=kw, k_ec=ke)
    d = evaluate_cycle(current, CycleMetrics(wmc, ec), cfg)
    assert cfg.interval_min <= d.new_interval <= cfg.interval_max
    assert d.immediate_maintenance == (ec > 0)
    if wmc == 0 and ec == 0:
        assert d.new_interval == current


@given(st.floats(1.0, 100.0), st.integers(1, 1000), ks, ks)
def test_opposition(current, n, kw, ke):
    cfg = PolicyConfig(k_wmc=kw, k_ec=ke)
    assert evaluate_cycle(current, CycleMetrics(wmc=n), cfg).new_interval >= current
    assert evaluate_cycle(current, CycleMetrics(ec=n), cfg).new_interval <= current


@given(st.floats(1.0, 100.0), st.integers(1, 1000), ks, ks, st.booleans())
def test_dampening_moves_toward_current(current, n, k1, k2, wasted):
    # holds when only one metric is non-zero; with both non-zero a larger
    # k_wmc can push the mean further below current
    assume(k1 < k2)
    metrics = CycleMetrics(wmc=n) if wasted else CycleMetrics(ec=n)
    lo = evaluate_cycle(current, metrics, PolicyConfig(k_wmc=k1, k_ec=k1)).new_interval
    hi = evaluate_cycle(current, metrics, PolicyConfig(k_wmc=k2, k_ec=k2)).new_interval
    assert abs(hi - current) <= abs(lo - current)


@given(st.floats(1.0, 100.0), st.integers(0, 1000), st.booleans())
def test_policy2_diverges_at_least_as_fast(current, n, wasted):
    metrics = CycleMetrics(wmc=n) if wasted else CycleMetrics(ec=n)
    d1 = evaluate_cycle(current, metrics, POLICIES["policy1"]).new_interval - current
    d2 = evaluate_cycle(current, metrics, POLICIES["policy2"]).new_interval - current
    assert abs(d2) >= abs(d1)


def test_mixed_metrics_counterexample_to_policy_ordering():
    # with one wasted run and one error, policy 2's recommendations cancel
    m = CycleMetrics(wmc=1, ec=1)
    d1 = evaluate_cycle(2.0, m, POLICIES["policy1"]).new_interval - 2.0
    d2 = evaluate_cycle(2.0, m, POLICIES["policy2"]).new_interval - 2.0
    assert d2 == 0.0 < d1


class FakeNode:
    def __init__(self):
        self.id = 7
        self.maintenance_interval = 2.0
        self.immediate = 0
        self.set_calls = []

    def set_maintenance_interval(self, v):
        self.set_calls.append(v)
        self.maintenance_interval = v

    def request_immediate_maintenance(self):
        self.immediate += 1


def _event(kind):
    return ManagerEvent(kind, 7, 0.0, "routing")


def test_manager_cycle_null_policy():
    node = FakeNode()
    mgr = AutonomicManager(node, POLICIES["policy0"])
    rec = mgr.run_cycle(2.0)
    assert node.maintenance_interval == 2.0 and not node.set_calls
    assert rec.interval_before == rec.interval_after == 2.0
    assert mgr.cycles == 1


def test_manager_cycle_errors_shrink_and_trigger():
    node = FakeNode()
    mgr = AutonomicManager(node, POLICIES["policy2"])
    for _ in range(3):
        mgr.record(_event(EventKind.ACCESS_ERROR))
    rec = mgr.run_cycle(4.0)
    assert rec.ec == 3 and rec.wmc == 0 and rec.immediate
    assert node.maintenance_interval < 2.0
    assert node.immediate == 1
    # the buffer was drained
    rec2 = mgr.run_cycle(6.0)
    assert rec2.ec == 0 and not rec2.immediate
