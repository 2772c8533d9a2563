from itertools import combinations

import numpy as np
import pytest

import qoe
from models import (
    DeploymentAction,
    DeploymentMode,
    DeploymentOutcome,
    PreferenceVector,
    QoEClassId,
    QoEMetrics,
    Violation,
)
from slicing import apply, feasible_actions


def test_weighted_cost():
    m = QoEMetrics.from_raw(75, 20, 1, chain_length=2)          # (0.5, 0.5, 0.5)
    assert qoe.weighted_cost(m, PreferenceVector.equal()) == pytest.approx(0.5)

    m = QoEMetrics.from_raw(150, 0, 0, chain_length=2)          # L=1, C=0, R=0
    assert qoe.weighted_cost(m, PreferenceVector(0.6, 0.3, 0.1)) == pytest.approx(0.6)


def test_weighted_cost_rejects_off_simplex():
    m = QoEMetrics.from_raw(75, 20, 1, chain_length=2)
    with pytest.raises(ValueError):
        qoe.weighted_cost(m, PreferenceVector.zeros())


def test_reward_penalizes_each_violation():
    m = QoEMetrics.from_raw(75, 20, 1, chain_length=2)
    prefs = PreferenceVector.equal()
    assert qoe.reward(m, prefs, []) == pytest.approx(-0.5)
    assert qoe.reward(m, prefs, [Violation.LATENCY, Violation.ECONOMICS]) == pytest.approx(-2.5)
    assert qoe.reward(m, prefs, [Violation.LATENCY], penalty=3.0) == pytest.approx(-3.5)


def test_availability_ratio():
    served = DeploymentOutcome("a", QoEClassId.BEST_EFFORT, 50, 30, 0)
    failed = served.with_violation(Violation.LATENCY)
    assert qoe.availability_ratio([]) == 1.0
    assert qoe.availability_ratio([served, failed, served, failed]) == pytest.approx(0.5)


def test_reliability_cost_counts_shared_nodes(state, make_request):
    state, _ = apply(state, make_request(QoEClassId.BEST_EFFORT, id="a", cpu=3, mem=3),
                     DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, (6, 7)))
    state, outcome = apply(state, make_request(QoEClassId.BEST_EFFORT, id="b", cpu=3, mem=3),
                           DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, (7, 8)))
    assert outcome.reliability_cost == 1
    assert qoe.reliability_cost(state, "a") == 1
    assert outcome.served


def test_latency_and_cost_by_mode(state, make_request):
    request = make_request(QoEClassId.BEST_EFFORT, cpu=3, mem=3)
    nodes = state.nodes
    cloud = DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, (6, 7))
    horizontal = DeploymentAction(DeploymentMode.HORIZONTAL_LOCAL, (0, 1))
    assert qoe.latency_ms(cloud, state) == pytest.approx(40 + nodes[6].node_delay + nodes[7].node_delay)
    assert qoe.econ_cost(cloud, state) == pytest.approx(10 + nodes[6].deploy_cost + nodes[7].deploy_cost)
    assert qoe.latency_ms(horizontal, state) == pytest.approx(30 + nodes[0].node_delay + nodes[1].node_delay)
    assert qoe.econ_cost(horizontal, state) == pytest.approx(30 + nodes[0].deploy_cost + nodes[1].deploy_cost)
    assert request.qoe_class.cost_bound == 40


def test_check_constraints_order(state, make_request):
    request = make_request(QoEClassId.HIGH_PRIORITY)
    m = QoEMetrics.from_raw(80, 40, 0, chain_length=2)
    assert qoe.check_constraints(m, state, request) == [Violation.LATENCY, Violation.ECONOMICS]


def test_sentinel_metrics(env_config, make_request):
    m = qoe.sentinel_metrics(make_request(QoEClassId.MEDIUM_PRIORITY, chain_length=3), env_config)
    assert (m.latency, m.econ_cost, m.reliability_cost) == (101, 26, 3)
    assert m.reliability_hat == pytest.approx(1.0)


def test_audit_final_flags_late_sharing(state, make_request):
    hp = make_request(QoEClassId.HIGH_PRIORITY, id="h")
    be = make_request(QoEClassId.BEST_EFFORT, id="b", cpu=3, mem=3)
    state, hp_outcome = apply(state, hp, DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, (6, 7)))
    assert Violation.RELIABILITY not in hp_outcome.violations

    state, be_outcome = apply(state, be, DeploymentAction(DeploymentMode.CLOUD_OFFLOAD, (6, 7)))
    assert be_outcome.reliability_cost == 2
    assert Violation.RELIABILITY not in be_outcome.violations

    audited = qoe.audit_final(state, [hp_outcome, be_outcome])
    assert Violation.RELIABILITY in audited[0].violations
    assert audited[1] == be_outcome


# ============================================================
# 加权成本的性质
# ============================================================

def _random_prefs(rng) -> PreferenceVector:
    return PreferenceVector.from_weights(rng.dirichlet(np.ones(3)), normalize=True)


def test_weighted_cost_is_monotone_in_each_metric():
    rng = np.random.default_rng(0)
    for _ in range(500):
        prefs = _random_prefs(rng)
        raw = rng.uniform(0, [150, 40, 3])
        base = qoe.weighted_cost(QoEMetrics.from_raw(*raw, chain_length=3), prefs)
        for axis in range(3):
            bumped = raw.copy()
            bumped[axis] += rng.uniform(0.1, 10)
            cost = qoe.weighted_cost(QoEMetrics.from_raw(*bumped, chain_length=3), prefs)
            assert cost >= base - 1e-12


def test_latency_only_preference_ranks_by_latency(state, make_request):
    request = make_request(QoEClassId.BEST_EFFORT, cpu=3, mem=3)
    state, _ = apply(state, make_request(id="warm"), DeploymentAction(DeploymentMode.HORIZONTAL_LOCAL, (2, 3)))
    latency_only = PreferenceVector(1.0, 0.0, 0.0)

    scored = []
    for action in feasible_actions(state, request):
        latency = qoe.latency_ms(action, state)
        m = qoe.compute_metrics(latency, qoe.econ_cost(action, state), 0, request.chain_length, state.config)
        scored.append((latency, qoe.weighted_cost(m, latency_only)))

    assert len(scored) > 10
    for (la, ja), (lb, jb) in combinations(scored, 2):
        assert np.sign(ja - jb) == np.sign(la - lb)


def test_argmin_is_invariant_to_uniform_scaling():
    rng = np.random.default_rng(1)
    for _ in range(200):
        prefs = _random_prefs(rng)
        candidates = rng.uniform(0, [150, 40, 3], size=(8, 3))
        for scale in (0.1, 0.5, 2.0, 7.0):
            plain = [qoe.weighted_cost(QoEMetrics.from_raw(*c, chain_length=3), prefs) for c in candidates]
            scaled = [qoe.weighted_cost(QoEMetrics.from_raw(*(c * scale), chain_length=3), prefs) for c in candidates]
            assert int(np.argmin(plain)) == int(np.argmin(scaled))


def test_availability_never_drops_when_adding_a_served_slice():
    rng = np.random.default_rng(2)
    served = DeploymentOutcome("s", QoEClassId.MEDIUM_PRIORITY, 50, 20, 0)
    failed = served.with_violation(Violation.RELIABILITY)
    for _ in range(300):
        outcomes = [served if rng.random() < 0.5 else failed for _ in range(int(rng.integers(1, 20)))]
        ratio = qoe.availability_ratio(outcomes)
        assert 0.0 <= ratio <= 1.0
        if ratio < 1.0:
            assert qoe.availability_ratio(outcomes + [served]) >= ratio
