"""Protocol engine: round updates, phase lengths, end-to-end counting."""

import math
import random

import numpy as np
import pytest

from adncount import (
    PhaseTrace,
    ProtocolConfig,
    ProtocolState,
    RunRecord,
    Topology,
    collection_budget,
    collection_round,
    count,
    gnp,
    heard_round,
    new_schedule,
    notification_round,
    notification_rounds,
    path,
    run_collection,
    run_notification,
    run_verification,
    star,
    verification_round,
    verification_rounds,
)
from adncount.errors import (
    BudgetOverflow,
    DegreeBoundViolated,
    InvalidParameters,
    RoundLimitExceeded,
)

from helpers import dense_share_matrix


# ---------------------------------------------------------------- rounds

def test_collection_round_matches_dense_matrix():
    rng = random.Random(17)
    for _ in range(60):
        n = rng.randint(2, 9)
        topo = gnp(n, 0.5, rng)
        delta = max(1, topo.max_degree + rng.randint(0, 2))
        energy = np.array([rng.random() for _ in range(n)])
        got = collection_round(energy, topo, delta)
        want = dense_share_matrix(topo, delta) @ energy
        assert np.allclose(got, want, rtol=0, atol=1e-13)


def test_collection_round_two_nodes_closed_form():
    topo = path(2)
    energy = np.array([0.0, 1.0])
    for r in range(1, 40):
        energy = collection_round(energy, topo, 1)
        assert energy[0] == 1.0 - 2.0**-r  # dyadic, exact
        assert energy[1] == 2.0**-r


def test_collection_round_complete_graph_shares():
    topo = Topology(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])
    # energy concentrated at node 1: retention 1 - 3/6 = 1/2, share 1/6
    energy = np.array([0.0, 1.0, 0.0, 0.0])
    out = collection_round(energy, topo, 3)
    assert out[1] == pytest.approx(0.5, abs=1e-15)
    assert out[0] == pytest.approx(1.0 / 6.0, abs=1e-15)
    assert out[2] == pytest.approx(1.0 / 6.0, abs=1e-15)
    assert out[3] == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_collection_round_isolated_node_unchanged():
    topo = Topology(3, [(0, 1)])
    energy = np.array([0.2, 0.3, 0.7])
    out = collection_round(energy, topo, 2)
    assert out[2] == 0.7


def test_collection_round_rejects_degree_violation():
    with pytest.raises(DegreeBoundViolated):
        collection_round(np.zeros(4), star(4), 2)


def test_verification_round_max_with_self():
    topo = path(3)
    values = np.array([0.0, 5.0, 1.0])
    out = verification_round(values, topo)
    assert out.tolist() == [5.0, 5.0, 5.0]
    # values never decrease at any node
    assert (out >= values).all()


def test_notification_round_keeps_own_flag_when_isolated():
    # node 0 halted but disconnected: the flag must not be lost
    topo = Topology(3, [(1, 2)])
    halt = np.array([True, False, False])
    out = notification_round(halt, topo)
    assert out.tolist() == [True, False, False]


def test_heard_round_unions_neighbors():
    topo = path(3)
    heard = [0b001, 0b010, 0b100]
    assert heard_round(heard, topo) == [0b011, 0b111, 0b110]


# ---------------------------------------------------------- phase lengths

def test_verification_rounds_values():
    assert verification_rounds(2, 1.01) == 5
    assert verification_rounds(10, 1.01) == 13
    assert verification_rounds(2, 2.4) == 4
    assert verification_rounds(3, 2.4) == 5
    assert verification_rounds(4, 2.4) == 6


def test_notification_rounds_is_k():
    for k in (2, 5, 11):
        assert notification_rounds(k) == k


def test_collection_budget_values():
    assert collection_budget(2, 1) == 6
    assert collection_budget(2, 2) == 24
    assert collection_budget(3, 2) == 213
    assert collection_budget(4, 2) == 1420


def test_collection_budget_overflow():
    with pytest.raises(BudgetOverflow):
        collection_budget(64, 4)
    with pytest.raises(BudgetOverflow):
        collection_budget(2000, 512)


# ------------------------------------------------------------ phase runs

def make_state(n, k):
    state = ProtocolState.initial(n)
    state.k = k
    state.is_correct = True
    state.reset_energy()
    return state


def test_run_collection_n2_takes_two_rounds():
    sch = new_schedule("path", 2, 1, math.inf, 0)
    state = make_state(2, 2)
    rounds = run_collection(state, sch, ProtocolConfig())
    assert rounds == 2
    assert state.energy[0] == 0.75
    assert state.energy[1] == 0.25


def test_run_collection_theoretical_ignores_threshold():
    sch = new_schedule("path", 2, 1, math.inf, 0)
    state = make_state(2, 2)
    cfg = ProtocolConfig(c=2.4, mode="theoretical")
    rounds = run_collection(state, sch, cfg)
    assert rounds == 6  # tau(2) with delta=1, well past the threshold
    assert state.energy[0] == 1.0 - 2.0**-6


def test_run_verification_n2_trace():
    sch = new_schedule("path", 2, 1, math.inf, 0)
    state = make_state(2, 2)
    run_collection(state, sch, ProtocolConfig())
    ok, rounds = run_verification(state, sch, ProtocolConfig())
    assert ok
    assert rounds == 5
    assert state.max_heard[0] == 0.25  # residual energy, below 1/2^1.01


def test_run_verification_detects_undersized_candidate():
    sch = new_schedule("path", 5, 2, math.inf, 0)
    state = make_state(5, 2)
    run_collection(state, sch, ProtocolConfig())
    ok, _ = run_verification(state, sch, ProtocolConfig())
    assert not ok


def test_max_heard_reaches_leader_on_static_topology():
    # at k = n the leader must hear the global maximum residual
    sch = new_schedule("path", 6, 2, math.inf, 1)
    state = make_state(6, 6)
    cfg = ProtocolConfig()
    run_collection(state, sch, cfg)
    residual_max = float(state.energy[1:].max())
    ok, _ = run_verification(state, sch, cfg)
    assert ok
    assert state.max_heard[0] == residual_max


def test_run_notification_false_verdict_fixed_length():
    sch = new_schedule("path", 4, 2, math.inf, 0)
    state = make_state(4, 3)
    state.is_correct = False
    rounds = run_notification(state, sch, ProtocolConfig())
    assert rounds == 3
    assert not state.halt.any()


def test_run_notification_star_one_round_suffices():
    sch = new_schedule("star", 6, 5, math.inf, 0)
    state = make_state(6, 2)
    state.is_correct = True
    run_notification(state, sch, ProtocolConfig())
    assert state.halt.all()


def test_notification_spread_is_one_hop_per_round():
    topo = path(10)
    halt = np.zeros(10, dtype=bool)
    halt[0] = True
    for r in range(1, 10):
        halt = notification_round(halt, topo)
        assert halt[:r + 1].all()
        assert not halt[r + 1:].any()


# ------------------------------------------------------------ end to end

def test_count_n2_golden_trace():
    # k=2: collection 2 rounds, verification 1+ceil(2/(1-2^-1.01)) = 5,
    # notification 2; total 9
    rec = count(new_schedule("path", 2, 1, math.inf, 0))
    assert rec.estimate == 2
    assert rec.per_k_trace == (PhaseTrace(k=2, collection=2, verification=5, notification=2),)
    assert rec.rounds_total == 9
    assert rec.status == "ok"
    star_rec = count(new_schedule("star", 2, 1, math.inf, 0))
    assert star_rec.per_k_trace == rec.per_k_trace


def test_count_n5_static_path_golden():
    rec = count(new_schedule("path", 5, 2, math.inf, 0))
    assert rec.estimate == 5
    # engine-produced golden values, frozen for regression
    assert rec.rounds_total == 188
    assert rec.per_k_trace == (
        PhaseTrace(k=2, collection=3, verification=5, notification=2),
        PhaseTrace(k=3, collection=15, verification=6, notification=3),
        PhaseTrace(k=4, collection=35, verification=7, notification=4),
        PhaseTrace(k=5, collection=95, verification=8, notification=5),
    )


@pytest.mark.parametrize("family,delta,T,p", [
    ("path", 2, math.inf, None),
    ("star", None, math.inf, None),
    ("random-tree", 3, 1, None),
    ("random-tree", 4, 40, None),
    ("gnp", None, 5, 0.4),
])
def test_count_small_grid_exact(family, delta, T, p):
    for n in range(3, 9):
        d = (n - 1) if delta is None else min(delta, n - 1)
        cfg = ProtocolConfig(disconnection_tolerant=(family == "gnp"))
        rec = count(new_schedule(family, n, d, T, 1234 + n, p=p), cfg)
        assert rec.estimate == n
        assert rec.status == "ok"
        total = sum(t.collection + t.verification + t.notification for t in rec.per_k_trace)
        assert rec.rounds_total == total
        d0 = rec.diagnostics
        assert d0.max_conservation_error <= 1e-9 * n
        assert d0.max_nonleader_energy <= 1.0 + 1e-12
        assert d0.min_energy >= 0.0
        assert d0.min_leader_gain >= 0.0


def test_count_deterministic():
    a = count(new_schedule("random-tree", 9, 4, 10, 31))
    b = count(new_schedule("random-tree", 9, 4, 10, 31))
    assert a == b


def test_count_round_limit_partial_record():
    cfg = ProtocolConfig(max_rounds=40, disconnection_tolerant=True)
    with pytest.raises(RoundLimitExceeded) as info:
        count(new_schedule("gnp", 3, 2, 1, 5, p=0.0), cfg)
    rec = info.value.record
    assert rec.status == "round_limit"
    assert rec.estimate is None
    assert rec.rounds_total == 40
    assert rec.per_k_trace == (PhaseTrace(k=2, collection=40, verification=0, notification=0),)


def test_count_theoretical_full_run():
    cfg = ProtocolConfig(c=2.4, mode="theoretical")
    rec = count(new_schedule("path", 4, 2, math.inf, 0), cfg)
    assert rec.estimate == 4
    assert [t.collection for t in rec.per_k_trace] == [24, 213, 1420]


def test_theoretical_gate():
    cfg = ProtocolConfig(c=2.4, mode="theoretical")
    with pytest.raises(InvalidParameters):
        count(new_schedule("path", 9, 2, math.inf, 0), cfg)
    with pytest.raises(InvalidParameters):
        count(new_schedule("path", 8, 8, math.inf, 0), cfg)


def test_config_validation():
    with pytest.raises(InvalidParameters):
        ProtocolConfig(c=1.0)
    with pytest.raises(InvalidParameters):
        ProtocolConfig(c=0.5)
    with pytest.raises(InvalidParameters):
        ProtocolConfig(c=1.01, mode="theoretical")  # needs c > log2(5)
    with pytest.raises(InvalidParameters):
        ProtocolConfig(mode="hybrid")
    with pytest.raises(InvalidParameters):
        ProtocolConfig(max_rounds=0)
    ProtocolConfig(c=2.4, mode="theoretical")  # fine


def test_run_record_json_round_trip():
    rec = count(new_schedule("gnp", 6, 5, 10, 3, p=0.5),
                ProtocolConfig(disconnection_tolerant=True))
    again = RunRecord.from_json_dict(rec.to_json_dict())
    assert again == rec
    static = count(new_schedule("path", 4, 2, math.inf, 2))
    assert RunRecord.from_json_dict(static.to_json_dict()) == static  # T=inf survives
