"""Exact-value checks shared by the unit tests and the acceptance gate.

Every function asserts closed-form or hand-traced values for one
operation; nothing here is statistical.  The acceptance gate runs all
of them through ALL_CHECKS, the unit test files call them one by one.
"""

import numpy as np

from spectra import (
    ConfigError,
    EmpiricalCdf,
    Graph,
    InterpolationInterval,
    PushPullMessage,
    RoundTrace,
    ScenarioConfig,
    adam2_estimate,
    adam2_handle,
    adam2_init,
    adam2_push_round,
    add_node,
    aggregate_traces,
    compute_base_vector,
    diameter,
    emit_csv,
    estimate,
    generate_messages,
    generate_random_graph,
    handle_neighbor_added,
    is_connected,
    handle_neighbor_removed,
    interpolate_point,
    ks_max,
    ks_mean,
    ks_node,
    merge_intervals,
    parse_config,
    preset_names,
    remove_node,
    run_round,
    run_trial,
    seed_world,
    set_input_value,
    spectra_init,
    state_transition,
    transform_vector,
    validate_config,
)
from spectra.cli import list_presets


def _iv(lower, upper):
    return InterpolationInterval(float(lower), float(upper))


def _eq(actual, expected):
    assert np.array_equal(np.asarray(actual), np.asarray(expected)), (
        f"{actual!r} != {expected!r}"
    )


def _path_graph(n):
    adjacency = {i: set() for i in range(n)}
    for i in range(n - 1):
        adjacency[i].add(i + 1)
        adjacency[i + 1].add(i)
    return Graph(adjacency=adjacency, next_id=n)


def _tiny_config(**overrides):
    base = dict(
        algorithm="spectra", n=2, avg_degree=2.0, k=2, rounds=2, trials=1,
        seed=0, dist_mean=0.0, dist_variance=1.0,
    )
    base.update(overrides)
    cfg = ScenarioConfig(**base)
    validate_config(cfg)
    return cfg


def check_interpolate_point():
    assert interpolate_point(_iv(0, 10), 2, 5) == 5.0
    assert interpolate_point(_iv(3, 3), 4, 9) == 3.0
    assert interpolate_point(_iv(10, 20), 4, 5) == 20.0


def check_merge_intervals():
    assert merge_intervals([_iv(1, 5), _iv(2, 7)]) == _iv(1, 7)
    assert merge_intervals([_iv(4, 4)]) == _iv(4, 4)
    assert merge_intervals([_iv(0, 1), _iv(-3, 0.5), _iv(0.2, 9)]) == _iv(-3, 9)


def check_transform_vector():
    u = np.array([0.2, 0.5, 0.9])
    _eq(transform_vector(u, _iv(0, 10), _iv(0, 10)), [0.2, 0.5, 0.9])
    _eq(
        transform_vector(np.array([0.0, 1.0, 1.0]), _iv(4, 6), _iv(2, 6)),
        [0.0, 0.0, 1.0],
    )
    # Degenerate source interval: every old point qualifies, so each new
    # point copies the value at the last old index.
    _eq(
        transform_vector(np.array([0.3, 0.7]), _iv(5, 5), _iv(5, 5)),
        [0.7, 0.7],
    )


def check_compute_base_vector():
    _eq(compute_base_vector(5.0, _iv(0, 10), 5), [0, 0, 1, 1, 1])
    _eq(compute_base_vector(0.0, _iv(0, 10), 3), [1, 1, 1])
    _eq(compute_base_vector(10.0, _iv(0, 10), 3), [0, 0, 1])


def check_estimate():
    _eq(estimate(np.array([1.0, 1.0, 1.0]), {}), [1, 1, 1])
    flows = {7: np.array([0.25, 0.0, 0.0]), 9: np.array([-0.25, 0.5, 0.0])}
    _eq(estimate(np.array([0.0, 1.0, 1.0]), flows), [0.0, 0.5, 1.0])
    _eq(estimate(np.array([0.0, 0.0]), {3: np.array([-0.5, -0.5])}), [0.5, 0.5])


def check_generate_messages():
    fresh = spectra_init(0, 4.0, [1, 2], 2)
    out = generate_messages(fresh)
    assert sorted(out) == [1, 2]
    for msg in out.values():
        assert msg.sender == 0
        assert msg.interval == _iv(4, 4)
        _eq(msg.flow, [0.0, 0.0])
        _eq(msg.estimate, [1.0, 1.0])

    partial = spectra_init(0, 4.0, [1, 2], 2)
    partial.flows = {1: np.array([0.5, 0.0])}
    partial.est = estimate(partial.base, partial.flows)
    out = generate_messages(partial)
    _eq(out[1].flow, [0.5, 0.0])
    _eq(out[2].flow, [0.0, 0.0])

    assert generate_messages(spectra_init(0, 4.0, [], 2)) == {}


def check_state_transition_two_node():
    # Hand-traced fault-free exchange, x = {0, 10}, k = 2.
    a = spectra_init(0, 0.0, [1], 2)
    b = spectra_init(1, 10.0, [0], 2)
    ma, mb = generate_messages(a), generate_messages(b)
    a, b = state_transition(a, [mb[0]]), state_transition(b, [ma[1]])
    assert a.interval == _iv(0, 10) and b.interval == _iv(0, 10)
    _eq(a.flows[1], [0.0, 0.0])
    _eq(a.est, [1.0, 1.0])
    _eq(b.flows[0], [-0.5, 0.0])
    _eq(b.est, [0.5, 1.0])
    ma, mb = generate_messages(a), generate_messages(b)
    a, b = state_transition(a, [mb[0]]), state_transition(b, [ma[1]])
    _eq(a.flows[1], [0.5, 0.0])
    _eq(a.est, [0.5, 1.0])
    _eq(b.est, [0.5, 1.0])
    # Fixed point from here on: exactly one of two inputs is <= 0, both
    # are <= 10, so [0.5, 1.0] is the true fraction vector.
    for _ in range(3):
        ma, mb = generate_messages(a), generate_messages(b)
        a, b = state_transition(a, [mb[0]]), state_transition(b, [ma[1]])
        _eq(a.est, [0.5, 1.0])
        _eq(b.est, [0.5, 1.0])


def check_state_transition_no_messages():
    # One stored neighbor, nothing heard: the estimate set holds two
    # identical entries, so the average cancels and flows are unchanged.
    a = spectra_init(0, 0.0, [1], 2)
    b = spectra_init(1, 10.0, [0], 2)
    for _ in range(2):
        ma, mb = generate_messages(a), generate_messages(b)
        a, b = state_transition(a, [mb[0]]), state_transition(b, [ma[1]])
    quiet = state_transition(a, [])
    assert quiet.interval == a.interval
    _eq(quiet.flows[1], a.flows[1])
    _eq(quiet.est, a.est)
    assert quiet.silence == {1: 1}


def check_state_transition_symmetric_pair():
    a = spectra_init(0, 5.0, [1], 3)
    b = spectra_init(1, 5.0, [0], 3)
    ma, mb = generate_messages(a), generate_messages(b)
    a2, b2 = state_transition(a, [mb[0]]), state_transition(b, [ma[1]])
    _eq(a2.est, a2.base)
    _eq(b2.est, b2.base)
    _eq(a2.flows[1], [0.0, 0.0, 0.0])
    _eq(b2.flows[0], [0.0, 0.0, 0.0])


def check_handle_neighbor_added():
    state = spectra_init(0, 1.0, [1, 2], 2)
    grown = handle_neighbor_added(state, 3)
    assert grown.neighbors == frozenset({1, 2, 3})
    assert grown.flows == state.flows
    lonely = spectra_init(0, 1.0, [], 2)
    assert handle_neighbor_added(lonely, 9).neighbors == frozenset({9})
    out = generate_messages(grown)
    _eq(out[3].flow, [0.0, 0.0])


def check_handle_neighbor_removed():
    state = spectra_init(0, 0.0, [1, 2], 2)
    state.flows = {1: np.array([0.5, 0.0])}
    state.est = estimate(state.base, state.flows)
    _eq(state.est, [0.5, 1.0])
    dropped = handle_neighbor_removed(state, 1)
    _eq(dropped.est, [1.0, 1.0])
    assert 1 not in dropped.flows

    no_entry = handle_neighbor_removed(state, 2)
    assert no_entry.neighbors == frozenset({1})
    _eq(no_entry.est, state.est)

    last = handle_neighbor_removed(dropped, 2)
    assert last.neighbors == frozenset()
    _eq(last.est, last.base)


def check_set_input_value():
    state = spectra_init(0, 5.0, [], 5)
    state.interval = _iv(0, 10)
    state.base = compute_base_vector(5.0, state.interval, 5)
    state.est = state.base
    moved = state_transition(set_input_value(state, 6.0), [])
    _eq(moved.base, [0, 0, 0, 1, 1])

    same = set_input_value(state, 5.0)
    assert same.input == state.input and same.interval == state.interval
    _eq(same.base, state.base)

    raised = state_transition(set_input_value(state, 12.0), [])
    assert raised.interval == _iv(0, 12)


def check_adam2_init():
    pts = np.array([2.0, 4.0, 6.0])
    _eq(adam2_init(0, 3.0, pts, []).fractions, [0, 1, 1])
    _eq(adam2_init(0, 2.0, pts, []).fractions, [1, 1, 1])
    _eq(adam2_init(0, 7.0, pts, []).fractions, [0, 0, 0])


def check_adam2_push_round():
    pts = np.array([0.0, 1.0])
    node = adam2_init(0, 0.5, pts, [1, 2])
    picks = [
        adam2_push_round(node, np.random.default_rng(123))[1][0]
        for _ in range(3)
    ]
    assert picks[0] == picks[1] == picks[2]

    _, nothing = adam2_push_round(
        adam2_init(0, 0.5, pts, []), np.random.default_rng(0)
    )
    assert nothing is None

    a = adam2_init(0, -1.0, pts, [1])
    b = adam2_init(1, 2.0, pts, [0])
    _, (to_b, push_a) = adam2_push_round(a, np.random.default_rng(0))
    _, (to_a, push_b) = adam2_push_round(b, np.random.default_rng(0))
    assert to_b == 1 and to_a == 0
    a2, _ = adam2_handle(a, [push_b])
    b2, _ = adam2_handle(b, [push_a])
    _eq(a2.fractions, [0.5, 0.5])
    _eq(b2.fractions, [0.5, 0.5])


def check_adam2_handle():
    pts = np.array([0.0, 1.0])
    node = adam2_init(2, 0.0, pts, [0, 1])
    # A [1, 0] vector cannot arise from initialization (the step shape
    # is non-decreasing); it is set directly to trace the arithmetic.
    node.fractions = np.array([1.0, 0.0])

    one, replies = adam2_handle(
        node, [PushPullMessage("push", 0, np.array([0.0, 0.0]))]
    )
    assert len(replies) == 1 and replies[0][0] == 0
    _eq(replies[0][1].fractions, [1.0, 0.0])
    _eq(one.fractions, [0.5, 0.0])

    idle, replies = adam2_handle(node, [])
    assert replies == []
    _eq(idle.fractions, [1.0, 0.0])

    # Two pushes in one round: sequential averaging plus stale replies
    # is the non-atomic interleaving that breaks mass conservation.
    both, replies = adam2_handle(
        node,
        [
            PushPullMessage("push", 1, np.array([0.0, 1.0])),
            PushPullMessage("push", 0, np.array([0.0, 0.0])),
        ],
    )
    _eq(both.fractions, [0.25, 0.5])
    assert [r[0] for r in replies] == [0, 1]
    for _, msg in replies:
        _eq(msg.fractions, [1.0, 0.0])
    # Fold the stale pull replies into the two senders and compare the
    # system-wide vector sum against its pre-exchange value.
    sender_a = (np.array([0.0, 0.0]) + replies[0][1].fractions) / 2.0
    sender_b = (np.array([0.0, 1.0]) + replies[1][1].fractions) / 2.0
    before = np.array([1.0, 0.0]) + [0.0, 0.0] + [0.0, 1.0]
    after = both.fractions + sender_a + sender_b
    assert not np.array_equal(before, after)
    _eq(after, [1.25, 1.0])


def check_adam2_estimate():
    pts = np.array([0.0, 1.0])
    node = adam2_init(0, 0.5, pts, [])
    _eq(adam2_estimate(node), [0.0, 1.0])

    a = adam2_init(0, -1.0, pts, [1])
    b = adam2_init(1, 2.0, pts, [0])
    a2, _ = adam2_handle(a, [PushPullMessage("push", 1, b.fractions)])
    b2, _ = adam2_handle(b, [PushPullMessage("push", 0, a.fractions)])
    _eq(adam2_estimate(a2), [0.5, 0.5])
    _eq(adam2_estimate(b2), [0.5, 0.5])

    same = [adam2_init(i, 3.0, pts, [(i + 1) % 2]) for i in range(2)]
    for _ in range(4):
        pushes = [
            PushPullMessage("push", 1, same[1].fractions),
            PushPullMessage("push", 0, same[0].fractions),
        ]
        same = [
            adam2_handle(same[0], [pushes[0]])[0],
            adam2_handle(same[1], [pushes[1]])[0],
        ]
        for node in same:
            _eq(adam2_estimate(node), [0.0, 0.0])


def check_generate_random_graph():
    two = generate_random_graph(2, 2.0, np.random.default_rng(0))
    assert two.edges() == [(0, 1)]

    big = generate_random_graph(1000, 3.0, np.random.default_rng(5))
    assert len(big.edges()) == 1500
    assert is_connected(big)

    g1 = generate_random_graph(50, 3.0, np.random.default_rng(42))
    g2 = generate_random_graph(50, 3.0, np.random.default_rng(42))
    assert g1.edges() == g2.edges()


def check_add_remove_node():
    rng = np.random.default_rng(11)
    graph = generate_random_graph(1000, 3.0, rng)
    grown, new_id = add_node(graph, 3, rng)
    assert len(grown.nodes()) == 1001
    assert len(grown.adjacency[new_id]) == 3

    path = _path_graph(3)
    pruned = remove_node(path, 0)
    assert pruned.adjacency[1] == {2}

    split = remove_node(path, 1)
    assert split.adjacency[0] == set() and split.adjacency[2] == set()


def check_diameter():
    assert diameter(_path_graph(5)) == 4
    k4 = Graph(
        adjacency={i: {j for j in range(4) if j != i} for i in range(4)},
        next_id=4,
    )
    assert diameter(k4) == 1
    star = Graph(
        adjacency={0: set(range(1, 6)), **{i: {0} for i in range(1, 6)}},
        next_id=6,
    )
    assert diameter(star) == 2


def check_ks_node():
    cdf = EmpiricalCdf.from_values([1.0, 1.0, 2.0, 2.0, 2.0] + [3.0] * 5)
    labels = np.array([1.0, 2.0, 3.0])
    _eq(cdf.evaluate(labels), [0.2, 0.5, 1.0])
    assert ks_node(cdf, labels, np.array([0.2, 0.5, 1.0])) == 0.0
    assert abs(ks_node(cdf, labels, np.array([0.1, 0.6, 1.0])) - 0.1) < 1e-15

    two = EmpiricalCdf.from_values([0.0, 10.0])
    assert ks_node(two, np.array([0.0, 10.0]), np.array([1.0, 1.0])) == 0.5


def check_ks_reductions():
    assert ks_max([0.1, 0.3]) == 0.3
    assert ks_mean([0.1, 0.3]) == 0.2
    assert ks_max([0.25, 0.25, 0.25]) == 0.25
    assert ks_mean([0.25, 0.25, 0.25]) == 0.25
    assert ks_mean([0.1, 0.3]) <= ks_max([0.1, 0.3])


def check_emit_csv():
    assert emit_csv([]) == "round,node_count,ks_mean,ks_max\n"
    text = emit_csv([RoundTrace(0, 1000, 0.25, 0.5)])
    assert text == "round,node_count,ks_mean,ks_max\n0,1000,0.25,0.5\n"
    lines = text.splitlines()
    assert len(lines) == 2

    trace = RoundTrace(3, 17, 1.0 / 3.0, 2.0 / 3.0)
    row = emit_csv([trace]).splitlines()[1].split(",")
    assert float(row[2]) == float(format(trace.ks_mean, ".9g"))
    assert float(row[3]) == float(format(trace.ks_max, ".9g"))


def check_parse_config_minimal():
    cfg = parse_config(
        "algorithm = spectra\nn = 10\navg_degree = 3\nk = 4\n"
        "rounds = 5\ntrials = 1\nseed = 9\ndist_mean = 10\ndist_variance = 2\n"
    )
    assert cfg.loss_rate == 0.0
    assert cfg.failure_timeout == 5
    assert cfg.disturbance is None and cfg.churn is None
    assert cfg.adam2_range is None

    try:
        parse_config(
            "algorithm = spectra\nn = 10\navg_degree = 3\nk = 4\n"
            "rounds = 5\ntrials = 1\nseed = 9\ndist_mean = 10\n"
            "dist_variance = 2\nloss_rate = 1.5\n"
        )
    except ConfigError:
        pass
    else:
        raise AssertionError("loss_rate = 1.5 must be rejected")


def check_simulator_examples():
    # Total loss: every transition sees an empty inbox, nothing changes.
    cfg = _tiny_config(loss_rate=1.0, rounds=3, failure_timeout=0)
    world = seed_world(
        cfg, _path_graph(2), [0.0, 10.0], np.random.default_rng(0)
    )
    for _ in range(3):
        run_round(world)
    for state in world.states.values():
        assert state.flows == {}
        assert state.interval == _iv(state.input, state.input)
        assert state.silence == {next(iter(state.neighbors)): 3}

    # Fault-free two-node world reproduces the hand-traced exchange.
    world = seed_world(
        _tiny_config(), _path_graph(2), [0.0, 10.0], np.random.default_rng(0)
    )
    assert run_round(world) == RoundTrace(0, 2, 0.25, 0.5)
    assert run_round(world) == RoundTrace(1, 2, 0.0, 0.0)

    # Bit-identical traces for identical (config, trial) pairs.
    cfg = _tiny_config(n=30, avg_degree=3.0, k=4, rounds=10, dist_mean=10.0,
                       dist_variance=2.0, values=None, seed=77)
    assert run_trial(cfg, 0) == run_trial(cfg, 0)

    # Zero rounds yield an empty trace.
    assert run_trial(_tiny_config(rounds=0), 0) == []

    # One trial aggregates to itself; order does not matter.
    traces = run_trial(cfg, 0)
    other = run_trial(cfg, 1)
    assert aggregate_traces([traces]) == traces
    assert aggregate_traces([traces, other]) == aggregate_traces(
        [other, traces]
    )


def check_preset_listing():
    names = preset_names()
    assert len(names) >= 10
    listing = list_presets()
    assert len(listing.strip().splitlines()) >= 10
    for required in ("fig_a_spectra", "fig_b_loss20_spectra", "fig_d_churn"):
        assert required in names and required in listing


ALL_CHECKS = [
    check_interpolate_point,
    check_merge_intervals,
    check_transform_vector,
    check_compute_base_vector,
    check_estimate,
    check_generate_messages,
    check_state_transition_two_node,
    check_state_transition_no_messages,
    check_state_transition_symmetric_pair,
    check_handle_neighbor_added,
    check_handle_neighbor_removed,
    check_set_input_value,
    check_adam2_init,
    check_adam2_push_round,
    check_adam2_handle,
    check_adam2_estimate,
    check_generate_random_graph,
    check_add_remove_node,
    check_diameter,
    check_ks_node,
    check_ks_reductions,
    check_emit_csv,
    check_parse_config_minimal,
    check_simulator_examples,
    check_preset_listing,
]
