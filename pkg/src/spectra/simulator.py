"""Deterministic lockstep round engine for both algorithms.

Each round advances in a fixed order: scheduled dynamics (input
disturbance, then churn arrivals, then departures), message generation
from pre-round state, independent per-message loss, state transitions
on what was delivered, failure-detection removals, and finally
metrics.  A trial owns one seeded generator and consumes draws in a
documented order (graph edges, then input values, then per round:
dynamics, push targets, batched loss draws in sender-then-recipient
order, first over the round's messages and then over any pull
replies), so a (config, trial_index) pair always reproduces the same
trace bit for bit.

Nodes that leave do so silently, though departures never split the
network (a candidate whose removal would disconnect it is redrawn):
survivors keep counting silent rounds per neighbor and drop the edge
once the count reaches the configured timeout.  A timeout of zero disables detection, which is the right
setting when message loss is on (independent loss makes long silent
streaks possible on healthy links, and a false removal can split the
network).
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _fast
from .adam2 import adam2_handle, adam2_init, adam2_push_round
from .config import ScenarioConfig
from .core import (
    InterpolationInterval,
    generate_messages,
    handle_neighbor_added,
    handle_neighbor_removed,
    interval_points,
    set_input_value,
    spectra_init,
    state_transition,
    transform_vector,
)
from .metrics import EmpiricalCdf, RoundTrace, ks_max, ks_mean
from .network import Graph, add_node, generate_random_graph, remove_node

log = logging.getLogger("spectra")


@dataclass
class World:
    """Mutable per-trial simulation state, owned by exactly one trial.

    While ``fast`` holds a batch engine, ``states`` is stale; call
    ``sync_world`` before inspecting node states directly.  Setting
    ``use_fast`` to False forces every round through the per-node path.
    """

    config: ScenarioConfig
    graph: Graph
    states: dict
    rng: np.random.Generator
    initial_n: int
    adam2_points: Optional[np.ndarray] = None
    round_index: int = 0
    traces: list = field(default_factory=list)
    use_fast: bool = True
    fast: "Optional[_fast.FastEngine]" = None


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Per-trial generator seed: base_seed XOR trial_index."""
    return base_seed ^ trial_index


def build_world(config: ScenarioConfig, rng: np.random.Generator) -> World:
    """Draw a topology and input values, then initialize node states.

    When ``config.values`` is set those inputs are used verbatim and no
    value draws are consumed.
    """
    graph = generate_random_graph(config.n, config.avg_degree, rng)
    if config.values is not None:
        values = [float(v) for v in config.values]
    else:
        scale = math.sqrt(config.dist_variance)
        values = [float(v) for v in rng.normal(config.dist_mean, scale, config.n)]
    return seed_world(config, graph, values, rng)


def seed_world(
    config: ScenarioConfig,
    graph: Graph,
    values: "list[float]",
    rng: np.random.Generator,
) -> World:
    """Build a world over a given topology and input assignment.

    ``values`` aligns with ``sorted(graph nodes)``.  Useful for oracle
    tests that need full control over the starting point.
    """
    nodes = graph.nodes()
    if len(values) != len(nodes):
        raise ValueError("one input value per node required")
    points = None
    if config.algorithm == "adam2":
        if config.adam2_range is not None:
            lo, hi = config.adam2_range
        else:
            lo, hi = min(values), max(values)
            if not lo < hi:
                raise ValueError("adam2 needs a non-degenerate value range")
        points = interval_points(InterpolationInterval(lo, hi), config.k)
    states = {}
    for node, value in zip(nodes, values):
        neighbors = graph.adjacency[node]
        if config.algorithm == "spectra":
            states[node] = spectra_init(node, value, neighbors, config.k)
        else:
            states[node] = adam2_init(node, value, points, neighbors)
    return World(
        config=config,
        graph=graph,
        states=states,
        rng=rng,
        initial_n=len(nodes),
        adam2_points=points,
    )


def _sample_distinct(ids: list, count: int, rng: np.random.Generator) -> list:
    """Uniform distinct sample by rejection, returned in ascending order."""
    chosen: set = set()
    while len(chosen) < count:
        chosen.add(ids[int(rng.integers(len(ids)))])
    return sorted(chosen)


def _apply_disturbance(world: World) -> None:
    cfg = world.config
    d = cfg.disturbance
    ids = sorted(world.states)
    count = round(d.fraction * len(ids))
    if count == 0:
        return
    # Disturbed inputs must stay inside the current global value range;
    # moving an extreme would force every node to re-agree on a wider
    # interval instead of just re-balancing flows.
    lo = min(world.states[i].input for i in ids)
    hi = max(world.states[i].input for i in ids)
    eligible = [
        i for i in ids
        if lo <= world.states[i].input * (1.0 + d.increase) <= hi
    ]
    if count > len(eligible):
        log.warning(
            "disturbance at round %d: only %d of %d requested nodes can "
            "change without moving the global extremes",
            d.round, len(eligible), count,
        )
        count = len(eligible)
    if count == 0:
        return
    chosen = _sample_distinct(eligible, count, world.rng)
    for i in chosen:
        state = world.states[i]
        new_value = state.input * (1.0 + d.increase)
        if cfg.algorithm == "spectra":
            world.states[i] = set_input_value(state, new_value)
        else:
            world.states[i] = replace(state, input=new_value)


def _churn_step(config: ScenarioConfig, initial_n: int) -> int:
    return round(initial_n * config.churn.rate)


def _churn_arrivals(world: World, count: int) -> None:
    cfg = world.config
    degree = round(cfg.avg_degree)
    scale = math.sqrt(cfg.dist_variance)
    for _ in range(count):
        world.graph, new_id = add_node(world.graph, degree, world.rng)
        value = float(world.rng.normal(cfg.dist_mean, scale))
        targets = sorted(world.graph.adjacency[new_id])
        if cfg.algorithm == "spectra":
            world.states[new_id] = spectra_init(new_id, value, targets, cfg.k)
            for t in targets:
                world.states[t] = handle_neighbor_added(world.states[t], new_id)
        else:
            world.states[new_id] = adam2_init(
                new_id, value, world.adam2_points, targets
            )
            for t in targets:
                old = world.states[t]
                world.states[t] = replace(old, neighbors=old.neighbors | {new_id})


def _removal_keeps_connected(graph: Graph, node: int) -> bool:
    """True when dropping ``node`` leaves every other node reachable.

    The remainder stays connected exactly when all of the node's
    neighbors can reach each other without it, so the search stops as
    soon as the last neighbor is found.
    """
    targets = graph.adjacency[node]
    if len(targets) <= 1:
        return True
    start = next(iter(targets))
    seen = {start}
    queue = deque([start])
    remaining = len(targets) - 1
    while queue:
        u = queue.popleft()
        for v in graph.adjacency[u]:
            if v == node or v in seen:
                continue
            seen.add(v)
            if v in targets:
                remaining -= 1
                if remaining == 0:
                    return True
            queue.append(v)
    return False


def _churn_departures(world: World, count: int) -> None:
    # Departures are uniform among nodes whose removal keeps the
    # network connected; a candidate that would split it is redrawn.
    # Survivors are not notified either way.
    ids = sorted(world.states)
    for _ in range(count):
        while True:
            node = ids[int(world.rng.integers(len(ids)))]
            if _removal_keeps_connected(world.graph, node):
                break
        ids.remove(node)
        world.graph = remove_node(world.graph, node)
        del world.states[node]


def _apply_churn(world: World, round_index: int) -> None:
    c = world.config.churn
    step = _churn_step(world.config, world.initial_n)
    up_steps = math.ceil((c.peak - world.initial_n) / step)
    growth_end = c.start + up_steps
    shrink_start = growth_end + c.plateau
    shrink_end = shrink_start + up_steps
    live = len(world.states)
    if c.start < round_index <= growth_end and live < c.peak:
        _churn_arrivals(world, min(step, c.peak - live))
    elif shrink_start < round_index <= shrink_end and live > world.initial_n:
        _churn_departures(world, min(step, live - world.initial_n))


def _apply_dynamics(world: World, round_index: int) -> None:
    cfg = world.config
    if cfg.disturbance is not None and round_index == cfg.disturbance.round:
        _apply_disturbance(world)
    if cfg.churn is not None:
        _apply_churn(world, round_index)


def _spectra_generate(world: World) -> list:
    outbox = []
    for i in sorted(world.states):
        for j, msg in generate_messages(world.states[i]).items():
            outbox.append((i, j, msg))
    return outbox


def _adam2_generate(world: World) -> list:
    outbox = []
    for i in sorted(world.states):
        _, push = adam2_push_round(world.states[i], world.rng)
        if push is not None:
            outbox.append((i, push[0], push[1]))
    return outbox


def _deliver(world: World, outbox: list) -> dict:
    """Apply loss, then drop messages whose link no longer exists."""
    cfg = world.config
    if cfg.loss_rate > 0.0 and outbox:
        draws = world.rng.random(len(outbox))
        outbox = [env for env, u in zip(outbox, draws) if u >= cfg.loss_rate]
    inboxes: dict = {}
    states = world.states
    for sender, recipient, msg in outbox:
        target = states.get(recipient)
        if target is not None and sender in target.neighbors:
            inboxes.setdefault(recipient, []).append(msg)
    return inboxes


def _spectra_transition(world: World, inboxes: dict) -> None:
    states = world.states
    for i in sorted(states):
        states[i] = state_transition(states[i], inboxes.get(i, ()))
    timeout = world.config.failure_timeout
    if timeout > 0:
        for i in sorted(states):
            state = states[i]
            stale = sorted(
                j for j, quiet in state.silence.items() if quiet >= timeout
            )
            for j in stale:
                state = handle_neighbor_removed(state, j)
            if stale:
                states[i] = state


def _adam2_transition(world: World, inboxes: dict) -> None:
    states = world.states
    replies = []
    for i in sorted(states):
        new_state, out = adam2_handle(states[i], inboxes.get(i, ()))
        states[i] = new_state
        for recipient, msg in out:
            replies.append((i, recipient, msg))
    # Pull replies complete the exchange within the same round and face
    # the same loss and liveness filters as the pushes did.
    replies.sort(key=lambda item: (item[0], item[1]))
    for i, batch in sorted(_deliver(world, replies).items()):
        states[i], _ = adam2_handle(states[i], batch)


def _measure(world: World, round_index: int) -> RoundTrace:
    cfg = world.config
    states = world.states
    ids = sorted(states)
    values = np.fromiter(
        (states[i].input for i in ids), dtype=np.float64, count=len(ids)
    )
    cdf = EmpiricalCdf.from_values(values)
    errors = []
    if cfg.algorithm == "adam2":
        if cfg.ks_labels == "global":
            live_iv = InterpolationInterval(float(values.min()), float(values.max()))
            truth = cdf.evaluate(interval_points(live_iv, cfg.k))
            grid_iv = InterpolationInterval(
                float(world.adam2_points[0]), float(world.adam2_points[-1])
            )
            for i in ids:
                est = transform_vector(states[i].fractions, grid_iv, live_iv)
                errors.append(float(np.max(np.abs(truth - est))))
        else:
            truth = cdf.evaluate(world.adam2_points)
            for i in ids:
                errors.append(float(np.max(np.abs(truth - states[i].fractions))))
    else:
        if cfg.ks_labels == "global":
            live_iv = InterpolationInterval(float(values.min()), float(values.max()))
            truth = cdf.evaluate(interval_points(live_iv, cfg.k))
            for i in ids:
                state = states[i]
                est = transform_vector(state.est, state.interval, live_iv)
                errors.append(float(np.max(np.abs(truth - est))))
        else:
            truth_cache: dict = {}
            for i in ids:
                state = states[i]
                truth = truth_cache.get(state.interval)
                if truth is None:
                    truth = cdf.evaluate(interval_points(state.interval, cfg.k))
                    truth_cache[state.interval] = truth
                errors.append(float(np.max(np.abs(truth - state.est))))
    return RoundTrace(
        round=round_index,
        node_count=len(ids),
        ks_mean=ks_mean(errors),
        ks_max=ks_max(errors),
    )


def _dynamics_due(config: ScenarioConfig, round_index: int) -> bool:
    """Whether scheduled dynamics may touch the world this round."""
    d = config.disturbance
    if d is not None and round_index == d.round:
        return True
    c = config.churn
    if c is not None:
        step = _churn_step(config, config.n)
        up_steps = math.ceil((c.peak - config.n) / step)
        growth_end = c.start + up_steps
        shrink_start = growth_end + c.plateau
        shrink_end = shrink_start + up_steps
        if c.start < round_index <= growth_end:
            return True
        if shrink_start < round_index <= shrink_end:
            return True
    return False


def sync_world(world: World) -> None:
    """Materialize per-node states if a batch engine currently runs."""
    if world.fast is not None:
        world.states = world.fast.materialize(world.graph)
        world.fast = None


def run_round(world: World) -> RoundTrace:
    """Advance the world one round and record its metrics."""
    round_index = world.round_index
    if world.fast is not None:
        if _dynamics_due(world.config, round_index):
            sync_world(world)
        else:
            trace = world.fast.run_round(round_index)
            world.traces.append(trace)
            world.round_index = round_index + 1
            return trace
    _apply_dynamics(world, round_index)
    if world.config.algorithm == "spectra":
        outbox = _spectra_generate(world)
        inboxes = _deliver(world, outbox)
        _spectra_transition(world, inboxes)
    else:
        outbox = _adam2_generate(world)
        inboxes = _deliver(world, outbox)
        _adam2_transition(world, inboxes)
    trace = _measure(world, round_index)
    world.traces.append(trace)
    world.round_index = round_index + 1
    if (
        world.use_fast
        and world.config.algorithm == "spectra"
        and not _dynamics_due(world.config, round_index + 1)
    ):
        world.fast = _fast.try_enter(world.config, world.graph, world.states)
    return trace


def run_trial(config: ScenarioConfig, trial_index: int) -> list:
    """Run one independent trial; returns its full RoundTrace list."""
    rng = np.random.default_rng(trial_seed(config.seed, trial_index))
    world = build_world(config, rng)
    for _ in range(config.rounds):
        run_round(world)
    return world.traces


def aggregate_traces(per_trial: list) -> list:
    """Element-wise mean of ks columns across equally long trials."""
    if not per_trial:
        raise ValueError("need at least one trial")
    length = len(per_trial[0])
    if any(len(traces) != length for traces in per_trial):
        raise ValueError("trials disagree on round count")
    out = []
    for r in range(length):
        rows = [traces[r] for traces in per_trial]
        counts = {row.node_count for row in rows}
        if len(counts) != 1:
            raise ValueError(f"trials disagree on node count at round {r}")
        out.append(
            RoundTrace(
                round=rows[0].round,
                node_count=rows[0].node_count,
                ks_mean=float(np.mean([row.ks_mean for row in rows])),
                ks_max=float(np.mean([row.ks_max for row in rows])),
            )
        )
    return out


def run_scenario(config: ScenarioConfig, progress=None) -> list:
    """Run all trials sequentially and average their traces.

    ``progress`` is an optional callable invoked as progress(trial_index,
    trials) after each trial completes.
    """
    per_trial = []
    for t in range(config.trials):
        per_trial.append(run_trial(config, t))
        if progress is not None:
            progress(t, config.trials)
    return aggregate_traces(per_trial)
