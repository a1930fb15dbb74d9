"""Node-local state and transitions for the Spectra CDF gossip protocol.

Each node holds a private input value and estimates the cumulative
distribution function of all inputs in the network at k interpolation
points.  The points span the node's current view of the global value
range (its interval) and the CDF heights are driven toward the network
average by flow accounting: for every neighbor the node keeps a flow
vector, and the estimate is the node's own step-function base vector
minus the sum of outgoing flows.  Flows are anti-symmetric across an
edge, which makes the network-wide mean of the estimates invariant and
lets the protocol recover from message loss without double counting.

All functions here are pure: they never mutate their arguments and
return fresh state objects.  Wherever floats accumulate, terms are
combined in ascending identifier order so results are reproducible.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, NamedTuple

import numpy as np

# Flow and estimate vectors are float64 arrays of length k.
FlowVector = np.ndarray

# Per-neighbor flow table, keyed by neighbor identifier.
FlowTable = dict


class InterpolationInterval(NamedTuple):
    """Closed value range whose k evenly spaced points index CDF vectors."""

    lower: float
    upper: float


class SpectraMessage(NamedTuple):
    """One round's payload from a node to one neighbor.

    ``flow`` is the sender's flow vector toward the recipient (zeros if
    the sender has none yet) and ``estimate`` is the sender's current
    CDF estimate, both indexed by ``interval``.
    """

    sender: int
    interval: InterpolationInterval
    flow: FlowVector
    estimate: FlowVector


@dataclass(eq=False, slots=True)
class SpectraNodeState:
    """Complete protocol state of one node.

    ``base`` is the node's own CDF contribution (1 at every point at or
    above the input, else 0) indexed by ``interval``.  ``flows`` has an
    entry only for neighbors heard from at least once.  ``est`` caches
    the current estimate and always equals ``base`` minus the summed
    flows; it is kept on the state because message generation and the
    metrics both read it every round.  ``silence`` counts consecutive
    rounds without a message per neighbor and feeds the simulator's
    failure detector.
    """

    node_id: int
    input: float
    flows: FlowTable
    base: np.ndarray
    est: np.ndarray
    interval: InterpolationInterval
    neighbors: frozenset
    silence: dict


def interpolate_point(interval: InterpolationInterval, j: int, k: int) -> float:
    """Return the j-th of k evenly spaced points over ``interval``.

    The last point is pinned to the exact upper bound so the invariant
    point(k - 1) == upper survives floating point rounding.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0 <= j < k:
        raise ValueError(f"point index {j} outside [0, {k})")
    if j == k - 1:
        return interval.upper
    lower, upper = interval
    return lower + j * (upper - lower) / (k - 1)


_POINTS_CACHE: dict = {}


def _points_entry(interval: InterpolationInterval, k: int):
    """Cached (points, is_sorted, strictly_increasing) for an interval."""
    key = (interval[0], interval[1], k)
    entry = _POINTS_CACHE.get(key)
    if entry is None:
        lower, upper = interval
        # Same arithmetic as interpolate_point, vectorized over j.
        pts = lower + np.arange(k, dtype=np.float64) * (upper - lower) / (k - 1)
        pts[-1] = upper
        pts.flags.writeable = False
        diffs = np.diff(pts)
        entry = (pts, bool(np.all(diffs >= 0.0)), bool(np.all(diffs > 0.0)))
        if len(_POINTS_CACHE) > 1 << 16:
            _POINTS_CACHE.clear()
        _POINTS_CACHE[key] = entry
    return entry


def interval_points(interval: InterpolationInterval, k: int) -> np.ndarray:
    """All k interpolation points of ``interval`` as a read-only array."""
    if k < 2:
        raise ValueError("k must be at least 2")
    return _points_entry(interval, k)[0]


def merge_intervals(intervals: Iterable[InterpolationInterval]) -> InterpolationInterval:
    """Smallest interval covering every input interval."""
    items = list(intervals)
    if not items:
        raise ValueError("merge_intervals needs at least one interval")
    return InterpolationInterval(
        min(iv.lower for iv in items), max(iv.upper for iv in items)
    )


def transform_vector(
    u: np.ndarray,
    old: InterpolationInterval,
    new: InterpolationInterval,
) -> np.ndarray:
    """Re-index a CDF vector from one interval's points onto another's.

    Each new point takes the value at the largest old point not above
    it, or the value at point 0 when every old point lies above.  For a
    non-decreasing vector on a widening interval this is the usual
    step-function extension (0 below the old range, carried last value
    above it).  When nothing moves the input array is returned as is.
    """
    k = u.shape[0]
    old_pts, old_sorted, old_strict = _points_entry(old, k)
    if old == new:
        if old_strict:
            return u
        new_pts = old_pts
    else:
        new_pts = _points_entry(new, k)[0]
    if old_sorted:
        idx = np.searchsorted(old_pts, new_pts, side="right") - 1
        np.maximum(idx, 0, out=idx)
        return u[idx]
    # Degenerate float spacing can break monotonicity; fall back to the
    # direct definition, which needs no ordering.
    out = np.empty(k, dtype=np.float64)
    for j in range(k):
        m = 0
        for l in range(k):
            if old_pts[l] <= new_pts[j]:
                m = l
        out[j] = u[m]
    return out


def compute_base_vector(
    x: float, interval: InterpolationInterval, k: int
) -> np.ndarray:
    """Step function of the node's own input sampled at the k points."""
    return (interval_points(interval, k) >= x).astype(np.float64)


def estimate(base: np.ndarray, flows: Mapping[int, np.ndarray]) -> np.ndarray:
    """CDF estimate: base vector minus the sum of all outgoing flows.

    Flows are summed in ascending neighbor order before the single
    subtraction, matching the transition's internal arithmetic.
    """
    if not flows:
        return base.copy()
    rows = np.vstack([flows[j] for j in sorted(flows)])
    return base - rows.sum(axis=0)


def spectra_init(
    node_id: int, x: float, neighbors: Iterable[int], k: int
) -> SpectraNodeState:
    """Fresh state: degenerate interval at x, all-ones base, no flows."""
    if k < 2:
        raise ValueError("k must be at least 2")
    nbrs = frozenset(neighbors)
    if node_id in nbrs:
        raise ValueError("node cannot neighbor itself")
    base = np.ones(k, dtype=np.float64)
    return SpectraNodeState(
        node_id=node_id,
        input=float(x),
        flows={},
        base=base,
        est=base,
        interval=InterpolationInterval(float(x), float(x)),
        neighbors=nbrs,
        silence={j: 0 for j in nbrs},
    )


_ZERO_CACHE: dict = {}


def _zero_vector(k: int) -> np.ndarray:
    zero = _ZERO_CACHE.get(k)
    if zero is None:
        zero = np.zeros(k, dtype=np.float64)
        zero.flags.writeable = False
        _ZERO_CACHE[k] = zero
    return zero


def generate_messages(state: SpectraNodeState) -> dict:
    """Build this round's message for every current neighbor.

    Neighbors without a flow entry get a zero flow vector.  All
    messages share one estimate array; receivers must not mutate it.
    """
    zero = None
    out = {}
    flows = state.flows
    for j in sorted(state.neighbors):
        flow = flows.get(j)
        if flow is None:
            if zero is None:
                zero = _zero_vector(state.base.shape[0])
            flow = zero
        out[j] = SpectraMessage(state.node_id, state.interval, flow, state.est)
    return out


def state_transition(
    state: SpectraNodeState, received: Iterable[SpectraMessage]
) -> SpectraNodeState:
    """Advance one round given the messages that actually arrived.

    Steps, in order: widen the interval to cover the node's own input
    and every received interval, recompute the base vector on the new
    points, re-index flows (received flows are negated to become this
    node's view of the edge), average the estimate set, and adjust each
    known flow by the difference between the average and that
    neighbor's estimate.

    The estimate set contains one entry per neighbor plus the node
    itself.  For a neighbor not heard from this round the node stands
    in its own previous estimate as a placeholder; this asymmetric
    stand-in is deliberate and only matters transiently under loss.
    Estimates are summed in ascending identifier order, self included.
    """
    node_id = state.node_id
    neighbors = state.neighbors
    by_sender: dict = {}
    for msg in received:
        if msg.sender not in neighbors:
            raise ValueError(f"message from non-neighbor {msg.sender}")
        if msg.sender in by_sender:
            raise ValueError(f"duplicate message from {msg.sender}")
        by_sender[msg.sender] = msg

    old_interval = state.interval
    x = state.input
    lower = old_interval.lower if old_interval.lower < x else x
    upper = old_interval.upper if old_interval.upper > x else x
    for msg in by_sender.values():
        if msg.interval.lower < lower:
            lower = msg.interval.lower
        if msg.interval.upper > upper:
            upper = msg.interval.upper
    new_interval = InterpolationInterval(lower, upper)
    k = state.base.shape[0]
    base = compute_base_vector(x, new_interval, k)

    nbrs = sorted(neighbors)
    old_flows = state.flows
    silence: dict = {}
    flow_ids: list = []
    flow_rows: list = []
    negate: list = []
    for j in nbrs:
        msg = by_sender.get(j)
        if msg is not None:
            flow_ids.append(j)
            flow_rows.append(transform_vector(msg.flow, msg.interval, new_interval))
            negate.append(True)
            silence[j] = 0
        else:
            old_flow = old_flows.get(j)
            if old_flow is not None:
                flow_ids.append(j)
                flow_rows.append(
                    transform_vector(old_flow, old_interval, new_interval)
                )
                negate.append(False)
            silence[j] = state.silence.get(j, 0) + 1

    if flow_rows:
        flow_matrix = np.empty((len(flow_rows), k), dtype=np.float64)
        for i, row in enumerate(flow_rows):
            if negate[i]:
                np.negative(row, out=flow_matrix[i])
            else:
                flow_matrix[i] = row
        self_est = base - flow_matrix.sum(axis=0)
    else:
        flow_matrix = None
        self_est = base.copy()

    # Estimate rows in ascending identifier order with self in place.
    own_previous = None
    row_of: dict = {}
    self_pos = bisect_left(nbrs, node_id)
    est_matrix = np.empty((len(nbrs) + 1, k), dtype=np.float64)
    est_matrix[self_pos] = self_est
    for i, j in enumerate(nbrs):
        msg = by_sender.get(j)
        if msg is not None:
            row = transform_vector(msg.estimate, msg.interval, new_interval)
        else:
            if own_previous is None:
                own_previous = transform_vector(
                    state.est, old_interval, new_interval
                )
            row = own_previous
        row_of[j] = i if i < self_pos else i + 1
        est_matrix[row_of[j]] = row

    average = est_matrix.sum(axis=0)
    average /= est_matrix.shape[0]

    if flow_matrix is not None:
        # F'(j) = F(j) + average - E(j), rows in ascending j.
        flow_matrix += average
        flow_matrix -= est_matrix[[row_of[j] for j in flow_ids]]
        new_flows = dict(zip(flow_ids, flow_matrix))
        est = base - flow_matrix.sum(axis=0)
    else:
        new_flows = {}
        est = base.copy()

    return SpectraNodeState(
        node_id=node_id,
        input=x,
        flows=new_flows,
        base=base,
        est=est,
        interval=new_interval,
        neighbors=neighbors,
        silence=silence,
    )


def handle_neighbor_added(state: SpectraNodeState, neighbor: int) -> SpectraNodeState:
    """Register a new neighbor; flow appears once it is first heard."""
    if neighbor == state.node_id:
        raise ValueError("node cannot neighbor itself")
    if neighbor in state.neighbors:
        raise ValueError(f"{neighbor} is already a neighbor")
    silence = dict(state.silence)
    silence[neighbor] = 0
    return replace(
        state, neighbors=state.neighbors | {neighbor}, silence=silence
    )


def handle_neighbor_removed(state: SpectraNodeState, neighbor: int) -> SpectraNodeState:
    """Drop a neighbor and its flow, releasing that mass back to the node."""
    if neighbor not in state.neighbors:
        raise ValueError(f"{neighbor} is not a neighbor")
    flows = {j: f for j, f in state.flows.items() if j != neighbor}
    silence = {j: c for j, c in state.silence.items() if j != neighbor}
    return replace(
        state,
        neighbors=state.neighbors - {neighbor},
        flows=flows,
        silence=silence,
        est=estimate(state.base, flows),
    )


def set_input_value(state: SpectraNodeState, x: float) -> SpectraNodeState:
    """Replace the node's input; base and estimate catch up at the next
    transition, so the round's outgoing messages still carry the old
    view (dynamics precede message generation)."""
    return replace(state, input=float(x))
