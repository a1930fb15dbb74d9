"""Push-pull averaging baseline (Adam2) for distributed CDF estimation.

Every node shares one fixed, network-wide grid of k interpolation
points.  A node's state is a fraction vector starting as the step
function of its own input on that grid and driven toward the global
CDF by pairwise averaging: a node pushes its vector to one random
neighbor, the neighbor replies with a snapshot taken before applying
any of this round's traffic, and each side halves the difference.

The exchange is modeled without atomicity on purpose.  When several
pushes land in the same round, replies all carry the same pre-round
snapshot while the receiver folds the pushes in sequentially, so the
pairwise updates overlap and the network-wide mean of the fraction
vectors drifts.  That drift is the baseline's characteristic failure
mode and the reason its error stops improving.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional

import numpy as np


class PushPullMessage(NamedTuple):
    """Either a push carrying current fractions or a pull reply with a
    pre-round snapshot; ``kind`` is "push" or "pull"."""

    kind: str
    sender: int
    fractions: np.ndarray


@dataclass(eq=False)
class Adam2NodeState:
    """One node's view: the shared grid and its fraction vector."""

    node_id: int
    input: float
    points: np.ndarray
    fractions: np.ndarray
    neighbors: frozenset


def adam2_init(
    node_id: int, x: float, points: np.ndarray, neighbors: Iterable[int]
) -> Adam2NodeState:
    """Fresh state with fractions set to the step function of x."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("points must be non-empty")
    if np.any(np.diff(pts) <= 0):
        raise ValueError("points must be sorted strictly ascending")
    pts = pts.copy()
    pts.flags.writeable = False
    nbrs = frozenset(neighbors)
    if node_id in nbrs:
        raise ValueError("node cannot neighbor itself")
    return Adam2NodeState(
        node_id=node_id,
        input=float(x),
        points=pts,
        fractions=(pts >= x).astype(np.float64),
        neighbors=nbrs,
    )


def adam2_push_round(
    state: Adam2NodeState, rng: np.random.Generator
) -> "tuple[Adam2NodeState, Optional[tuple[int, PushPullMessage]]]":
    """Pick one neighbor uniformly and push the current fractions.

    Returns the unchanged state and (recipient, message), or None when
    the node has no neighbors.  Exactly one rng draw per call with at
    least one neighbor, so traffic is reproducible.
    """
    if not state.neighbors:
        return state, None
    nbrs = sorted(state.neighbors)
    target = nbrs[int(rng.integers(len(nbrs)))]
    return state, (target, PushPullMessage("push", state.node_id, state.fractions))


def adam2_handle(
    state: Adam2NodeState, received: Iterable[PushPullMessage]
) -> "tuple[Adam2NodeState, list[tuple[int, PushPullMessage]]]":
    """Fold in one round's traffic and queue pull replies.

    Every push is answered with the fractions held before this call
    (the pre-round snapshot).  Pushes are then averaged in ascending
    sender order, pulls after them, each halving the gap between the
    local vector and the received one.  Replies are not atomic with
    the averaging, so concurrent exchanges may overlap.
    """
    pushes = []
    pulls = []
    for msg in received:
        if msg.kind == "push":
            pushes.append(msg)
        elif msg.kind == "pull":
            pulls.append(msg)
        else:
            raise ValueError(f"unknown message kind {msg.kind!r}")
    pushes.sort(key=lambda m: m.sender)
    pulls.sort(key=lambda m: m.sender)

    snapshot = state.fractions
    replies = [
        (msg.sender, PushPullMessage("pull", state.node_id, snapshot))
        for msg in pushes
    ]
    fractions = state.fractions
    for msg in pushes:
        fractions = (fractions + msg.fractions) / 2.0
    for msg in pulls:
        fractions = (fractions + msg.fractions) / 2.0
    if fractions is state.fractions:
        return state, replies
    return replace(state, fractions=fractions), replies


def adam2_estimate(state: Adam2NodeState) -> np.ndarray:
    """Current CDF estimate on the shared grid."""
    return state.fractions
