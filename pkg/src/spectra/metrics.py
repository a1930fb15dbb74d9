"""Kolmogorov-Smirnov error metrics and the round trace CSV format.

Estimation quality is judged against the empirical CDF of the inputs
currently present in the network.  A node's error is the largest
absolute gap between that truth and its estimate, sampled at the
node's own interpolation points; per round the per-node errors are
reduced to their mean and max.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, NamedTuple, Sequence

import numpy as np


@dataclass(eq=False)
class EmpiricalCdf:
    """Right-continuous empirical CDF of a fixed sample."""

    sorted_values: np.ndarray

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "EmpiricalCdf":
        arr = np.sort(np.asarray(list(values), dtype=np.float64))
        if arr.size == 0:
            raise ValueError("empirical CDF needs at least one value")
        arr.flags.writeable = False
        return cls(sorted_values=arr)

    def evaluate(self, labels: np.ndarray) -> np.ndarray:
        """Fraction of the sample at or below each label."""
        counts = np.searchsorted(self.sorted_values, labels, side="right")
        return counts / self.sorted_values.size


def ks_node(
    true_cdf: EmpiricalCdf, labels: np.ndarray, estimate: np.ndarray
) -> float:
    """Largest absolute error of one node's estimate at its labels."""
    if len(labels) != len(estimate) or len(labels) == 0:
        raise ValueError("labels and estimate must be non-empty and aligned")
    return float(np.max(np.abs(true_cdf.evaluate(labels) - estimate)))


def ks_max(node_errors: Sequence[float]) -> float:
    """Worst per-node KS error in the round."""
    errors = np.asarray(node_errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("need at least one node error")
    return float(np.max(errors))


def ks_mean(node_errors: Sequence[float]) -> float:
    """Mean per-node KS error in the round."""
    errors = np.asarray(node_errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("need at least one node error")
    return float(np.mean(errors))


class RoundTrace(NamedTuple):
    """Per-round metrics row: live node count plus the two KS figures."""

    round: int
    node_count: int
    ks_mean: float
    ks_max: float


def format_metric(value: float) -> str:
    """Positional decimal with 9 significant digits, no exponent."""
    if not np.isfinite(value):
        raise ValueError(f"non-finite metric {value!r}")
    if value == 0.0:
        return "0"
    return format(Decimal(format(value, ".9g")), "f")


CSV_HEADER = "round,node_count,ks_mean,ks_max"


def emit_csv(traces: Iterable[RoundTrace]) -> str:
    """Render traces as CSV text with a header and newline endings."""
    lines = [CSV_HEADER]
    for t in traces:
        lines.append(
            f"{t.round},{t.node_count},{format_metric(t.ks_mean)},{format_metric(t.ks_max)}"
        )
    return "\n".join(lines) + "\n"
