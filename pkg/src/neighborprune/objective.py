"""Neighborhood-confidence bookkeeping, utility functions, marginal gains.

For a selected subset S, each example i carries the running weighted sum
nbr_conf[i] = sum over selected j in neighbors(i) of weight(i, j) * C(j).
The total objective is sum_i utility(nbr_conf[i]) with utility a
non-decreasing concave function fixed at 0 for 0. Two gain flavors are
provided: the candidate's own-term gain utility(nbr_conf[x] + C(x)) -
utility(nbr_conf[x]) that the greedy selection loop scores with, and the
exact objective increment summed over the candidate's whole neighborhood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ConfidenceVector
from .similarity import NeighborGraph

UTILITY_KINDS = ("tanh", "identity", "log1p")


@dataclass(frozen=True)
class Utility:
    """Non-decreasing concave utility with utility(0) = 0.

    tanh is the default; identity and log1p share the required properties
    and are handy for hand verification.
    """

    kind: str = "tanh"

    def __post_init__(self):
        if self.kind not in UTILITY_KINDS:
            raise ValueError(f"unknown utility kind {self.kind!r}")

    def __call__(self, z):
        if self.kind == "tanh":
            return np.tanh(z)
        if self.kind == "identity":
            return np.asarray(z, dtype=np.float64) if np.ndim(z) else float(z)
        return np.log1p(z)


def confidence_values(confidence) -> np.ndarray:
    """Accept a ConfidenceVector or a bare array of values in [0, 1]."""
    if isinstance(confidence, ConfidenceVector):
        return confidence.values
    values = np.asarray(confidence, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("confidence must be a 1-d vector")
    return values


class SelectionState:
    """Selected indices plus the running neighborhood-confidence vector.

    Additions maintain nbr_conf with compensated (Kahan) accumulation so the
    incremental values track a from-scratch recomputation tightly. Read-only
    queries are thread-safe; add() must be called exclusively.
    """

    def __init__(self, graph: NeighborGraph, confidence) -> None:
        if graph.tau < 0.0:
            raise ValueError(
                "selection bookkeeping requires tau >= 0: negative edge "
                "weights would break the monotone growth of nbr_conf"
            )
        conf = confidence_values(confidence)
        if conf.size != graph.num_rows:
            raise ValueError(
                f"confidence length {conf.size} != graph rows {graph.num_rows}"
            )
        self.graph = graph
        self.conf = conf
        self.selected: list[int] = []
        self.in_set = np.zeros(graph.num_rows, dtype=bool)
        self.nbr_conf = np.zeros(graph.num_rows, dtype=np.float64)
        self._comp = np.zeros(graph.num_rows, dtype=np.float64)

    @property
    def num_examples(self) -> int:
        return self.graph.num_rows

    def add(self, x: int) -> None:
        """Select x and fold weight(x, v) * C(x) into every neighbor v."""
        x = int(x)
        if not 0 <= x < self.num_examples:
            raise IndexError(f"index {x} out of range")
        if self.in_set[x]:
            raise ValueError(f"example {x} is already selected")
        idx, w = self.graph.neighbors(x)
        contrib = w * self.conf[x]
        y = contrib - self._comp[idx]
        t = self.nbr_conf[idx] + y
        self._comp[idx] = (t - self.nbr_conf[idx]) - y
        self.nbr_conf[idx] = t
        self.in_set[x] = True
        self.selected.append(x)

    def recomputed_nbr_conf(self) -> np.ndarray:
        """From-scratch evaluation of the running vector.

        Gathers along rows (sum over each example's selected neighbors)
        rather than scattering per addition, so it is an independent check
        of the incremental bookkeeping.
        """
        picked = self.in_set[self.graph.indices]
        contrib = np.where(
            picked, self.graph.weights * self.conf[self.graph.indices], 0.0
        )
        return np.add.reduceat(contrib, self.graph.indptr[:-1])


def neighborhood_confidence(state: SelectionState, i: int) -> float:
    """Running confidence mass around example i from the current selection."""
    if not 0 <= i < state.num_examples:
        raise IndexError(f"index {i} out of range")
    return float(state.nbr_conf[i])


def total_objective(state: SelectionState, utility: Utility) -> float:
    """Sum of utility(nbr_conf[i]) over the whole training set."""
    return float(np.sum(utility(state.nbr_conf)))


def _require_unselected(state: SelectionState, x: int) -> int:
    x = int(x)
    if not 0 <= x < state.num_examples:
        raise IndexError(f"index {x} out of range")
    if state.in_set[x]:
        raise ValueError(f"example {x} is already selected")
    return x


def marginal_gain_paper(state: SelectionState, x: int, utility: Utility) -> float:
    """Own-term gain utility(nbr_conf[x] + C(x)) - utility(nbr_conf[x])."""
    x = _require_unselected(state, x)
    a = state.nbr_conf[x]
    gain = float(utility(a + state.conf[x]) - utility(a))
    return max(0.0, gain)


def marginal_gain_exact(state: SelectionState, x: int, utility: Utility) -> float:
    """True objective increment of adding x, summed over its neighborhood."""
    x = _require_unselected(state, x)
    idx, w = state.graph.neighbors(x)
    before = state.nbr_conf[idx]
    delta = utility(before + w * state.conf[x]) - utility(before)
    return max(0.0, float(np.sum(delta)))


def paper_gain_vector(state: SelectionState, utility: Utility) -> np.ndarray:
    """Own-term gains for every example at once (selected entries included).

    Elementwise evaluation only, so each entry is bit-identical to the
    scalar marginal_gain_paper of that index.
    """
    gains = utility(state.nbr_conf + state.conf) - utility(state.nbr_conf)
    return np.maximum(gains, 0.0)
