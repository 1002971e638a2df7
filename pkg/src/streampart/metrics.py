"""Cut, recovery and balance measurements of a finished partitioning."""

import math
from dataclasses import dataclass

import numpy as np

# fixed order of RunMetrics.to_row()
RUN_METRICS_COLUMNS = (
    "edges_cut",
    "cut_fraction",
    "euclidean_error",
    "full_partitions",
    "full_fraction",
    "loads",
    "recovery",
)


def _assignment(state):
    assignment = state.assignment
    if assignment.size > 1 and assignment[1:].min() < 1:
        raise ValueError("some vertices are unassigned")
    return assignment


def edges_cut(g, state, count_multiplicity=False):
    """Edges whose endpoints lie in different partitions.

    Distinct pairs by default; with ``count_multiplicity`` parallel edges count
    individually.
    """
    assignment = _assignment(state)
    u, v, mult = g.edge_arrays()
    cut = assignment[u] != assignment[v]
    if count_multiplicity:
        return int(mult[cut].sum())
    return int(cut.sum())


def recovery_vector(g, state):
    """Per cluster, the largest fraction of it held by a single partition."""
    if g.labels is None:
        raise ValueError("graph has no cluster labels")
    assignment = _assignment(state)
    l, k = g.num_clusters, state.k
    table = np.zeros((l + 1, k + 1), dtype=np.int64)
    np.add.at(table, (g.labels[1:], assignment[1:]), 1)
    table = table[1:, 1:]
    return table.max(axis=1) / table.sum(axis=1)


def euclidean_error(recovery):
    r = np.asarray(recovery, dtype=np.float64)
    return float(math.sqrt(np.sum((1.0 - r) ** 2)))


def full_partitions(state):
    return int(np.sum(state.loads == state.capacity))


def full_partition_fraction(state):
    return full_partitions(state) / state.k


@dataclass
class RunMetrics:
    edges_cut: int
    cut_fraction: float
    recovery: np.ndarray
    euclidean_error: float
    full_partitions: int
    full_fraction: float
    loads: np.ndarray

    def to_row(self):
        def fmt(x):
            return "" if x is None else format(float(x), ".12g")

        vec = (lambda a: "" if a is None else ";".join(fmt(x) for x in a))
        return [
            str(self.edges_cut),
            fmt(self.cut_fraction),
            fmt(self.euclidean_error),
            str(self.full_partitions),
            fmt(self.full_fraction),
            ";".join(str(int(x)) for x in self.loads),
            vec(self.recovery),
        ]


def compute_metrics(g, state):
    cut = edges_cut(g, state)
    rec = recovery_vector(g, state) if g.labels is not None else None
    return RunMetrics(
        edges_cut=cut,
        cut_fraction=cut / g.m if g.m else 0.0,
        recovery=rec,
        euclidean_error=euclidean_error(rec) if rec is not None else None,
        full_partitions=full_partitions(state),
        full_fraction=full_partition_fraction(state),
        loads=state.loads.copy(),
    )
