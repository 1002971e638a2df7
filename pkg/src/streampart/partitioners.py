"""One-pass streaming partitioners.

Partition ids are ``1..k``. Score vectors are numpy arrays where entry ``i``
belongs to partition ``i + 1``.

Kinds:

``argmax_greedy``          uniform among partitions with the most revealed edges
``proportional_greedy``    partition i with probability S_i / sum(S)
``gamma_greedy``           partition i with probability S_i**gamma / sum(S**gamma)
``weighted_argmax``        argmax of S_i * (1 - load_i / C)   (LDG)
``weighted_proportional``  proportional to S_i * (1 - load_i / C)   (LRG)
``random_baseline``        uniform over non-full partitions, ignores edges

Whenever every score is zero the vertex goes to a least-loaded non-full
partition chosen uniformly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .graph_model import stream_events
from .seeding import make_rng

KINDS = (
    "argmax_greedy",
    "proportional_greedy",
    "gamma_greedy",
    "weighted_argmax",
    "weighted_proportional",
    "random_baseline",
)

# short names accepted on the command line and in spec files
ALIASES = {
    "argmax": "argmax_greedy",
    "proportional": "proportional_greedy",
    "gamma": "gamma_greedy",
    "ldg": "weighted_argmax",
    "lrg": "weighted_proportional",
    "random": "random_baseline",
}


class CapacityError(RuntimeError):
    """Every partition is full, or the capacity cannot hold the graph."""


def capacity_for(n, k, epsilon):
    """Smallest integer C with k*C >= (1 + epsilon)*n."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    # the 1e-9 guard keeps e.g. 1.01 * 4000 / 8 from rounding up to 506
    return max(1, math.ceil((1.0 + epsilon) * n / k - 1e-9))


def canonical_kind(kind):
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ValueError(f"unknown partitioner kind {kind!r}")
    return kind


@dataclass(frozen=True)
class PartitionerConfig:
    kind: str = "argmax_greedy"
    k: int = 2
    epsilon: float = 0.0
    gamma: float = 1.0
    rng_seed: int = 0
    capacity: int = None

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.kind == "gamma_greedy" and not self.gamma > 0:
            raise ValueError("gamma_greedy needs gamma > 0")
        if self.capacity is not None and self.capacity < 1:
            raise ValueError("capacity must be positive")

    def capacity_for(self, n):
        if self.capacity is not None:
            return int(self.capacity)
        return capacity_for(n, self.k, self.epsilon)


class PartitionState:
    def __init__(self, n, k, capacity):
        if k * capacity < n:
            raise CapacityError(f"k*C = {k * capacity} cannot hold {n} vertices")
        self.n = n
        self.k = k
        self.capacity = capacity
        self.assignment = np.zeros(n + 1, dtype=np.int64)
        self.loads = np.zeros(k, dtype=np.int64)

    @property
    def placed(self):
        return int(self.loads.sum())

    @property
    def members(self):
        return [np.flatnonzero(self.assignment == i).tolist() for i in range(1, self.k + 1)]

    def assign(self, v, part):
        if self.assignment[v]:
            raise ValueError(f"vertex {v} already placed")
        if self.loads[part - 1] >= self.capacity:
            raise CapacityError(f"partition {part} is full")
        self.assignment[v] = part
        self.loads[part - 1] += 1

    def full_mask(self):
        return self.loads >= self.capacity

    def check(self):
        """Raise ``AssertionError`` if the state is internally inconsistent."""
        counts = np.bincount(self.assignment[1:], minlength=self.k + 1)[1:]
        assert np.array_equal(counts, self.loads), "loads disagree with assignment"
        assert np.all(self.loads <= self.capacity), "capacity exceeded"
        assert self.assignment[1:].max(initial=0) <= self.k

    def copy(self):
        other = PartitionState.__new__(PartitionState)
        other.n, other.k, other.capacity = self.n, self.k, self.capacity
        other.assignment = self.assignment.copy()
        other.loads = self.loads.copy()
        return other

    def __eq__(self, other):
        if not isinstance(other, PartitionState):
            return NotImplemented
        return (self.k == other.k and self.capacity == other.capacity
                and np.array_equal(self.assignment, other.assignment))

    def to_text(self):
        loads = ",".join(str(x) for x in self.loads.tolist())
        lines = [f"# k={self.k} C={self.capacity} loads={loads}"]
        lines += [f"{v} {int(self.assignment[v])}" for v in range(1, self.n + 1)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        header, *rows = [ln for ln in text.splitlines() if ln.strip()]
        fields = dict(item.split("=") for item in header.lstrip("# ").split())
        state = cls(len(rows), int(fields["k"]), int(fields["C"]))
        for row in rows:
            v, part = (int(x) for x in row.split())
            state.assignment[v] = part
            state.loads[part - 1] += 1
        return state


def raw_scores(event, state):
    """Revealed edges (with multiplicity) into each partition."""
    parts = state.assignment[event.neighbors]
    return np.bincount(parts, weights=event.multiplicities, minlength=state.k + 1)[1:]


def compute_scores(event, state, config):
    scores = raw_scores(event, state)
    if config.kind in ("weighted_argmax", "weighted_proportional"):
        scores = scores * (1.0 - state.loads / state.capacity)
    scores[state.full_mask()] = 0.0
    return scores


def _least_loaded(state):
    open_ = np.flatnonzero(~state.full_mask())
    if open_.size == 0:
        raise CapacityError("all partitions are full")
    loads = state.loads[open_]
    return open_[loads == loads.min()]


def _decision(raw, state, config):
    """Return ``("uniform", candidates)`` or ``("weighted", weights)``.

    Candidates are 0-based partition indices.
    """
    kind = config.kind
    if kind == "random_baseline":
        open_ = np.flatnonzero(~state.full_mask())
        if open_.size == 0:
            raise CapacityError("all partitions are full")
        return "uniform", open_
    full = state.full_mask()
    if kind.startswith("weighted"):
        # exact integer keys: S_i * (C - load_i) orders like S_i * (1 - load_i / C)
        key = raw.astype(np.int64) * (state.capacity - state.loads)
    else:
        key = raw.copy()
    key[full] = 0
    if not key.any():
        return "uniform", _least_loaded(state)
    if kind in ("argmax_greedy", "weighted_argmax"):
        return "uniform", np.flatnonzero(key == key.max())
    if kind == "gamma_greedy":
        return "weighted", key.astype(np.float64) ** config.gamma
    return "weighted", key.astype(np.float64)


def choice_probabilities(event, state, config):
    """Exact distribution of the partition ``place_vertex`` would pick."""
    mode, data = _decision(raw_scores(event, state), state, config)
    probs = np.zeros(state.k)
    if mode == "uniform":
        probs[data] = 1.0 / data.size
    else:
        probs[:] = data / data.sum()
    return probs


def place_vertex(event, state, config, rng):
    """Choose a partition for ``event.vertex``, record it and return its id."""
    mode, data = _decision(raw_scores(event, state), state, config)
    if mode == "uniform":
        idx = data[0] if data.size == 1 else data[rng.integers(data.size)]
    else:
        cum = np.cumsum(data)
        idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        idx = min(idx, state.k - 1)
    part = int(idx) + 1
    state.assign(event.vertex, part)
    return part


def run_partitioner(g, order, config):
    if config.k < 2 and config.kind != "random_baseline":
        raise ValueError("k must be >= 2")
    state = PartitionState(g.n, config.k, config.capacity_for(g.n))
    rng = make_rng(config.rng_seed)
    for event in stream_events(g, order):
        place_vertex(event, state, config, rng)
    return state


def random_baseline(g, order, k, seed=0, capacity=None):
    """Hash-style baseline; by default capacity is unconstrained (C = n)."""
    cfg = PartitionerConfig("random_baseline", k=k, rng_seed=seed,
                            capacity=g.n if capacity is None else capacity)
    return run_partitioner(g, order, cfg)
