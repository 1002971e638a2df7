"""Finite Polya urns and the coupled generate-while-partitioning processes.

Bins are numbered ``1..k`` in reports; arrays are 0-based.

The urn inner loop is compiled with numba but consumes uniforms drawn from the
same PCG64 generator as ``urn_step``, so a trajectory produced by ``run_urn``
is step-for-step identical to calling ``urn_step`` repeatedly with that
generator.
"""

import math
from dataclasses import dataclass

import numba
import numpy as np

from .seeding import derive_seed, make_rng

VARIANTS = ("argmax", "proportional")


@dataclass(frozen=True)
class UrnState:
    loads: tuple
    gamma: float
    t: int = 0
    initial_total: int = None

    def __post_init__(self):
        loads = tuple(int(x) for x in self.loads)
        if any(x < 0 for x in loads):
            raise ValueError("bin loads must be non-negative")
        object.__setattr__(self, "loads", loads)
        if self.initial_total is None:
            object.__setattr__(self, "initial_total", sum(loads) - self.t)

    @property
    def k(self):
        return len(self.loads)

    def fractions(self):
        arr = np.array(self.loads, dtype=np.float64)
        return arr / arr.sum()


def initial_state(k, gamma, initial=None):
    """One ball per bin unless ``initial`` gives explicit loads."""
    loads = (1,) * k if initial is None else tuple(initial)
    if len(loads) != k:
        raise ValueError("initial configuration must have k entries")
    return UrnState(loads, gamma)


def _weights(loads, gamma):
    w = np.asarray(loads, dtype=np.float64) ** gamma
    if not w.sum() > 0:
        raise ValueError("every bin is empty; nothing to attach to")
    return w


def step_probabilities(state):
    w = _weights(state.loads, state.gamma)
    return w / w.sum()


def urn_step(state, rng):
    """Add one ball to bin i with probability m_i**gamma / sum_j m_j**gamma."""
    cum = np.cumsum(_weights(state.loads, state.gamma))
    i = min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), state.k - 1)
    loads = list(state.loads)
    loads[i] += 1
    return UrnState(loads, state.gamma, state.t + 1, state.initial_total)


@numba.njit(cache=True)
def _urn_kernel(loads, gamma, uniforms, stride, record_choices):
    k = loads.shape[0]
    steps = uniforms.shape[0]
    n_rec = steps // stride + 2
    rec_steps = np.empty(n_rec, dtype=np.int64)
    rec_loads = np.empty((n_rec, k), dtype=np.int64)
    choices = np.empty(steps if record_choices else 0, dtype=np.int8)
    w = np.empty(k)
    cum = np.empty(k)
    rec_steps[0] = 0
    rec_loads[0, :] = loads
    r = 1
    for t in range(steps):
        acc = 0.0
        for i in range(k):
            w[i] = float(loads[i]) ** gamma
            acc += w[i]
            cum[i] = acc
        x = uniforms[t] * acc
        chosen = k - 1
        for i in range(k):
            if cum[i] > x:
                chosen = i
                break
        loads[chosen] += 1
        if record_choices:
            choices[t] = chosen
        if (t + 1) % stride == 0 or t + 1 == steps:
            rec_steps[r] = t + 1
            rec_loads[r, :] = loads
            r += 1
    return rec_steps[:r], rec_loads[:r], choices


@dataclass
class UrnTrajectory:
    steps: np.ndarray
    loads: np.ndarray
    final: UrnState
    choices: np.ndarray = None

    def fractions(self):
        return self.loads / self.loads.sum(axis=1, keepdims=True)


def default_stride(steps):
    return max(1, math.ceil(steps / 1000))


def run_urn(k, gamma, initial=None, steps=1000, seed=0, stride=None, record_choices=False):
    """Simulate ``steps`` balls; records every ``stride`` steps plus the final state."""
    state = initial_state(k, gamma, initial)
    _weights(state.loads, gamma)
    rng = make_rng(seed)
    uniforms = rng.random(steps)
    stride = default_stride(steps) if stride is None else int(stride)
    loads = np.array(state.loads, dtype=np.int64)
    rec_steps, rec_loads, choices = _urn_kernel(loads, float(gamma), uniforms, stride,
                                                record_choices)
    final = UrnState(loads.tolist(), gamma, steps, state.initial_total)
    return UrnTrajectory(rec_steps, rec_loads, final, choices if record_choices else None)


def final_fractions(k, gamma, steps, runs, master_seed=0, initial=None):
    """Final fractional loads of ``runs`` independent urns, shape ``(runs, k)``.

    Run ``r`` uses seed ``derive_seed(master_seed, r)``.
    """
    out = np.empty((runs, k))
    for r in range(runs):
        traj = run_urn(k, gamma, initial, steps, derive_seed(master_seed, r),
                       stride=max(steps, 1))
        out[r] = traj.final.fractions()
    return out


@dataclass(frozen=True)
class CoupledProcessConfig:
    n: int
    p: float
    k: int = 2
    variant: str = "argmax"
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.n < 0:
            raise ValueError("n must be >= 0")


@dataclass
class CoupledTrajectory:
    steps: np.ndarray
    loads: np.ndarray
    assignment: np.ndarray  # assignment[t] = partition id (1..k) of arrival t+1

    @property
    def final_loads(self):
        return self.loads[-1]


def run_coupled(config, stride=None):
    """Greedy partitioning of G(n, p) generated on the fly.

    Arrival t draws E_i ~ Binomial(load_i, p) edges to each partition. With no
    edges it joins a least-loaded partition; otherwise the argmax variant picks
    uniformly among the maxima and the proportional variant picks i with
    probability E_i / sum(E).
    """
    rng = make_rng(config.rng_seed)
    k, n, p = config.k, config.n, config.p
    stride = default_stride(n) if stride is None else int(stride)
    argmax = config.variant == "argmax"
    loads = np.zeros(k, dtype=np.int64)
    assignment = np.empty(n, dtype=np.int64)
    rec_steps, rec_loads = [0], [loads.copy()]
    for t in range(n):
        e = rng.binomial(loads, p)
        total = e.sum()
        if total == 0:
            cands = np.flatnonzero(loads == loads.min())
        elif argmax:
            cands = np.flatnonzero(e == e.max())
        else:
            cands = None
        if cands is None:
            cum = np.cumsum(e)
            i = int(np.searchsorted(cum, rng.random() * total, side="right"))
        elif cands.size == 1:
            i = int(cands[0])
        else:
            i = int(cands[rng.integers(cands.size)])
        loads[i] += 1
        assignment[t] = i + 1
        if (t + 1) % stride == 0 or t + 1 == n:
            rec_steps.append(t + 1)
            rec_loads.append(loads.copy())
    return CoupledTrajectory(np.array(rec_steps), np.array(rec_loads), assignment)


@dataclass(frozen=True)
class DominanceReport:
    dominant_bin: int
    fraction: float
    delta: float


def dominance(state):
    """Largest bin (lowest index on ties), its share, and delta = 1 - share.

    Accepts an ``UrnState``, anything with a ``loads`` attribute, or a load vector.
    """
    loads = np.asarray(getattr(state, "loads", state), dtype=np.float64)
    total = loads.sum()
    if total <= 0:
        raise ValueError("no balls thrown")
    i = int(np.argmax(loads))
    frac = float(loads[i] / total)
    return DominanceReport(i + 1, frac, 1.0 - frac)


def write_trajectory_csv(steps, loads, fh):
    loads = np.asarray(loads)
    k = loads.shape[1]
    fh.write(",".join(["step"] + [f"load_{i}" for i in range(1, k + 1)]) + "\n")
    for s, row in zip(np.asarray(steps).tolist(), loads.tolist()):
        fh.write(",".join(str(x) for x in [s] + row) + "\n")
