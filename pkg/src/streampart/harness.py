"""Experiment runner: parameter grids, replication seeds, deterministic CSV.

Seeds
-----
Run ``r`` of cell ``c`` gets ``run_seed = derive_seed(master_seed, c, r)``.
From it the graph, the stream order and the partitioner draw from
``derive_seed(run_seed, 0)``, ``derive_seed(run_seed, 1)`` and
``derive_seed(run_seed, 2)``. A shared graph (one per cell) uses
``derive_seed(master_seed, c)``. Adding runs never changes earlier seeds.

CSV
---
Comment lines starting with ``#`` carry the metadata (RNG algorithm, log base,
preset assumptions), then a header row and one row per (cell, run) in grid
order. ``wall_ms`` is left empty unless timing is switched on, which keeps
reruns byte-identical.
"""

import csv
import io
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import analysis
from .graph_model import (PlantedParams, adversarial_cycle_order, generate_cycle,
                          generate_gnp, generate_planted, random_order)
from .metrics import compute_metrics, edges_cut
from .partitioners import PartitionerConfig, canonical_kind, run_partitioner
from .seeding import RNG_ALGORITHM, derive_seed
from .urn import CoupledProcessConfig, run_coupled, run_urn

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "experiment", "n", "k", "l", "p", "q", "epsilon", "algorithm", "gamma", "run",
    "seed", "edges_cut", "cut_fraction", "euclidean_error", "full_fraction",
    "regime_ok", "wall_ms",
    # appended after the fixed block
    "order", "max_fraction", "zero_arrivals",
)

GRAPHS = ("planted", "gnp", "cycle", "urn", "coupled")
ORDERS = ("random", "adversarial")
Q_RULE = "p/6kl"


class SpecError(ValueError):
    """Malformed or inconsistent experiment specification."""


def _tuple(x):
    if isinstance(x, (list, tuple)):
        return tuple(x)
    return (x,)


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    n: tuple = (1000,)
    k: tuple = (2,)
    l: tuple = (1,)
    p: tuple = (0.1,)
    q: tuple = (0.0,)
    epsilon: tuple = (0.1,)
    algorithm: tuple = ("argmax_greedy",)
    gamma: tuple = (1.0,)
    order: tuple = ("random",)
    runs_per_cell: int = 1
    master_seed: int = 0
    output: str = None
    graph: str = "planted"
    shared_graph: bool = False
    n0: float = 1.0
    timing: bool = False
    notes: str = ""

    def __post_init__(self):
        for name in ("n", "k", "l", "p", "q", "epsilon", "algorithm", "gamma", "order"):
            value = _tuple(getattr(self, name))
            if not value:
                raise SpecError(f"grid dimension {name!r} is empty")
            setattr(self, name, value)
        if self.runs_per_cell < 1:
            raise SpecError("runs_per_cell must be >= 1")
        if self.graph not in GRAPHS:
            raise SpecError(f"graph must be one of {GRAPHS}")
        for o in self.order:
            if o not in ORDERS:
                raise SpecError(f"unknown order {o!r}")
        if self.graph in ("urn", "coupled"):
            self.algorithm = tuple(_process_variant(a, self.graph) for a in self.algorithm)
        else:
            try:
                self.algorithm = tuple(canonical_kind(a) for a in self.algorithm)
            except ValueError as exc:
                raise SpecError(str(exc)) from None
        for q in self.q:
            if isinstance(q, str) and q != Q_RULE:
                raise SpecError(f"q entries must be numbers or {Q_RULE!r}")
        if any(e < 0 for e in self.epsilon):
            raise SpecError("epsilon must be >= 0")

    def cells(self):
        """Grid cells in deterministic order, with ``q`` resolved to a number."""
        out = []
        for n, k, l, p, q, eps, alg, gamma, order in itertools.product(
                self.n, self.k, self.l, self.p, self.q, self.epsilon,
                self.algorithm, self.gamma, self.order):
            q_val = p / (6 * k * l) if q == Q_RULE else float(q)
            out.append(Cell(int(n), int(k), int(l), float(p), q_val, float(eps),
                            alg, float(gamma), order))
        return out


def _process_variant(alg, graph):
    if graph == "urn":
        return "urn"
    alg = {"argmax_greedy": "argmax", "proportional_greedy": "proportional"}.get(alg, alg)
    if alg not in ("argmax", "proportional"):
        raise SpecError(f"coupled process variant must be argmax or proportional, got {alg!r}")
    return alg


@dataclass(frozen=True)
class Cell:
    n: int
    k: int
    l: int
    p: float
    q: float
    epsilon: float
    algorithm: str
    gamma: float
    order: str


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        for line in metadata_lines(self.spec):
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in self.records:
            writer.writerow([_fmt(rec.get(col)) for col in CSV_COLUMNS])
        return buf.getvalue()

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def column(self, name, **where):
        return [r[name] for r in self.records
                if all(r.get(key) == value for key, value in where.items())]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def metadata_lines(spec):
    grid = ";".join(f"{name}={','.join(_fmt(v) for v in getattr(spec, name))}"
                    for name in ("n", "k", "l", "p", "q", "epsilon", "algorithm",
                                 "gamma", "order"))
    lines = [
        f"experiment={spec.name}",
        f"rng={RNG_ALGORITHM}",
        f"master_seed={spec.master_seed}",
        f"graph={spec.graph} shared_graph={_fmt(spec.shared_graph)} "
        f"runs_per_cell={spec.runs_per_cell}",
        f"log_base=e n0={_fmt(spec.n0)}",
        f"grid {grid}",
    ]
    if spec.notes:
        lines.append(f"notes={spec.notes}")
    return lines


def read_results(path_or_text):
    """Parse a results CSV (path or text) into a list of dicts of strings."""
    if "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(body))


def zero_arrivals(g, order):
    """Arrivals with no edge to an earlier vertex."""
    pos = order.positions()
    u, v, _ = g.edge_arrays()
    later = np.where(pos[u] > pos[v], u, v)
    return g.n - int(np.unique(later).size)


def _regime_ok(cell, n0):
    try:
        return analysis.regime_check(cell.n, cell.k, cell.l, cell.p, cell.q, n0).ok
    except ValueError:
        return False


def _run_graph_cell(spec, index, cell):
    records = []
    shared = None
    if spec.shared_graph:
        shared = _make_graph(spec, cell, derive_seed(spec.master_seed, index))
    regime_ok = _regime_ok(cell, spec.n0) if spec.graph == "planted" else None
    if regime_ok is False:
        log.warning("%s cell %d (n=%d k=%d l=%d p=%g q=%g) is outside the recovery regime",
                    spec.name, index, cell.n, cell.k, cell.l, cell.p, cell.q)
    for r in range(spec.runs_per_cell):
        run_seed = derive_seed(spec.master_seed, index, r)
        start = time.perf_counter()
        g = shared if shared is not None else _make_graph(spec, cell, derive_seed(run_seed, 0))
        if cell.order == "adversarial":
            order = adversarial_cycle_order(g.n)
        else:
            order = random_order(g.n, derive_seed(run_seed, 1))
        config = PartitionerConfig(cell.algorithm, cell.k, cell.epsilon, cell.gamma,
                                   derive_seed(run_seed, 2))
        state = run_partitioner(g, order, config)
        metrics = compute_metrics(g, state)
        wall = (time.perf_counter() - start) * 1000
        records.append(_record(spec, cell, r, run_seed, wall,
                               edges_cut=metrics.edges_cut,
                               cut_fraction=metrics.cut_fraction,
                               euclidean_error=metrics.euclidean_error,
                               full_fraction=metrics.full_fraction,
                               regime_ok=regime_ok,
                               max_fraction=float(state.loads.max() / g.n),
                               zero_arrivals=zero_arrivals(g, order)))
    return records


def _make_graph(spec, cell, seed):
    if spec.graph == "planted":
        return generate_planted(PlantedParams(cell.n, cell.l, cell.p, cell.q), rng_seed=seed)
    if spec.graph == "gnp":
        return generate_gnp(cell.n, cell.p, rng_seed=seed)
    return generate_cycle(cell.n)


def _run_process_cell(spec, index, cell):
    records = []
    for r in range(spec.runs_per_cell):
        run_seed = derive_seed(spec.master_seed, index, r)
        start = time.perf_counter()
        if spec.graph == "urn":
            traj = run_urn(cell.k, cell.gamma, None, cell.n, run_seed, stride=max(cell.n, 1))
            loads = np.asarray(traj.final.loads)
        else:
            traj = run_coupled(CoupledProcessConfig(cell.n, cell.p, cell.k, cell.algorithm,
                                                    run_seed))
            loads = traj.final_loads
        wall = (time.perf_counter() - start) * 1000
        records.append(_record(spec, cell, r, run_seed, wall,
                               max_fraction=float(loads.max() / loads.sum())))
    return records


def _record(spec, cell, run, seed, wall, **metrics):
    rec = {
        "experiment": spec.name, "n": cell.n, "k": cell.k, "l": cell.l, "p": cell.p,
        "q": cell.q, "epsilon": cell.epsilon, "algorithm": cell.algorithm,
        "gamma": cell.gamma, "run": run, "seed": seed, "order": cell.order,
        "wall_ms": round(wall, 3) if spec.timing else None,
    }
    rec.update(metrics)
    return rec


def run_cell(args):
    spec, index, cell = args
    if spec.graph in ("urn", "coupled"):
        return _run_process_cell(spec, index, cell)
    return _run_graph_cell(spec, index, cell)


def run_experiment(spec, jobs=1):
    """Run every (cell, run) of ``spec``; writes ``spec.output`` when set."""
    tasks = [(spec, i, cell) for i, cell in enumerate(spec.cells())]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(run_cell, tasks))
    else:
        chunks = [run_cell(t) for t in tasks]
    result = ExperimentResult(spec, [rec for chunk in chunks for rec in chunk])
    if spec.output:
        result.write(spec.output)
    return result


# --- presets -------------------------------------------------------------

FIG_EPSILONS = (0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5)
FIG5_SIZES = tuple(400 * 2 ** i for i in range(8))  # 400 .. 51200

_PRESETS = {
    "fig1": dict(
        n=(4000, 8000, 16000), k=(8,), l=(64,), p=(1.0,), q=(0.0,),
        epsilon=FIG_EPSILONS, runs_per_cell=20, shared_graph=True,
        notes="full-partition fraction vs epsilon; k=8 l=64 p=1 q=0 chosen (l > k ln k)"),
    "fig2": dict(
        n=(6400,), k=(8,), l=(16, 32, 64, 128, 256), p=(1.0,), q=(0.0,),
        epsilon=FIG_EPSILONS, runs_per_cell=20, shared_graph=True,
        notes="full-partition fraction vs epsilon per l; n=6400 k=8 p=1 q=0 chosen"),
    "fig3": dict(
        n=(12800,), k=(8,), l=(64,), p=(0.02, 0.05, 0.1, 0.2, 0.4, 0.8), q=(0.0001,),
        epsilon=(0.5,), runs_per_cell=25, shared_graph=True,
        notes="error vs p around 2 ln n/|C| = 0.095; n=12800 k=8 l=64 q=1e-4 eps=0.5 chosen"),
    "fig4": dict(
        n=(12800,), k=(8,), l=(64,), p=(0.8,),
        q=(0.0, 0.00026, 0.0021, 0.005, 0.01, 0.02, 0.05, 0.1),
        epsilon=(0.5,), runs_per_cell=25, shared_graph=True,
        notes="error vs q; l=64 from max error 7 at k=8, p=0.8 from the marked "
              "q values p/(6kl)=0.00026 and p/(6l)=0.0021; n=12800 eps=0.5 chosen"),
    "fig5": dict(
        n=FIG5_SIZES, k=(8,), l=(100,), p=(0.75,), q=(Q_RULE,),
        epsilon=(0.5,), runs_per_cell=25, shared_graph=True,
        notes="error vs n; p=0.75 q=p/(6kl) k=8 l=100 as published; eps=0.5 chosen"),
    "fig6": dict(
        n=(8000,), k=(8,), l=(64,), p=(1.0,), q=(0.0, 0.002),
        epsilon=FIG_EPSILONS, runs_per_cell=20, shared_graph=True,
        notes="full-partition fraction for q in {0, 0.002}; n=8000 k=8 l=64 p=1 chosen"),
    "lower_bound": dict(
        graph="cycle", n=(1000, 2000, 4000), k=(2,), l=(1,), p=(1.0,), q=(0.0,),
        epsilon=(0.0,), order=("adversarial", "random"), runs_per_cell=50,
        notes="cycle under odd-then-even and random orders; optimal balanced cut is 2"),
    "urn_suite": dict(
        graph="urn", n=(100000,), k=(2, 4), l=(1,), p=(0.0,), q=(0.0,), epsilon=(0.0,),
        algorithm=("urn",), gamma=(0.5, 1.0, 2.0), runs_per_cell=200,
        notes="finite Polya urn final fractions; n is the number of balls"),
}


def preset_names():
    return tuple(_PRESETS)


def preset(name):
    try:
        params = dict(_PRESETS[name])
    except KeyError:
        raise SpecError(f"unknown preset {name!r}; known: {', '.join(_PRESETS)}") from None
    return ExperimentSpec(name=name, **params)


# --- spec files ------------------------------------------------------------

_LIST_FIELDS = {"n": int, "k": int, "l": int, "p": float, "epsilon": float,
                "gamma": float, "algorithm": str, "order": str}
_SCALAR_FIELDS = {"name": str, "runs_per_cell": int, "master_seed": int, "output": str,
                  "graph": str, "n0": float, "notes": str}
_BOOL_FIELDS = ("shared_graph", "timing")


def _parse_q(token):
    token = token.strip()
    if token == Q_RULE:
        return Q_RULE
    return float(token)


def _parse_bool(token):
    value = token.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {token!r}")


def parse_spec(text):
    """Parse the flat ``key = value`` spec format into an ``ExperimentSpec``.

    ``preset = NAME`` (if present) supplies the starting values; every other
    key overrides one field. List fields take comma-separated values.
    """
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in entries:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (lineno, value)

    base = preset(entries.pop("preset")[1]) if "preset" in entries else ExperimentSpec()
    changes = {}
    known = {f.name for f in fields(ExperimentSpec)}
    for key, (lineno, value) in entries.items():
        if key not in known:
            raise SpecError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "q":
                changes[key] = tuple(_parse_q(v) for v in value.split(","))
            elif key in _LIST_FIELDS:
                conv = _LIST_FIELDS[key]
                changes[key] = tuple(conv(v.strip()) for v in value.split(","))
            elif key in _BOOL_FIELDS:
                changes[key] = _parse_bool(value)
            else:
                changes[key] = _SCALAR_FIELDS[key](value)
        except ValueError as exc:
            raise SpecError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return replace(base, **changes)


# --- lower-bound demonstration --------------------------------------------

@dataclass
class LowerBoundReport:
    n: int
    runs: int
    zero_arrivals: list
    expected_zero_arrivals: float
    exact_zero_arrivals: float
    adversarial_cuts: list
    optimal_cut: int = 2

    @property
    def zero_mean(self):
        return float(np.mean(self.zero_arrivals))

    @property
    def zero_sem(self):
        return float(np.std(self.zero_arrivals, ddof=1) / math.sqrt(self.runs))

    @property
    def cut_mean(self):
        return float(np.mean(self.adversarial_cuts))

    @property
    def cut_ratio(self):
        return self.cut_mean / self.n

    def as_dict(self):
        return {
            "n": self.n, "runs": self.runs,
            "zero_arrivals_mean": self.zero_mean, "zero_arrivals_sem": self.zero_sem,
            "expected_zero_arrivals": self.expected_zero_arrivals,
            "exact_zero_arrivals": self.exact_zero_arrivals,
            "adversarial_cut_mean": self.cut_mean, "cut_over_n": self.cut_ratio,
            "optimal_cut": self.optimal_cut,
        }


def lower_bound_demo(n, runs, seed=0, k=2, epsilon=0.0):
    """Zero-edge arrivals under random order, and argmax greedy's cut under the
    odd-then-even order, on an n-cycle."""
    if n < 4 or n % 2:
        raise ValueError("n must be even and >= 4")
    g = generate_cycle(n)
    zeros, cuts = [], []
    adversarial = adversarial_cycle_order(n)
    for r in range(runs):
        zeros.append(zero_arrivals(g, random_order(n, derive_seed(seed, r, 0))))
        config = PartitionerConfig("argmax_greedy", k, epsilon, rng_seed=derive_seed(seed, r, 1))
        cuts.append(edges_cut(g, run_partitioner(g, adversarial, config)))
    return LowerBoundReport(n, runs, zeros, analysis.expected_no_edge_arrivals(n),
                            analysis.exact_no_edge_arrivals(n), cuts)
