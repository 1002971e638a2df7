"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a one-line summary of what it measured; ``conftest.py``
prints a PASS/FAIL line per criterion at the end of the session.

Pre-registered rules (fixed before looking at the full runs):

* "monotone up to one grid-step violation": at most one adjacent pair of
  25-run medians moves against the expected direction.
* fig1 threshold: the smallest epsilon on the grid whose mean full-partition
  fraction is <= 0.2.
* concentration thresholds for the k=4 dichotomy: median max-fraction >= 0.9
  for argmax, max-fraction <= 0.6 in >= 95% of runs for proportional.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from streampart import analysis as an
from streampart import (CoupledProcessConfig, PartitionerConfig, derive_seed, generate_cycle,
                        generate_gnp, random_order, run_coupled, run_partitioner)
from streampart.graph_model import stream_events
from streampart.harness import (ExperimentSpec, lower_bound_demo, preset, run_experiment)
from streampart.urn import final_fractions

FULL_FRACTION_THRESHOLD = 0.2
DICHOTOMY_ARGMAX_MEDIAN = 0.9
DICHOTOMY_PROPORTIONAL_CAP = 0.6


@pytest.fixture
def report(record_property):
    def emit(label, detail):
        record_property("criterion", label)
        record_property("detail", detail)
    return emit


def violations(values, direction):
    """Adjacent pairs moving against ``direction`` ('down' = non-increasing)."""
    diffs = np.diff(np.asarray(values, dtype=float))
    return int(np.sum(diffs > 0)) if direction == "down" else int(np.sum(diffs < 0))


def medians_by(records, key, value="euclidean_error"):
    groups = {}
    for r in records:
        groups.setdefault(r[key], []).append(r[value])
    xs = sorted(groups)
    return xs, [float(np.median(groups[x])) for x in xs], groups


def max_fraction(loads):
    loads = np.asarray(loads)
    return loads.max() / loads.sum()


# 1 ---------------------------------------------------------------------------------

def test_criterion_01_no_edge_arrivals(report):
    start = time.perf_counter()
    ratio = an.expected_no_edge_arrivals(10**6) / 10**6
    elapsed = time.perf_counter() - start

    n, runs = 3000, 100
    g = generate_cycle(n)
    counts = []
    for r in range(runs):
        order = random_order(n, derive_seed(101, r))
        counts.append(sum(e.revealed_count == 0 for e in stream_events(g, order)))
    mean = float(np.mean(counts))
    sem = float(np.std(counts, ddof=1) / math.sqrt(runs))
    exact = an.exact_no_edge_arrivals(n)
    formula = an.expected_no_edge_arrivals(n)
    report("1. no-edge arrivals",
           f"ratio(1e6)={ratio:.7f} in {elapsed * 1000:.1f} ms; MC mean={mean:.2f} "
           f"sem={sem:.2f} exact={exact:.2f} sum={formula:.2f}")
    assert 0.333 <= ratio <= 0.334
    assert elapsed < 1.0
    assert abs(mean - exact) <= 4 * sem
    assert abs(mean - formula) <= 4 * sem


# 2 ---------------------------------------------------------------------------------

def test_criterion_02_linear_cut_on_adversarial_cycle(report):
    ratios, cuts = [], []
    for n in (1000, 2000, 4000):
        rep = lower_bound_demo(n, 50, seed=202)
        cuts.append(rep.cut_mean)
        ratios.append(rep.cut_ratio)
        assert rep.optimal_cut == 2
    centre = float(np.mean(ratios))
    spread = max(abs(r / centre - 1) for r in ratios)
    report("2. linear cut, adversarial cycle",
           f"mean cuts={[round(c, 1) for c in cuts]} cut/n={[round(r, 4) for r in ratios]} "
           f"max deviation={spread:.1%} (optimal 2)")
    assert all(c >= n / 10 for c, n in zip(cuts, (1000, 2000, 4000)))
    assert spread <= 0.25


# 3 ---------------------------------------------------------------------------------

def test_criterion_03_urn_concentration(report):
    start = time.perf_counter()
    strong = final_fractions(2, 2.0, 100_000, 200, master_seed=303)
    weak = final_fractions(4, 0.5, 100_000, 200, master_seed=304)
    elapsed = time.perf_counter() - start
    dominated = float(np.mean(strong.max(axis=1) > 0.99))
    balanced = float(np.mean(np.all(np.abs(weak - 0.25) <= 0.05, axis=1)))
    report("3. urn concentration",
           f"gamma=2: P(max>0.99)={dominated:.3f}; gamma=0.5: P(all in 0.25+-0.05)="
           f"{balanced:.3f}; {elapsed:.1f} s")
    assert dominated >= 0.95
    assert balanced >= 0.95
    assert elapsed <= 60


# 4 ---------------------------------------------------------------------------------

def test_criterion_04_urn_simplex_uniformity(report):
    fr = final_fractions(2, 1.0, 10_000, 2000, master_seed=404)[:, 0]
    res = stats.kstest(fr, "uniform")
    report("4. urn simplex uniformity",
           f"KS D={res.statistic:.4f} p={res.pvalue:.3f} over 2000 runs")
    assert res.pvalue > 0.01


# 5 ---------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_05_coupling_equivalence(report):
    n, p, k, seeds = 2000, 0.01, 2, 500
    streamed = {"argmax": [], "proportional": []}
    coupled = {"argmax": [], "proportional": []}
    for s in range(seeds):
        g = generate_gnp(n, p, rng_seed=derive_seed(505, s, 0))
        order = random_order(n, derive_seed(505, s, 1))
        for variant in streamed:
            # the coupled process has no capacity, so neither does the partitioner
            cfg = PartitionerConfig(variant, k, capacity=n, rng_seed=derive_seed(505, s, 2))
            streamed[variant].append(max_fraction(run_partitioner(g, order, cfg).loads))
            traj = run_coupled(CoupledProcessConfig(n, p, k, variant, derive_seed(506, s)))
            coupled[variant].append(max_fraction(traj.final_loads))
    results = {v: stats.ks_2samp(streamed[v], coupled[v]) for v in streamed}
    report("5. coupling equivalence",
           "; ".join(f"{v}: D={r.statistic:.3f} p={r.pvalue:.3f} "
                     f"medians {np.median(streamed[v]):.3f}/{np.median(coupled[v]):.3f}"
                     for v, r in results.items()))
    assert all(r.pvalue > 0.01 for r in results.values())


# 6 ---------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_06_argmax_vs_proportional_dichotomy(report):
    n, p, k, seeds = 20000, 0.002, 4, 100
    assert p > 2 * math.log(n) / n
    fracs = {"argmax": [], "proportional": []}
    for s in range(seeds):
        g = generate_gnp(n, p, rng_seed=derive_seed(606, s, 0))
        order = random_order(n, derive_seed(606, s, 1))
        for variant in fracs:
            cfg = PartitionerConfig(variant, k, capacity=n, rng_seed=derive_seed(606, s, 2))
            fracs[variant].append(max_fraction(run_partitioner(g, order, cfg).loads))
    argmax_median = float(np.median(fracs["argmax"]))
    prop_share = float(np.mean(np.asarray(fracs["proportional"]) <= DICHOTOMY_PROPORTIONAL_CAP))
    report("6. argmax/proportional dichotomy",
           f"argmax median max-fraction={argmax_median:.3f} (need >= "
           f"{DICHOTOMY_ARGMAX_MEDIAN}); proportional P(<= {DICHOTOMY_PROPORTIONAL_CAP})="
           f"{prop_share:.2f} (need >= 0.95)")
    assert prop_share >= 0.95
    assert argmax_median >= DICHOTOMY_ARGMAX_MEDIAN


# 7 ---------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_07_fig5(report):
    spec = preset("fig5")
    start = time.perf_counter()
    result = run_experiment(spec)
    elapsed = time.perf_counter() - start
    ns, medians, _ = medians_by(result.records, "n")
    bad = violations(medians, "down")
    report("7. fig5 error vs n",
           f"medians={[round(m, 3) for m in medians]} at n={ns}; violations={bad}; "
           f"{elapsed:.0f} s")
    assert ns[-1] == 51200
    assert medians[-1] <= 0.1
    assert bad <= 1
    assert elapsed <= 30 * 60


# 8 ---------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_08_fig3_fig4_monotone(report):
    fig3 = run_experiment(preset("fig3"))
    ps, p_medians, _ = medians_by(fig3.records, "p")
    fig4 = run_experiment(preset("fig4"))
    qs, q_medians, groups = medians_by(fig4.records, "q")
    v3 = violations(p_medians, "down")
    v4 = violations(q_medians, "up")
    mean_at_002 = float(np.mean(groups[0.02]))
    report("8. fig3/fig4 monotonicity",
           f"fig3 medians={[round(m, 3) for m in p_medians]} (violations {v3}); "
           f"fig4 medians={[round(m, 3) for m in q_medians]} (violations {v4}); "
           f"fig4 mean error at q=0.02 = {mean_at_002:.3f} (need <= 0.2)")
    assert v3 <= 1
    assert v4 <= 1
    assert mean_at_002 <= 0.2


# 9 ---------------------------------------------------------------------------------

def fig1_threshold(records, n):
    eps_values = sorted({r["epsilon"] for r in records if r["n"] == n})
    for eps in eps_values:
        mean = np.mean([r["full_fraction"] for r in records
                        if r["n"] == n and r["epsilon"] == eps])
        if mean <= FULL_FRACTION_THRESHOLD:
            return eps_values.index(eps), eps
    return len(eps_values), math.inf


@pytest.mark.slow
def test_criterion_09_fig1_size_independence(report):
    result = run_experiment(preset("fig1"))
    found = {n: fig1_threshold(result.records, n) for n in (4000, 8000, 16000)}
    steps = [idx for idx, _ in found.values()]
    report("9. fig1 size independence",
           "threshold eps " + ", ".join(f"n={n}: {eps}" for n, (_, eps) in found.items()))
    assert max(steps) < len(preset("fig1").epsilon)
    assert max(steps) - min(steps) <= 1


# 10 --------------------------------------------------------------------------------

def test_criterion_10_analysis_oracles(report):
    rng = np.random.default_rng(1010)
    samples = 100_000
    worst = 0.0
    for j in (1, 2, 3, 4, 7, 10, 25):
        for delta in (0.0, 0.05, 0.1, 0.25, 0.4):
            a = rng.binomial(j, 0.5 + delta, size=samples)
            emp = float(np.mean(a > j - a))
            exact = an.lemma2_exact_prob(j, delta)
            sd = math.sqrt(exact * (1 - exact) / samples)
            z = abs(emp - exact) / sd if sd else (0.0 if emp == exact else math.inf)
            worst = max(worst, z)
    balls = an.convergence_balls(an.ConvergenceParams(2.0, 0.1))
    rel_balls = abs(balls / 9127 - 1)
    roundtrip = 0.0
    for k in (2, 3, 5, 10):
        for g in (0.01, 0.25, 0.5, 0.9):
            d = an.gamma_delta_convert(g, k, "gamma_to_delta")
            roundtrip = max(roundtrip, abs(an.gamma_delta_convert(d, k) / g - 1))
    regime = an.regime_check(51200, 8, 100, 0.75, 0.75 / 4800)
    margin = regime.margins["separation"]
    report("10. analysis oracles",
           f"lemma2 worst |z|={worst:.2f}; balls={balls:.1f} ({rel_balls:.2%} from 9127); "
           f"roundtrip rel err={roundtrip:.1e}; separation margin={margin:.4f}")
    assert worst <= 4
    assert rel_balls <= 0.02
    assert roundtrip <= 1e-12
    assert regime.verdicts["separation"]
    assert margin == pytest.approx(0.196, abs=1e-3)


# 11 --------------------------------------------------------------------------------

def test_criterion_11_determinism(report, tmp_path):
    from streampart.cli import main

    spec = ExperimentSpec(name="det", n=(400, 800), k=(4,), l=(8,), p=(0.3,), q=(0.002,),
                          epsilon=(0.1, 0.3), algorithm=("argmax", "lrg"),
                          runs_per_cell=3, master_seed=1111)
    first = run_experiment(spec).to_csv()
    second = run_experiment(spec).to_csv()
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["experiment", "--preset", "lower_bound", "--runs", "2", "--seed", "7",
                     "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    report("11. determinism",
           f"in-process rerun identical={first == second}; CLI rerun identical="
           f"{outs[0] == outs[1]} ({len(outs[0])} bytes)")
    assert first == second
    assert outs[0] == outs[1]
