"""Command line entry point: ``streampart {gen,partition,urn,calc,experiment}``.

Exit codes: 0 success, 2 bad arguments or spec, 3 runtime fault.
"""

import argparse
import contextlib
import json
import logging
import math
import sys

from . import analysis
from .graph_model import (PlantedParams, adversarial_cycle_order, generate_cycle,
                          generate_gnp, generate_planted, random_order, read_edgelist,
                          write_edgelist)
from .harness import SpecError, lower_bound_demo, parse_spec, preset, run_experiment
from .metrics import compute_metrics
from .partitioners import KINDS, ALIASES, PartitionerConfig, run_partitioner
from .urn import CoupledProcessConfig, run_coupled, run_urn, write_trajectory_csv

EXIT_SPEC = 2
EXIT_RUNTIME = 3


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def cmd_gen(args):
    if args.model == "gnp":
        g = generate_gnp(args.n, args.p, rng_seed=args.seed)
    elif args.model == "planted":
        g = generate_planted(PlantedParams(args.n, args.l, args.p, args.q), rng_seed=args.seed)
    else:
        g = generate_cycle(args.n)
    with _open_out(args.out) as fh:
        write_edgelist(g, fh)


def cmd_partition(args):
    with open(args.graph) as fh:
        g = read_edgelist(fh)
    if args.order == "adversarial":
        order = adversarial_cycle_order(g.n)
    else:
        order = random_order(g.n, args.seed)
    config = PartitionerConfig(args.algorithm, args.k, args.epsilon, args.gamma, args.seed)
    state = run_partitioner(g, order, config)
    with _open_out(args.out) as fh:
        fh.write(state.to_text())
    m = compute_metrics(g, state)
    summary = {
        "n": g.n, "m": g.m, "k": state.k, "capacity": state.capacity,
        "algorithm": config.kind, "seed": args.seed,
        "edges_cut": m.edges_cut, "cut_fraction": m.cut_fraction,
        "euclidean_error": m.euclidean_error, "full_fraction": m.full_fraction,
        "loads": m.loads.tolist(),
    }
    print(json.dumps(summary), file=sys.stderr if args.out in (None, "-") else sys.stdout)


def cmd_urn(args):
    if args.coupled:
        traj = run_coupled(CoupledProcessConfig(args.steps, args.p, args.k, args.variant,
                                                args.seed), stride=args.stride)
        steps, loads = traj.steps, traj.loads
    else:
        initial = [int(x) for x in args.initial.split(",")] if args.initial else None
        traj = run_urn(args.k, args.gamma, initial, args.steps, args.seed, stride=args.stride)
        steps, loads = traj.steps, traj.loads
    with _open_out(args.out) as fh:
        write_trajectory_csv(steps, loads, fh)


def _jsonable(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def cmd_calc(args):
    inputs = {k: v for k, v in vars(args).items()
              if k not in ("func", "command", "calc", "verbose")}
    name = args.calc
    if name == "no-edge":
        out = {"expected": analysis.expected_no_edge_arrivals(args.n),
               "exact": analysis.exact_no_edge_arrivals(args.n)}
    elif name == "lemma2":
        out = {"exact": analysis.lemma2_exact_prob(args.j, args.delta),
               "tie_excluded": analysis.lemma2_tie_excluded(args.j, args.delta),
               "lower_bound": analysis.lemma2_lower_bound(args.j, args.delta)}
    elif name == "regime":
        out = analysis.regime_check(args.n, args.k, args.l, args.p, args.q, args.n0).as_dict()
    elif name == "balls":
        params = analysis.ConvergenceParams(args.lam, args.epsilon0, args.delta, args.n0,
                                            args.k, args.l)
        x, z = analysis.dominance_exponents(params)
        out = {"x": x, "z": z,
               "balls": analysis.convergence_balls(params, "general"),
               "specialized_balls": analysis.convergence_balls(params, "specialized")}
    elif name == "convert":
        out = {"value": analysis.gamma_delta_convert(args.value, args.k, args.direction)}
    elif name == "qbound":
        out = {"q": analysis.appendix_q_bound(args.k, args.l, args.n0),
               "n0_effective": analysis.effective_n0(args.n0, args.k, args.l)}
    elif name == "thresholds":
        t_good, t_bad = analysis.appendix_t_thresholds(args.n, args.k, args.p, args.q, args.l,
                                                       args.cluster_size, args.delta)
        out = {"t_good": t_good, "t_bad": t_bad, "feasible": t_good < t_bad}
    elif name == "separation":
        try:
            out = {"x": analysis.appendix_x_separation(args.p, args.q, args.l)}
        except analysis.SeparationVacuous as exc:
            out = {"x": None, "vacuous": True, "reason": str(exc)}
    elif name == "maxload":
        pred = analysis.max_load_prediction(args.balls, args.k)
        out = {"max_load": pred.value, "regime": pred.regime}
    else:
        lb = lower_bound_demo(args.n, args.runs, args.seed)
        out = lb.as_dict()
    print(json.dumps(_jsonable({"calculator": name, "inputs": inputs, "result": out}),
                     indent=2))


def cmd_experiment(args):
    if args.spec:
        with open(args.spec) as fh:
            spec = parse_spec(fh.read())
    elif args.preset:
        spec = preset(args.preset)
    else:
        raise SpecError("give --preset or --spec")
    if args.seed is not None:
        spec.master_seed = args.seed
    if args.runs is not None:
        spec.runs_per_cell = args.runs
    if args.out:
        spec.output = args.out
    result = run_experiment(spec, jobs=args.jobs)
    if not spec.output:
        sys.stdout.write(result.to_csv())
    else:
        print(f"wrote {len(result.records)} rows to {spec.output}", file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(prog="streampart",
                                     description="streaming balanced graph partitioning")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph as an edge list")
    p.add_argument("--model", choices=("gnp", "planted", "cycle"), default="gnp")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("partition", help="stream an edge-list graph through a partitioner")
    p.add_argument("--graph", required=True)
    p.add_argument("--algorithm", default="argmax_greedy",
                   choices=sorted(KINDS + tuple(ALIASES)))
    p.add_argument("-k", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--order", choices=("random", "adversarial"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("urn", help="simulate a Polya urn or a coupled process")
    p.add_argument("-k", type=int, default=2)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--initial", help="comma-separated initial loads")
    p.add_argument("--coupled", action="store_true")
    p.add_argument("--p", type=float, default=0.01)
    p.add_argument("--variant", choices=("argmax", "proportional"), default="argmax")
    p.add_argument("--stride", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_urn)

    p = sub.add_parser("calc", help="closed-form calculators (JSON output)")
    calc = p.add_subparsers(dest="calc", required=True)
    c = calc.add_parser("no-edge")
    c.add_argument("-n", type=int, required=True)
    c = calc.add_parser("lemma2")
    c.add_argument("-j", type=int, required=True)
    c.add_argument("--delta", type=float, required=True)
    c = calc.add_parser("regime")
    for flag, typ in (("-n", int), ("-k", int), ("-l", int), ("--p", float), ("--q", float)):
        c.add_argument(flag, type=typ, required=True)
    c.add_argument("--n0", type=float, default=1.0)
    c = calc.add_parser("balls")
    c.add_argument("--lam", type=float, default=2.0)
    c.add_argument("--epsilon0", type=float, default=0.1)
    c.add_argument("--delta", type=float, default=0.1)
    c.add_argument("--n0", type=float, default=1.0)
    c.add_argument("-k", type=int, default=2)
    c.add_argument("-l", type=int, default=1)
    c = calc.add_parser("convert")
    c.add_argument("--value", type=float, required=True)
    c.add_argument("-k", type=int, required=True)
    c.add_argument("--direction", choices=("delta_to_gamma", "gamma_to_delta"),
                   default="delta_to_gamma")
    c = calc.add_parser("qbound")
    c.add_argument("-k", type=int, required=True)
    c.add_argument("-l", type=int, required=True)
    c.add_argument("--n0", type=float, default=1.0)
    c = calc.add_parser("thresholds")
    for flag, typ in (("-n", int), ("-k", int), ("-l", int), ("--p", float), ("--q", float),
                      ("--cluster-size", int)):
        c.add_argument(flag, type=typ, required=True)
    c.add_argument("--delta", type=float, default=1 / math.e)
    c = calc.add_parser("separation")
    c.add_argument("--p", type=float, required=True)
    c.add_argument("--q", type=float, required=True)
    c.add_argument("-l", type=int, required=True)
    c = calc.add_parser("maxload")
    c.add_argument("--balls", type=int, required=True)
    c.add_argument("-k", type=int, required=True)
    c = calc.add_parser("lower-bound")
    c.add_argument("-n", type=int, required=True)
    c.add_argument("--runs", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calc)

    p = sub.add_parser("experiment", help="run a preset or spec-file experiment")
    p.add_argument("--preset")
    p.add_argument("--spec", help="key=value spec file")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--runs", type=int, help="override runs per cell")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (SpecError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except Exception as exc:  # noqa: BLE001
        print(f"fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
