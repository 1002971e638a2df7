"""Streaming balanced graph partitioning: generators, greedy partitioners,
Polya urn processes, analytic bounds and a reproducible experiment harness."""

from .graph_model import (Graph, PlantedParams, StreamEvent, StreamOrder,
                          adversarial_cycle_order, generate_cycle, generate_gnp,
                          generate_planted, random_order, read_edgelist, stream_events,
                          write_edgelist)
from .metrics import (RunMetrics, compute_metrics, edges_cut, euclidean_error,
                      full_partition_fraction, recovery_vector)
from .partitioners import (CapacityError, PartitionerConfig, PartitionState,
                           compute_scores, place_vertex, random_baseline, run_partitioner)
from .seeding import RNG_ALGORITHM, derive_seed, make_rng
from .urn import (CoupledProcessConfig, UrnState, dominance, run_coupled, run_urn,
                  urn_step)

__version__ = "0.1.0"
