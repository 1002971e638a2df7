import io
import math

import numpy as np
import pytest
from scipy import stats

from streampart import CoupledProcessConfig, UrnState, dominance, run_coupled, run_urn, urn_step
from streampart.seeding import make_rng
from streampart.urn import (final_fractions, initial_state, step_probabilities,
                            write_trajectory_csv)

from conftest import within_sigma


def test_step_probabilities_examples():
    for gamma in (0.0, 0.5, 1.0, 3.0):
        assert step_probabilities(UrnState((1, 1), gamma)).tolist() == [0.5, 0.5]
    assert step_probabilities(UrnState((3, 1), 1.0)).tolist() == [0.75, 0.25]
    assert step_probabilities(UrnState((3, 1), 2.0)).tolist() == pytest.approx([0.9, 0.1])


def test_empty_bins_rejected():
    with pytest.raises(ValueError):
        step_probabilities(UrnState((0, 0), 1.0))
    with pytest.raises(ValueError):
        UrnState((-1, 2), 1.0)
    with pytest.raises(ValueError):
        initial_state(3, 1.0, (1, 1))


def test_urn_step_empirical_probability():
    rng = make_rng(1)
    state = UrnState((3, 1), 2.0)
    hits = sum(urn_step(state, rng).loads[0] == 4 for _ in range(10000))
    assert within_sigma(hits, 9000, math.sqrt(10000 * 0.09))


def test_run_urn_matches_stepwise_reference():
    for k, gamma, init in ((2, 1.0, None), (3, 2.0, (2, 1, 5)), (4, 0.5, None)):
        traj = run_urn(k, gamma, init, steps=500, seed=123, stride=1, record_choices=True)
        rng = make_rng(123)
        state = initial_state(k, gamma, init)
        for t in range(500):
            state = urn_step(state, rng)
            assert tuple(traj.loads[t + 1]) == state.loads
        assert traj.final.loads == state.loads
        assert traj.final.t == 500


def test_run_urn_trajectory_shape_and_conservation():
    traj = run_urn(3, 1.0, steps=1000, seed=0, stride=100)
    assert traj.steps.tolist() == list(range(0, 1001, 100))
    assert np.all(traj.loads.sum(axis=1) == 3 + traj.steps)
    short = run_urn(2, 1.0, steps=0, seed=0)
    assert short.final.loads == (1, 1)


def test_gamma_zero_is_uniform_placement():
    traj = run_urn(2, 0.0, steps=100_000, seed=7, stride=100_000)
    frac = np.asarray(traj.final.loads[0] - 1) / 100_000
    assert within_sigma(frac, 0.5, math.sqrt(0.25 / 100_000))


def test_restricted_pair_behaves_like_two_bin_urn():
    # among steps landing in bins {1, 2} of a 3-bin urn, bin 1 is chosen with
    # probability m1^g / (m1^g + m2^g) given the current loads
    gamma = 1.5
    z_num, z_var = 0.0, 0.0
    for seed in range(40):
        traj = run_urn(3, gamma, (2, 3, 4), steps=2000, seed=seed, record_choices=True)
        choices = traj.choices
        loads = np.array([2, 3, 4], dtype=np.float64)
        for c in choices:
            if c in (0, 1):
                w0, w1 = loads[0] ** gamma, loads[1] ** gamma
                prob = w0 / (w0 + w1)
                z_num += (c == 0) - prob
                z_var += prob * (1 - prob)
            loads[c] += 1
    assert abs(z_num / math.sqrt(z_var)) < 4


def test_final_fractions_seeds_are_independent_of_run_count():
    a = final_fractions(2, 1.0, 200, 5, master_seed=9)
    b = final_fractions(2, 1.0, 200, 8, master_seed=9)
    assert np.array_equal(a, b[:5])


def test_polya_k2_final_fraction_is_uniform():
    fr = final_fractions(2, 1.0, 2000, 600, master_seed=3)[:, 0]
    assert stats.kstest(fr, "uniform").pvalue > 0.01


# --- coupled process ----------------------------------------------------------------

def test_coupled_p0_balances():
    for variant in ("argmax", "proportional"):
        traj = run_coupled(CoupledProcessConfig(10, 0.0, 2, variant, 4))
        assert traj.final_loads.tolist() == [5, 5]


def test_coupled_p1_argmax_takes_everything():
    # the second arrival sees exactly one edge (to the first) and joins it;
    # from then on E_i = m_i so the larger bin always wins
    for seed in range(10):
        traj = run_coupled(CoupledProcessConfig(200, 1.0, 2, "argmax", seed))
        assert sorted(traj.final_loads.tolist()) == [0, 200]


def test_coupled_assignment_matches_loads():
    traj = run_coupled(CoupledProcessConfig(500, 0.02, 3, "proportional", 2), stride=50)
    counts = np.bincount(traj.assignment, minlength=4)[1:]
    assert counts.tolist() == traj.final_loads.tolist()
    assert traj.steps[-1] == 500


def test_coupled_is_deterministic():
    cfg = CoupledProcessConfig(1000, 0.01, 4, "argmax", 77)
    assert np.array_equal(run_coupled(cfg).assignment, run_coupled(cfg).assignment)


def test_coupled_config_validation():
    with pytest.raises(ValueError):
        CoupledProcessConfig(10, 1.5)
    with pytest.raises(ValueError):
        CoupledProcessConfig(10, 0.1, variant="median")
    with pytest.raises(ValueError):
        CoupledProcessConfig(10, 0.1, k=1)


@pytest.mark.slow
def test_coupled_argmax_concentrates_k2():
    fracs = [run_coupled(CoupledProcessConfig(20000, 0.05, 2, "argmax", s)).final_loads.max()
             / 20000 for s in range(200)]
    assert np.median(fracs) >= 0.9


def test_coupled_proportional_does_not_concentrate():
    fracs = [run_coupled(CoupledProcessConfig(4000, 0.05, 2, "proportional", s)).final_loads.max()
             / 4000 for s in range(60)]
    assert np.median(fracs) < 0.9


# --- dominance ----------------------------------------------------------------------

def test_dominance_examples():
    r = dominance(UrnState((10, 0, 0), 1.0))
    assert (r.dominant_bin, r.fraction, r.delta) == (1, 1.0, 0.0)
    r = dominance([5, 5])
    assert (r.dominant_bin, r.fraction, r.delta) == (1, 0.5, 0.5)
    r = dominance(np.array([90, 7, 3]))
    assert r.dominant_bin == 1
    assert r.fraction == pytest.approx(0.9) and r.delta == pytest.approx(0.1)
    assert dominance([1, 3, 3]).dominant_bin == 2
    with pytest.raises(ValueError):
        dominance([0, 0])


def test_trajectory_csv():
    buf = io.StringIO()
    write_trajectory_csv([0, 5], [[1, 1], [4, 3]], buf)
    assert buf.getvalue() == "step,load_1,load_2\n0,1,1\n5,4,3\n"
