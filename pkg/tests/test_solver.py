import json

import numpy as np
import pytest

from dynppr.errors import (BudgetExceededError, OracleSizeError, ParseError,
                           ValidationError)
from dynppr.gallery import random_digraph
from dynppr.graph import Graph
from dynppr.solver import (DANGLING_UNIFORM, MAX_RESIDUAL, SolverConfig,
                           gauss_southwell, l1_error_bound, load_vector,
                           oracle_dense, power_iteration, ppr_from_scratch,
                           residual_of, save_vector)

ALPHA = 0.85


# -- configuration -------------------------------------------------------------


@pytest.mark.parametrize("kwargs", [
    dict(alpha=0.0), dict(alpha=1.0), dict(alpha=-0.2),
    dict(epsilon=0.0), dict(epsilon=-1e-9),
    dict(max_pushes=0), dict(max_pushes=-5),
    dict(selection="greedy"), dict(dangling="teleport"),
])
def test_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        SolverConfig(**kwargs)


def test_run_validation(chain2):
    cfg = SolverConfig()
    with pytest.raises(ValidationError):
        ppr_from_scratch(chain2, 2, cfg)
    with pytest.raises(ValidationError):
        gauss_southwell(chain2, 0, np.zeros(3), np.zeros(3), cfg)
    with pytest.raises(ValidationError):
        ppr_from_scratch(Graph.from_edges([], []), 0, cfg)


# -- known closed forms ----------------------------------------------------------


def test_two_node_chain_closed_form(chain2):
    """0 -> 1, node 1 dangling (mass returns to the source).

    pi_0 = (1-a)/(1-a^2) and pi_1 = a*pi_0, i.e. [1/1.85, 0.85/1.85] at
    a = 0.85.
    """
    pi, r, stats = ppr_from_scratch(chain2, 0, SolverConfig(epsilon=1e-14))
    assert pi[0] == pytest.approx(1.0 / 1.85, abs=1e-12)
    assert pi[1] == pytest.approx(0.85 / 1.85, abs=1e-12)
    assert np.abs(r).max() <= 1e-14
    assert stats.initial_residual_l1 == 1.0 - ALPHA


def test_self_loop_absorbs_everything():
    g = Graph.from_edges([0, 1], [0, 0])
    pi, _, _ = ppr_from_scratch(g, 0, SolverConfig(epsilon=1e-13))
    assert pi[0] == pytest.approx(1.0, abs=1e-11)
    assert pi[1] == 0.0


def test_oracle_matches_power_iteration(chain2):
    # egocentric system, source-dangling patch: two independent routes
    want = power_iteration(chain2, 0, ALPHA, tol=1e-15)
    got = oracle_dense(chain2, 0, ALPHA)
    assert np.abs(got - want).max() <= 1e-12


def test_uniform_dangling_solver_matches_oracle(chain2):
    # uniform patch changes the answer on a graph with a dangling node,
    # and the pushed vector still lands on the dense solve
    cfg = SolverConfig(epsilon=1e-13, dangling=DANGLING_UNIFORM)
    pi, r, _ = ppr_from_scratch(chain2, 0, cfg)
    want = oracle_dense(chain2, 0, ALPHA, dangling=DANGLING_UNIFORM)
    assert np.abs(pi - want).max() <= 1e-11
    plain = oracle_dense(chain2, 0, ALPHA)
    assert np.abs(want - plain).max() > 1e-3  # genuinely different system


def test_oracle_size_cap():
    g = random_digraph(40, 2.0, seed=0)
    with pytest.raises(OracleSizeError):
        oracle_dense(g, 0, ALPHA, cap=39)


# -- engines agree ----------------------------------------------------------------


def _twin_run(g, s, cfg):
    """Same solve through the kernel and the python twin engine."""
    pi_k, r_k, st_k = ppr_from_scratch(g, s, cfg)
    seen = []
    pi_p, r_p, st_p = ppr_from_scratch(g, s, cfg, observer=lambda *a: seen.append(a[0]),
                                       observe_every=97)
    return (pi_k, r_k, st_k), (pi_p, r_p, st_p), seen


@pytest.mark.parametrize("dangling", ["source", DANGLING_UNIFORM])
def test_kernel_matches_python_twin_bitwise(dangling):
    rng = np.random.default_rng(21)
    for _ in range(12):
        g = random_digraph(int(rng.integers(5, 150)), 4.0, seed=rng)
        s = int(rng.integers(g.node_count))
        cfg = SolverConfig(epsilon=1e-7, dangling=dangling)
        (pi_k, r_k, st_k), (pi_p, r_p, st_p), seen = _twin_run(g, s, cfg)
        assert np.array_equal(pi_k, pi_p)  # bitwise, not approx
        assert np.array_equal(r_k, r_p)
        assert st_k.pushes == st_p.pushes
        assert st_k.touched_nodes == st_p.touched_nodes
        # observer fired on the agreed cadence plus once at the end
        assert seen[-1] == st_p.pushes
        assert all(p % 97 == 0 for p in seen[:-1])


def test_max_residual_engine_converges():
    rng = np.random.default_rng(8)
    for _ in range(8):
        g = random_digraph(int(rng.integers(10, 120)), 5.0, seed=rng)
        s = int(rng.integers(g.node_count))
        cfg = SolverConfig(epsilon=1e-7, selection=MAX_RESIDUAL)
        pi, r, stats = ppr_from_scratch(g, s, cfg)
        assert np.abs(r).max() <= cfg.epsilon
        err = np.abs(pi - oracle_dense(g, s, ALPHA)).sum()
        assert err <= l1_error_bound(r, ALPHA) + 1e-12
        assert stats.pushes > 0


def test_residual_identity_after_convergence():
    g = random_digraph(80, 4.0, seed=13)
    pi, r, _ = ppr_from_scratch(g, 3, SolverConfig(epsilon=1e-9))
    assert np.abs(residual_of(g, 3, pi, ALPHA) - r).max() <= 1e-13


def test_mass_conservation():
    """pi + correction sums to 1: |1 - sum(pi) - ||r||_1/(1-a)| stays tiny."""
    rng = np.random.default_rng(31)
    for _ in range(6):
        g = random_digraph(int(rng.integers(10, 100)), 4.0, seed=rng)
        s = int(rng.integers(g.node_count))
        pi, r, _ = ppr_from_scratch(g, s, SolverConfig(epsilon=1e-8))
        total = pi.sum() + r.sum() / (1.0 - ALPHA)
        assert total == pytest.approx(1.0, abs=1e-10)


# -- budgets ------------------------------------------------------------------


def test_budget_exceeded_carries_partial_state():
    g = random_digraph(200, 5.0, seed=2)
    cfg = SolverConfig(epsilon=1e-10, max_pushes=25)
    with pytest.raises(BudgetExceededError) as ei:
        ppr_from_scratch(g, 0, cfg)
    err = ei.value
    assert err.stats.pushes == 25
    assert err.pi.shape == (200,)
    assert float(np.abs(err.r).max()) > cfg.epsilon
    # the partial state is a valid warm start: finishing from it lands
    # within the summed error bounds of the uninterrupted solve
    pi, r, _ = gauss_southwell(g, 0, err.pi, err.r,
                               SolverConfig(epsilon=1e-10))
    full, r_full, _ = ppr_from_scratch(g, 0, SolverConfig(epsilon=1e-10))
    gap = np.abs(pi - full).sum()
    assert gap <= l1_error_bound(r, ALPHA) + l1_error_bound(r_full, ALPHA) + 1e-12


def test_budget_exceeded_in_python_twin():
    g = random_digraph(200, 5.0, seed=2)
    cfg = SolverConfig(epsilon=1e-10, max_pushes=25)
    with pytest.raises(BudgetExceededError) as ei:
        ppr_from_scratch(g, 0, cfg, observer=lambda *a: None)
    assert ei.value.stats.pushes == 25


def test_budget_identical_partial_state_kernel_vs_twin():
    g = random_digraph(150, 4.0, seed=9)
    cfg = SolverConfig(epsilon=1e-10, max_pushes=40)
    states = []
    for observer in (None, lambda *a: None):
        try:
            ppr_from_scratch(g, 0, cfg, observer=observer)
        except BudgetExceededError as err:
            states.append((err.pi, err.r))
    (pa, ra), (pb, rb) = states
    assert np.array_equal(pa, pb)
    assert np.array_equal(ra, rb)


# -- stats and serialization ----------------------------------------------------


def test_stats_json_fields(diamond):
    _, _, stats = ppr_from_scratch(diamond, 0, SolverConfig())
    payload = json.loads(stats.to_json())
    assert sorted(payload) == ["final_residual_l1", "initial_residual_l1",
                               "pushes", "touched_nodes", "wall_time_s"]
    assert payload["pushes"] >= 0
    assert payload["final_residual_l1"] <= payload["initial_residual_l1"]


def test_vector_round_trip(tmp_path):
    vec = np.zeros(10)
    vec[7] = 0.1 + 0.2  # not exactly representable in decimal
    vec[2] = -3e-17
    p = tmp_path / "vec.txt"
    save_vector(p, vec)
    back = load_vector(p, 10)
    assert np.array_equal(back, vec)  # %.17g keeps every bit
    lines = p.read_text().splitlines()
    assert lines[0].startswith("2 ") and lines[1].startswith("7 ")


@pytest.mark.parametrize("text", ["7\n", "1 2 3\n", "x 0.5\n", "3 zz\n", "99 0.5\n"])
def test_load_vector_errors(tmp_path, text):
    p = tmp_path / "vec.txt"
    p.write_text(text)
    with pytest.raises(ParseError):
        load_vector(p, 10)


def test_l1_error_bound_value():
    r = np.array([0.01, -0.02, 0.0])
    assert l1_error_bound(r, 0.85) == pytest.approx(0.03 / 0.15)
