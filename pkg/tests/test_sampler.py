import math

import numpy as np
import pytest

from degree_ldp import graphs as G
from degree_ldp import measures as M
from degree_ldp import sampler as S
from degree_ldp import tilted as T
from degree_ldp._kernels import flip_chain
from degree_ldp.errors import DomainError
from degree_ldp.measures import SparseMeasure


# --- Graph and ER sampling -------------------------------------------------


def test_graph_bookkeeping():
    g = S.Graph.from_edges(5, [(0, 1), (1, 2), (1, 2), (3, 4)])
    assert g.n_edges == 3 and g.edges == {(0, 1), (1, 2), (3, 4)}
    assert g.degrees.tolist() == [1, 2, 1, 1, 1]
    g.remove_edge(1, 2)
    g.remove_edge(1, 2)
    assert g.degrees.tolist() == [1, 1, 0, 1, 1]
    g.check()
    with pytest.raises(DomainError):
        g.add_edge(2, 2)


def test_graph_bitmask_matches_enumeration_order():
    g = S.Graph.from_edges(3, [(0, 2), (1, 2)])
    assert g.bitmask() == 0b110


def test_bad_adjacency_rejected():
    with pytest.raises(DomainError):
        S.Graph(2, [[0, 1], [0, 0]])
    with pytest.raises(DomainError):
        S.Graph(2, [[1, 0], [0, 0]])


def test_er_tiny_beta_is_empty():
    assert all(S.sample_er(50, 1e-9, seed=s).n_edges == 0 for s in range(20))


def test_er_mean_degree():
    means = np.array([2 * S.sample_er(1000, 2.0, seed=s).n_edges / 1000 for s in range(100)])
    se = means.std(ddof=1) / math.sqrt(means.size)
    assert abs(means.mean() - 2.0 * 999 / 1000) <= 3 * se


def test_er_single_pair_frequency():
    hits = np.array([S.sample_er(2, 1.0, seed=s).n_edges for s in range(4000)])
    se = math.sqrt(0.25 / hits.size)
    assert abs(hits.mean() - 0.5) <= 3 * se


def test_er_domain():
    with pytest.raises(DomainError):
        S.sample_er(5, 5.0)
    with pytest.raises(DomainError):
        S.sample_er(5, 0.0)


def test_er_seed_reproducible():
    assert S.sample_er(30, 2.0, seed=4).edges == S.sample_er(30, 2.0, seed=4).edges


# --- empirical degree distribution -----------------------------------------


def test_empirical_examples():
    assert S.empirical_degree_distribution(S.Graph(4)) == SparseMeasure.point_mass(0)
    tri = S.Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert S.empirical_degree_distribution(tri) == SparseMeasure.point_mass(2)
    path = S.Graph.from_edges(3, [(0, 1), (1, 2)])
    np.testing.assert_allclose(S.empirical_degree_distribution(path).weights, [0, 2 / 3, 1 / 3])


def test_empirical_mean_is_twice_edges_over_n():
    for s in range(20):
        g = S.sample_er(200, 3.0, seed=s)
        assert S.empirical_degree_distribution(g).mean == pytest.approx(2 * g.n_edges / g.n, abs=1e-12)


# --- Metropolis kernel -----------------------------------------------------


def _kernel_step(n, beta, f, edges, pick, u):
    g = S.Graph.from_edges(n, edges)
    iu, iv = np.triu_indices(n, 1)
    log_odds = math.log(beta / n) - math.log1p(-beta / n)
    ftab = f.table(n - 1, check=False).astype(float)
    acc, state, de = flip_chain(
        g.adj, g.degrees, ftab, log_odds, iu.astype(np.int64), iv.astype(np.int64),
        np.array([pick]), np.array([u]), np.int64(g.bitmask()), np.zeros(1, dtype=np.int64), False,
    )
    return acc, state, de, g


def test_add_edge_between_isolated_vertices_ratio():
    beta, n, gamma = 1.0, 4, math.log(0.5)
    ratio = (beta / n) / (1 - beta / n) * math.exp(2 * gamma)
    dist = G.graph_distribution(n, beta, T.penalty(gamma))
    assert dist[1] / dist[0] == pytest.approx(ratio, rel=1e-12)
    # the kernel accepts exactly when u < ratio
    assert _kernel_step(n, beta, T.penalty(gamma), [], 0, ratio * (1 - 1e-9))[0] == 1
    assert _kernel_step(n, beta, T.penalty(gamma), [], 0, ratio * (1 + 1e-9))[0] == 0


def test_kernel_deletion_is_reverse_move():
    beta, n, f = 1.0, 4, T.gwd(1.0, 2.0)
    dist = G.graph_distribution(n, beta, f)
    # remove pair 0 from the graph {(0,1),(1,2)}: target ratio is p(without)/p(with)
    with_mask, without_mask = 0b1001, 0b1000
    r = dist[without_mask] / dist[with_mask]
    assert r > 1  # deleting in a sparse model is favoured
    acc, state, de, g = _kernel_step(n, beta, f, [(0, 1), (1, 2)], 0, 0.999999)
    assert acc == 1 and state == without_mask and de == -1
    g.check()


def test_chain_bookkeeping_after_run():
    ch = S._Chain(60, 2.0, T.gwd(1, 2), np.random.default_rng(0))
    ch.sweeps(20)
    g = S.Graph(60, ch.adj)
    assert np.array_equal(g.degrees, ch.deg)
    assert ch.edges == g.n_edges
    assert ch.measure() @ np.arange(60) == pytest.approx(2 * ch.edges / 60)


@pytest.mark.parametrize("name, f", [("zero", T.zero()), ("penalty", T.penalty(math.log(0.5))), ("gwd", T.gwd(1.0, 2.0))])
def test_chain_matches_exact_distribution(name, f):
    freq = S.chain_state_frequencies(4, 1.0, f, 10_000_000, seed=77)
    assert S.total_variation(freq, G.graph_distribution(4, 1.0, f)) <= 0.02


def test_chain_tracks_state_beyond_six_rejected():
    with pytest.raises(DomainError):
        S.chain_state_frequencies(7, 1.0, T.zero(), 10)


# --- mcmc_run --------------------------------------------------------------


def test_zero_statistic_edge_count():
    n, beta = 60, 2.0
    cfg = S.ChainConfig(n, beta, T.zero(), burn_in=50, samples=40, thin=5, seed=3)
    parts = S.run_chains(cfg, 20)
    means = np.array([p.mean_edges for p in parts])
    se = means.std(ddof=1) / math.sqrt(means.size)
    assert abs(means.mean() - n * (n - 1) / 2 * beta / n) <= 3 * se


def test_summary_fields_and_trace():
    cfg = S.ChainConfig(40, 1.5, T.penalty(-0.5), burn_in=10, samples=7, thin=3, seed=5)
    pred = T.tilted_measure(T.solve_J(cfg.statistic, 1.5).thetas[0], cfg.statistic).measure
    trace = []
    s = S.mcmc_run(cfg, pred, trace)
    assert 0 <= s.acceptance_rate <= 1
    assert s.samples == 7 and len(trace) == 7 and len(s.sample_distances) == 7
    assert [t[0] for t in trace] == [10 + 3 * k for k in range(1, 8)]
    assert s.distance_to_prediction == pytest.approx(M.metric_d(s.mean_empirical_measure, pred), abs=1e-12)
    assert math.fsum(s.mean_empirical_measure.weights) == pytest.approx(1.0, abs=1e-12)
    assert set(S.SampleSummary.to_record(s)) >= {"mean_empirical_measure", "distance_to_prediction", "mean_edges", "acceptance_rate"}


def test_seed_determinism():
    cfg = S.ChainConfig(50, 2.0, T.gwd(1, 2), burn_in=20, samples=10, thin=2, seed=123)
    a, b = S.mcmc_run(cfg), S.mcmc_run(cfg)
    assert a.to_json() == b.to_json()
    other = S.mcmc_run(S.ChainConfig(50, 2.0, T.gwd(1, 2), burn_in=20, samples=10, thin=2, seed=124))
    assert other.to_json() != a.to_json()


def test_chain_streams_independent_of_chain_count():
    cfg = S.ChainConfig(30, 1.0, T.zero(), burn_in=5, samples=3, thin=1, seed=9)
    three = S.run_chains(cfg, 3)
    five = S.run_chains(cfg, 5)
    assert [p.to_json() for p in three] == [p.to_json() for p in five[:3]]
    merged = S.merge_summaries(three)
    assert merged.samples == 9
    np.testing.assert_allclose(
        merged.mean_empirical_measure.padded(30),
        np.mean([p.mean_empirical_measure.padded(30) for p in three], axis=0),
        atol=1e-12,
    )


def test_chain_config_validation():
    with pytest.raises(DomainError):
        S.ChainConfig(5, 5.0, T.zero())
    with pytest.raises(DomainError):
        S.ChainConfig(5, 1.0, T.zero(), samples=0)


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv(S.SEED_ENV, "42")
    assert S.default_seed() == 42
    assert S.ChainConfig(5, 1.0, T.zero()).seed == 42


def test_degenerate_statistic_still_runs():
    cfg = S.ChainConfig(30, 1.0, T.kstar(2, 1.0), burn_in=20, samples=5, thin=2, seed=1)
    s = S.mcmc_run(cfg)
    assert s.distance_to_prediction is None and s.mean_edges > 30 * 1.0 / 2


# --- importance sampling ---------------------------------------------------


def test_is_zero_statistic_exact():
    assert S.estimate_log_partition(6, 1.0, T.zero(), 1000, seed=0) == (0.0, 0.0)


@pytest.mark.parametrize("f", [T.penalty(math.log(0.5)), T.kstar(2, -1.0), T.gwd(1.0, 2.0)])
def test_is_matches_oracle(f):
    est, se = S.estimate_log_partition(6, 1.0, f, 1_000_000, seed=31)
    assert abs(est - G.exact_log_partition(6, 1.0, f)) <= 3 * se


def test_is_error_shrinks_with_samples():
    f = T.penalty(math.log(0.5))
    _, se_small = S.estimate_log_partition(6, 1.0, f, 10_000, seed=1)
    _, se_big = S.estimate_log_partition(6, 1.0, f, 1_000_000, seed=1)
    assert se_big == pytest.approx(se_small / 10, rel=0.1)


def test_is_warns_on_superlinear():
    with pytest.warns(RuntimeWarning):
        S.estimate_log_partition(5, 1.0, T.kstar(2, 1.0), 100, seed=0)


# --- concentration ---------------------------------------------------------


def test_concentration_zero_statistic():
    sol = T.solve_J(T.zero(), 2.0)
    cfg = S.ChainConfig(500, 2.0, T.zero(), burn_in=20, samples=20, thin=2, seed=8)
    res = S.concentration_check(cfg, sol)
    assert res.distance < 0.5
    assert res.theta == pytest.approx(2.0)
    assert len(res.sample_distances) == 20
    assert "engineering" in res.note


def test_concentration_gwd_moves_off_poisson():
    f = T.gwd(1.0, 2.0)
    sol = T.solve_J(f, 2.0)
    cfg = S.ChainConfig(500, 2.0, f, burn_in=30, samples=20, thin=2, seed=8)
    res = S.concentration_check(cfg, sol, chains=4)
    mu = S.merge_summaries(S.run_chains(cfg, 4)).mean_empirical_measure
    assert res.distance < M.metric_d(mu, M.poisson_measure(2.0))


def test_concentration_rejects_degenerate():
    sol = T.VariationalSolution("x", 1.0, math.nan, (), degenerate=True)
    with pytest.raises(DomainError):
        S.concentration_check(S.ChainConfig(10, 1.0, T.zero()), sol)
