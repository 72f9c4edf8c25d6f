import math

import numpy as np
import pytest
from scipy import stats

from eplbayes import sampler as smp
from eplbayes.model import Dataset, sample_epl_orderings
from eplbayes.perm import enumerate_constrained_space, is_constrained
from eplbayes.sampler import (
    ChainConfig,
    ChainState,
    MCTables,
    eval_proposal_log_density,
    expected_frequency_table,
    expected_frequency_tables,
    floor_frequencies,
    gibbs_p_from_exposure,
    gibbs_step_p,
    gibbs_step_y,
    lambda_from_distances,
    propose_joint,
    run_chain,
    stage_lambda,
    swap_step,
    tjm_step,
    top_bottom_frequencies,
)


def uniform_data(k, n, rng):
    return Dataset(np.array([rng.permutation(k) + 1 for _ in range(n)]))


def test_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(iterations=10, burn_in=10)
    with pytest.raises(ValueError):
        ChainConfig(h=0.5)
    with pytest.raises(ValueError):
        ChainConfig(lambda1=1.0)
    with pytest.raises(ValueError):
        ChainConfig(swap_rule="other")
    assert ChainConfig().mc_size_for(37) == 37
    assert ChainConfig(mc_size=5).mc_size_for(37) == 5


def test_top_bottom_frequencies():
    d = Dataset(np.array([[1, 2, 3], [2, 1, 3]]))
    assert top_bottom_frequencies(d, 1).tolist() == [0.5, 0.5, 0.0]
    assert top_bottom_frequencies(d, 3).tolist() == [0.0, 0.0, 1.0]
    with pytest.raises(ValueError):
        top_bottom_frequencies(d, 2)
    floored = floor_frequencies(top_bottom_frequencies(d, 1), d.N)
    assert np.all(floored > 0) and floored.sum() == pytest.approx(1.0)


def test_expected_table_properties(rng):
    e = expected_frequency_table([1, 1, 1], 2, 60000, rng)
    assert e.sum() == 60000
    assert np.all(np.diag(e) == 0)
    off = e[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off - 10000) < 300)
    with pytest.raises(ValueError):
        expected_frequency_table([1, 1, 1], 3, 10, rng)


def test_expected_tables_match_pl_pair_probabilities(rng):
    p = np.array([4.0, 2.0, 1.0, 1.0])
    tables = expected_frequency_tables(p, 40000, rng)
    # stage 2 pair (i first, j second) has probability p_i/S * p_j/(S - p_i)
    s = p.sum()
    exact = np.array([[0 if i == j else p[i] / s * p[j] / (s - p[i]) for j in range(4)] for i in range(4)])
    got = tables.counts[1] / tables.size
    se = np.sqrt(exact * (1 - exact) / tables.size)
    assert np.all(np.abs(got - exact) <= 4 * se + 1e-12)


@pytest.mark.parametrize("d_top, d_bottom, expected", [(0.0, 5.0, 0.9), (2.0, 2.0, 0.5), (0.0, 0.0, 0.5), (3.0, 1.0, 0.3)])
def test_lambda_examples(d_top, d_bottom, expected):
    assert lambda_from_distances(d_top, d_bottom, 0.1) == pytest.approx(expected)


def test_stage_lambda_direct(rng):
    d = uniform_data(4, 30, rng)
    tables = expected_frequency_tables(np.ones(4), 30, rng)
    rho_prefix = (4,)  # stage 1 took the bottom rank, so ranks 1..3 remain
    pairs = np.zeros((2, 4, 4))
    for o in d.orderings:
        pairs[0, o[3] - 1, o[0] - 1] += 1  # previous rank 4, candidate top rank 1
        pairs[1, o[3] - 1, o[2] - 1] += 1  # candidate bottom rank 3
    e = tables.counts[1]
    d_top = ((pairs[0] - e) ** 2).sum()
    d_bottom = ((pairs[1] - e) ** 2).sum()
    assert stage_lambda(d, rho_prefix, 2, tables, 0.1) == pytest.approx(lambda_from_distances(d_top, d_bottom, 0.1))


def test_proposal_support(rng):
    d = uniform_data(5, 40, rng)
    cfg = ChainConfig()
    for _ in range(200):
        rho, p, trace = propose_joint(d, cfg, rng)
        assert is_constrained(rho)
        assert p.sum() == pytest.approx(1.0)
        lam = trace.lam[:-1]  # the final flag is forced, its entry is 1
        assert np.all((lam >= cfg.h) & (lam <= 1 - cfg.h)) and trace.lam[-1] == 1


def test_first_stage_frequency(rng):
    d = uniform_data(3, 30, rng)
    hits = sum(propose_joint(d, ChainConfig(), rng)[0][0] == 1 for _ in range(10000))
    assert abs(hits / 10000 - 0.5) < 4 * math.sqrt(0.25 / 10000)


def test_density_replay_and_scale(rng):
    d = uniform_data(5, 25, rng)
    cfg = ChainConfig()
    for _ in range(20):
        rho, p, trace = propose_joint(d, cfg, rng)
        replay = eval_proposal_log_density(d, rho, p, trace.tables, cfg)
        assert replay == pytest.approx(trace.log_density, abs=1e-9)
        assert eval_proposal_log_density(d, rho, 7.5 * p, trace.tables, cfg) == pytest.approx(replay, abs=1e-9)
    assert eval_proposal_log_density(d, rho, np.r_[0.0, p[1:]], trace.tables, cfg) == -math.inf


def test_bernoulli_chain_normalises(rng):
    d = uniform_data(3, 12, rng)
    cfg = ChainConfig()
    p = rng.dirichlet(np.ones(3))
    tables = expected_frequency_tables(p, 12, rng)
    total = 0.0
    for r in enumerate_constrained_space(3):
        rank = 1 if r.rho[0] == 1 else 3
        freq = np.bincount(d.orderings[:, rank - 1] - 1, minlength=3) / d.N
        freq = np.maximum(freq, 1 / (d.N * 3))
        alpha = cfg.alpha0 * freq / freq.sum()
        log_dir = stats.dirichlet.logpdf(p, alpha)
        total += math.exp(eval_proposal_log_density(d, r.rho, p, tables, cfg) - log_dir)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_tjm_identical_candidate_always_accepted(rng, monkeypatch):
    d = uniform_data(4, 20, rng)
    cfg = ChainConfig()
    rho, p = (4, 1, 3, 2), np.array([0.1, 0.2, 0.3, 0.4])
    fixed = MCTables(np.zeros((4, 4, 4)), 20)
    kern = smp._Kernel(d, cfg)
    rho0 = np.array(rho) - 1
    log_q = np.log(p)
    dens = smp._log_proposal_density_0(d, cfg, rho0, log_q, fixed, kern.alphas)

    def fake_propose(dataset, config, rng_, alphas):
        return rho0.copy(), smp.ProposalTrace(np.ones(4), (0, 1, 0, 1), dens, fixed, log_q)

    monkeypatch.setattr(smp, "_propose", fake_propose)
    monkeypatch.setattr(smp, "_expected_tables_0", lambda *a: fixed)
    for _ in range(50):
        out = tjm_step(ChainState(rho, p), d, cfg, rng)
        assert out.accepted
        assert out.log_alpha == pytest.approx(0.0, abs=1e-9)
        assert out.rho == rho


def test_tjm_deterministic_and_acceptance_in_unit_interval(rng):
    d = Dataset(sample_epl_orderings((3, 1, 2), [1.0, 0.6, 0.3], 50, rng))
    state = ChainState((1, 2, 3), np.array([0.3, 0.3, 0.4]))
    a = tjm_step(state, d, ChainConfig(), np.random.default_rng(9))
    b = tjm_step(state, d, ChainConfig(), np.random.default_rng(9))
    assert a.accepted == b.accepted and a.rho == b.rho and np.array_equal(a.p, b.p)
    chain = run_chain(d, ChainConfig(iterations=5000, burn_in=0, seed=1))
    assert 0 < chain.accept_tjm < 1
    assert 0 < chain.accept_swap < 1


def test_swap_moves(rng):
    d2 = uniform_data(2, 10, rng)
    cfg = ChainConfig()
    moved = {swap_step((1, 2), [1.0, 1.0], d2, cfg, None, rng) for _ in range(50)}
    # equal likelihoods: the swap to the other order is always accepted
    assert moved == {((2, 1), True)}
    d = uniform_data(5, 10, rng)
    for r in enumerate_constrained_space(5):
        for _ in range(5):
            new, accepted = swap_step(r.rho, rng.uniform(0.1, 1, 5), d, cfg, None, rng)
            assert is_constrained(new)
            assert (new != r.rho) == accepted


def test_proposal_ratio_rule_needs_tables(rng):
    d = uniform_data(3, 5, rng)
    with pytest.raises(ValueError):
        swap_step((1, 2, 3), [1, 1, 1], d, ChainConfig(swap_rule="proposal_ratio"), None, rng)


def test_gibbs_y_moments(rng):
    d = uniform_data(4, 3, rng)
    rho, p = (1, 4, 2, 3), np.ones(4)
    y = np.array([gibbs_step_y(d, rho, p, rng) for _ in range(10000)])
    # with p = 1 the stage-t rate is the number of free items, K - t + 1
    rates = np.array([4, 3, 2, 1])
    mean = y.mean(axis=0)
    se = (1 / rates) / math.sqrt(10000)
    assert np.all(np.abs(mean - 1 / rates) < 4 * se)
    p = np.array([0.5, 1.5, 2.0, 0.25])
    y1 = np.array([gibbs_step_y(d, rho, p, rng)[:, 0] for _ in range(10000)])
    assert abs(y1.mean() - 1 / p.sum()) < 4 * (1 / p.sum()) / math.sqrt(10000 * 3)


def test_gibbs_y_deterministic():
    d = Dataset(np.array([[1, 2, 3]]))
    a = gibbs_step_y(d, (1, 2, 3), [1, 2, 3], np.random.default_rng(4))
    b = gibbs_step_y(d, (1, 2, 3), [1, 2, 3], np.random.default_rng(4))
    assert np.array_equal(a, b)


def test_gibbs_p_conjugate_examples(rng):
    cfg = ChainConfig(c=1, d=1)
    d = Dataset(np.array([[1, 2], [1, 2]]))
    y = np.array([[1.5, 0.0], [1.5, 0.0]])  # exposure 3 for both items
    draws = np.array([gibbs_step_p(d, (1, 2), y, cfg, rng) for _ in range(10000)])
    sd = math.sqrt(3 / 16)
    assert np.all(np.abs(draws.mean(axis=0) - 0.75) < 4 * sd / 100)
    zero = np.array([gibbs_step_p(d, (1, 2), np.zeros((2, 2)), ChainConfig(c=2, d=0.5), rng) for _ in range(10000)])
    mean, sd = (2 + 2) / 0.5, math.sqrt(4) / 0.5
    assert np.all(np.abs(zero.mean(axis=0) - mean) < 4 * sd / 100)
    with pytest.raises(ValueError):
        gibbs_step_p(d, (1, 2), np.zeros((3, 2)), cfg, rng)


def test_gibbs_p_shape_shared_across_items():
    exposure = np.array([0.0, 0.0, 0.0])
    a = gibbs_p_from_exposure(exposure, 4, 1.0, 1.0, np.random.default_rng(2))
    b = np.random.default_rng(2).standard_gamma(5.0, size=3)
    assert np.array_equal(a, b)


def test_run_chain_shapes_and_determinism(rng):
    d = Dataset(sample_epl_orderings((5, 1, 4, 3, 2), [0.9, 0.5, 0.2, 0.7, 0.3], 60, rng))
    cfg = ChainConfig(iterations=300, burn_in=100, seed=11)
    a, b = run_chain(d, cfg), run_chain(d, cfg)
    assert len(a) == 200 and a.p.shape == (200, 5)
    assert a.iterations[0] == 101 and a.iterations[-1] == 300
    assert np.array_equal(a.rho_index, b.rho_index) and np.array_equal(a.p, b.p)
    assert np.array_equal(a.log_posterior, b.log_posterior)
    assert a.log_posterior[-1] == pytest.approx(smp.log_posterior(d, a.rho(199), a.p[-1], cfg))


def test_run_chain_respects_init(rng):
    d = uniform_data(3, 5, rng)
    init = ChainState((3, 2, 1), np.array([1.0, 1.0, 1.0]))
    chain = run_chain(d, ChainConfig(iterations=2, burn_in=0), init=init, rng=rng)
    assert len(chain) == 2


def test_k2_chain_roughly_symmetric():
    rng = np.random.default_rng(8)
    d = Dataset(sample_epl_orderings((1, 2), [0.7, 0.3], 30, rng))
    chain = run_chain(d, ChainConfig(iterations=4000, burn_in=500, seed=3))
    frac = np.mean(chain.rho_index == 0)
    assert abs(frac - 0.5) < 0.08
