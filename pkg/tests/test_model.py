import math
from itertools import permutations

import numpy as np
import pytest
from scipy import stats

from eplbayes.model import (
    Dataset,
    complete_data_log_lik,
    delta_indicator,
    delta_matrix,
    epl_log_prob,
    observed_data_log_lik,
    pl_log_prob,
    sample_epl_ordering,
    sample_epl_orderings,
    sample_pl_prefix,
)
from eplbayes.perm import enumerate_constrained_space, random_reference_order


def epl_prob_oracle(o, rho, p):
    # literal stagewise product, no vectorisation
    k = len(o)
    eta = [o[rho[t] - 1] for t in range(k)]
    prob = 1.0
    for t in range(k):
        prob *= p[eta[t] - 1] / sum(p[eta[v] - 1] for v in range(t, k))
    return prob


def test_uniform_support_gives_uniform_orderings():
    for o in permutations((1, 2, 3)):
        assert epl_log_prob(o, (1, 2, 3), [1, 1, 1]) == pytest.approx(math.log(1 / 6))


def test_stagewise_example():
    assert epl_log_prob((1, 2, 3), (3, 1, 2), [2, 1, 1]) == pytest.approx(math.log(1 / 6))


def test_pl_examples():
    assert pl_log_prob((1, 2), [3, 1]) == pytest.approx(math.log(3 / 4))
    assert pl_log_prob((4, 2, 1, 3), [2.5] * 4) == pytest.approx(-math.log(24))


def test_pl_is_forward_epl(rng):
    for _ in range(20):
        k = int(rng.integers(2, 7))
        o = tuple(rng.permutation(k) + 1)
        p = rng.uniform(0.1, 2, size=k)
        assert pl_log_prob(o, p) == pytest.approx(epl_log_prob(o, tuple(range(1, k + 1)), p), abs=1e-12)


def test_epl_matches_oracle(rng):
    for _ in range(50):
        k = int(rng.integers(2, 7))
        o = tuple(rng.permutation(k) + 1)
        rho = random_reference_order(k, rng)
        p = rng.gamma(1.0, size=k) + 1e-3
        assert math.exp(epl_log_prob(o, rho, p)) == pytest.approx(epl_prob_oracle(o, rho, p), rel=1e-10)


def test_extreme_weights_stay_finite():
    lp = epl_log_prob((1, 2, 3), (1, 2, 3), [1e-300, 1.0, 1e300])
    assert np.isfinite(lp)
    # stage 1: 1e-300 / 1e300, stage 2: 1 / 1e300
    assert lp == pytest.approx(math.log(1e-300) - 2 * math.log(1e300), rel=1e-9)


def test_bad_support_rejected():
    with pytest.raises(ValueError):
        epl_log_prob((1, 2), (1, 2), [1, 0])
    with pytest.raises(ValueError):
        epl_log_prob((1, 2), (1, 2), [1, 2, 3])


def test_prefix_sampler(rng):
    draws = [sample_pl_prefix([9, 1], 1, rng)[0] for _ in range(10000)]
    frac = np.mean(np.array(draws) == 1)
    assert abs(frac - 0.9) < 4 * math.sqrt(0.09 / 10000)
    full = [sample_pl_prefix([1, 1, 1], 3, rng) for _ in range(60000)]
    counts = np.array([full.count(o) for o in permutations((1, 2, 3))])
    assert stats.chisquare(counts).pvalue > 0.05
    with pytest.raises(ValueError):
        sample_pl_prefix([1, 1], 3, rng)


def test_prefix_sampler_deterministic():
    a = [sample_pl_prefix([1, 2, 3, 4], 3, np.random.default_rng(5)) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_epl_sampler_frequency(rng):
    draws = sample_epl_orderings((3, 1, 2), [2, 1, 1], 120000, rng)
    frac = np.mean(np.all(draws == [1, 2, 3], axis=1))
    assert abs(frac - 1 / 6) < 0.005


def test_epl_sampler_chi_square_all_orderings(rng):
    rho, p = (4, 1, 2, 3), np.array([0.5, 1.0, 2.0, 0.25])
    draws = sample_epl_orderings(rho, p, 48000, rng)
    perms = list(permutations(range(1, 5)))
    index = {o: j for j, o in enumerate(perms)}
    counts = np.bincount([index[tuple(r)] for r in draws.tolist()], minlength=24)
    expected = np.array([epl_prob_oracle(o, rho, p) for o in perms]) * 48000
    assert stats.chisquare(counts, expected).pvalue > 0.01


def test_k2_symmetric(rng):
    draws = sample_epl_orderings((2, 1), [1, 1], 20000, rng)
    assert abs(np.mean(draws[:, 0] == 1) - 0.5) < 0.015


def test_sampler_deterministic():
    a = sample_epl_ordering((5, 1, 4, 3, 2), [1, 2, 3, 4, 5], np.random.default_rng(1))
    b = sample_epl_ordering((5, 1, 4, 3, 2), [1, 2, 3, 4, 5], np.random.default_rng(1))
    assert a == b


def test_dataset_validation():
    d = Dataset(np.array([[1, 2, 3], [2, 3, 1]]))
    assert d.N == 2 and d.K == 3 and len(d) == 2
    with pytest.raises(ValueError, match="row 2"):
        Dataset(np.array([[1, 2, 3], [1, 2, 2]]))
    with pytest.raises(ValueError):
        Dataset(np.empty((0, 3), dtype=int))
    assert Dataset.from_rankings([[2, 3, 1]]).orderings.tolist() == [[3, 1, 2]]


def test_rank_pair_counts_direct():
    d = Dataset(np.array([[1, 2, 3], [2, 1, 3], [1, 2, 3]]))
    pairs = d.rank_pair_counts
    assert pairs[0, 1, 0, 1] == 2  # item 1 first and item 2 second
    assert pairs[0, 1, 1, 0] == 1
    assert pairs.sum() == 3 * 9


def test_delta_examples():
    d = Dataset(np.array([[1, 2, 3], [3, 2, 1]]))
    rho = (3, 1, 2)
    assert [delta_indicator(d, rho, 1, 2, i) for i in (1, 2, 3)] == [1, 1, 0]
    for s in (1, 2):
        assert all(delta_indicator(d, rho, s, 1, i) == 1 for i in (1, 2, 3))
        assert sum(delta_indicator(d, rho, s, 3, i) for i in (1, 2, 3)) == 1
    m = delta_matrix(d, rho)
    assert m.shape == (2, 3, 3)
    assert m.sum(axis=2).tolist() == [[3, 2, 1], [3, 2, 1]]
    with pytest.raises(IndexError):
        delta_indicator(d, rho, 3, 1, 1)


def test_complete_data_examples(rng):
    d = Dataset(np.array([list(rng.permutation(4) + 1) for _ in range(6)]))
    rho = (4, 1, 3, 2)
    p = rng.uniform(0.2, 2.0, size=4)
    assert complete_data_log_lik(d, rho, p, np.zeros((6, 4))) == pytest.approx(6 * np.log(p).sum())
    y = rng.exponential(size=(6, 4))
    assert complete_data_log_lik(d, rho, np.ones(4), y) == pytest.approx(-(y * np.array([4, 3, 2, 1])).sum())
    # direct triple sum with the delta matrix
    delta = delta_matrix(d, rho)
    direct = 6 * np.log(p).sum() - np.einsum("st,sti,i->", y, delta, p)
    assert complete_data_log_lik(d, rho, p, y) == pytest.approx(direct)
    perm = rng.permutation(6)
    assert complete_data_log_lik(Dataset(d.orderings[perm]), rho, p, y[perm]) == pytest.approx(
        complete_data_log_lik(d, rho, p, y))
    with pytest.raises(ValueError):
        complete_data_log_lik(d, rho, p, np.zeros((5, 4)))


def test_observed_examples(rng):
    rows = np.array([list(rng.permutation(5) + 1) for _ in range(7)])
    d = Dataset(rows)
    rho = (5, 1, 4, 3, 2)
    p = rng.uniform(0.1, 1, size=5)
    assert observed_data_log_lik(Dataset(rows[:1]), rho, p) == pytest.approx(epl_log_prob(rows[0], rho, p))
    doubled = Dataset(np.vstack([rows, rows]))
    assert observed_data_log_lik(doubled, rho, p) == pytest.approx(2 * observed_data_log_lik(d, rho, p))
    assert observed_data_log_lik(d, rho, 3.7 * p) == pytest.approx(observed_data_log_lik(d, rho, p), abs=1e-10)


@pytest.mark.parametrize("k", [3, 4])
def test_epl_sums_to_one_small(k, rng):
    for r in enumerate_constrained_space(k):
        p = rng.uniform(0.05, 1, size=k)
        total = sum(math.exp(epl_log_prob(o, r.rho, p)) for o in permutations(range(1, k + 1)))
        assert abs(total - 1) < 1e-12
