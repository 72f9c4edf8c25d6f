import math

import numpy as np
import pytest
from scipy import stats

from eplbayes.experiments import (
    PRESETS,
    aggregate,
    exact_rho_posterior_oracle,
    oracle_check,
    recovery_experiment,
    ReplicationRecord,
    simulate_dataset,
)
from eplbayes.model import Dataset, epl_log_prob, sample_epl_orderings
from eplbayes.perm import ReferenceOrder, enumerate_constrained_space
from eplbayes.sampler import ChainConfig


def test_simulate_dataset(rng):
    data, rho, p = simulate_dataset(5, 30, rng)
    assert data.N == 30 and data.K == 5
    assert np.all((p > 0) & (p < 1))
    a = simulate_dataset(4, 10, np.random.default_rng(3))
    b = simulate_dataset(4, 10, np.random.default_rng(3))
    assert a[0] == b[0] and a[1] == b[1]


def test_simulated_rho_uniform():
    rng = np.random.default_rng(0)
    idx = [ReferenceOrder(simulate_dataset(5, 1, rng)[1]).index for _ in range(16000)]
    assert stats.chisquare(np.bincount(idx, minlength=16)).pvalue > 0.05


def test_oracle_empty_and_k2(rng):
    res = exact_rho_posterior_oracle(np.empty((0, 3), dtype=int), ChainConfig())
    assert res.probs.tolist() == [0.25] * 4
    d = Dataset(sample_epl_orderings((1, 2), [0.8, 0.2], 15, rng))
    res = exact_rho_posterior_oracle(d, ChainConfig(), 200000, rng)
    assert np.all(np.abs(res.probs - 0.5) < 4 * res.se + 1e-12)


def test_oracle_against_quadrature(rng):
    # the likelihood is scale free, so under iid Gamma(1, 1) supports only the
    # direction matters and it is uniform on the simplex: integrate over that
    from scipy import integrate

    d = Dataset(sample_epl_orderings((3, 1, 2), [1.0, 0.4, 0.2], 6, rng))
    rows = d.orderings.tolist()
    space = [r.rho for r in enumerate_constrained_space(3)]

    def marginal(rho):
        def f(q2, q1):
            q = [q1, q2, max(1.0 - q1 - q2, 1e-300)]
            return math.exp(sum(epl_log_prob(o, rho, q) for o in rows))
        return integrate.dblquad(f, 0, 1, 0, lambda q1: 1 - q1, epsabs=1e-12, epsrel=1e-8)[0]

    exact = np.array([marginal(r) for r in space])
    exact /= exact.sum()
    res = exact_rho_posterior_oracle(d, ChainConfig(), 400000, rng)
    assert np.all(np.abs(res.probs - exact) < 4 * res.se + 1e-4)


def test_oracle_limits():
    d = Dataset(np.tile(np.arange(1, 6), (3, 1)))
    with pytest.raises(ValueError):
        exact_rho_posterior_oracle(d, ChainConfig(), 10)


def test_oracle_check_small(rng):
    data, _, _ = simulate_dataset(3, 8, np.random.default_rng(4))
    cmp = oracle_check(data, ChainConfig(iterations=12000, burn_in=1000), 200000, seed=3)
    assert cmp.agrees(4.0), "\n".join(cmp.lines())


def test_aggregate_mass_over_matches_only():
    recs = [
        ReplicationRecord(0, (1, 2, 3), (1, 2, 3), 0.9, 0.0, True, 0.1, 0.2),
        ReplicationRecord(1, (1, 2, 3), (3, 2, 1), 0.6, 1.0, False, 0.1, 0.2),
    ]
    rep = aggregate(3, 10, recs)
    assert rep.percent_recovered == 50.0
    assert rep.mean_mode_mass == 0.9
    assert rep.mean_normalized_kendall == 0.5
    none = aggregate(3, 10, recs[1:])
    assert math.isnan(none.mean_mode_mass)


def test_recovery_independent_of_workers():
    cfg = ChainConfig(iterations=200, burn_in=50)
    a = recovery_experiment([(4, 30)], 3, cfg, seed=5, workers=1)
    b = recovery_experiment([(4, 30)], 3, cfg, seed=5, workers=2)
    assert a[0].to_dict() == b[0].to_dict()
    assert "recovered" in a[0].line()


def test_presets_cover_acceptance_cells():
    assert {(5, 200), (5, 1000), (10, 200)} <= set(PRESETS["acceptance"]["grid"])
    assert (5, 1000) in PRESETS["desk"]["grid"]
