"""Synthetic data, the reference-order recovery study and an exact small-K posterior oracle."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .diagnostics import batch_means_se, normalized_kendall, summarize_posterior
from .model import Dataset, log_lik_0, sample_epl_orderings, stage_items_0
from .perm import enumerate_constrained_space, random_reference_order, space_size
from .sampler import ChainConfig, run_chain

PRESETS: dict[str, dict] = {
    "desk": {"grid": [(5, 50), (5, 200), (5, 1000), (10, 50), (10, 200), (10, 1000)],
             "replications": 20, "iterations": 10000, "burn_in": 2000},
    "acceptance": {"grid": [(5, 200), (5, 1000), (10, 200)],
                   "replications": 20, "iterations": 10000, "burn_in": 2000},
    "full": {"grid": [(k, n) for k in (5, 10, 20) for n in (50, 200, 1000, 10000)],
             "replications": 100, "iterations": 10000, "burn_in": 2000},
    "smoke": {"grid": [(5, 200)], "replications": 2, "iterations": 500, "burn_in": 100},
}


def simulate_dataset(K: int, N: int, rng: np.random.Generator):
    """Draw a true ``(rho, p)`` and N orderings from the constrained EPL.

    rho is uniform over the restricted space and p_i iid Uniform(0, 1).
    Returns ``(dataset, rho, p)``.
    """
    if K < 2 or N < 1:
        raise ValueError("need K >= 2 and N >= 1")
    rho = random_reference_order(K, rng)
    p = rng.uniform(size=K)
    while np.any(p <= 0):
        p = rng.uniform(size=K)
    return Dataset(sample_epl_orderings(rho, p, N, rng)), rho, p


@dataclass
class ReplicationRecord:
    replication: int
    true_rho: tuple[int, ...]
    estimated_rho: tuple[int, ...]
    mode_mass: float
    normalized_kendall: float
    recovered: bool
    accept_tjm: float
    accept_swap: float


@dataclass
class RecoveryReport:
    """Aggregate recovery statistics for one (K, N) cell.

    ``mean_mode_mass`` averages the posterior mass of the mode over the
    replications whose mode is the true reference order (NaN if none).
    """

    K: int
    N: int
    replications: int
    percent_recovered: float
    mean_mode_mass: float
    mean_normalized_kendall: float
    records: list[ReplicationRecord] = field(default_factory=list)

    def to_dict(self, with_records: bool = True) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "records"}
        if with_records:
            d["records"] = [
                {**asdict(r), "true_rho": list(r.true_rho), "estimated_rho": list(r.estimated_rho)}
                for r in self.records
            ]
        return d

    def line(self) -> str:
        return (f"(K={self.K:2d}, N={self.N:5d})  d_Kend={self.mean_normalized_kendall:.2f}  "
                f"mass={self.mean_mode_mass:.2f}  recovered={self.percent_recovered:.0f}%  "
                f"(R={self.replications})")


def _replication_seed(seed: int, k: int, n: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), k, n, r])


def _one_replication(args) -> ReplicationRecord:
    k, n, r, config, seed = args
    ss = _replication_seed(seed, k, n, r)
    data_ss, chain_ss = ss.spawn(2)
    data, rho, _ = simulate_dataset(k, n, np.random.default_rng(data_ss))
    chain = run_chain(data, config, rng=np.random.default_rng(chain_ss))
    summary = summarize_posterior(chain)
    est = summary.rho_mode
    return ReplicationRecord(
        replication=r,
        true_rho=tuple(rho),
        estimated_rho=est,
        mode_mass=summary.rho_mode_mass,
        normalized_kendall=normalized_kendall(rho, est),
        recovered=est == tuple(rho),
        accept_tjm=chain.accept_tjm,
        accept_swap=chain.accept_swap,
    )


def aggregate(k: int, n: int, records: Sequence[ReplicationRecord]) -> RecoveryReport:
    records = sorted(records, key=lambda rec: rec.replication)
    hits = [rec for rec in records if rec.recovered]
    return RecoveryReport(
        K=k,
        N=n,
        replications=len(records),
        percent_recovered=100.0 * len(hits) / len(records),
        mean_mode_mass=float(np.mean([rec.mode_mass for rec in hits])) if hits else math.nan,
        mean_normalized_kendall=float(np.mean([rec.normalized_kendall for rec in records])),
        records=list(records),
    )


def recovery_experiment(grid: Iterable[tuple[int, int]], replications: int, config: ChainConfig,
                        seed: int = 0, workers: int = 1) -> list[RecoveryReport]:
    """Simulate, fit and summarise ``replications`` datasets per (K, N) cell.

    Every replication gets its own seed derived from ``(seed, K, N, r)``,
    so results do not depend on ``workers`` or on execution order.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    grid = [(int(k), int(n)) for k, n in grid]
    jobs = [(k, n, r, config, seed) for k, n in grid for r in range(replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_replication, jobs, chunksize=1))
    else:
        results = [_one_replication(job) for job in jobs]
    reports = []
    for k, n in grid:
        recs = [rec for job, rec in zip(jobs, results) if job[:2] == (k, n)]
        reports.append(aggregate(k, n, recs))
    return reports


# --- exact posterior oracle for tiny problems -------------------------------------

@dataclass
class OracleResult:
    rhos: list[tuple[int, ...]]
    probs: np.ndarray
    se: np.ndarray
    draws: int


def exact_rho_posterior_oracle(dataset, config: ChainConfig, mc_draws: int = 10**6,
                               rng: np.random.Generator | None = None, K: int | None = None,
                               chunk: int = 200_000) -> OracleResult:
    """Posterior of rho over the restricted space by prior Monte Carlo.

    For each rho the marginal likelihood ``E_prior[L(rho, p)]`` is estimated
    from the same ``mc_draws`` Gamma(c, d) draws of p; normalising gives
    the posterior (the rho prior is uniform). Standard errors come from the
    delta method for the ratio. ``dataset`` may be an empty (0, K) array,
    in which case the answer is exactly uniform. Intended for K <= 4, N <= 30.
    """
    if isinstance(dataset, Dataset):
        rows, counts = dataset.unique_zero_based
        k = dataset.K
    else:
        arr = np.asarray(dataset, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("orderings must be an N x K array")
        k = arr.shape[1] if K is None else K
        if arr.shape[0] > 0:
            return exact_rho_posterior_oracle(Dataset(arr), config, mc_draws, rng, chunk=chunk)
        rows, counts = np.empty((0, k), dtype=np.int64), np.empty(0, dtype=np.int64)
    n = int(counts.sum())
    if not 2 <= k <= 4 or n > 30:
        raise ValueError(f"the oracle is limited to 2 <= K <= 4 and N <= 30 (got K={k}, N={n})")
    space = [r.rho for r in enumerate_constrained_space(k)]
    m = len(space)
    if n == 0:
        return OracleResult(space, np.full(m, 1.0 / m), np.zeros(m), 0)
    if rng is None:
        rng = np.random.default_rng(config.seed)

    log_w = np.empty((mc_draws, m))
    weights = counts.astype(float)
    for start in range(0, mc_draws, chunk):
        size = min(chunk, mc_draws - start)
        log_p = np.log(rng.standard_gamma(config.c, size=(size, k)) / config.d)
        for j, rho in enumerate(space):
            eta = stage_items_0(rows, np.asarray(rho) - 1)
            log_w[start:start + size, j] = log_lik_0(eta, log_p) @ weights
    w = np.exp(log_w - log_w.max())
    means = w.mean(axis=0)
    total = w.sum(axis=1)
    probs = means / means.sum()
    resid = (w - probs[None, :] * total[:, None]) / total.mean()
    se = resid.std(axis=0, ddof=1) / math.sqrt(mc_draws)
    return OracleResult(space, probs, se, mc_draws)


@dataclass
class OracleComparison:
    rhos: list[tuple[int, ...]]
    chain_probs: np.ndarray
    chain_se: np.ndarray
    oracle_probs: np.ndarray
    oracle_se: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return (self.chain_probs - self.oracle_probs) / np.hypot(self.chain_se, self.oracle_se)

    def agrees(self, n_se: float = 3.0) -> bool:
        return bool(np.all(np.abs(self.z) <= n_se))

    def lines(self) -> list[str]:
        return [
            f"rho={r}: chain {cp:.4f} +/- {cs:.4f}  oracle {op:.4f} +/- {os_:.4f}  z={z:+.2f}"
            for r, cp, cs, op, os_, z in zip(self.rhos, self.chain_probs, self.chain_se,
                                             self.oracle_probs, self.oracle_se, self.z)
        ]


def oracle_check(dataset: Dataset, config: ChainConfig, mc_draws: int = 10**6,
                 seed: int = 0, n_batches: int = 50) -> OracleComparison:
    """Compare the chain's rho marginal with the oracle, cell by cell."""
    chain_rng, oracle_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    oracle = exact_rho_posterior_oracle(dataset, config, mc_draws, oracle_rng)
    chain = run_chain(dataset, config, rng=chain_rng)
    m = space_size(dataset.K)
    onehot = np.eye(m)[chain.rho_index]
    return OracleComparison(oracle.rhos, onehot.mean(axis=0), batch_means_se(onehot, n_batches),
                            oracle.probs, oracle.se)
