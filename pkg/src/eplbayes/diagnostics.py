"""Posterior summaries, Kendall distances, trace files and the joint-distribution test."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from ._fileutil import atomic_write
from .model import Dataset, pl_draws_0, place_by_stage_0
from .perm import ReferenceOrder, rho_from_index, space_size, validate_permutation
from .sampler import ChainConfig, ChainResult, kernel_sweep


# --- distances -------------------------------------------------------------------

def kendall_distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of index pairs ordered one way in ``a`` and the other way in ``b``."""
    a = validate_permutation(a)
    b = validate_permutation(b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    k = len(a)
    return sum(
        (a[i] - a[j]) * (b[i] - b[j]) < 0 for i in range(k) for j in range(i + 1, k)
    )


def normalized_kendall(a: Sequence[int], b: Sequence[int]) -> float:
    """Kendall distance divided by its maximum ``K(K-1)/2``."""
    k = len(a)
    if k < 2:
        raise ValueError("normalized Kendall distance needs K >= 2")
    return kendall_distance(a, b) / (k * (k - 1) / 2)


# --- posterior summary -----------------------------------------------------------

def modal_ordering(rho: Sequence[int], p_mean: Sequence[float]) -> tuple[int, ...]:
    """Most probable ordering given ``rho``: items by decreasing support fill ranks stage by stage."""
    rho = validate_permutation(rho)
    p_mean = np.asarray(p_mean, dtype=float)
    by_support = np.argsort(-p_mean, kind="stable")
    out = [0] * len(rho)
    for stage_item, rank in zip(by_support, rho):
        out[rank - 1] = int(stage_item) + 1
    return tuple(out)


@dataclass
class PosteriorSummary:
    """Marginal posterior of the reference order plus posterior mean supports.

    ``rho_table`` lists ``(rho, probability)`` by decreasing probability;
    ties go to the smaller W code. ``p_mean`` averages the draws after
    normalising each to sum to one.
    """

    K: int
    rho_table: list[tuple[tuple[int, ...], float]]
    p_mean: np.ndarray
    n_draws: int
    per_chain: list["PosteriorSummary"] = field(default_factory=list, repr=False)

    @property
    def rho_mode(self) -> tuple[int, ...]:
        return self.rho_table[0][0]

    @property
    def rho_mode_mass(self) -> float:
        return self.rho_table[0][1]

    @property
    def modal_ordering(self) -> tuple[int, ...]:
        return modal_ordering(self.rho_mode, self.p_mean)

    def prob(self, rho: Sequence[int]) -> float:
        rho = tuple(rho)
        return next((pr for r, pr in self.rho_table if r == rho), 0.0)

    def top(self, n: int = 5) -> list[tuple[tuple[int, ...], float]]:
        return self.rho_table[:n]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "n_draws": self.n_draws,
            "rho_table": [
                {"rho": list(r), "w_code": ReferenceOrder(r).bits, "prob": pr}
                for r, pr in self.rho_table
            ],
            "rho_mode": list(self.rho_mode),
            "rho_mode_mass": self.rho_mode_mass,
            "p_mean": [float(x) for x in self.p_mean],
            "modal_ordering": list(self.modal_ordering),
            "per_chain": [s.to_dict() for s in self.per_chain],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PosteriorSummary":
        return cls(
            K=int(d["K"]),
            rho_table=[(tuple(int(x) for x in e["rho"]), float(e["prob"])) for e in d["rho_table"]],
            p_mean=np.asarray(d["p_mean"], dtype=float),
            n_draws=int(d["n_draws"]),
            per_chain=[cls.from_dict(x) for x in d.get("per_chain", [])],
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PosteriorSummary)
            and self.K == other.K
            and self.n_draws == other.n_draws
            and self.rho_table == other.rho_table
            and np.array_equal(self.p_mean, other.p_mean)
            and self.per_chain == other.per_chain
        )


def _summarize_one(k: int, rho_index: np.ndarray, p: np.ndarray) -> PosteriorSummary:
    if rho_index.shape[0] == 0:
        raise ValueError("cannot summarise an empty chain")
    values, counts = np.unique(rho_index, return_counts=True)
    order = np.lexsort((values, -counts))
    total = counts.sum()
    table = [(rho_from_index(int(values[j]), k), counts[j] / total) for j in order]
    p_mean = (p / p.sum(axis=1, keepdims=True)).mean(axis=0)
    return PosteriorSummary(k, [(r, float(pr)) for r, pr in table], p_mean, int(total))


def summarize_posterior(chains: ChainResult | Iterable[ChainResult]) -> PosteriorSummary:
    """Pool one or more chains into a :class:`PosteriorSummary`.

    With several chains the per-chain summaries are kept alongside so that
    between-chain agreement can be inspected.
    """
    if isinstance(chains, ChainResult):
        chains = [chains]
    chains = list(chains)
    if not chains:
        raise ValueError("no chains to summarise")
    k = chains[0].K
    if any(ch.K != k for ch in chains):
        raise ValueError("chains disagree on K")
    pooled = _summarize_one(
        k,
        np.concatenate([ch.rho_index for ch in chains]),
        np.concatenate([ch.p for ch in chains]),
    )
    if len(chains) > 1:
        pooled.per_chain = [_summarize_one(k, ch.rho_index, ch.p) for ch in chains]
    return pooled


# --- trace files -----------------------------------------------------------------

def export_traces(chain: ChainResult, destination) -> Path:
    """Write one CSV row per retained iteration: iteration, log_posterior, rho bits, p_1..p_K."""
    destination = Path(destination)
    k = chain.K

    def write(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["iteration", "log_posterior", "rho"] + [f"p_{i}" for i in range(1, k + 1)])
        for j in range(len(chain)):
            bits = format(int(chain.rho_index[j]), f"0{k - 1}b") + "1" if k > 1 else "1"
            out.writerow(
                [int(chain.iterations[j]), repr(float(chain.log_posterior[j])), bits]
                + [repr(float(x)) for x in chain.p[j]]
            )

    atomic_write(destination, write)
    return destination


def import_traces(source) -> ChainResult:
    """Read a trace CSV written by :func:`export_traces` back into a :class:`ChainResult`."""
    source = Path(source)
    try:
        with open(source, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read trace file {source}: {exc}") from exc
    if not rows:
        raise ValueError(f"{source}: empty trace file")
    header, body = rows[0], rows[1:]
    k = len(header) - 3
    if header[:3] != ["iteration", "log_posterior", "rho"] or k < 1:
        raise ValueError(f"{source}: not a trace file (header {header})")
    its = np.array([int(r[0]) for r in body], dtype=np.int64)
    lp = np.array([float(r[1]) for r in body])
    idx = np.array([int(r[2][:-1] or "0", 2) for r in body], dtype=np.int64)
    p = np.array([[float(x) for x in r[3:]] for r in body]).reshape(len(body), k)
    return ChainResult(k, its, idx, p, lp, math.nan, math.nan, None)


# --- joint-distribution ("getting it right") test --------------------------------

def batch_means_se(x: np.ndarray, n_batches: int = 50) -> np.ndarray:
    """Monte Carlo standard error of column means from non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    size = x.shape[0] // n_batches
    if size < 1:
        raise ValueError("series shorter than the number of batches")
    means = x[: size * n_batches].reshape(n_batches, size, *x.shape[1:]).mean(axis=1)
    return means.std(axis=0, ddof=1) / math.sqrt(n_batches)


def _batch_means(x: np.ndarray, n_batches: int) -> np.ndarray:
    size = x.shape[0] // n_batches
    return x[: size * n_batches].reshape(n_batches, size, *x.shape[1:]).mean(axis=1)


@dataclass
class GewekeReport:
    """Outcome of :func:`geweke_joint_test`.

    ``z`` maps test names (``mean p_i``, ``E[p_i^2]``) to two-sample z
    scores; ``rho_stat``/``rho_pvalue`` belong to the batch-means Wald test
    of uniformity of rho. ``passed`` is decided at family level ``alpha``
    with a Bonferroni split.
    """

    z: dict[str, float]
    rho_frequencies: np.ndarray
    rho_stat: float
    rho_pvalue: float
    z_threshold: float
    alpha: float
    sweeps: int
    passed: bool

    def lines(self) -> list[str]:
        out = [f"{name:>10s}: z = {val:+.3f}" for name, val in self.z.items()]
        out.append(f"rho uniformity: stat = {self.rho_stat:.3f}, p = {self.rho_pvalue:.4f}")
        out.append(f"{'PASS' if self.passed else 'FAIL'} (family alpha {self.alpha}, |z| < {self.z_threshold:.3f})")
        return out


def geweke_joint_test(K: int, N: int, config: ChainConfig, sweeps: int,
                      rng: np.random.Generator, gibbs_p: Callable | None = None,
                      alpha: float = 0.01, n_batches: int = 50) -> GewekeReport:
    """Check the full kernel against the prior by successive-conditional simulation.

    Starting from a prior draw, alternate one kernel sweep on the current
    data with a fresh dataset simulated from the current parameters. If the
    kernel leaves the posterior invariant, the parameter draws follow the
    prior: p_i iid Gamma(c, d) and rho uniform over the restricted space.
    First and second moments of every p_i are compared with ``sweeps``
    direct prior draws (two-sample z, batch-means standard errors for the
    autocorrelated side); rho frequencies get a Wald test with batch-means
    covariance, calibrated by Hotelling's F.
    """
    if not 2 <= K <= 5 or not 1 <= N <= 20:
        raise ValueError("the joint test is meant for K <= 5 and N <= 20")
    c, d = config.c, config.d
    m = space_size(K)

    # marginal-conditional side
    direct = rng.standard_gamma(c, size=(sweeps, K)) / d

    # successive-conditional side
    bits = rng.integers(0, 2, size=K - 1).tolist()
    rho = rho_from_index(int("".join(map(str, bits)) or "0", 2), K)
    p = np.maximum(rng.standard_gamma(c, size=K) / d, np.finfo(float).tiny)
    draws = np.empty((sweeps, K))
    cells = np.empty(sweeps, dtype=np.int64)
    for j in range(sweeps):
        data = Dataset(_simulate_orderings(rho, p, N, rng))
        rho, p, _ = kernel_sweep(data, rho, p, config, rng, gibbs_p=gibbs_p)
        draws[j] = p
        cells[j] = ReferenceOrder(rho).index

    z = {}
    for i in range(K):
        for label, f in (("mean", lambda v: v), ("E[p^2]", lambda v: v * v)):
            sc, mc = f(draws[:, i]), f(direct[:, i])
            se = math.hypot(float(batch_means_se(sc, n_batches)), mc.std(ddof=1) / math.sqrt(sweeps))
            z[f"{label} p_{i + 1}"] = float((sc.mean() - mc.mean()) / se)

    onehot = np.eye(m)[cells]
    freq = onehot.mean(axis=0)
    # drop one cell: the frequencies sum to one
    bm = _batch_means(onehot[:, :-1], n_batches)
    diff = freq[:-1] - 1.0 / m
    cov = np.atleast_2d(np.cov(bm, rowvar=False)) / n_batches
    q = m - 1
    if np.linalg.matrix_rank(cov) < q:
        rho_stat, rho_p = math.inf, 0.0
    else:
        t2 = float(diff @ np.linalg.solve(cov, diff))
        rho_stat = t2
        f_stat = (n_batches - q) / (q * (n_batches - 1)) * t2
        rho_p = float(stats.f.sf(f_stat, q, n_batches - q))

    n_tests = len(z) + 1
    per_test = alpha / n_tests
    z_thr = float(stats.t.ppf(1 - per_test / 2, n_batches - 1))
    passed = all(abs(v) < z_thr for v in z.values()) and rho_p > per_test
    return GewekeReport(z, freq, rho_stat, rho_p, z_thr, alpha, sweeps, passed)


def _simulate_orderings(rho, p, n, rng) -> np.ndarray:
    rho0 = np.asarray(rho, dtype=np.int64) - 1
    eta = pl_draws_0(np.log(p), n, len(rho0), rng)
    return place_by_stage_0(eta, rho0) + 1
