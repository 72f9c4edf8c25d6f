"""Tuned joint Metropolis-within-Gibbs sampler for the constrained EPL.

One sweep of the chain applies, in order,

1. a joint Metropolis-Hastings move on (rho, p) whose proposal draws the
   first stage of rho by a coin flip, the support direction from a Dirichlet
   centred on the observed top or bottom item frequencies, and each later
   stage from a Bernoulli tuned by comparing observed adjacent-rank
   contingency tables with Monte Carlo expectations under the proposed p;
2. a Metropolis move swapping two adjacent stages of rho;
3. Gibbs updates of the exponential latent variables y and then of p.

Internally ranks, items and stages are 0-based numpy arrays; the public
functions accept and return the 1-based conventions of :mod:`eplbayes.perm`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from .model import (
    Dataset,
    check_support,
    latent_exposure_0,
    log_lik_0,
    pl_draws_0,
    stage_items_0,
)
from .perm import code_to_rho, rho_to_code, space_size, validate_permutation

SWAP_RULES = ("exact", "proposal_ratio")

_LOG_TINY = math.log(np.finfo(float).tiny)


@dataclass(frozen=True)
class ChainConfig:
    """Run length, prior hyperparameters and proposal tuning constants.

    ``mc_size=None`` means "use N", the number of observed orderings.
    ``swap_rule`` selects the acceptance ratio of the adjacent-swap move:
    ``"exact"`` uses the Hastings correction for the uniform choice among
    admissible swaps; ``"proposal_ratio"`` weighs by the joint proposal
    density instead (see README).
    """

    iterations: int = 10000
    burn_in: int = 2000
    c: float = 1.0
    d: float = 1.0
    alpha0: float = 50.0
    h: float = 0.1
    lambda1: float = 0.5
    mc_size: int | None = None
    seed: int | None = 0
    swap_rule: str = "exact"

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.c <= 0 or self.d <= 0:
            raise ValueError("Gamma hyperparameters c and d must be positive")
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if not 0 < self.h < 0.5:
            raise ValueError("h must lie in (0, 0.5)")
        if not 0 < self.lambda1 < 1:
            raise ValueError("lambda1 must lie in (0, 1)")
        if self.mc_size is not None and self.mc_size < 1:
            raise ValueError("mc_size must be positive")
        if self.swap_rule not in SWAP_RULES:
            raise ValueError(f"swap_rule must be one of {SWAP_RULES}")

    def mc_size_for(self, n: int) -> int:
        return self.mc_size if self.mc_size is not None else n

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ChainState:
    rho: tuple[int, ...]
    p: np.ndarray
    y: np.ndarray | None = None
    iteration: int = 0


@dataclass(frozen=True)
class MCTables:
    """Monte Carlo adjacent-stage pair counts under one support vector.

    ``counts[t]`` (0-based stage t) tallies how often item i is drawn at
    stage t-1 and item j at stage t over ``size`` PL prefixes. Rows
    ``1..K-2`` are the ones the proposal uses.
    """

    counts: np.ndarray
    size: int


@dataclass(frozen=True)
class ProposalTrace:
    lam: np.ndarray
    w: tuple[int, ...]
    log_density: float
    tables: MCTables
    log_q: np.ndarray = field(repr=False)


class TJMOutcome(NamedTuple):
    rho: tuple[int, ...]
    p: np.ndarray
    accepted: bool
    tables: MCTables
    log_alpha: float


# --- small numeric helpers ------------------------------------------------------

def _log_gamma_prior(logp: np.ndarray, c: float, d: float) -> float:
    return float(np.sum(c * math.log(d) - gammaln(c) + (c - 1.0) * logp - d * np.exp(logp)))


def _log_dirichlet_pdf(log_q: np.ndarray, alpha: np.ndarray) -> float:
    return float(gammaln(alpha.sum()) - gammaln(alpha).sum() + np.dot(alpha - 1.0, log_q))


def _log_dirichlet_draw(alpha: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # Gamma(a) = Gamma(a + 1) * U**(1/a); stays finite in log space for tiny a
    log_g = np.log(rng.standard_gamma(alpha + 1.0)) + np.log1p(-rng.random(alpha.shape)) / alpha
    top = log_g.max()
    return log_g - (top + math.log(np.exp(log_g - top).sum()))


def _w_from_rho0(rho0: np.ndarray) -> np.ndarray:
    k = rho0.shape[0]
    w = np.empty(k, dtype=np.int64)
    lo = 0
    for t, r in enumerate(rho0):
        w[t] = r == lo
        lo += w[t]
    w[-1] = 1
    return w


def _rho0_from_w(w: Sequence[int]) -> np.ndarray:
    return np.asarray(code_to_rho(list(w)), dtype=np.int64) - 1


def _free_ranks(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Top and bottom free ranks (0-based) at the start of every stage."""
    k = w.shape[0]
    tops = np.concatenate(([0], np.cumsum(w)[:-1]))
    bottoms = np.arange(k) - tops
    return tops, k - 1 - bottoms


def _swap_stages(w: np.ndarray) -> np.ndarray:
    """0-based stages t whose swap with t+1 keeps rho constrained."""
    k = w.shape[0]
    t = np.flatnonzero(w[:-1] != w[1:])
    if t.size == 0 or t[-1] != k - 2:
        t = np.append(t, k - 2)
    return t


# --- data summaries used by the proposal ------------------------------------------

def top_bottom_frequencies(dataset: Dataset, rank: int) -> np.ndarray:
    """Relative frequency of each item at rank 1 (``rank=1``) or rank K (``rank=K``)."""
    if rank not in (1, dataset.K):
        raise ValueError(f"rank must be 1 or K={dataset.K}, got {rank}")
    counts = np.bincount(dataset.zero_based[:, rank - 1], minlength=dataset.K)
    return counts / dataset.N


def floor_frequencies(freq: np.ndarray, n: int) -> np.ndarray:
    """Floor each relative frequency at ``1/(N K)`` and renormalise.

    Keeps every Dirichlet concentration strictly positive when an item is
    never observed first (or last).
    """
    k = freq.shape[0]
    out = np.maximum(freq, 1.0 / (n * k))
    return out / out.sum()


def expected_frequency_table(p, t: int, mc_size: int, rng: np.random.Generator) -> np.ndarray:
    """K x K Monte Carlo counts of (item at stage t-1, item at stage t) under PL(p).

    ``t`` is a 1-based stage in 2..K-1; ``mc_size`` prefixes of length t are drawn.
    """
    p = check_support(p)
    k = p.shape[0]
    if not 2 <= t <= k - 1:
        raise ValueError(f"stage must lie in 2..K-1, got {t}")
    draws = pl_draws_0(np.log(p), mc_size, t, rng)
    idx = draws[:, t - 2] * k + draws[:, t - 1]
    return np.bincount(idx, minlength=k * k).reshape(k, k).astype(float)


def _expected_tables_0(log_q: np.ndarray, mc_size: int, rng: np.random.Generator) -> MCTables:
    # one set of prefix draws serves every stage
    k = log_q.shape[0]
    counts = np.zeros((k, k, k))
    if k >= 3:
        draws = pl_draws_0(log_q, mc_size, k - 1, rng)
        stages = np.arange(1, k - 1)
        idx = (stages[None, :] * k + draws[:, :-1]) * k + draws[:, 1:]
        counts = np.bincount(idx.ravel(), minlength=k ** 3).reshape(k, k, k).astype(float)
    return MCTables(counts, mc_size)


def expected_frequency_tables(p, mc_size: int, rng: np.random.Generator) -> MCTables:
    """Expected adjacent-stage tables for all stages from one set of PL draws."""
    p = check_support(p)
    return _expected_tables_0(np.log(p / p.sum()), mc_size, rng)


def lambda_from_distances(d_top: float, d_bottom: float, h: float) -> float:
    """Bernoulli probability of a top pick given the top/bottom table distances."""
    total = d_top + d_bottom
    scaled = 0.5 if total == 0 else 1.0 - d_top / total
    return scaled * (1.0 - 2.0 * h) + h


def _stage_distances(dataset: Dataset, prev, top, bottom, expected) -> tuple[np.ndarray, np.ndarray]:
    pairs = dataset.rank_pair_counts
    d_top = ((pairs[prev, top] - expected) ** 2).sum(axis=(-2, -1))
    d_bottom = ((pairs[prev, bottom] - expected) ** 2).sum(axis=(-2, -1))
    return d_top, d_bottom


def stage_lambda(dataset: Dataset, rho_prefix: Sequence[int], t: int,
                 tables: MCTables, h: float) -> float:
    """Top-pick probability at 1-based stage ``t`` given the first t-1 stages of rho."""
    k = dataset.K
    if not 2 <= t <= k - 1:
        raise ValueError(f"stage must lie in 2..K-1, got {t}")
    prefix = [int(r) - 1 for r in rho_prefix[: t - 1]]
    if len(prefix) != t - 1:
        raise ValueError("rho prefix is shorter than t-1 stages")
    free = sorted(set(range(k)) - set(prefix))
    expected = tables.counts[t - 1] * (dataset.N / tables.size)
    d_top, d_bottom = _stage_distances(dataset, prefix[-1], free[0], free[-1], expected)
    return lambda_from_distances(float(d_top), float(d_bottom), h)


# --- joint proposal --------------------------------------------------------------

def _dirichlet_alpha(dataset: Dataset, config: ChainConfig, top_first: bool) -> np.ndarray:
    rank = 1 if top_first else dataset.K
    return config.alpha0 * floor_frequencies(top_bottom_frequencies(dataset, rank), dataset.N)


def _propose(dataset: Dataset, config: ChainConfig, rng: np.random.Generator,
             alphas: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, ProposalTrace]:
    k, n = dataset.K, dataset.N
    lam = np.ones(k)
    w = np.ones(k, dtype=np.int64)
    lam[0] = config.lambda1
    w[0] = rng.random() < config.lambda1
    log_g = math.log(lam[0] if w[0] else 1.0 - lam[0])

    alpha = alphas[0] if w[0] else alphas[1]
    log_q = _log_dirichlet_draw(alpha, rng)
    log_g += _log_dirichlet_pdf(log_q, alpha)

    tables = _expected_tables_0(log_q, config.mc_size_for(n), rng)
    scale = n / tables.size
    pairs = dataset.rank_pair_counts
    lo, hi = (1, k - 1) if w[0] else (0, k - 2)
    prev = 0 if w[0] else k - 1
    for t in range(1, k - 1):
        expected = tables.counts[t] * scale
        d_top = ((pairs[prev, lo] - expected) ** 2).sum()
        d_bottom = ((pairs[prev, hi] - expected) ** 2).sum()
        lam[t] = lambda_from_distances(d_top, d_bottom, config.h)
        if rng.random() < lam[t]:
            w[t], prev, lo = 1, lo, lo + 1
            log_g += math.log(lam[t])
        else:
            w[t], prev, hi = 0, hi, hi - 1
            log_g += math.log(1.0 - lam[t])
    w_t = tuple(int(x) for x in w)
    return _rho0_from_w(w_t), ProposalTrace(lam, w_t, log_g, tables, log_q)


def _log_proposal_density_0(dataset: Dataset, config: ChainConfig, rho0: np.ndarray,
                            log_q: np.ndarray, tables: MCTables,
                            alphas: tuple[np.ndarray, np.ndarray]) -> float:
    k = dataset.K
    w = _w_from_rho0(rho0)
    alpha = alphas[0] if w[0] else alphas[1]
    out = math.log(config.lambda1 if w[0] else 1.0 - config.lambda1)
    out += _log_dirichlet_pdf(log_q, alpha)
    if k >= 3:
        tops, bottoms = _free_ranks(w)
        mid = np.arange(1, k - 1)
        expected = tables.counts[mid] * (dataset.N / tables.size)
        d_top, d_bottom = _stage_distances(dataset, rho0[mid - 1], tops[mid], bottoms[mid], expected)
        total = d_top + d_bottom
        scaled = np.where(total == 0, 0.5, 1.0 - d_top / np.where(total == 0, 1.0, total))
        lam = scaled * (1.0 - 2.0 * config.h) + config.h
        out += float(np.sum(np.where(w[mid] == 1, np.log(lam), np.log1p(-lam))))
    return out


def propose_joint(dataset: Dataset, config: ChainConfig, rng: np.random.Generator):
    """Draw a candidate ``(rho, p)`` from the tuned joint proposal.

    Returns the 1-based reference order, the support vector on the simplex
    and the :class:`ProposalTrace` holding the Bernoulli probabilities, the
    proposal log-density and the Monte Carlo tables used.
    """
    alphas = (_dirichlet_alpha(dataset, config, True), _dirichlet_alpha(dataset, config, False))
    rho0, trace = _propose(dataset, config, rng, alphas)
    return tuple(int(r) + 1 for r in rho0), np.exp(trace.log_q), trace


def eval_proposal_log_density(dataset: Dataset, rho: Sequence[int], p, tables: MCTables,
                              config: ChainConfig) -> float:
    """Joint proposal log-density of ``(rho, p)`` replayed against fixed ``tables``.

    ``p`` is normalised to the simplex first, so any positive rescaling gives
    the same value; a zero component yields ``-inf``.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        return -math.inf
    rho0 = np.asarray(validate_permutation(rho, "reference order"), dtype=np.int64) - 1
    rho_to_code(rho)
    alphas = (_dirichlet_alpha(dataset, config, True), _dirichlet_alpha(dataset, config, False))
    log_q = np.log(p) - math.log(p.sum())
    return _log_proposal_density_0(dataset, config, rho0, log_q, tables, alphas)


# --- the kernel ------------------------------------------------------------------

class _Kernel:
    """Per-dataset constants and the three component moves on 0-based state."""

    def __init__(self, dataset: Dataset, config: ChainConfig,
                 gibbs_p: Callable | None = None) -> None:
        self.data = dataset
        self.cfg = config
        self.alphas = (_dirichlet_alpha(dataset, config, True),
                       _dirichlet_alpha(dataset, config, False))
        # identical orderings share their likelihood term and pool their latents
        self.rows0, self.counts = dataset.unique_zero_based
        self.weights = self.counts.astype(float)
        self.gibbs_p = gibbs_p or gibbs_p_from_exposure

    def log_lik(self, rho0: np.ndarray, log_p: np.ndarray) -> float:
        return float(self.weights @ log_lik_0(stage_items_0(self.rows0, rho0), log_p))

    def tjm(self, rho0, p, log_lik, rng):
        cfg, data = self.cfg, self.data
        log_p = np.log(p)
        log_s = math.log(p.sum())
        cand_rho0, trace = _propose(data, cfg, rng, self.alphas)
        # the candidate keeps the current total mass; only the direction is proposed
        cand_log_p = trace.log_q + log_s
        cur_log_q = log_p - log_s
        cur_tables = _expected_tables_0(cur_log_q, cfg.mc_size_for(data.N), rng)
        log_g_cur = _log_proposal_density_0(data, cfg, rho0, cur_log_q, cur_tables, self.alphas)
        u = rng.random()
        if np.any(cand_log_p < _LOG_TINY):
            return rho0, p, log_lik, False, cur_tables, -math.inf
        cand_ll = self.log_lik(cand_rho0, cand_log_p)
        log_alpha = (log_g_cur - trace.log_density
                     + cand_ll + _log_gamma_prior(cand_log_p, cfg.c, cfg.d)
                     - log_lik - _log_gamma_prior(log_p, cfg.c, cfg.d))
        if math.log1p(-u) < log_alpha:
            return cand_rho0, np.exp(cand_log_p), cand_ll, True, trace.tables, log_alpha
        return rho0, p, log_lik, False, cur_tables, log_alpha

    def swap(self, rho0, p, log_lik, tables, rng):
        w = _w_from_rho0(rho0)
        stages = _swap_stages(w)
        t = int(stages[rng.integers(stages.size)])
        new_rho0 = rho0.copy()
        new_rho0[t], new_rho0[t + 1] = rho0[t + 1], rho0[t]
        log_p = np.log(p)
        new_ll = self.log_lik(new_rho0, log_p)
        log_alpha = new_ll - log_lik
        if self.cfg.swap_rule == "exact":
            log_alpha += math.log(stages.size) - math.log(_swap_stages(_w_from_rho0(new_rho0)).size)
        else:
            log_q = log_p - math.log(p.sum())
            log_alpha += (
                _log_proposal_density_0(self.data, self.cfg, rho0, log_q, tables, self.alphas)
                - _log_proposal_density_0(self.data, self.cfg, new_rho0, log_q, tables, self.alphas)
            )
        if math.log1p(-rng.random()) < log_alpha:
            return new_rho0, new_ll, True
        return rho0, log_lik, False

    def sweep(self, rho0, p, log_lik, rng):
        rho0, p, log_lik, acc_tjm, tables, _ = self.tjm(rho0, p, log_lik, rng)
        rho0, log_lik, acc_swap = self.swap(rho0, p, log_lik, tables, rng)
        eta = stage_items_0(self.rows0, rho0)
        y_sum = _gibbs_y_pooled_0(eta, self.counts, p, rng)
        exposure = latent_exposure_0(eta, y_sum)
        p = self.gibbs_p(exposure, self.data.N, self.cfg.c, self.cfg.d, rng)
        log_lik = float(self.weights @ log_lik_0(eta, np.log(p)))
        return rho0, p, y_sum, log_lik, acc_tjm, acc_swap


def _gibbs_y_0(eta: np.ndarray, p: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    rates = np.cumsum(p[eta][:, ::-1], axis=1)[:, ::-1]
    return rng.standard_exponential(eta.shape) / rates


def _gibbs_y_pooled_0(eta: np.ndarray, counts: np.ndarray, p: np.ndarray,
                      rng: np.random.Generator) -> np.ndarray:
    """Per distinct ordering, the sum of its subjects' latents: a Gamma(count, rate) draw."""
    rates = np.cumsum(p[eta][:, ::-1], axis=1)[:, ::-1]
    shape = np.broadcast_to(counts[:, None].astype(float), eta.shape)
    return rng.standard_gamma(shape) / rates


def gibbs_p_from_exposure(exposure: np.ndarray, n: int, c: float, d: float,
                          rng: np.random.Generator) -> np.ndarray:
    """Conjugate draw ``p_i ~ Gamma(c + N, d + exposure_i)``."""
    return rng.standard_gamma(c + n, size=exposure.shape[0]) / (d + exposure)


# --- public single-move wrappers -------------------------------------------------

def _rho0_of(rho, k: int) -> np.ndarray:
    r = validate_permutation(rho, "reference order")
    if len(r) != k:
        raise ValueError(f"reference order has K={len(r)}, expected {k}")
    rho_to_code(r)
    return np.asarray(r, dtype=np.int64) - 1


def gibbs_step_y(dataset: Dataset, rho, p, rng: np.random.Generator) -> np.ndarray:
    """Draw the N x K latent matrix: ``y_st ~ Exp(sum_i delta_sti p_i)``."""
    p = check_support(p, dataset.K)
    return _gibbs_y_0(stage_items_0(dataset.zero_based, _rho0_of(rho, dataset.K)), p, rng)


def gibbs_step_p(dataset: Dataset, rho, y, config: ChainConfig,
                 rng: np.random.Generator) -> np.ndarray:
    """Draw ``p_i ~ Gamma(c + N, d + sum_{s,t} delta_sti y_st)`` independently."""
    y = np.asarray(y, dtype=float)
    eta = stage_items_0(dataset.zero_based, _rho0_of(rho, dataset.K))
    if y.shape != eta.shape:
        raise ValueError(f"latent matrix must be {eta.shape}, got {y.shape}")
    return gibbs_p_from_exposure(latent_exposure_0(eta, y), dataset.N, config.c, config.d, rng)


def tjm_step(state: ChainState, dataset: Dataset, config: ChainConfig,
             rng: np.random.Generator) -> TJMOutcome:
    """One tuned joint Metropolis-Hastings move on ``(rho, p)``.

    Returns the next pair, the accept flag and the Monte Carlo tables built
    under the returned ``p`` (for reuse by :func:`swap_step`).
    """
    kern = _Kernel(dataset, config)
    p = check_support(state.p, dataset.K)
    rho0 = _rho0_of(state.rho, dataset.K)
    rho0, p, _, accepted, tables, log_alpha = kern.tjm(rho0, p, kern.log_lik(rho0, np.log(p)), rng)
    return TJMOutcome(tuple(int(r) + 1 for r in rho0), p, accepted, tables, log_alpha)


def swap_step(rho, p, dataset: Dataset, config: ChainConfig, tables: MCTables | None,
              rng: np.random.Generator) -> tuple[tuple[int, ...], bool]:
    """Metropolis move exchanging one admissible pair of adjacent stages."""
    kern = _Kernel(dataset, config)
    p = check_support(p, dataset.K)
    rho0 = _rho0_of(rho, dataset.K)
    if config.swap_rule == "proposal_ratio" and tables is None:
        raise ValueError("the proposal_ratio swap rule needs the Monte Carlo tables")
    rho0, _, accepted = kern.swap(rho0, p, kern.log_lik(rho0, np.log(p)), tables, rng)
    return tuple(int(r) + 1 for r in rho0), accepted


# --- chains ----------------------------------------------------------------------

@dataclass
class ChainResult:
    """Post-burn-in draws of one chain.

    ``rho_index`` holds the W-lexicographic index of each retained reference
    order (see :func:`eplbayes.perm.rho_from_index`); ``p`` the raw support
    draws, one row per retained iteration.
    """

    K: int
    iterations: np.ndarray
    rho_index: np.ndarray
    p: np.ndarray
    log_posterior: np.ndarray
    accept_tjm: float
    accept_swap: float
    config: ChainConfig | None = None

    def __len__(self) -> int:
        return self.rho_index.shape[0]

    def rho(self, j: int) -> tuple[int, ...]:
        from .perm import rho_from_index

        return rho_from_index(int(self.rho_index[j]), self.K)


def _rho_index(rho0: np.ndarray) -> int:
    w = _w_from_rho0(rho0)
    idx = 0
    for bit in w[:-1]:
        idx = 2 * idx + int(bit)
    return idx


def log_posterior(dataset: Dataset, rho, p, config: ChainConfig) -> float:
    """Unnormalised log posterior of ``(rho, p)`` (uniform prior on rho dropped)."""
    p = check_support(p, dataset.K)
    kern_ll = float(log_lik_0(stage_items_0(dataset.zero_based, _rho0_of(rho, dataset.K)),
                              np.log(p)).sum())
    return kern_ll + _log_gamma_prior(np.log(p), config.c, config.d)


def initial_state(dataset: Dataset, config: ChainConfig, rng: np.random.Generator) -> ChainState:
    """rho uniform over the restricted space, p from the prior, y from its full conditional."""
    bits = rng.integers(0, 2, size=dataset.K - 1).tolist()
    rho = code_to_rho(bits + [1])
    p = rng.standard_gamma(config.c, size=dataset.K) / config.d
    p = np.maximum(p, np.finfo(float).tiny)
    y = gibbs_step_y(dataset, rho, p, rng)
    return ChainState(rho, p, y, 0)


def run_chain(dataset: Dataset, config: ChainConfig, init: ChainState | None = None,
              rng: np.random.Generator | None = None) -> ChainResult:
    """Run the full kernel for ``config.iterations`` sweeps and keep post-burn-in draws."""
    if dataset.K < 2:
        raise ValueError("fitting needs K >= 2")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if init is None:
        init = initial_state(dataset, config, rng)
    kern = _Kernel(dataset, config)
    rho0 = _rho0_of(init.rho, dataset.K)
    p = check_support(init.p, dataset.K).copy()
    log_lik = kern.log_lik(rho0, np.log(p))

    keep = config.iterations - config.burn_in
    its = np.arange(config.burn_in + 1, config.iterations + 1)
    rho_idx = np.empty(keep, dtype=np.int64)
    draws = np.empty((keep, dataset.K))
    lp = np.empty(keep)
    n_tjm = n_swap = 0
    for it in range(1, config.iterations + 1):
        rho0, p, _, log_lik, a1, a2 = kern.sweep(rho0, p, log_lik, rng)
        n_tjm += a1
        n_swap += a2
        j = it - config.burn_in - 1
        if j >= 0:
            rho_idx[j] = _rho_index(rho0)
            draws[j] = p
            lp[j] = log_lik + _log_gamma_prior(np.log(p), config.c, config.d)
    return ChainResult(dataset.K, its, rho_idx, draws, lp,
                       n_tjm / config.iterations, n_swap / config.iterations, config)


def kernel_sweep(dataset: Dataset, rho, p, config: ChainConfig, rng: np.random.Generator,
                 gibbs_p: Callable | None = None):
    """One full sweep from ``(rho, p)``; returns the new ``(rho, p, y)``.

    ``gibbs_p`` replaces the conditional draw of p (signature
    ``(exposure, N, c, d, rng)``, see :func:`gibbs_p_from_exposure`); it
    exists for mutation checks of the correctness harness. The returned y
    holds, per distinct ordering, the summed latents of its subjects.
    """
    kern = _Kernel(dataset, config, gibbs_p)
    rho0 = _rho0_of(rho, dataset.K)
    p = check_support(p, dataset.K)
    rho0, p, y, _, _, _ = kern.sweep(rho0, p, kern.log_lik(rho0, np.log(p)), rng)
    return tuple(int(r) + 1 for r in rho0), p, y


def chain_seed(seed: int | None, index: int) -> int | None:
    return None if seed is None else int(seed) + int(index)


def n_reference_orders(k: int) -> int:
    return space_size(k)
