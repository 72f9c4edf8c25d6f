"""Extended Plackett-Luce distribution: likelihoods, simulation, data augmentation.

Public functions take 1-based orderings/reference orders. The ``*_0``
helpers are the vectorised 0-based kernels the sampler runs on.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .perm import validate_permutation


@dataclass(frozen=True, eq=False)
class Dataset:
    """N complete orderings of the same K items, stored 1-based, one row each."""

    orderings: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.orderings)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise ValueError("a dataset needs at least one ordering (an N x K array)")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValueError("orderings must contain integers")
        arr = arr.astype(np.int64)
        k = arr.shape[1]
        expected = np.arange(1, k + 1)
        bad = np.flatnonzero(~np.all(np.sort(arr, axis=1) == expected, axis=1))
        if bad.size:
            s = int(bad[0])
            raise ValueError(f"row {s + 1} ({arr[s].tolist()}) is not a permutation of 1..{k}")
        arr.setflags(write=False)
        object.__setattr__(self, "orderings", arr)

    @classmethod
    def from_rankings(cls, rankings) -> "Dataset":
        r = np.asarray(rankings, dtype=np.int64)
        out = np.empty_like(r)
        rows = np.arange(r.shape[0])[:, None]
        out[rows, r - 1] = np.arange(1, r.shape[1] + 1)
        return cls(out)

    @property
    def N(self) -> int:
        return self.orderings.shape[0]

    @property
    def K(self) -> int:
        return self.orderings.shape[1]

    @cached_property
    def zero_based(self) -> np.ndarray:
        """``[s, r]`` = item (0-based) holding rank r+1 for subject s."""
        arr = self.orderings - 1
        arr.setflags(write=False)
        return arr

    @cached_property
    def unique_zero_based(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct 0-based orderings and how many subjects gave each."""
        rows, counts = np.unique(self.zero_based, axis=0, return_counts=True)
        rows.setflags(write=False)
        return rows, counts

    @cached_property
    def rank_pair_counts(self) -> np.ndarray:
        """``[r1, r2, i, j]`` = number of subjects with item i at rank r1 and item j at rank r2 (0-based)."""
        n, k = self.orderings.shape
        o = self.zero_based
        ranks = np.arange(k)
        idx = ((ranks[:, None] * k + ranks[None, :]) * k * k)[None] + o[:, :, None] * k + o[:, None, :]
        counts = np.bincount(idx.ravel(), minlength=k ** 4).reshape(k, k, k, k).astype(float)
        counts.setflags(write=False)
        return counts

    def __len__(self) -> int:
        return self.N

    def __eq__(self, other) -> bool:
        return isinstance(other, Dataset) and np.array_equal(self.orderings, other.orderings)


def check_support(p, k: int | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError("support parameters must be a 1-d vector")
    if k is not None and p.shape[0] != k:
        raise ValueError(f"expected {k} support parameters, got {p.shape[0]}")
    if not np.all(np.isfinite(p)) or np.any(p <= 0):
        raise ValueError("support parameters must be positive and finite")
    return p


def _rho0(rho, k: int) -> np.ndarray:
    r = validate_permutation(rho, "reference order")
    if len(r) != k:
        raise ValueError(f"reference order has K={len(r)}, expected {k}")
    return np.asarray(r, dtype=np.int64) - 1


# --- vectorised 0-based kernels -------------------------------------------------

def stage_items_0(orderings0: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """Item chosen at each stage: ``eta[s, t] = orderings0[s, rho0[t]]``."""
    return orderings0[..., rho0]


def log_lik_0(eta: np.ndarray, logp: np.ndarray) -> np.ndarray:
    """Per-row PL log-probability of stage sequences ``eta`` under log-weights.

    ``logp`` is (K,) or (M, K) for M parameter vectors at once; the result
    is then (N,) or (M, N).
    """
    lw = logp[eta] if logp.ndim == 1 else logp[:, eta]
    shift = lw.max(axis=-1, keepdims=True)
    tail = np.cumsum(np.exp(lw - shift)[..., ::-1], axis=-1)[..., ::-1]
    if np.all(tail[..., -1] > 0):
        log_tail = np.log(tail) + shift
    else:
        # some weight underflowed after shifting; redo in log space
        log_tail = np.logaddexp.accumulate(lw[..., ::-1], axis=-1)[..., ::-1]
    return (lw[..., :-1] - log_tail[..., :-1]).sum(axis=-1)


def pl_draws_0(logp: np.ndarray, n: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` PL sequences of the first ``length`` selections, 0-based.

    Uses the exponential race: item i arrives at time ``E_i / p_i`` with
    ``E_i ~ Exp(1)``; arrival order is exactly the sequential
    without-replacement draw.
    """
    w = np.exp(logp - logp.max())
    with np.errstate(divide="ignore"):
        keys = rng.standard_exponential((n, logp.shape[0])) / w
    return np.argsort(keys, axis=1)[:, :length]


def place_by_stage_0(eta: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """Inverse of :func:`stage_items_0`: put the stage-t item at rank ``rho0[t]``."""
    out = np.empty_like(eta)
    out[..., rho0] = eta
    return out


# --- public 1-based API -----------------------------------------------------------

def epl_log_prob(ordering: Sequence[int], rho: Sequence[int], p) -> float:
    """Log-probability of one ordering under EPL(rho, p)."""
    o = np.asarray(validate_permutation(ordering, "ordering")) - 1
    p = check_support(p, len(o))
    eta = stage_items_0(o, _rho0(rho, len(o)))
    return float(log_lik_0(eta, np.log(p)))


def pl_log_prob(ordering: Sequence[int], p) -> float:
    """Log-probability under the standard (forward) Plackett-Luce model."""
    o = np.asarray(validate_permutation(ordering, "ordering")) - 1
    p = check_support(p, len(o))
    return float(log_lik_0(o, np.log(p)))


def sample_pl_prefix(p, t: int, rng: np.random.Generator) -> tuple[int, ...]:
    """First ``t`` items (1-based) of a PL draw, i.e. sampling without replacement."""
    p = check_support(p)
    if not 1 <= t <= p.shape[0]:
        raise ValueError(f"prefix length must lie in 1..{p.shape[0]}, got {t}")
    return tuple(int(i) + 1 for i in pl_draws_0(np.log(p), 1, t, rng)[0])


def sample_epl_orderings(rho: Sequence[int], p, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` orderings (rows, 1-based) drawn iid from EPL(rho, p)."""
    p = check_support(p)
    rho0 = _rho0(rho, p.shape[0])
    eta = pl_draws_0(np.log(p), n, p.shape[0], rng)
    return place_by_stage_0(eta, rho0) + 1


def sample_epl_ordering(rho: Sequence[int], p, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(int(i) for i in sample_epl_orderings(rho, p, 1, rng)[0])


def delta_matrix(dataset: Dataset, rho: Sequence[int]) -> np.ndarray:
    """Boolean ``(N, K, K)`` array: ``[s, t, i]`` is True iff item i is still free at stage t."""
    rho0 = _rho0(rho, dataset.K)
    eta = stage_items_0(dataset.zero_based, rho0)
    stage_of = np.empty_like(eta)
    rows = np.arange(dataset.N)[:, None]
    stage_of[rows, eta] = np.arange(dataset.K)
    return np.arange(dataset.K)[None, :, None] <= stage_of[:, None, :]


def delta_indicator(dataset: Dataset, rho: Sequence[int], s: int, t: int, i: int) -> int:
    """1 iff item ``i`` is unselected at the start of stage ``t`` for subject ``s`` (1-based)."""
    for name, v, hi in (("subject", s, dataset.N), ("stage", t, dataset.K), ("item", i, dataset.K)):
        if not 1 <= v <= hi:
            raise IndexError(f"{name} index {v} out of range 1..{hi}")
    rho0 = _rho0(rho, dataset.K)
    eta = stage_items_0(dataset.zero_based[s - 1], rho0)
    return int((i - 1) in eta[t - 1:])


def observed_data_log_lik(dataset: Dataset, rho: Sequence[int], p) -> float:
    p = check_support(p, dataset.K)
    if dataset.K < 2:
        raise ValueError("likelihood needs K >= 2")
    eta = stage_items_0(dataset.zero_based, _rho0(rho, dataset.K))
    return float(log_lik_0(eta, np.log(p)).sum())


def complete_data_log_lik(dataset: Dataset, rho: Sequence[int], p, y) -> float:
    """Augmented likelihood ``sum_i [N log p_i - p_i sum_{s,t} y_st delta_sti]``."""
    p = check_support(p, dataset.K)
    if dataset.K < 2:
        raise ValueError("likelihood needs K >= 2")
    y = np.asarray(y, dtype=float)
    if y.shape != (dataset.N, dataset.K):
        raise ValueError(f"latent matrix must be {(dataset.N, dataset.K)}, got {y.shape}")
    exposure = latent_exposure_0(stage_items_0(dataset.zero_based, _rho0(rho, dataset.K)), y)
    return float(dataset.N * np.log(p).sum() - p @ exposure)


def latent_exposure_0(eta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_s sum_t delta_sti y_st`` for every item i.

    Item ``eta[s, t]`` is free at stages 1..t, so it collects the running
    sum of ``y[s, :t+1]``.
    """
    k = eta.shape[1]
    return np.bincount(eta.ravel(), weights=np.cumsum(y, axis=1).ravel(), minlength=k)
