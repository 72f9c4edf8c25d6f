"""Permutations, rankings/orderings and the top-or-bottom reference-order space.

Every public function here speaks 1-based items, ranks and stages. A
reference order ``rho`` lists, stage by stage, the rank assigned at that
stage. The restricted space only admits reference orders in which each
stage takes either the best or the worst rank still free; such an order is
fully described by its binary code ``W`` (1 = top pick, 0 = bottom pick,
with the last flag fixed to 1 by convention).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

MAX_ENUMERATION_K = 20


def _as_perm(seq: Iterable[int], what: str = "permutation") -> tuple[int, ...]:
    values = tuple(int(v) for v in seq)
    k = len(values)
    if k == 0:
        raise ValueError(f"{what} must be non-empty")
    if sorted(values) != list(range(1, k + 1)):
        raise ValueError(f"{what} {values} is not a permutation of 1..{k}")
    return values


def validate_permutation(seq: Iterable[int], what: str = "permutation") -> tuple[int, ...]:
    """Return ``seq`` as a tuple, raising ValueError unless it permutes 1..K."""
    return _as_perm(seq, what)


def ranking_to_ordering(ranking: Sequence[int]) -> tuple[int, ...]:
    """Invert a ranking (rank of each item) into an ordering (item at each rank).

    >>> ranking_to_ordering((3, 1, 2))
    (2, 3, 1)
    """
    r = _as_perm(ranking, "ranking")
    out = [0] * len(r)
    for item, rank in enumerate(r, start=1):
        out[rank - 1] = item
    return tuple(out)


def ordering_to_ranking(ordering: Sequence[int]) -> tuple[int, ...]:
    """Invert an ordering into a ranking. Inverse of :func:`ranking_to_ordering`."""
    o = _as_perm(ordering, "ordering")
    out = [0] * len(o)
    for rank, item in enumerate(o, start=1):
        out[item - 1] = rank
    return tuple(out)


def forward_order(k: int) -> tuple[int, ...]:
    return tuple(range(1, k + 1))


def backward_order(k: int) -> tuple[int, ...]:
    return tuple(range(k, 0, -1))


@dataclass(frozen=True)
class TopBottomCode:
    """Binary top/bottom flags ``w`` with the running counters ``f`` and ``b``.

    ``f[t]`` counts top ranks handed out before stage ``t``; ``b[t]`` counts
    bottom ranks. All three tuples have length K.
    """

    w: tuple[int, ...]
    f: tuple[int, ...]
    b: tuple[int, ...]

    @classmethod
    def from_w(cls, w: Sequence[int]) -> "TopBottomCode":
        w = tuple(int(x) for x in w)
        if not w:
            raise ValueError("empty code")
        if any(x not in (0, 1) for x in w):
            raise ValueError(f"code flags must be 0/1, got {w}")
        if w[-1] != 1:
            raise ValueError("the final flag W_K must be 1")
        f, b = [], []
        tops = 0
        for t, flag in enumerate(w):
            f.append(tops)
            b.append(t - tops)
            tops += flag
        return cls(w, tuple(f), tuple(b))

    @property
    def bits(self) -> str:
        return "".join(str(x) for x in self.w)


def rho_to_code(rho: Sequence[int]) -> TopBottomCode:
    """Encode a constrained reference order as its top-or-bottom code.

    Raises ValueError if ``rho`` leaves the restricted space at some stage.

    >>> rho_to_code((5, 1, 4, 3, 2)).w
    (0, 1, 0, 0, 1)
    """
    rho = _as_perm(rho, "reference order")
    lo, hi = 1, len(rho)
    w = []
    for t, rank in enumerate(rho, start=1):
        if rank == lo:
            w.append(1)
            lo += 1
        elif rank == hi:
            w.append(0)
            hi -= 1
        else:
            raise ValueError(
                f"reference order {rho} violates the top-or-bottom constraint at stage {t} "
                f"(rank {rank} is neither {lo} nor {hi})"
            )
    return TopBottomCode.from_w(w)


def code_to_rho(code: TopBottomCode | Sequence[int]) -> tuple[int, ...]:
    """Decode a top-or-bottom code (or a bare ``W`` sequence) into ``rho``."""
    if not isinstance(code, TopBottomCode):
        code = TopBottomCode.from_w(code)
    k = len(code.w)
    # top rank available at stage t is F_t + 1, bottom rank is K - B_t
    return tuple(f + 1 if w else k - b for w, f, b in zip(code.w, code.f, code.b))


def is_constrained(rho: Sequence[int]) -> bool:
    """True iff every stage of ``rho`` takes the min or the max of the free ranks."""
    rho = _as_perm(rho, "reference order")
    lo, hi = 1, len(rho)
    for rank in rho:
        if rank == lo:
            lo += 1
        elif rank == hi:
            hi -= 1
        else:
            return False
    return True


@dataclass(frozen=True)
class ReferenceOrder:
    """A member of the restricted reference-order space.

    Ordering and hashing follow the ``W`` code read from stage 1 to K, which
    is also the enumeration order of :func:`enumerate_constrained_space`.
    """

    rho: tuple[int, ...]
    code: TopBottomCode = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        rho = _as_perm(self.rho, "reference order")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "code", rho_to_code(rho))

    @classmethod
    def from_code(cls, code: TopBottomCode | Sequence[int]) -> "ReferenceOrder":
        return cls(code_to_rho(code))

    @classmethod
    def from_bits(cls, bits: str) -> "ReferenceOrder":
        return cls(code_to_rho([int(ch) for ch in bits.strip()]))

    @property
    def K(self) -> int:
        return len(self.rho)

    @property
    def bits(self) -> str:
        return self.code.bits

    @property
    def index(self) -> int:
        """Position of this order in the W-lexicographic enumeration."""
        return int(self.bits[:-1] or "0", 2)

    def __lt__(self, other: "ReferenceOrder") -> bool:
        return (self.K, self.bits) < (other.K, other.bits)

    def __iter__(self):
        return iter(self.rho)

    def __len__(self) -> int:
        return len(self.rho)


def space_size(k: int) -> int:
    return 2 ** (k - 1)


def enumerate_constrained_space(k: int, cap: int = MAX_ENUMERATION_K) -> list[ReferenceOrder]:
    """All ``2**(K-1)`` constrained reference orders, lexicographic in ``W``."""
    if k < 1:
        raise ValueError("K must be at least 1")
    if k > cap:
        raise ValueError(
            f"refusing to enumerate 2**{k - 1} reference orders; K={k} exceeds the cap {cap}"
        )
    return [ReferenceOrder.from_code(bits + (1,)) for bits in product((0, 1), repeat=k - 1)]


def rho_from_index(index: int, k: int) -> tuple[int, ...]:
    """Reference order at ``index`` of the W-lexicographic enumeration."""
    if not 0 <= index < space_size(k):
        raise ValueError(f"index {index} out of range for K={k}")
    bits = format(index, f"0{k - 1}b") if k > 1 else ""
    return code_to_rho([int(ch) for ch in bits] + [1])


def applicable_swaps(rho: Sequence[int]) -> list[int]:
    """Stages ``t`` whose adjacent swap ``(t, t+1)`` stays in the restricted space.

    A swap is admissible exactly when stages t and t+1 make opposite
    top/bottom choices, or when they are the last two stages.
    """
    w = rho_to_code(rho).w
    k = len(w)
    if k < 2:
        return []
    return [t for t in range(1, k) if t == k - 1 or w[t - 1] != w[t]]


def swap_adjacent(rho: Sequence[int], t: int) -> tuple[int, ...]:
    """Exchange stages ``t`` and ``t+1`` (1-based)."""
    out = list(rho)
    out[t - 1], out[t] = out[t], out[t - 1]
    return tuple(out)


def compose_eta(ordering: Sequence[int], rho: Sequence[int]) -> tuple[int, ...]:
    """Items in order of selection: stage t picks the item holding rank ``rho[t]``."""
    o = _as_perm(ordering, "ordering")
    r = _as_perm(rho, "reference order")
    if len(o) != len(r):
        raise ValueError(f"ordering has K={len(o)} but reference order has K={len(r)}")
    return tuple(o[rank - 1] for rank in r)


def random_reference_order(k: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform draw from the restricted space via fair code bits."""
    bits = rng.integers(0, 2, size=k - 1).tolist()
    return code_to_rho(bits + [1])
