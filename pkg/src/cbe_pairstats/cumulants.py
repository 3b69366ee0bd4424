"""Exact joint cumulants of CUE power traces and the partition combinatorics
around them.

The cumulant of ``t_{k_1}, ..., t_{k_n}`` for an ``N x N`` Haar unitary is a
signed sum over orderings of the frequencies and over compositions of
``n``.  Each term counts the integers ``u`` in ``[0, N-1]`` that stay in
``[0, N-1]`` after adding every prefix sum that ends at a composition
boundary.  That count has the closed form::

    max(0, N - max(0, P_c) - max(0, -P_c))        (maxima over the cut prefix sums P_c)

which :func:`count_lattice` implements.

Everything here is exact: lattice counts are integers and the composition
weights ``(-1)^(m-1) / (m * n_1! ... n_m!)`` are ``Fraction`` objects.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .functions import CircleSeries

__all__ = [
    "MAX_ORDER",
    "Composition",
    "SetPartition",
    "FrequencyVector",
    "compositions",
    "set_partitions",
    "count_lattice",
    "count_lattice_naive",
    "trace_cumulant",
    "g_function",
    "g_function_display",
    "moments_from_cumulants",
    "cumulants_from_moments",
    "all_cumulants_from_moments",
    "centered_product_expansion",
    "pair_stat_moment",
    "PairMomentCostError",
]

MAX_ORDER = 8
MAX_L = 6
DEFAULT_TERM_BUDGET = 5_000_000


class PairMomentCostError(ValueError):
    """The requested moment would need more terms than the configured budget."""


# ---------------------------------------------------------------------------
# small combinatorial types


@dataclass(frozen=True)
class Composition:
    parts: tuple

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if not parts or any(p < 1 for p in parts):
            raise ValueError("composition parts must be positive integers")
        object.__setattr__(self, "parts", parts)

    @property
    def total(self) -> int:
        return sum(self.parts)

    def cuts(self) -> tuple:
        """Prefix positions ``n_1, n_1 + n_2, ...`` strictly inside ``1..n-1``."""
        return tuple(itertools.accumulate(self.parts[:-1]))


@dataclass(frozen=True)
class SetPartition:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        if any(len(b) == 0 for b in blocks):
            raise ValueError("blocks must be nonempty")
        flat = [x for b in blocks for x in b]
        if len(flat) != len(set(flat)):
            raise ValueError("blocks must be disjoint")
        object.__setattr__(self, "blocks", blocks)

    def covers(self, n: int) -> bool:
        return sorted(x for b in self.blocks for x in b) == list(range(1, n + 1))

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


@dataclass(frozen=True)
class FrequencyVector:
    ks: tuple
    n_size: int

    def __post_init__(self):
        ks = tuple(int(k) for k in self.ks)
        if not ks:
            raise ValueError("at least one frequency is required")
        if len(ks) > MAX_ORDER:
            raise ValueError(f"cumulant order {len(ks)} exceeds the cap of {MAX_ORDER}")
        if int(self.n_size) < 1:
            raise ValueError("matrix size must be positive")
        object.__setattr__(self, "ks", ks)
        object.__setattr__(self, "n_size", int(self.n_size))


def compositions(n: int) -> Iterator[Composition]:
    """All ``2^(n-1)`` compositions of ``n``, in lexicographic order of cut sets."""
    for r in range(n):
        for cuts in itertools.combinations(range(1, n), r):
            bounds = (0, *cuts, n)
            yield Composition(tuple(b - a for a, b in zip(bounds, bounds[1:])))


def set_partitions(elements: Sequence, *, min_block: int = 1,
                   forbidden: Iterable[frozenset] = ()) -> Iterator[tuple]:
    """Yield set partitions of ``elements`` as tuples of tuples.

    Blocks smaller than ``min_block`` and blocks equal to one of
    ``forbidden`` are pruned during the recursion, not filtered afterwards.
    """
    elements = list(elements)
    forbidden = {frozenset(f) for f in forbidden}

    def rec(rest, blocks):
        if not rest:
            if all(len(b) >= min_block and frozenset(b) not in forbidden for b in blocks):
                yield tuple(tuple(b) for b in blocks)
            return
        # deficit: elements still needed to lift every open block to min_block
        x, tail = rest[0], rest[1:]
        deficit = sum(max(0, min_block - len(b)) for b in blocks)
        if deficit > len(rest):
            return
        for b in blocks:
            b.append(x)
            yield from rec(tail, blocks)
            b.pop()
        if deficit + min_block <= len(rest):
            blocks.append([x])
            yield from rec(tail, blocks)
            blocks.pop()

    yield from rec(elements, [])


# ---------------------------------------------------------------------------
# lattice counts and trace cumulants


def _check_composition(parts, ks):
    parts = parts.parts if isinstance(parts, Composition) else tuple(parts)
    if sum(parts) != len(ks):
        raise ValueError(f"composition {parts} does not split {len(ks)} frequencies")
    return parts


def count_lattice(parts, ks: Sequence[int], n_size: int) -> int:
    """Number of ``u`` in ``[0, N-1]`` whose shifts by the cut prefix sums stay in range."""
    parts = _check_composition(parts, ks)
    prefix = list(itertools.accumulate(int(k) for k in ks))
    sums = [prefix[c - 1] for c in itertools.accumulate(parts[:-1])]
    hi = max([0, *sums])
    lo = max([0, *(-s for s in sums)])
    return max(0, int(n_size) - hi - lo)


def count_lattice_naive(parts, ks: Sequence[int], n_size: int) -> int:
    """Brute-force loop over ``u``; the reference for :func:`count_lattice`."""
    parts = _check_composition(parts, ks)
    prefix = list(itertools.accumulate(int(k) for k in ks))
    sums = [prefix[c - 1] for c in itertools.accumulate(parts[:-1])]
    return sum(1 for u in range(n_size) if all(0 <= u + s <= n_size - 1 for s in sums))


@lru_cache(maxsize=None)
def _cut_tables(n: int):
    """Boolean masks of all cut sets over prefix positions ``1..n-1`` and their
    exact weights ``(-1)^|C| / ((|C|+1) * prod n_j!)``."""
    masks, weights = [], []
    for comp in compositions(n):
        mask = np.zeros(max(n - 1, 0), dtype=bool)
        for c in comp.cuts():
            mask[c - 1] = True
        m = len(comp.parts)
        denom = m * math.prod(math.factorial(p) for p in comp.parts)
        masks.append(mask)
        weights.append(Fraction((-1) ** (m - 1), denom))
    return np.array(masks, dtype=bool).reshape(len(masks), max(n - 1, 0)), tuple(weights)


@lru_cache(maxsize=4096)
def _arrangement_prefixes(sorted_ks: tuple):
    """Prefix sums ``P_1..P_{n-1}`` of every distinct ordering, with the number
    of permutations in ``S_n`` that produce it."""
    mult = math.prod(math.factorial(c) for c in Counter(sorted_ks).values())
    arrangements = sorted(set(itertools.permutations(sorted_ks)))
    arr = np.array(arrangements, dtype=np.int64).reshape(len(arrangements), len(sorted_ks))
    prefix = np.cumsum(arr, axis=1)[:, :-1]
    return prefix, mult


def _signed_sum(sorted_ks: tuple, n_size: int, weight_fn) -> Fraction:
    n = len(sorted_ks)
    masks, weights = _cut_tables(n)
    prefix, mult = _arrangement_prefixes(sorted_ks)
    total = Fraction(0)
    for mask, w in zip(masks, weights):
        sub = prefix[:, mask]
        if sub.shape[1] == 0:
            hi = np.zeros(prefix.shape[0], dtype=np.int64)
            lo = hi
        else:
            hi = np.maximum(sub.max(axis=1), 0)
            lo = np.maximum((-sub).max(axis=1), 0)
        total += w * (mult * int(weight_fn(hi, lo, n_size).sum()))
    return total


def _lattice_weight(hi, lo, n_size):
    return np.maximum(n_size - hi - lo, 0)


def _g_weight(hi, lo, n_size):
    return hi


def _g_two_sided_weight(hi, lo, n_size):
    return hi + lo


@lru_cache(maxsize=200_000)
def _trace_cumulant_cached(sorted_ks: tuple, n_size: int) -> Fraction:
    if sum(sorted_ks) != 0:
        return Fraction(0)
    if len(sorted_ks) == 1:
        return Fraction(n_size)
    return _signed_sum(sorted_ks, n_size, _lattice_weight)


def trace_cumulant(ks, n_size: int | None = None) -> Fraction:
    """Joint cumulant of ``t_{k_1}, ..., t_{k_n}`` for CUE(N), as an exact rational.

    Accepts either a :class:`FrequencyVector` or a frequency sequence and ``N``.
    """
    q = ks if isinstance(ks, FrequencyVector) else FrequencyVector(tuple(ks), n_size)
    return _trace_cumulant_cached(tuple(sorted(q.ks)), q.n_size)


def _check_g_input(ks):
    ks = tuple(int(k) for k in ks)
    if not ks:
        raise ValueError("at least one frequency is required")
    if len(ks) > MAX_ORDER:
        raise ValueError(f"order {len(ks)} exceeds the cap of {MAX_ORDER}")
    if sum(ks) != 0:
        raise ValueError("the frequencies must sum to zero")
    return tuple(sorted(ks))


def g_function_display(ks: Sequence[int]) -> Fraction:
    """Signed composition/permutation sum weighted by ``max(0, cut prefix sums)``.

    This is the plain one-sided sum; for two frequencies it equals ``-|k|/2``.
    """
    return _signed_sum(_check_g_input(ks), 0, _g_weight)


def g_function(ks: Sequence[int]) -> Fraction:
    """Two-sided, sign-flipped version of :func:`g_function_display`.

    Weights are ``max(0, P) + max(0, -P)`` over the cut prefix sums and the
    overall sign is negated.  When ``sum |k_i| <= N`` no lattice count is
    clipped, the composition weights cancel the ``N`` term, and the trace
    cumulant equals ``G`` itself.  So ``G(k, -k) = |k|`` and ``G`` vanishes
    for more than two frequencies.
    """
    return -_signed_sum(_check_g_input(ks), 0, _g_two_sided_weight)


# ---------------------------------------------------------------------------
# moments and cumulants over set partitions

Number = Union[int, float, Fraction]
BlockValues = Union[Mapping[tuple, Number], Callable[[tuple], Number]]


def _lookup(values: BlockValues):
    if callable(values):
        return lambda block: values(tuple(block))
    return lambda block: values[tuple(sorted(block))]


def moments_from_cumulants(kappas: BlockValues, n: int, elements: Sequence[int] | None = None):
    """``E[X_1 ... X_n] = sum over partitions pi of prod_{B in pi} kappa(B)``.

    ``kappas`` maps a sorted tuple of 1-based indices to the joint cumulant of
    those variables (or is a callable doing the same).
    """
    get = _lookup(kappas)
    elements = list(range(1, n + 1)) if elements is None else list(elements)
    terms = [math.prod(get(b) for b in pi) for pi in set_partitions(elements)]
    return _exact_or_fsum(terms)


def cumulants_from_moments(moments: BlockValues, n: int, elements: Sequence[int] | None = None):
    """Joint cumulant from joint moments by the partition Möbius inversion
    ``sum_pi (|pi|-1)! (-1)^(|pi|-1) prod_{B in pi} m(B)``."""
    get = _lookup(moments)
    elements = list(range(1, n + 1)) if elements is None else list(elements)
    terms = []
    for pi in set_partitions(elements):
        r = len(pi)
        terms.append((-1) ** (r - 1) * math.factorial(r - 1) * math.prod(get(b) for b in pi))
    return _exact_or_fsum(terms)


def all_cumulants_from_moments(moments: BlockValues, n: int) -> dict:
    """Cumulants of every nonempty subset of ``{1..n}``."""
    out = {}
    for r in range(1, n + 1):
        for sub in itertools.combinations(range(1, n + 1), r):
            out[sub] = cumulants_from_moments(moments, r, elements=sub)
    return out


def _exact_or_fsum(terms):
    if all(isinstance(t, (int, Fraction)) for t in terms):
        return sum(terms, Fraction(0)) if any(isinstance(t, Fraction) for t in terms) else sum(terms)
    return math.fsum(float(t) for t in terms)


@lru_cache(maxsize=None)
def _centered_partitions(l: int) -> tuple:
    forbidden = [frozenset((2 * i - 1, 2 * i)) for i in range(1, l + 1)]
    return tuple(set_partitions(range(1, 2 * l + 1), min_block=2, forbidden=forbidden))


def centered_product_expansion(l: int) -> list:
    """Partitions of ``{1..2l}`` with no singletons and no block ``{2i-1, 2i}``.

    They index the expansion of ``E prod_i (X_{2i-1} X_{2i} - E X_{2i-1} X_{2i})``
    for centred ``X`` into products of joint cumulants.
    """
    if int(l) != l or not 1 <= l <= MAX_L:
        raise ValueError(f"l must be an integer in 1..{MAX_L}")
    return [SetPartition(p) for p in _centered_partitions(int(l))]


# ---------------------------------------------------------------------------
# exact centred moments of the pair statistic


def pair_stat_moment(series: CircleSeries, n_size: int, l: int,
                     term_budget: int = DEFAULT_TERM_BUDGET) -> float:
    """Exact ``l``-th central moment of ``S_N`` under CUE(N), for ``l`` in {2, 3}.

    ``S_N - E S_N = 2 sum_{k>=1} c_k (|t_k|^2 - E|t_k|^2)``.  Expanding the
    ``l``-fold product with :func:`centered_product_expansion` gives a sum
    over frequency tuples of products of trace cumulants, where slot
    ``2i-1`` carries ``+k_i`` and slot ``2i`` carries ``-k_i``.  Tuples whose
    block sums do not all vanish contribute nothing and are skipped.
    """
    if l not in (2, 3):
        raise ValueError("only l = 2 and l = 3 are supported")
    n_size = int(n_size)
    support = [int(k) for k in series.support()]
    c = {k: float(series.coeffs[k]) for k in support}
    partitions = _centered_partitions(l)
    cost = len(support) ** l * len(partitions)
    if cost > term_budget:
        raise PairMomentCostError(
            f"{cost} terms exceed the budget of {term_budget}; shrink the support or raise the budget"
        )
    # slot j (1-based) belongs to frequency index (j+1)//2 with sign + for odd j
    slot_freq = [(j + 1) // 2 - 1 for j in range(1, 2 * l + 1)]
    slot_sign = [1 if j % 2 == 1 else -1 for j in range(1, 2 * l + 1)]
    terms = []
    for tup in itertools.product(support, repeat=l):
        weight = math.prod(c[k] for k in tup)
        if weight == 0.0:
            continue
        inner = Fraction(0)
        for pi in partitions:
            prod = Fraction(1)
            for block in pi:
                ks = tuple(slot_sign[j - 1] * tup[slot_freq[j - 1]] for j in block)
                if sum(ks) != 0:
                    prod = Fraction(0)
                    break
                prod *= _trace_cumulant_cached(tuple(sorted(ks)), n_size)
                if prod == 0:
                    break
            inner += prod
        if inner:
            terms.append(weight * float(inner))
    return (2.0 ** l) * math.fsum(terms)
