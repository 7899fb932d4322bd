"""Exact uniform sampling of braids of a given length, random walks, and prefixes of the measure at infinity."""
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from string import Template
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.stats as ss
from more_itertools import divide

from braidforge._utils import RNG_ALGORITHM, ComputationGuardError, resolve_seed
from braidforge.automaton import SuffixTable, build_suffix_table
from braidforge.measures import (
    ChainSpec,
    chain_at_infinity,
    cylinder_probability,
    delta_count_law,
    total_variation,
)
from braidforge.monoid import MonoidSpec, SimpleBraid, garside, unit
from braidforge.normal_form import (
    Braid,
    GeneratorWord,
    braid_from_factors,
    normalize,
    unit_braid,
)

__all__ = [
    "RngSeed",
    "SuffixTable",
    "build_suffix_table",
    "sample_uniform",
    "sample_walk",
    "sample_infinite_prefix",
    "sample_batch",
    "delta_count_statistics",
    "convergence_statistics",
    "exact_first_factor_law",
    "exact_uniform_law",
    "exact_walk_law",
]

LOGGER = logging.getLogger(__name__)

SAMPLE_COUNT_ERROR = Template("Statistics need at least $minimum samples, got $count.")
PREFIX_LENGTH_ERROR = "Prefix length j must be at least 1."
SAMPLE_KIND_ERROR = Template('Unknown sample kind "$kind"; use uniform, walk or infinite.')
CONVERGENCE_ERROR = Template(
    "Total variation at k = $last ($tv_last) exceeds k = $first ($tv_first) plus allowance $allowance."
)
MIN_STATISTICS_SAMPLES = 10_000
# Chi-square cells are merged from the tail until each expects this many counts
MIN_EXPECTED_COUNT = 5


@dataclass(frozen=True)
class RngSeed:
    """A 64-bit seed for the PCG64 generator; workers draw from spawned child sequences."""

    seed: int
    algorithm: str = field(default=RNG_ALGORITHM)

    def generator(self, worker: Optional[int] = None) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed)
        if worker is not None:
            sequence = sequence.spawn(worker + 1)[worker]
        return np.random.Generator(np.random.PCG64(sequence))


SeedLike = Union[RngSeed, int, None]


def _as_seed(seed: SeedLike) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    return RngSeed(resolve_seed(seed))


def _uniform_below(rng: np.random.Generator, bound: int) -> int:
    """Exactly uniform integer in [0, bound) for arbitrarily large bounds, by rejection."""
    bits = (bound - 1).bit_length()
    if bits == 0:
        return 0
    words = -(-bits // 64)
    while True:
        value = 0
        for word in rng.bit_generator.random_raw(size=words):
            value = value << 64 | int(word)
        value >>= words * 64 - bits
        if value < bound:
            return value


def _weighted_index(rng: np.random.Generator, weights: Sequence[int]) -> int:
    target = _uniform_below(rng, sum(weights))
    for index, weight in enumerate(weights):
        if target < weight:
            return index
        target -= weight
    raise AssertionError("weights exhausted")


def _draw_uniform(table: SuffixTable, k: int, rng: np.random.Generator) -> Braid:
    if k == 0:
        return unit_braid(table.spec)
    index = _weighted_index(rng, table.first_factor_weights(k))
    factors = [table.states[index]]
    remaining = k - factors[0].length
    while remaining > 0:
        successors = table.follows[index]
        weights = [
            table.counts[y][remaining - table.states[y].length]
            if table.states[y].length <= remaining
            else 0
            for y in successors
        ]
        index = successors[_weighted_index(rng, weights)]
        factors.append(table.states[index])
        remaining -= table.states[index].length
    return braid_from_factors(table.spec, factors)


def sample_uniform(
    spec: MonoidSpec, k: int, seed: SeedLike = None, table: Optional[SuffixTable] = None
) -> Braid:
    """Draws a braid uniformly among the λ(k) braids of length k.

    Args:
        spec: the monoid.
        k: braid length.
        seed: seed; None falls back to BRAIDFORGE_SEED.
        table: suffix counts with horizon at least k, built when absent.

    Returns:
        Braid: in normal form by construction.
    """
    if table is None or table.k < k:
        table = build_suffix_table(spec, k)
    return _draw_uniform(table, k, _as_seed(seed).generator())


def _draw_walk(spec: MonoidSpec, k: int, rng: np.random.Generator) -> Braid:
    letters = rng.integers(0, len(spec.generators), size=k)
    return normalize(GeneratorWord(spec, tuple(spec.generators[i] for i in letters)))


def sample_walk(spec: MonoidSpec, k: int, seed: SeedLike = None) -> Braid:
    """Normal form of k independent uniform generators. This is not the uniform law on length k."""
    return _draw_walk(spec, k, _as_seed(seed).generator())


def _draw_prefix(chain: ChainSpec, j: int, rng: np.random.Generator) -> Tuple[SimpleBraid, ...]:
    initial = np.asarray(chain.initial, dtype=float)
    transition = np.asarray(chain.transition, dtype=float)
    index = rng.choice(len(chain.states), p=initial / initial.sum())
    path = [index]
    for _ in range(j - 1):
        row = transition[path[-1]]
        path.append(rng.choice(len(chain.states), p=row / row.sum()))
    return tuple(chain.states[i] for i in path)


def sample_infinite_prefix(
    chain: ChainSpec, j: int, seed: SeedLike = None
) -> Tuple[SimpleBraid, ...]:
    """First j factors of a braid drawn from the chain: X_1 ~ h, then steps through P."""
    if j < 1:
        raise ValueError(PREFIX_LENGTH_ERROR)
    return _draw_prefix(chain, j, _as_seed(seed).generator())


def _run_batch(kind: str, spec: MonoidSpec, count: int, length: int, source, rng) -> List[Any]:
    if kind == "uniform":
        return [_draw_uniform(source, length, rng) for _ in range(count)]
    if kind == "walk":
        return [_draw_walk(spec, length, rng) for _ in range(count)]
    return [_draw_prefix(source, length, rng) for _ in range(count)]


def _batch_worker(arguments) -> List[Any]:
    kind, spec, count, length, source, seed, worker = arguments
    return _run_batch(kind, spec, count, length, source, seed.generator(worker))


def sample_batch(
    kind: str,
    spec: MonoidSpec,
    count: int,
    length: int,
    seed: SeedLike = None,
    workers: int = 1,
) -> List[Any]:
    """Draws `count` samples of one kind; `length` is k for uniform/walk and j for infinite.

    With workers > 1 each worker draws from its own spawned seed sequence and
    results are concatenated in worker order, so runs are reproducible.

    Raises:
        ValueError: unknown kind.
    """
    if kind not in ("uniform", "walk", "infinite"):
        raise ValueError(SAMPLE_KIND_ERROR.substitute(kind=kind))
    seed = _as_seed(seed)
    source = None
    if kind == "uniform":
        source = build_suffix_table(spec, length)
    elif kind == "infinite":
        if length < 1:
            raise ValueError(PREFIX_LENGTH_ERROR)
        source = chain_at_infinity(spec)
    if workers <= 1:
        return _run_batch(kind, spec, count, length, source, seed.generator())
    shares = [len(list(part)) for part in divide(workers, range(count))]
    jobs = [
        (kind, spec, share, length, source, seed, worker)
        for worker, share in enumerate(shares)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_batch_worker, jobs))
    return [sample for part in results for sample in part]


def leading_delta_count(braid: Braid) -> int:
    top = garside(braid.spec)
    count = 0
    for factor in braid.factors:
        if factor != top:
            break
        count += 1
    return count


@dataclass(frozen=True)
class DeltaStatistics:
    k: int
    N: int
    seed: int
    cells: Tuple[int, ...]
    expected: Tuple[float, ...]
    chi2: float
    pvalue: float
    tv: float
    mean: float
    at_least_one: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "N": self.N,
            "seed": self.seed,
            "cells": list(self.cells),
            "expected": list(self.expected),
            "chi2": self.chi2,
            "pvalue": self.pvalue,
            "tv": self.tv,
            "mean": self.mean,
            "at_least_one": self.at_least_one,
        }


def _merge_cells(observed: List[int], expected: List[float]):
    observed, expected = list(observed), list(expected)
    while len(expected) > 1 and expected[-1] < MIN_EXPECTED_COUNT:
        LOGGER.warning(
            f"Merging chi-square cell with expected count {expected[-1]:.3g} into its neighbour"
        )
        tail_observed, tail_expected = observed.pop(), expected.pop()
        observed[-1] += tail_observed
        expected[-1] += tail_expected
    return observed, expected


def delta_count_statistics(
    spec: MonoidSpec, k: int, N: int, seed: SeedLike = None
) -> DeltaStatistics:
    """Empirical law of the number of leading Δ factors against the geometric limit.

    Cells are T = 0, T = 1 and T >= 2; tail cells are merged while they expect fewer than 5 counts.

    Raises:
        ValueError: fewer than 10 000 samples.
    """
    if N < MIN_STATISTICS_SAMPLES:
        raise ValueError(SAMPLE_COUNT_ERROR.substitute(minimum=MIN_STATISTICS_SAMPLES, count=N))
    seed = _as_seed(seed)
    table = build_suffix_table(spec, k)
    rng = seed.generator()
    counts = [leading_delta_count(_draw_uniform(table, k, rng)) for _ in range(N)]
    tally = Counter(min(count, 2) for count in counts)
    observed = [tally[0], tally[1], tally[2]]
    law = delta_count_law(spec)
    probabilities = law.cell_probabilities()
    merged_observed, merged_expected = _merge_cells(
        observed, [N * probability for probability in probabilities]
    )
    if len(merged_observed) > 1:
        chi2, pvalue = ss.chisquare(merged_observed, merged_expected)
    else:
        chi2, pvalue = 0.0, 1.0
    return DeltaStatistics(
        k=k,
        N=N,
        seed=seed.seed,
        cells=tuple(observed),
        expected=tuple(N * probability for probability in probabilities),
        chi2=float(chi2),
        pvalue=float(pvalue),
        tv=total_variation(np.array(observed) / N, np.array(probabilities)),
        mean=float(np.mean(counts)),
        at_least_one=sum(1 for count in counts if count) / N,
    )


def exact_first_factor_law(table: SuffixTable, k: int) -> Dict[SimpleBraid, Fraction]:
    """Law of the first factor under the uniform measure on length k, f(x, k - |x|)/λ(k)."""
    total = table.total(k)
    return {
        state: Fraction(weight, total)
        for state, weight in zip(table.states, table.first_factor_weights(k))
    }


@dataclass(frozen=True)
class ConvergenceStatistics:
    """Distances are total variation on the law of the first j factors."""

    k_list: Tuple[int, ...]
    j: int
    N: int
    seed: int
    tv: Tuple[float, ...]
    allowance: float
    exact_first_factor_tv: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "distance": "total variation",
            "k": list(self.k_list),
            "j": self.j,
            "N": self.N,
            "seed": self.seed,
            "tv": list(self.tv),
            "allowance": self.allowance,
            "exact_first_factor_tv": list(self.exact_first_factor_tv),
        }


def _prefix(braid: Braid, j: int) -> Tuple[SimpleBraid, ...]:
    padding = (unit(braid.spec),) * max(0, j - braid.height)
    return tuple(braid.factors[:j]) + padding


def convergence_statistics(
    spec: MonoidSpec,
    k_list: Sequence[int],
    j: int,
    N: int,
    seed: SeedLike = None,
    strict: bool = True,
) -> ConvergenceStatistics:
    """Distance between the first j factors at finite sizes and under the measure at infinity.

    Raises:
        ValueError: fewer than 10 000 samples or j < 1.
        ComputationGuardError: strict mode and the distance at the largest k exceeds the
            distance at the smallest k plus a 3σ sampling allowance.
    """
    if N < MIN_STATISTICS_SAMPLES:
        raise ValueError(SAMPLE_COUNT_ERROR.substitute(minimum=MIN_STATISTICS_SAMPLES, count=N))
    if j < 1:
        raise ValueError(PREFIX_LENGTH_ERROR)
    seed = _as_seed(seed)
    k_list = tuple(sorted(k_list))
    chain = chain_at_infinity(spec)
    table = build_suffix_table(spec, k_list[-1])
    h = {state: float(value) for state, value in zip(chain.states, chain.initial)}
    distances = []
    exact_distances = []
    allowance = 0.0
    for k in k_list:
        rng = seed.generator()
        observed = Counter(_prefix(_draw_uniform(table, k, rng), j) for _ in range(N))
        law = {prefix: float(cylinder_probability(chain, prefix)) for prefix in observed}
        distance = sum(abs(count / N - law[prefix]) for prefix, count in observed.items())
        distance += 1 - sum(law.values())
        distances.append(distance / 2)
        if k == k_list[-1]:
            allowance = 1.5 * sum(np.sqrt(p * (1 - p) / N) for p in law.values())
        first = exact_first_factor_law(table, k)
        exact_distances.append(
            0.5 * sum(abs(float(first[state]) - h.get(state, 0.0)) for state in first)
        )
    if distances[-1] > distances[0] + allowance:
        message = CONVERGENCE_ERROR.substitute(
            last=k_list[-1],
            tv_last=distances[-1],
            first=k_list[0],
            tv_first=distances[0],
            allowance=allowance,
        )
        if strict:
            raise ComputationGuardError(message)
        LOGGER.warning(message)
    return ConvergenceStatistics(
        k_list=k_list,
        j=j,
        N=N,
        seed=seed.seed,
        tv=tuple(distances),
        allowance=allowance,
        exact_first_factor_tv=tuple(exact_distances),
    )


def exact_uniform_law(spec: MonoidSpec, k: int) -> Dict[Braid, Fraction]:
    """Law induced by the sampler on braids of length k, from the suffix counts alone."""
    table = build_suffix_table(spec, k)
    if k == 0:
        return {unit_braid(spec): Fraction(1)}
    law: Dict[Braid, Fraction] = {}

    def extend(path: List[int], remaining: int, probability: Fraction):
        if remaining == 0:
            braid = braid_from_factors(spec, [table.states[i] for i in path])
            law[braid] = probability
            return
        last = path[-1]
        total = table.counts[last][remaining]
        for y in table.follows[last]:
            size = table.states[y].length
            if size <= remaining:
                weight = table.counts[y][remaining - size]
                if weight:
                    extend(path + [y], remaining - size, probability * Fraction(weight, total))

    total = table.total(k)
    for index, weight in enumerate(table.first_factor_weights(k)):
        if weight:
            extend([index], k - table.states[index].length, Fraction(weight, total))
    return law


def exact_walk_law(spec: MonoidSpec, k: int) -> Dict[Braid, Fraction]:
    """Law of the normal form of k uniform generators, by enumerating all |Σ|^k words."""
    law: Counter = Counter()
    for letters in product(spec.generators, repeat=k):
        law[normalize(GeneratorWord(spec, letters))] += 1
    total = len(spec.generators) ** k
    return {braid: Fraction(count, total) for braid, count in law.items()}
