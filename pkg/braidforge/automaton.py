"""The finite automaton (S_n, →) recognising normal sequences, and the suffix counts built on it."""
import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache
from string import Template
from typing import Dict, List, Tuple

import numpy as np

from braidforge._utils import SUFFIX_TABLE_MAX_SIMPLES, ComputationGuardError
from braidforge.monoid import (
    MonoidSpec,
    SimpleBraid,
    enumerate_simples,
    left_set,
    right_set,
)

LOGGER = logging.getLogger(__name__)

SUFFIX_TABLE_CAP_ERROR = Template(
    "Suffix tables are limited to $cap simples; $spec has $size."
)
HORIZON_ERROR = "Horizon k must be a non-negative integer."
HORIZON_EXCEEDED_ERROR = Template("Length $m exceeds the table horizon $k.")


@dataclass(frozen=True)
class Automaton:
    """Arrow relation over the simples, in `enumerate_simples` order."""

    spec: MonoidSpec
    states: Tuple[SimpleBraid, ...]
    adjacency: np.ndarray

    @cached_property
    def index(self) -> Dict[SimpleBraid, int]:
        return {state: k for k, state in enumerate(self.states)}

    @cached_property
    def follows(self) -> Tuple[Tuple[int, ...], ...]:
        """For each state, the non-unit states it points to."""
        return tuple(
            tuple(int(j) for j in np.flatnonzero(row) if j != 0) for row in self.adjacency
        )


def _generator_matrix(spec: MonoidSpec, states, which) -> np.ndarray:
    matrix = np.zeros((len(states), len(spec.generators)), dtype=np.int8)
    for row, state in enumerate(states):
        mask = which(state).mask
        for column in range(len(spec.generators)):
            matrix[row, column] = mask >> column & 1
    return matrix


@lru_cache(maxsize=None)
def build_automaton(spec: MonoidSpec) -> Automaton:
    """Builds the arrow relation x → y ⟺ L(y) ⊆ R(x) as a boolean matrix."""
    states = tuple(enumerate_simples(spec))
    lefts = _generator_matrix(spec, states, left_set)
    rights = _generator_matrix(spec, states, right_set)
    # violations[x, y] counts generators in L(y) outside R(x)
    violations = (1 - rights) @ lefts.T
    LOGGER.info(f"Built the arrow relation of {spec} over {len(states)} simples")
    return Automaton(spec=spec, states=states, adjacency=violations == 0)


@dataclass(frozen=True)
class SuffixTable:
    """Counts f(x, m) of normal continuations of total length m after a last factor x.

    Rows follow `states`, the non-unit simples in enumeration order.
    """

    spec: MonoidSpec
    k: int
    states: Tuple[SimpleBraid, ...]
    follows: Tuple[Tuple[int, ...], ...]
    counts: Tuple[Tuple[int, ...], ...]

    @cached_property
    def index(self) -> Dict[SimpleBraid, int]:
        return {state: k for k, state in enumerate(self.states)}

    def count(self, x: SimpleBraid, m: int) -> int:
        if not 0 <= m <= self.k:
            raise ValueError(HORIZON_EXCEEDED_ERROR.substitute(m=m, k=self.k))
        return self.counts[self.index[x]][m]

    def first_factor_weights(self, m: int) -> List[int]:
        """f(x, m - |x|) for every state x, zero when |x| > m."""
        if not 0 <= m <= self.k:
            raise ValueError(HORIZON_EXCEEDED_ERROR.substitute(m=m, k=self.k))
        return [
            row[m - state.length] if state.length <= m else 0
            for state, row in zip(self.states, self.counts)
        ]

    def total(self, m: int) -> int:
        """λ(m), the number of braids of length m."""
        if m == 0:
            return 1
        return sum(self.first_factor_weights(m))

    def totals(self) -> List[int]:
        return [self.total(m) for m in range(self.k + 1)]


def build_suffix_table(spec: MonoidSpec, k: int) -> SuffixTable:
    """Fills f(x, m) for m = 0..k by increasing m.

    Args:
        spec: the monoid.
        k: horizon.

    Returns:
        SuffixTable: exact integer counts.

    Raises:
        ValueError: k is negative.
        ComputationGuardError: the monoid has more simples than a table can hold.
    """
    if k < 0:
        raise ValueError(HORIZON_ERROR)
    size = len(enumerate_simples(spec))
    if size > SUFFIX_TABLE_MAX_SIMPLES:
        raise ComputationGuardError(
            SUFFIX_TABLE_CAP_ERROR.substitute(
                cap=SUFFIX_TABLE_MAX_SIMPLES, spec=spec, size=size
            )
        )
    automaton = build_automaton(spec)
    # drop the unit, which is state 0
    states = automaton.states[1:]
    follows = tuple(tuple(j - 1 for j in automaton.follows[i]) for i in range(1, size))
    lengths = [state.length for state in states]
    counts: List[List[int]] = [[1] for _ in states]
    for m in range(1, k + 1):
        for row, successors in zip(counts, follows):
            row.append(
                sum(counts[y][m - lengths[y]] for y in successors if lengths[y] <= m)
            )
    if size * (k + 1) > 10**6:
        LOGGER.info(f"Suffix table for {spec} holds {size * (k + 1)} cells")
    return SuffixTable(
        spec=spec,
        k=k,
        states=states,
        follows=follows,
        counts=tuple(tuple(row) for row in counts),
    )
