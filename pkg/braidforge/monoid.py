"""Simple braids of the positive braid monoid (artin) and of the dual braid monoid.

Artin simples are permutations in one-line form; right multiplication by
``s<i>`` swaps the entries at positions ``i`` and ``i+1``. Dual simples are
non-crossing partitions stored as block-assignment arrays, each element
labelled by the minimum of its block.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache, reduce
from itertools import combinations, permutations
from math import comb
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from more_itertools import pairwise

from braidforge._utils import (
    ARTIN_MAX_STRANDS,
    DUAL_MAX_STRANDS,
    STRAND_COUNT_ERROR,
    ComputationGuardError,
)

LOGGER = logging.getLogger(__name__)

NOT_LEFT_DIVISOR_ERROR = "Generator does not left-divide the simple braid."
FLAVOR_MISMATCH_ERROR = "Simple braids belong to different monoids."
INVALID_PERMUTATION_ERROR = "Encoding is not a permutation of 1..n."
CROSSING_PARTITION_ERROR = "Blocks do not form a non-crossing partition of 1..n."
UNKNOWN_GENERATOR_ERROR = "Generator is not part of the monoid alphabet."


class Flavor(Enum):
    ARTIN = "artin"
    DUAL = "dual"


@dataclass(frozen=True, order=True)
class GeneratorId:
    """A generator: ``s<i>`` is stored as (i, i+1), the dual ``(ij)`` as (i, j) with i < j."""

    i: int
    j: int

    def label(self, flavor: Flavor) -> str:
        if flavor is Flavor.ARTIN:
            return f"s{self.i}"
        if self.j < 10:
            return f"({self.i}{self.j})"
        return f"({self.i},{self.j})"


@dataclass(frozen=True)
class MonoidSpec:
    n: int
    flavor: Flavor

    def __post_init__(self):
        object.__setattr__(self, "flavor", Flavor(self.flavor))
        cap = ARTIN_MAX_STRANDS if self.flavor is Flavor.ARTIN else DUAL_MAX_STRANDS
        message = STRAND_COUNT_ERROR.substitute(
            n=self.n, cap=cap, flavor=self.flavor.value
        )
        if self.n < 2:
            raise ValueError(message)
        if self.n > cap:
            raise ComputationGuardError(message)

    @cached_property
    def generators(self) -> Tuple[GeneratorId, ...]:
        if self.flavor is Flavor.ARTIN:
            return tuple(GeneratorId(i, i + 1) for i in range(1, self.n))
        return tuple(GeneratorId(i, j) for i, j in combinations(range(1, self.n + 1), 2))

    @cached_property
    def generator_index(self) -> Dict[GeneratorId, int]:
        return {g: k for k, g in enumerate(self.generators)}

    @property
    def is_artin(self) -> bool:
        return self.flavor is Flavor.ARTIN

    @property
    def garside_length(self) -> int:
        """|Δ|: n(n-1)/2 for artin, n-1 for dual."""
        return self.n * (self.n - 1) // 2 if self.is_artin else self.n - 1

    def index_of(self, generator: GeneratorId) -> int:
        try:
            return self.generator_index[generator]
        except KeyError as e:
            e.add_note(UNKNOWN_GENERATOR_ERROR)
            raise

    def __str__(self) -> str:
        return f"{self.flavor.value}(n={self.n})"


@dataclass(frozen=True)
class GeneratorSet:
    """Subset of the alphabet as a bitmask; bit k is ``spec.generators[k]``."""

    spec: MonoidSpec
    mask: int = 0

    @classmethod
    def from_generators(
        cls, spec: MonoidSpec, generators: Iterable[GeneratorId]
    ) -> "GeneratorSet":
        mask = 0
        for generator in generators:
            mask |= 1 << spec.index_of(generator)
        return cls(spec, mask)

    @classmethod
    def full(cls, spec: MonoidSpec) -> "GeneratorSet":
        return cls(spec, (1 << len(spec.generators)) - 1)

    def __iter__(self) -> Iterator[GeneratorId]:
        for k, generator in enumerate(self.spec.generators):
            if self.mask >> k & 1:
                yield generator

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, generator: GeneratorId) -> bool:
        return bool(self.mask >> self.spec.index_of(generator) & 1)

    def __or__(self, other: "GeneratorSet") -> "GeneratorSet":
        return GeneratorSet(self.spec, self.mask | other.mask)

    def __and__(self, other: "GeneratorSet") -> "GeneratorSet":
        return GeneratorSet(self.spec, self.mask & other.mask)

    def __sub__(self, other: "GeneratorSet") -> "GeneratorSet":
        return GeneratorSet(self.spec, self.mask & ~other.mask)

    def issubset(self, other: "GeneratorSet") -> bool:
        return self.mask & ~other.mask == 0

    def labels(self) -> List[str]:
        return [g.label(self.spec.flavor) for g in self]


@dataclass(frozen=True)
class SimpleBraid:
    flavor: Flavor
    rep: Tuple[int, ...]

    @classmethod
    def from_permutation(cls, permutation: Sequence[int]) -> "SimpleBraid":
        rep = tuple(permutation)
        if sorted(rep) != list(range(1, len(rep) + 1)):
            raise ValueError(INVALID_PERMUTATION_ERROR)
        return cls(Flavor.ARTIN, rep)

    @classmethod
    def from_blocks(cls, n: int, blocks: Iterable[Iterable[int]]) -> "SimpleBraid":
        """Builds a dual simple from its blocks; singletons may be omitted."""
        rep = list(range(1, n + 1))
        seen = set()
        for block in blocks:
            block = sorted(block)
            if not block or block[0] < 1 or block[-1] > n or seen.intersection(block):
                raise ValueError(CROSSING_PARTITION_ERROR)
            seen.update(block)
            for element in block:
                rep[element - 1] = block[0]
        simple = cls(Flavor.DUAL, tuple(rep))
        if not _is_noncrossing(simple.blocks):
            raise ValueError(CROSSING_PARTITION_ERROR)
        return simple

    @property
    def n(self) -> int:
        return len(self.rep)

    @cached_property
    def spec(self) -> MonoidSpec:
        return MonoidSpec(self.n, self.flavor)

    @cached_property
    def length(self) -> int:
        if self.flavor is Flavor.ARTIN:
            return sum(1 for a, b in combinations(self.rep, 2) if a > b)
        return self.n - len(set(self.rep))

    @cached_property
    def blocks(self) -> Tuple[Tuple[int, ...], ...]:
        """Dual blocks in ascending order of their minimum."""
        grouped: Dict[int, List[int]] = {}
        for element, label in enumerate(self.rep, start=1):
            grouped.setdefault(label, []).append(element)
        return tuple(tuple(grouped[label]) for label in sorted(grouped))

    @property
    def is_unit(self) -> bool:
        return self.length == 0

    def encoding(self) -> List[int]:
        return list(self.rep)

    def __str__(self) -> str:
        return label(self)


def _is_noncrossing(blocks: Sequence[Sequence[int]]) -> bool:
    return not any(_crossing(a, b) for a, b in combinations(blocks, 2))


def _crossing(first: Sequence[int], second: Sequence[int]) -> bool:
    """True when a < b < c < d exist with a, c in one block and b, d in the other."""
    marks = sorted([(e, 0) for e in first] + [(e, 1) for e in second])
    runs = 1 + sum(1 for (_, a), (_, b) in pairwise(marks) if a != b)
    return runs >= 4


def unit(spec: MonoidSpec) -> SimpleBraid:
    return SimpleBraid(spec.flavor, tuple(range(1, spec.n + 1)))


def garside(spec: MonoidSpec) -> SimpleBraid:
    """Δ: the reversed permutation for artin, the single block for dual."""
    if spec.is_artin:
        return SimpleBraid(spec.flavor, tuple(range(spec.n, 0, -1)))
    return SimpleBraid(spec.flavor, (1,) * spec.n)


@lru_cache(maxsize=None)
def _noncrossing_partitions(lo: int, hi: int) -> Tuple[Tuple[Tuple[int, ...], ...], ...]:
    # The block of lo ends at j; [lo, j-1] and (j, hi] are filled independently.
    if lo > hi:
        return ((),)
    result = []
    for j in range(lo, hi + 1):
        if j == lo:
            heads = (((lo,),),)
        else:
            heads = tuple(
                tuple(block + (j,) if block[0] == lo else block for block in partition)
                for partition in _noncrossing_partitions(lo, j - 1)
            )
        for head in heads:
            for tail in _noncrossing_partitions(j + 1, hi):
                result.append(head + tail)
    return tuple(result)


def _sort_key(spec: MonoidSpec):
    top = garside(spec)

    def key(x: SimpleBraid):
        return (x == top, x.length, x.rep)

    return key


@lru_cache(maxsize=None)
def _enumerate(spec: MonoidSpec) -> Tuple[SimpleBraid, ...]:
    if spec.is_artin:
        simples = [SimpleBraid(spec.flavor, p) for p in permutations(range(1, spec.n + 1))]
    else:
        simples = []
        for partition in _noncrossing_partitions(1, spec.n):
            rep = [0] * spec.n
            for block in partition:
                for element in block:
                    rep[element - 1] = block[0]
            simples.append(SimpleBraid(spec.flavor, tuple(rep)))
    simples.sort(key=_sort_key(spec))
    LOGGER.debug(f"Enumerated {len(simples)} simples of {spec}")
    return tuple(simples)


def enumerate_simples(spec: MonoidSpec) -> List[SimpleBraid]:
    """All simple braids: unit first, Δ last, the rest by (length, encoding).

    Args:
        spec: the monoid; its constructor already enforced the strand caps.

    Returns:
        list: n! permutations (artin) or Catalan(n) non-crossing partitions (dual).
    """
    return list(_enumerate(spec))


@lru_cache(maxsize=None)
def _left_mask(x: SimpleBraid) -> int:
    spec = x.spec
    mask = 0
    if x.flavor is Flavor.ARTIN:
        position = {value: k for k, value in enumerate(x.rep)}
        for k, g in enumerate(spec.generators):
            if position[g.j] < position[g.i]:
                mask |= 1 << k
    else:
        for k, g in enumerate(spec.generators):
            if x.rep[g.i - 1] == x.rep[g.j - 1]:
                mask |= 1 << k
    return mask


@lru_cache(maxsize=None)
def _right_mask(x: SimpleBraid) -> int:
    spec = x.spec
    mask = 0
    if x.flavor is Flavor.ARTIN:
        for k, g in enumerate(spec.generators):
            if x.rep[g.i - 1] > x.rep[g.j - 1]:
                mask |= 1 << k
        return mask
    blocks = [b for b in x.blocks if len(b) > 1]
    for k, g in enumerate(spec.generators):
        for block in blocks:
            inside = any(g.i < e <= g.j for e in block)
            outside = any(e <= g.i or e > g.j for e in block)
            if inside and outside:
                mask |= 1 << k
                break
    return mask


def left_set(x: SimpleBraid) -> GeneratorSet:
    """L(x): the generators left-dividing x."""
    return GeneratorSet(x.spec, _left_mask(x))


def right_set(x: SimpleBraid) -> GeneratorSet:
    """R(x): the generators s with x·s not simple."""
    return GeneratorSet(x.spec, _right_mask(x))


def arrow(x: SimpleBraid, y: SimpleBraid) -> bool:
    """x → y, i.e. R(x) contains L(y)."""
    return _left_mask(y) & ~_right_mask(x) == 0


def simple_product(x: SimpleBraid, generator: GeneratorId) -> Optional[SimpleBraid]:
    """Returns x·generator, or None when the product is not simple."""
    if _right_mask(x) >> x.spec.index_of(generator) & 1:
        return None
    rep = list(x.rep)
    if x.flavor is Flavor.ARTIN:
        rep[generator.i - 1], rep[generator.j - 1] = rep[generator.j - 1], rep[generator.i - 1]
        return SimpleBraid(x.flavor, tuple(rep))
    first, second = rep[generator.i - 1], rep[generator.j - 1]
    merged = min(first, second)
    return SimpleBraid(
        x.flavor, tuple(merged if label in (first, second) else label for label in rep)
    )


def left_quotient_by_generator(generator: GeneratorId, x: SimpleBraid) -> SimpleBraid:
    """The simple z with generator·z = x.

    Raises:
        ValueError: generator is not in L(x).
    """
    if not _left_mask(x) >> x.spec.index_of(generator) & 1:
        raise ValueError(NOT_LEFT_DIVISOR_ERROR)
    if x.flavor is Flavor.ARTIN:
        swap = {generator.i: generator.j, generator.j: generator.i}
        return SimpleBraid(x.flavor, tuple(swap.get(v, v) for v in x.rep))
    block = next(b for b in x.blocks if generator.i in b)
    start, stop = block.index(generator.i), block.index(generator.j)
    split = block[start:stop]
    rest = block[:start] + block[stop:]
    rep = list(x.rep)
    for part in (split, rest):
        for element in part:
            rep[element - 1] = part[0]
    return SimpleBraid(x.flavor, tuple(rep))


def simple_from_word(spec: MonoidSpec, letters: Iterable[GeneratorId]) -> Optional[SimpleBraid]:
    """Multiplies letters from the unit; None as soon as the product leaves the simples."""
    current: Optional[SimpleBraid] = unit(spec)
    for letter in letters:
        current = simple_product(current, letter)
        if current is None:
            return None
    return current


def generator_simple(spec: MonoidSpec, generator: GeneratorId) -> SimpleBraid:
    return simple_product(unit(spec), generator)


def _artin_inversions(rep: Sequence[int]) -> set:
    return {(b, a) for a, b in combinations(rep, 2) if a > b}


def _artin_from_inversions(n: int, inversions: set) -> SimpleBraid:
    def precedes(u: int, v: int) -> bool:
        return (v, u) in inversions if u > v else (u, v) not in inversions

    rep = [0] * n
    for v in range(1, n + 1):
        rep[sum(1 for u in range(1, n + 1) if u != v and precedes(u, v))] = v
    return SimpleBraid(Flavor.ARTIN, tuple(rep))


def _artin_join(x: SimpleBraid, y: SimpleBraid) -> SimpleBraid:
    # (smaller, larger) pairs where the larger value comes first
    inversions = _artin_inversions(x.rep) | _artin_inversions(y.rep)
    values = range(1, x.n + 1)
    changed = True
    while changed:
        changed = False
        for a, b in list(inversions):
            for c in values:
                if (b, c) in inversions and (a, c) not in inversions:
                    inversions.add((a, c))
                    changed = True
    return _artin_from_inversions(x.n, inversions)


class _Blocks(object):
    """Union-find over 1..n, merging until the blocks are pairwise non-crossing."""

    def __init__(self, n: int):
        self.parent = list(range(n + 1))

    def find(self, element: int) -> int:
        if self.parent[element] != element:
            self.parent[element] = self.find(self.parent[element])
        return self.parent[element]

    def unite(self, first: int, second: int) -> bool:
        root_first, root_second = self.find(first), self.find(second)
        if root_first == root_second:
            return False
        self.parent[max(root_first, root_second)] = min(root_first, root_second)
        return True

    def groups(self) -> List[List[int]]:
        grouped: Dict[int, List[int]] = {}
        for element in range(1, len(self.parent)):
            grouped.setdefault(self.find(element), []).append(element)
        return list(grouped.values())


def _dual_join(x: SimpleBraid, y: SimpleBraid) -> SimpleBraid:
    blocks = _Blocks(x.n)
    for simple in (x, y):
        for element, label in enumerate(simple.rep, start=1):
            blocks.unite(element, label)
    merged = True
    while merged:
        merged = False
        for first, second in combinations(blocks.groups(), 2):
            if _crossing(first, second):
                merged = blocks.unite(first[0], second[0])
                break
    return SimpleBraid.from_blocks(x.n, blocks.groups())


def join(x: SimpleBraid, y: SimpleBraid) -> SimpleBraid:
    """Least upper bound for the left-divisibility order."""
    if x.spec != y.spec:
        raise ValueError(FLAVOR_MISMATCH_ERROR)
    if x.flavor is Flavor.ARTIN:
        return _artin_join(x, y)
    return _dual_join(x, y)


def meet(x: SimpleBraid, y: SimpleBraid) -> SimpleBraid:
    """Greatest lower bound for the left-divisibility order."""
    if x.spec != y.spec:
        raise ValueError(FLAVOR_MISMATCH_ERROR)
    if x.flavor is Flavor.ARTIN:
        # reversing the one-line form complements the inversion set
        upper = _artin_join(
            SimpleBraid(x.flavor, x.rep[::-1]), SimpleBraid(y.flavor, y.rep[::-1])
        )
        return SimpleBraid(x.flavor, upper.rep[::-1])
    refined: Dict[Tuple[int, int], int] = {}
    rep = []
    for element, key in enumerate(zip(x.rep, y.rep), start=1):
        rep.append(refined.setdefault(key, element))
    return SimpleBraid(x.flavor, tuple(rep))


def is_left_divisor(x: SimpleBraid, y: SimpleBraid) -> bool:
    return meet(x, y) == x


def delta_of_subset(subset: GeneratorSet) -> SimpleBraid:
    """Δ_X, the join of the generators in X."""
    spec = subset.spec
    return reduce(join, (generator_simple(spec, g) for g in subset), unit(spec))


@lru_cache(maxsize=None)
def canonical_word(x: SimpleBraid) -> Tuple[GeneratorId, ...]:
    """Lexicographically smallest word of x, read off by peeling the smallest left divisor."""
    letters = []
    while not x.is_unit:
        generator = next(iter(left_set(x)))
        letters.append(generator)
        x = left_quotient_by_generator(generator, x)
    return tuple(letters)


def label(x: SimpleBraid) -> str:
    """Short name: ``e``, digit words such as ``121`` (artin), chord products such as ``(12)(23)`` (dual)."""
    if x.is_unit:
        return "e"
    if x.flavor is Flavor.ARTIN:
        return "".join(str(g.i) for g in canonical_word(x))
    chords = []
    for block in x.blocks:
        chords.extend(
            GeneratorId(a, b).label(Flavor.DUAL) for a, b in pairwise(block)
        )
    return "".join(chords)


def _catalan(k: int) -> int:
    return comb(2 * k, k) // (k + 1)


def mobius_function(x: SimpleBraid) -> int:
    """μ(e, x) in the lattice of simples, equal to the sum of (-1)^|X| over X with Δ_X = x."""
    if x.flavor is Flavor.ARTIN:
        top = left_set(x)
        return (-1) ** len(top) if delta_of_subset(top) == x else 0
    value = 1
    for block in x.blocks:
        value *= (-1) ** (len(block) - 1) * _catalan(len(block) - 1)
    return value
