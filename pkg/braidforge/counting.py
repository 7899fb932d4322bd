import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from string import Template
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from numpy.polynomial import polynomial as npoly
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from braidforge._utils import (
    BRUTEFORCE_MAX_LENGTH,
    BRUTEFORCE_MAX_STRANDS,
    INCLUSION_EXCLUSION_MAX_GENERATORS,
    SUFFIX_TABLE_MAX_SIMPLES,
    ComputationGuardError,
    format_polynomial,
)
from braidforge.automaton import build_automaton, build_suffix_table
from braidforge.monoid import (
    GeneratorId,
    MonoidSpec,
    SimpleBraid,
    enumerate_simples,
    generator_simple,
    join,
    mobius_function,
    unit,
)
from braidforge.normal_form import GeneratorWord

LOGGER = logging.getLogger(__name__)

METHOD_DISAGREEMENT_ERROR = Template("$quantity disagrees between $methods for $spec.")
NO_SIGN_CHANGE_ERROR = Template("No sign change of the Möbius polynomial found in (0, 1) for $spec.")
MULTIPLE_ROOT_ERROR = Template("Root $q of the Möbius polynomial of $spec is not simple.")
TOLERANCE_ERROR = "Tolerance must be positive."
CHARNEY_SIZE_ERROR = "The Charney graph needs at least 3 strands."
TABLE_TOO_SHORT_ERROR = "Growth diagnostics need a count table with k_max >= 30."
NOT_MONOTONE_ERROR = "Growth ratio deviation is not shrinking over the tail."
BRUTEFORCE_GUARD_ERROR = Template(
    "Brute-force enumeration is limited to n <= $max_n and k <= $max_k."
)

# Near-tie threshold for the smallest-modulus root check
ROOT_TIE_TOLERANCE = 1e-8
ROOT_GRID = 1024


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients in ascending degree."""

    coefficients: Tuple[int, ...]

    def __post_init__(self):
        coefficients = [int(c) for c in self.coefficients]
        while coefficients and coefficients[-1] == 0:
            coefficients.pop()
        object.__setattr__(self, "coefficients", tuple(coefficients))

    @classmethod
    def from_sympy(cls, expression, variable: sympy.Symbol) -> "IntPolynomial":
        poly = sympy.Poly(expression, variable)
        return cls(tuple(int(c) for c in reversed(poly.all_coeffs())))

    def to_sympy(self, variable: sympy.Symbol):
        return sum(c * variable**k for k, c in enumerate(self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, t):
        value = 0
        for coefficient in reversed(self.coefficients):
            value = value * t + coefficient
        return value

    def derivative(self) -> "IntPolynomial":
        return IntPolynomial(tuple(k * c for k, c in enumerate(self.coefficients) if k))

    def roots(self) -> np.ndarray:
        """All complex roots, as eigenvalues of the companion matrix."""
        return npoly.polyroots(np.array(self.coefficients, dtype=float))

    def __str__(self) -> str:
        return format_polynomial(self.coefficients, variable="t")


@dataclass(frozen=True)
class CountTable:
    spec: MonoidSpec
    values: Tuple[int, ...]

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k: int) -> int:
        return self.values[k]


@dataclass(frozen=True)
class CriticalRoot:
    """q_n with an exact sign-change certificate H(lo) > 0 > H(hi)."""

    q: float
    lo: Fraction
    hi: Fraction
    tol: float
    exact: Optional[Fraction] = None

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def value(self):
        """The root as a Fraction when it is rational and was hit exactly, else as a float."""
        return self.exact if self.exact is not None else self.q


def _subset_weights(spec: MonoidSpec) -> Dict[SimpleBraid, int]:
    """Σ (-1)^|X| over the subsets X ⊆ Σ, grouped by Δ_X, one generator at a time."""
    weights: Dict[SimpleBraid, int] = {unit(spec): 1}
    for generator in spec.generators:
        atom = generator_simple(spec, generator)
        updated: Dict[SimpleBraid, int] = defaultdict(int)
        for simple, weight in weights.items():
            updated[simple] += weight
            updated[join(simple, atom)] -= weight
        weights = {simple: weight for simple, weight in updated.items() if weight}
    return weights


def _inclusion_exclusion(spec: MonoidSpec) -> IntPolynomial:
    coefficients = [0] * (spec.garside_length + 1)
    for simple, weight in _subset_weights(spec).items():
        coefficients[simple.length] += weight
    return IntPolynomial(tuple(coefficients))


@lru_cache(maxsize=None)
def _artin_recursion(n: int) -> IntPolynomial:
    t = sympy.Symbol("t")
    polynomials = [sympy.Integer(1)]
    for m in range(1, n + 1):
        polynomials.append(
            sympy.expand(
                sum(
                    (-1) ** (k + 1) * t ** (k * (k - 1) // 2) * polynomials[m - k]
                    for k in range(1, m + 1)
                )
            )
        )
    return IntPolynomial.from_sympy(polynomials[n], t)


def _dual_closed_form(n: int) -> IntPolynomial:
    return IntPolynomial(
        tuple(
            (-1) ** k
            * math.factorial(n - 1 + k)
            // (math.factorial(n - 1 - k) * math.factorial(k) * math.factorial(k + 1))
            for k in range(n)
        )
    )


def _lattice_mobius(spec: MonoidSpec) -> IntPolynomial:
    coefficients = [0] * (spec.garside_length + 1)
    for simple in enumerate_simples(spec):
        coefficients[simple.length] += mobius_function(simple)
    return IntPolynomial(tuple(coefficients))


@lru_cache(maxsize=None)
def mobius_polynomial(spec: MonoidSpec) -> IntPolynomial:
    """H_n(t), computed by every route available at this size and cross-checked.

    Routes: inclusion-exclusion over X ⊆ Σ (up to 24 generators), the artin
    recursion or the dual closed sum, and the lattice Möbius function over
    the simples (up to the suffix-table size).

    Raises:
        ComputationGuardError: two routes disagree.
    """
    if spec.is_artin:
        routes = {"artin recursion": _artin_recursion(spec.n)}
    else:
        routes = {"dual closed form": _dual_closed_form(spec.n)}
    if len(spec.generators) <= INCLUSION_EXCLUSION_MAX_GENERATORS:
        routes["inclusion-exclusion"] = _inclusion_exclusion(spec)
    if len(enumerate_simples(spec)) <= SUFFIX_TABLE_MAX_SIMPLES:
        routes["lattice Möbius function"] = _lattice_mobius(spec)
    results = set(routes.values())
    if len(results) != 1:
        raise ComputationGuardError(
            METHOD_DISAGREEMENT_ERROR.substitute(
                quantity="H_n", methods=", ".join(routes), spec=spec
            )
        )
    return results.pop()


def growth_coefficients(spec: MonoidSpec, k_max: int) -> CountTable:
    """λ(0..k_max) from the recurrence H·G = 1, checked against the suffix-count DP.

    Args:
        spec: the monoid.
        k_max: last length to count.

    Returns:
        CountTable: exact counts.

    Raises:
        ComputationGuardError: the two computations disagree.
    """
    coefficients = mobius_polynomial(spec).coefficients
    values = [1]
    for k in range(1, k_max + 1):
        values.append(
            -sum(
                coefficients[i] * values[k - i]
                for i in range(1, min(k, len(coefficients) - 1) + 1)
            )
        )
    if len(enumerate_simples(spec)) <= SUFFIX_TABLE_MAX_SIMPLES:
        if build_suffix_table(spec, k_max).totals() != values:
            raise ComputationGuardError(
                METHOD_DISAGREEMENT_ERROR.substitute(
                    quantity="λ", methods="recurrence, suffix counts", spec=spec
                )
            )
    else:
        LOGGER.info(f"Skipping the suffix-count check of λ for {spec}")
    return CountTable(spec=spec, values=tuple(values))


def _isolating_bracket(polynomial: IntPolynomial, hints: Sequence[Fraction]):
    lo = Fraction(0)
    for k in range(1, ROOT_GRID + 1):
        t = Fraction(k, ROOT_GRID)
        if polynomial(t) <= 0:
            hi = t
            break
        lo = t
    else:
        return None
    for hint in sorted(hints):
        if lo < hint < hi:
            if polynomial(hint) <= 0:
                hi = hint
                break
            lo = hint
    return lo, hi


def critical_root(spec: MonoidSpec, tol: float = 1e-12) -> CriticalRoot:
    """Smallest positive root q_n of H_n by exact rational bisection.

    Args:
        spec: the monoid.
        tol: bound on the width of the returned interval.

    Returns:
        CriticalRoot: float value, certified interval and the exact root when bisection hits it.

    Raises:
        ValueError: tol is not positive.
        ComputationGuardError: no sign change in (0, 1), or the root is not simple.
    """
    if tol <= 0:
        raise ValueError(TOLERANCE_ERROR)
    polynomial = mobius_polynomial(spec)
    bracket = _isolating_bracket(
        polynomial, [Fraction(1, 2), Fraction(1, len(spec.generators))]
    )
    if bracket is None:
        raise ComputationGuardError(NO_SIGN_CHANGE_ERROR.substitute(spec=spec))
    lo, hi = bracket
    width = Fraction(tol)
    exact = hi if polynomial(hi) == 0 else None
    while exact is None and hi - lo > width:
        middle = (lo + hi) / 2
        value = polynomial(middle)
        LOGGER.debug(f"Bisection of H for {spec}: [{float(lo)}, {float(hi)}]")
        if value == 0:
            exact = middle
        elif value > 0:
            lo = middle
        else:
            hi = middle
    if exact is not None:
        half = min(width / 2, (exact - lo) / 2 if exact > lo else width / 2)
        while not (polynomial(exact - half) > 0 > polynomial(exact + half)):
            half /= 2
        lo, hi = exact - half, exact + half
        q = float(exact)
    else:
        q = float((lo + hi) / 2)
    if abs(polynomial.derivative()(q)) < 1e-12:
        raise ComputationGuardError(MULTIPLE_ROOT_ERROR.substitute(q=q, spec=spec))
    _check_smallest_modulus(polynomial, q, spec)
    return CriticalRoot(q=q, lo=lo, hi=hi, tol=tol, exact=exact)


def _check_smallest_modulus(polynomial: IntPolynomial, q: float, spec: MonoidSpec):
    roots = polynomial.roots()
    closest = int(np.argmin(np.abs(roots - q)))
    others = np.delete(roots, closest)
    if others.size and np.min(np.abs(others)) < q * (1 + ROOT_TIE_TOLERANCE):
        LOGGER.warning(
            f"Möbius polynomial of {spec} has a root of modulus "
            f"{np.min(np.abs(others))} not larger than q = {q}"
        )


def infeasibility_spot_check(spec: MonoidSpec, eps: float = 1e-3) -> float:
    """H_n(q_n + eps), negative when eps is small, so point masses above q_n would be negative."""
    root = critical_root(spec)
    return float(mobius_polynomial(spec)(Fraction(root.hi) + Fraction(eps)))


@dataclass(frozen=True)
class CharneyGraph:
    """Arrow digraph on the simples other than e and Δ."""

    spec: MonoidSpec
    vertices: Tuple[SimpleBraid, ...]
    adjacency: csr_matrix

    def edges(self) -> Iterator[Tuple[SimpleBraid, SimpleBraid]]:
        rows, columns = self.adjacency.nonzero()
        for row, column in zip(rows, columns):
            yield self.vertices[row], self.vertices[column]

    def component_count(self) -> int:
        count, _ = connected_components(self.adjacency, directed=True, connection="strong")
        return int(count)

    def is_strongly_connected(self) -> bool:
        return self.component_count() == 1

    def loops(self) -> List[SimpleBraid]:
        diagonal = self.adjacency.diagonal()
        return [vertex for vertex, flag in zip(self.vertices, diagonal) if flag]


def charney_graph(spec: MonoidSpec) -> CharneyGraph:
    if spec.n < 3:
        raise ValueError(CHARNEY_SIZE_ERROR)
    automaton = build_automaton(spec)
    inner = automaton.adjacency[1:-1, 1:-1]
    LOGGER.info(f"Charney graph of {spec}: {inner.shape[0]} vertices")
    return CharneyGraph(
        spec=spec,
        vertices=automaton.states[1:-1],
        adjacency=csr_matrix(inner.astype(np.int8)),
    )


@dataclass(frozen=True)
class GrowthDiagnostics:
    ks: Tuple[int, ...]
    ratio_deviations: Tuple[float, ...]
    constant_estimates: Tuple[float, ...]
    monotone: bool

    @property
    def constant(self) -> float:
        """Latest estimate of C_n in λ(k) ~ C_n q^-k."""
        return self.constant_estimates[-1]


def growth_ratio_diagnostics(
    table: CountTable, root: CriticalRoot, strict: bool = True
) -> GrowthDiagnostics:
    """Convergence of λ(k+1)/λ(k) to 1/q over the last ten k, and the estimates λ(k) q^k.

    Raises:
        ValueError: the table stops before k = 30.
        ComputationGuardError: strict mode and the deviation grows somewhere on the tail.
    """
    if table.k_max < 30:
        raise ValueError(TABLE_TOO_SHORT_ERROR)
    ks = tuple(range(table.k_max - 10, table.k_max))
    deviations = tuple(table[k + 1] / table[k] - 1 / root.q for k in ks)
    log_q = math.log(root.q)
    constants = tuple(
        math.exp(math.log(value) + k * log_q) for k, value in enumerate(table.values)
    )
    monotone = all(
        abs(later) <= abs(earlier) + 1e-15
        for earlier, later in zip(deviations, deviations[1:])
    )
    if not monotone:
        if strict:
            raise ComputationGuardError(NOT_MONOTONE_ERROR)
        LOGGER.warning(f"{NOT_MONOTONE_ERROR} Deviations: {deviations}")
    return GrowthDiagnostics(
        ks=ks, ratio_deviations=deviations, constant_estimates=constants, monotone=monotone
    )


def _relations(spec: MonoidSpec) -> Dict[Tuple[int, ...], List[Tuple[int, ...]]]:
    """Single-relation rewrites on generator indices, both directions."""
    index = spec.generator_index
    classes: List[List[Tuple[int, ...]]] = []
    generators = spec.generators
    if spec.is_artin:
        for a, b in combinations(range(len(generators)), 2):
            if b - a >= 2:
                classes.append([(a, b), (b, a)])
            else:
                classes.append([(a, b, a), (b, a, b)])
    else:
        def g(u: int, v: int) -> int:
            return index[GeneratorId(min(u, v), max(u, v))]

        for i, j, k in combinations(range(1, spec.n + 1), 3):
            classes.append([(g(i, j), g(j, k)), (g(j, k), g(k, i)), (g(k, i), g(i, j))])
        for first, second in combinations(generators, 2):
            if {first.i, first.j} & {second.i, second.j}:
                continue
            interleaved = first.i < second.i < first.j < second.j or (
                second.i < first.i < second.j < first.j
            )
            if not interleaved:
                classes.append([(index[first], index[second]), (index[second], index[first])])
    rewrites: Dict[Tuple[int, ...], List[Tuple[int, ...]]] = defaultdict(list)
    for words in classes:
        for source in words:
            rewrites[source].extend(w for w in words if w != source)
    return rewrites


@dataclass(frozen=True)
class WordClasses:
    spec: MonoidSpec
    k: int
    representatives: Tuple[GeneratorWord, ...]

    @property
    def count(self) -> int:
        return len(self.representatives)


def enumerate_braids_bruteforce(spec: MonoidSpec, k: int) -> WordClasses:
    """Partitions all words of length k into classes closed under single relations.

    Raises:
        ComputationGuardError: n > 4 or k > 8.
    """
    if spec.n > BRUTEFORCE_MAX_STRANDS or not 0 <= k <= BRUTEFORCE_MAX_LENGTH:
        raise ComputationGuardError(
            BRUTEFORCE_GUARD_ERROR.substitute(
                max_n=BRUTEFORCE_MAX_STRANDS, max_k=BRUTEFORCE_MAX_LENGTH
            )
        )
    rewrites = _relations(spec)
    spans = sorted({len(source) for source in rewrites})
    seen = set()
    representatives = []
    for word in product(range(len(spec.generators)), repeat=k):
        if word in seen:
            continue
        seen.add(word)
        representatives.append(
            GeneratorWord(spec, tuple(spec.generators[i] for i in word))
        )
        queue = deque([word])
        while queue:
            current = queue.popleft()
            for span in spans:
                for start in range(k - span + 1):
                    for replacement in rewrites.get(current[start : start + span], ()):
                        neighbour = current[:start] + replacement + current[start + span :]
                        if neighbour not in seen:
                            seen.add(neighbour)
                            queue.append(neighbour)
    return WordClasses(spec=spec, k=k, representatives=tuple(representatives))
