import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from string import Template
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from more_itertools import pairwise, powerset
from scipy import linalg

from braidforge._utils import (
    DEFAULT_TOLERANCE,
    INCLUSION_EXCLUSION_MAX_GENERATORS,
    ComputationGuardError,
)
from braidforge.counting import CountTable, CriticalRoot, critical_root, mobius_polynomial
from braidforge.monoid import (
    GeneratorId,
    GeneratorSet,
    MonoidSpec,
    SimpleBraid,
    arrow,
    canonical_word,
    delta_of_subset,
    enumerate_simples,
    garside,
    generator_simple,
    is_left_divisor,
    label,
    left_set,
    mobius_function,
    right_set,
    simple_product,
)
from braidforge.normal_form import Braid, braid_from_factors, height, multiply

LOGGER = logging.getLogger(__name__)

DOMAIN_ERROR = "A simple function must be defined on every simple braid."
PARAMETER_RANGE_ERROR = Template("Parameter p = $p must lie in (0, q_n) with q_n = $q.")
CHAIN_PARAMETER_ERROR = Template("Parameter p = $p must lie in (0, q_n] with q_n = $q.")
ROW_SUM_ERROR = Template("Row $row of the transition matrix sums to $total.")
CRITICAL_RESIDUAL_ERROR = Template("H_n(q_n) = $value is not negligible for $spec.")
POWER_ITERATION_ERROR = "Power iteration did not converge."
SPECTRAL_RADIUS_ERROR = Template("Spectral radius $radius differs from 1.")
WITNESS_SCOPE_ERROR = "The stationarity refutation only concerns the artin monoid with n >= 4."
WITNESS_EQUAL_ERROR = Template("Stationarity sums coincide: $first and $second.")
SUBSET_GATE_ERROR = Template("Subset enumeration is limited to $cap generators.")

# Bisection width used whenever q_n feeds a probability
CHAIN_ROOT_TOLERANCE = 1e-20
CRITICAL_RESIDUAL = 1e-9


@dataclass(frozen=True)
class SimpleFunction:
    """A function on the simples; values may be floats, Fractions or sympy expressions."""

    spec: MonoidSpec
    values: Dict[SimpleBraid, Any]

    def __post_init__(self):
        if set(self.values) != set(enumerate_simples(self.spec)):
            raise ValueError(DOMAIN_ERROR)

    def __getitem__(self, x: SimpleBraid):
        return self.values[x]

    def by_label(self) -> Dict[str, Any]:
        return {label(x): value for x, value in self.values.items()}


def power_law(spec: MonoidSpec, p) -> SimpleFunction:
    """x ↦ p^|x|; p may be a float, a Fraction or a sympy symbol."""
    return SimpleFunction(spec, {x: p**x.length for x in enumerate_simples(spec)})


def _times_simple(x: SimpleBraid, y: SimpleBraid) -> Optional[SimpleBraid]:
    product = x
    for letter in canonical_word(y):
        product = simple_product(product, letter)
        if product is None:
            return None
    return product


@lru_cache(maxsize=None)
def _mobius_support(spec: MonoidSpec) -> Tuple[Tuple[SimpleBraid, int, int], ...]:
    """Simples y = Δ_X with non-zero μ(e, y), together with the mask of L(y)."""
    support = []
    for y in enumerate_simples(spec):
        weight = mobius_function(y)
        if weight:
            support.append((y, weight, left_set(y).mask))
    return tuple(support)


def mobius_transform_simple(f: SimpleFunction) -> SimpleFunction:
    """h(x) = Σ_{X ⊆ Σ} (-1)^|X| 1{x·Δ_X simple} f(x·Δ_X).

    Subsets with the same Δ_X are grouped through the Möbius function of the
    lattice of simples, and x·Δ_X is simple exactly when X misses R(x).
    """
    values = {}
    for x in enumerate_simples(f.spec):
        right = right_set(x).mask
        total = 0
        for y, weight, left in _mobius_support(f.spec):
            if left & right:
                continue
            total += weight * f[_times_simple(x, y)]
        values[x] = total
    return SimpleFunction(f.spec, values)


def mobius_inverse_simple(h: SimpleFunction) -> SimpleFunction:
    """f(x) = Σ_{y: x·y simple} h(x·y), the sum of h over the simples above x."""
    simples = enumerate_simples(h.spec)
    return SimpleFunction(
        h.spec,
        {x: sum((h[z] for z in simples if is_left_divisor(x, z)), 0) for x in simples},
    )


@lru_cache(maxsize=None)
def _power_transform(spec: MonoidSpec, p) -> Dict[SimpleBraid, Any]:
    return mobius_transform_simple(power_law(spec, p)).values


def power_transform(spec: MonoidSpec, p) -> Dict[SimpleBraid, Any]:
    """Möbius transform of p^|x|, cached per monoid and parameter."""
    return _power_transform(spec, p)


def graded_mobius_transform(spec: MonoidSpec, p, x: Braid):
    """Graded transform of p^|·| at x: p^(|x_1| + ... + |x_{k-1}|) h(x_k)."""
    h = _power_transform(spec, p)
    head_length = sum(factor.length for factor in x.factors[:-1])
    return p**head_length * h[x.factors[-1]]


def membership_graded_set(x: Braid, y: Braid) -> bool:
    """y ∈ B[x], i.e. multiplying by y keeps the height of x."""
    return height(multiply(x, y)) == height(x)


def graded_mobius_transform_by_definition(f: Callable[[Braid], Any], x: Braid):
    """Literal alternating sum over X ⊆ Σ with Δ_X ∈ B[x]; exponential in |Σ|."""
    spec = x.spec
    if len(spec.generators) > INCLUSION_EXCLUSION_MAX_GENERATORS:
        raise ComputationGuardError(
            SUBSET_GATE_ERROR.substitute(cap=INCLUSION_EXCLUSION_MAX_GENERATORS)
        )
    total = 0
    for subset in powerset(spec.generators):
        delta = braid_from_factors(
            spec, [delta_of_subset(GeneratorSet.from_generators(spec, subset))]
        )
        if membership_graded_set(x, delta):
            total += (-1) ** len(subset) * f(multiply(x, delta))
    return total


@lru_cache(maxsize=None)
def _certified_root(spec: MonoidSpec) -> CriticalRoot:
    return critical_root(spec, tol=CHAIN_ROOT_TOLERANCE)


def critical_parameter(spec: MonoidSpec):
    """q_n as an exact Fraction when rational, else a float bisected to width 1e-20."""
    root = _certified_root(spec)
    return root.exact if root.exact is not None else root.q


def uniform_finite_weight(spec: MonoidSpec, p, x: Braid):
    """ν_p({x}) = H_n(p) p^|x| for 0 < p < q_n.

    Raises:
        ValueError: p is not below q_n.
    """
    q = critical_parameter(spec)
    if not 0 < p < q:
        raise ValueError(PARAMETER_RANGE_ERROR.substitute(p=p, q=q))
    return mobius_polynomial(spec)(p) * p**x.length


def full_visual_weight(p, x: Braid):
    """ν_p(⇑x) = p^|x|."""
    return p**x.length


@dataclass(frozen=True)
class ChainSpec:
    """Markov chain of the factors: initial law h, transitions P, rows and columns ordered as `states`."""

    spec: MonoidSpec
    p: Any
    states: Tuple[SimpleBraid, ...]
    initial: np.ndarray
    transition: np.ndarray

    @property
    def exact(self) -> bool:
        return self.transition.dtype == object

    def index(self, x: SimpleBraid) -> int:
        return self.states.index(x)

    def row(self, x: SimpleBraid) -> Dict[str, Any]:
        return {
            label(y): value for y, value in zip(self.states, self.transition[self.index(x)])
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "states": [x.encoding() for x in self.states],
            "labels": [label(x) for x in self.states],
            "p": self.p,
            "initial": self.initial,
            "transition": self.transition,
        }


def chain_at(spec: MonoidSpec, p=None) -> ChainSpec:
    """Chain of the uniform measure of parameter p; p = None means p = q_n.

    At q_n the unit is dropped from the states since h(e) = H_n(q_n) = 0.

    Raises:
        ValueError: p is outside (0, q_n].
        ComputationGuardError: a row is not stochastic, or H_n(q_n) is not negligible.
    """
    q = critical_parameter(spec)
    at_critical = p is None or p == q
    if p is None:
        p = q
    if not 0 < p <= q:
        raise ValueError(CHAIN_PARAMETER_ERROR.substitute(p=p, q=q))
    h = _power_transform(spec, p)
    simples = enumerate_simples(spec)
    if at_critical:
        residual = h[simples[0]]
        if abs(float(residual)) > CRITICAL_RESIDUAL:
            raise ComputationGuardError(
                CRITICAL_RESIDUAL_ERROR.substitute(value=residual, spec=spec)
            )
        simples = simples[1:]
    exact = isinstance(p, Fraction)
    dtype = object if exact else float
    size = len(simples)
    transition = np.zeros((size, size), dtype=dtype)
    if exact:
        transition[:] = Fraction(0)
    for i, x in enumerate(simples):
        scale = p**x.length / h[x]
        for j, y in enumerate(simples):
            if arrow(x, y):
                transition[i, j] = scale * h[y]
    initial = np.array([h[x] for x in simples], dtype=dtype)
    _check_rows(transition, exact)
    return ChainSpec(
        spec=spec, p=p, states=tuple(simples), initial=initial, transition=transition
    )


def chain_at_infinity(spec: MonoidSpec) -> ChainSpec:
    return chain_at(spec, None)


def _check_rows(transition: np.ndarray, exact: bool):
    for row, values in enumerate(transition):
        total = sum(values)
        off = total != 1 if exact else abs(total - 1) > DEFAULT_TOLERANCE
        if off:
            raise ComputationGuardError(ROW_SUM_ERROR.substitute(row=row, total=total))


def cylinder_probability(chain: ChainSpec, factors: Sequence[SimpleBraid]):
    """Probability that the chain starts with the given factors."""
    index = {x: k for k, x in enumerate(chain.states)}
    if any(x not in index for x in factors):
        return 0
    probability = chain.initial[index[factors[0]]]
    for x, y in pairwise(factors):
        probability = probability * chain.transition[index[x], index[y]]
    return probability


def cylinder_ratio(table: CountTable, length: int, k: int) -> float:
    """λ(k - |x|)/λ(k), the uniform probability at size k that a braid starts with a given x."""
    return float(Fraction(table[k - length], table[k]))


@dataclass(frozen=True)
class SpectralReport:
    radius: float
    iterations: int
    perron_vector: np.ndarray
    g: np.ndarray
    eigenvector_error: float
    identity_error: float


def _power_iteration(matrix: np.ndarray, max_iter: int = 100000, tol: float = 1e-13):
    vector = np.ones(matrix.shape[0]) / np.sqrt(matrix.shape[0])
    radius = 0.0
    for iteration in range(1, max_iter + 1):
        image = matrix @ vector
        radius = float(np.linalg.norm(image))
        following = image / radius
        residual = np.linalg.norm(matrix @ following - radius * following)
        vector = following
        if residual < tol:
            return radius, vector, iteration
    raise ComputationGuardError(POWER_ITERATION_ERROR)


def spectral_check(spec: MonoidSpec) -> SpectralReport:
    """Checks that B = (1{x→x'} q^|x'|) over S∖{e, Δ} has spectral radius 1 with Perron vector g.

    Raises:
        ComputationGuardError: no convergence, or the radius is not 1 within 1e-8.
    """
    q = float(critical_parameter(spec))
    h = {x: float(value) for x, value in _power_transform(spec, critical_parameter(spec)).items()}
    simples = enumerate_simples(spec)
    inner = simples[1:-1]
    matrix = np.array(
        [[q**y.length if arrow(x, y) else 0.0 for y in inner] for x in inner]
    )
    radius, vector, iterations = _power_iteration(matrix)
    if abs(radius - 1) >= 1e-8:
        raise ComputationGuardError(SPECTRAL_RADIUS_ERROR.substitute(radius=radius))
    g_all = {x: sum(h[y] for y in simples if arrow(x, y)) for x in simples}
    g = np.array([g_all[x] for x in inner])
    eigenvector_error = float(np.max(np.abs(vector / vector.sum() - g / g.sum())))
    identity_error = max(abs(h[x] - q**x.length * g_all[x]) for x in simples)
    return SpectralReport(
        radius=radius,
        iterations=iterations,
        perron_vector=vector,
        g=g,
        eigenvector_error=eigenvector_error,
        identity_error=identity_error,
    )


@dataclass(frozen=True)
class DeltaLaw:
    """Law of the number T of leading Δ factors: P(T >= t) = parameter^t.

    `occurrence_probability` is the tabulated companion value parameter/(1 - parameter),
    which is also the mean of T; `at_least_one` is P(T >= 1).
    """

    parameter: Any
    occurrence_probability: Any
    at_least_one: Any

    @property
    def mean(self):
        return self.occurrence_probability

    def cell_probabilities(self) -> List[float]:
        """P(T = 0), P(T = 1), P(T >= 2)."""
        a = float(self.parameter)
        return [1 - a, a * (1 - a), a * a]


def delta_count_law(spec: MonoidSpec) -> DeltaLaw:
    a = critical_parameter(spec) ** spec.garside_length
    return DeltaLaw(parameter=a, occurrence_probability=a / (1 - a), at_least_one=a)


@dataclass(frozen=True)
class LambdaStar:
    states: Tuple[SimpleBraid, ...]
    distributions: Tuple[np.ndarray, ...]
    stationary: np.ndarray
    gaps: Tuple[float, ...]


def total_variation(first: np.ndarray, second: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(first, float) - np.asarray(second, float))))


def lambda_star(spec: MonoidSpec, i_max: int) -> LambdaStar:
    """Laws of the i-th factor after the last Δ: λ_1* = h/(1 - q^|Δ|) then λ_i* = λ_1* P^(i-1)."""
    chain = chain_at_infinity(spec)
    top = garside(spec)
    keep = [k for k, x in enumerate(chain.states) if x != top]
    states = tuple(chain.states[k] for k in keep)
    restricted = np.array(chain.transition[np.ix_(keep, keep)], dtype=float)
    a = float(delta_count_law(spec).parameter)
    current = np.array(chain.initial[keep], dtype=float) / (1 - a)
    eigenvalues, vectors = linalg.eig(restricted.T)
    dominant = int(np.argmin(np.abs(eigenvalues - 1)))
    stationary = np.real(vectors[:, dominant])
    stationary = stationary / stationary.sum()
    distributions = []
    gaps = []
    for _ in range(i_max):
        distributions.append(current)
        gaps.append(total_variation(current, stationary))
        current = current @ restricted
    return LambdaStar(
        states=states,
        distributions=tuple(distributions),
        stationary=stationary,
        gaps=tuple(gaps),
    )


@dataclass(frozen=True)
class StationarityWitness:
    y: str
    y_value: float
    y_prime: str
    y_prime_value: Optional[float]
    asserted: bool


def _witness_sum(spec: MonoidSpec, q: float, y: SimpleBraid) -> Optional[float]:
    simples = enumerate_simples(spec)
    if y in (simples[0], simples[-1]):
        return None
    return sum(q**x.length for x in simples[1:-1] if arrow(x, y))


def stationarity_witness(
    spec: MonoidSpec, assert_refutation: Optional[bool] = None
) -> StationarityWitness:
    """Σ_{x ∈ S∖{e,Δ}, x → y} q^|x| for y = s1 and y' = Δ of {s1, s2}.

    For n = 3, y' is Δ itself and its sum is reported as None.

    Args:
        spec: the monoid.
        assert_refutation: require the two sums to differ; defaults to True for artin with n >= 4.

    Raises:
        ValueError: the refutation is requested outside artin with n >= 4.
        ComputationGuardError: the refutation is requested and the sums agree within 1e-6.
    """
    in_scope = spec.is_artin and spec.n >= 4
    if assert_refutation is None:
        assert_refutation = in_scope
    if assert_refutation and not in_scope:
        raise ValueError(WITNESS_SCOPE_ERROR)
    q = float(critical_parameter(spec))
    first, second = spec.generators[0], GeneratorId(2, 3)
    y = generator_simple(spec, first)
    y_prime = delta_of_subset(GeneratorSet.from_generators(spec, [first, second]))
    y_value = _witness_sum(spec, q, y)
    y_prime_value = _witness_sum(spec, q, y_prime)
    if assert_refutation and abs(y_value - y_prime_value) <= 1e-6:
        raise ComputationGuardError(
            WITNESS_EQUAL_ERROR.substitute(first=y_value, second=y_prime_value)
        )
    return StationarityWitness(
        y=label(y),
        y_value=y_value,
        y_prime=label(y_prime),
        y_prime_value=y_prime_value,
        asserted=assert_refutation,
    )
