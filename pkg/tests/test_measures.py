from fractions import Fraction
from math import sqrt

import numpy as np
import pytest
import sympy
from _pytest.monkeypatch import MonkeyPatch
from more_itertools import powerset

from braidforge import _utils, counting, measures
from braidforge.monoid import (
    Flavor,
    GeneratorSet,
    MonoidSpec,
    arrow,
    delta_of_subset,
    enumerate_simples,
    garside,
    label,
    unit,
)
from braidforge.normal_form import (
    GeneratorWord,
    braid_from_factors,
    left_divides,
    normalize,
    parse_word,
)

P = sympy.Symbol("p")
Q3 = (sqrt(5) - 1) / 2


@pytest.fixture(scope="session")
def artin3() -> MonoidSpec:
    return MonoidSpec(3, Flavor.ARTIN)


@pytest.fixture(scope="session")
def dual3() -> MonoidSpec:
    return MonoidSpec(3, Flavor.DUAL)


def _symbolic(spec: MonoidSpec):
    return measures.SimpleFunction(spec, dict(measures.power_transform(spec, P))).by_label()


def _same(first, second) -> bool:
    return sympy.expand(first - second) == 0


SMALL_MONOIDS = [(3, Flavor.ARTIN), (3, Flavor.DUAL), (4, Flavor.ARTIN), (4, Flavor.DUAL)]


def _normal_sequences(spec: MonoidSpec, k: int):
    states = [x for x in enumerate_simples(spec) if not x.is_unit]
    sequences = [(x,) for x in states]
    for _ in range(k - 1):
        sequences = [s + (y,) for s in sequences for y in states if arrow(s[-1], y)]
    return sequences


def _braids_of_height(spec: MonoidSpec, k: int):
    if k == 1:
        return [braid_from_factors(spec, [x]) for x in enumerate_simples(spec)]
    return [braid_from_factors(spec, sequence) for sequence in _normal_sequences(spec, k)]


def _random_braids(spec: MonoidSpec, count: int, rng: np.random.Generator, max_length: int):
    braids = []
    for _ in range(count):
        size = int(rng.integers(0, max_length + 1))
        indices = rng.integers(0, len(spec.generators), size=size)
        braids.append(normalize(GeneratorWord(spec, tuple(spec.generators[i] for i in indices))))
    return braids


def test_power_transform_artin_three(artin3: MonoidSpec):
    h = _symbolic(artin3)

    assert _same(h["e"], 1 - 2 * P + P**3)
    assert _same(h["1"], P - P**2)
    assert _same(h["2"], P - P**2)
    assert _same(h["12"], P**2 - P**3)
    assert _same(h["21"], P**2 - P**3)
    assert _same(h["121"], P**3)


def test_power_transform_dual_three(dual3: MonoidSpec):
    h = _symbolic(dual3)

    assert _same(h["e"], 1 - 3 * P + 2 * P**2)
    for chord in ("(12)", "(13)", "(23)"):
        assert _same(h[chord], P - P**2)
    assert _same(h["(12)(23)"], P**2)


def test_power_transform_dual_four():
    h = _symbolic(MonoidSpec(4, Flavor.DUAL))

    assert _same(h["e"], 1 - 6 * P + 10 * P**2 - 5 * P**3)
    assert _same(h["(12)(23)(34)"], P**3)
    for chord in ("(12)", "(14)", "(23)", "(34)"):
        assert _same(h[chord], P - 3 * P**2 + 2 * P**3)
    for chord in ("(13)", "(24)"):
        assert _same(h[chord], P - 2 * P**2 + P**3)
    for pair in ("(12)(23)", "(12)(34)", "(14)(23)", "(12)(24)", "(13)(34)", "(23)(34)"):
        assert _same(h[pair], P**2 - P**3)


@pytest.mark.parametrize("n,flavor", [(3, Flavor.ARTIN), (4, Flavor.ARTIN), (4, Flavor.DUAL)])
def test_power_transform_unit_is_mobius_polynomial(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    h = measures.power_transform(spec, P)
    t = sympy.Symbol("t")
    polynomial = counting.mobius_polynomial(spec).to_sympy(t).subs(t, P)

    assert _same(h[unit(spec)], polynomial)
    assert _same(h[garside(spec)], P**spec.garside_length)


@pytest.mark.parametrize("n,flavor", [(4, Flavor.ARTIN), (5, Flavor.DUAL)])
def test_mobius_inverse_simple_undoes_transform(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    f = measures.power_law(spec, Fraction(1, 5))

    assert measures.mobius_inverse_simple(measures.mobius_transform_simple(f)) == f


@pytest.mark.parametrize("n,flavor", SMALL_MONOIDS)
def test_mobius_inverse_simple_undoes_transform_of_random_function(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    simples = enumerate_simples(spec)
    numerators = np.random.default_rng(7).integers(-50, 51, size=len(simples))
    f = measures.SimpleFunction(
        spec, {x: Fraction(int(value), 97) for x, value in zip(simples, numerators)}
    )

    assert measures.mobius_inverse_simple(measures.mobius_transform_simple(f)) == f


def test_mobius_transform_simple_of_indicator(artin3: MonoidSpec):
    f = measures.SimpleFunction(
        artin3, {x: 1 if x == garside(artin3) else 0 for x in enumerate_simples(artin3)}
    )

    assert measures.mobius_transform_simple(f).by_label() == {
        "e": 1,
        "1": 0,
        "2": 0,
        "12": -1,
        "21": -1,
        "121": 1,
    }


def test_simple_function_domain(artin3: MonoidSpec):
    with pytest.raises(ValueError, match=measures.DOMAIN_ERROR):
        measures.SimpleFunction(artin3, {unit(artin3): 1})


@pytest.mark.parametrize("word", ["", "s1", "s1 s2 s2", "s2 s1 s2 s1 s1"])
def test_graded_mobius_transform_matches_definition(artin3: MonoidSpec, word: str):
    p = Fraction(1, 3)
    braid = normalize(parse_word(word, artin3))

    assert measures.graded_mobius_transform(
        artin3, p, braid
    ) == measures.graded_mobius_transform_by_definition(lambda b: p**b.length, braid)


def test_membership_graded_set(artin3: MonoidSpec):
    def braid(text: str):
        return normalize(parse_word(text, artin3))

    assert measures.membership_graded_set(braid("s1"), braid("s2"))
    assert not measures.membership_graded_set(braid("s1"), braid("s1"))


@pytest.mark.parametrize("n,flavor", SMALL_MONOIDS)
def test_membership_graded_set_only_sees_last_factor(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    braids = [
        x
        for x in _random_braids(spec, 40, np.random.default_rng(11), max_length=6)
        if x.height <= 3
    ]
    deltas = [
        braid_from_factors(
            spec, [delta_of_subset(GeneratorSet.from_generators(spec, subset))]
        )
        for subset in powerset(spec.generators)
    ]

    assert max(x.height for x in braids) >= 2
    for x in braids:
        last = braid_from_factors(spec, [x.factors[-1]])
        for delta in deltas:
            assert measures.membership_graded_set(
                x, delta
            ) == measures.membership_graded_set(last, delta)


@pytest.mark.parametrize("n,flavor", SMALL_MONOIDS)
def test_graded_transform_sums_back_to_power_law(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    p = measures.critical_parameter(spec) / 2
    braids = [
        x
        for x in _random_braids(spec, 12, np.random.default_rng(3), max_length=4)
        if x.height <= 2
    ]
    by_height = {k: _braids_of_height(spec, k) for k in (1, 2)}

    for x in braids:
        # x·y with y ∈ B[x] runs over the braids of the same height that x left-divides
        total = sum(
            measures.graded_mobius_transform(spec, p, z)
            for z in by_height[x.height]
            if left_divides(x, z)
        )
        if isinstance(p, Fraction):
            assert total == p**x.length
        else:
            assert total == pytest.approx(p**x.length, abs=1e-8)


def test_critical_parameter(artin3: MonoidSpec, dual3: MonoidSpec):
    assert measures.critical_parameter(dual3) == Fraction(1, 2)
    assert measures.critical_parameter(artin3) == pytest.approx(Q3, abs=1e-15)


def test_uniform_finite_weight_sums_to_one(dual3: MonoidSpec):
    p = Fraction(1, 4)
    counts = counting.growth_coefficients(dual3, 60)
    braid = normalize(parse_word("(12)", dual3))
    weight = measures.uniform_finite_weight(dual3, p, braid)

    assert weight == Fraction(3, 8) * Fraction(1, 4)
    total = sum(count * Fraction(3, 8) * p**k for k, count in enumerate(counts.values))
    assert float(total) == pytest.approx(1, abs=1e-15)


@pytest.mark.parametrize("p", [Fraction(1, 2), Fraction(3, 4), 0])
def test_uniform_finite_weight_out_of_range(dual3: MonoidSpec, p):
    braid = normalize(parse_word("(12)", dual3))

    with pytest.raises(ValueError, match=r"Parameter p = .* must lie in \(0, q_n\)"):
        measures.uniform_finite_weight(dual3, p, braid)


def test_full_visual_weight(dual3: MonoidSpec):
    braid = normalize(parse_word("(12)(23)(13)", dual3))

    assert measures.full_visual_weight(Fraction(1, 2), braid) == Fraction(1, 8)


def test_chain_at_infinity_dual_three(dual3: MonoidSpec):
    chain = measures.chain_at_infinity(dual3)
    states = {str(x): x for x in chain.states}

    assert chain.exact
    assert chain.p == Fraction(1, 2)
    assert list(states) == ["(12)", "(13)", "(23)", "(12)(23)"]
    assert list(chain.initial) == [Fraction(1, 4)] * 4
    assert chain.row(states["(12)"]) == {
        "(12)": Fraction(1, 2),
        "(13)": Fraction(1, 2),
        "(23)": 0,
        "(12)(23)": 0,
    }
    assert chain.row(states["(12)(23)"]) == {label: Fraction(1, 4) for label in states}


def test_chain_at_infinity_artin_three(artin3: MonoidSpec):
    chain = measures.chain_at_infinity(artin3)
    states = {str(x): x for x in chain.states}
    small, large = sqrt(5) - 2, (7 - 3 * sqrt(5)) / 2

    assert not chain.exact
    assert unit(artin3) not in chain.states
    assert chain.row(states["121"]) == pytest.approx(
        {"2": small, "1": small, "12": large, "21": large, "121": small}, abs=1e-12
    )
    assert chain.row(states["1"]) == pytest.approx(
        {"2": 0, "1": Q3, "12": Q3**2, "21": 0, "121": 0}, abs=1e-12
    )
    assert np.allclose(chain.transition.sum(axis=1), 1)
    assert chain.initial.sum() == pytest.approx(1, abs=1e-12)


def test_chain_at_infinity_dual_four():
    chain = measures.chain_at_infinity(MonoidSpec(4, Flavor.DUAL))
    states = {str(x): x for x in chain.states}
    theta = sqrt(5) / 10
    q = 0.5 - theta
    initial = dict(zip(states, chain.initial))

    assert chain.p == pytest.approx(q, abs=1e-15)
    for chord in ("(12)", "(14)", "(23)", "(34)"):
        assert initial[chord] == pytest.approx(sqrt(5) / 25, abs=1e-10)
    for chord in ("(13)", "(24)"):
        assert initial[chord] == pytest.approx(0.1 + sqrt(5) / 50, abs=1e-10)
    assert initial["(12)(23)"] == pytest.approx(0.1 - sqrt(5) / 50, abs=1e-10)
    assert initial["(12)(23)(34)"] == pytest.approx(q**3, abs=1e-10)
    row = chain.row(states["(12)"])
    assert row == pytest.approx(
        {
            name: {"(12)": q, "(13)": 2 * theta, "(14)": q}.get(name, 0.0)
            for name in states
        },
        abs=1e-10,
    )


def test_chain_at_finite_parameter(dual3: MonoidSpec):
    chain = measures.chain_at(dual3, Fraction(1, 4))

    assert chain.states[0] == unit(dual3)
    assert chain.initial[0] == Fraction(3, 8)
    assert chain.row(unit(dual3))["e"] == 1
    assert sum(chain.initial) == 1


@pytest.mark.parametrize("p", [Fraction(3, 5), Fraction(0), Fraction(-1, 2)])
def test_chain_at_out_of_range(dual3: MonoidSpec, p: Fraction):
    with pytest.raises(ValueError, match=r"must lie in \(0, q_n\]"):
        measures.chain_at(dual3, p)


def test_chain_to_dict(dual3: MonoidSpec):
    payload = measures.chain_at_infinity(dual3).to_dict()

    assert payload["labels"] == ["(12)", "(13)", "(23)", "(12)(23)"]
    assert payload["states"][-1] == [1, 1, 1]
    assert payload["transition"].shape == (4, 4)


def test_cylinder_probability(dual3: MonoidSpec):
    chain = measures.chain_at_infinity(dual3)
    states = {str(x): x for x in chain.states}

    assert measures.cylinder_probability(chain, [states["(12)(23)"]]) == Fraction(1, 4)
    assert measures.cylinder_probability(
        chain, [states["(12)"], states["(13)"]]
    ) == Fraction(1, 8)
    assert measures.cylinder_probability(chain, [states["(12)"], states["(23)"]]) == 0
    assert measures.cylinder_probability(chain, [unit(dual3)]) == 0


def test_cylinder_ratio_tends_to_visual_weight(dual3: MonoidSpec):
    table = counting.growth_coefficients(dual3, 60)

    assert measures.cylinder_ratio(table, 2, 60) == pytest.approx(0.25, abs=1e-15)
    assert measures.cylinder_ratio(table, 1, 5) == 31 / 63


@pytest.mark.parametrize("n,flavor", SMALL_MONOIDS)
def test_cylinder_probability_matches_graded_transform(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    chain = measures.chain_at_infinity(spec)

    for k in range(1, 5):
        for sequence in _normal_sequences(spec, k):
            expected = measures.graded_mobius_transform(
                spec, chain.p, braid_from_factors(spec, sequence)
            )
            probability = measures.cylinder_probability(chain, sequence)
            if chain.exact:
                assert probability == expected
            else:
                assert probability == pytest.approx(expected, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("n,flavor", SMALL_MONOIDS)
def test_cylinder_ratio_limit_is_visual_weight(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    table = counting.growth_coefficients(spec, 200)
    q = float(measures.critical_parameter(spec))

    for length in range(1, 5):
        assert abs(measures.cylinder_ratio(table, length, 200) - q**length) < 1e-6


@pytest.mark.parametrize("n,flavor", [(3, Flavor.DUAL), (4, Flavor.ARTIN), (4, Flavor.DUAL)])
def test_spectral_check(n: int, flavor: Flavor):
    report = measures.spectral_check(MonoidSpec(n, flavor))

    assert report.radius == pytest.approx(1, abs=1e-8)
    assert report.eigenvector_error < 1e-9
    assert report.identity_error < 1e-12


@pytest.mark.parametrize(
    "spec,parameter,occurrence",
    [
        (MonoidSpec(3, Flavor.ARTIN), sqrt(5) - 2, (sqrt(5) - 2) / (3 - sqrt(5))),
        (MonoidSpec(4, Flavor.DUAL), 0.2 - 0.08 * sqrt(5), None),
    ],
)
def test_delta_count_law(spec: MonoidSpec, parameter: float, occurrence):
    law = measures.delta_count_law(spec)

    assert law.parameter == pytest.approx(parameter, abs=1e-12)
    assert law.at_least_one == law.parameter
    expected = parameter / (1 - parameter) if occurrence is None else occurrence
    assert law.occurrence_probability == pytest.approx(expected, abs=1e-12)
    assert law.mean == law.occurrence_probability
    assert sum(law.cell_probabilities()) == pytest.approx(1, abs=1e-15)


def test_delta_count_law_exact(dual3: MonoidSpec):
    law = measures.delta_count_law(dual3)

    assert law.parameter == Fraction(1, 4)
    assert law.occurrence_probability == Fraction(1, 3)
    assert law.cell_probabilities() == [0.75, 0.1875, 0.0625]


def test_delta_count_law_artin_four():
    law = measures.delta_count_law(MonoidSpec(4, Flavor.ARTIN))

    assert law.parameter == pytest.approx(0.0121, abs=5e-4)
    assert law.occurrence_probability == pytest.approx(0.0122, abs=5e-4)


def test_total_variation():
    assert measures.total_variation(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1
    assert measures.total_variation([0.5, 0.5], [0.25, 0.75]) == 0.25


@pytest.mark.parametrize("n,flavor", [(3, Flavor.ARTIN), (4, Flavor.ARTIN), (4, Flavor.DUAL)])
def test_lambda_star(n: int, flavor: Flavor):
    spec = MonoidSpec(n, flavor)
    report = measures.lambda_star(spec, 20)

    assert garside(spec) not in report.states
    assert len(report.distributions) == 20
    for distribution in report.distributions:
        assert distribution.sum() == pytest.approx(1, abs=1e-12)
        assert (distribution >= -1e-15).all()
    assert report.stationary.sum() == pytest.approx(1, abs=1e-12)
    assert all(
        later <= earlier + 1e-12 for earlier, later in zip(report.gaps, report.gaps[1:])
    )


def test_lambda_star_first_laws_differ_on_four_strands():
    report = measures.lambda_star(MonoidSpec(4, Flavor.ARTIN), 2)
    first, second = report.distributions

    assert measures.total_variation(first, second) > 1e-6
    assert report.gaps[0] > 1e-6


def test_stationarity_witness_artin_four():
    witness = measures.stationarity_witness(MonoidSpec(4, Flavor.ARTIN))

    assert witness.asserted
    assert witness.y == "1"
    assert witness.y_prime == "121"
    assert abs(witness.y_value - witness.y_prime_value) > 1e-6


@pytest.mark.parametrize("flavor", [Flavor.ARTIN, Flavor.DUAL])
def test_stationarity_witness_three_strands_is_reported(flavor: Flavor):
    spec = MonoidSpec(3, flavor)
    witness = measures.stationarity_witness(spec)

    assert not witness.asserted
    assert witness.y_prime_value is None
    assert witness.y_prime == label(garside(spec))
    assert witness.y_value > 0


def test_stationarity_witness_out_of_scope(dual3: MonoidSpec):
    with pytest.raises(ValueError, match=measures.WITNESS_SCOPE_ERROR):
        measures.stationarity_witness(dual3, assert_refutation=True)


def test_chain_critical_residual_guard(monkeypatch: MonkeyPatch, dual3: MonoidSpec):
    monkeypatch.setattr(measures, "CRITICAL_RESIDUAL", -1.0)

    with pytest.raises(_utils.ComputationGuardError, match=r"is not negligible"):
        measures.chain_at_infinity(dual3)
