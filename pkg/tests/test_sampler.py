from collections import Counter
from fractions import Fraction
from unittest.mock import MagicMock

import numpy as np
import pytest
import scipy.stats as ss
from _pytest.monkeypatch import MonkeyPatch

from braidforge import sampler
from braidforge.measures import chain_at_infinity, delta_count_law
from braidforge.monoid import Flavor, MonoidSpec, arrow, garside
from braidforge.normal_form import is_normal_sequence, normalize, parse_word


@pytest.fixture(scope="session")
def artin3() -> MonoidSpec:
    return MonoidSpec(3, Flavor.ARTIN)


@pytest.fixture(scope="session")
def dual3() -> MonoidSpec:
    return MonoidSpec(3, Flavor.DUAL)


def test_rng_seed_is_reproducible():
    first = sampler.RngSeed(42).generator().integers(0, 2**32, size=4)
    second = sampler.RngSeed(42).generator().integers(0, 2**32, size=4)
    other = sampler.RngSeed(43).generator().integers(0, 2**32, size=4)

    assert sampler.RngSeed(42).algorithm == "PCG64"
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


def test_rng_seed_workers_differ():
    seed = sampler.RngSeed(7)
    draws = [seed.generator(worker).integers(0, 2**32, size=4) for worker in range(3)]

    assert not np.array_equal(draws[0], draws[1])
    assert not np.array_equal(draws[1], draws[2])
    assert np.array_equal(draws[2], seed.generator(2).integers(0, 2**32, size=4))


@pytest.mark.parametrize("bound", [1, 2, 3, 2**64 + 1, 10**40])
def test_uniform_below(bound: int):
    rng = sampler.RngSeed(0).generator()

    assert all(0 <= sampler._uniform_below(rng, bound) < bound for _ in range(50))


def test_weighted_index_skips_zero_weights():
    rng = sampler.RngSeed(0).generator()

    assert {sampler._weighted_index(rng, [0, 3, 0, 1]) for _ in range(100)} == {1, 3}


def test_sample_uniform(dual3: MonoidSpec):
    braid = sampler.sample_uniform(dual3, 12, seed=5)

    assert braid.length == 12
    assert is_normal_sequence(braid.factors)
    assert sampler.sample_uniform(dual3, 12, seed=5) == braid


def test_sample_uniform_reuses_table(artin3: MonoidSpec):
    table = sampler.build_suffix_table(artin3, 20)

    assert sampler.sample_uniform(artin3, 9, seed=1, table=table).length == 9
    assert sampler.sample_uniform(artin3, 0, seed=1, table=table).is_unit


@pytest.mark.parametrize(
    "spec,k,expected",
    [
        (MonoidSpec(3, Flavor.ARTIN), 5, 20),
        (MonoidSpec(3, Flavor.DUAL), 4, 31),
        (MonoidSpec(4, Flavor.DUAL), 3, 101),
        (MonoidSpec(4, Flavor.ARTIN), 0, 1),
    ],
)
def test_exact_uniform_law_is_uniform(spec: MonoidSpec, k: int, expected: int):
    law = sampler.exact_uniform_law(spec, k)

    assert len(law) == expected
    assert set(law.values()) == {Fraction(1, expected)}
    assert all(braid.length == k for braid in law)


def test_exact_walk_law_is_not_uniform(artin3: MonoidSpec):
    law = sampler.exact_walk_law(artin3, 3)
    top = normalize(parse_word("s1 s2 s1", artin3))

    assert len(law) == 7
    assert sum(law.values()) == 1
    assert law[top] == Fraction(1, 4)
    assert {value for braid, value in law.items() if braid != top} == {Fraction(1, 8)}


def test_sample_walk(artin3: MonoidSpec):
    braid = sampler.sample_walk(artin3, 15, seed=9)

    assert braid.length == 15
    assert sampler.sample_walk(artin3, 15, seed=9) == braid


def test_sample_infinite_prefix(artin3: MonoidSpec):
    chain = chain_at_infinity(artin3)
    prefix = sampler.sample_infinite_prefix(chain, 8, seed=2)

    assert len(prefix) == 8
    assert all(arrow(x, y) for x, y in zip(prefix, prefix[1:]))
    assert not any(x.is_unit for x in prefix)


def test_sample_infinite_prefix_bad_length(artin3: MonoidSpec):
    with pytest.raises(ValueError, match=sampler.PREFIX_LENGTH_ERROR):
        sampler.sample_infinite_prefix(chain_at_infinity(artin3), 0)


@pytest.mark.parametrize("kind", ["uniform", "walk", "infinite"])
def test_sample_batch(dual3: MonoidSpec, kind: str):
    samples = sampler.sample_batch(kind, dual3, 6, 4, seed=11)

    assert len(samples) == 6
    assert sampler.sample_batch(kind, dual3, 6, 4, seed=11) == samples
    if kind == "infinite":
        assert all(len(sample) == 4 for sample in samples)
    else:
        assert all(sample.length == 4 for sample in samples)


def test_sample_batch_workers(dual3: MonoidSpec):
    samples = sampler.sample_batch("uniform", dual3, 5, 6, seed=3, workers=2)

    assert len(samples) == 5
    assert sampler.sample_batch("uniform", dual3, 5, 6, seed=3, workers=2) == samples


def test_sample_batch_unknown_kind(dual3: MonoidSpec):
    with pytest.raises(ValueError, match=r'Unknown sample kind "exact"'):
        sampler.sample_batch("exact", dual3, 1, 1)


def test_leading_delta_count(artin3: MonoidSpec):
    assert sampler.leading_delta_count(normalize(parse_word("D s1 D", artin3))) == 2
    assert sampler.leading_delta_count(normalize(parse_word("s1 s1", artin3))) == 0


def test_exact_first_factor_law(dual3: MonoidSpec):
    table = sampler.build_suffix_table(dual3, 6)
    law = sampler.exact_first_factor_law(table, 6)

    assert sum(law.values()) == 1
    assert law[garside(dual3)] == Fraction(31, 127)


@pytest.mark.parametrize(
    "observed,expected,merged_observed,merged_expected,merges",
    [
        ([9990, 8, 2], [9990.0, 7.0, 3.0], [9990, 10], [9990.0, 10.0], 1),
        ([100, 3, 1], [100.0, 2.0, 1.0], [104], [103.0], 2),
        ([70, 20, 10], [70.0, 20.0, 10.0], [70, 20, 10], [70.0, 20.0, 10.0], 0),
    ],
)
def test_merge_cells(
    monkeypatch: MonkeyPatch,
    observed,
    expected,
    merged_observed,
    merged_expected,
    merges: int,
):
    mock_logger = MagicMock()
    monkeypatch.setattr(sampler, "LOGGER", mock_logger)

    result = sampler._merge_cells(observed, expected)

    assert result == (merged_observed, merged_expected)
    assert mock_logger.warning.call_count == merges
    assert sum(result[0]) == sum(observed)


def test_delta_count_statistics(dual3: MonoidSpec):
    report = sampler.delta_count_statistics(dual3, 30, 10_000, seed=1)

    assert sum(report.cells) == 10_000
    assert report.expected == (7500.0, 1875.0, 625.0)
    assert report.at_least_one == pytest.approx(0.25, abs=0.02)
    assert report.mean == pytest.approx(1 / 3, abs=0.04)
    assert report.tv < 0.03
    assert report.pvalue > 1e-6
    assert set(report.to_dict()) == {
        "k",
        "N",
        "seed",
        "cells",
        "expected",
        "chi2",
        "pvalue",
        "tv",
        "mean",
        "at_least_one",
    }


def test_sample_uniform_passes_chi_square(artin3: MonoidSpec):
    samples = sampler.sample_batch("uniform", artin3, 70_000, 3, seed=2024)
    tally = Counter(samples)

    assert set(tally) == set(sampler.exact_uniform_law(artin3, 3))
    assert len(tally) == 7
    assert ss.chisquare(list(tally.values())).pvalue > 0.001


@pytest.mark.parametrize(
    "spec",
    [MonoidSpec(3, Flavor.DUAL), MonoidSpec(3, Flavor.ARTIN), MonoidSpec(4, Flavor.ARTIN)],
    ids=str,
)
def test_delta_count_statistics_matches_limit_law(spec: MonoidSpec):
    report = sampler.delta_count_statistics(spec, 60, 100_000, seed=9)
    law = delta_count_law(spec)

    assert sum(report.cells) == 100_000
    assert report.at_least_one == pytest.approx(float(law.at_least_one), abs=0.01)
    assert report.mean == pytest.approx(float(law.mean), abs=0.01)
    assert report.tv < 0.01
    assert report.pvalue > 1e-4


def test_delta_count_statistics_too_few_samples(dual3: MonoidSpec):
    with pytest.raises(ValueError, match=r"at least 10000 samples, got 99"):
        sampler.delta_count_statistics(dual3, 10, 99)


def test_convergence_statistics(dual3: MonoidSpec):
    report = sampler.convergence_statistics(dual3, [20, 4], 2, 10_000, seed=4, strict=False)

    assert report.k_list == (4, 20)
    assert len(report.tv) == 2
    assert report.allowance > 0
    assert report.exact_first_factor_tv[1] < report.exact_first_factor_tv[0]
    assert report.to_dict()["distance"] == "total variation"


def test_convergence_statistics_bad_arguments(dual3: MonoidSpec):
    with pytest.raises(ValueError, match=sampler.PREFIX_LENGTH_ERROR):
        sampler.convergence_statistics(dual3, [4], 0, 10_000)
    with pytest.raises(ValueError, match=r"at least 10000 samples"):
        sampler.convergence_statistics(dual3, [4], 1, 10)
