import logging
import re
from dataclasses import dataclass
from string import Template
from typing import Iterable, List, Sequence, Tuple

from more_itertools import pairwise

from braidforge._utils import SPEC_MISMATCH_ERROR
from braidforge.monoid import (
    Flavor,
    GeneratorId,
    MonoidSpec,
    SimpleBraid,
    arrow,
    canonical_word,
    garside,
    generator_simple,
    label,
    left_quotient_by_generator,
    left_set,
    right_set,
    simple_product,
    unit,
)

LOGGER = logging.getLogger(__name__)

UNKNOWN_TOKEN_ERROR = Template('Unknown token "$token"')
INDEX_RANGE_ERROR = Template("Generator index $index out of range for $spec")
MALFORMED_PAIR_ERROR = Template('Malformed generator pair "$token"')
LETTER_ERROR = "Word letters must belong to the monoid alphabet."
NOT_NORMAL_ERROR = "Factors do not form a normal sequence of non-unit simples."
HEIGHT_RANGE_ERROR = Template("Prefix height $j is outside [1, $height].")

_ARTIN_TOKEN = re.compile(r"s(\d+)")
_DUAL_COMMA_TOKEN = re.compile(r"\((\d+),(\d+)\)")
_DUAL_DIGIT_TOKEN = re.compile(r"\((\d)(\d)\)")
_ANY_TOKEN = re.compile(r"\S[^\s(]*")


class WordSyntaxError(ValueError):
    """Parse failure; `position` is the 1-based character offset of the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class GeneratorWord:
    spec: MonoidSpec
    letters: Tuple[GeneratorId, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        if any(letter not in self.spec.generator_index for letter in self.letters):
            raise ValueError(LETTER_ERROR)

    def __len__(self) -> int:
        return len(self.letters)

    def __add__(self, other: "GeneratorWord") -> "GeneratorWord":
        if self.spec != other.spec:
            raise ValueError(SPEC_MISMATCH_ERROR)
        return GeneratorWord(self.spec, self.letters + other.letters)

    def reversed(self) -> "GeneratorWord":
        return GeneratorWord(self.spec, self.letters[::-1])

    def text(self) -> str:
        return " ".join(letter.label(self.spec.flavor) for letter in self.letters)


@dataclass(frozen=True)
class Braid:
    """A braid as its normal sequence; the unit is the single factor ``e``."""

    spec: MonoidSpec
    factors: Tuple[SimpleBraid, ...]

    @property
    def length(self) -> int:
        return sum(factor.length for factor in self.factors)

    @property
    def height(self) -> int:
        return len(self.factors)

    @property
    def is_unit(self) -> bool:
        return self.factors[0].is_unit

    def word(self) -> GeneratorWord:
        letters: List[GeneratorId] = []
        for factor in self.factors:
            letters.extend(canonical_word(factor))
        return GeneratorWord(self.spec, tuple(letters))

    def encoding(self) -> List[List[int]]:
        return [factor.encoding() for factor in self.factors]

    def labels(self) -> List[str]:
        return [label(factor) for factor in self.factors]

    def __str__(self) -> str:
        return "".join(f"[{name}]" for name in self.labels())


def _garside_word(spec: MonoidSpec) -> Tuple[GeneratorId, ...]:
    if spec.is_artin:
        return canonical_word(garside(spec))
    return tuple(GeneratorId(i, i + 1) for i in range(1, spec.n))


def _check_index(index: int, spec: MonoidSpec, position: int):
    if not 1 <= index <= spec.n:
        raise WordSyntaxError(INDEX_RANGE_ERROR.substitute(index=index, spec=spec), position)


def parse_word(text: str, spec: MonoidSpec) -> GeneratorWord:
    """Parses ``s1 s2`` (artin), ``(12)(23)`` or ``(1,2) (2,3)`` (dual) and ``D`` for Δ.

    Args:
        text: the word; an empty string is the unit.
        spec: the monoid the letters belong to.

    Returns:
        GeneratorWord: the parsed letters.

    Raises:
        WordSyntaxError: unknown token, index out of range or malformed pair.
    """
    letters: List[GeneratorId] = []
    cursor = 0
    while cursor < len(text):
        if text[cursor].isspace():
            cursor += 1
            continue
        position = cursor + 1
        if text[cursor] == "D":
            letters.extend(_garside_word(spec))
            cursor += 1
            continue
        if spec.is_artin:
            match = _ARTIN_TOKEN.match(text, cursor)
            if match is None:
                token = _ANY_TOKEN.match(text, cursor).group(0)
                raise WordSyntaxError(UNKNOWN_TOKEN_ERROR.substitute(token=token), position)
            index = int(match.group(1))
            if not 1 <= index < spec.n:
                raise WordSyntaxError(
                    INDEX_RANGE_ERROR.substitute(index=index, spec=spec), position
                )
            letters.append(GeneratorId(index, index + 1))
            cursor = match.end()
            continue
        if text[cursor] != "(":
            token = _ANY_TOKEN.match(text, cursor).group(0)
            raise WordSyntaxError(UNKNOWN_TOKEN_ERROR.substitute(token=token), position)
        match = _DUAL_COMMA_TOKEN.match(text, cursor) or _DUAL_DIGIT_TOKEN.match(text, cursor)
        if match is None:
            closing = text.find(")", cursor)
            token = text[cursor:] if closing < 0 else text[cursor : closing + 1]
            raise WordSyntaxError(MALFORMED_PAIR_ERROR.substitute(token=token), position)
        first, second = int(match.group(1)), int(match.group(2))
        if first == second:
            raise WordSyntaxError(
                MALFORMED_PAIR_ERROR.substitute(token=match.group(0)), position
            )
        _check_index(first, spec, position)
        _check_index(second, spec, position)
        letters.append(GeneratorId(min(first, second), max(first, second)))
        cursor = match.end()
    return GeneratorWord(spec, tuple(letters))


def _left_weight(factors: List[SimpleBraid]):
    """Moves letters leftwards until every adjacent pair satisfies the arrow relation."""
    changed = True
    while changed:
        changed = False
        for j in range(len(factors) - 2, -1, -1):
            while diff := left_set(factors[j + 1]) - right_set(factors[j]):
                generator = next(iter(diff))
                factors[j] = simple_product(factors[j], generator)
                factors[j + 1] = left_quotient_by_generator(generator, factors[j + 1])
                changed = True
        if any(factor.is_unit for factor in factors):
            factors[:] = [factor for factor in factors if not factor.is_unit]
            changed = True


def _insert_letters(
    spec: MonoidSpec, factors: List[SimpleBraid], letters: Iterable[GeneratorId]
) -> "Braid":
    factors = [factor for factor in factors if not factor.is_unit]
    for letter in letters:
        factors.append(generator_simple(spec, letter))
        _left_weight(factors)
    if not factors:
        return unit_braid(spec)
    return Braid(spec, tuple(factors))


def unit_braid(spec: MonoidSpec) -> Braid:
    return Braid(spec, (unit(spec),))


def normalize(word: GeneratorWord) -> Braid:
    """Garside normal form by letter insertion with a leftward carry."""
    return _insert_letters(word.spec, [], word.letters)


def braid_from_factors(spec: MonoidSpec, factors: Sequence[SimpleBraid]) -> Braid:
    """Wraps an already normal sequence, checking it.

    Raises:
        ValueError: a factor is the unit (unless it is the only one) or a pair fails the arrow test.
    """
    factors = tuple(factors)
    if not factors or (len(factors) == 1 and factors[0].is_unit):
        return unit_braid(spec)
    if any(f.is_unit or f.spec != spec for f in factors) or not all(
        arrow(x, y) for x, y in pairwise(factors)
    ):
        raise ValueError(NOT_NORMAL_ERROR)
    return Braid(spec, factors)


def is_normal_sequence(factors: Sequence[SimpleBraid]) -> bool:
    return all(arrow(x, y) for x, y in pairwise(factors))


def multiply(x: Braid, y: Braid) -> Braid:
    if x.spec != y.spec:
        raise ValueError(SPEC_MISMATCH_ERROR)
    return _insert_letters(x.spec, list(x.factors), y.word().letters)


def equal_words(first: GeneratorWord, second: GeneratorWord) -> bool:
    if first.spec != second.spec:
        raise ValueError(SPEC_MISMATCH_ERROR)
    return normalize(first) == normalize(second)


def left_divides(x: Braid, y: Braid) -> bool:
    """Decides x ≤ y by peeling the letters of x off the front of y."""
    if x.spec != y.spec:
        raise ValueError(SPEC_MISMATCH_ERROR)
    factors = [factor for factor in y.factors if not factor.is_unit]
    for letter in x.word().letters:
        if not factors or letter not in left_set(factors[0]):
            return False
        factors[0] = left_quotient_by_generator(letter, factors[0])
        _left_weight(factors)
    return True


def height(x: Braid) -> int:
    return x.height


def head_prefix(x: Braid, j: int) -> Braid:
    """The braid x_1 ⋯ x_j made of the first j factors.

    Raises:
        ValueError: j is outside [1, height].
    """
    if not 1 <= j <= x.height:
        raise ValueError(HEIGHT_RANGE_ERROR.substitute(j=j, height=x.height))
    return Braid(x.spec, x.factors[:j])


def delta_power(spec: MonoidSpec, k: int) -> Braid:
    if k == 0:
        return unit_braid(spec)
    return Braid(spec, (garside(spec),) * k)


def mirror(x: Braid) -> Braid:
    """Normal form of the reversed word."""
    return normalize(x.word().reversed())


def embed_artin_word(word: GeneratorWord) -> GeneratorWord:
    """Letterwise s_i -> (i, i+1) into the dual monoid on the same strands."""
    if word.spec.flavor is not Flavor.ARTIN:
        raise ValueError(LETTER_ERROR)
    return GeneratorWord(MonoidSpec(word.spec.n, Flavor.DUAL), word.letters)
