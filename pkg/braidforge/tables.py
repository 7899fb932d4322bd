"""Tab-separated reproductions of the explicit tables for three and four strands.

Tables 2, 3 and 6 print Möbius transforms as integer polynomials in ``p``;
tables 4, 5 and 7 print numbers with ten decimals. Rows are sorted by
length then label, the unit first and Δ last, except in the transition
tables where Δ leads.
"""
import logging
from string import Template
from typing import Callable, Dict, Iterable, List, Sequence

import sympy

from braidforge._utils import format_polynomial
from braidforge.counting import IntPolynomial
from braidforge.measures import (
    chain_at_infinity,
    delta_count_law,
    power_transform,
)
from braidforge.monoid import (
    Flavor,
    MonoidSpec,
    SimpleBraid,
    arrow,
    enumerate_simples,
    garside,
    label,
    left_set,
    mobius_function,
    right_set,
)

LOGGER = logging.getLogger(__name__)

UNKNOWN_TABLE_ERROR = Template("No table $which; choose one of $choices.")

P = sympy.Symbol("p")
NUMERIC_DIGITS = 10
# rho(x) is printed with fewer decimals than the transition matrices
RHO_DIGITS = 8


def _numeric(value, digits: int = NUMERIC_DIGITS) -> str:
    value = round(float(value), digits)
    if value == 0:
        value = 0.0
    return f"{value:.{digits}f}"


def _ordered(spec: MonoidSpec, states: Iterable[SimpleBraid], delta_first: bool = False):
    top = garside(spec)

    def key(x: SimpleBraid):
        is_top = x == top
        return (not is_top if delta_first else is_top, x.length, label(x))

    return sorted(states, key=key)


def _section(title: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = [f"# {title}", "\t".join(header)]
    lines.extend("\t".join(row) for row in rows)
    return "\n".join(lines)


def _polynomial(value) -> str:
    return format_polynomial(IntPolynomial.from_sympy(sympy.expand(value), P).coefficients)


def _successors(spec: MonoidSpec, x: SimpleBraid) -> str:
    others = _ordered(spec, enumerate_simples(spec)[1:])
    followers = [y for y in others if arrow(x, y)]
    if not followers:
        return "e"
    if len(followers) == len(others):
        return "all"
    return ",".join(label(y) for y in followers)


def _indices(generators) -> str:
    indices = [str(g.i) for g in generators]
    return ",".join(indices) if indices else "-"


def _transform_section(spec: MonoidSpec) -> str:
    h = power_transform(spec, P)
    rows = [(label(x), _polynomial(h[x])) for x in _ordered(spec, enumerate_simples(spec))]
    return _section(f"{spec.flavor.value} n={spec.n}", ("x", "h(x)"), rows)


def table_2() -> str:
    """Möbius transform of p^|x| on the simples of both monoids with three strands."""
    return "\n\n".join(
        _transform_section(MonoidSpec(3, flavor)) for flavor in (Flavor.ARTIN, Flavor.DUAL)
    )


def table_3() -> str:
    """Characteristic elements of the artin monoid on four strands.

    The mobius column holds μ(e, x), non-zero exactly on the joins Δ_X of generator subsets.
    """
    spec = MonoidSpec(4, Flavor.ARTIN)
    h = power_transform(spec, P)
    rows = [
        (
            _indices(left_set(x)),
            label(x),
            _indices(right_set(x)),
            _successors(spec, x),
            _polynomial(h[x]),
            str(mobius_function(x)),
        )
        for x in _ordered(spec, enumerate_simples(spec))
    ]
    return _section(
        "artin n=4", ("L(x)", "x", "R(x)", "successors", "h(x)", "mobius"), rows
    )


def _matrix_section(spec: MonoidSpec, keep: Callable[[SimpleBraid], bool]) -> str:
    chain = chain_at_infinity(spec)
    states = [x for x in _ordered(spec, chain.states, delta_first=True) if keep(x)]
    labels = [label(x) for x in states]
    rows = []
    for x in states:
        row = chain.row(x)
        rows.append([label(x)] + [_numeric(row[name]) for name in labels])
    return _section(f"{spec.flavor.value} n={spec.n}", ["x"] + labels, rows)


def table_4() -> str:
    """Transition matrices of the chain at q_3; the Δ row is also the initial law."""
    return "\n\n".join(
        _matrix_section(MonoidSpec(3, flavor), lambda x: True)
        for flavor in (Flavor.ARTIN, Flavor.DUAL)
    )


def table_5() -> str:
    """Parameter of the geometric law of the number of leading Δ factors."""
    rows = []
    for n in (3, 4):
        for flavor in (Flavor.ARTIN, Flavor.DUAL):
            law = delta_count_law(MonoidSpec(n, flavor))
            rows.append(
                (
                    flavor.value,
                    str(n),
                    _numeric(law.parameter),
                    _numeric(law.occurrence_probability),
                    _numeric(law.at_least_one),
                )
            )
    return _section(
        "delta law", ("monoid", "n", "parameter", "occurrence", "at_least_one"), rows
    )


def table_6() -> str:
    """Characteristic elements of the dual monoid on four strands, with ρ(x) = h(x) at q_4."""
    spec = MonoidSpec(4, Flavor.DUAL)
    h = power_transform(spec, P)
    chain = chain_at_infinity(spec)
    rho = dict(zip(chain.states, chain.initial))
    rows = [
        (
            label(x),
            _successors(spec, x),
            _polynomial(h[x]),
            _numeric(rho.get(x, 0), RHO_DIGITS),
        )
        for x in _ordered(spec, enumerate_simples(spec))
    ]
    return _section("dual n=4", ("x", "successors", "h(x)", "rho(x)"), rows)


def table_7() -> str:
    """Transition matrix at q_4 for the dual monoid, restricted to the simples other than e and Δ."""
    spec = MonoidSpec(4, Flavor.DUAL)
    top = garside(spec)
    return _matrix_section(spec, lambda x: x != top)


TABLES: Dict[int, Callable[[], str]] = {
    2: table_2,
    3: table_3,
    4: table_4,
    5: table_5,
    6: table_6,
    7: table_7,
}


def reproduce_table(which: int) -> str:
    """Text of one table, newline-terminated.

    Raises:
        ValueError: no table with that number.
    """
    if which not in TABLES:
        raise ValueError(
            UNKNOWN_TABLE_ERROR.substitute(which=which, choices=", ".join(map(str, TABLES)))
        )
    LOGGER.info(f"Reproducing table {which}")
    return TABLES[which]() + "\n"


def available_tables() -> List[int]:
    return list(TABLES)
