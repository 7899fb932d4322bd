import logging
from string import Template
from typing import Any, List, Sequence, Tuple, Union

import pandas as pd

from braidforge import workbench
from braidforge.counting import CountTable
from braidforge.measures import ChainSpec, SimpleFunction
from braidforge.monoid import SimpleBraid, label
from braidforge.normal_form import Braid

LOGGER = logging.getLogger(__name__)

WORD_COLUMN_NAME = "word"

TOO_FEW_COLUMN_ERROR = """Not enough columns in dataframe provided. Please make sure to provide a
column of braid words, written like "s1 s2 s1" or "(12)(23)"."""
MISSING_COLUMN = Template('Missing column name "$column_name" expected for braid operations.')

Sample = Union[Braid, Tuple[SimpleBraid, ...]]


def _check_column_length(dataframe: pd.DataFrame):
    """Every braid operation needs at least the word column."""
    if len(dataframe.columns) < 1:
        raise ValueError(TOO_FEW_COLUMN_ERROR)


def _get_column_value_from_dataframe(dataframe: pd.DataFrame, column_name: str) -> List:
    try:
        column = dataframe[column_name]
    except KeyError as e:
        e.add_note(MISSING_COLUMN.substitute(column_name=column_name))
        raise
    return column.fillna("").astype(str).tolist()


def count_table_frame(table: CountTable) -> pd.DataFrame:
    """One row per length k; counts stay Python integers in an object column."""
    return pd.DataFrame(
        {
            "k": range(table.k_max + 1),
            "count": pd.Series(list(table.values), dtype=object),
        }
    )


def simple_function_frame(function: SimpleFunction, name: str = "value") -> pd.DataFrame:
    simples = list(function.values)
    return pd.DataFrame(
        {
            "simple": [label(x) for x in simples],
            "length": [x.length for x in simples],
            name: pd.Series([function[x] for x in simples], dtype=object),
        }
    )


def chain_frame(chain: ChainSpec) -> pd.DataFrame:
    """Transition matrix indexed by state labels, with the initial law as the first column."""
    labels = [label(x) for x in chain.states]
    frame = pd.DataFrame(chain.transition.tolist(), index=labels, columns=labels)
    frame.insert(0, "initial", list(chain.initial))
    frame.index.name = "state"
    return frame


def samples_frame(samples: Sequence[Sample]) -> pd.DataFrame:
    """Braids become one row each; prefixes drawn at infinity become one row per factor."""
    records = []
    for index, sample in enumerate(samples):
        if isinstance(sample, Braid):
            records.append(
                {
                    "sample": index,
                    "normal_form": str(sample),
                    "length": sample.length,
                    "height": sample.height,
                }
            )
            continue
        for position, factor in enumerate(sample, start=1):
            records.append(
                {"sample": index, "position": position, "factor": label(factor)}
            )
    return pd.DataFrame.from_records(records)


class PandasClient(object):
    def __init__(self, bench: workbench.Workbench):
        self.bench = bench

    def normalize_by_dataframe(
        self, dataframe: pd.DataFrame, word_column_name: str = WORD_COLUMN_NAME
    ) -> pd.DataFrame:
        """Adds normal form, length and height columns for the words of one column.

        Raises:
            ValueError: the dataframe has no columns, or a word does not parse.
            KeyError: the word column is missing.
        """
        _check_column_length(dataframe)
        words = _get_column_value_from_dataframe(dataframe, word_column_name)
        braids = [self.bench.normal_form(word) for word in words]
        result = dataframe.copy()
        result["normal_form"] = [str(braid) for braid in braids]
        result["length"] = [braid.length for braid in braids]
        result["height"] = [braid.height for braid in braids]
        return result

    def counts(self, k_max: int) -> pd.DataFrame:
        return count_table_frame(self.bench.count(k_max))

    def transform(self, p: Any = None) -> pd.DataFrame:
        return simple_function_frame(self.bench.transform(p), name="h")

    def chain(self, p: Any = None) -> pd.DataFrame:
        return chain_frame(self.bench.chain(p))

    def samples(self, kind: str, count: int, length: int, workers: int = 1) -> pd.DataFrame:
        return samples_frame(self.bench.sample(kind, count, length, workers=workers))
