import logging
from typing import Any, Dict, List, Optional, Sequence, Union

from braidforge import counting, measures, render, sampler
from braidforge import normal_form as nf
from braidforge._utils import DEFAULT_TOLERANCE, resolve_seed
from braidforge.automaton import SuffixTable, build_suffix_table
from braidforge.monoid import Flavor, MonoidSpec, SimpleBraid, enumerate_simples

LOGGER = logging.getLogger(__name__)

WordLike = Union[str, nf.GeneratorWord]


class Workbench(object):
    """Everything about one monoid behind a single object. It is recommended that one use this
    rather than the individual modules, since expensive tables are kept between calls."""

    def __init__(
        self,
        n: int,
        flavor: Union[Flavor, str] = Flavor.ARTIN,
        seed: Optional[int] = None,
        tol: Optional[float] = None,
    ):
        self.spec = MonoidSpec(n, flavor)
        self.seed = resolve_seed(seed)
        self.tol = DEFAULT_TOLERANCE if tol is None else tol
        self._suffix_table: Optional[SuffixTable] = None

    def metadata(self) -> Dict[str, Any]:
        """Fields of the output envelope that describe this monoid and its settings."""
        return {
            "monoid": self.spec.flavor.value,
            "n": self.spec.n,
            "seed": self.seed,
            "tol": self.tol,
        }

    def parse(self, word: WordLike) -> nf.GeneratorWord:
        if isinstance(word, nf.GeneratorWord):
            return word
        return nf.parse_word(word, self.spec)

    def normal_form(self, word: WordLike) -> nf.Braid:
        """Garside normal form of a word.

        Args:
            word: text such as ``s1 s2 s1`` or ``(12)(23)``, or a parsed word.

        Returns:
            Braid: the normal sequence of simples.

        Raises:
            WordSyntaxError: the text does not parse.
        """
        return nf.normalize(self.parse(word))

    def equal(self, first: WordLike, second: WordLike) -> bool:
        return nf.equal_words(self.parse(first), self.parse(second))

    def multiply(self, first: WordLike, second: WordLike) -> nf.Braid:
        return nf.multiply(self.normal_form(first), self.normal_form(second))

    def left_divides(self, first: WordLike, second: WordLike) -> bool:
        return nf.left_divides(self.normal_form(first), self.normal_form(second))

    def mirror(self, word: WordLike) -> nf.Braid:
        return nf.mirror(self.normal_form(word))

    def simples(self) -> List[SimpleBraid]:
        return enumerate_simples(self.spec)

    def mobius(self) -> counting.IntPolynomial:
        return counting.mobius_polynomial(self.spec)

    def suffix_table(self, k: int) -> SuffixTable:
        """Suffix counts up to length k; a table with a longer horizon is reused."""
        if self._suffix_table is None or self._suffix_table.k < k:
            self._suffix_table = build_suffix_table(self.spec, k)
        return self._suffix_table

    def first_factor_law(self, k: int) -> Dict[SimpleBraid, Any]:
        """Exact law of the first factor of a uniform braid of length k."""
        return sampler.exact_first_factor_law(self.suffix_table(k), k)

    def count(self, k_max: int) -> counting.CountTable:
        return counting.growth_coefficients(self.spec, k_max)

    def critical_root(self, tol: Optional[float] = None) -> counting.CriticalRoot:
        return counting.critical_root(self.spec, tol=self.tol if tol is None else tol)

    def growth_diagnostics(self, k_max: int, strict: bool = True) -> counting.GrowthDiagnostics:
        return counting.growth_ratio_diagnostics(
            self.count(k_max), self.critical_root(), strict=strict
        )

    def charney_graph(self) -> counting.CharneyGraph:
        return counting.charney_graph(self.spec)

    def transform(self, p: Any = None) -> measures.SimpleFunction:
        """Möbius transform of p^|x|; p = None evaluates at q_n."""
        if p is None:
            p = measures.critical_parameter(self.spec)
        return measures.SimpleFunction(self.spec, dict(measures.power_transform(self.spec, p)))

    def chain(self, p: Any = None) -> measures.ChainSpec:
        return measures.chain_at(self.spec, p)

    def delta_law(self) -> measures.DeltaLaw:
        return measures.delta_count_law(self.spec)

    def spectral_check(self) -> measures.SpectralReport:
        return measures.spectral_check(self.spec)

    def lambda_star(self, i_max: int) -> measures.LambdaStar:
        return measures.lambda_star(self.spec, i_max)

    def stationarity_witness(self) -> measures.StationarityWitness:
        return measures.stationarity_witness(self.spec)

    def sample(self, kind: str, count: int, length: int, workers: int = 1) -> List[Any]:
        """Draws `count` samples seeded with this workbench's seed.

        Args:
            kind: ``uniform``, ``walk`` or ``infinite``.
            count: number of samples.
            length: braid length k, or prefix length j for ``infinite``.
            workers: processes; each one draws from its own spawned seed.

        Returns:
            list: braids, or tuples of simples for ``infinite``.
        """
        return sampler.sample_batch(
            kind, self.spec, count, length, seed=self.seed, workers=workers
        )

    def delta_statistics(self, k: int, samples: int) -> sampler.DeltaStatistics:
        return sampler.delta_count_statistics(self.spec, k, samples, seed=self.seed)

    def convergence(
        self, k_list: Sequence[int], j: int, samples: int, strict: bool = True
    ) -> sampler.ConvergenceStatistics:
        return sampler.convergence_statistics(
            self.spec, k_list, j, samples, seed=self.seed, strict=strict
        )

    def render(self, word: WordLike, format: str = "ascii") -> str:
        return render.render(self.normal_form(word), format=format)
