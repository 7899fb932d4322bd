import json
import logging
import os
from fractions import Fraction
from string import Template
from typing import Any, Dict, Optional, Sequence

LOGGER = logging.getLogger(__name__)

TOOL_NAME = "braidforge"
TOOL_VERSION = "0.1.0"

# Environment variable holding the default sampler seed
SEED_ENV_VAR = "BRAIDFORGE_SEED"
DEFAULT_SEED = 0

# Internal numeric tolerance for probabilities
DEFAULT_TOLERANCE = 1e-12

# Label of the fixed splittable generator used by every sampler
RNG_ALGORITHM = "PCG64"

ARTIN_MAX_STRANDS = 8
DUAL_MAX_STRANDS = 12
INCLUSION_EXCLUSION_MAX_GENERATORS = 24
BRUTEFORCE_MAX_STRANDS = 4
BRUTEFORCE_MAX_LENGTH = 8
SUFFIX_TABLE_MAX_SIMPLES = 5040

# Error messages shared across modules
STRAND_COUNT_ERROR = Template(
    "Strand count $n is outside the supported range [2, $cap] for the $flavor monoid."
)
SPEC_MISMATCH_ERROR = "Both braids must belong to the same monoid."
INVALID_SEED_ERROR = Template(
    'Seed "$seed" is not an unsigned 64-bit integer. Check $env_var.'
)


class ComputationGuardError(ValueError):
    """Raised when a state-space guard is exceeded or an internal certificate fails."""


def resolve_seed(seed: Optional[int] = None) -> int:
    """Resolve a seed, falling back to the environment and then to `DEFAULT_SEED`.

    Args:
        seed: explicit seed; takes precedence over the environment.

    Returns:
        int: an unsigned 64-bit seed.

    Raises:
        ValueError: the seed (explicit or from the environment) is not an unsigned 64-bit integer.
    """
    if seed is None:
        raw = os.environ.get(SEED_ENV_VAR)
        if raw is None:
            return DEFAULT_SEED
        try:
            seed = int(raw)
        except ValueError:
            raise ValueError(
                INVALID_SEED_ERROR.substitute(seed=raw, env_var=SEED_ENV_VAR)
            ) from None
    if not 0 <= seed < 2**64:
        raise ValueError(INVALID_SEED_ERROR.substitute(seed=seed, env_var=SEED_ENV_VAR))
    return seed


def _superscript_free_term(coefficient: int, power: int, variable: str) -> str:
    magnitude = abs(coefficient)
    if power == 0:
        return str(magnitude)
    monomial = variable if power == 1 else f"{variable}^{power}"
    if magnitude == 1:
        return monomial
    return f"{magnitude}{monomial}"


def format_polynomial(coefficients: Sequence[int], variable: str = "p") -> str:
    """Formats integer coefficients (ascending degree) as `1 - 2p + p^3`."""
    terms = [(c, k) for k, c in enumerate(coefficients) if c != 0]
    if not terms:
        return "0"
    text = ""
    for index, (coefficient, power) in enumerate(terms):
        term = _superscript_free_term(coefficient, power, variable)
        if index == 0:
            text = term if coefficient > 0 else f"-{term}"
        else:
            text += f" + {term}" if coefficient > 0 else f" - {term}"
    return text


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return float(value) if value.denominator != 1 else value.numerator
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return value.item()
    return value


def build_envelope(
    payload: Any, metadata: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Builds the JSON output envelope.
    Args:
        payload: command result, already made of plain containers and numbers.
        metadata: extra fields such as monoid, n, seed and tolerance.

    Returns:
        dict: envelope with tool name and version.
    """
    envelope = {"tool": TOOL_NAME, "version": TOOL_VERSION}
    if metadata is not None:
        envelope.update(metadata)
    envelope["payload"] = _jsonable(payload)
    return envelope


def dumps(value: Any) -> str:
    return json.dumps(_jsonable(value), sort_keys=False)
