"""Subnormal Gaussian fuzzy numbers and the risk-averse ranking index.

A subnormal Gaussian fuzzy number describes one uncertain quantity by three
parameters: ``core`` (the most plausible value), ``spread`` (how quickly
plausibility decays around the core), and ``height`` (the peak membership
degree). A height below 1 encodes that even the core value is only partly
credible, which is how detector reliability enters the picture.

Membership is ``height * exp(-((x - core) / spread)**2 / 2)``. Alpha cuts
exist only for levels up to the height; asking above it is a domain error
rather than an empty interval so that callers cannot silently mix up the two
cases.

The ranking index ``core + kappa * spread * log10(height)`` trades severity
against confidence: the logarithm is zero for fully credible numbers and grows
(negatively) without bound as height falls, so larger ``kappa`` pushes poorly
supported alerts down the queue. The logarithm base is fixed once, here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ValidationError

#: Base of the logarithm in the ranking-index penalty term. The penalty scale
#: (and therefore the meaning of kappa) depends on it, so it is defined in
#: exactly one place.
PENALTY_LOG_BASE = 10.0


@dataclass(frozen=True)
class GaussianFuzzyNumber:
    """Immutable subnormal Gaussian fuzzy number.

    Attributes:
        core: Location of the membership peak.
        spread: Positive decay scale; plays the role of a standard deviation.
        height: Peak membership degree in (0, 1].
    """

    core: float
    spread: float
    height: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.core):
            raise ValidationError(f"core must be finite, got {self.core!r}")
        if not (math.isfinite(self.spread) and self.spread > 0.0):
            raise ValidationError(
                f"spread must be positive and finite, got {self.spread!r}"
            )
        if not (0.0 < self.height <= 1.0):
            raise ValidationError(f"height must lie in (0, 1], got {self.height!r}")


@dataclass(frozen=True)
class AlphaInterval:
    """Closed interval of points whose membership is at least ``alpha``."""

    left: float
    right: float
    alpha: float


def membership(number: GaussianFuzzyNumber, x: float) -> float:
    """Evaluate the membership function of ``number`` at ``x``.

    Returns a value in (0, height]; far from the core the Gaussian underflows
    to 0.0 in floating point, which callers should treat as "negligible".
    """
    z = (x - number.core) / number.spread
    return number.height * math.exp(-0.5 * z * z)


def alpha_cut(number: GaussianFuzzyNumber, alpha: float) -> AlphaInterval:
    """Return the alpha cut of ``number`` for a level in (0, height].

    Raises:
        DomainError: if ``alpha`` is not in (0, height]. Levels above the
            height have an empty cut, which is reported as an error instead of
            a sentinel interval.
    """
    if not (0.0 < alpha <= number.height):
        raise DomainError(
            f"alpha cut undefined: alpha={alpha!r} outside (0, {number.height!r}]"
        )
    radius = number.spread * math.sqrt(-2.0 * math.log(alpha / number.height))
    return AlphaInterval(number.core - radius, number.core + radius, alpha)


def ranking_index(number: GaussianFuzzyNumber, kappa: float = 1.0) -> float:
    """Risk-averse priority score: ``core + kappa * spread * log10(height)``.

    ``kappa`` is the risk-attitude parameter; zero ignores confidence entirely
    and larger values penalize wide, low-height numbers harder. Negative
    values would reward implausibility and are rejected.
    """
    if not (math.isfinite(kappa) and kappa >= 0.0):
        raise DomainError(f"kappa must be finite and >= 0, got {kappa!r}")
    penalty = math.log(number.height) / math.log(PENALTY_LOG_BASE)
    return number.core + kappa * number.spread * penalty
