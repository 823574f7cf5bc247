from __future__ import annotations

import logging
import random
from fractions import Fraction
from typing import Callable, List, Optional, TypeVar

from latticemaps.errors import LatticeMapsError, SamplingError

logger = logging.getLogger(__name__)

T = TypeVar("T")

MAX_NUMERATOR = 50
MAX_DENOMINATOR = 20
DEFAULT_RETRIES = 200


class RationalSampler:
    """Seeded source of small random rationals for identity testing."""

    def __init__(
        self,
        seed: Optional[int] = None,
        max_numerator: int = MAX_NUMERATOR,
        max_denominator: int = MAX_DENOMINATOR,
    ) -> None:
        self._rng = random.Random(seed)
        self.max_numerator = max_numerator
        self.max_denominator = max_denominator

    def rat(self, nonzero: bool = False) -> Fraction:
        while True:
            value = Fraction(
                self._rng.randint(-self.max_numerator, self.max_numerator),
                self._rng.randint(1, self.max_denominator),
            )
            if value or not nonzero:
                return value

    def rats(self, count: int, nonzero: bool = False, distinct: bool = False) -> List[Fraction]:
        values: List[Fraction] = []
        while len(values) < count:
            value = self.rat(nonzero=nonzero)
            if distinct and value in values:
                continue
            values.append(value)
        return values

    def spawn_seed(self) -> int:
        """Seed for an independent sampler, drawn from this one."""
        return self._rng.getrandbits(63)

    def attempt(self, build: Callable[["RationalSampler"], T], retries: int = DEFAULT_RETRIES) -> T:
        """Call ``build`` until it returns without hitting a degenerate point."""
        last: Optional[BaseException] = None
        for _ in range(retries):
            try:
                return build(self)
            except (LatticeMapsError, ZeroDivisionError) as exc:
                last = exc
                logger.debug("rejected sample: %s", exc)
        raise SamplingError("no-valid-samples", f"{retries} draws rejected, last: {last}")
