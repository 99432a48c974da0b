"""SplitMix64 random stream shared by every simulation component.

Pure integer arithmetic, so a seed reproduces the same stream on every
platform and Python version.
"""

import math
from typing import MutableSequence, TypeVar

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB
TWO_POW_MINUS_53 = 2.0**-53

T = TypeVar("T")


class Rng:
    """Seeded SplitMix64 generator.

    Attributes:
        state: Current 64-bit state.
    """

    def __init__(self, seed: int = 0) -> None:
        """Initialize the stream.

        Args:
            seed: Any integer; reduced modulo 2**64.
        """
        self.state = seed & MASK64

    def next(self) -> int:
        """Advance the state and return the next 64-bit output."""
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX_1) & MASK64
        z = ((z ^ (z >> 27)) * MIX_2) & MASK64
        return z ^ (z >> 31)

    def uniform01(self) -> float:
        """Return a uniform draw in (0, 1] with 53 bits of resolution."""
        u = (self.next() >> 11) * TWO_POW_MINUS_53
        return u if u > 0.0 else TWO_POW_MINUS_53

    def gaussian(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Return a normal draw via the Box-Muller cosine branch.

        Always consumes exactly two uniform draws.
        """
        u1 = self.uniform01()
        u2 = self.uniform01()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
        return mu + sigma * z

    def bernoulli(self, p: float) -> bool:
        """Return True with probability p; always consumes one draw."""
        return self.uniform01() < p

    def below(self, n: int) -> int:
        """Return an integer in [0, n)."""
        return self.next() % n

    def shuffle(self, items: MutableSequence[T]) -> None:
        """Shuffle items in place with Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def stream_for(base: int, index: int) -> Rng:
    """Return the dedicated stream for work item `index` under `base`."""
    return Rng(Rng(base ^ index).next())


def rng_next(rng: Rng) -> int:
    """Functional alias of `Rng.next`."""
    return rng.next()


def uniform01(rng: Rng) -> float:
    """Functional alias of `Rng.uniform01`."""
    return rng.uniform01()


def gaussian(rng: Rng, mu: float, sigma: float) -> float:
    """Functional alias of `Rng.gaussian`."""
    return rng.gaussian(mu, sigma)
