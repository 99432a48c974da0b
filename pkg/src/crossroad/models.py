"""Data models for crossroad route prediction.

Pure data structures: value types, their invariants, and nothing else.
"""

import math
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from crossroad.errors import CharsetError, InvalidParameterError

PLATE_PATTERN = re.compile(r"[A-Z0-9]{1,10}")
PLATE_CHARSET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ"

GLYPH_WIDTH = 5
GLYPH_HEIGHT = 7
CELL_STRIDE = GLYPH_WIDTH + 1

# Velocities and their differences are plain floats in the radar's units.
Velocity = float
VelocityDelta = float


class Route(Enum):
    """Route a vehicle takes at the crossroad."""

    STRAIGHT = "S"
    TURN = "T"


ROUTES = (Route.STRAIGHT, Route.TURN)


def validate_plate(text: str) -> str:
    """Check plate text against the charset and length rules.

    Args:
        text: Candidate plate text.

    Returns:
        The same text, unchanged.

    Raises:
        CharsetError: If the text is empty, longer than 10 characters, or
            contains anything outside A-Z and 0-9.
    """
    if not isinstance(text, str) or PLATE_PATTERN.fullmatch(text) is None:
        raise CharsetError(
            f"Invalid plate text {text!r}: expected 1-10 characters from A-Z, 0-9"
        )
    return text


def validate_mp(mp: int) -> int:
    """Check a mobility-pattern value is 0 or 1."""
    if mp not in (0, 1) or isinstance(mp, bool):
        raise InvalidParameterError(f"Mobility pattern must be 0 or 1, got {mp!r}")
    return int(mp)


@dataclass(frozen=True)
class FrequencyPair:
    """One emitted/reflected radar frequency measurement.

    Attributes:
        f_o: Emitted frequency in hertz.
        f_r: Reflected frequency in hertz.
    """

    f_o: float
    f_r: float


@dataclass(frozen=True)
class RadarCalibration:
    """Scale and noise settings of the simulated radar gun.

    Attributes:
        k: Scale factor from the frequency ratio to velocity units.
        noise_sigma: Standard deviation of additive reflected-frequency
            noise, in hertz. Zero turns noise off.
    """

    k: float = 1.0
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and self.k > 0):
            raise InvalidParameterError(f"Calibration k must be > 0, got {self.k}")
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise InvalidParameterError(
                f"Calibration noise_sigma must be >= 0, got {self.noise_sigma}"
            )


@dataclass(frozen=True, eq=False)
class PlateImage:
    """A grayscale plate image, 7 pixels tall.

    Attributes:
        pixels: uint8 array of shape (7, width), row-major.
    """

    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.pixels.ndim != 2 or self.pixels.shape[0] != GLYPH_HEIGHT:
            raise InvalidParameterError(
                f"Plate image must be {GLYPH_HEIGHT} rows tall, "
                f"got shape {self.pixels.shape}"
            )

    @property
    def width(self) -> int:
        """Image width in pixels."""
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        """Image height in pixels (always 7)."""
        return int(self.pixels.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PlateImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class VehicleRecord:
    """A registered vehicle.

    Attributes:
        plate: License plate text.
        mobility_pattern: 1 if the vehicle historically turned at this
            crossroad on most past trips, 0 if it went straight.
    """

    plate: str
    mobility_pattern: int

    def __post_init__(self) -> None:
        validate_plate(self.plate)
        validate_mp(self.mobility_pattern)


@dataclass(frozen=True)
class Sample:
    """One labelled row of the route dataset.

    Attributes:
        dv: Velocity difference between the two radar reads.
        mp: Mobility pattern of the vehicle (0 or 1).
        label: Observed route.
    """

    dv: float
    mp: int
    label: Route

    def __post_init__(self) -> None:
        if not math.isfinite(self.dv):
            raise InvalidParameterError(f"Sample dv must be finite, got {self.dv}")
        validate_mp(self.mp)
        if not isinstance(self.label, Route):
            raise InvalidParameterError(
                f"Sample label must be a Route, got {self.label!r}"
            )


@dataclass(frozen=True)
class Scenario:
    """A simulated vehicle encounter at the crossroad.

    The vehicle's speed follows v(t) = v0 + a * t between the two radar
    reads.

    Attributes:
        plate_text: Plate the camera sees.
        true_intent: Ground-truth route, used only for scoring.
        initial_velocity: Speed at the first radar read.
        deceleration: Rate of speed change (velocity units per second).
        f_o: Emitted radar frequency in hertz.
        sample_interval: Seconds between the two radar reads.
    """

    plate_text: str
    true_intent: Route
    initial_velocity: float
    deceleration: float
    f_o: float
    sample_interval: float = 5.0

    def __post_init__(self) -> None:
        validate_plate(self.plate_text)
        for name in ("initial_velocity", "deceleration", "f_o", "sample_interval"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"Scenario {name} must be finite")
        if self.sample_interval <= 0:
            raise InvalidParameterError(
                f"Scenario sample_interval must be > 0, got {self.sample_interval}"
            )
        if self.f_o <= 0:
            raise InvalidParameterError(f"Scenario f_o must be > 0, got {self.f_o}")

    def velocity_at(self, t: float) -> float:
        """Return the true speed t seconds after the first read."""
        return self.initial_velocity + self.deceleration * t


@dataclass(frozen=True)
class Unregistered:
    """Outcome of a run stopped at the registry gate."""

    plate: str


@dataclass(frozen=True)
class Predicted:
    """Outcome of a run that reached the classifier.

    Attributes:
        plate: Recognized plate text.
        v1: Velocity from the first radar read.
        v2: Velocity from the second radar read.
        dv: v2 - v1.
        mp: Mobility pattern from the registry.
        label: Predicted route.
    """

    plate: str
    v1: float
    v2: float
    dv: float
    mp: int
    label: Route


PipelineOutcome = Unregistered | Predicted


@dataclass(frozen=True)
class ClassMetrics:
    """Precision, recall, F1 and support for one class or aggregate row."""

    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class Report:
    """Classification report in the layout of a precision/recall table.

    Attributes:
        per_class: Metrics keyed by route, always S then T.
        micro: Metrics over pooled counts.
        macro: Unweighted mean of the per-class metrics.
        weighted: Support-weighted mean of the per-class metrics.
    """

    per_class: dict[Route, ClassMetrics] = field(default_factory=dict)
    micro: ClassMetrics | None = None
    macro: ClassMetrics | None = None
    weighted: ClassMetrics | None = None

    @property
    def is_empty(self) -> bool:
        """True when no prediction was scored."""
        return not self.per_class

    @property
    def total(self) -> int:
        """Number of scored samples."""
        return sum(m.support for m in self.per_class.values())

    def rows(self) -> list[tuple[str, ClassMetrics]]:
        """Return (name, metrics) rows in table order."""
        if self.is_empty:
            return []
        rows = [(route.value, self.per_class[route]) for route in ROUTES]
        rows.append(("micro avg", self.micro))
        rows.append(("macro avg", self.macro))
        rows.append(("weighted avg", self.weighted))
        return rows
