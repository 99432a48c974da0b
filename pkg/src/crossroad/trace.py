"""Append-only step trace of one pipeline run."""

from dataclasses import asdict, dataclass
from typing import Any, ClassVar


@dataclass(frozen=True)
class PlateDetected:
    """Camera produced a plate image."""

    digest: str
    kind: ClassVar[str] = "PlateDetected"


@dataclass(frozen=True)
class PlateRecognized:
    """Recognizer read the plate text."""

    text: str
    kind: ClassVar[str] = "PlateRecognized"


@dataclass(frozen=True)
class RegistryHit:
    """Plate found in the registry."""

    plate: str
    mp: int
    kind: ClassVar[str] = "RegistryHit"


@dataclass(frozen=True)
class RegistryMiss:
    """Plate not registered; the run stops here."""

    plate: str
    kind: ClassVar[str] = "RegistryMiss"


@dataclass(frozen=True)
class FrequencySent:
    """Radar gun emitted a beam at time t (seconds)."""

    f_o: float
    t: float
    kind: ClassVar[str] = "FrequencySent"


@dataclass(frozen=True)
class VelocityComputed:
    """Reflected frequency converted into a velocity."""

    t: float
    f_r: float
    velocity: float
    kind: ClassVar[str] = "VelocityComputed"


@dataclass(frozen=True)
class DeltaComputed:
    """Velocity difference between the two reads."""

    dv: float
    kind: ClassVar[str] = "DeltaComputed"


@dataclass(frozen=True)
class RoutePredicted:
    """Classifier produced a route."""

    label: str
    kind: ClassVar[str] = "Predicted"


@dataclass(frozen=True)
class Terminated:
    """Run ended without a prediction."""

    reason: str
    kind: ClassVar[str] = "Terminated"


Step = (
    PlateDetected
    | PlateRecognized
    | RegistryHit
    | RegistryMiss
    | FrequencySent
    | VelocityComputed
    | DeltaComputed
    | RoutePredicted
    | Terminated
)


class Trace:
    """Append-only, ordered record of the steps of one run.

    Attributes:
        steps: Recorded steps in order.
    """

    def __init__(self) -> None:
        """Initialize an empty trace."""
        self.steps: list[Step] = []

    def record(self, step: Step) -> Step:
        """Append a step and return it."""
        self.steps.append(step)
        return step

    def kinds(self) -> list[str]:
        """Return the step kinds in order."""
        return [step.kind for step in self.steps]

    def count(self, kind: str) -> int:
        """Return how many steps of the given kind were recorded."""
        return sum(1 for step in self.steps if step.kind == kind)

    def __len__(self) -> int:
        return len(self.steps)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return self.steps == other.steps

    def to_list(self) -> list[dict[str, Any]]:
        """Return the steps as plain mappings, each led by its kind."""
        return [{"step": step.kind, **asdict(step)} for step in self.steps]
