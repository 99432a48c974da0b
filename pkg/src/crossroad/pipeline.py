"""Route-prediction pipeline: camera, registry gate, radar, classifier."""

import logging
from collections import defaultdict
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from crossroad.classifier import TrainedModel
from crossroad.errors import ConfigurationError, CrossroadError
from crossroad.metrics import evaluate
from crossroad.models import (
    PipelineOutcome,
    Predicted,
    RadarCalibration,
    Report,
    Route,
    Scenario,
    Unregistered,
)
from crossroad.plate import (
    DEFAULT_THRESHOLD,
    GlyphFont,
    PlateRecognizer,
    TemplateRecognizer,
    image_digest,
    render_plate,
)
from crossroad.radar import doppler_velocity, reflect_frequency, velocity_delta
from crossroad.registry import Registry
from crossroad.rng import Rng, stream_for
from crossroad.trace import (
    DeltaComputed,
    FrequencySent,
    PlateDetected,
    PlateRecognized,
    RegistryHit,
    RegistryMiss,
    RoutePredicted,
    Step,
    Terminated,
    Trace,
    VelocityComputed,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of one pipeline deployment.

    Attributes:
        calibration: Radar gun calibration.
        threshold: Plate binarization threshold.
        algo: Classifier the deployment expects (knn, nb or dt); None
            accepts any model.
    """

    calibration: RadarCalibration = field(default_factory=RadarCalibration)
    threshold: int = DEFAULT_THRESHOLD
    algo: str | None = None


@dataclass
class BatchResult:
    """Scored result of a batch of runs.

    Attributes:
        report: Metrics over the Predicted outcomes (empty if none).
        traces: One trace per scenario, in input order.
        outcomes: One outcome per scenario, None where the run errored.
        unregistered: Number of runs stopped at the registry gate.
        errors: (scenario index, message) for runs that raised.
    """

    report: Report
    traces: list[Trace]
    outcomes: list[PipelineOutcome | None]
    unregistered: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)


class RoutePredictor:
    """Runs the full prediction procedure for a vehicle at the crossroad.

    Recognizes the plate, gates on the registry, takes two radar reads,
    and classifies (dv, mp). Observers can subscribe to every step.

    Attributes:
        registry: Registered vehicles.
        model: Fitted classifier.
        config: Deployment settings.
        recognizer: Plate recognizer.
        callbacks: Registered step callbacks.
    """

    def __init__(
        self,
        registry: Registry,
        model: TrainedModel | None,
        config: PipelineConfig | None = None,
        recognizer: PlateRecognizer | None = None,
        font: GlyphFont | None = None,
    ) -> None:
        """Initialize the predictor.

        Args:
            registry: Registry used as the gate.
            model: Fitted classifier; required before run().
            config: Deployment settings (defaults if None).
            recognizer: Plate recognizer; defaults to template matching
                with config.threshold.
            font: Font the synthetic camera renders with.

        Raises:
            ConfigurationError: If config.algo names a different classifier
                than the model is.
        """
        self.config = config or PipelineConfig()
        expected = self.config.algo
        if model is not None and expected is not None and model.algo != expected:
            raise ConfigurationError(
                f"Deployment expects a {expected} model, got {model.algo}"
            )
        self.registry = registry
        self.model = model
        self.font = font
        self.recognizer = recognizer or TemplateRecognizer(font, self.config.threshold)
        self.callbacks: dict[str, list[Callable[[Any], None]]] = defaultdict(list)

    def on(self, event: str, callback: Callable[[Any], None]) -> None:
        """Register a callback for a step kind (e.g. "RegistryMiss").

        The "step" event receives every step; "outcome" receives the final
        outcome of each run.
        """
        self.callbacks[event].append(callback)

    def _emit(self, event: str, data: Any) -> None:
        """Call every callback registered for an event.

        Args:
            event: Step kind, "step", or "outcome".
            data: Payload handed to each callback.
        """
        for callback in self.callbacks.get(event, []):
            callback(data)

    def _record(self, trace: Trace, step: Step) -> None:
        """Append a step to the trace, log it, and notify subscribers.

        Args:
            trace: Trace of the current run.
            step: The step that just happened.
        """
        trace.record(step)
        logger.debug("%s %s", step.kind, step)
        self._emit(step.kind, step)
        self._emit("step", step)

    def _radar_read(
        self, trace: Trace, scenario: Scenario, t: float, rng: Rng
    ) -> float:
        """Take one radar read and convert it to a velocity.

        Args:
            trace: Trace of the current run.
            scenario: Encounter supplying the true speed and f_o.
            t: Seconds since the first read.
            rng: Stream for radar noise.

        Returns:
            The measured velocity.
        """
        cal = self.config.calibration
        self._record(trace, FrequencySent(f_o=scenario.f_o, t=t))
        reading = reflect_frequency(scenario.velocity_at(t), scenario.f_o, cal, rng)
        velocity = doppler_velocity(reading, cal)
        self._record(trace, VelocityComputed(t=t, f_r=reading.f_r, velocity=velocity))
        return velocity

    def run(self, scenario: Scenario, rng: Rng) -> tuple[PipelineOutcome, Trace]:
        """Run one vehicle encounter.

        Steps:
        1. Render the plate and recognize it
        2. Look the plate up; a miss terminates the run
        3. Radar read at t = 0 gives v1
        4. Radar read at t = interval gives v2
        5. dv = v2 - v1
        6. Classify (dv, mp) with mp from the registry record

        Args:
            scenario: The encounter to simulate.
            rng: Stream for radar noise.

        Returns:
            The outcome and the step trace.

        Raises:
            ConfigurationError: If no model is configured.
        """
        if self.model is None:
            raise ConfigurationError("No classifier configured for the pipeline")
        trace = Trace()

        # 1. Camera and recognizer
        image = render_plate(scenario.plate_text, self.font)
        self._record(trace, PlateDetected(digest=image_digest(image)))
        plate = self.recognizer.recognize(image)
        self._record(trace, PlateRecognized(text=plate))

        # 2. Registry gate
        record = self.registry.lookup(plate)
        if record is None:
            self._record(trace, RegistryMiss(plate=plate))
            self._record(trace, Terminated(reason="unregistered"))
            outcome: PipelineOutcome = Unregistered(plate=plate)
            self._emit("outcome", outcome)
            return outcome, trace
        self._record(trace, RegistryHit(plate=plate, mp=record.mobility_pattern))

        # 3/4. Two radar reads
        v1 = self._radar_read(trace, scenario, 0.0, rng)
        v2 = self._radar_read(trace, scenario, scenario.sample_interval, rng)

        # 5. Velocity difference
        dv = velocity_delta(v1, v2)
        self._record(trace, DeltaComputed(dv=dv))

        # 6. Classify
        label = self.model.predict(dv, record.mobility_pattern)
        self._record(trace, RoutePredicted(label=label.value))
        outcome = Predicted(
            plate=plate, v1=v1, v2=v2, dv=dv, mp=record.mobility_pattern, label=label
        )
        self._emit("outcome", outcome)
        return outcome, trace

    def run_batch(
        self, scenarios: Sequence[Scenario], rng: Rng, workers: int = 1
    ) -> BatchResult:
        """Run and score a batch of encounters.

        Each scenario gets its own stream derived from one base draw of
        rng and its index, so results do not depend on worker count.
        Failed runs are collected, not raised.

        Args:
            scenarios: Encounters in order.
            rng: Parent stream; advanced by exactly one draw.
            workers: Thread count; 1 runs inline.

        Returns:
            The scored BatchResult, ordered like the input.
        """
        base = rng.next()

        def run_one(index: int) -> tuple[PipelineOutcome | None, Trace, str | None]:
            """Run scenario index on its own stream, capturing errors."""
            try:
                outcome, trace = self.run(scenarios[index], stream_for(base, index))
                return outcome, trace, None
            except CrossroadError as exc:
                logger.warning("Scenario %d failed: %s", index, exc)
                return None, Trace(), str(exc)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run_one, range(len(scenarios))))
        else:
            results = [run_one(i) for i in range(len(scenarios))]

        predictions: list[Route] = []
        truths: list[Route] = []
        unregistered = 0
        errors: list[tuple[int, str]] = []
        for index, (outcome, _, error) in enumerate(results):
            if error is not None:
                errors.append((index, error))
            elif isinstance(outcome, Unregistered):
                unregistered += 1
            elif isinstance(outcome, Predicted):
                predictions.append(outcome.label)
                truths.append(scenarios[index].true_intent)

        report = evaluate(predictions, truths) if truths else Report()
        return BatchResult(
            report=report,
            traces=[trace for _, trace, _ in results],
            outcomes=[outcome for outcome, _, _ in results],
            unregistered=unregistered,
            errors=errors,
        )


def run_pipeline(
    scenario: Scenario,
    registry: Registry,
    model: TrainedModel | None,
    config: PipelineConfig | None,
    rng: Rng,
) -> tuple[PipelineOutcome, Trace]:
    """Run one encounter with a throwaway RoutePredictor."""
    return RoutePredictor(registry, model, config).run(scenario, rng)


def run_batch(
    scenarios: Sequence[Scenario],
    registry: Registry,
    model: TrainedModel | None,
    config: PipelineConfig | None,
    rng: Rng,
    workers: int = 1,
) -> BatchResult:
    """Run and score a batch with a throwaway RoutePredictor."""
    return RoutePredictor(registry, model, config).run_batch(scenarios, rng, workers)


def format_report_line(outcome: PipelineOutcome) -> str:
    """Render the one-line result shown to the driver.

    Numbers have exactly three decimals; dv always carries its sign.
    """
    if isinstance(outcome, Unregistered):
        return f"PLATE={outcome.plate} UNREGISTERED"
    return (
        f"PLATE={outcome.plate} V1={outcome.v1:.3f} V2={outcome.v2:.3f} "
        f"DV={outcome.dv:+.3f} MP={outcome.mp} PREDICT={outcome.label.value}"
    )


def format_advisory(outcome: PipelineOutcome) -> str:
    """Render a plain-language advisory for the driver."""
    if isinstance(outcome, Unregistered):
        return f"Vehicle {outcome.plate} is not registered; no prediction."
    if outcome.label is Route.TURN:
        return f"Vehicle {outcome.plate} is likely to TURN at the crossroad."
    return f"Vehicle {outcome.plate} is likely to go STRAIGHT through the crossroad."
