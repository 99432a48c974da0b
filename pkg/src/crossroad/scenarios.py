"""Scenario batch files and synthesis of scenario batches from a dataset."""

import logging
import math
from pathlib import Path

from crossroad.dataset import Dataset, parse_real
from crossroad.errors import CrossroadError, InvalidParameterError, ParseError
from crossroad.models import Route, Scenario, VehicleRecord
from crossroad.registry import Registry
from crossroad.rng import Rng

logger = logging.getLogger(__name__)

SCENARIO_HEADER = "plate,intent,v0,a,fo,interval"
PLATE_PREFIX = "V"


def parse_scenarios(text: str) -> list[Scenario]:
    """Parse a scenario batch file.

    Raises:
        ParseError: On a bad header, a malformed row, or a row whose
            values are out of range (names the line).
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != SCENARIO_HEADER:
        raise ParseError(
            f"Scenario file must start with header {SCENARIO_HEADER!r}", line=1
        )

    scenarios: list[Scenario] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise ParseError(
                f"Expected 6 fields, got {len(parts)}: {line!r}", line=lineno
            )
        plate, intent, raw_v0, raw_a, raw_fo, raw_interval = parts
        if intent not in ("S", "T"):
            raise ParseError(f"intent must be S or T, got {intent!r}", line=lineno)
        try:
            scenarios.append(
                Scenario(
                    plate_text=plate,
                    true_intent=Route(intent),
                    initial_velocity=parse_real(raw_v0, "v0", lineno),
                    deceleration=parse_real(raw_a, "a", lineno),
                    f_o=parse_real(raw_fo, "fo", lineno),
                    sample_interval=parse_real(raw_interval, "interval", lineno),
                )
            )
        except ParseError:
            raise
        except CrossroadError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return scenarios


def format_scenarios(scenarios: list[Scenario]) -> str:
    """Serialize scenarios; reals use Python's shortest round-trip repr."""
    lines = [SCENARIO_HEADER]
    lines.extend(
        f"{s.plate_text},{s.true_intent.value},{s.initial_velocity!r},"
        f"{s.deceleration!r},{s.f_o!r},{s.sample_interval!r}"
        for s in scenarios
    )
    return "\n".join(lines) + "\n"


def load_scenarios(path: str | Path) -> list[Scenario]:
    """Read and parse a scenario batch file.

    Raises:
        ParseError: If the file is malformed.
    """
    scenarios = parse_scenarios(Path(path).read_text(encoding="utf-8"))
    logger.info("Loaded %d scenarios from %s", len(scenarios), path)
    return scenarios


def save_scenarios(scenarios: list[Scenario], path: str | Path) -> None:
    """Write a scenario batch file with LF endings."""
    Path(path).write_text(format_scenarios(scenarios), encoding="utf-8", newline="\n")
    logger.info("Saved %d scenarios to %s", len(scenarios), path)


def synth_plate(index: int) -> str:
    """Return the synthetic plate for the index-th scenario (e.g. V000042)."""
    return f"{PLATE_PREFIX}{index:06d}"


def synthesize(
    data: Dataset,
    rng: Rng,
    unregistered_fraction: float = 0.0,
    f_o: float = 100.0,
    interval: float = 5.0,
    v0_mean: float = 60.0,
    v0_sigma: float = 5.0,
) -> tuple[list[Scenario], Registry]:
    """Turn each dataset sample into a scenario and a registry entry.

    Sample i becomes a vehicle with plate synth_plate(i), intent equal to
    the sample label, and deceleration dv / interval, so two noise-free
    reads reproduce the sample's dv. Its mp goes into the registry. A
    floor(n * unregistered_fraction) subset, chosen by shuffling with
    rng, is left out of the registry.

    Args:
        data: Samples to convert, in order.
        rng: Stream for initial speeds and the unregistered subset.
        unregistered_fraction: Share of vehicles not registered, in [0, 1].
        f_o: Emitted radar frequency for every scenario.
        interval: Seconds between the two reads.
        v0_mean: Mean initial speed.
        v0_sigma: Standard deviation of the initial speed.

    Returns:
        (scenarios, registry).

    Raises:
        InvalidParameterError: On an out-of-range fraction, frequency,
            interval or speed spread.
    """
    if not 0.0 <= unregistered_fraction <= 1.0:
        raise InvalidParameterError(
            f"unregistered_fraction must be in [0, 1], got {unregistered_fraction}"
        )
    if not interval > 0:
        raise InvalidParameterError(f"interval must be > 0, got {interval}")
    if not v0_sigma > 0:
        raise InvalidParameterError(f"v0_sigma must be > 0, got {v0_sigma}")

    scenarios = [
        Scenario(
            plate_text=synth_plate(i),
            true_intent=sample.label,
            initial_velocity=rng.gaussian(v0_mean, v0_sigma),
            deceleration=sample.dv / interval,
            f_o=f_o,
            sample_interval=interval,
        )
        for i, sample in enumerate(data)
    ]

    order = list(range(len(scenarios)))
    rng.shuffle(order)
    skipped = set(order[: math.floor(len(order) * unregistered_fraction)])
    registry = Registry(
        [
            VehicleRecord(plate=synth_plate(i), mobility_pattern=sample.mp)
            for i, sample in enumerate(data)
            if i not in skipped
        ]
    )
    logger.info(
        "Synthesized %d scenarios, %d registered", len(scenarios), len(registry)
    )
    return scenarios, registry
