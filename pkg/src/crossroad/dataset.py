"""Route datasets: the (dv, mp, label) table, its file format, and splits."""

import logging
import math
import re
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from crossroad.errors import (
    DegenerateDatasetError,
    InvalidParameterError,
    ParseError,
)
from crossroad.models import ROUTES, Route, Sample
from crossroad.rng import Rng

logger = logging.getLogger(__name__)

DATASET_HEADER = "dv,mp,label"
# Plain decimal real, optionally with an exponent; no padding or underscores.
DECIMAL_PATTERN = re.compile(r"-?\d+(\.\d+)?([eE][-+]?\d+)?")


def parse_real(raw: str, name: str, lineno: int) -> float:
    """Parse one decimal real field of a data file.

    Args:
        raw: Field text exactly as it appears between the commas.
        name: Column name, for the error message.
        lineno: 1-based line number of the row.

    Returns:
        The finite float value.

    Raises:
        ParseError: If the field is not a plain decimal or is not finite.
    """
    if not DECIMAL_PATTERN.fullmatch(raw):
        raise ParseError(f"{name} is not a decimal number: {raw!r}", line=lineno)
    value = float(raw)
    if not math.isfinite(value):
        raise ParseError(f"{name} must be finite, got {raw!r}", line=lineno)
    return value



@dataclass
class Dataset:
    """An ordered sequence of labelled samples.

    Attributes:
        samples: The rows, in file order.
    """

    samples: list[Sample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def features(self) -> np.ndarray:
        """Return an (n, 2) float array of (dv, mp) rows."""
        rows = [[s.dv, float(s.mp)] for s in self.samples]
        return np.array(rows, dtype=float).reshape(-1, 2)

    def labels(self) -> list[Route]:
        """Return the labels in sample order."""
        return [s.label for s in self.samples]

    def class_counts(self) -> dict[Route, int]:
        """Return the number of samples per route."""
        counts = {route: 0 for route in ROUTES}
        for s in self.samples:
            counts[s.label] += 1
        return counts

    def require_both_classes(self) -> None:
        """Raise unless both S and T samples are present.

        Raises:
            DegenerateDatasetError: On empty or single-class data.
        """
        counts = self.class_counts()
        if not all(counts.values()):
            raise DegenerateDatasetError(
                f"Need both S and T samples to fit, got S={counts[Route.STRAIGHT]} "
                f"T={counts[Route.TURN]}"
            )


def parse_dataset(text: str) -> Dataset:
    """Parse the dataset file format (header ``dv,mp,label``).

    Raises:
        ParseError: On a bad header or malformed row (names the line).
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != DATASET_HEADER:
        raise ParseError(f"Dataset must start with header {DATASET_HEADER!r}", line=1)

    samples: list[Sample] = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"Expected 'dv,mp,label', got {line!r}", line=lineno)
        raw_dv, raw_mp, raw_label = parts
        dv = parse_real(raw_dv, "dv", lineno)
        if raw_mp not in ("0", "1"):
            raise ParseError(f"mp must be 0 or 1, got {raw_mp!r}", line=lineno)
        if raw_label not in ("S", "T"):
            raise ParseError(f"label must be S or T, got {raw_label!r}", line=lineno)
        samples.append(Sample(dv=dv, mp=int(raw_mp), label=Route(raw_label)))
    return Dataset(samples)


def format_dataset(data: Dataset) -> str:
    """Serialize a dataset; dv uses Python's shortest round-trip repr."""
    lines = [DATASET_HEADER]
    lines.extend(f"{s.dv!r},{s.mp},{s.label.value}" for s in data)
    return "\n".join(lines) + "\n"


def load_dataset(path: str | Path) -> Dataset:
    """Read and parse a dataset file.

    Raises:
        ParseError: If the file is malformed.
    """
    data = parse_dataset(Path(path).read_text(encoding="utf-8"))
    logger.info("Loaded %d samples from %s", len(data), path)
    return data


def save_dataset(data: Dataset, path: str | Path) -> None:
    """Write a dataset file with LF endings."""
    Path(path).write_text(format_dataset(data), encoding="utf-8", newline="\n")
    logger.info("Saved %d samples to %s", len(data), path)


def train_test_split(
    data: Dataset, test_fraction: float, rng: Rng
) -> tuple[Dataset, Dataset]:
    """Shuffle with Fisher-Yates and split off floor(n * f) test samples.

    Args:
        data: Samples to split.
        test_fraction: Fraction of samples held out, strictly in (0, 1).
        rng: Stream driving the shuffle.

    Returns:
        (train, test) datasets.

    Raises:
        InvalidParameterError: If test_fraction is outside (0, 1).
    """
    if not 0 < test_fraction < 1:
        raise InvalidParameterError(
            f"test_fraction must be strictly between 0 and 1, got {test_fraction}"
        )
    shuffled = list(data.samples)
    rng.shuffle(shuffled)
    n_test = math.floor(len(shuffled) * test_fraction)
    return Dataset(shuffled[n_test:]), Dataset(shuffled[:n_test])

