"""Plate-keyed vehicle registry that gates the prediction pipeline."""

import logging
from collections.abc import Iterator
from pathlib import Path

from crossroad.errors import CharsetError, DuplicateKeyError, ParseError
from crossroad.models import VehicleRecord, validate_plate

logger = logging.getLogger(__name__)

REGISTRY_HEADER = "plate,mp"


class Registry:
    """Registered vehicles keyed by plate.

    Attributes:
        records: Mapping from plate text to its record.
    """

    def __init__(self, records: list[VehicleRecord] | None = None) -> None:
        """Initialize the registry, optionally with initial records.

        Args:
            records: Records to upsert in order; later plates win.
        """
        self.records: dict[str, VehicleRecord] = {}
        for record in records or []:
            self.upsert(record)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, plate: object) -> bool:
        return plate in self.records

    def __iter__(self) -> Iterator[VehicleRecord]:
        """Iterate records in canonical (sorted plate) order."""
        for plate in sorted(self.records):
            yield self.records[plate]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Registry):
            return NotImplemented
        return self.records == other.records

    def lookup(self, plate: str) -> VehicleRecord | None:
        """Look up a registered vehicle.

        Absence is a normal outcome, not an error.

        Args:
            plate: Plate text to look up.

        Returns:
            The stored record, or None if the plate is not registered.

        Raises:
            CharsetError: If the plate text itself is invalid.
        """
        validate_plate(plate)
        return self.records.get(plate)

    def upsert(self, record: VehicleRecord) -> "Registry":
        """Insert or replace the record for its plate.

        Returns:
            This registry, for chaining.
        """
        self.records[record.plate] = record
        return self

    def remove(self, plate: str) -> bool:
        """Delete the record for a plate.

        Returns:
            True if a record was removed, False if the plate was absent.
        """
        validate_plate(plate)
        return self.records.pop(plate, None) is not None


def parse_registry(text: str) -> Registry:
    """Parse the registry file format.

    The first line must be exactly ``plate,mp``; each following line is
    ``PLATE,D`` with D in {0, 1}.

    Raises:
        ParseError: On a bad header or malformed line (names the line).
        DuplicateKeyError: If a plate appears twice.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != REGISTRY_HEADER:
        raise ParseError(f"Registry must start with header {REGISTRY_HEADER!r}", line=1)

    registry = Registry()
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"Expected 'PLATE,MP', got {line!r}", line=lineno)
        plate, mp = parts
        try:
            validate_plate(plate)
        except CharsetError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if mp not in ("0", "1"):
            raise ParseError(
                f"Mobility pattern must be 0 or 1, got {mp!r}", line=lineno
            )
        if plate in registry:
            raise DuplicateKeyError(f"Duplicate plate {plate!r}", line=lineno)
        registry.upsert(VehicleRecord(plate=plate, mobility_pattern=int(mp)))
    return registry


def format_registry(registry: Registry) -> str:
    """Serialize a registry canonically, sorted by plate."""
    lines = [REGISTRY_HEADER]
    lines.extend(f"{r.plate},{r.mobility_pattern}" for r in registry)
    return "\n".join(lines) + "\n"


def load(path: str | Path) -> Registry:
    """Load a registry file."""
    registry = parse_registry(Path(path).read_text(encoding="utf-8"))
    logger.info("Loaded %d registered vehicles from %s", len(registry), path)
    return registry


def save(registry: Registry, path: str | Path) -> None:
    """Write a registry file in canonical form with LF line endings."""
    Path(path).write_text(format_registry(registry), encoding="utf-8", newline="\n")
    logger.info("Saved %d registered vehicles to %s", len(registry), path)
