"""Synthetic camera and template-matching plate recognizer.

Plates are rendered with a fixed 5x7 bitmap font, one blank column between
glyphs, and read back by nearest-glyph Hamming matching.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Protocol

import numpy as np

from crossroad.errors import (
    CharsetError,
    DuplicateKeyError,
    InvalidParameterError,
    ParseError,
    SegmentationError,
)
from crossroad.models import (
    CELL_STRIDE,
    GLYPH_HEIGHT,
    GLYPH_WIDTH,
    PLATE_CHARSET,
    PlateImage,
    validate_plate,
)

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 128
SET_PIXEL = "#"
CLEAR_PIXEL = "."


@dataclass(frozen=True, eq=False)
class GlyphFont:
    """A complete 5x7 bitmap font over A-Z and 0-9.

    Attributes:
        glyphs: Boolean (7, 5) bitmap per character.
        chars: Characters in code-point order.
        stack: Bitmaps stacked as a (36, 7, 5) array in `chars` order.
    """

    glyphs: dict[str, np.ndarray]
    chars: tuple[str, ...] = field(init=False)
    stack: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        """Check the glyph set and stack the templates.

        Raises:
            ParseError: If a glyph is missing, extra, or misshapen.
        """
        if set(self.glyphs) != set(PLATE_CHARSET):
            missing = sorted(set(PLATE_CHARSET) - set(self.glyphs))
            extra = sorted(set(self.glyphs) - set(PLATE_CHARSET))
            raise ParseError(
                f"Font must cover A-Z and 0-9 (missing {missing}, extra {extra})"
            )
        for char, bitmap in self.glyphs.items():
            if bitmap.shape != (GLYPH_HEIGHT, GLYPH_WIDTH):
                raise ParseError(
                    f"Glyph {char!r} has shape {bitmap.shape}, expected 7x5"
                )

        chars = tuple(sorted(self.glyphs))
        stack = np.stack([self.glyphs[c].astype(bool) for c in chars])
        stack.setflags(write=False)
        object.__setattr__(self, "chars", chars)
        object.__setattr__(self, "stack", stack)

        flat = stack.reshape(len(chars), -1)
        distinct = np.unique(flat, axis=0)
        if len(distinct) != len(chars):
            raise ParseError("Font glyphs must be pairwise distinct")


def parse_grid(lines: list[str], first_line: int = 1) -> np.ndarray:
    """Parse rows of '.'/'#' characters into a boolean array.

    Args:
        lines: Grid rows, all the same width.
        first_line: File line number of lines[0], for error messages.

    Raises:
        ParseError: On ragged rows or characters other than '.' and '#'.
    """
    if not lines:
        raise ParseError("Empty pixel grid", line=first_line)
    width = len(lines[0])
    rows = []
    for offset, row in enumerate(lines):
        lineno = first_line + offset
        if len(row) != width:
            raise ParseError(
                f"Grid row has width {len(row)}, expected {width}", line=lineno
            )
        bad = set(row) - {SET_PIXEL, CLEAR_PIXEL}
        if bad:
            raise ParseError(f"Unexpected grid characters {sorted(bad)}", line=lineno)
        rows.append([ch == SET_PIXEL for ch in row])
    return np.array(rows, dtype=bool)


def parse_font(text: str) -> GlyphFont:
    """Parse the font file format.

    Each block is a header line holding the character followed by seven
    rows of five '.'/'#' characters; blocks are separated by a blank line.

    Raises:
        ParseError: On malformed headers or grids.
        DuplicateKeyError: If a character appears twice.
    """
    lines = text.split("\n")
    glyphs: dict[str, np.ndarray] = {}
    i = 0
    while i < len(lines):
        if lines[i] == "":
            i += 1
            continue
        header = lines[i]
        lineno = i + 1
        if len(header) != 1 or header not in PLATE_CHARSET:
            raise ParseError(
                f"Expected a glyph header character, got {header!r}", line=lineno
            )
        if header in glyphs:
            raise DuplicateKeyError(f"Duplicate glyph {header!r}", line=lineno)
        rows = lines[i + 1 : i + 1 + GLYPH_HEIGHT]
        if len(rows) != GLYPH_HEIGHT or any(r == "" for r in rows):
            raise ParseError(f"Glyph {header!r} needs {GLYPH_HEIGHT} rows", line=lineno)
        bitmap = parse_grid(rows, first_line=lineno + 1)
        if bitmap.shape[1] != GLYPH_WIDTH:
            raise ParseError(
                f"Glyph {header!r} rows must be {GLYPH_WIDTH} wide", line=lineno + 1
            )
        glyphs[header] = bitmap
        i += 1 + GLYPH_HEIGHT
    return GlyphFont(glyphs)


def load_font(path: str | Path | None = None) -> GlyphFont:
    """Load a font file, or the bundled font when path is None."""
    if path is None:
        return default_font()
    return parse_font(Path(path).read_text(encoding="utf-8"))


@lru_cache(maxsize=1)
def default_font() -> GlyphFont:
    """Return the bundled 5x7 font (parsed once)."""
    source = resources.files("crossroad").joinpath("data/glyphs.txt")
    text = source.read_text(encoding="utf-8")
    return parse_font(text)


def render_plate(text: str, font: GlyphFont | None = None) -> PlateImage:
    """Render plate text to a binary image.

    Glyph i occupies columns [6i, 6i+4]; separator columns stay 0.

    Raises:
        CharsetError: If the text is not valid plate text.
    """
    validate_plate(text)
    font = font or default_font()
    width = CELL_STRIDE * len(text) - 1
    pixels = np.zeros((GLYPH_HEIGHT, width), dtype=np.uint8)
    for i, char in enumerate(text):
        col = CELL_STRIDE * i
        pixels[:, col : col + GLYPH_WIDTH] = np.where(font.glyphs[char], 255, 0)
    return PlateImage(pixels)


def binarize(image: PlateImage, threshold: int = DEFAULT_THRESHOLD) -> PlateImage:
    """Map each pixel to 255 if it is >= threshold, else 0."""
    if not 0 <= threshold <= 255:
        raise InvalidParameterError(f"Threshold must be in [0, 255], got {threshold}")
    pixels = np.where(image.pixels >= threshold, 255, 0).astype(np.uint8)
    return PlateImage(pixels)


def segment(image: PlateImage) -> list[np.ndarray]:
    """Cut a binary plate image into boolean 7x5 glyph cells at stride 6.

    Raises:
        SegmentationError: If the width is not of the form 6n - 1.
    """
    if (image.width + 1) % CELL_STRIDE != 0:
        raise SegmentationError(
            f"Plate width {image.width} is not 6n-1 for any glyph count n"
        )
    n = (image.width + 1) // CELL_STRIDE
    return [
        image.pixels[:, CELL_STRIDE * i : CELL_STRIDE * i + GLYPH_WIDTH] > 0
        for i in range(n)
    ]


def match_cell(cell: np.ndarray, font: GlyphFont) -> str:
    """Return the character whose glyph is nearest in Hamming distance.

    Ties go to the lowest code point.
    """
    distances = np.count_nonzero(font.stack != cell, axis=(1, 2))
    return font.chars[int(np.argmin(distances))]


def recognize(
    image: PlateImage,
    font: GlyphFont | None = None,
    threshold: int = DEFAULT_THRESHOLD,
) -> str:
    """Read plate text back from an image.

    Raises:
        SegmentationError: If the image width is not 6n - 1.
    """
    font = font or default_font()
    cells = segment(binarize(image, threshold))
    text = "".join(match_cell(cell, font) for cell in cells)
    if len(text) > 10:
        raise CharsetError(f"Recognized {len(text)} glyphs; plates hold at most 10")
    return text


def image_digest(image: PlateImage) -> str:
    """Return the SHA-256 hex digest of the image's pixel bytes."""
    return hashlib.sha256(np.ascontiguousarray(image.pixels).tobytes()).hexdigest()


def min_glyph_distance(font: GlyphFont | None = None) -> tuple[int, str, str]:
    """Return the font's minimum pairwise glyph Hamming distance.

    Compares all 36x36 pairs.

    Returns:
        (distance, first_char, second_char) for the closest pair, the
        pair chosen first in code-point order.
    """
    font = font or default_font()
    flat = font.stack.reshape(len(font.chars), -1)
    pairwise = np.count_nonzero(flat[:, None, :] != flat[None, :, :], axis=2)
    np.fill_diagonal(pairwise, np.iinfo(pairwise.dtype).max)
    i, j = np.unravel_index(int(np.argmin(pairwise)), pairwise.shape)
    return int(pairwise[i, j]), font.chars[i], font.chars[j]


def format_image(image: PlateImage, threshold: int = DEFAULT_THRESHOLD) -> str:
    """Serialize an image in the plate image file format."""
    rows = binarize(image, threshold).pixels > 0
    return "".join(
        "".join(SET_PIXEL if bit else CLEAR_PIXEL for bit in row) + "\n" for row in rows
    )


def parse_image(text: str) -> PlateImage:
    """Parse the plate image file format (a 7-row '.'/'#' grid).

    Raises:
        ParseError: On a malformed grid or wrong row count.
    """
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if len(lines) != GLYPH_HEIGHT:
        raise ParseError(f"Plate image must have {GLYPH_HEIGHT} rows, got {len(lines)}")
    grid = parse_grid(lines)
    return PlateImage(np.where(grid, 255, 0).astype(np.uint8))


class PlateRecognizer(Protocol):
    """Anything that turns a plate image into plate text."""

    def recognize(self, image: PlateImage) -> str: ...


class TemplateRecognizer:
    """Plate recognizer backed by the bitmap font.

    Attributes:
        font: Glyph templates to match against.
        threshold: Binarization threshold.
    """

    def __init__(
        self, font: GlyphFont | None = None, threshold: int = DEFAULT_THRESHOLD
    ) -> None:
        """Initialize the recognizer.

        Args:
            font: Glyph templates; the bundled font if None.
            threshold: Binarization threshold.
        """
        self.font = font or default_font()
        self.threshold = threshold

    def recognize(self, image: PlateImage) -> str:
        """Return the plate text read from an image."""
        text = recognize(image, self.font, self.threshold)
        logger.debug("Recognized plate %s", text)
        return text
