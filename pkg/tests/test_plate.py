"""Tests for the synthetic camera and template-matching recognizer."""

import numpy as np
import pytest

from crossroad.errors import (
    CharsetError,
    DuplicateKeyError,
    InvalidParameterError,
    ParseError,
    SegmentationError,
)
from crossroad.models import PLATE_CHARSET, PlateImage
from crossroad.plate import (
    TemplateRecognizer,
    binarize,
    default_font,
    format_image,
    image_digest,
    load_font,
    match_cell,
    min_glyph_distance,
    parse_font,
    parse_image,
    recognize,
    render_plate,
    segment,
)
from crossroad.rng import Rng


@pytest.fixture
def font():
    """Return the bundled font."""
    return default_font()


def _random_plate(rng: Rng) -> str:
    length = 1 + rng.below(10)
    return "".join(PLATE_CHARSET[rng.below(len(PLATE_CHARSET))] for _ in range(length))


def _font_text(font) -> str:
    blocks = []
    for char in font.chars:
        grid = font.glyphs[char]
        rows = ["".join("#" if bit else "." for bit in row) for row in grid]
        blocks.append("\n".join([char, *rows]))
    return "\n\n".join(blocks) + "\n"


# --------------------------------------------------------------------------- #
# Font
# --------------------------------------------------------------------------- #


class TestFont:
    """Tests for loading and checking the glyph font."""

    def test_covers_charset(self, font):
        assert font.chars == tuple(PLATE_CHARSET)
        assert font.stack.shape == (36, 7, 5)

    def test_load_font_default(self, font):
        assert load_font() is font

    def test_load_font_from_file(self, font, tmp_path):
        path = tmp_path / "font.txt"
        path.write_text(_font_text(font))
        loaded = load_font(path)
        assert np.array_equal(loaded.stack, font.stack)

    def test_min_distance(self, font):
        d_min, a, b = min_glyph_distance(font)
        assert d_min == 5
        assert (a, b) == ("0", "8")

    def test_missing_glyph(self, font):
        without_zero = _font_text(font).split("\n\n", 1)[1]
        with pytest.raises(ParseError, match="missing"):
            parse_font(without_zero)

    def test_duplicate_glyph(self, font):
        text = _font_text(font)
        first_block = text.split("\n\n", 1)[0]
        with pytest.raises(DuplicateKeyError):
            parse_font(first_block + "\n\n" + text)

    def test_bad_grid_character(self, font):
        text = _font_text(font).replace("#", "x", 1)
        with pytest.raises(ParseError, match="line 2"):
            parse_font(text)

    def test_identical_glyphs_rejected(self, font):
        glyphs = dict(font.glyphs)
        glyphs["1"] = glyphs["0"]
        with pytest.raises(ParseError, match="distinct"):
            type(font)(glyphs)


# --------------------------------------------------------------------------- #
# Rendering and segmentation
# --------------------------------------------------------------------------- #


class TestRender:
    """Tests for render_plate(), binarize() and segment()."""

    def test_width(self):
        assert render_plate("LEA2465").width == 6 * 7 - 1
        assert render_plate("A").width == 5

    def test_separator_columns_blank(self):
        image = render_plate("8888")
        for col in (5, 11, 17):
            assert not image.pixels[:, col].any()

    def test_pixels_are_binary(self):
        values = set(np.unique(render_plate("W0").pixels).tolist())
        assert values <= {0, 255}

    def test_render_rejects_bad_text(self):
        with pytest.raises(CharsetError):
            render_plate("ab")

    def test_binarize_inclusive_threshold(self):
        pixels = np.array([[127, 128, 200, 0, 255]] * 7, dtype=np.uint8)
        out = binarize(PlateImage(pixels), 128)
        assert out.pixels[0].tolist() == [0, 255, 255, 0, 255]

    def test_binarize_bad_threshold(self):
        with pytest.raises(InvalidParameterError):
            binarize(render_plate("A"), 300)

    def test_segment_count(self):
        assert len(segment(render_plate("XYZ789"))) == 6

    @pytest.mark.parametrize("width", [4, 6, 12])
    def test_segment_bad_width(self, width):
        with pytest.raises(SegmentationError):
            segment(PlateImage(np.zeros((7, width), dtype=np.uint8)))

    def test_digest_stable(self):
        assert image_digest(render_plate("ABC")) == image_digest(render_plate("ABC"))
        assert image_digest(render_plate("ABC")) != image_digest(render_plate("ABD"))


# --------------------------------------------------------------------------- #
# Recognition
# --------------------------------------------------------------------------- #


class TestRecognize:
    """Tests for template-matching recognition."""

    def test_roundtrip_random_plates(self):
        rng = Rng(7)
        for _ in range(1000):
            text = _random_plate(rng)
            assert recognize(render_plate(text)) == text

    def test_recovers_from_flipped_pixels(self, font):
        """Up to (d_min - 1) // 2 flips per glyph are always corrected."""
        d_min, _, _ = min_glyph_distance(font)
        budget = (d_min - 1) // 2
        rng = Rng(11)
        for _ in range(200):
            text = _random_plate(rng)
            pixels = render_plate(text).pixels.copy()
            for i in range(len(text)):
                cells = list(range(35))
                rng.shuffle(cells)
                for flat in cells[: rng.below(budget + 1)]:
                    r, c = divmod(flat, 5)
                    pixels[r, 6 * i + c] = 255 - pixels[r, 6 * i + c]
            assert recognize(PlateImage(pixels)) == text

    def test_two_flips_in_one_glyph(self):
        pixels = render_plate("XYZ789").pixels.copy()
        pixels[0, 6 * 3 + 0] ^= 255
        pixels[3, 6 * 3 + 2] ^= 255
        assert recognize(PlateImage(pixels)) == "XYZ789"

    def test_tie_goes_to_lowest_code_point(self, font):
        cell = font.glyphs["0"].copy()
        for r, c in [(0, 0), (0, 4), (2, 3)]:
            cell[r, c] = font.glyphs["O"][r, c]
        distances = {
            ch: int(np.count_nonzero(font.glyphs[ch] != cell)) for ch in font.chars
        }
        assert distances["0"] == distances["O"] == min(distances.values())
        assert match_cell(cell, font) == "0"

    def test_grey_pixels_use_threshold(self):
        pixels = render_plate("HM").pixels.copy()
        pixels[pixels == 255] = 140
        assert recognize(PlateImage(pixels), threshold=128) == "HM"

    def test_too_many_glyphs(self):
        gap = np.zeros((7, 1), dtype=np.uint8)
        wide = np.hstack([render_plate("A" * 10).pixels, gap, render_plate("A").pixels])
        with pytest.raises(CharsetError):
            recognize(PlateImage(wide))

    def test_recognizer_object(self, font):
        recognizer = TemplateRecognizer(font)
        assert recognizer.recognize(render_plate("LEA2465")) == "LEA2465"


class TestImageFiles:
    """Tests for the plate image text format."""

    def test_format_parse_roundtrip(self):
        image = render_plate("CR05")
        assert parse_image(format_image(image)) == image

    def test_format_rows(self):
        text = format_image(render_plate("I"))
        assert len(text.splitlines()) == 7
        assert set(text) <= {".", "#", "\n"}

    def test_wrong_row_count(self):
        with pytest.raises(ParseError):
            parse_image("#####\n" * 6)

    def test_ragged_rows(self):
        with pytest.raises(ParseError):
            parse_image("#####\n" * 6 + "####\n")
