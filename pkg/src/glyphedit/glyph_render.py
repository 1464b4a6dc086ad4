"""Rasterize target text into per-character and full-line glyph images.

Two forms are produced for every prompt: a stack of single-character
images (one 36x48 slice per character) and one 48x320 full-line image.
Both are black ink on white background, float arrays in [0, 1], and
deterministic for a fixed (text, font) pair.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from fontTools.ttLib import TTFont
from PIL import Image, ImageDraw, ImageFont

from .errors import EmptyTextError, MissingGlyphError, TextTooLongError

LOCAL_H, LOCAL_W = 36, 48
GLOBAL_H, GLOBAL_W = 48, 320
N_MAX = 20

# keep a one-pixel-plus margin so no glyph touches a border column
_GLOBAL_MARGIN = 2
_LOCAL_MARGIN = 1


def default_font_path() -> str:
    """Path of the bundled Latin+CJK font (Noto Sans SC subset, OFL)."""
    return str(resources.files("glyphedit").joinpath("fonts/NotoSansSCMerged-Regular.ttf"))


def normalize_text(text: str) -> str:
    """Strip leading/trailing whitespace; interior spaces are kept."""
    return text.strip()


@dataclass(frozen=True)
class TextLine:
    """A prompt of 1..N_MAX characters with no control characters."""

    text: str
    language: str = "mixed"

    def __post_init__(self):
        object.__setattr__(self, "text", normalize_text(self.text))
        if len(self.text) == 0:
            raise EmptyTextError("text is empty after whitespace normalization")
        if len(self.text) > N_MAX:
            raise TextTooLongError(
                f"text has {len(self.text)} characters; the maximum is {N_MAX}"
            )
        for ch in self.text:
            if unicodedata.category(ch).startswith("C"):
                raise EmptyTextError(f"control character U+{ord(ch):04X} not allowed")

    def __len__(self) -> int:
        return len(self.text)


class FontSpec:
    """An immutable handle on one TrueType font.

    Coverage is read from the font's cmap once at construction so missing
    glyphs are reported as errors instead of silently rendering .notdef.
    """

    def __init__(self, path: str | None = None):
        self.path = path or default_font_path()
        tt = TTFont(self.path)
        self._codepoints = frozenset(tt.getBestCmap().keys())
        tt.close()
        self._sized: dict[int, ImageFont.FreeTypeFont] = {}

    def covers(self, ch: str) -> bool:
        return ord(ch) in self._codepoints

    def check_coverage(self, text: str) -> None:
        for ch in text:
            if ch != " " and not self.covers(ch):
                raise MissingGlyphError(ord(ch))

    def at_size(self, px: int) -> ImageFont.FreeTypeFont:
        if px not in self._sized:
            self._sized[px] = ImageFont.truetype(self.path, px)
        return self._sized[px]


@dataclass(frozen=True)
class GlyphImages:
    """The rendered pair: per-character stack and full-line image."""

    local: np.ndarray  # (N, 36, 48), float32 in [0, 1]
    global_: np.ndarray = field(repr=False, default=None)  # (48, 320)

    @property
    def n_chars(self) -> int:
        return self.local.shape[0]


def _render_char(ch: str, font: FontSpec) -> np.ndarray:
    """One centered glyph in a 36x48 cell, background 1.0."""
    img = Image.new("L", (LOCAL_W, LOCAL_H), 255)
    if ch == " ":
        return np.asarray(img, dtype=np.float32) / 255.0
    size = 28
    while size > 4:
        f = font.at_size(size)
        x0, y0, x1, y1 = f.getbbox(ch)
        gw, gh = x1 - x0, y1 - y0
        if gw <= LOCAL_W - 2 * _LOCAL_MARGIN and gh <= LOCAL_H - 2 * _LOCAL_MARGIN:
            break
        size -= 2
    draw = ImageDraw.Draw(img)
    ox = (LOCAL_W - gw) // 2 - x0
    oy = (LOCAL_H - gh) // 2 - y0
    draw.text((ox, oy), ch, font=f, fill=0)
    return np.asarray(img, dtype=np.float32) / 255.0


def render_local(line: TextLine, font: FontSpec) -> np.ndarray:
    """Render each character to its own 36x48 image; shape (N, 36, 48)."""
    font.check_coverage(line.text)
    return np.stack([_render_char(ch, font) for ch in line.text])


def render_global(line: TextLine, font: FontSpec) -> np.ndarray:
    """Render the whole line into a 48x320 image.

    Left-aligned at a height-fitting size, padded with background on the
    right; downscaled (never cropped) when the natural width exceeds the
    canvas.
    """
    font.check_coverage(line.text)
    size = 36
    f = font.at_size(size)
    x0, y0, x1, y1 = f.getbbox(line.text)
    gw, gh = max(x1 - x0, 1), max(y1 - y0, 1)

    strip = Image.new("L", (gw, GLOBAL_H), 255)
    draw = ImageDraw.Draw(strip)
    draw.text((-x0, (GLOBAL_H - gh) // 2 - y0), line.text, font=f, fill=0)

    avail = GLOBAL_W - 2 * _GLOBAL_MARGIN
    if gw > avail:
        scale = avail / gw
        strip = strip.resize((avail, max(1, round(GLOBAL_H * scale))), Image.BILINEAR)

    canvas = Image.new("L", (GLOBAL_W, GLOBAL_H), 255)
    canvas.paste(strip, (_GLOBAL_MARGIN, (GLOBAL_H - strip.height) // 2))
    return np.asarray(canvas, dtype=np.float32) / 255.0


def render_glyphs(line: TextLine, font: FontSpec) -> GlyphImages:
    return GlyphImages(local=render_local(line, font), global_=render_global(line, font))


def ink_coverage(img: np.ndarray) -> float:
    """Fraction of pixels darker than mid-gray."""
    return float((img < 0.5).mean())
