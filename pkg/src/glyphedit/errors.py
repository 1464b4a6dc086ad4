"""Exception types shared across the package."""


class GlyphEditError(Exception):
    """Base class for all package errors."""


class EmptyTextError(GlyphEditError):
    """Text is empty after whitespace normalization."""


class TextTooLongError(GlyphEditError):
    """Text exceeds the maximum supported character count."""


class MissingGlyphError(GlyphEditError):
    """The font has no glyph for a codepoint."""

    def __init__(self, codepoint: int):
        self.codepoint = codepoint
        super().__init__(f"font has no glyph for U+{codepoint:04X} ({chr(codepoint)!r})")


class BadShapeError(GlyphEditError):
    """An array does not have the shape required by the operation."""


class BadTimestepError(GlyphEditError):
    """Diffusion timestep outside [0, T)."""


class DimMismatchError(GlyphEditError):
    """Feature dimensions disagree with the configuration."""


class RowCountMismatchError(GlyphEditError):
    """Two per-character feature arrays disagree on character count."""


class LevelCountMismatchError(GlyphEditError):
    """Multi-scale feature input does not have exactly five levels."""


class SpatialMismatchError(GlyphEditError):
    """Upsampled top-down feature does not match the lateral feature shape."""


class NonFiniteError(GlyphEditError):
    """A NaN or Inf appeared in a computation that must stay finite."""


class DegeneratePolygonError(GlyphEditError):
    """Polygon has (near) zero area or fewer than three points."""


class SchemaError(GlyphEditError):
    """A manifest record violates the schema."""


class MissingFileError(GlyphEditError):
    """A referenced file does not exist."""


class EmptyInputError(GlyphEditError):
    """Metric input collection is empty."""


class TooFewSamplesError(GlyphEditError):
    """Not enough samples for a distribution-level metric."""


class ConfigError(GlyphEditError):
    """Run configuration is invalid."""


class CheckpointError(GlyphEditError):
    """Checkpoint file missing, corrupt, or incompatible."""


class BadInputError(GlyphEditError):
    """User-facing input validation failure."""
