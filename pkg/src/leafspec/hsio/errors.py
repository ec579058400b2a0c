"""Parse errors raised by the cube readers. All derive from HsioError."""


class HsioError(ValueError):
    """Base class for every cube-format parse/write failure."""


class BadMagic(HsioError):
    """Native-format byte stream does not start with the HSC1 magic."""


class TruncatedPayload(HsioError):
    """Declared payload size exceeds the bytes actually provided."""


class ZeroDimension(HsioError):
    """Header declares a zero-sized axis."""


class UnsupportedCompressed(HsioError):
    """MAT file contains a compressed data element (outside the supported subset)."""


class NoSuitableVariable(HsioError):
    """MAT file holds no 3-D single/double array (or the named one is absent)."""


class BadHeader(HsioError):
    """Container header is missing, truncated, or structurally invalid."""


class UnsupportedInterleave(HsioError):
    """ENVI interleave other than BIL."""


class UnsupportedDataType(HsioError):
    """ENVI data type other than 32-bit float."""


class SizeMismatch(HsioError):
    """Payload length disagrees with the dimensions declared in the header."""
