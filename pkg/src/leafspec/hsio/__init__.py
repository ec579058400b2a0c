"""Cube readers/writers: native HSC, MAT v5 subset, ENVI BIL."""
from __future__ import annotations

import enum
from typing import Optional

from ..cube import HyperCube, Stage
from .envi import parse_envi_bil, parse_envi_header
from .errors import (BadHeader, BadMagic, HsioError, NoSuitableVariable,
                     SizeMismatch, TruncatedPayload, UnsupportedCompressed,
                     UnsupportedDataType, UnsupportedInterleave, ZeroDimension)
from .hsc import MAGIC as HSC_MAGIC
from .hsc import parse_hsc, write_hsc
from .matv5 import parse_mat_v5


class CubeFormat(enum.Enum):
    HSC = "hsc"
    MAT_V5 = "mat"
    ENVI_BIL = "envi"


def detect_format(buf: bytes) -> Optional[CubeFormat]:
    """Sniff HSC vs MAT v5 from leading bytes; ENVI needs its text header."""
    if buf[:4] == HSC_MAGIC:
        return CubeFormat.HSC
    if len(buf) >= 128 and buf[126:128] in (b"IM", b"MI"):
        return CubeFormat.MAT_V5
    return None


def parse_auto(buf: bytes, stage: Stage = Stage.REFLECTANCE,
               envi_header: Optional[str] = None) -> HyperCube:
    """Parse whichever supported format the bytes hold.

    An ENVI payload is not self-describing, so it is only attempted when
    the caller supplies the header text.
    """
    if envi_header is not None:
        return parse_envi_bil(envi_header, buf, stage=stage)
    fmt = detect_format(buf)
    if fmt is CubeFormat.HSC:
        return parse_hsc(buf, stage=stage)
    if fmt is CubeFormat.MAT_V5:
        return parse_mat_v5(buf, stage=stage)
    raise BadHeader("unrecognized cube format (expected HSC or MAT v5 bytes)")


__all__ = [
    "CubeFormat", "HyperCube", "Stage",
    "parse_hsc", "write_hsc", "parse_mat_v5", "parse_envi_bil",
    "parse_envi_header", "parse_auto", "detect_format", "HSC_MAGIC",
    "HsioError", "BadMagic", "TruncatedPayload", "ZeroDimension",
    "UnsupportedCompressed", "NoSuitableVariable", "BadHeader",
    "UnsupportedInterleave", "UnsupportedDataType", "SizeMismatch",
]
