"""Native HSC cube format.

Byte layout (normative, little-endian throughout):

    offset 0   magic "HSC1" (4 ASCII bytes)
    offset 4   u32 rows, u32 cols, u32 bands
    offset 16  u8 wavelength-table flag (0 or 1)
    then       if flag == 1: bands * f64 wavelengths (nm)
    then       rows*cols*bands * f32 samples, band-sequential order

Writing then parsing is the byte identity; parsing never does arithmetic on
the samples, so every f32 bit pattern (NaN payloads included) survives.
"""
from __future__ import annotations

import struct

import numpy as np

from ..cube import HyperCube, Stage
from .errors import BadMagic, SizeMismatch, TruncatedPayload, ZeroDimension

MAGIC = b"HSC1"
_HEADER = struct.Struct("<III")


def parse_hsc(buf: bytes, stage: Stage = Stage.REFLECTANCE) -> HyperCube:
    """Decode an HSC byte sequence.

    The format does not record the processing stage; callers that know the
    file holds raw DN (e.g. white/dark references) pass ``stage=Stage.RAW``.
    """
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagic("missing HSC1 magic")
    if len(buf) < 17:
        raise TruncatedPayload(f"header needs 17 bytes, got {len(buf)}")
    rows, cols, bands = _HEADER.unpack_from(buf, 4)
    if rows == 0 or cols == 0 or bands == 0:
        raise ZeroDimension(f"zero-sized axis in {rows}x{cols}x{bands}")
    flag = buf[16]
    offset = 17
    wavelengths = None
    if flag == 1:
        need = offset + 8 * bands
        if len(buf) < need:
            raise TruncatedPayload(f"wavelength table needs {need} bytes, got {len(buf)}")
        wavelengths = np.frombuffer(buf, dtype="<f8", count=bands, offset=offset).copy()
        offset = need
    n_values = rows * cols * bands
    end = offset + 4 * n_values
    if len(buf) < end:
        raise TruncatedPayload(f"payload needs {end} bytes, got {len(buf)}")
    if len(buf) > end:
        raise SizeMismatch(f"{len(buf) - end} trailing bytes after payload")
    data = np.frombuffer(buf, dtype="<f4", count=n_values, offset=offset)
    data = data.astype(np.float32).reshape(bands, rows, cols)
    return HyperCube(rows=rows, cols=cols, bands=bands, data=data,
                     wavelengths_nm=wavelengths, stage=stage)


def write_hsc(cube: HyperCube) -> bytes:
    """Exact inverse of parse_hsc. Cube invariants guarantee writability."""
    parts = [MAGIC, _HEADER.pack(cube.rows, cube.cols, cube.bands)]
    if cube.wavelengths_nm is not None:
        parts.append(b"\x01")
        parts.append(np.asarray(cube.wavelengths_nm, dtype="<f8").tobytes())
    else:
        parts.append(b"\x00")
    parts.append(np.ascontiguousarray(cube.data, dtype="<f4").tobytes())
    return b"".join(parts)
