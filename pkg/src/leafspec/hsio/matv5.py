"""Reader for a constrained MAT-file v5 subset.

Supported: uncompressed numeric array elements of class single or double
with exactly three dimensions, either endianness, numeric data optionally
stored in a narrower integer type (MATLAB's automatic compression of
integral values). Everything else is skipped or rejected with a clear
error; compressed elements abort the scan because their contents cannot
be inspected without inflating them.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from ..cube import HyperCube, Stage
from .errors import BadHeader, NoSuitableVariable, UnsupportedCompressed

MI_INT8 = 1
MI_UINT8 = 2
MI_INT16 = 3
MI_UINT16 = 4
MI_INT32 = 5
MI_UINT32 = 6
MI_SINGLE = 7
MI_DOUBLE = 9
MI_MATRIX = 14
MI_COMPRESSED = 15

MX_DOUBLE = 6
MX_SINGLE = 7

_NUMERIC_STORAGE = {
    MI_INT8: "i1", MI_UINT8: "u1",
    MI_INT16: "i2", MI_UINT16: "u2",
    MI_INT32: "i4", MI_UINT32: "u4",
    MI_SINGLE: "f4", MI_DOUBLE: "f8",
}

_COMPLEX_FLAG = 0x0800


def _read_tag(buf: bytes, pos: int, bo: str):
    """Returns (mi_type, payload offset, payload size, next element offset)."""
    if pos + 8 > len(buf):
        raise BadHeader(f"element tag at {pos} overruns file of {len(buf)} bytes")
    first = int(np.frombuffer(buf, dtype=bo + "u4", count=1, offset=pos)[0])
    if first >> 16:
        # small data element: type and byte count packed into one word
        mi_type = first & 0xFFFF
        size = first >> 16
        if size > 4:
            raise BadHeader(f"small element at {pos} claims {size} bytes")
        return mi_type, pos + 4, size, pos + 8
    size = int(np.frombuffer(buf, dtype=bo + "u4", count=1, offset=pos + 4)[0])
    data_off = pos + 8
    if data_off + size > len(buf):
        raise BadHeader(f"element at {pos} declares {size} bytes beyond end of file")
    padded = size + (-size % 8)
    return first, data_off, size, data_off + padded


def _scan_matrix(buf: bytes, start: int, end: int, bo: str,
                 wanted: Optional[str]) -> Optional[tuple]:
    """Parse one miMATRIX body; returns (name, dims, values) when it is a
    3-D single/double real array, else None."""
    pos = start
    mi_type, off, size, pos = _read_tag(buf, pos, bo)
    if mi_type != MI_UINT32 or size < 8:
        raise BadHeader("matrix element does not begin with array flags")
    flags = int(np.frombuffer(buf, dtype=bo + "u4", count=1, offset=off)[0])
    array_class = flags & 0xFF
    is_complex = bool(flags & _COMPLEX_FLAG)

    mi_type, off, size, pos = _read_tag(buf, pos, bo)
    if mi_type != MI_INT32:
        raise BadHeader("matrix element missing dimensions")
    dims = np.frombuffer(buf, dtype=bo + "i4", count=size // 4, offset=off)

    mi_type, off, size, pos = _read_tag(buf, pos, bo)
    if mi_type != MI_INT8:
        raise BadHeader("matrix element missing array name")
    name = buf[off:off + size].decode("ascii", errors="replace")

    if wanted is not None and name != wanted:
        return None
    if array_class not in (MX_DOUBLE, MX_SINGLE) or is_complex or dims.size != 3:
        return None
    if np.any(dims <= 0):
        raise BadHeader(f"array '{name}' has non-positive dimension {tuple(dims)}")

    mi_type, off, size, pos = _read_tag(buf, pos, bo)
    storage = _NUMERIC_STORAGE.get(mi_type)
    if storage is None:
        raise BadHeader(f"array '{name}' stored as unsupported mi type {mi_type}")
    if pos - 8 > end and off + size > end:
        raise BadHeader(f"array '{name}' data overruns its element")
    count = size // np.dtype(storage).itemsize
    if count != int(np.prod(dims)):
        raise BadHeader(f"array '{name}' holds {count} values for dims {tuple(dims)}")
    values = np.frombuffer(buf, dtype=bo + storage, count=count, offset=off)
    return name, tuple(int(d) for d in dims), values


def parse_mat_v5(buf: bytes, variable: Optional[str] = None,
                 stage: Stage = Stage.REFLECTANCE) -> HyperCube:
    """Extract the first (or named) 3-D single/double array as a cube.

    The file stores (rows, cols, bands) in column-major element order;
    values are remapped to the internal band-sequential layout.
    """
    if len(buf) < 128:
        raise BadHeader(f"MAT v5 needs a 128-byte header, got {len(buf)} bytes")
    endian = buf[126:128]
    if endian == b"IM":
        bo = "<"
    elif endian == b"MI":
        bo = ">"
    else:
        raise BadHeader(f"unrecognized endian indicator {endian!r}")

    pos = 128
    while pos + 8 <= len(buf):
        mi_type, off, size, nxt = _read_tag(buf, pos, bo)
        if mi_type == MI_COMPRESSED:
            raise UnsupportedCompressed("compressed MAT elements are outside the supported subset")
        if mi_type == MI_MATRIX:
            found = _scan_matrix(buf, off, off + size, bo, variable)
            if found is not None:
                name, (rows, cols, bands), values = found
                grid = values.reshape((rows, cols, bands), order="F")
                data = np.ascontiguousarray(np.transpose(grid, (2, 0, 1)), dtype=np.float32)
                return HyperCube(rows=rows, cols=cols, bands=bands, data=data,
                                 stage=stage, provenance={"mat_variable": name})
        pos = nxt
    if variable is not None:
        raise NoSuitableVariable(f"no 3-D single/double array named '{variable}'")
    raise NoSuitableVariable("no 3-D single/double array in file")
