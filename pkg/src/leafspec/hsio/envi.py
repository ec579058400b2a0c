"""ENVI-style header + band-interleaved-by-line payload reader.

Header is text key = value, case-insensitive keys, with {...} blocks for
lists (possibly spanning lines). Only the BIL interleave with 32-bit float
samples is supported; that is what the line-scan instrument emits.
"""
from __future__ import annotations

import re

import numpy as np

from ..cube import HyperCube, Stage
from .errors import (BadHeader, SizeMismatch, UnsupportedDataType,
                     UnsupportedInterleave)

_ENVI_FLOAT32 = 4


def parse_envi_header(text: str) -> dict:
    """Key-value pairs with lowercased keys; {...} lists joined and kept raw."""
    fields: dict[str, str] = {}
    # fold multi-line { } blocks onto one line before splitting
    folded = re.sub(r"\{[^}]*\}", lambda m: m.group(0).replace("\n", " "), text)
    for line in folded.splitlines():
        line = line.strip()
        if not line or line.lower() == "envi" or line.startswith(";"):
            continue
        if "=" not in line:
            continue
        key, value = line.split("=", 1)
        fields[key.strip().lower()] = value.strip()
    return fields


def _int_field(fields: dict, key: str) -> int:
    if key not in fields:
        raise BadHeader(f"header missing '{key}'")
    try:
        return int(fields[key])
    except ValueError as exc:
        raise BadHeader(f"header field '{key}' is not an integer: {fields[key]!r}") from exc


def _wavelengths(fields: dict, bands: int):
    raw = fields.get("wavelength")
    if raw is None:
        return None
    values = [v for v in re.split(r"[\s,]+", raw.strip("{} \t")) if v]
    if len(values) != bands:
        raise SizeMismatch(f"wavelength list has {len(values)} entries for {bands} bands")
    try:
        return np.array([float(v) for v in values])
    except ValueError as exc:
        raise BadHeader(f"non-numeric wavelength entry: {exc}") from exc


def parse_envi_bil(header_text: str, payload: bytes,
                   stage: Stage = Stage.RAW) -> HyperCube:
    """Decode a BIL payload described by an ENVI header.

    BIL order is per line: all bands of that line, samples fastest. The
    instrument writes raw DN, so the default stage is RAW.
    """
    fields = parse_envi_header(header_text)
    samples = _int_field(fields, "samples")
    lines = _int_field(fields, "lines")
    bands = _int_field(fields, "bands")
    interleave = fields.get("interleave", "").lower()
    if interleave != "bil":
        raise UnsupportedInterleave(f"interleave {interleave!r}, only 'bil' is supported")
    data_type = _int_field(fields, "data type")
    if data_type != _ENVI_FLOAT32:
        raise UnsupportedDataType(f"data type {data_type}, only {_ENVI_FLOAT32} (float32) is supported")
    byte_order = int(fields.get("byte order", "0"))
    dtype = ">f4" if byte_order == 1 else "<f4"

    expected = samples * lines * bands * 4
    if len(payload) != expected:
        raise SizeMismatch(f"payload is {len(payload)} bytes, header declares {expected}")

    raw = np.frombuffer(payload, dtype=dtype).reshape(lines, bands, samples)
    data = np.ascontiguousarray(np.transpose(raw, (1, 0, 2)), dtype=np.float32)
    return HyperCube(rows=lines, cols=samples, bands=bands, data=data,
                     wavelengths_nm=_wavelengths(fields, bands), stage=stage)
