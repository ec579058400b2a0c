"""Hyperspectral cube container shared by every pipeline stage.

The canonical in-memory layout is band-sequential: ``data`` has shape
``(bands, rows, cols)`` and is C-contiguous, so ``data[b]`` is the full
image of band ``b`` and the flat buffer matches the on-disk band-sequential
order used by the native file format.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class Stage(enum.IntEnum):
    """Processing stage of a cube. Transitions may only move forward."""

    RAW = 0
    REFLECTANCE = 1
    BINNED = 2
    TRIMMED = 3


class CubeError(ValueError):
    """Invalid cube construction or an illegal stage transition."""


class StageRegression(CubeError):
    """Attempted to move a cube backwards through the stage order."""


def require_advance(src: Stage, dst: Stage) -> None:
    """Guard for Raw -> Reflectance -> Binned -> Trimmed ordering (skips allowed)."""
    if dst < src:
        raise StageRegression(f"stage may not regress: {src.name} -> {dst.name}")


@dataclass
class HyperCube:
    """rows x cols x bands tensor of reflectance (or raw DN) values.

    ``wavelengths_nm``, when present, must be strictly increasing and one
    entry per band. ``provenance`` collects processing flags such as the
    degenerate-pixel count from flat-field correction.
    """

    rows: int
    cols: int
    bands: int
    data: np.ndarray
    wavelengths_nm: Optional[np.ndarray] = None
    stage: Stage = Stage.RAW
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0 or self.bands <= 0:
            raise CubeError(f"dimensions must be positive, got {self.rows}x{self.cols}x{self.bands}")
        data = np.asarray(self.data)
        if data.dtype not in (np.float32, np.float64):
            data = data.astype(np.float32)
        expected = (self.bands, self.rows, self.cols)
        if data.size != self.rows * self.cols * self.bands:
            raise CubeError(f"data has {data.size} values, expected {self.rows * self.cols * self.bands}")
        self.data = np.ascontiguousarray(data.reshape(expected))
        if self.wavelengths_nm is not None:
            wl = np.asarray(self.wavelengths_nm, dtype=np.float64)
            if wl.shape != (self.bands,):
                raise CubeError(f"wavelength table has length {wl.size}, expected {self.bands}")
            if not np.all(np.diff(wl) > 0):
                raise CubeError("wavelengths_nm must be strictly increasing")
            self.wavelengths_nm = wl
        self.stage = Stage(self.stage)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.rows, self.cols, self.bands)

    def value_at(self, row: int, col: int, band: int) -> float:
        return float(self.data[band, row, col])

    def band_image(self, band: int) -> np.ndarray:
        return self.data[band]

    def derive(self, *, data: np.ndarray, stage: Stage,
               wavelengths_nm: Optional[np.ndarray] = None,
               keep_wavelengths: bool = False, **extra_provenance) -> "HyperCube":
        """New cube derived from this one; enforces the forward stage order."""
        require_advance(self.stage, stage)
        bands, rows, cols = data.shape
        wl = self.wavelengths_nm if keep_wavelengths else wavelengths_nm
        prov = dict(self.provenance)
        prov.update(extra_provenance)
        return HyperCube(rows=rows, cols=cols, bands=bands, data=data,
                         wavelengths_nm=wl, stage=stage, provenance=prov)
