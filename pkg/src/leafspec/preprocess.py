"""Cube preprocessing: flat-field correction, spectral binning, spatial
resizing, band trimming, wavelength mapping and the preview helpers used
by the diagnosis service.

Default chain for a raw 348-band frame: flat-field -> bin by 3 (348 -> 116)
-> area resize -> trim 6 front / 9 back (116 -> 101).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import CubeError, HyperCube, Stage

SENSOR_BANDS = 348
BINNED_BANDS = 116
TRIMMED_BANDS = 101
WAVELENGTH_MIN_NM = 398.0
WAVELENGTH_MAX_NM = 1011.0
DEFAULT_RGB_TRIPLET = (92, 83, 54)  # 1-based indices into the trimmed cube

DEFAULT_EPSILON = 1e-6
REFLECTANCE_CEILING = 2.0


class DimMismatch(CubeError):
    """Raw/white/dark cubes disagree in shape."""


class NonDivisibleBands(CubeError):
    """Band count is not a multiple of the spectral bin size."""


class TrimExceedsBands(CubeError):
    """Trim specification would drop every band."""


class IndexOutOfRange(CubeError):
    """Band index outside the valid range."""


@dataclass(frozen=True)
class CalibrationPair:
    """White and dark reference frames matching the raw cube's dimensions."""

    white: HyperCube
    dark: HyperCube

    def __post_init__(self):
        if self.white.shape != self.dark.shape:
            raise DimMismatch(f"white {self.white.shape} vs dark {self.dark.shape}")
        if self.white.stage != Stage.RAW or self.dark.stage != Stage.RAW:
            raise CubeError("calibration references must be RAW-stage cubes")


@dataclass(frozen=True)
class BinSpec:
    """Spectral bin size and spatial resize target."""

    spectral_factor: int = 3
    spatial_target: tuple[int, int] = (125, 100)


@dataclass(frozen=True)
class TrimSpec:
    """Bands dropped from the front/back of a binned cube (sensor artifacts)."""

    drop_front: int = 6
    drop_back: int = 9

    def __post_init__(self):
        if self.drop_front < 0 or self.drop_back < 0:
            raise CubeError("trim counts must be non-negative")


def flat_field(raw: HyperCube, cal: CalibrationPair,
               epsilon: float = DEFAULT_EPSILON) -> HyperCube:
    """Convert raw DN to reflectance: (raw - dark) / (white - dark).

    Elements where |white - dark| < epsilon produce 0 and are counted in
    the output's provenance under ``degenerate_pixels``. Output is clamped
    to [0, 2] to bound saturated or dead pixels.
    """
    if raw.shape != cal.white.shape:
        raise DimMismatch(f"raw {raw.shape} vs references {cal.white.shape}")
    if raw.stage != Stage.RAW:
        raise CubeError(f"flat_field expects a RAW cube, got {raw.stage.name}")
    denom = cal.white.data - cal.dark.data
    degenerate = np.abs(denom) < epsilon
    safe = np.where(degenerate, 1.0, denom)
    out = (raw.data - cal.dark.data) / safe
    out = np.where(degenerate, 0.0, out)
    out = np.clip(out, 0.0, REFLECTANCE_CEILING)
    return raw.derive(data=out.astype(raw.data.dtype), stage=Stage.REFLECTANCE,
                      keep_wavelengths=True,
                      degenerate_pixels=int(np.count_nonzero(degenerate)))


def spectral_bin(cube: HyperCube, k_s: int = 3) -> HyperCube:
    """Average each run of k_s adjacent bands (348 -> 116 at the default)."""
    if k_s <= 0:
        raise NonDivisibleBands(f"bin size must be positive, got {k_s}")
    if cube.bands % k_s != 0:
        raise NonDivisibleBands(f"{cube.bands} bands not divisible by {k_s}")
    if cube.stage > Stage.BINNED:
        raise CubeError("cube is already past the binning stage")
    n_out = cube.bands // k_s
    grouped = cube.data.reshape(n_out, k_s, cube.rows, cube.cols)
    binned = grouped.sum(axis=1) / k_s
    wl = None
    if cube.wavelengths_nm is not None:
        wl = cube.wavelengths_nm.reshape(n_out, k_s).sum(axis=1) / k_s
    return cube.derive(data=binned.astype(cube.data.dtype), stage=Stage.BINNED,
                       wavelengths_nm=wl, spectral_bin=k_s)


def _overlap_weights(n_src: int, n_dst: int, dtype) -> np.ndarray:
    """Row-stochastic (n_dst, n_src) matrix of box-overlap fractions."""
    scale = n_src / n_dst
    weights = np.zeros((n_dst, n_src), dtype=dtype)
    for i in range(n_dst):
        lo = i * scale
        hi = (i + 1) * scale
        first = int(np.floor(lo))
        last = int(np.ceil(hi))
        for j in range(first, min(last, n_src)):
            overlap = min(hi, j + 1) - max(lo, j)
            if overlap > 0:
                weights[i, j] = overlap / scale
    return weights


def spatial_resize(cube: HyperCube, target: tuple[int, int]) -> HyperCube:
    """Area-average resample of every band to target (rows, cols).

    Mean-preserving: each output cell is the average of the source region
    it covers, with fractional edge cells weighted by overlap.
    """
    rows, cols = target
    if rows < 1 or cols < 1:
        raise CubeError(f"resize target must be at least 1x1, got {rows}x{cols}")
    if (rows, cols) == (cube.rows, cube.cols):
        return cube.derive(data=cube.data.copy(), stage=cube.stage, keep_wavelengths=True)
    wr = _overlap_weights(cube.rows, rows, cube.data.dtype)
    wc = _overlap_weights(cube.cols, cols, cube.data.dtype)
    resized = np.einsum("ij,bjk,lk->bil", wr, cube.data, wc, optimize=True)
    return cube.derive(data=resized.astype(cube.data.dtype), stage=cube.stage,
                       keep_wavelengths=True, resized_from=(cube.rows, cube.cols))


def trim_bands(cube: HyperCube, spec: TrimSpec = TrimSpec()) -> HyperCube:
    """Drop the leading/trailing sensor-artifact bands (116 -> 101 at defaults)."""
    if spec.drop_front + spec.drop_back >= cube.bands:
        raise TrimExceedsBands(
            f"cannot drop {spec.drop_front}+{spec.drop_back} of {cube.bands} bands")
    stop = cube.bands - spec.drop_back
    kept = cube.data[spec.drop_front:stop]
    wl = None
    if cube.wavelengths_nm is not None:
        wl = cube.wavelengths_nm[spec.drop_front:stop]
    return cube.derive(data=kept.copy(), stage=Stage.TRIMMED, wavelengths_nm=wl,
                       trimmed=(spec.drop_front, spec.drop_back))


def wavelength_of_band(index_1based: int, n_bands: int = BINNED_BANDS) -> float:
    """Center wavelength (nm) of a binned band, 1-based in the 116-band space.

    Each binned band averages three adjacent sensor bands; its center is the
    middle sensor band, on the linear 398-1011 nm axis of 348 samples.
    """
    if not 1 <= index_1based <= n_bands:
        raise IndexOutOfRange(f"band {index_1based} outside 1..{n_bands}")
    delta = (WAVELENGTH_MAX_NM - WAVELENGTH_MIN_NM) / (SENSOR_BANDS - 1)
    return WAVELENGTH_MIN_NM + (3 * (index_1based - 1) + 1) * delta


def trimmed_wavelengths(spec: TrimSpec = TrimSpec()) -> np.ndarray:
    """Wavelength axis for the default trimmed cube (bands 7..107 of 116)."""
    first = spec.drop_front + 1
    last = BINNED_BANDS - spec.drop_back
    return np.array([wavelength_of_band(b) for b in range(first, last + 1)])


def rgb_composite(cube: HyperCube,
                  band_triplet: tuple[int, int, int] = DEFAULT_RGB_TRIPLET) -> np.ndarray:
    """8-bit (rows, cols, 3) composite; each channel min-max scaled on its own.

    Indices are 1-based; the default triplet targets the 101-band trimmed cube.
    A constant band has no range and maps to all zeros.
    """
    out = np.zeros((cube.rows, cube.cols, 3), dtype=np.uint8)
    for channel, index in enumerate(band_triplet):
        if not 1 <= index <= cube.bands:
            raise IndexOutOfRange(f"band {index} outside 1..{cube.bands}")
        plane = cube.data[index - 1].astype(np.float64)
        lo = plane.min()
        span = plane.max() - lo
        if span > 0:
            out[:, :, channel] = np.rint((plane - lo) / span * 255.0).astype(np.uint8)
    return out


def central_spectrum(cube: HyperCube) -> np.ndarray:
    """Reflectance of the central pixel (floor(rows/2), floor(cols/2))."""
    return cube.data[:, cube.rows // 2, cube.cols // 2].copy()
