"""Synthetic hyperspectral leaf datasets with planted band signatures.

Every sample is a smooth leaf-like baseline spectrum replicated over the
image plus three perturbations:

  * a "stain" blob at a random location whose contrast varies smoothly
    across bands (illumination/surface nuisance, present in both classes);
  * for class I only, a lesion blob adding ``signal_delta`` at an
    ``expressed_bands``-sized random subset of the signal bands, with
    per-band severity jitter (infection stage shows at different
    wavelengths on different leaves);
  * i.i.d. per-pixel Gaussian noise.

Partial expression makes the class information structural rather than an
amplitude contest: with 3 of 5 bands expressed, monitoring one band misses
40% of infected samples no matter how clean the data is, two bands miss
10%, and any three cover every lesion (pigeonhole). That
graded landscape is what lets the band-selection GA climb, while the full
five-band pipeline can still exceed 98% accuracy. With ``signal_delta=0``
the class distributions are identical by construction.
"""
from __future__ import annotations

import csv
import pathlib
from dataclasses import dataclass, field

import numpy as np

from .cube import HyperCube, Stage
from .data import LABEL_H, LABEL_I, LABEL_NAMES, LabeledSample
from .hsio import write_hsc
from .preprocess import BINNED_BANDS

DEFAULT_SIGNAL_BANDS = (21, 32, 60, 79, 97)


def _leaf_baseline(bands: int) -> np.ndarray:
    """Fixed smooth reflectance curve: green bump, red trough, red edge, NIR
    plateau. Shape is cosmetic; only smoothness matters."""
    anchor_pos = np.array([0.0, 0.18, 0.42, 0.50, 0.62, 0.80, 1.0])
    anchor_val = np.array([0.22, 0.30, 0.24, 0.20, 0.52, 0.62, 0.60])
    grid = np.linspace(0.0, 1.0, bands)
    return np.interp(grid, anchor_pos, anchor_val)


@dataclass(frozen=True)
class SynthSpec:
    n_per_class: int = 100
    dims: tuple[int, int, int] = (20, 20, BINNED_BANDS)
    signal_bands: tuple[int, ...] = DEFAULT_SIGNAL_BANDS
    signal_delta: float = 0.15
    noise_sigma: float = 0.02
    spatial_blob: int = 8
    seed: int = 0
    # nuisance model: smooth per-band stain contrast, partial band
    # expression of lesions, and per-band severity jitter
    stain_sigma: float = 0.015
    stain_corr_bands: float = 8.0
    expressed_bands: int = 3
    lesion_jitter: float = 0.25

    def __post_init__(self):
        rows, cols, bands = self.dims
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")
        if any(not 1 <= b <= bands for b in self.signal_bands):
            raise ValueError(f"signal bands {self.signal_bands} outside 1..{bands}")
        if self.n_per_class < 1 or rows < 4 or cols < 4:
            raise ValueError("need n_per_class >= 1 and at least a 4x4 image")


def _blob_mask(rows: int, cols: int, center: tuple[float, float],
               radius: float) -> np.ndarray:
    """Soft disk: Gaussian bump with sigma = radius / 1.5."""
    rr, cc = np.mgrid[0:rows, 0:cols]
    d2 = (rr - center[0]) ** 2 + (cc - center[1]) ** 2
    sigma = radius / 1.5
    return np.exp(-d2 / (2.0 * sigma * sigma))


def _smooth_band_profile(rng: np.random.Generator, bands: int,
                         corr: float) -> np.ndarray:
    """Unit-variance noise correlated across ~corr adjacent bands."""
    white = rng.normal(size=bands + int(6 * corr))
    offsets = np.arange(-int(3 * corr), int(3 * corr) + 1)
    kernel = np.exp(-offsets ** 2 / (2.0 * corr * corr))
    kernel /= np.sqrt(np.sum(kernel ** 2))
    smooth = np.convolve(white, kernel, mode="valid")
    return smooth[:bands]


def _one_sample(spec: SynthSpec, label: int,
                rng: np.random.Generator) -> HyperCube:
    rows, cols, bands = spec.dims
    data = np.broadcast_to(_leaf_baseline(bands)[:, None, None],
                           (bands, rows, cols)).astype(np.float64).copy()

    # nuisance stain, both classes
    center = (rng.uniform(0, rows - 1), rng.uniform(0, cols - 1))
    radius = spec.spatial_blob * rng.uniform(0.8, 1.6)
    stain = _blob_mask(rows, cols, center, radius)
    profile = spec.stain_sigma * _smooth_band_profile(rng, bands, spec.stain_corr_bands)
    data += profile[:, None, None] * stain[None, :, :]

    # lesion, class I only; exactly zero when signal_delta == 0. The center
    # stays in the middle half of the leaf so edge truncation cannot shrink
    # the lesion into the stain-amplitude regime, and severity is floored
    # at half the nominal delta for the same reason.
    center = (rng.uniform(0.3 * (rows - 1), 0.7 * (rows - 1)),
              rng.uniform(0.3 * (cols - 1), 0.7 * (cols - 1)))
    radius = spec.spatial_blob * rng.uniform(0.9, 1.2)
    lesion = _blob_mask(rows, cols, center, radius)
    n_sig = len(spec.signal_bands)
    expressed = rng.choice(n_sig, size=min(spec.expressed_bands, n_sig),
                           replace=False)
    jitter = rng.normal(size=n_sig)
    if label == LABEL_I:
        for pos in expressed:
            band = spec.signal_bands[pos]
            severity = max(1.0 + spec.lesion_jitter * jitter[pos], 0.5)
            data[band - 1] += spec.signal_delta * severity * lesion

    data += rng.normal(0.0, spec.noise_sigma, size=data.shape)
    np.clip(data, 0.0, 2.0, out=data)
    return HyperCube(rows=rows, cols=cols, bands=bands,
                     data=data.astype(np.float32), stage=Stage.BINNED)


def generate(spec: SynthSpec) -> list[LabeledSample]:
    """Deterministic dataset: n_per_class H samples then n_per_class I."""
    seeds = np.random.SeedSequence(spec.seed).spawn(2 * spec.n_per_class)
    samples = []
    for i, seed in enumerate(seeds):
        label = LABEL_H if i < spec.n_per_class else LABEL_I
        rng = np.random.default_rng(seed)
        samples.append(LabeledSample(cube=_one_sample(spec, label, rng), label=label))
    return samples


def mean_spectral_difference(samples: list[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    """Per-band (mean_I - mean_H) of sample band-means, with its standard error."""
    by_class = {LABEL_H: [], LABEL_I: []}
    for s in samples:
        by_class[s.label].append(s.cube.data.mean(axis=(1, 2)))
    h = np.stack(by_class[LABEL_H])
    i = np.stack(by_class[LABEL_I])
    diff = i.mean(axis=0) - h.mean(axis=0)
    se = np.sqrt(i.var(axis=0, ddof=1) / len(i) + h.var(axis=0, ddof=1) / len(h))
    return diff, se


def write_dataset(samples: list[LabeledSample], out_dir: str | pathlib.Path) -> pathlib.Path:
    """HSC file per sample plus a labels.csv manifest (filename,label)."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "labels.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label"])
        for idx, sample in enumerate(samples):
            name = f"sample_{idx:04d}_{LABEL_NAMES[sample.label]}.hsc"
            (out / name).write_bytes(write_hsc(sample.cube))
            writer.writerow([name, LABEL_NAMES[sample.label]])
    return manifest


def read_dataset(data_dir: str | pathlib.Path) -> list[LabeledSample]:
    """Load a directory written by write_dataset (or hand-assembled alike)."""
    from .hsio import parse_hsc

    root = pathlib.Path(data_dir)
    manifest = root / "labels.csv"
    samples = []
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            cube = parse_hsc((root / row["filename"]).read_bytes(),
                             stage=Stage.BINNED)
            label = LABEL_NAMES.index(row["label"].strip())
            samples.append(LabeledSample(cube=cube, label=label))
    return samples
