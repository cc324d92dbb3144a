"""Region-of-interest segmentation of the low-resolution multispectral image.

The three channels are collapsed to a single discriminant band with fixed
empirical weights, a corpus-level threshold is estimated from the mode of
the central window values, and hysteresis thresholding grows the candidate
region from strong seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .morph import label_components
from .raster import BinaryMask, MultiSpectralImage, ScalarImage, clip_center

DEFAULT_WEIGHTS = (0.3, 0.3, -1.0)


class EmptyCorpus(Exception):
    """Threshold estimation needs at least one image."""


@dataclass(frozen=True)
class ThresholdPair:
    t_high: float
    t_low: float

    def __post_init__(self) -> None:
        if self.t_low > self.t_high:
            raise ValueError("t_low must not exceed t_high")


def band_combine(
    ms: MultiSpectralImage, weights: tuple[float, float, float] = DEFAULT_WEIGHTS
) -> ScalarImage:
    """Weighted channel sum, kept as float (values may go negative)."""
    w1, w2, w3 = weights
    data = (
        w1 * ms.ch1.data.astype(np.float64)
        + w2 * ms.ch2.data.astype(np.float64)
        + w3 * ms.ch3.data.astype(np.float64)
    )
    return ScalarImage(data, ms.resolution)


def corpus_mode_threshold(
    corpus: list[MultiSpectralImage],
    delta: float = 10.0,
    window: int = 5,
    source: str = "combined",
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
) -> ThresholdPair:
    """Estimate a threshold pair from the corpus of multispectral images.

    Pools every image's central ``window`` x ``window`` values (of the
    combined band, or of channel 1 when ``source="ch1"``), rounds them to
    integer bins and takes the mode as the strong threshold; ties resolve
    to the lower bin.  The weak threshold sits ``delta`` gray levels below.
    """
    if not corpus:
        raise EmptyCorpus("no images to estimate a threshold from")
    if source not in ("combined", "ch1"):
        raise ValueError(f"unknown threshold source {source!r}")
    pooled = []
    for ms in corpus:
        band = band_combine(ms, weights) if source == "combined" else ms.ch1
        win = clip_center(band, window, window)
        pooled.append(win.data.astype(np.float64).ravel())
    values = np.concatenate(pooled)
    bins = np.floor(values + 0.5)  # round half up, deterministic
    uniq, counts = np.unique(bins, return_counts=True)
    mode = float(uniq[np.argmax(counts)])  # np.unique sorts: first max = lowest bin
    return ThresholdPair(t_high=mode, t_low=mode - delta)


def _grow8(seeds: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    out = seeds & allowed
    while True:
        p = np.pad(out, 1, constant_values=False)
        grown = (
            p[:-2, :-2] | p[:-2, 1:-1] | p[:-2, 2:]
            | p[1:-1, :-2] | p[1:-1, 2:]
            | p[2:, :-2] | p[2:, 1:-1] | p[2:, 2:]
        )
        new = out | (grown & allowed)
        if np.array_equal(new, out):
            return out
        out = new


def hysteresis_segment(combined: ScalarImage, t: ThresholdPair) -> BinaryMask:
    """Pixels >= t_high seed the region; anything >= t_low that is
    8-connected to a seed joins it."""
    data = combined.data
    seeds = data >= t.t_high
    allowed = data >= t.t_low
    return BinaryMask(_grow8(seeds, allowed))


def keep_central_component(mask: BinaryMask, window: int = 5) -> BinaryMask:
    """Keep the connected component that best overlaps the central window.

    The candidate object is centered by construction, so components that
    miss the center are treated as false positives.  If nothing overlaps
    the window, the largest component survives instead.  Empty masks pass
    through unchanged.
    """
    if mask.is_empty():
        return mask
    labels, count = label_components(mask.bits, connectivity=8)
    h, w = mask.bits.shape
    y0 = (h - window + 1) // 2
    x0 = (w - window + 1) // 2
    center = labels[y0 : y0 + window, x0 : x0 + window]
    best, best_key = 0, (-1, -1)
    for lab in range(1, count + 1):
        overlap = int(np.count_nonzero(center == lab))
        size = int(np.count_nonzero(labels == lab))
        key = (overlap, size)
        if key > best_key:  # ties keep the earlier (lower) label
            best, best_key = lab, key
    return BinaryMask(labels == best)
