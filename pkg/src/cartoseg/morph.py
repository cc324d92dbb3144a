"""Binary morphology: dilation, external boundary, thinning-based skeleton.

All operations clip at the image frame (no wraparound) and treat masks as
immutable.  The skeleton uses Zhang-Suen style iterative thinning with
8-connectivity, which keeps component counts and endpoints stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import BinaryMask


class EmptyMask(Exception):
    """Operation requires a non-empty mask."""


@dataclass(frozen=True)
class StructuringElement:
    shape: str = "disk"
    radius: int = 1

    def __post_init__(self) -> None:
        if self.shape not in ("disk", "square"):
            raise ValueError(f"unknown element shape {self.shape!r}")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")

    def offsets(self) -> list[tuple[int, int]]:
        r = self.radius
        out = []
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                if self.shape == "square" or dy * dy + dx * dx <= r * r:
                    out.append((dy, dx))
        return out


_SQUARE1 = StructuringElement("square", 1)


def dilate(m: BinaryMask, se: StructuringElement) -> BinaryMask:
    """Binary dilation; extensive and translation-equivariant."""
    r = se.radius
    h, w = m.bits.shape
    padded = np.pad(m.bits, r, constant_values=False)
    out = np.zeros((h, w), dtype=bool)
    for dy, dx in se.offsets():
        out |= padded[r + dy : r + dy + h, r + dx : r + dx + w]
    return BinaryMask(out)


def external_boundary(m: BinaryMask, se: StructuringElement) -> BinaryMask:
    """One-pixel-thick outer rim of the dilated mask.

    Computed as d8(D) \\ D where D = dilate(m, se) and d8 is a one-pixel
    8-neighborhood dilation; always disjoint from the input mask.
    """
    if m.is_empty():
        raise EmptyMask("cannot take the boundary of an empty mask")
    d = dilate(m, se)
    return BinaryMask(dilate(d, _SQUARE1).bits & ~d.bits)


def _neighbor_planes(img: np.ndarray):
    """The eight neighbor views P2..P9 (N, NE, E, SE, S, SW, W, NW)."""
    p = np.pad(img, 1, constant_values=False)
    return (
        p[:-2, 1:-1],  # N
        p[:-2, 2:],    # NE
        p[1:-1, 2:],   # E
        p[2:, 2:],     # SE
        p[2:, 1:-1],   # S
        p[2:, :-2],    # SW
        p[1:-1, :-2],  # W
        p[:-2, :-2],   # NW
    )


def skeletonize(m: BinaryMask) -> BinaryMask:
    """Iterative two-subcycle thinning to a 1-pixel-wide skeleton."""
    if m.is_empty():
        raise EmptyMask("cannot skeletonize an empty mask")
    img = m.bits.copy()
    while True:
        changed = False
        for step in (0, 1):
            p2, p3, p4, p5, p6, p7, p8, p9 = _neighbor_planes(img)
            seq = (p2, p3, p4, p5, p6, p7, p8, p9, p2)
            b = sum(x.astype(np.uint8) for x in seq[:8])
            a = sum((~seq[i] & seq[i + 1]).astype(np.uint8) for i in range(8))
            cond = img & (b >= 2) & (b <= 6) & (a == 1)
            if step == 0:
                cond &= ~(p2 & p4 & p6) & ~(p4 & p6 & p8)
            else:
                cond &= ~(p2 & p4 & p8) & ~(p2 & p6 & p8)
            if cond.any():
                img &= ~cond
                changed = True
        if not changed:
            return BinaryMask(img)


def prune_spurs(m: BinaryMask, length: int) -> BinaryMask:
    """Remove up to ``length`` pixels from every open line end.

    Intended for skeletons; each iteration deletes pixels with at most one
    8-neighbor, so every branch shortens by at most ``length``.
    """
    img = m.bits.copy()
    for _ in range(max(0, length)):
        planes = _neighbor_planes(img)
        degree = sum(x.astype(np.uint8) for x in planes)
        tips = img & (degree <= 1)
        if not tips.any():
            break
        img &= ~tips
    return BinaryMask(img)


_N4 = ((-1, 0), (0, -1), (0, 1), (1, 0))
_N8 = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def label_components(bits: np.ndarray, connectivity: int = 8):
    """Connected-component labels (row-major discovery order, from 1).

    Returns (labels, count); background stays 0.
    """
    offs = _N8 if connectivity == 8 else _N4
    h, w = bits.shape
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    for sy, sx in zip(*np.nonzero(bits)):
        if labels[sy, sx]:
            continue
        count += 1
        labels[sy, sx] = count
        stack = [(int(sy), int(sx))]
        while stack:
            y, x = stack.pop()
            for dy, dx in offs:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and bits[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = count
                    stack.append((ny, nx))
    return labels, count
