"""Edge extraction and refinement on the panchromatic image.

Canny-style detection (Gaussian smoothing, Sobel gradient, non-maximum
suppression, hysteresis linking) produces chains of sub-pixel points; the
refinement pass smooths chain coordinates, merges chains whose extremities
lie close together and removes short leftovers.  Chains rasterize back to
1-pixel-wide lines when a pixel set is needed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .raster import BinaryMask, ScalarImage
from .spectral import ThresholdPair

# quantized gradient sectors -> (dy, dx) step along the gradient
_SECTOR_STEP = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}


@dataclass(eq=False)
class EdgeChain:
    """Ordered polyline of (x, y) float coordinates in pixel units."""

    points: np.ndarray
    closed: bool = False

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2 or len(self.points) < 2:
            raise ValueError("a chain needs at least two (x, y) points")

    def arc_length(self) -> float:
        d = np.diff(self.points, axis=0)
        total = float(np.hypot(d[:, 0], d[:, 1]).sum())
        if self.closed:
            total += float(np.hypot(*(self.points[0] - self.points[-1])))
        return total


@dataclass(eq=False)
class EdgeSet:
    chains: list[EdgeChain]
    width: int
    height: int

    def total_points(self) -> int:
        return sum(len(c.points) for c in self.chains)


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------


def _gaussian_blur(f: np.ndarray, sigma: float) -> np.ndarray:
    radius = max(1, int(math.ceil(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    k /= k.sum()
    p = np.pad(f, ((0, 0), (radius, radius)), mode="edge")
    out = np.zeros_like(f)
    for i, kv in enumerate(k):
        out += kv * p[:, i : i + f.shape[1]]
    p = np.pad(out, ((radius, radius), (0, 0)), mode="edge")
    out2 = np.zeros_like(f)
    for i, kv in enumerate(k):
        out2 += kv * p[i : i + f.shape[0], :]
    return out2


def _sobel_pair(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.pad(f, 1, mode="edge")
    gx = (
        (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    return gx, gy


def _shifted(a: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """a sampled at (y+dy, x+dx), zero outside the frame."""
    h, w = a.shape
    p = np.pad(a, 1, constant_values=0.0)
    return p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]


def _grow8_bool(seeds: np.ndarray, allowed: np.ndarray) -> np.ndarray:
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


_TRACE_ORDER = ((-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1))


def _trace_chains(final: np.ndarray) -> list[tuple[list[tuple[int, int]], bool]]:
    """Decompose an edge-pixel set into maximal 8-connected paths.

    Paths start and end at pixels whose degree differs from 2 (line ends
    and junctions); what remains afterwards are pure cycles, traced as
    closed chains.  Deterministic: pixels are visited row-major and
    neighbors in a fixed order.
    """
    h, w = final.shape
    pixels = {(int(y), int(x)) for y, x in zip(*np.nonzero(final))}
    nbrs: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for y, x in pixels:
        lst = []
        for dy, dx in _TRACE_ORDER:
            q = (y + dy, x + dx)
            if q in pixels:
                lst.append(q)
        nbrs[(y, x)] = lst

    used: set[frozenset] = set()
    chains: list[tuple[list[tuple[int, int]], bool]] = []

    def walk(start, first):
        path = [start, first]
        used.add(frozenset((start, first)))
        cur, prev = first, start
        while len(nbrs[cur]) == 2:
            nxt = nbrs[cur][0] if nbrs[cur][0] != prev else nbrs[cur][1]
            e = frozenset((cur, nxt))
            if e in used:
                break
            used.add(e)
            path.append(nxt)
            prev, cur = cur, nxt
        return path

    terminals = sorted(p for p in pixels if len(nbrs[p]) != 2)
    for t in terminals:
        for n in nbrs[t]:
            if frozenset((t, n)) not in used:
                chains.append((walk(t, n), False))
    # remaining degree-2 structures are cycles
    for p in sorted(pixels):
        if len(nbrs[p]) != 2:
            continue
        for n in nbrs[p]:
            if frozenset((p, n)) not in used:
                path = walk(p, n)
                closed = len(path) >= 3 and path[-1] in nbrs[path[0]]
                chains.append((path, closed))
                break
    return chains


def canny(
    img: ScalarImage,
    sigma: float = 1.2,
    thresholds: ThresholdPair | None = None,
    high_percentile: float = 90.0,
    low_fraction: float = 0.4,
) -> EdgeSet:
    """Edge chains with sub-pixel point positions.

    Without explicit thresholds the strong threshold is the given
    percentile of the nonzero gradient magnitudes and the weak one a fixed
    fraction of it, which keeps the detector scale-free.  Non-maximum
    suppression breaks magnitude ties toward the pixel on the low side of
    the gradient, so symmetric ridge responses yield a single line.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    f = img.data.astype(np.float64)
    smooth = _gaussian_blur(f, sigma)
    gx, gy = _sobel_pair(smooth)
    mag = np.hypot(gx, gy)
    sector = (np.round(np.arctan2(gy, gx) / (math.pi / 4.0)).astype(int)) % 4

    keep = np.zeros(mag.shape, dtype=bool)
    for k, (dy, dx) in _SECTOR_STEP.items():
        fwd = _shifted(mag, dy, dx)
        bwd = _shifted(mag, -dy, -dx)
        keep |= (sector == k) & (mag >= fwd) & (mag > bwd)
    nms = np.where(keep, mag, 0.0)

    if thresholds is None:
        nz = mag[mag > 0]
        hi = float(np.percentile(nz, high_percentile)) if nz.size else 0.0
        lo = low_fraction * hi
    else:
        hi, lo = thresholds.t_high, thresholds.t_low
    if hi <= 0:
        return EdgeSet([], img.width, img.height)

    final = _grow8_bool(nms >= hi, nms >= lo)
    traced = _trace_chains(final)

    h, w = mag.shape
    chains = []
    for path, closed in traced:
        pts = np.empty((len(path), 2), dtype=np.float64)
        for i, (y, x) in enumerate(path):
            dy, dx = _SECTOR_STEP[int(sector[y, x])]
            ym, xm = y - dy, x - dx
            yp, xp = y + dy, x + dx
            delta = 0.0
            if 0 <= ym < h and 0 <= xm < w and 0 <= yp < h and 0 <= xp < w:
                a, c, b = mag[ym, xm], mag[y, x], mag[yp, xp]
                den = a + b - 2.0 * c
                if den < 0.0:
                    # clamp strictly inside +/-0.5 so rounding stays on the
                    # detected pixel (symmetric ridges peak exactly halfway)
                    delta = float(np.clip((a - b) / (2.0 * den), -0.49, 0.49))
            pts[i] = (x + delta * dx, y + delta * dy)
        chains.append(EdgeChain(pts, closed))
    return EdgeSet(chains, img.width, img.height)


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------


def _smooth_chain(chain: EdgeChain, window: int) -> EdgeChain:
    pts = chain.points
    n = len(pts)
    if window <= 1 or n < 3:
        return EdgeChain(pts.copy(), chain.closed)
    half = window // 2
    out = pts.copy()
    if chain.closed:
        idx = np.arange(n)
        acc = np.zeros_like(pts)
        for d in range(-half, half + 1):
            acc += pts[(idx + d) % n]
        out = acc / (2 * half + 1)
    else:
        for i in range(1, n - 1):  # endpoints untouched
            lo = max(0, i - half)
            hi = min(n, i + half + 1)
            out[i] = pts[lo:hi].mean(axis=0)
    return EdgeChain(out, chain.closed)


def _merge_chains(chains: list[EdgeChain], merge_dist: float) -> list[EdgeChain]:
    """Greedily concatenate open chains whose endpoints nearly touch.

    The closest endpoint pair merges first; exact ties resolve by the
    lexicographically smallest endpoint coordinates, so the result does
    not depend on input order.  Joining two chains consumes the touching
    endpoints and leaves every other endpoint exactly where it was, so
    all candidate pairs can be ranked once up front.
    """
    open_chains = [c for c in chains if not c.closed]
    closed_chains = [c for c in chains if c.closed]
    if len(open_chains) > 1 and merge_dist >= 0:
        coords = np.concatenate(
            [[c.points[0], c.points[-1]] for c in open_chains]
        )  # endpoint 2k = head of chain k, 2k+1 = tail
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        candidates = []
        for i, j in zip(*np.nonzero(dist <= merge_dist)):
            if i >= j or i // 2 == j // 2:
                continue
            key = tuple(sorted((tuple(coords[i]), tuple(coords[j]))))
            candidates.append((float(dist[i, j]), key, int(i), int(j)))
        candidates.sort()

        points = {k: c.points for k, c in enumerate(open_chains)}
        owner = {e: e // 2 for e in range(2 * len(open_chains))}  # endpoint -> chain
        side = {e: e % 2 for e in range(2 * len(open_chains))}    # 0 head, 1 tail
        alive = set(owner)
        next_id = len(open_chains)
        for _, _, i, j in candidates:
            if i not in alive or j not in alive or owner[i] == owner[j]:
                continue
            ci, cj = owner[i], owner[j]
            a = points.pop(ci)
            b = points.pop(cj)
            if side[i] == 0:
                a = a[::-1]
            if side[j] == 1:
                b = b[::-1]
            new_id = next_id
            next_id += 1
            points[new_id] = np.concatenate([a, b])
            alive -= {i, j}
            for e in alive:
                if owner[e] == ci:
                    owner[e] = new_id
                    side[e] = 0  # survivor of chain i is the new head
                elif owner[e] == cj:
                    owner[e] = new_id
                    side[e] = 1  # survivor of chain j is the new tail
        open_chains = [EdgeChain(points[k], False) for k in sorted(points)]
    return open_chains + closed_chains


def refine_edges(
    es: EdgeSet,
    merge_dist: float = 3.0,
    min_len: float = 10.0,
    smooth_window: int = 3,
) -> EdgeSet:
    """Smooth chain coordinates, merge close extremities, drop short chains.

    Merging runs before pruning so that fragments that join into a long
    edge survive the length filter.
    """
    if merge_dist < 0 or min_len < 0:
        raise ValueError("merge_dist and min_len must be non-negative")
    smoothed = [_smooth_chain(c, smooth_window) for c in es.chains]
    merged = _merge_chains(smoothed, merge_dist)
    kept = [c for c in merged if c.arc_length() >= min_len]
    return EdgeSet(kept, es.width, es.height)


# ---------------------------------------------------------------------------
# rasterization and serialization
# ---------------------------------------------------------------------------


def _draw_line(bits: np.ndarray, x0: int, y0: int, x1: int, y1: int) -> None:
    h, w = bits.shape
    dx = abs(x1 - x0)
    dy = abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx - dy
    while True:
        if 0 <= y0 < h and 0 <= x0 < w:
            bits[y0, x0] = True
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x0 += sx
        if e2 < dx:
            err += dx
            y0 += sy


def rasterize(es: EdgeSet) -> BinaryMask:
    """Draw every chain as a 1-pixel-wide line after rounding coordinates."""
    bits = np.zeros((es.height, es.width), dtype=bool)
    for chain in es.chains:
        pts = np.rint(chain.points).astype(int)
        segs = list(zip(pts[:-1], pts[1:]))
        if chain.closed:
            segs.append((pts[-1], pts[0]))
        for (x0, y0), (x1, y1) in segs:
            _draw_line(bits, int(x0), int(y0), int(x1), int(y1))
    return BinaryMask(bits)


def to_json(es: EdgeSet) -> str:
    doc = {
        "width": es.width,
        "height": es.height,
        "chains": [
            {"closed": c.closed, "points": [[float(x), float(y)] for x, y in c.points]}
            for c in es.chains
        ],
    }
    return json.dumps(doc, sort_keys=True)


def from_json(text: str) -> EdgeSet:
    doc = json.loads(text)
    chains = [
        EdgeChain(np.array(c["points"], dtype=np.float64), bool(c["closed"]))
        for c in doc["chains"]
    ]
    return EdgeSet(chains, int(doc["width"]), int(doc["height"]))
