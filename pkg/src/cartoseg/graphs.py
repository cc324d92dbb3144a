"""Structural models of extracted shapes.

A mask decomposes into geometric primitives (rectangles, circles, line
segments), the primitives and their contacts form an attributed
relational graph, and a set of such graphs yields an object model: the
maximal common subgraph and minimal common supergraph of its prototypes.
Scoring uses the normalized maximal-common-subgraph distance
1 - |mcs| / max(|g1|, |g2|) against the nearest prototype.

Common-subgraph semantics here are *induced*: a vertex pairing is valid
only when each mapped pair of vertices agrees on edge presence and edge
attributes.  That choice keeps the supergraph gluing well defined and
makes |MinCS| = |g1| + |g2| - |MaxCS| hold exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .morph import EmptyMask, label_components, skeletonize
from .raster import BinaryMask

DIRECTION_BINS = ("E", "NE", "N", "SE")
CONNECTION_KINDS = ("end-to-end", "end-to-side", "overlap")


class BudgetExceeded(Exception):
    """Exact graph search exceeded its node budget."""


class EmptyInput(Exception):
    """Operation requires at least one input graph."""


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------


def _mod_pi(angle: float) -> float:
    a = angle % math.pi
    return a if a < math.pi else 0.0


@dataclass(frozen=True)
class Primitive:
    """A geometric building block, all lengths in meters.

    rectangle: center, width (extent along ``orientation``), height
    circle:    center, radius
    segment:   endpoints (length/orientation derived)
    """

    kind: str
    center: tuple[float, float]
    width: float = 0.0
    height: float = 0.0
    radius: float = 0.0
    orientation: float = 0.0
    endpoints: tuple[tuple[float, float], tuple[float, float]] | None = None

    def __post_init__(self) -> None:
        if self.kind == "rectangle":
            if self.width <= 0 or self.height <= 0:
                raise ValueError("rectangle needs positive width and height")
        elif self.kind == "circle":
            if self.radius <= 0:
                raise ValueError("circle needs a positive radius")
        elif self.kind == "segment":
            if self.endpoints is None or self.length <= 0:
                raise ValueError("segment needs two distinct endpoints")
        else:
            raise ValueError(f"unknown primitive kind {self.kind!r}")
        object.__setattr__(self, "orientation", _mod_pi(self.orientation))

    @property
    def length(self) -> float:
        if self.endpoints is None:
            return 0.0
        (x1, y1), (x2, y2) = self.endpoints
        return math.hypot(x2 - x1, y2 - y1)


def make_segment(p1: tuple[float, float], p2: tuple[float, float]) -> Primitive:
    cx = (p1[0] + p2[0]) / 2.0
    cy = (p1[1] + p2[1]) / 2.0
    theta = _mod_pi(math.atan2(p2[1] - p1[1], p2[0] - p1[0]))
    return Primitive("segment", (cx, cy), orientation=theta, endpoints=(tuple(p1), tuple(p2)))


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------

CIRCLE_ISOPERIMETRIC = 0.85
_MIN_ARC_PIXELS = 3


def _convex_hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _min_area_rect(points: list[tuple[float, float]]):
    """Minimum-area oriented box: (center, long, short, orientation)."""
    hull = _convex_hull(points)
    if len(hull) == 1:
        return hull[0], 0.0, 0.0, 0.0
    if len(hull) == 2:
        (x1, y1), (x2, y2) = hull
        theta = _mod_pi(math.atan2(y2 - y1, x2 - x1))
        return ((x1 + x2) / 2, (y1 + y2) / 2), math.hypot(x2 - x1, y2 - y1), 0.0, theta
    arr = np.array(hull, dtype=np.float64)
    best = None
    for i in range(len(hull)):
        x1, y1 = hull[i]
        x2, y2 = hull[(i + 1) % len(hull)]
        theta = math.atan2(y2 - y1, x2 - x1)
        c, s = math.cos(-theta), math.sin(-theta)
        rx = arr[:, 0] * c - arr[:, 1] * s
        ry = arr[:, 0] * s + arr[:, 1] * c
        wdt = float(rx.max() - rx.min())
        hgt = float(ry.max() - ry.min())
        area = wdt * hgt
        if best is None or area < best[0]:
            mx = (float(rx.max()) + float(rx.min())) / 2
            my = (float(ry.max()) + float(ry.min())) / 2
            cx = mx * math.cos(theta) - my * math.sin(theta)
            cy = mx * math.sin(theta) + my * math.cos(theta)
            best = (area, (cx, cy), wdt, hgt, theta)
    _, center, wdt, hgt, theta = best
    if wdt >= hgt:
        return center, wdt, hgt, _mod_pi(theta)
    return center, hgt, wdt, _mod_pi(theta + math.pi / 2)


def _hull_perimeter(points: list[tuple[float, float]]) -> float:
    hull = _convex_hull(points)
    if len(hull) < 2:
        return 0.0
    total = 0.0
    for i in range(len(hull)):
        x1, y1 = hull[i]
        x2, y2 = hull[(i + 1) % len(hull)]
        total += math.hypot(x2 - x1, y2 - y1)
    return total


def _fit_shape(bits: np.ndarray, resolution: float) -> Primitive:
    area = float(np.count_nonzero(bits))
    ys0, xs0 = np.nonzero(bits)
    pts0 = [(float(x), float(y)) for y, x in zip(ys0, xs0)]
    # hull perimeter avoids the staircase excess of traced digital contours;
    # + pi accounts for the half-pixel between centers and the true outline
    perimeter = _hull_perimeter(pts0) + math.pi
    iso = 4.0 * math.pi * area / (perimeter * perimeter)
    ys, xs = np.nonzero(bits)
    if iso > CIRCLE_ISOPERIMETRIC:
        cx = float(xs.mean()) * resolution
        cy = float(ys.mean()) * resolution
        r = math.sqrt(area / math.pi) * resolution
        return Primitive("circle", (cx, cy), radius=r)
    pts = [(float(x), float(y)) for y, x in zip(ys, xs)]
    center, long_d, short_d, theta = _min_area_rect(pts)
    return Primitive(
        "rectangle",
        (center[0] * resolution, center[1] * resolution),
        width=(long_d + 1.0) * resolution,   # pixel extent: centers span long_d
        height=(short_d + 1.0) * resolution,
        orientation=theta,
    )


def _reduced_degree(bits: np.ndarray) -> np.ndarray:
    """Neighbor counts after dropping redundant diagonal links.

    A diagonal adjacency that also has an orthogonal two-step path (one of
    the two shared orthogonal pixels is set) is skipped, so staircase
    artifacts in thinned skeletons do not read as extra connectivity.
    """
    h, w = bits.shape
    p = np.pad(bits, 1, constant_values=False)

    def sh(dy, dx):
        return p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    deg = sum(sh(dy, dx).astype(np.uint8) for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)))
    for dy, dx in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
        deg += (sh(dy, dx) & ~sh(dy, 0) & ~sh(0, dx)).astype(np.uint8)
    return deg * bits


def _two_core(bits: np.ndarray) -> np.ndarray:
    """Pixels on cycles: iteratively strip everything whose reduced degree
    is below 2."""
    core = bits.copy()
    while True:
        keep = core & (_reduced_degree(core) >= 2)
        if np.array_equal(keep, core):
            return core
        core = keep


def _skeleton_primitives(mask: BinaryMask, resolution: float) -> list[Primitive]:
    skel = skeletonize(mask).bits
    prims: list[Primitive] = []

    core = _two_core(skel)
    if core.any():
        labels, count = label_components(core, connectivity=8)
        for lab in range(1, count + 1):
            ys, xs = np.nonzero(labels == lab)
            cx, cy = float(xs.mean()), float(ys.mean())
            r = float(np.hypot(ys - cy, xs - cx).mean())
            prims.append(
                Primitive("circle", (cx * resolution, cy * resolution), radius=r * resolution)
            )

    rest = skel & ~core
    if rest.any():
        # split the tree part at branch pixels, keep the resulting arcs
        arcs = rest & (_reduced_degree(rest) < 3)
        labels, count = _label_arcs(arcs, skel)
        for lab in range(1, count + 1):
            ys, xs = np.nonzero(labels == lab)
            if len(ys) < _MIN_ARC_PIXELS:
                continue
            pix = list(zip(xs.astype(float), ys.astype(float)))
            ends = _arc_endpoints(labels == lab)
            if len(ends) != 2:
                ends = _farthest_pair(pix)
            p1 = (ends[0][0] * resolution, ends[0][1] * resolution)
            p2 = (ends[1][0] * resolution, ends[1][1] * resolution)
            if p1 != p2:
                prims.append(make_segment(p1, p2))
    return prims


def _label_arcs(arcs: np.ndarray, skel: np.ndarray):
    """Connected arcs under shortcut-aware adjacency.

    Two diagonal arc pixels whose shared orthogonal pixel belongs to the
    skeleton (for instance a removed branch pixel) are not neighbors, so
    arms meeting at a junction stay separate arcs.
    """
    h, w = arcs.shape
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    for sy, sx in zip(*np.nonzero(arcs)):
        if labels[sy, sx]:
            continue
        count += 1
        labels[sy, sx] = count
        stack = [(int(sy), int(sx))]
        while stack:
            y, x = stack.pop()
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if (dy, dx) == (0, 0):
                        continue
                    ny, nx = y + dy, x + dx
                    if not (0 <= ny < h and 0 <= nx < w) or not arcs[ny, nx] or labels[ny, nx]:
                        continue
                    if dy != 0 and dx != 0 and (skel[ny, x] or skel[y, nx]):
                        continue
                    labels[ny, nx] = count
                    stack.append((ny, nx))
    return labels, count


def _arc_endpoints(bits: np.ndarray) -> list[tuple[float, float]]:
    ys, xs = np.nonzero(bits & (_reduced_degree(bits) <= 1))
    return [(float(x), float(y)) for y, x in zip(ys, xs)]


def _farthest_pair(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    best = (pts[0], pts[0])
    best_d = -1.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = (pts[i][0] - pts[j][0]) ** 2 + (pts[i][1] - pts[j][1]) ** 2
            if d > best_d:
                best_d = d
                best = (pts[i], pts[j])
    return list(best)


def decompose(mask: BinaryMask, mode: str = "shapes", resolution: float = 1.0) -> list[Primitive]:
    """Split a mask into primitives.

    ``shapes`` fits one circle (near-round components, isoperimetric ratio
    above 0.85) or one oriented rectangle per connected component;
    ``skeleton`` thins the mask, turns skeleton cycles into circles and
    branch-free arcs into segments.
    """
    if mask.is_empty():
        raise EmptyMask("cannot decompose an empty mask")
    if mode == "skeleton":
        return _skeleton_primitives(mask, resolution)
    if mode != "shapes":
        raise ValueError(f"unknown decompose mode {mode!r}")
    labels, count = label_components(mask.bits, connectivity=8)
    return [_fit_shape(labels == lab, resolution) for lab in range(1, count + 1)]


# ---------------------------------------------------------------------------
# attributed relational graphs
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Arg:
    """Attributed relational graph: typed vertices, typed+directed edges."""

    vertices: list[tuple[int, str]] = field(default_factory=list)
    edges: list[tuple[int, int, str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [v for v, _ in self.vertices]
        if ids != list(range(len(ids))):
            raise ValueError("vertex ids must be dense 0..n-1 in order")
        canon = []
        seen = set()
        for a, b, conn, direction in self.edges:
            if a == b or not (0 <= a < len(ids)) or not (0 <= b < len(ids)):
                raise ValueError("edge references invalid vertices")
            if a > b:
                a, b = b, a
            if (a, b) in seen:
                raise ValueError("duplicate edge")
            seen.add((a, b))
            canon.append((a, b, conn, direction))
        self.edges = canon

    @property
    def size(self) -> int:
        return len(self.vertices)

    def kind(self, i: int) -> str:
        return self.vertices[i][1]

    def edge_attrs(self) -> dict[tuple[int, int], tuple[str, str]]:
        return {(a, b): (conn, d) for a, b, conn, d in self.edges}


def arg_to_json(g: Arg) -> str:
    return json.dumps(
        {
            "vertices": [{"id": i, "kind": k} for i, k in g.vertices],
            "edges": [
                {"from": a, "to": b, "conn": c, "dir": d} for a, b, c, d in g.edges
            ],
        },
        sort_keys=True,
    )


def arg_from_json(text: str) -> Arg:
    doc = json.loads(text) if isinstance(text, str) else text
    verts = [(int(v["id"]), str(v["kind"])) for v in doc["vertices"]]
    edges = [
        (int(e["from"]), int(e["to"]), str(e["conn"]), str(e["dir"]))
        for e in doc["edges"]
    ]
    return Arg(verts, edges)


def _boundary_samples(p: Primitive, n: int = 64) -> np.ndarray:
    if p.kind == "circle":
        t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        return np.stack(
            [p.center[0] + p.radius * np.cos(t), p.center[1] + p.radius * np.sin(t)], axis=1
        )
    if p.kind == "segment":
        a = np.array(p.endpoints[0])
        b = np.array(p.endpoints[1])
        t = np.linspace(0.0, 1.0, max(2, n // 2))[:, None]
        return a[None, :] * (1 - t) + b[None, :] * t
    c, s = math.cos(p.orientation), math.sin(p.orientation)
    u = np.array([c, s])
    v = np.array([-s, c])
    hw, hh = p.width / 2.0, p.height / 2.0
    t = np.linspace(-1.0, 1.0, max(2, n // 4))
    center = np.array(p.center)
    sides = [
        center + hw * t[:, None] * u + hh * v,
        center + hw * t[:, None] * u - hh * v,
        center + hw * u + hh * t[:, None] * v,
        center - hw * u + hh * t[:, None] * v,
    ]
    return np.concatenate(sides)


def _near_end(p: Primitive, pt: np.ndarray, tol: float) -> bool:
    """Is a boundary point within ``tol`` of one of the primitive's ends?

    Segment ends are its endpoints; rectangle ends are the two short
    faces (anywhere along them); circles have no ends.
    """
    if p.kind == "segment":
        return any(
            math.hypot(pt[0] - e[0], pt[1] - e[1]) <= tol for e in p.endpoints
        )
    if p.kind == "rectangle":
        c, s = math.cos(p.orientation), math.sin(p.orientation)
        proj = (pt[0] - p.center[0]) * c + (pt[1] - p.center[1]) * s
        return abs(proj) >= p.width / 2.0 - tol
    return False


def _contains(p: Primitive, pt: np.ndarray) -> bool:
    """Strict interior test; segments have no interior."""
    if p.kind == "circle":
        return math.hypot(pt[0] - p.center[0], pt[1] - p.center[1]) < p.radius - 1e-9
    if p.kind == "rectangle":
        c, s = math.cos(p.orientation), math.sin(p.orientation)
        rx = (pt[0] - p.center[0]) * c + (pt[1] - p.center[1]) * s
        ry = -(pt[0] - p.center[0]) * s + (pt[1] - p.center[1]) * c
        return abs(rx) < p.width / 2.0 - 1e-9 and abs(ry) < p.height / 2.0 - 1e-9
    return False


def _segments_cross(a: Primitive, b: Primitive) -> bool:
    (x1, y1), (x2, y2) = a.endpoints
    (x3, y3), (x4, y4) = b.endpoints

    def orient(ax, ay, bx, by, cx, cy):
        return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)

    d1 = orient(x3, y3, x4, y4, x1, y1)
    d2 = orient(x3, y3, x4, y4, x2, y2)
    d3 = orient(x1, y1, x2, y2, x3, y3)
    d4 = orient(x1, y1, x2, y2, x4, y4)
    return d1 * d2 < 0 and d3 * d4 < 0


def _interiors_overlap(a: Primitive, b: Primitive, sa: np.ndarray, sb: np.ndarray) -> bool:
    if a.kind == "segment" and b.kind == "segment":
        return _segments_cross(a, b)
    if any(_contains(b, pt) for pt in sa) or any(_contains(a, pt) for pt in sb):
        return True
    return _contains(b, np.array(a.center)) or _contains(a, np.array(b.center))


def _direction_bin(ca: tuple[float, float], cb: tuple[float, float]) -> str:
    ang = math.atan2(cb[1] - ca[1], cb[0] - ca[0]) % math.pi
    return DIRECTION_BINS[int(round(ang / (math.pi / 4))) % 4]


def build_arg(prims: list[Primitive], adjacency_tol: float) -> Arg:
    """Graph of primitives: an edge joins every pair whose boundaries come
    within ``adjacency_tol`` meters, attributed with the connection kind
    and the quantized direction between centers (from the lower vertex)."""
    vertices = [(i, p.kind) for i, p in enumerate(prims)]
    samples = [_boundary_samples(p) for p in prims]
    edges = []
    for i in range(len(prims)):
        for j in range(i + 1, len(prims)):
            a, b = prims[i], prims[j]
            diff = samples[i][:, None, :] - samples[j][None, :, :]
            d = float(np.hypot(diff[..., 0], diff[..., 1]).min())
            overlap = _interiors_overlap(a, b, samples[i], samples[j])
            if not overlap and d > adjacency_tol:
                continue
            if overlap:
                conn = "overlap"
            else:
                # classify from the whole contact region: flank contact has
                # its centroid mid-side even though corners also touch
                dd = np.hypot(diff[..., 0], diff[..., 1])
                contact = dd <= d + 0.25 * adjacency_tol
                ia, ib = np.nonzero(contact)
                pa = samples[i][ia].mean(axis=0)
                pb = samples[j][ib].mean(axis=0)
                near_a = _near_end(a, pa, adjacency_tol)
                near_b = _near_end(b, pb, adjacency_tol)
                if near_a and near_b:
                    conn = "end-to-end"
                elif near_a or near_b:
                    conn = "end-to-side"
                else:
                    conn = "overlap"  # flank contact with no end involved
            edges.append((i, j, conn, _direction_bin(a.center, b.center)))
    return Arg(vertices, edges)


# ---------------------------------------------------------------------------
# exact graph search
# ---------------------------------------------------------------------------

DEFAULT_NODE_BUDGET = 1_000_000


def _mcs_mapping(g1: Arg, g2: Arg, node_budget: int = DEFAULT_NODE_BUDGET):
    """Largest induced common-subgraph mapping as [(v1, v2), ...].

    Branch and bound over the association graph; ties by vertex count
    resolve toward more common edges, then the lexicographically smallest
    mapping.  Raises BudgetExceeded rather than approximating.
    """
    pairs = [
        (a, b)
        for a in range(g1.size)
        for b in range(g2.size)
        if g1.kind(a) == g2.kind(b)
    ]
    n = len(pairs)
    e1 = g1.edge_attrs()
    e2 = g2.edge_attrs()

    def attr1(a, b):
        return e1.get((a, b) if a < b else (b, a))

    def attr2(a, b):
        return e2.get((a, b) if a < b else (b, a))

    compat = np.zeros((n, n), dtype=bool)
    for i in range(n):
        a1, b1 = pairs[i]
        for j in range(i + 1, n):
            a2, b2 = pairs[j]
            if a1 != a2 and b1 != b2 and attr1(a1, a2) == attr2(b1, b2):
                compat[i, j] = compat[j, i] = True

    def edge_count(chosen: list[int]) -> int:
        total = 0
        for x in range(len(chosen)):
            for y in range(x + 1, len(chosen)):
                if attr1(pairs[chosen[x]][0], pairs[chosen[y]][0]) is not None:
                    total += 1
        return total

    best: list[int] = []
    best_score = (0, -1)
    nodes = 0

    def extend(chosen: list[int], cand: list[int]) -> None:
        nonlocal best, best_score, nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"graph search exceeded {node_budget} nodes")
        bound = len(chosen) + min(
            len({pairs[j][0] for j in cand}), len({pairs[j][1] for j in cand})
        )
        if bound < best_score[0]:
            return
        if not cand:
            score = (len(chosen), edge_count(chosen))
            if score > best_score:
                best = list(chosen)
                best_score = score
            return
        i = cand[0]
        extend(chosen + [i], [j for j in cand[1:] if compat[i, j]])
        extend(chosen, cand[1:])

    extend([], list(range(n)))
    return [pairs[i] for i in best]


def _induced_subgraph(g: Arg, keep: list[int]) -> Arg:
    keep = sorted(keep)
    remap = {v: i for i, v in enumerate(keep)}
    verts = [(remap[v], g.kind(v)) for v in keep]
    attrs = g.edge_attrs()
    edges = []
    for x in range(len(keep)):
        for y in range(x + 1, len(keep)):
            at = attrs.get((keep[x], keep[y]))
            if at is not None:
                edges.append((x, y, at[0], at[1]))
    return Arg(verts, edges)


def max_common_subgraph(g1: Arg, g2: Arg, node_budget: int = DEFAULT_NODE_BUDGET) -> Arg:
    """Largest graph (by vertices, then edges) embeddable in both inputs."""
    mapping = _mcs_mapping(g1, g2, node_budget)
    return _induced_subgraph(g1, [a for a, _ in mapping])


def min_common_supergraph(g1: Arg, g2: Arg, node_budget: int = DEFAULT_NODE_BUDGET) -> Arg:
    """Glue g1 and g2 along their maximal common subgraph.

    |result| = |g1| + |g2| - |MaxCS|; both inputs embed in the result.
    """
    mapping = _mcs_mapping(g1, g2, node_budget)
    to_g1 = {b: a for a, b in mapping}
    translate = {}
    next_id = g1.size
    for b in range(g2.size):
        if b in to_g1:
            translate[b] = to_g1[b]
        else:
            translate[b] = next_id
            next_id += 1
    verts = list(g1.vertices) + [
        (translate[b], g2.kind(b)) for b in range(g2.size) if b not in to_g1
    ]
    edges = {(a, b): at for (a, b), at in g1.edge_attrs().items()}
    for (u, v), at in g2.edge_attrs().items():
        a, b = translate[u], translate[v]
        key = (a, b) if a < b else (b, a)
        if key not in edges:
            edges[key] = at
    edge_list = [(a, b, at[0], at[1]) for (a, b), at in sorted(edges.items())]
    return Arg(verts, edge_list)


def is_isomorphic(g1: Arg, g2: Arg) -> bool:
    """Exact attributed-graph isomorphism (kinds, edges, edge attributes)."""
    if g1.size != g2.size or len(g1.edges) != len(g2.edges):
        return False
    if sorted(k for _, k in g1.vertices) != sorted(k for _, k in g2.vertices):
        return False
    e1 = g1.edge_attrs()
    e2 = g2.edge_attrs()
    if sorted(e1.values()) != sorted(e2.values()):
        return False

    def attr(d, a, b):
        return d.get((a, b) if a < b else (b, a))

    used = [False] * g2.size
    assign: list[int] = []

    def backtrack(v: int) -> bool:
        if v == g1.size:
            return True
        for w in range(g2.size):
            if used[w] or g1.kind(v) != g2.kind(w):
                continue
            if any(attr(e1, v, u) != attr(e2, w, assign[u]) for u in range(v)):
                continue
            used[w] = True
            assign.append(w)
            if backtrack(v + 1):
                return True
            assign.pop()
            used[w] = False
        return False

    return backtrack(0)


def find_prototypes(args: list[Arg], min_support: int = 1) -> list[Arg]:
    """One representative per exact-isomorphism class with enough support,
    ordered by descending frequency (ties keep first appearance)."""
    groups: list[tuple[Arg, int]] = []
    for g in args:
        for i, (rep, count) in enumerate(groups):
            if is_isomorphic(g, rep):
                groups[i] = (rep, count + 1)
                break
        else:
            groups.append((g, 1))
    ranked = sorted(
        range(len(groups)), key=lambda i: (-groups[i][1], i)
    )
    return [groups[i][0] for i in ranked if groups[i][1] >= min_support]


@dataclass(eq=False)
class ObjectModel:
    """Structural bounds plus the prototypes they were folded from."""

    max_csg: Arg
    min_csg: Arg
    prototypes: list[Arg]


def generate_model(prototypes: list[Arg], node_budget: int = DEFAULT_NODE_BUDGET) -> ObjectModel:
    """Fold the common subgraph and common supergraph over the prototypes.

    The fold is left to right in the given order (canonically descending
    prototype frequency); the result can depend on that order, which is
    why the order is fixed.
    """
    if not prototypes:
        raise EmptyInput("a model needs at least one prototype")
    lo = prototypes[0]
    hi = prototypes[0]
    for p in prototypes[1:]:
        lo = max_common_subgraph(lo, p, node_budget)
        hi = min_common_supergraph(hi, p, node_budget)
    return ObjectModel(max_csg=lo, min_csg=hi, prototypes=list(prototypes))


def graph_distance(g1: Arg, g2: Arg, node_budget: int = DEFAULT_NODE_BUDGET) -> float:
    """Normalized mcs distance: 1 - |mcs| / max(|g1|, |g2|), in [0, 1]."""
    denom = max(g1.size, g2.size)
    if denom == 0:
        return 0.0
    return 1.0 - len(_mcs_mapping(g1, g2, node_budget)) / denom


def model_distance(
    g: Arg,
    model: ObjectModel,
    use_bounds: bool = False,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> float:
    """Distance from a graph to the nearest prototype (or, with
    ``use_bounds``, to the nearer of the two structural bounds)."""
    refs = [model.max_csg, model.min_csg] if use_bounds else model.prototypes
    if not refs:
        raise EmptyInput("model carries no reference graphs")
    return min(graph_distance(g, r, node_budget) for r in refs)


def model_to_json(model: ObjectModel) -> str:
    return json.dumps(
        {
            "max_csg": json.loads(arg_to_json(model.max_csg)),
            "min_csg": json.loads(arg_to_json(model.min_csg)),
            "prototypes": [json.loads(arg_to_json(p)) for p in model.prototypes],
        },
        sort_keys=True,
    )


def model_from_json(text: str) -> ObjectModel:
    doc = json.loads(text)
    return ObjectModel(
        max_csg=arg_from_json(doc["max_csg"]),
        min_csg=arg_from_json(doc["min_csg"]),
        prototypes=[arg_from_json(p) for p in doc["prototypes"]],
    )
