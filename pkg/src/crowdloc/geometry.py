"""Regions, AP layouts, location priors and nearest-AP partitions.

Points are handled as ``(N, 2)`` float arrays in meters. Distances are plain
Euclidean distances in the plane; holes (walls, pillars) only remove area
from the sampling domain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient

from .errors import EmptyClusterError, InvalidLayoutError, InvalidPriorError, InvalidRegionError
from .estimator import DistanceCdf


class Point2(NamedTuple):
    x: float
    y: float


def as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) array of points, got shape {pts.shape}")
    return pts


class Region:
    """Polygonal area of interest with optional holes.

    The boundary is stored counterclockwise and holes clockwise, whatever
    orientation the caller used.
    """

    def __init__(self, boundary, holes=()):
        shell = as_points(boundary)
        hole_list = [as_points(h) for h in holes]
        if len(shell) < 3:
            raise InvalidRegionError("boundary needs at least 3 vertices")
        poly = Polygon(shell, hole_list)
        if not poly.is_valid or poly.area <= 0:
            raise InvalidRegionError(
                f"region is not a valid polygon: {shapely.is_valid_reason(poly)}"
            )
        poly = orient(poly, sign=1.0)
        self.polygon = poly
        self.boundary = np.asarray(poly.exterior.coords)[:-1]
        self.holes = tuple(np.asarray(r.coords)[:-1] for r in poly.interiors)
        shapely.prepare(self.polygon)

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float, holes=()) -> Region:
        return cls([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], holes)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return tuple(self.polygon.bounds)

    @property
    def area(self) -> float:
        return float(self.polygon.area)

    @property
    def diameter(self) -> float:
        v = self.boundary
        return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))

    def contains(self, points) -> np.ndarray:
        """Closed-set membership (points on the boundary count as inside)."""
        pts = as_points(points)
        return shapely.intersects_xy(self.polygon, pts[:, 0], pts[:, 1])

    def clamp(self, points) -> np.ndarray:
        """Move points outside the region to the nearest point of the region."""
        pts = as_points(points).copy()
        outside = ~self.contains(pts)
        if outside.any():
            geoms = shapely.points(pts[outside])
            lines = shapely.shortest_line(geoms, self.polygon)
            ends = shapely.get_coordinates(shapely.get_point(lines, 1))
            pts[outside] = ends
        return pts

    def grid(self, cell: float) -> np.ndarray:
        """Centers of a ``cell``-spaced lattice over the bounding box that lie inside."""
        x0, y0, x1, y1 = self.bounds
        xs = np.arange(x0 + cell / 2, x1, cell)
        ys = np.arange(y0 + cell / 2, y1, cell)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        return pts[self.contains(pts)]

    def __repr__(self) -> str:
        return f"Region(area={self.area:.3g}, bounds={self.bounds}, holes={len(self.holes)})"


@dataclass(frozen=True)
class ApLayout:
    positions: np.ndarray
    ids: tuple[str, ...] = ()

    def __post_init__(self):
        pos = as_points(self.positions).copy()
        pos.setflags(write=False)
        ids = tuple(str(i) for i in self.ids) if self.ids else tuple(f"ap{j}" for j in range(len(pos)))
        if len(ids) != len(pos):
            raise InvalidLayoutError("ids and positions differ in length")
        if len(set(ids)) != len(ids):
            raise InvalidLayoutError("AP ids must be distinct")
        if len(np.unique(pos, axis=0)) != len(pos):
            raise InvalidLayoutError("duplicate AP positions")
        if not np.all(np.isfinite(pos)):
            raise InvalidLayoutError("AP coordinates must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return len(self.positions)

    def is_collinear(self, tol: float = 1e-9) -> bool:
        centered = self.positions - self.positions.mean(axis=0)
        s = np.linalg.svd(centered, compute_uv=False)
        return len(s) < 2 or s[1] <= tol * max(s[0], 1.0)

    def distances(self, points) -> np.ndarray:
        """``(N, n)`` matrix of distances from each point to each AP."""
        pts = as_points(points)
        return np.linalg.norm(pts[:, None, :] - self.positions[None, :, :], axis=-1)


@dataclass(frozen=True)
class LocationPrior:
    """Known distribution of measurement locations.

    ``kind="uniform"`` is uniform over the region. ``kind="grid"`` is a
    piecewise-constant density on a raster anchored at the region's
    lower-left bounding-box corner; ``weights[i][j]`` covers row ``i`` (along
    y) and column ``j`` (along x). Mass outside the region is discarded.
    """

    kind: str = "uniform"
    cell: float | None = None
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "grid"):
            raise InvalidPriorError(f"unknown prior kind {self.kind!r}")
        if self.kind == "grid":
            if self.weights is None or self.cell is None or self.cell <= 0:
                raise InvalidPriorError("grid prior needs weights and a positive cell size")
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 2 or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InvalidPriorError("grid weights must be a 2D array of non-negative numbers")
            if w.sum() <= 0:
                raise InvalidPriorError("grid prior has zero total mass")
            w = w.copy()
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls) -> LocationPrior:
        return cls("uniform")

    @classmethod
    def grid(cls, weights, cell: float) -> LocationPrior:
        return cls("grid", float(cell), np.asarray(weights, dtype=float))


class SubRegion:
    """One cluster of a partition: the parent region restricted to a label."""

    def __init__(self, partition: Partition, code: int):
        self.partition = partition
        self.code = code
        self.region = partition.region

    @property
    def bounds(self):
        return self.region.bounds

    @property
    def cluster_id(self):
        return self.partition.cluster_ids[self.code]

    def contains(self, points) -> np.ndarray:
        pts = as_points(points)
        inside = self.region.contains(pts)
        inside[inside] = self.partition.label(pts[inside]) == self.code
        return inside


def _frame(region) -> Region:
    # the prior raster is anchored at the full region, not a cluster of it
    return region.region if isinstance(region, SubRegion) else region


def _candidates(prior: LocationPrior, frame: Region, size: int, rng: np.random.Generator) -> np.ndarray:
    x0, y0, x1, y1 = frame.bounds
    if prior.kind == "uniform":
        return np.column_stack([rng.uniform(x0, x1, size), rng.uniform(y0, y1, size)])
    w = prior.weights
    p = (w / w.sum()).ravel()
    flat = rng.choice(p.size, size=size, p=p)
    rows, cols = np.divmod(flat, w.shape[1])
    u = rng.random((size, 2))
    return np.column_stack([x0 + (cols + u[:, 0]) * prior.cell, y0 + (rows + u[:, 1]) * prior.cell])


def sample_prior(
    prior: LocationPrior,
    region,
    count: int,
    seed=None,
    max_draws: int | None = None,
) -> np.ndarray:
    """Draw ``count`` locations from the prior restricted to ``region``.

    ``region`` may be a :class:`Region` or a :class:`SubRegion`. Restriction is
    done by rejection, so the accepted density is the prior renormalized on
    the region. Deterministic for a fixed seed.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    frame = _frame(region)
    if max_draws is None:
        max_draws = max(1000 * count, 2_000_000)
    out = []
    have = drawn = 0
    batch = max(2 * count, 1024)
    while have < count:
        if drawn >= max_draws:
            raise EmptyClusterError(
                f"prior has (almost) no mass on the region: {have} of {count} points after {drawn} draws"
            )
        cand = _candidates(prior, frame, batch, rng)
        drawn += batch
        keep = cand[region.contains(cand)]
        out.append(keep)
        have += len(keep)
        rate = max(have / drawn, 1e-4)
        batch = int(min(max((count - have) / rate * 1.2, 1024), 1_000_000))
    return np.concatenate(out)[:count]


def distance_cdf(sub_region, prior: LocationPrior, ap, n_samples: int = 10_000, seed=None) -> DistanceCdf:
    """CDF of the distance from ``ap`` to a prior-distributed point of ``sub_region``."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    pts = sample_prior(prior, sub_region, n_samples, seed)
    return DistanceCdf(np.linalg.norm(pts - np.asarray(ap, dtype=float), axis=1))


@dataclass(frozen=True)
class Partition:
    """A labeling of the region into clusters.

    ``labeler`` maps an ``(N, 2)`` array to integer codes indexing
    ``cluster_ids``. For VC the ids are AP indices, for KVC sorted tuples of AP
    indices, for KMEANS centroid indices and for EXTERNAL the external labels.
    """

    method: str
    region: Region
    cluster_ids: tuple
    labeler: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def label(self, points) -> np.ndarray:
        pts = as_points(points)
        if len(pts) == 0:
            return np.empty(0, dtype=int)
        return np.asarray(self.labeler(pts), dtype=int)

    def code_of(self, cluster_id) -> int:
        return self.cluster_ids.index(cluster_id)

    def sub_region(self, cluster_id) -> SubRegion:
        return SubRegion(self, self.code_of(cluster_id))

    @property
    def cluster_regions(self) -> list[tuple[object, SubRegion]]:
        return [(cid, SubRegion(self, c)) for c, cid in enumerate(self.cluster_ids)]

    def grid_labels(self, cell: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
        """Dense classification of the region: lattice centers and their codes."""
        pts = self.region.grid(cell)
        return pts, self.label(pts)

    def merged(self, mapping: dict[int, int]) -> Partition:
        """Partition in which each code in ``mapping`` is relabeled to its target code."""
        lut = np.arange(len(self.cluster_ids))
        for src, dst in mapping.items():
            lut[src] = dst
        base = self.labeler
        return Partition(self.method, self.region, self.cluster_ids, lambda p: lut[np.asarray(base(p), dtype=int)])


def _nearest_ap_codes(positions: np.ndarray, pts: np.ndarray) -> np.ndarray:
    d2 = ((pts[:, None, :] - positions[None, :, :]) ** 2).sum(-1)
    return np.argmin(d2, axis=1)  # first minimum: lowest AP index wins ties


def voronoi_partition(layout: ApLayout, region: Region) -> Partition:
    """Nearest-AP cells clipped to the region; ties go to the lowest AP index."""
    if not isinstance(layout, ApLayout):
        layout = ApLayout(layout)
    positions = layout.positions
    return Partition("VC", region, tuple(range(layout.n)), lambda p: _nearest_ap_codes(positions, p))


def kvc_partition(layout: ApLayout, region: Region, k: int) -> Partition:
    """Order-k Voronoi regions keyed by the sorted tuple of the k nearest APs."""
    if not 1 <= k <= layout.n:
        raise ValueError(f"k must be in [1, {layout.n}]")
    keys = tuple(itertools.combinations(range(layout.n), k))
    lookup = {key: c for c, key in enumerate(keys)}
    positions = layout.positions

    def labeler(pts):
        d2 = ((pts[:, None, :] - positions[None, :, :]) ** 2).sum(-1)
        top = np.argsort(d2, axis=1, kind="stable")[:, :k]
        masks = (np.int64(1) << top.astype(np.int64)).sum(axis=1)
        uniq, inv = np.unique(masks, return_inverse=True)
        codes = np.array([lookup[tuple(j for j in range(layout.n) if (int(u) >> j) & 1)] for u in uniq], dtype=int)
        return codes[inv]

    return Partition("KVC", region, keys, labeler)


def room_partition(rooms: Sequence[tuple[object, np.ndarray]], region: Region) -> Partition:
    """Partition by named room polygons; points in no room go to the nearest room."""
    ids = tuple(r[0] for r in rooms)
    polys = [Polygon(as_points(r[1])) for r in rooms]
    for poly in polys:
        shapely.prepare(poly)

    def labeler(pts):
        codes = np.full(len(pts), -1)
        for c, poly in enumerate(polys):
            hit = (codes < 0) & shapely.intersects_xy(poly, pts[:, 0], pts[:, 1])
            codes[hit] = c
        stray = codes < 0
        if stray.any():
            geoms = shapely.points(pts[stray])
            dist = np.column_stack([shapely.distance(geoms, poly) for poly in polys])
            codes[stray] = np.argmin(dist, axis=1)
        return codes

    return Partition("EXTERNAL", region, ids, labeler)


def sample_clusters(
    partition: Partition,
    prior: LocationPrior,
    per_cluster: int,
    seed=None,
    max_draws: int = 20_000_000,
    min_draws: int = 200_000,
) -> list[np.ndarray]:
    """Prior samples for every cluster at once, by rejection from the full prior.

    Draws in batches until every cluster holds ``per_cluster`` points. A
    cluster with no hits after ``min_draws`` candidates is treated as empty,
    and one whose observed hit rate would need more than ``max_draws``
    candidates is returned short.
    """
    rng = np.random.default_rng(seed)
    region = partition.region
    n_clusters = len(partition.cluster_ids)
    buckets: list[list[np.ndarray]] = [[] for _ in range(n_clusters)]
    counts = np.zeros(n_clusters, dtype=int)
    drawn = 0
    batch = min(max(per_cluster * n_clusters, 4096), 1_000_000)
    while True:
        short = counts < per_cluster
        if drawn >= min_draws:
            hopeless = counts == 0
            need = np.where(counts > 0, per_cluster * drawn / np.maximum(counts, 1), np.inf)
            short &= ~hopeless & (need <= max_draws)
        if not short.any() or drawn >= max_draws:
            break
        cand = _candidates(prior, region, batch, rng)
        drawn += batch
        cand = cand[region.contains(cand)]
        codes = partition.label(cand)
        for c in np.flatnonzero(counts < per_cluster):
            sel = cand[codes == c][: per_cluster - counts[c]]
            if len(sel):
                buckets[c].append(sel)
                counts[c] += len(sel)
        batch = min(batch * 2, 1_000_000)
    return [np.concatenate(b) if b else np.empty((0, 2)) for b in buckets]
