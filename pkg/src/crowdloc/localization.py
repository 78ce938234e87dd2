"""RSS-to-distance conversion, linearized trilateration, baselines and error reports."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import RssDataset
from .clustering import ClusterAssignment, format_key
from .errors import DegenerateGeometryError, InsufficientDataError, UndefinedScaleError
from .estimator import DistanceCdf, EmpiricalCdf, cdf_convert
from .seeding import spawn
from .geometry import ApLayout, LocationPrior, Partition, as_points, sample_clusters

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistanceEstimateSet:
    """``m x n`` matrix of per-AP distance estimates; NaN rows could not be converted."""

    distances: np.ndarray
    source: str
    notes: tuple[str, ...] = ()

    @property
    def m(self) -> int:
        return self.distances.shape[0]


@dataclass(frozen=True)
class PositionEstimate:
    point: tuple[float, float]
    residual: float


def _positions(layout) -> np.ndarray:
    return layout.positions if isinstance(layout, ApLayout) else as_points(layout)


def trilateration_system(layout, reference: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix ``A`` and the distance-free part of ``b``.

    Row ``j`` is the j-th range equation minus the reference one:
    ``2 (q_j - q_ref) . p = |q_j|^2 - |q_ref|^2 - d_j^2 + d_ref^2``.
    """
    q = _positions(layout)
    n = len(q)
    ref = reference % n
    rows = [j for j in range(n) if j != ref]
    a = 2.0 * (q[rows] - q[ref])
    b0 = (q[rows] ** 2).sum(1) - (q[ref] ** 2).sum()
    return a, b0


def trilaterate_many(layout, distances, reference: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares positions for each row of an ``(m, n)`` distance matrix.

    Solves the normal equations ``(A^T A) p = A^T b``. Returns ``(points,
    residuals)`` where the residual is the RMS of ``| |p - q_j| - d_j |``.
    """
    q = _positions(layout)
    n = len(q)
    if n < 3:
        raise DegenerateGeometryError(f"trilateration needs >= 3 APs, got {n}")
    dist = np.atleast_2d(np.asarray(distances, dtype=float))
    if dist.shape[1] != n:
        raise ValueError(f"expected {n} distances per target, got {dist.shape[1]}")
    a, b0 = trilateration_system(q, reference)
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= 1e-10 * s[0]:
        raise DegenerateGeometryError("AP positions are collinear; position is not identifiable")
    ref = reference % n
    rows = [j for j in range(n) if j != ref]
    b = b0[None, :] - dist[:, rows] ** 2 + dist[:, [ref]] ** 2
    ata = a.T @ a
    pts = np.linalg.solve(ata, (b @ a).T).T
    ranges = np.linalg.norm(pts[:, None, :] - q[None, :, :], axis=-1)
    resid = np.sqrt(np.mean((ranges - dist) ** 2, axis=1))
    return pts, resid


def trilaterate(layout, distances, reference: int = -1) -> PositionEstimate:
    pts, resid = trilaterate_many(layout, np.asarray(distances, dtype=float)[None, :], reference)
    return PositionEstimate((float(pts[0, 0]), float(pts[0, 1])), float(resid[0]))


@dataclass
class ClusterModel:
    rss_cdfs: list[EmpiricalCdf]
    dist_cdfs: list[DistanceCdf]
    size: int


@dataclass
class CdfConverter:
    """Per-cluster quantile transform from RSS to AP distance.

    For every cluster and AP the RSS CDF comes from the cluster's training
    vectors and the distance CDF from prior samples inside the cluster's
    sub-region. Clusters that are too small (fewer than ``min_count``
    vectors, or fewer than 100 prior samples) are merged into the nearest
    usable cluster, measured between prior-sample centroids.
    """

    layout: ApLayout
    partition: Partition
    prior: LocationPrior
    n_samples: int = 10_000
    min_count: int = 20
    seed: object = None
    models: dict[int, ClusterModel] = field(default_factory=dict, init=False)
    mapping: dict[int, int] = field(default_factory=dict, init=False)
    notes: list[str] = field(default_factory=list, init=False)

    def fit(self, dataset: RssDataset, assignment: ClusterAssignment) -> CdfConverter:
        keys = self.partition.cluster_ids
        if tuple(assignment.keys) != tuple(keys):
            raise ValueError("assignment and partition describe different clusters")
        seeds = spawn(self.seed, 2)
        sizes = assignment.sizes()
        samples = sample_clusters(self.partition, self.prior, self.n_samples, seeds[0])
        usable = [c for c in range(len(keys)) if sizes[c] >= self.min_count and len(samples[c]) >= 100]
        if not usable:
            raise InsufficientDataError(
                f"no cluster has >= {self.min_count} vectors and prior mass; sizes={sizes.tolist()}"
            )
        anchors = np.array([s.mean(axis=0) if len(s) else self._fallback_anchor(c) for c, s in enumerate(samples)])
        mapping = {c: c for c in usable}
        for c in range(len(keys)):
            if c in mapping:
                continue
            target = min(usable, key=lambda u: (np.linalg.norm(anchors[u] - anchors[c]), u))
            mapping[c] = target
            if sizes[c] > 0:
                self.notes.append(
                    f"cluster {format_key(keys[c])} ({sizes[c]} vectors, {len(samples[c])} prior samples) "
                    f"merged into {format_key(keys[target])}"
                )
        self.mapping = mapping
        partition = self.partition
        if any(src != dst for src, dst in mapping.items()):
            partition = self.partition.merged({s: d for s, d in mapping.items() if s != d})
            samples = sample_clusters(partition, self.prior, self.n_samples, seeds[1])
        codes = self._map(assignment.codes)
        q = self.layout.positions
        self.models = {}
        for c in usable:
            members = dataset.rss[codes == c]
            dist = np.linalg.norm(samples[c][:, None, :] - q[None, :, :], axis=-1)
            self.models[c] = ClusterModel(
                [EmpiricalCdf(members[:, j]) for j in range(dataset.n)],
                [DistanceCdf(dist[:, j]) for j in range(dataset.n)],
                len(members),
            )
        for note in self.notes:
            log.warning(note)
        return self

    def _fallback_anchor(self, code):
        key = self.partition.cluster_ids[code]
        idx = key if isinstance(key, tuple) else (key,)
        if self.partition.method in ("VC", "KVC"):
            return self.layout.positions[list(idx)].mean(axis=0)
        x0, y0, x1, y1 = self.partition.region.bounds
        return np.array([(x0 + x1) / 2, (y0 + y1) / 2])

    def _map(self, codes) -> np.ndarray:
        lut = np.array([self.mapping.get(c, -1) for c in range(len(self.partition.cluster_ids))] + [-1])
        return lut[np.asarray(codes)]  # code -1 indexes the trailing -1

    def convert(self, dataset: RssDataset, assignment: ClusterAssignment) -> DistanceEstimateSet:
        if not self.models:
            raise RuntimeError("fit() must be called before convert()")
        codes = self._map(assignment.codes)
        out = np.full(dataset.rss.shape, np.nan)
        for c, model in self.models.items():
            rows = codes == c
            if not rows.any():
                continue
            for j in range(dataset.n):
                out[rows, j] = cdf_convert(dataset.rss[rows, j], model.rss_cdfs[j], model.dist_cdfs[j])
        return DistanceEstimateSet(out, "CDF", tuple(self.notes))


def algorithm1_convert(
    dataset: RssDataset,
    assignment: ClusterAssignment,
    partition: Partition,
    prior: LocationPrior,
    layout: ApLayout,
    n_samples: int = 10_000,
    min_count: int = 20,
    seed=None,
) -> DistanceEstimateSet:
    """Fit the per-cluster transform on ``dataset`` and convert the same vectors."""
    conv = CdfConverter(layout, partition, prior, n_samples, min_count, seed).fit(dataset, assignment)
    return conv.convert(dataset, assignment)


@dataclass(frozen=True)
class LdplModel:
    """Linear RSS-to-distance map fixed by each AP's strongest and weakest training readings."""

    s_max: np.ndarray
    s_min: np.ndarray
    l_ref: float

    @classmethod
    def fit(cls, dataset: RssDataset, l_ref: float) -> LdplModel:
        s_max = dataset.rss.max(axis=0)
        s_min = dataset.rss.min(axis=0)
        flat = np.flatnonzero(s_max <= s_min)
        if flat.size:
            ids = [dataset.ap_ids[j] for j in flat]
            raise UndefinedScaleError(f"constant RSS for AP(s) {ids}; linear scale undefined")
        return cls(s_max, s_min, float(l_ref))

    def convert(self, rss) -> np.ndarray:
        rss = np.asarray(rss, dtype=float)
        d = self.l_ref * (self.s_max - rss) / (self.s_max - self.s_min)
        return np.clip(d, 0.0, self.l_ref)


def ldpl_convert(dataset: RssDataset, l_ref: float, reference: RssDataset | None = None) -> DistanceEstimateSet:
    """Convert ``dataset`` with extremes taken from ``reference`` (default: itself)."""
    model = LdplModel.fit(reference if reference is not None else dataset, l_ref)
    return DistanceEstimateSet(model.convert(dataset.rss), "LDPL")


def knn_locate_many(train: RssDataset, queries, k: int = 3, weighted: bool = False, chunk: int = 1024) -> np.ndarray:
    """Fingerprint positions for each query row (brute-force Euclidean search in dBm)."""
    if train.truth is None:
        raise ValueError("kNN needs a training set with ground-truth positions")
    if not 1 <= k <= train.m:
        raise ValueError(f"k must be in [1, {train.m}]")
    x = train.rss
    qs = np.atleast_2d(np.asarray(queries, dtype=float))
    out = np.empty((len(qs), 2))
    for start in range(0, len(qs), chunk):
        q = qs[start : start + chunk]
        d2 = ((q[:, None, :] - x[None, :, :]) ** 2).sum(-1)
        nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
        pos = train.truth[nn]  # (b, k, 2)
        if not weighted:
            out[start : start + chunk] = pos.mean(axis=1)
            continue
        dist = np.sqrt(np.take_along_axis(d2, nn, axis=1))
        exact = dist == 0
        w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / np.where(exact, 1.0, dist))
        out[start : start + chunk] = (w[:, :, None] * pos).sum(1) / w.sum(1, keepdims=True)
    return out


def knn_locate(train: RssDataset, query, k: int = 3, weighted: bool = False) -> PositionEstimate:
    p = knn_locate_many(train, np.asarray(query, dtype=float)[None, :], k, weighted)[0]
    return PositionEstimate((float(p[0]), float(p[1])), float("nan"))


QUANTILES = {"median": 0.5, "p67": 0.67, "p90": 0.9, "p95": 0.95}


@dataclass(frozen=True)
class ErrorReport:
    errors: np.ndarray

    def __post_init__(self):
        e = np.sort(np.asarray(self.errors, dtype=float).ravel())
        if e.size == 0 or np.any(e < 0) or not np.all(np.isfinite(e)):
            raise ValueError("errors must be a non-empty list of finite non-negative values")
        object.__setattr__(self, "errors", e)

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.errors, q))

    @property
    def median(self) -> float:
        return self.quantile(0.5)

    @property
    def mean(self) -> float:
        return float(self.errors.mean())

    def summary(self) -> dict[str, float]:
        out = {name: self.quantile(q) for name, q in QUANTILES.items()}
        out["mean"] = self.mean
        return out

    def to_csv(self) -> str:
        return "error_m\n" + "".join(f"{float(e)!r}\n" for e in self.errors)

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> ErrorReport:
        lines = text.strip().splitlines()
        if not lines or lines[0].strip() != "error_m":
            raise ValueError("error CSV must start with an 'error_m' header")
        return cls(np.array([float(v) for v in lines[1:]]))


def evaluate(estimates, truth) -> ErrorReport:
    """Euclidean error of each estimate against its ground-truth point."""
    if len(estimates) and isinstance(estimates[0], PositionEstimate):
        est = np.array([e.point for e in estimates], dtype=float)
    else:
        est = as_points(estimates) if len(estimates) else np.empty((0, 2))
    tru = as_points(truth) if len(truth) else np.empty((0, 2))
    if len(est) != len(tru):
        raise ValueError(f"{len(est)} estimates but {len(tru)} truth points")
    return ErrorReport(np.linalg.norm(est - tru, axis=1))
