"""Grouping unlabeled RSS vectors into spatial clusters.

Every assignment carries integer codes into a tuple of cluster keys so it can
be matched with the :class:`~crowdloc.geometry.Partition` that describes the
same clusters in space. Code ``-1`` marks vectors that heard no AP.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, RssDataset, mean_rss
from .geometry import ApLayout, Partition, Region, as_points


@dataclass(frozen=True)
class ClusterAssignment:
    codes: np.ndarray
    keys: tuple
    method: str

    @property
    def labels(self) -> list:
        return [None if c < 0 else self.keys[c] for c in self.codes]

    @property
    def unassigned(self) -> np.ndarray:
        return np.flatnonzero(self.codes < 0)

    def members(self, code: int) -> np.ndarray:
        return np.flatnonzero(self.codes == code)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.codes[self.codes >= 0], minlength=len(self.keys))

    def to_csv(self) -> str:
        lines = ["index,label"]
        for i, lab in enumerate(self.labels):
            lines.append(f"{i},{format_key(lab)}")
        return "\n".join(lines) + "\n"


def format_key(key) -> str:
    if key is None:
        return ""
    if isinstance(key, tuple):
        return "+".join(str(k) for k in key)
    return str(key)


def _heard(dataset: RssDataset) -> np.ndarray:
    return np.any(dataset.rss > dataset.floor, axis=1)


def assign_max_rss(dataset: RssDataset) -> ClusterAssignment:
    """Label each vector with the AP it hears strongest (lowest index on ties)."""
    codes = np.argmax(dataset.rss, axis=1)
    codes[~_heard(dataset)] = -1
    return ClusterAssignment(codes, tuple(range(dataset.n)), "VC")


def assign_kvc(dataset: RssDataset, k: int) -> ClusterAssignment:
    """Label each vector with the set of its k strongest APs (order-k Voronoi)."""
    n = dataset.n
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    keys = tuple(itertools.combinations(range(n), k))
    lookup = {key: c for c, key in enumerate(keys)}
    top = np.sort(np.argsort(-dataset.rss, axis=1, kind="stable")[:, :k], axis=1)
    codes = np.array([lookup[tuple(row)] for row in top.tolist()], dtype=int)
    codes[~_heard(dataset)] = -1
    return ClusterAssignment(codes, keys, "KVC")


def assign_external(dataset: RssDataset, labels, keys=None) -> ClusterAssignment:
    """Wrap side-information labels (room names, known cells, ...)."""
    labels = list(labels)
    if len(labels) != dataset.m:
        raise ValueError(f"{len(labels)} labels for {dataset.m} vectors")
    if keys is None:
        keys = tuple(sorted(set(labels), key=lambda x: (str(type(x)), x)))
    lookup = {key: c for c, key in enumerate(keys)}
    try:
        codes = np.array([lookup[lab] for lab in labels], dtype=int)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} is not a known cluster") from None
    return ClusterAssignment(codes, tuple(keys), "EXTERNAL")


@dataclass
class KMeansResult:
    assignment: ClusterAssignment
    centroids: np.ndarray
    objective: list[float] = field(default_factory=list)
    n_iter: int = 0

    def predict(self, rss) -> np.ndarray:
        x = np.atleast_2d(np.asarray(rss, dtype=float))
        return _nearest(x, self.centroids)


def _sq_dists(x, c):
    return ((x[:, None, :] - c[None, :, :]) ** 2).sum(-1)


def _nearest(x, c):
    return np.argmin(_sq_dists(x, c), axis=1)


def _plusplus(x, k, rng):
    centers = [x[rng.integers(len(x))]]
    d2 = ((x - centers[0]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(len(x))
        else:
            idx = rng.choice(len(x), p=d2 / total)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(1))
    return np.array(centers)


def kmeans(x, k: int, max_iter: int = 300, seed=None, tol: float = 0.0) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding on rows of ``x``.

    An emptied cluster is re-seeded with the point farthest from its current
    centroid. The objective (sum of squared distances) is recorded after each
    assignment step.
    """
    x = np.asarray(x, dtype=float)
    if not 1 <= k <= len(x):
        raise ValueError(f"k must be in [1, {len(x)}]")
    rng = np.random.default_rng(seed)
    centroids = _plusplus(x, k, rng)
    history: list[float] = []
    labels = None
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centroids)
        new = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(x)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            members = labels == c
            if members.any():
                centroids[c] = x[members].mean(axis=0)
            else:
                own = d2[np.arange(len(x)), labels]
                far = int(np.argmax(own))
                centroids[c] = x[far]
                labels[far] = c
        if tol > 0 and len(history) > 1 and history[-2] - history[-1] <= tol * history[-2]:
            break
    d2 = _sq_dists(x, centroids)
    labels = np.argmin(d2, axis=1)
    history.append(float(d2[np.arange(len(x)), labels].sum()))
    return KMeansResult(ClusterAssignment(labels, tuple(range(k)), "KMEANS"), centroids, history, it)


def assign_kmeans(dataset: RssDataset, k: int, max_iter: int = 300, seed=None) -> tuple[ClusterAssignment, np.ndarray]:
    res = kmeans(dataset.rss, k, max_iter, seed)
    return res.assignment, res.centroids


def kmeans_partition(
    centroids,
    layout: ApLayout,
    region: Region,
    nominal: ChannelParams | None = None,
) -> Partition:
    """Map RSS-space k-means clusters back to space.

    A location belongs to the cluster whose centroid is closest to the
    location's noiseless expected RSS vector under a nominal path-loss model.
    Both vectors are centered across APs first, so only the path-loss slope of
    the nominal model matters, not its absolute power level.
    """
    centroids = np.atleast_2d(np.asarray(centroids, dtype=float))
    nominal = nominal or ChannelParams(gamma=3.0, d0=1.0, sigma_chi=0.0)
    centered = centroids - centroids.mean(axis=1, keepdims=True)
    positions = layout.positions

    def labeler(pts):
        pts = as_points(pts)
        d = np.linalg.norm(pts[:, None, :] - positions[None, :, :], axis=-1)
        expected = mean_rss(nominal, np.hypot(d, nominal.height) + 1e-12)
        expected = expected - expected.mean(axis=1, keepdims=True)
        return _nearest(expected, centered)

    return Partition("KMEANS", region, tuple(range(len(centroids))), labeler)
