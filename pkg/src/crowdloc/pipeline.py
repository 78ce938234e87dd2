"""End-to-end runs: cluster, convert, trilaterate, plus the two baselines."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, RssDataset, Scene
from .clustering import (
    ClusterAssignment,
    assign_external,
    assign_kvc,
    assign_max_rss,
    kmeans,
    kmeans_partition,
)
from .seeding import spawn
from .geometry import kvc_partition, room_partition, voronoi_partition
from .localization import CdfConverter, ErrorReport, LdplModel, evaluate, knn_locate_many, trilaterate_many

METHODS = ("cdf-vc", "cdf-kvc", "cdf-kmeans", "ldpl", "knn")
SIDE_INFO_METHODS = ("cdf-cell-train", "cdf-cell-both", "cdf-room-train", "cdf-room-both")


@dataclass
class LocalizeOptions:
    knn_k: int = 3
    knn_weighted: bool = False
    kvc_k: int = 2
    kmeans_k: int = 8
    kmeans_iter: int = 300
    n_samples: int = 10_000
    min_count: int = 20
    reference: int = -1
    clamp: bool = True
    l_ref: float | None = None
    nominal_gamma: float = 3.0

    @classmethod
    def from_dict(cls, doc: dict) -> LocalizeOptions:
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in names})


@dataclass
class MethodResult:
    name: str
    positions: np.ndarray
    report: ErrorReport | None
    notes: list[str] = field(default_factory=list)


def _centroid_assign(train: RssDataset, train_assign: ClusterAssignment, test: RssDataset) -> ClusterAssignment:
    # clusters known only on the training side: test vectors go to the nearest cluster mean
    codes = [c for c in range(len(train_assign.keys)) if np.any(train_assign.codes == c)]
    means = np.array([train.rss[train_assign.codes == c].mean(axis=0) for c in codes])
    d2 = ((test.rss[:, None, :] - means[None, :, :]) ** 2).sum(-1)
    return ClusterAssignment(np.array(codes)[np.argmin(d2, axis=1)], train_assign.keys, train_assign.method)


def _cdf_setup(method: str, train: RssDataset, test: RssDataset, scene: Scene, opts: LocalizeOptions, seed):
    """Partition plus train/test assignments for one CDF-method variant."""
    layout, region = scene.layout, scene.region
    if method == "cdf-vc":
        return voronoi_partition(layout, region), assign_max_rss(train), assign_max_rss(test)
    if method == "cdf-kvc":
        return kvc_partition(layout, region, opts.kvc_k), assign_kvc(train, opts.kvc_k), assign_kvc(test, opts.kvc_k)
    if method == "cdf-kmeans":
        res = kmeans(train.rss, opts.kmeans_k, opts.kmeans_iter, seed)
        nominal = ChannelParams(gamma=opts.nominal_gamma, d0=1.0, sigma_chi=0.0)
        part = kmeans_partition(res.centroids, layout, region, nominal)
        test_assign = ClusterAssignment(res.predict(test.rss), res.assignment.keys, "KMEANS")
        return part, res.assignment, test_assign
    kind, on = method.split("-")[1:]
    if train.truth is None or (on == "both" and test.truth is None):
        raise ValueError(f"{method} derives side-information labels from ground truth positions")
    if kind == "cell":
        part = voronoi_partition(layout, region)
    else:
        if not scene.rooms:
            raise ValueError("scene defines no rooms for room side information")
        part = room_partition(scene.rooms, region)
    keys = part.cluster_ids
    train_assign = assign_external(train, [keys[c] for c in part.label(train.truth)], keys)
    if on == "both":
        test_assign = assign_external(test, [keys[c] for c in part.label(test.truth)], keys)
    else:
        test_assign = _centroid_assign(train, train_assign, test)
    return part, train_assign, test_assign


def _finish(positions, scene, opts):
    bad = ~np.all(np.isfinite(positions), axis=1)
    if bad.any():
        x0, y0, x1, y1 = scene.region.bounds
        positions[bad] = scene.region.clamp(np.array([[(x0 + x1) / 2, (y0 + y1) / 2]]))[0]
    if opts.clamp:
        positions = scene.region.clamp(positions)
    return positions, int(bad.sum())


def run_method(
    method: str,
    train: RssDataset,
    test: RssDataset,
    scene: Scene,
    opts: LocalizeOptions | None = None,
    seed=None,
) -> MethodResult:
    """Localize every test vector with one method; trains only on ``train``."""
    opts = opts or LocalizeOptions()
    notes: list[str] = []
    if method == "knn":
        pos = knn_locate_many(train, test.rss, opts.knn_k, opts.knn_weighted)
    elif method == "ldpl":
        l_ref = opts.l_ref if opts.l_ref is not None else scene.region.diameter
        dist = LdplModel.fit(train, l_ref).convert(test.rss)
        pos, _ = trilaterate_many(scene.layout, dist, opts.reference)
    elif method in METHODS or method in SIDE_INFO_METHODS:
        seeds = spawn(seed, 2)
        part, tr_assign, te_assign = _cdf_setup(method, train, test, scene, opts, seeds[0])
        conv = CdfConverter(scene.layout, part, scene.prior, opts.n_samples, opts.min_count, seeds[1])
        conv.fit(train, tr_assign)
        dist = conv.convert(test, te_assign).distances
        notes.extend(conv.notes)
        pos = np.full((test.m, 2), np.nan)
        ok = np.all(np.isfinite(dist), axis=1)
        if ok.any():
            pos[ok], _ = trilaterate_many(scene.layout, dist[ok], opts.reference)
    else:
        raise ValueError(f"unknown method {method!r}")
    pos, n_bad = _finish(np.asarray(pos, dtype=float), scene, opts)
    if n_bad:
        notes.append(f"{n_bad} test vectors could not be converted; placed at the region center")
    report = evaluate(pos, test.truth) if test.truth is not None else None
    return MethodResult(method, pos, report, notes)


def run_methods(methods, train, test, scene, opts=None, seed=None) -> dict[str, MethodResult]:
    seeds = spawn(seed, len(methods))
    return {m: run_method(m, train, test, scene, opts, s) for m, s in zip(methods, seeds)}


def quantile_table(results: dict[str, MethodResult]) -> str:
    """CSV with one row per method: median, p67, p90, p95, mean."""
    lines = ["method,median,p67,p90,p95,mean"]
    for name, res in results.items():
        if res.report is None:
            continue
        s = res.report.summary()
        lines.append(",".join([name] + [repr(s[k]) for k in ("median", "p67", "p90", "p95", "mean")]))
    return "\n".join(lines) + "\n"


def case_study(
    case: int,
    params: ChannelParams,
    m: int | None = None,
    d_max: float = 25.0,
    beta_params: tuple[float, float] = (2.0, 2.0),
    seed=None,
    n_prior: int = 10_000,
) -> dict[str, str]:
    """Single-AP reconstruction tables, one CSV text per table.

    Case 1 and 2 use the ordering estimator. Case 2 yields two tables, m=200
    and m=800 by default, where the smaller set is a random subset of the
    larger so both see the same channel realization. Case 3 adds the
    CDF-method estimate using ``n_prior`` draws of the known distance law.
    """
    from .channel import Case, generate_1d_dataset
    from .estimator import DistanceCdf, order_estimate, reconstruct_case3

    case = Case(case)
    s_data, s_sub, s_prior = spawn(seed, 3)
    a, b = params.d0, d_max

    def table(cols: dict[str, np.ndarray]) -> str:
        names = list(cols)
        lines = [",".join(names)]
        for row in zip(*cols.values()):
            lines.append(",".join(repr(float(v)) for v in row))
        return "\n".join(lines) + "\n"

    if case is Case.UNIFORM_SPACED:
        m = m or 200
        ds, d = generate_1d_dataset(params, case, m, a, b, seed=s_data)
        rss = ds.rss[:, 0]
        return {f"case1_m{m}": table({"distance": d, "rss": rss, "est_order": order_estimate(rss, a, b)})}
    if case is Case.UNIFORM_RANDOM:
        big = m or 800
        ds, d = generate_1d_dataset(params, case, big, a, b, seed=s_data)
        rss = ds.rss[:, 0]
        out = {}
        small = big // 4
        sub = np.sort(np.random.default_rng(s_sub).choice(big, small, replace=False))
        for mm, idx in ((small, sub), (big, np.arange(big))):
            out[f"case2_m{mm}"] = table(
                {"distance": d[idx], "rss": rss[idx], "est_order": order_estimate(rss[idx], a, b)}
            )
        return out
    m = m or 800
    ds, d = generate_1d_dataset(params, case, m, a, b, beta_params, seed=s_data)
    rss = ds.rss[:, 0]
    alpha, beta = beta_params
    f_d = DistanceCdf(a + (b - a) * np.random.default_rng(s_prior).beta(alpha, beta, n_prior))
    return {
        f"case3_m{m}": table(
            {
                "distance": d,
                "rss": rss,
                "est_order": order_estimate(rss, a, b),
                "est_cdf": reconstruct_case3(rss, f_d),
            }
        )
    }
