"""Log-distance path loss with exponentially correlated shadowing.

Synthetic data generators for the single-AP line experiments and for 2D
multi-AP scenes.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ShadowingFactorizationError
from .seeding import spawn
from .geometry import ApLayout, LocationPrior, Region, as_points, sample_prior

RSS_FLOOR = -100.0


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss and shadowing parameters.

    Defaults are the indoor line-simulation values (Xc = 10 m, sigma = 10 dB,
    d0 = 2 m, gamma = 3, Pt = 0 dBm). ``height`` is the vertical AP-receiver
    offset used by the 2D generator; ``floor`` is the receiver sensitivity
    below which readings are clamped.
    """

    pt: float = 0.0
    k: float = 0.0
    gamma: float = 3.0
    d0: float = 2.0
    sigma_chi: float = 10.0
    xc: float = 10.0
    noise_sigma: float = 0.0
    height: float = 0.0
    floor: float = RSS_FLOOR

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if self.d0 <= 0:
            raise ValueError("d0 must be > 0")
        if self.sigma_chi < 0 or self.noise_sigma < 0:
            raise ValueError("standard deviations must be >= 0")
        if not self.xc > 0:
            raise ValueError("xc must be > 0")
        if self.height < 0:
            raise ValueError("height must be >= 0")

    def replace(self, **changes) -> ChannelParams:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def mean_rss(params: ChannelParams, d, return_clamped: bool = False):
    """Mean received power ``pt + k - 10 gamma log10(d / d0)`` in dBm.

    Distances below ``d0`` are evaluated at ``d0``; pass ``return_clamped`` to
    get the mask of clamped entries back.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be > 0")
    clamped = d < params.d0
    dd = np.maximum(d, params.d0)
    out = params.pt + params.k - 10.0 * params.gamma * np.log10(dd / params.d0)
    if out.ndim == 0:
        out = float(out)
    if return_clamped:
        return out, clamped
    return out


def shadowing_1d(sigma_chi: float, xc: float, positions, seed=None, size: int | None = None):
    """Gudmundson shadowing sampled along a line.

    First-order autoregression over sorted positions:
    ``x[i+1] = a x[i] + sqrt(1 - a^2) sigma eps`` with ``a = exp(-gap / xc)``.
    With ``size`` set, returns ``size`` independent realizations as rows.
    """
    pos = np.asarray(positions, dtype=float).ravel()
    if np.any(np.diff(pos) < 0):
        raise ValueError("positions must be sorted ascending")
    if xc <= 0:
        raise ValueError("xc must be > 0")
    rng = np.random.default_rng(seed)
    shape = (pos.size,) if size is None else (size, pos.size)
    if sigma_chi == 0 or pos.size == 0:
        return np.zeros(shape)
    eps = rng.standard_normal(shape[::-1])  # (L,) or (L, size)
    a = np.exp(-np.diff(pos) / xc)
    innov = np.sqrt(1.0 - a**2)
    out = np.empty_like(eps)
    out[0] = eps[0]
    for i in range(1, pos.size):
        out[i] = a[i - 1] * out[i - 1] + innov[i - 1] * eps[i]
    out *= sigma_chi
    return out if size is None else out.T


def shadowing_2d(
    sigma_chi: float,
    xc: float,
    points,
    seed=None,
    size: int | None = None,
    cap: int = 4096,
    max_jitter: float = 1e-4,
):
    """Zero-mean Gaussian field with covariance ``sigma^2 exp(-|p_i - p_j| / xc)``.

    Sampled by Cholesky factorization of the covariance over the distinct
    points (coincident points receive identical values). Diagonal jitter is
    increased tenfold from 1e-10 up to ``max_jitter`` (relative to sigma^2)
    until the factorization succeeds.
    """
    pts = as_points(points)
    if len(pts) > cap:
        raise ValueError(f"{len(pts)} points exceed the factorization cap of {cap}")
    rng = np.random.default_rng(seed)
    shape = (len(pts),) if size is None else (size, len(pts))
    if sigma_chi == 0 or len(pts) == 0:
        return np.zeros(shape)
    uniq, inverse = np.unique(pts, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    u = len(uniq)
    dist = np.sqrt(((uniq[:, None, :] - uniq[None, :, :]) ** 2).sum(-1))
    corr = np.exp(-dist / xc)
    jitter = 1e-10
    while True:
        try:
            chol = np.linalg.cholesky(corr + jitter * np.eye(u))
            break
        except np.linalg.LinAlgError:
            jitter *= 10
            if jitter > max_jitter:
                raise ShadowingFactorizationError(
                    "covariance factorization failed at maximum jitter"
                ) from None
    z = rng.standard_normal((u, 1 if size is None else size))
    field = sigma_chi * (chol @ z)  # (u, size)
    field = field[inverse]
    return field[:, 0] if size is None else field.T


def _lattice_shadowing(sigma_chi, xc, points, region_bounds, rng, size, cap):
    # exact field on a regular lattice of <= cap nodes, each point takes its nearest node
    x0, y0, x1, y1 = region_bounds
    w, h = max(x1 - x0, 1e-9), max(y1 - y0, 1e-9)
    step = np.sqrt(w * h / cap)
    while (int(np.ceil(w / step)) + 1) * (int(np.ceil(h / step)) + 1) > cap:
        step *= 1.02
    nx, ny = int(np.ceil(w / step)) + 1, int(np.ceil(h / step)) + 1
    gx, gy = np.meshgrid(x0 + step * np.arange(nx), y0 + step * np.arange(ny))
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    field = shadowing_2d(sigma_chi, xc, nodes, rng, size=size, cap=cap)
    ix = np.clip(np.rint((points[:, 0] - x0) / step).astype(int), 0, nx - 1)
    iy = np.clip(np.rint((points[:, 1] - y0) / step).astype(int), 0, ny - 1)
    return field[:, iy * nx + ix]


class Case(enum.Enum):
    UNIFORM_SPACED = 1
    UNIFORM_RANDOM = 2
    BETA = 3


@dataclass
class RssDataset:
    """``m x n`` RSS matrix in dBm, with optional ground-truth positions.

    Ground truth is for evaluation only; nothing in the unlabeled pipeline
    reads it.
    """

    rss: np.ndarray
    ap_ids: tuple[str, ...]
    truth: np.ndarray | None = None
    floor: float = RSS_FLOOR

    def __post_init__(self):
        self.rss = np.atleast_2d(np.asarray(self.rss, dtype=float))
        self.ap_ids = tuple(str(a) for a in self.ap_ids)
        if self.rss.shape[0] == 0:
            raise ValueError("dataset has no vectors")
        if self.rss.shape[1] != len(self.ap_ids):
            raise ValueError(f"{self.rss.shape[1]} RSS columns but {len(self.ap_ids)} AP ids")
        if self.truth is not None:
            self.truth = as_points(self.truth)
            if len(self.truth) != len(self.rss):
                raise ValueError("truth length differs from the number of vectors")

    @property
    def m(self) -> int:
        return self.rss.shape[0]

    @property
    def n(self) -> int:
        return self.rss.shape[1]

    def subset(self, idx) -> RssDataset:
        idx = np.asarray(idx)
        truth = None if self.truth is None else self.truth[idx]
        return RssDataset(self.rss[idx], self.ap_ids, truth, self.floor)

    def unlabeled(self) -> RssDataset:
        return RssDataset(self.rss, self.ap_ids, None, self.floor)

    def split(self, fraction: float = 0.5, seed=None) -> tuple[RssDataset, RssDataset]:
        """Seeded shuffle, then the first ``fraction`` trains and the rest tests."""
        idx_train, idx_test = split_indices(self.m, fraction, seed)
        return self.subset(idx_train), self.subset(idx_test)


def split_indices(m: int, fraction: float = 0.5, seed=None) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < fraction < 1:
        raise ValueError("split fraction must be in (0, 1)")
    perm = np.random.default_rng(seed).permutation(m)
    cut = int(round(m * fraction))
    cut = min(max(cut, 1), m - 1)
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def generate_1d_dataset(
    params: ChannelParams,
    case: Case | int,
    m: int,
    d0: float | None = None,
    d_max: float = 25.0,
    beta_params: tuple[float, float] = (2.0, 2.0),
    seed=None,
) -> tuple[RssDataset, np.ndarray]:
    """Single AP at the origin, receivers on the positive x-axis in ``[d0, d_max]``.

    Returns the dataset (truth = ``(d, 0)``) and the true distances.
    Shadowing is one correlated realization along the axis.
    """
    case = Case(case)
    d0 = params.d0 if d0 is None else d0
    if m < 2:
        raise ValueError("m must be >= 2")
    if d_max <= d0:
        raise ValueError("need d_max > d0")
    s_loc, s_shadow, s_noise = spawn(seed, 3)
    if case is Case.UNIFORM_SPACED:
        dist = d0 + (d_max - d0) * np.arange(1, m + 1) / (m + 1)
    elif case is Case.UNIFORM_RANDOM:
        dist = np.random.default_rng(s_loc).uniform(d0, d_max, m)
    else:
        alpha, beta = beta_params
        dist = d0 + (d_max - d0) * np.random.default_rng(s_loc).beta(alpha, beta, m)
    order = np.argsort(dist, kind="stable")
    chi = np.empty(m)
    chi[order] = shadowing_1d(params.sigma_chi, params.xc, dist[order], s_shadow)
    with np.errstate(divide="ignore"):
        rss = mean_rss(params, np.maximum(dist, 1e-12)) - chi
    if params.noise_sigma > 0:
        rss = rss + params.noise_sigma * np.random.default_rng(s_noise).standard_normal(m)
    rss = np.maximum(rss, params.floor)
    truth = np.column_stack([dist, np.zeros(m)])
    return RssDataset(rss[:, None], ("ap0",), truth, params.floor), dist


@dataclass(frozen=True)
class Scene:
    region: Region
    layout: ApLayout
    prior: LocationPrior = LocationPrior()
    rooms: tuple = ()


def generate_2d_dataset(
    scene: Scene,
    params: ChannelParams,
    m: int,
    seed=None,
    field_cap: int = 4096,
) -> RssDataset:
    """Crowdsourced-style dataset over a 2D scene.

    Locations come from the scene prior. Each AP gets an independent shadowing
    field; i.i.d. Gaussian measurement noise (dB) is added afterwards and
    readings are clamped at ``params.floor``. The same seed with different
    channel parameters reuses the locations and the standard-normal draws.
    For ``m > field_cap`` the field is drawn exactly on a lattice of at most
    ``field_cap`` nodes and each point takes its nearest node.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    s_loc, s_shadow, s_noise = spawn(seed, 3)
    pts = sample_prior(scene.prior, scene.region, m, s_loc)
    layout = scene.layout
    d = layout.distances(pts)
    d_eff = np.hypot(d, params.height)
    if np.any(d_eff <= 0):
        d_eff = np.maximum(d_eff, 1e-9)
        warnings.warn("receiver location coincides with an AP; distance floored", stacklevel=2)
    rss = mean_rss(params, d_eff)
    if params.sigma_chi > 0:
        rng = np.random.default_rng(s_shadow)
        if m <= field_cap:
            chi = shadowing_2d(params.sigma_chi, params.xc, pts, rng, size=layout.n, cap=field_cap)
        else:
            chi = _lattice_shadowing(params.sigma_chi, params.xc, pts, scene.region.bounds, rng, layout.n, field_cap)
        rss = rss - chi.T
    if params.noise_sigma > 0:
        rss = rss + params.noise_sigma * np.random.default_rng(s_noise).standard_normal((m, layout.n))
    rss = np.maximum(rss, params.floor)
    return RssDataset(rss, layout.ids, pts, params.floor)
