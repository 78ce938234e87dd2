import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from crowdloc.channel import ChannelParams, RssDataset, generate_2d_dataset
from crowdloc.clustering import (
    assign_external,
    assign_kmeans,
    assign_kvc,
    assign_max_rss,
    format_key,
    kmeans,
    kmeans_partition,
)
from crowdloc.geometry import room_partition, sample_prior, voronoi_partition


def ds(rows):
    rows = np.atleast_2d(np.asarray(rows, float))
    return RssDataset(rows, tuple(f"a{j}" for j in range(rows.shape[1])))


def test_max_rss_argmax_and_tie():
    a = assign_max_rss(ds([[-40, -50, -60], [-40, -40, -60], [-70, -30, -31]]))
    assert a.codes.tolist() == [0, 0, 1]


def test_max_rss_unheard_vector():
    a = assign_max_rss(ds([[-100, -100], [-50, -100]]))
    assert a.codes.tolist() == [-1, 0]
    assert a.unassigned.tolist() == [0]


rss_rows = arrays(np.float64, (12, 5), elements=st.floats(-99, -10))


@given(rss_rows, st.floats(-50, 50))
def test_max_rss_offset_invariant(x, c):
    a = assign_max_rss(ds(x))
    b = assign_max_rss(RssDataset(x + c, tuple(f"a{j}" for j in range(5)), floor=-1e9))
    assert np.array_equal(a.codes, b.codes)


@given(rss_rows)
def test_kvc_k1_equals_max_rss(x):
    a = assign_max_rss(ds(x))
    b = assign_kvc(ds(x), 1)
    assert [(c,) for c in a.codes.tolist()] == [b.keys[c] for c in b.codes]


def test_kvc_pair_key():
    a = assign_kvc(ds([[-40, -50, -60]]), 2)
    assert a.keys[a.codes[0]] == (0, 1)
    assert format_key(a.keys[a.codes[0]]) == "0+1"


def test_noiseless_max_rss_matches_voronoi(floorplan1):
    d = generate_2d_dataset(floorplan1, ChannelParams(sigma_chi=0, noise_sigma=0, height=2.0), 1500, seed=1)
    vc = voronoi_partition(floorplan1.layout, floorplan1.region)
    assert np.array_equal(assign_max_rss(d).codes, vc.label(d.truth))


def test_external_equal_labels_one_cluster():
    a = assign_external(ds(np.zeros((4, 2)) - 50), ["r"] * 4)
    assert a.keys == ("r",) and np.all(a.codes == 0)


def test_external_voronoi_passthrough(floorplan1):
    pts = sample_prior(floorplan1.prior, floorplan1.region, 300, 2)
    vc = voronoi_partition(floorplan1.layout, floorplan1.region)
    labels = vc.label(pts)
    a = assign_external(RssDataset(np.full((300, 8), -50.0), floorplan1.layout.ids, pts), labels.tolist(), vc.cluster_ids)
    assert np.array_equal(a.codes, labels)


def test_external_room_labels_inside_rooms(floorplan1):
    from crowdloc.geometry import Region

    pts = sample_prior(floorplan1.prior, floorplan1.region, 500, 3)
    part = room_partition(floorplan1.rooms, floorplan1.region)
    keys = part.cluster_ids
    a = assign_external(RssDataset(np.full((500, 8), -50.0), floorplan1.layout.ids, pts), [keys[c] for c in part.label(pts)], keys)
    for (rid, poly) in floorplan1.rooms:
        members = a.members(keys.index(rid))
        inside = Region(poly).contains(pts[members])
        assert inside.mean() > 0.98  # boundary stragglers go to the nearest room


def test_kmeans_k1_is_mean(rng):
    x = rng.normal(size=(50, 3))
    a, c = assign_kmeans(ds(x), 1, seed=0)
    assert np.all(a.codes == 0)
    assert np.allclose(c[0], x.mean(0))


def test_kmeans_recovers_blobs(rng):
    x = np.vstack([rng.normal(-80, 1, (40, 4)), rng.normal(-20, 1, (60, 4))])
    res = kmeans(x, 2, seed=5)
    lab = res.assignment.codes
    assert len(set(lab[:40])) == 1 and len(set(lab[40:])) == 1 and lab[0] != lab[-1]


def test_kmeans_objective_non_increasing(rng):
    x = rng.normal(size=(300, 2))
    res = kmeans(x, 6, seed=2)
    assert np.all(np.diff(res.objective) <= 1e-9)


def test_kmeans_deterministic(rng):
    x = rng.normal(size=(200, 3))
    a, b = kmeans(x, 4, seed=9), kmeans(x, 4, seed=9)
    assert np.array_equal(a.centroids, b.centroids)


def test_kmeans_handles_duplicates():
    x = np.vstack([np.zeros((10, 2)), np.ones((2, 2))])
    res = kmeans(x, 3, seed=0)
    assert res.assignment.codes.shape == (12,)


def test_kmeans_partition_labels_every_point(floorplan1):
    d = generate_2d_dataset(floorplan1, ChannelParams(sigma_chi=0, noise_sigma=0), 800, seed=4)
    res = kmeans(d.rss, 8, seed=1)
    part = kmeans_partition(res.centroids, floorplan1.layout, floorplan1.region)
    lab = part.label(d.truth)
    assert lab.min() >= 0 and lab.max() < 8
    # the spatial map should agree with the RSS-space clustering on most points
    assert np.mean(lab == res.assignment.codes) > 0.6


def test_assignment_csv():
    a = assign_kvc(ds([[-40, -50, -60], [-100, -100, -100]]), 2)
    assert a.to_csv() == "index,label\n0,0+1\n1,\n"
