import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdloc.errors import InsufficientDataError
from crowdloc.estimator import (
    DistanceCdf,
    EmpiricalCdf,
    cdf_convert,
    ecdf_build,
    order_estimate,
    order_stat_moments,
    reconstruct_case3,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_ecdf_middle_rank():
    assert ecdf_build([3.0, 1.0, 2.0])(2.0) == pytest.approx(0.5)


def test_ecdf_clamped_range():
    f = ecdf_build([1.0, 2.0, 3.0])
    assert f(-100) == pytest.approx(0.25)
    assert f(100) == pytest.approx(0.75)


def test_ecdf_needs_two_samples():
    with pytest.raises(InsufficientDataError):
        ecdf_build([1.0])


def test_ecdf_standard_normal_at_zero():
    f = ecdf_build(np.random.default_rng(0).standard_normal(100_000))
    assert f(0.0) == pytest.approx(0.5, abs=0.01)


@given(st.lists(finite, min_size=2, max_size=60, unique=True))
def test_ecdf_inverse_round_trip(xs):
    f = ecdf_build(xs)
    s = np.array(xs)
    assert np.allclose(f.inverse(f(s)), s, rtol=1e-9, atol=1e-6)


@given(st.lists(finite, min_size=2, max_size=60), finite, finite)
def test_ecdf_monotone(xs, a, b):
    f = ecdf_build(xs)
    lo, hi = min(a, b), max(a, b)
    assert f(lo) <= f(hi)
    assert 1 / (len(xs) + 1) - 1e-12 <= f(lo) <= len(xs) / (len(xs) + 1) + 1e-12


def test_ecdf_csv_lists_positions():
    text = ecdf_build([2.0, 1.0]).to_csv()
    assert text.splitlines()[0] == "value,position"
    assert len(text.splitlines()) == 3


def test_distance_cdf_rejects_negative():
    with pytest.raises(ValueError):
        DistanceCdf([-1.0, 2.0])


def test_order_estimate_ranks():
    assert np.allclose(order_estimate([-10, -5, -20], 0, 4), [2, 1, 3])


def test_order_estimate_single():
    assert np.allclose(order_estimate([-42.0], 2, 25), [13.5])


def test_moments_examples():
    m = order_stat_moments(0, 1, 1, 1)
    assert m.mean == pytest.approx(0.5) and m.variance == pytest.approx(1 / 12)
    assert order_stat_moments(0, 1, 3, 2).variance == pytest.approx(0.05)


def test_moments_rank_out_of_range():
    with pytest.raises(ValueError):
        order_stat_moments(0, 1, 3, 4)
    with pytest.raises(ValueError):
        order_stat_moments(0, 1, 3, 0)


@given(st.integers(1, 500), st.data())
def test_moment_variance_symmetric_in_rank(n, data):
    r = data.draw(st.integers(1, n))
    a = order_stat_moments(2, 25, n, r)
    b = order_stat_moments(2, 25, n, n + 1 - r)
    assert a.variance == pytest.approx(b.variance)
    assert a.mean + b.mean == pytest.approx(27.0)


def test_moments_match_scipy_beta():
    from scipy import stats

    for n, r in [(5, 1), (5, 3), (20, 17)]:
        beta = stats.beta(r, n - r + 1)
        m = order_stat_moments(2, 25, n, r)
        assert m.mean == pytest.approx(2 + 23 * beta.mean())
        assert m.variance == pytest.approx(23**2 * beta.var())


def test_cdf_convert_extremes_and_median():
    f_s = EmpiricalCdf(np.linspace(-60, -10, 101))
    f_d = DistanceCdf(np.linspace(2, 25, 1001))
    assert cdf_convert(-10.0, f_s, f_d) == pytest.approx(f_d.inverse(1 / 102))
    assert cdf_convert(-35.0, f_s, f_d) == pytest.approx(13.5, abs=0.05)


def test_cdf_convert_recovers_monotone_map():
    # s = -30 log10(d / 2) with d uniform on [2, 25]; the converter must invert it
    rng = np.random.default_rng(3)
    d = rng.uniform(2, 25, 20_000)
    s = -30 * np.log10(d / 2)
    f_d = DistanceCdf(rng.uniform(2, 25, 20_000))
    s10 = -30 * np.log10(10 / 2)
    assert cdf_convert(s10, EmpiricalCdf(s), f_d) == pytest.approx(10.0, abs=0.2)


def test_case3_uniform_close_to_ordering():
    rng = np.random.default_rng(4)
    m = 400
    d = rng.uniform(2, 25, m)
    rss = -30 * np.log10(d / 2)
    f_d = DistanceCdf(2 + 23 * (np.arange(1, 100_001) / 100_001))
    gap = np.abs(reconstruct_case3(rss, f_d) - order_estimate(rss, 2, 25))
    assert gap.max() <= 23 / (m + 1)


def test_reconstruct_aligned_to_input():
    f_d = DistanceCdf(np.linspace(2, 25, 500))
    out = reconstruct_case3([-5.0, -40.0, -20.0], f_d)
    assert out[0] < out[2] < out[1]
