import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from skewret import data


def _csv(text: str) -> io.StringIO:
    return io.StringIO(text)


def test_load_prices_with_header_sorted():
    ps = data.load_prices(_csv("Date,Open,Close\n2020-01-03,1,101\n2020-01-02,1,100\n2020-01-06,1,102\n"))
    assert [d.isoformat() for d in ps.dates] == ["2020-01-02", "2020-01-03", "2020-01-06"]
    np.testing.assert_array_equal(ps.close, [100.0, 101.0, 102.0])


def test_load_prices_custom_columns_and_delimiter():
    text = "day;px\n2021-05-03;10\n2021-05-04;11\n"
    ps = data.load_prices(_csv(text), date_col="day", price_col="px")
    assert len(ps) == 2 and ps.close[1] == 11.0


def test_load_prices_headerless():
    ps = data.load_prices(_csv("2020-01-02,100\n2020-01-03,99.5\n"))
    assert ps.close.tolist() == [100.0, 99.5]


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("date,close\n2020-01-02,100\n2020-01-02,101\n", "line 3: duplicate"),
        ("date,close\n2020-01-02,100\n2020-01-03,-1\n", "line 3: non-positive"),
        ("date,close\n2020-01-02,100\n2020-01-03,abc\n", "line 3: cannot parse"),
        ("foo,bar\n1,2\n", "line 1"),
        ("", "empty"),
        ("date,close\n2020-01-02,100\n", "at least two"),
    ],
)
def test_load_prices_errors(text, fragment):
    with pytest.raises(data.DataError, match=fragment):
        data.load_prices(_csv(text))


def _series(close):
    import datetime as dt

    d0 = dt.date(2001, 1, 1)
    return data.PriceSeries(tuple(d0 + dt.timedelta(days=i) for i in range(len(close))), np.asarray(close, float))


def test_detrend_removes_pure_exponential_growth():
    close = 50.0 * np.exp(0.001 * np.arange(200))
    rs = data.detrend(_series(close))
    assert rs.mu1 == pytest.approx(0.001, rel=1e-10)
    np.testing.assert_allclose(rs.x, 0.0, atol=1e-12)


def test_detrended_increments_have_zero_trend():
    rng = np.random.default_rng(1)
    close = 100 * np.exp(np.cumsum(rng.normal(5e-4, 0.01, 1000)))
    rs = data.detrend(_series(close))
    t = np.arange(len(rs.x))
    assert abs(np.polyfit(t, rs.x, 1)[0]) < 1e-14
    assert len(rs.dx) == 999


def test_daily_increments_aggregation():
    dx = np.arange(10.0)
    np.testing.assert_array_equal(data.daily_increments(dx, 1), dx)
    np.testing.assert_array_equal(data.daily_increments(dx, 3), [3.0, 12.0, 21.0])
    with pytest.raises(data.DataError):
        data.daily_increments(dx, 11)
    with pytest.raises(data.DataError):
        data.daily_increments(dx, 0)


def test_empirical_stats_basic():
    x = np.array([-2.0, -1.0, 0.0, 1.0, 2.0] * 10)
    s = data.empirical_stats(x)
    assert s.m1 == 0.0
    assert s.m2 == pytest.approx(2.0)
    assert s.median == 0.0
    assert (s.n_gains, s.n_losses) == (30, 20)
    assert s.w_g + s.w_l == 1.0
    with pytest.raises(data.DataError):
        data.empirical_stats(x[:10])


def test_kde_mode_of_normal_sample():
    x = np.random.default_rng(2).normal(0.3, 1.0, 20000)
    assert data.kde_mode(x) == pytest.approx(0.3, abs=0.08)


def test_empirical_ccdf_conventions():
    x = np.array([-3.0, -1.0, 0.0, 1.0, 2.0, 2.0, 5.0])
    mags, cc = data.empirical_ccdf(x, "gains")
    np.testing.assert_array_equal(mags, [1.0, 2.0, 2.0, 5.0])
    np.testing.assert_allclose(cc, np.array([4, 3, 3, 1]) / 7)
    mags, cc = data.empirical_ccdf(x, "losses")
    np.testing.assert_array_equal(mags, [1.0, 3.0])
    np.testing.assert_allclose(cc, np.array([2, 1]) / 7)
    assert data.ccdf_at(x, 2.0, "gains") == pytest.approx(1 / 7)
    assert data.ccdf_at(x, 0.5, "losses") == pytest.approx(2 / 7)
    with pytest.raises(data.DataError):
        data.empirical_ccdf(np.array([1.0, 2.0]), "losses")


@given(st.lists(st.floats(-1.0, 1.0).filter(lambda v: v != 0.0), min_size=1, max_size=60))
def test_empirical_ccdf_is_nonincreasing_in_unit_interval(xs):
    x = np.array(xs)
    for side in ("gains", "losses"):
        if not np.any(x > 0 if side == "gains" else x < 0):
            continue
        mags, cc = data.empirical_ccdf(x, side)
        assert np.all(np.diff(mags) >= 0)
        assert np.all(np.diff(cc) <= 0)
        assert np.all((cc > 0) & (cc <= 1))
        assert math.isclose(cc[-1] * len(x), np.count_nonzero(mags == mags[-1]))
