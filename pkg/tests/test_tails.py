import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from skewret import tails


def pareto(n, exponent, rng, xmin=1.0):
    return xmin * rng.random(n) ** (-1.0 / exponent)


def test_powerlaw_fit_on_pareto():
    x = pareto(200_000, 3.0, np.random.default_rng(5))
    sel = tails.tail_from_increments(x, "gains", fraction=0.05)
    fit = tails.fit_powerlaw(sel)
    assert fit.slope == pytest.approx(-3.0, abs=0.1)
    assert tails.hill_exponent(sel) == pytest.approx(-3.0, abs=0.1)
    assert fit.ccdf(sel.threshold) == pytest.approx(np.exp(fit.intercept) * sel.threshold**fit.slope)


def test_select_tail_checks():
    x = np.arange(1.0, 101.0)
    cc = 1.0 - (x - 1) / 100
    sel = tails.select_tail(x, cc, "gains", 0.2, 100)
    assert sel.n_tail == 20 and sel.threshold == 81.0
    with pytest.raises(tails.TailError):
        tails.select_tail(x, cc, "gains", 0.05, 100)
    with pytest.raises(tails.TailError):
        tails.select_tail(x, cc, "gains", 1.5, 100)
    with pytest.raises(tails.TailError):
        tails.tail_from_increments(np.arange(1.0, 20.0), "losses")


@given(st.floats(1e-3, 1e3))
def test_slope_and_pvalues_scale_invariant(c):
    x = pareto(2000, 2.5, np.random.default_rng(9))
    a = tails.tail_from_increments(x, "gains", 0.05)
    b = tails.tail_from_increments(c * x, "gains", 0.05)
    assert tails.fit_powerlaw(a).slope == pytest.approx(tails.fit_powerlaw(b).slope, rel=1e-9)
    pa = tails.u_test_pvalues(a, -2.5).p_values
    pb = tails.u_test_pvalues(b, -2.5).p_values
    np.testing.assert_allclose(pa, pb, rtol=1e-6, atol=1e-12)


def test_band_limits_and_monotone_width():
    x = np.linspace(1, 2, 20)
    widths = []
    for n in (100, 1_000, 10_000, 100_000):
        sel = tails.TailSelection("gains", 1.0, x, np.full(20, 0.01), n)
        band = tails.binomial_ci_band(sel, lambda t: np.full_like(t, 0.01), 0.95)
        widths.append(float(np.mean(band.upper - band.lower)))
    assert all(a >= b for a, b in zip(widths, widths[1:]))
    sel = tails.TailSelection("gains", 1.0, x, np.full(20, 0.01), 20)
    wide = tails.binomial_ci_band(sel, lambda t: np.full_like(t, 0.3), 1 - 1e-12)
    np.testing.assert_allclose(wide.lower, 0.0)
    np.testing.assert_allclose(wide.upper, 1.0)
    zero = tails.binomial_ci_band(sel, lambda t: np.zeros_like(t), 0.95)
    assert zero.zero_model_flags.all()
    with pytest.raises(tails.TailError):
        tails.binomial_ci_band(sel, lambda t: t, 1.0)


def test_band_coverage_under_model_null():
    rng = np.random.default_rng(21)
    cover = []
    for _ in range(40):
        x = pareto(20_000, 3.0, rng)
        sel = tails.tail_from_increments(x, "gains", 0.01)
        band = tails.binomial_ci_band(sel, lambda t: t**-3.0, 0.95)
        cover.append(band.coverage)
    assert 0.90 < np.mean(cover) < 0.99


def test_log_spacings_ties_are_finite():
    y = tails.log_spacings(np.array([5.0, 5.0, 3.0, 2.0, 2.0, 1.0]))
    assert np.all(np.isfinite(y)) and np.all(y > 0)
    assert len(y) == 5


def test_u_test_calibration_rank1_uniform():
    rng = np.random.default_rng(33)
    p1 = [tails.u_test_pvalues(tails.tail_from_increments(pareto(400, 3.0, rng), "gains", 0.1), -3.0).p_values[0]
          for _ in range(300)]
    assert stats.kstest(p1, "uniform").pvalue > 0.01


def test_u_test_detects_dragon_king_and_negative():
    rng = np.random.default_rng(8)
    hits, neg = 0, []
    for _ in range(50):
        x = np.sort(pareto(2000, 3.0, rng))
        big = x.copy()
        big[-1] *= 10
        res = tails.u_test_pvalues(tails.tail_from_increments(big, "gains", 0.05), -3.0)
        hits += res.flags[0] == "dragon-king"
        tied = x.copy()
        tied[-1] = tied[-2]
        neg.append(tails.u_test_pvalues(tails.tail_from_increments(tied, "gains", 0.05), -3.0).p_values[0])
    assert hits >= 45
    assert np.median(neg) > 0.95


def test_u_test_known_method_and_errors():
    sel = tails.tail_from_increments(pareto(3000, 3.0, np.random.default_rng(2)), "gains", 0.05)
    res = tails.u_test_pvalues(sel, -3.0, method="known")
    np.testing.assert_allclose(res.p_values, np.exp(-3.0 * res.statistic))
    with pytest.raises(tails.TailError):
        tails.u_test_pvalues(sel, 1.0)
    with pytest.raises(tails.TailError):
        tails.u_test_pvalues(sel, -3.0, method="bogus")


def test_order_statistic_pvalues_uniform_for_maximum():
    rng = np.random.default_rng(4)
    p = []
    for _ in range(300):
        x = pareto(1000, 3.0, rng)
        sel = tails.tail_from_increments(x, "gains", 0.05)
        p.append(tails.order_statistic_pvalues(sel, lambda t: t**-3.0).p_values[0])
    # the maximum's p-value is continuous and uniform under the model
    assert stats.kstest(p, "uniform").pvalue > 0.01


def test_tail_report_document_and_rows():
    rng = np.random.default_rng(12)
    x = np.concatenate([pareto(5000, 3.0, rng), -pareto(5000, 3.0, rng)])
    rep = tails.tail_report(x, "losses", 0.01, 0.95, models={"pareto": lambda t: 0.5 * t**-3.0})
    doc = rep.to_dict()
    assert doc["side"] == "losses" and doc["n_total"] == 10_000 and doc["n_tail"] == rep.n_tail
    assert "pareto" in doc["overlays"] and 0 <= doc["overlays"]["pareto"]["coverage"] <= 1
    rows = rep.rows()
    assert rows[0]["rank"] == 1 and rows[0]["x"] == max(r["x"] for r in rows)
    assert {"pareto_ccdf", "pareto_p_value", "ci_lower", "flag"} <= set(rows[0])
