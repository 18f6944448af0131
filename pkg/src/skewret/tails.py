"""Tail diagnostics for empirical CCDFs.

Log-log least-squares tail exponents (plus a Hill estimate for comparison),
binomial confidence bands around a reference CCDF, and order-statistic
p-values that flag Dragon Kings (p < 0.05) and negative Dragon Kings
(p > 0.95) among the largest observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import stats

from .data import DataError, Side, empirical_ccdf

Flag = Literal["none", "dragon-king", "negative-dragon-king"]

MIN_TAIL = 10
TIE_STEP = 1e-12


class TailError(ValueError):
    """Too few or degenerate tail points."""


@dataclass(frozen=True)
class TailSelection:
    side: Side
    threshold: float
    x: np.ndarray
    ccdf: np.ndarray
    n_total: int

    @property
    def n_tail(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    slope_stderr: float

    def ccdf(self, x):
        """The fitted law ``exp(intercept) * x**slope``."""
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


@dataclass(frozen=True)
class CIBand:
    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    inside: np.ndarray
    zero_model_flags: np.ndarray

    @property
    def coverage(self) -> float:
        return float(np.mean(self.inside))


@dataclass(frozen=True)
class UTestResult:
    ranks: np.ndarray
    x: np.ndarray
    statistic: np.ndarray
    p_values: np.ndarray
    flags: list[Flag] = field(default_factory=list)


@dataclass
class TailReport:
    side: Side
    threshold: float
    n_tail: int
    n_total: int
    slope: float
    intercept: float
    slope_stderr: float
    hill_exponent: float
    points: np.ndarray
    ccdf: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    p_values: np.ndarray
    dragon_king_flags: list[Flag]
    overlays: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "threshold": self.threshold,
            "n_tail": self.n_tail,
            "n_total": self.n_total,
            "slope": self.slope,
            "intercept": self.intercept,
            "slope_stderr": self.slope_stderr,
            "hill_exponent": self.hill_exponent,
            "ci_coverage": float(np.mean((self.ccdf >= self.ci_lower) & (self.ccdf <= self.ci_upper))),
            "dragon_kings": [int(r) for r, f in enumerate(self.dragon_king_flags, 1) if f == "dragon-king"],
            "negative_dragon_kings": [
                int(r) for r, f in enumerate(self.dragon_king_flags, 1) if f == "negative-dragon-king"
            ],
            "overlays": {
                name: {k: v for k, v in ov.items() if not isinstance(v, np.ndarray)} for name, ov in self.overlays.items()
            },
        }

    def rows(self) -> list[dict]:
        """Per-point table, largest magnitude first (rank 1)."""
        order = np.argsort(-self.points, kind="stable")
        out = []
        for rank, i in enumerate(order, 1):
            row = {
                "rank": rank,
                "x": float(self.points[i]),
                "ccdf": float(self.ccdf[i]),
                "fit_ccdf": float(math.exp(self.intercept) * self.points[i] ** self.slope),
                "ci_lower": float(self.ci_lower[i]),
                "ci_upper": float(self.ci_upper[i]),
                "p_value": float(self.p_values[rank - 1]) if rank <= len(self.p_values) else math.nan,
                "flag": self.dragon_king_flags[rank - 1] if rank <= len(self.dragon_king_flags) else "none",
            }
            for name, ov in self.overlays.items():
                row[f"{name}_ccdf"] = float(ov["ccdf"][i])
                row[f"{name}_ci_lower"] = float(ov["ci_lower"][i])
                row[f"{name}_ci_upper"] = float(ov["ci_upper"][i])
                row[f"{name}_p_value"] = float(ov["p_values"][rank - 1])
            out.append(row)
        return out


def select_tail(x: np.ndarray, ccdf: np.ndarray, side: Side, fraction: float, n_total: int) -> TailSelection:
    """Keep the CCDF points with ``ccdf <= fraction``."""
    if not (0.0 < fraction <= 1.0):
        raise TailError("fraction must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    ccdf = np.asarray(ccdf, dtype=float)
    order = np.argsort(x, kind="stable")
    x, ccdf = x[order], ccdf[order]
    keep = ccdf <= fraction * (1.0 + 1e-12)
    if np.count_nonzero(keep) < MIN_TAIL:
        raise TailError(f"only {np.count_nonzero(keep)} {side} points with ccdf <= {fraction}; need {MIN_TAIL}")
    return TailSelection(side=side, threshold=float(x[keep][0]), x=x[keep], ccdf=ccdf[keep], n_total=int(n_total))


def tail_from_increments(increments: np.ndarray, side: Side, fraction: float = 0.01) -> TailSelection:
    inc = np.asarray(increments, dtype=float)
    try:
        x, c = empirical_ccdf(inc, side)
    except DataError as exc:
        raise TailError(str(exc)) from None
    return select_tail(x, c, side, fraction, len(inc))


def fit_powerlaw(sel: TailSelection) -> PowerLawFit:
    """Ordinary least squares of ln(ccdf) on ln(x)."""
    if sel.n_tail < MIN_TAIL:
        raise TailError(f"need at least {MIN_TAIL} tail points")
    lx = np.log(sel.x)
    if np.ptp(lx) == 0:
        raise TailError("all tail points share one magnitude")
    res = stats.linregress(lx, np.log(sel.ccdf))
    return PowerLawFit(float(res.slope), float(res.intercept), float(res.stderr))


def hill_exponent(sel: TailSelection) -> float:
    """Maximum-likelihood (Hill) CCDF exponent above the selection threshold.

    A diagnostic alongside the least-squares slope, not a replacement for it.
    """
    logs = np.log(sel.x / sel.threshold)
    total = logs.sum()
    if total <= 0:
        raise TailError("degenerate tail for the Hill estimator")
    return -float((sel.n_tail - 1) / total)


def binomial_ci_band(sel: TailSelection, model_ccdf: Callable[[np.ndarray], np.ndarray], level: float = 0.95) -> CIBand:
    """Central binomial quantile band for the empirical CCDF under ``model_ccdf``.

    With exceedance probability ``q`` at a point and ``n`` observations in
    total, the count of exceedances is Binomial(n, q); the band is
    ``[k_lo/n, k_hi/n]`` with ``k_lo, k_hi`` its (1 -/+ level)/2 quantiles.
    """
    if not (0.0 < level < 1.0):
        raise TailError("level must lie in (0, 1)")
    n = sel.n_total
    q = np.clip(np.asarray(model_ccdf(sel.x), dtype=float), 0.0, 1.0)
    k_lo = np.clip(stats.binom.ppf(0.5 * (1.0 - level), n, q), 0, n)
    k_hi = np.clip(stats.binom.ppf(0.5 * (1.0 + level), n, q), 0, n)
    lower, upper = k_lo / n, k_hi / n
    inside = (sel.ccdf >= lower) & (sel.ccdf <= upper)
    zero_flags = (q <= 0.0) & (sel.ccdf > 0.0)
    return CIBand(q=q, lower=lower, upper=upper, inside=inside, zero_model_flags=zero_flags)


def _flags(p: np.ndarray, low: float, high: float) -> list[Flag]:
    return ["dragon-king" if v < low else "negative-dragon-king" if v > high else "none" for v in p]


def log_spacings(x: np.ndarray) -> np.ndarray:
    """Normalized spacings ``k (ln x_(k) - ln x_(k+1))`` of descending order statistics.

    Tied magnitudes are separated by ``TIE_STEP`` in log space, from the
    smallest upward, so every spacing stays finite and positive.
    """
    lx = np.sort(np.log(np.asarray(x, dtype=float)))[::-1].copy()
    for k in range(len(lx) - 2, -1, -1):
        if lx[k] <= lx[k + 1]:
            lx[k] = lx[k + 1] + TIE_STEP
    k = np.arange(1, len(lx))
    return k * (lx[:-1] - lx[1:])


def u_test_pvalues(
    sel: TailSelection,
    exponent: float,
    method: Literal["ratio", "known"] = "ratio",
    low: float = 0.05,
    high: float = 0.95,
) -> UTestResult:
    """Per-rank outlier p-values from Renyi log-spacings under a Pareto tail.

    Under a Pareto tail with CCDF exponent ``exponent`` the spacings
    ``Y_k`` are i.i.d. exponential with rate ``|exponent|``.

    ``method="ratio"`` (default) compares ``Y_r`` with the mean ``S/m`` of the
    other ``m`` spacings; ``Y_r / (S/m)`` is F(2, 2m) distributed, so the
    p-value is ``(1 + t/m)**-m``. It does not depend on the exponent, which is
    only validated. ``method="known"`` uses ``exp(-|exponent| Y_r)`` directly.
    Rank 1 is the largest observation; there are ``n_tail - 1`` ranks.
    """
    if not exponent < 0:
        raise TailError("exponent must be negative")
    if sel.n_tail < MIN_TAIL:
        raise TailError(f"need at least {MIN_TAIL} tail points")
    y = log_spacings(sel.x)
    xs = np.sort(sel.x)[::-1][: len(y)]
    if method == "ratio":
        m = len(y) - 1
        others = (y.sum() - y) / m
        t = y / others
        p = np.exp(-m * np.log1p(t / m))
    elif method == "known":
        t = y
        p = np.exp(-abs(exponent) * y)
    else:
        raise TailError(f"unknown method {method!r}")
    return UTestResult(np.arange(1, len(y) + 1), xs, t, p, _flags(p, low, high))


def order_statistic_pvalues(
    sel: TailSelection,
    model_ccdf: Callable[[np.ndarray], np.ndarray],
    low: float = 0.05,
    high: float = 0.95,
) -> UTestResult:
    """P(X_(r) >= observed) for the r-th largest of ``n_total`` draws from a model.

    The r-th largest exceeds ``x`` exactly when at least ``r`` draws do, so the
    p-value is the Binomial(n_total, ccdf(x)) upper tail at ``r``.
    """
    xs = np.sort(sel.x)[::-1]
    ranks = np.arange(1, len(xs) + 1)
    q = np.clip(np.asarray(model_ccdf(xs), dtype=float), 0.0, 1.0)
    p = stats.binom.sf(ranks - 1, sel.n_total, q)
    return UTestResult(ranks, xs, q, p, _flags(p, low, high))


def tail_report(
    increments: np.ndarray,
    side: Side,
    fraction: float = 0.01,
    level: float = 0.95,
    models: dict[str, Callable[[np.ndarray], np.ndarray]] | None = None,
) -> TailReport:
    """Linear fit, its confidence band and spacing p-values, plus model overlays.

    Each entry of ``models`` maps a name to a CCDF on this side's magnitudes;
    its band and order-statistic p-values are attached as an overlay.
    """
    sel = tail_from_increments(increments, side, fraction)
    fit = fit_powerlaw(sel)
    band = binomial_ci_band(sel, fit.ccdf, level)
    ut = u_test_pvalues(sel, fit.slope if fit.slope < 0 else -1e-12)
    report = TailReport(
        side=side,
        threshold=sel.threshold,
        n_tail=sel.n_tail,
        n_total=sel.n_total,
        slope=fit.slope,
        intercept=fit.intercept,
        slope_stderr=fit.slope_stderr,
        hill_exponent=hill_exponent(sel),
        points=sel.x,
        ccdf=sel.ccdf,
        ci_lower=band.lower,
        ci_upper=band.upper,
        p_values=ut.p_values,
        dragon_king_flags=ut.flags,
    )
    for name, ccdf in (models or {}).items():
        mb = binomial_ci_band(sel, ccdf, level)
        mp = order_statistic_pvalues(sel, ccdf)
        report.overlays[name] = {
            "ccdf": mb.q,
            "ci_lower": mb.lower,
            "ci_upper": mb.upper,
            "p_values": mp.p_values,
            "coverage": mb.coverage,
            "dragon_kings": [int(r) for r, f in zip(mp.ranks, mp.flags) if f == "dragon-king"],
            "negative_dragon_kings": [int(r) for r, f in zip(mp.ranks, mp.flags) if f == "negative-dragon-king"],
        }
    return report
