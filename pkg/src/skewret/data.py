"""Price ingestion, detrending and empirical statistics of daily increments."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from typing import Literal, TextIO

import numpy as np

from . import specfun

Side = Literal["gains", "losses"]


class DataError(ValueError):
    """Malformed or insufficient input data."""


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple[dt.date, ...]
    close: np.ndarray

    def __post_init__(self) -> None:
        if len(self.dates) != len(self.close):
            raise DataError("dates and prices differ in length")
        if len(self.close) < 2:
            raise DataError("a price series needs at least two rows")
        if any(b <= a for a, b in zip(self.dates[:-1], self.dates[1:])):
            raise DataError("dates must be strictly increasing")
        if np.any(~(np.asarray(self.close) > 0)):
            raise DataError("prices must be positive")

    def __len__(self) -> int:
        return len(self.close)


@dataclass(frozen=True)
class ReturnSeries:
    r: np.ndarray
    mu1: float
    x: np.ndarray

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.x)


@dataclass(frozen=True)
class EmpiricalStats:
    m1: float
    m2: float
    median: float
    mode_smoothed: float
    w_g: float
    w_l: float
    n_gains: int
    n_losses: int


def load_prices(source: TextIO, date_col: str = "date", price_col: str = "close") -> PriceSeries:
    """Read a delimited ``date,close`` table (ISO dates). Rows are sorted by date.

    A header row naming the columns is used when present; otherwise the first
    two columns are taken as date and price. Column matching ignores case.
    """
    text = source.read()
    try:
        dialect = csv.Sniffer().sniff(text.splitlines()[0] if text else ",", delimiters=",;\t")
    except csv.Error:
        dialect = csv.excel
    rows = list(csv.reader(text.splitlines(), dialect))
    if not rows:
        raise DataError("empty price file")
    header = [h.strip().lower() for h in rows[0]]
    if date_col.lower() in header and price_col.lower() in header:
        di, pi = header.index(date_col.lower()), header.index(price_col.lower())
        body = enumerate(rows[1:], start=2)
    else:
        try:
            dt.date.fromisoformat(rows[0][0].strip())
        except (ValueError, IndexError):
            raise DataError(f"line 1: columns {date_col!r}/{price_col!r} not found in header {rows[0]}") from None
        di, pi = 0, 1
        body = enumerate(rows, start=1)
    records: dict[dt.date, float] = {}
    for lineno, row in body:
        if not row or all(not c.strip() for c in row):
            continue
        try:
            day = dt.date.fromisoformat(row[di].strip()[:10])
            price = float(row[pi])
        except (ValueError, IndexError):
            raise DataError(f"line {lineno}: cannot parse {row!r}") from None
        if not (math.isfinite(price) and price > 0):
            raise DataError(f"line {lineno}: non-positive price {price!r}")
        if day in records:
            raise DataError(f"line {lineno}: duplicate date {day.isoformat()}")
        records[day] = price
    days = sorted(records)
    return PriceSeries(tuple(days), np.array([records[d] for d in days]))


def detrend(prices: PriceSeries) -> ReturnSeries:
    """Remove the least-squares linear drift of log cumulative returns.

    Time is the trading-day index 0..n-1, so ``mu1`` is a drift per trading day.
    """
    if len(prices) < 3:
        raise DataError("detrending needs at least three prices")
    close = np.asarray(prices.close, dtype=float)
    r = np.log(close / close[0])
    t = np.arange(len(r), dtype=float)
    tc = t - t.mean()
    mu1 = float(np.dot(tc, r - r.mean()) / np.dot(tc, tc))
    return ReturnSeries(r=r, mu1=mu1, x=r - mu1 * t)


def daily_increments(series: ReturnSeries | np.ndarray, tau: int = 1) -> np.ndarray:
    """Non-overlapping ``tau``-day sums of detrended daily increments."""
    dx = series.dx if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float)
    if tau < 1:
        raise DataError("tau must be >= 1")
    n = len(dx) // tau
    if n < 1:
        raise DataError(f"tau={tau} exceeds the {len(dx)} available increments")
    return dx[: n * tau].reshape(n, tau).sum(axis=1)


def silverman_bandwidth(x: np.ndarray) -> float:
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) or sd
    return 0.9 * spread * len(x) ** (-0.2)


def kde_mode(x: np.ndarray, bandwidth: float | None = None) -> float:
    """Argmax of a Gaussian kernel density estimate.

    Only points within 8 bandwidths contribute to each evaluation, which keeps
    large samples cheap without changing the estimate beyond ~1e-14.
    """
    xs = np.sort(np.asarray(x, dtype=float))
    h = silverman_bandwidth(xs) if bandwidth is None else float(bandwidth)
    if not h > 0:
        return float(np.median(xs))

    def density(t: np.ndarray) -> np.ndarray:
        t = np.atleast_1d(t)
        lo = np.searchsorted(xs, t - 8 * h)
        hi = np.searchsorted(xs, t + 8 * h)
        out = np.empty(len(t))
        for k, (tk, a, b) in enumerate(zip(t, lo, hi)):
            u = (xs[a:b] - tk) / h
            out[k] = np.exp(-0.5 * u * u).sum()
        return out

    q_lo, q_hi = np.percentile(xs, [25, 75])
    return specfun.grid_argmax(density, q_lo, q_hi, tol=1e-6 * h, n=201)


def empirical_stats(increments: np.ndarray, bandwidth: float | None = None) -> EmpiricalStats:
    """Moments (population variance), median, smoothed mode and gain/loss split.

    Zero increments count as gains.
    """
    x = np.asarray(increments, dtype=float)
    n = len(x)
    if n < 30:
        raise DataError(f"need at least 30 increments, got {n}")
    n_gains = int(np.count_nonzero(x >= 0))
    n_losses = n - n_gains
    return EmpiricalStats(
        m1=float(x.mean()),
        m2=float(x.var()),
        median=float(np.median(x)),
        mode_smoothed=kde_mode(x, bandwidth),
        w_g=n_gains / n,
        w_l=n_losses / n,
        n_gains=n_gains,
        n_losses=n_losses,
    )


def _magnitudes(x: np.ndarray, side: Side) -> np.ndarray:
    if side == "gains":
        return x[x > 0]
    if side == "losses":
        return -x[x < 0]
    raise DataError(f"side must be 'gains' or 'losses', got {side!r}")


def empirical_ccdf(increments: np.ndarray, side: Side) -> tuple[np.ndarray, np.ndarray]:
    """Exceedance table ``(x, P(|move| >= x on this side))`` at the observed magnitudes.

    Magnitudes are sorted ascending and probabilities use the total sample size
    as denominator, so the two sides are on the same footing as the model CCDFs.
    Evaluating at the points themselves (``>=``) keeps every value in (0, 1].
    """
    x = np.asarray(increments, dtype=float)
    mags = np.sort(_magnitudes(x, side))
    if len(mags) == 0:
        raise DataError(f"no {side} in the sample")
    n = len(x)
    # count of magnitudes >= mags[i], ties share the largest count
    ge = len(mags) - np.searchsorted(mags, mags, side="left")
    return mags, ge / n


def ccdf_at(increments: np.ndarray, x: float, side: Side) -> float:
    """Strict exceedance fraction: ``#(inc > x) / n`` for gains, ``#(inc < -x) / n`` for losses."""
    inc = np.asarray(increments, dtype=float)
    mags = _magnitudes(inc, side)
    return float(np.count_nonzero(mags > x)) / len(inc)
