"""Special functions and numeric primitives.

Log-gamma, the (regularized incomplete) beta function and its inverse, adaptive
quadrature on finite or infinite ranges, and a bracketed root finder. Everything
here is pure and vectorized where it matters for the distribution code.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize
from scipy import special as _special

_EPS = 4.0 * np.finfo(float).eps
_TINY = 1e-300


class DomainError(ValueError):
    """Argument outside the domain of a function or model."""


class ConvergenceError(RuntimeError):
    """An iterative method ran out of budget.

    The best estimate obtained so far is kept on ``best_estimate``.
    """

    def __init__(self, message: str, best_estimate: float | None = None):
        super().__init__(message)
        self.best_estimate = best_estimate


class BracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class BetaArgs:
    """Shape pair ``(a, b)`` of a beta law; unpacks as ``*shapes``."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0) or not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError(f"beta shapes must be positive and finite, got a={self.a}, b={self.b}")

    def __iter__(self) -> Iterator[float]:
        yield self.a
        yield self.b


def log_gamma(x):
    """ln Gamma(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma requires x > 0")
    out = _special.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_beta(a, b):
    """ln B(a, b)."""
    return _special.betaln(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def _check_shapes(a, b) -> None:
    if np.any(~(np.asarray(a) > 0)) or np.any(~(np.asarray(b) > 0)):
        raise DomainError("beta shapes must be positive")


def _betacf(x: np.ndarray, a: np.ndarray, b: np.ndarray, max_iter: int = 2000) -> np.ndarray:
    # Modified Lentz evaluation of the incomplete beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            return h
    raise ConvergenceError("incomplete beta continued fraction did not converge", float(np.ravel(h)[0]))


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta I(x; a, b).

    Continued fraction with the symmetry switch I(x; a, b) = 1 - I(1 - x; b, a)
    for x > a / (a + b). Accepts scalars or broadcastable arrays.
    """
    x, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, a, b)))
    if np.any(~((x >= 0) & (x <= 1))):
        raise DomainError("reg_inc_beta requires 0 <= x <= 1")
    _check_shapes(a, b)
    scalar = x.ndim == 0
    shape = x.shape
    x, a, b = (np.atleast_1d(v).astype(float).ravel() for v in (x, a, b))
    out = np.empty(x.shape)
    interior = (x > 0) & (x < 1)
    out[x <= 0] = 0.0
    out[x >= 1] = 1.0
    if np.any(interior):
        xi, ai, bi = x[interior], a[interior], b[interior]
        swap = xi > ai / (ai + bi)
        xs = np.where(swap, 1.0 - xi, xi)
        as_ = np.where(swap, bi, ai)
        bs = np.where(swap, ai, bi)
        log_front = as_ * np.log(xs) + bs * np.log1p(-xs) - _special.betaln(as_, bs)
        val = np.exp(log_front) * _betacf(xs, as_, bs) / as_
        out[interior] = np.where(swap, 1.0 - val, val)
    return float(out[0]) if scalar else out.reshape(shape)


def reg_inc_beta_upper(x, a, b):
    """1 - I(x; a, b), evaluated without cancellation for x near 1."""
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0) & (x <= 1))):
        raise DomainError("reg_inc_beta_upper requires 0 <= x <= 1")
    return reg_inc_beta(1.0 - x, b, a)


def inv_reg_inc_beta(p, a, b, tol: float = 1e-15, max_iter: int = 200):
    """Inverse of the regularized incomplete beta in its first argument.

    Newton steps safeguarded by bisection on a maintained bracket, so the
    iteration cannot leave [0, 1] and always makes progress.
    """
    p, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p, a, b)))
    if np.any(~((p >= 0) & (p <= 1))):
        raise DomainError("inv_reg_inc_beta requires 0 <= p <= 1")
    _check_shapes(a, b)
    scalar = p.ndim == 0
    shape = p.shape
    p, a, b = (np.atleast_1d(v).astype(float).ravel() for v in (p, a, b))
    lo = np.zeros_like(p)
    hi = np.ones_like(p)
    x = np.clip(a / (a + b), 1e-3, 1 - 1e-3)
    lbeta = _special.betaln(a, b)
    for _ in range(max_iter):
        f = reg_inc_beta(x, a, b) - p
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            logdens = (a - 1) * np.log(x) + (b - 1) * np.log1p(-x) - lbeta
            step = f / np.exp(logdens)
            x_new = x - step
        bad = ~np.isfinite(x_new) | (x_new <= lo) | (x_new >= hi)
        x_new = np.where(bad, 0.5 * (lo + hi), x_new)
        done = (np.abs(x_new - x) <= tol * np.maximum(x_new, 1e-300)) | (hi - lo <= tol * hi)
        x = x_new
        if np.all(done | (f == 0)):
            break
    x = np.where(p <= 0, 0.0, np.where(p >= 1, 1.0, x))
    return float(x[0]) if scalar else x.reshape(shape)


def integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    points: tuple[float, ...] = (),
    limit: int = 500,
) -> QuadratureResult:
    """Adaptive quadrature of ``f`` over ``[lo, hi]``; either end may be infinite.

    Infinite ranges go through QUADPACK's x -> (1 - t)/t substitution. ``points``
    are interior breakpoints (peaks, kinks); the range is split there so that
    narrow peaks in otherwise heavy-tailed integrands are not missed.
    """
    if not lo < hi:
        if lo == hi:
            return QuadratureResult(0.0, 0.0, 1)
        raise DomainError("integrate requires lo <= hi")
    cuts = sorted(p for p in points if lo < p < hi)
    edges = [lo, *cuts, hi]
    total = 0.0
    err = 0.0
    nev = 0
    for left, right in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _integrate.IntegrationWarning)
            out = _integrate.quad(f, left, right, epsabs=tol, epsrel=tol, limit=limit, full_output=1)
        val, e, info = out[:3]
        if len(out) > 3:
            # QUADPACK flagged a problem (ier > 0); out[3] is its message
            raise ConvergenceError(f"quadrature on [{left}, {right}] failed: {out[3]}", total + val)
        total += val
        err += e
        nev += int(info["neval"])
    return QuadratureResult(float(total), float(abs(err)), max(nev, 1))


def find_root(
    f: Callable[[float], float], bracket: tuple[float, float], tol: float = 1e-14, max_iter: int = 500
) -> float:
    """Root of ``f`` inside ``bracket`` (Brent: inverse interpolation with bisection fallback)."""
    lo, hi = bracket
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")
    try:
        return float(_optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=max_iter))
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from None


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Maximizer of a unimodal ``f`` on ``[lo, hi]`` by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def grid_argmax(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, tol: float, n: int = 401) -> float:
    """Coarse grid search followed by golden-section refinement around the best node."""
    grid = np.linspace(lo, hi, n)
    vals = f(grid)
    k = int(np.argmax(vals))
    left = grid[max(k - 1, 0)]
    right = grid[min(k + 1, n - 1)]
    return golden_max(lambda t: float(f(np.asarray([t]))[0]), left, right, tol)
