"""Euler-Maruyama simulation of returns under multiplicative stochastic volatility.

    dx = sqrt(v) dW1
    dv = -gamma (v - theta) dt + kappa v dW2

with independent Wiener increments. The stationary variance law is inverse
gamma with shape ``alpha/theta + 1`` and scale ``alpha = 2 gamma theta / kappa^2``;
returns accumulated over ``tau`` days are then close to the Student-t law of
:class:`skewret.distributions.StudentTParams`.

Each path owns a random stream derived from ``(seed, path index)``, so results
do not depend on how paths are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, TextIO

import numba
import numpy as np
from scipy import stats

from .specfun import DomainError

Scheme = Literal["full-truncation", "reflection"]


class SimulationError(ArithmeticError):
    """A path produced non-finite values."""

    def __init__(self, message: str, step: int, path: int):
        super().__init__(message)
        self.step = step
        self.path = path


@dataclass(frozen=True)
class SdeConfig:
    """Coefficients and discretization of the variance/return system.

    ``n_steps`` counts all Euler steps including the ``burn_in`` ones; only
    post-burn-in steps are recorded, aggregated over blocks of ``record_every``
    steps (returns summed, variance sampled at the block end).
    """

    gamma: float
    theta: float
    kappa: float
    dt: float = 0.01
    n_steps: int = 80_000
    burn_in: int = 40_000
    n_paths: int = 100
    seed: int = 0
    positivity_scheme: Scheme = "full-truncation"
    record_every: int = 1
    v0: float | None = None

    def __post_init__(self) -> None:
        for name in ("gamma", "theta", "kappa", "dt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value!r}")
        if not (0 <= self.burn_in < self.n_steps):
            raise DomainError("need 0 <= burn_in < n_steps")
        if self.n_paths < 1 or self.record_every < 1:
            raise DomainError("n_paths and record_every must be >= 1")
        if (self.n_steps - self.burn_in) % self.record_every:
            raise DomainError("post-burn-in steps must be a multiple of record_every")
        if self.positivity_scheme not in ("full-truncation", "reflection"):
            raise DomainError(f"unknown positivity scheme {self.positivity_scheme!r}")
        if self.v0 is not None and not self.v0 > 0:
            raise DomainError("v0 must be positive")

    @property
    def alpha(self) -> float:
        return 2.0 * self.gamma * self.theta / self.kappa**2

    @property
    def steps_per_day(self) -> float:
        return 1.0 / self.dt

    @classmethod
    def from_alpha(
        cls,
        theta: float,
        alpha: float,
        gamma: float = 0.05,
        dt: float = 0.01,
        days: float | None = None,
        burn_in_days: float | None = None,
        **kwargs,
    ) -> SdeConfig:
        """Config whose ``kappa`` reproduces the composite parameter ``alpha``.

        Burn-in defaults to ``20 / gamma`` days; ``days`` is the recorded span
        (default: as long as the burn-in).
        """
        if not (theta > 0 and alpha > 0 and gamma > 0):
            raise DomainError("theta, alpha and gamma must be positive")
        kappa = math.sqrt(2.0 * gamma * theta / alpha)
        burn = round((20.0 / gamma if burn_in_days is None else burn_in_days) / dt)
        span = round((20.0 / gamma if days is None else days) / dt)
        return cls(gamma=gamma, theta=theta, kappa=kappa, dt=dt, n_steps=burn + span, burn_in=burn, **kwargs)


@dataclass
class PathEnsemble:
    """Recorded paths; rows are paths, columns are record blocks."""

    returns: np.ndarray
    variance: np.ndarray
    config: SdeConfig = field(repr=False)

    @property
    def record_dt(self) -> float:
        return self.config.dt * self.config.record_every


def path_generator(seed: int, path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(path,)))


@numba.njit(cache=True)
def _euler_chunk(v, z, acc, rets, var, step0, burn_in, record_every, gamma_dt, theta, noise, sdt, reflect):
    # Advances every path through z.shape[1] steps in place; returns the first
    # (path, step) with a non-finite variance, or (-1, -1).
    n, k = z.shape[0], z.shape[1]
    for i in range(n):
        vi = v[i]
        ai = acc[i]
        for j in range(k):
            vp = vi if reflect or vi > 0.0 else 0.0
            dx = math.sqrt(vp) * sdt * z[i, j, 0]
            vi = vi - gamma_dt * (vp - theta) + noise * vp * z[i, j, 1]
            if reflect:
                vi = abs(vi)
            if not math.isfinite(vi):
                return i, step0 + j
            s = step0 + j
            if s >= burn_in:
                ai += dx
                pos = s - burn_in + 1
                if pos % record_every == 0:
                    col = pos // record_every - 1
                    rets[i, col] = ai
                    var[i, col] = vi if vi > 0.0 else 0.0
                    ai = 0.0
        v[i] = vi
        acc[i] = ai
    return -1, -1


def _simulate_block(cfg: SdeConfig, first_path: int, n: int, chunk: int) -> tuple[np.ndarray, np.ndarray]:
    gens = [path_generator(cfg.seed, first_path + i) for i in range(n)]
    n_rec = (cfg.n_steps - cfg.burn_in) // cfg.record_every
    rets = np.zeros((n, n_rec))
    var = np.empty((n, n_rec))
    v = np.full(n, cfg.theta if cfg.v0 is None else cfg.v0)
    acc = np.zeros(n)
    sdt = math.sqrt(cfg.dt)
    reflect = cfg.positivity_scheme == "reflection"
    step = 0
    while step < cfg.n_steps:
        k = min(chunk, cfg.n_steps - step)
        z = np.stack([g.standard_normal((k, 2)) for g in gens])
        bad_path, bad_step = _euler_chunk(
            v, z, acc, rets, var, step, cfg.burn_in, cfg.record_every,
            cfg.gamma * cfg.dt, cfg.theta, cfg.kappa * sdt, sdt, reflect,
        )
        if bad_path >= 0:
            raise SimulationError(
                f"non-finite variance on path {first_path + bad_path} at step {bad_step}",
                step=int(bad_step),
                path=first_path + int(bad_path),
            )
        step += k
    return rets, var


def simulate(cfg: SdeConfig, block_paths: int = 4096, chunk_steps: int = 512) -> PathEnsemble:
    """Run the ensemble. ``block_paths``/``chunk_steps`` only trade memory for speed."""
    rets = []
    var = []
    for first in range(0, cfg.n_paths, block_paths):
        r, v = _simulate_block(cfg, first, min(block_paths, cfg.n_paths - first), chunk_steps)
        rets.append(r)
        var.append(v)
    return PathEnsemble(np.vstack(rets), np.vstack(var), cfg)


def stationary_variance_sample(ens: PathEnsemble, thinning: int = 1) -> np.ndarray:
    """Post-burn-in variance records, every ``thinning``-th one, pooled across paths."""
    if thinning < 1:
        raise DomainError("thinning must be >= 1")
    return ens.variance[:, thinning - 1 :: thinning].ravel()


def accumulated_returns(ens: PathEnsemble, tau_days: int, spacing: int = 1) -> np.ndarray:
    """Non-overlapping sums of return increments over ``tau_days``.

    ``spacing`` keeps every ``spacing``-th block per path, which thins the
    volatility-clustering dependence between retained sums.
    """
    per_day = 1.0 / ens.record_dt
    if tau_days < 1 or abs(per_day - round(per_day)) > 1e-9:
        raise DomainError("tau_days must be >= 1 and records must tile whole days")
    width = int(round(per_day)) * tau_days
    n_blocks = ens.returns.shape[1] // width
    if n_blocks < 1:
        raise DomainError(f"only {ens.returns.shape[1]} records post burn-in; need {width} for tau={tau_days}")
    sums = ens.returns[:, : n_blocks * width].reshape(ens.returns.shape[0], n_blocks, width).sum(axis=2)
    return sums[:, spacing - 1 :: spacing].ravel()


# --- stationary-law references -------------------------------------------------


def variance_law(theta: float, alpha: float):
    """Frozen inverse-gamma law of the stationary variance."""
    return stats.invgamma(alpha / theta + 1.0, scale=alpha)


def volatility_pdf(sigma, theta: float, alpha: float):
    """Density of sqrt(v): 2 sigma * IGa(sigma^2; alpha/theta + 1, alpha)."""
    sigma = np.asarray(sigma, dtype=float)
    return 2.0 * sigma * variance_law(theta, alpha).pdf(sigma**2)


def volatility_chi2(sigma: np.ndarray, theta: float, alpha: float, bins: int = 50) -> tuple[float, float]:
    """Chi-square statistic and p-value of a volatility sample vs its stationary law.

    Bins are equiprobable under the reference law.
    """
    law = variance_law(theta, alpha)
    edges = np.sqrt(law.ppf(np.linspace(0.0, 1.0, bins + 1)))
    counts, _ = np.histogram(sigma, bins=edges)
    expected = np.full(bins, len(sigma) / bins)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    return chi2, float(stats.chi2.sf(chi2, bins - 1))


def export_ensemble(ens: PathEnsemble, out: TextIO) -> None:
    """Write ``path,step,x,v`` rows; ``x`` is the cumulative recorded return."""
    out.write("path,step,x,v\n")
    x = np.cumsum(ens.returns, axis=1)
    for p in range(x.shape[0]):
        for s in range(x.shape[1]):
            out.write(f"{p},{s + 1},{float(x[p, s])!r},{float(ens.variance[p, s])!r}\n")
