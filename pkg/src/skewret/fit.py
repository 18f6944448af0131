"""Maximum-likelihood (optionally MAP) fitting of the return distributions.

Parameters are optimized in an unconstrained space: logs of every positive
parameter and ``mu`` in units of the sample standard deviation. ``tau`` is held
at 1 and the half Student-t gain weight at the empirical gain fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy import optimize

from . import distributions as dist
from .distributions import HalfStudentTParams, MJF1Params, MJF2Params, Model, StudentTParams
from .specfun import DomainError

Optimizer = Literal["simplex", "quasi-newton"]

PARAM_COUNT = {"student": 2, "half-student": 4, "mjf1": 4, "mjf2": 5}


class FitError(RuntimeError):
    """Fitting failed; ``best`` holds the best result seen, if any."""

    def __init__(self, message: str, best: FitResult | None = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class FitConfig:
    model: str
    initial: Model | None = None
    optimizer: Optimizer = "simplex"
    max_iterations: int = 4000
    tolerance: float = 1e-7
    restarts: int = 8
    prior: tuple[Sequence[float], Sequence[float]] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.model not in PARAM_COUNT:
            raise DomainError(f"unknown model {self.model!r}")
        if self.max_iterations < 1 or self.restarts < 1 or not self.tolerance > 0:
            raise DomainError("max_iterations and restarts must be >= 1, tolerance > 0")
        if self.optimizer not in ("simplex", "quasi-newton"):
            raise DomainError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class FitResult:
    model: str
    params: Model
    log_likelihood: float
    converged: bool
    iterations: int
    restarts_used: int
    n_obs: int
    condition_notes: str = ""
    objective: float = field(default=math.nan, repr=False)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": dist.params_to_dict(self.params),
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "iterations": self.iterations,
            "restarts_used": self.restarts_used,
            "n_obs": self.n_obs,
            "condition_notes": self.condition_notes,
        }


class LikelihoodError(ArithmeticError):
    pass


def neg_log_likelihood(model: Model, increments: np.ndarray) -> float:
    """-sum log f(x_i); raises if any term is not finite."""
    x = np.asarray(increments, dtype=float)
    if x.size == 0:
        raise DomainError("need at least one observation")
    lp = np.atleast_1d(dist.log_pdf(model, x))
    bad = ~np.isfinite(lp)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise LikelihoodError(f"log density not finite at x[{i}] = {x[i]!r}")
    return -float(lp.sum())


# --- transforms -------------------------------------------------------------------


class _Space:
    """Maps between unconstrained vectors and typed parameters for one model."""

    def __init__(self, model: str, sd: float, w_g: float):
        self.model = model
        self.sd = sd
        self.w_g = w_g

    def to_params(self, u: np.ndarray) -> Model:
        e = np.exp(np.clip(u, -700, 700))
        if self.model == "student":
            return StudentTParams(theta=e[0], alpha=e[1])
        if self.model == "half-student":
            return HalfStudentTParams(theta_g=e[0], theta_l=e[1], alpha_g=e[2], alpha_l=e[3], w_g=self.w_g)
        if self.model == "mjf1":
            return MJF1Params(theta=e[0], alpha_g=e[1], alpha_l=e[2], mu=float(u[3]) * self.sd)
        return MJF2Params(theta_g=e[0], theta_l=e[1], alpha_g=e[2], alpha_l=e[3], mu=float(u[4]) * self.sd)

    def from_params(self, p: Model) -> np.ndarray:
        if isinstance(p, StudentTParams):
            return np.log([p.theta, p.alpha])
        if isinstance(p, HalfStudentTParams):
            return np.log([p.theta_g, p.theta_l, p.alpha_g, p.alpha_l])
        if isinstance(p, MJF1Params):
            return np.array([math.log(p.theta), math.log(p.alpha_g), math.log(p.alpha_l), p.mu / self.sd])
        if isinstance(p, MJF2Params):
            return np.array(
                [math.log(p.theta_g), math.log(p.theta_l), math.log(p.alpha_g), math.log(p.alpha_l), p.mu / self.sd]
            )
        raise DomainError(f"unsupported parameters {p!r}")


def _tail_shape(mags: np.ndarray) -> float:
    # alpha/theta from a Hill estimate over the top 10% of one side: xi = 2(r + 1)
    mags = np.sort(mags[mags > 0])[::-1]
    k = max(int(0.1 * len(mags)), 5)
    if len(mags) <= k:
        return 0.5
    total = float(np.sum(np.log(mags[:k] / mags[k])))
    if not total > 0:
        return 0.5
    xi = k / total
    return float(np.clip(xi / 2.0 - 1.0, 0.05, 10.0))


def initial_guess(model: str, x: np.ndarray) -> Model:
    """Moment and tail based starting point."""
    var = float(np.var(x))
    gains, losses = x[x >= 0], -x[x < 0]
    r_g, r_l = _tail_shape(gains), _tail_shape(losses)
    r = 0.5 * (r_g + r_l)
    w_g = len(gains) / len(x)
    if model == "student":
        return StudentTParams(theta=var, alpha=r * var)
    if model == "half-student":
        th_g = float(np.mean(gains**2)) if len(gains) else var
        th_l = float(np.mean(losses**2)) if len(losses) else var
        return HalfStudentTParams(theta_g=th_g, theta_l=th_l, alpha_g=r_g * th_g, alpha_l=r_l * th_l, w_g=w_g)
    mu = float(np.median(x))
    if model == "mjf1":
        return MJF1Params(theta=var, alpha_g=r_g * var, alpha_l=r_l * var, mu=mu)
    return MJF2Params(theta_g=var, theta_l=var, alpha_g=r_g * var, alpha_l=r_l * var, mu=mu)


# --- optimization ------------------------------------------------------------------


def _fd_gradient(f, u: np.ndarray, rel: float = 1e-5) -> np.ndarray:
    g = np.empty_like(u)
    for i in range(len(u)):
        h = rel * max(1.0, abs(u[i]))
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (f(u + e) - f(u - e)) / (2 * h)
    return g


def _fd_hessian(f, u: np.ndarray, h: float = 1e-3) -> np.ndarray:
    d = len(u)
    hess = np.empty((d, d))
    f0 = f(u)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        hess[i, i] = (f(u + ei) - 2 * f0 + f(u - ei)) / h**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            hess[i, j] = hess[j, i] = (f(u + ei + ej) - f(u + ei - ej) - f(u - ei + ej) + f(u - ei - ej)) / (4 * h * h)
    return hess


def fit_mle(config: FitConfig, increments: np.ndarray) -> FitResult:
    """Multi-start minimization of the negative log-likelihood (plus log-prior).

    Restart 0 starts at ``config.initial`` or the moment/tail guess; the rest are
    seeded perturbations of it. The restart with the smallest objective wins.
    """
    x = np.asarray(increments, dtype=float)
    if x.size < 100:
        raise DomainError(f"need at least 100 increments, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError("increments must be finite")
    sd = float(np.std(x))
    if np.ptp(x) == 0 or not sd > 0:
        raise FitError("degenerate sample: all increments are equal")
    w_g = float(np.count_nonzero(x >= 0)) / x.size
    if config.model == "half-student" and not (0 < w_g < 1):
        raise FitError("half Student-t needs both gains and losses")
    space = _Space(config.model, sd, w_g)
    start = config.initial if config.initial is not None else initial_guess(config.model, x)
    if isinstance(start, HalfStudentTParams):
        start = HalfStudentTParams(start.theta_g, start.theta_l, start.alpha_g, start.alpha_l, w_g=w_g)
    u0 = space.from_params(start)
    if len(u0) != PARAM_COUNT[config.model]:
        raise DomainError("initial parameters do not match the configured model")

    if config.prior is not None:
        p_mean = np.asarray(config.prior[0], dtype=float)
        p_sd = np.asarray(config.prior[1], dtype=float)
    else:
        p_mean = p_sd = None

    def objective(u: np.ndarray) -> float:
        if not np.all(np.isfinite(u)):
            return math.inf
        try:
            p = space.to_params(u)
        except DomainError:
            return math.inf
        lp = dist.log_pdf(p, x)
        val = -float(np.sum(lp))
        if not math.isfinite(val):
            return math.inf
        if p_mean is not None:
            val += 0.5 * float(np.sum(((u - p_mean) / p_sd) ** 2))
        return val

    rng = np.random.default_rng(config.seed)
    best = None
    total_iters = 0
    for k in range(config.restarts):
        u_start = u0.copy() if k == 0 else u0 + rng.normal(0.0, 0.3, size=len(u0))
        if config.optimizer == "simplex":
            res = optimize.minimize(
                objective,
                u_start,
                method="Nelder-Mead",
                options={"maxiter": config.max_iterations, "xatol": 1e-7, "fatol": config.tolerance, "adaptive": True},
            )
        else:
            res = optimize.minimize(
                objective,
                u_start,
                method="BFGS",
                jac=lambda u: _fd_gradient(objective, u),
                options={"maxiter": config.max_iterations, "gtol": 1e-4},
            )
            if not res.success:
                # finite-difference gradients stall BFGS near the optimum ("precision
                # loss"); settle convergence on the log-likelihood change instead
                total_iters += int(res.nit)
                simplex = res.x + np.vstack([np.zeros(len(res.x)), 1e-3 * np.eye(len(res.x))])
                res = optimize.minimize(
                    objective,
                    res.x,
                    method="Nelder-Mead",
                    options={"maxiter": config.max_iterations, "xatol": 1e-7, "fatol": config.tolerance,
                             "adaptive": True, "initial_simplex": simplex},
                )
        total_iters += int(res.nit)
        if math.isfinite(res.fun) and (best is None or res.fun < best[0].fun):
            best = (res, k + 1)
    if best is None:
        raise FitError(f"{config.model}: no restart produced a finite objective")
    res, _ = best
    params = space.to_params(res.x)
    loglik = -neg_log_likelihood(params, x)
    notes = _condition_note(objective, res.x)
    result = FitResult(
        model=config.model,
        params=params,
        log_likelihood=loglik,
        converged=bool(res.success),
        iterations=total_iters,
        restarts_used=config.restarts,
        n_obs=int(x.size),
        condition_notes=notes,
        objective=float(res.fun),
    )
    if not result.converged:
        raise FitError(f"{config.model}: best restart did not converge ({res.message})", best=result)
    return result


def _condition_note(objective, u: np.ndarray) -> str:
    try:
        hess = _fd_hessian(objective, u)
        eig = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    except (ValueError, np.linalg.LinAlgError):
        return "hessian unavailable"
    if not np.all(np.isfinite(eig)):
        return "hessian not finite"
    if eig.min() <= 0:
        return f"hessian not positive definite (min eigenvalue {eig.min():.3g})"
    return f"hessian condition number {eig.max() / eig.min():.3g}"


def model_comparison(results: Sequence[FitResult], n: int) -> list[dict]:
    """Akaike table ``2k - 2 loglik`` sorted ascending (stable for ties)."""
    for r in results:
        if r.n_obs != n:
            raise DomainError(f"{r.model} was fitted to {r.n_obs} points, expected {n}")
    rows = [
        {
            "model": r.model,
            "log_likelihood": r.log_likelihood,
            "k": PARAM_COUNT[r.model],
            "aic": 2 * PARAM_COUNT[r.model] - 2 * r.log_likelihood,
        }
        for r in results
    ]
    return sorted(rows, key=lambda row: row["aic"])
