"""Published S&P500 (1980-2025, daily) fits and summary statistics.

``REFERENCE_PARAMS`` holds the fitted parameter sets; ``REFERENCE_STATS`` the
corresponding summary rows (mean, variance, mode, median, Pearson skews and
CCDF tail exponents) as printed, so they carry only three significant digits.
The half Student-t row does not list a gain weight; ``w_g = 0.5`` reproduces
its published mean and variance.
"""

from __future__ import annotations

from .distributions import HalfStudentTParams, MJF1Params, MJF2Params, Model, StudentTParams

REFERENCE_PARAMS: dict[str, Model] = {
    "student": StudentTParams(theta=1.407e-4, alpha=7.347e-5),
    "half-student": HalfStudentTParams(
        theta_g=1.182e-4, theta_l=1.803e-4, alpha_g=8.512e-5, alpha_l=6.134e-5, w_g=0.5
    ),
    "mjf1": MJF1Params(theta=1.412e-4, alpha_g=7.873e-5, alpha_l=6.371e-5, mu=1.168e-3),
    "mjf2": MJF2Params(theta_g=1.187e-4, theta_l=1.782e-4, alpha_g=6.386e-5, alpha_l=7.634e-5, mu=1.142e-3),
}

REFERENCE_STATS: dict[str, dict[str, float]] = {
    "student": dict(m1=0.0, m2=1.41e-4, mode=0.0, zeta1=0.0, median=0.0, zeta2=0.0, tail_gain=-3.04, tail_loss=-3.04),
    "half-student": dict(
        m1=-2.47e-4, m2=1.48e-4, mode=0.0, zeta1=-2.03e-2, median=6.047e-6, zeta2=2.08e-2, tail_gain=-3.04, tail_loss=-2.95
    ),
    "mjf1": dict(
        m1=4.57e-5, m2=1.45e-4, mode=5.22e-4, zeta1=-3.96e-2, median=3.211e-4, zeta2=2.29e-2, tail_gain=-3.12, tail_loss=-2.90
    ),
    "mjf2": dict(
        m1=3.7e-5, m2=1.3e-4, mode=5.49e-4, zeta1=-4.49e-2, median=3.395e-4, zeta2=2.65e-2, tail_gain=-3.07, tail_loss=-2.76
    ),
    "sp500": dict(
        m1=4.38e-5, m2=1.28e-4, mode=1.32e-4, zeta1=-7.70e-3, median=2.733e-4, zeta2=2.03e-2, tail_gain=-3.14, tail_loss=-2.91
    ),
}


def published_stats_for(model: Model) -> dict[str, float] | None:
    """Published summary row when ``model`` is exactly one of the reference fits."""
    for key, ref in REFERENCE_PARAMS.items():
        if ref == model:
            return dict(REFERENCE_STATS[key])
    return None
