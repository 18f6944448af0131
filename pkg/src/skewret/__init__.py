"""Heavy-tailed return distributions, stochastic-volatility simulation and tail diagnostics."""

__version__ = "0.1.0"

from .distributions import (  # noqa: E402
    HalfStudentTParams,
    MJF1Params,
    MJF2Params,
    StudentTParams,
    SummaryStats,
)

__all__ = ["HalfStudentTParams", "MJF1Params", "MJF2Params", "StudentTParams", "SummaryStats", "__version__"]
