"""Radial PDE solves used to validate the predicted rates."""

from .diagnostics import (
    BalanceCheck,
    ExpansionResidual,
    PohozaevReport,
    SlopeReport,
    bubble_domination,
    check_prop31,
    expansion_residuals,
    pohozaev_check,
    pohozaev_convergence,
    pohozaev_scaling,
    remainder_slopes,
    remainder_theory,
)
from .peaks import PeakSet, select_peaks, select_peaks_grid, verify_peaks
from .shooting import RadialSolution, shoot_radial
from .sweep import RateFit, SweepResult, fit_rate, log_grid, sweep_epsilon
