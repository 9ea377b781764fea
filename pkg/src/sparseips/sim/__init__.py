"""Finite-graph simulation, exact small-graph oracle and the MLFE ensemble."""

from .events import (
    EventLog,
    Marginal,
    empirical_measure,
    neighborhood_empirical_measure,
    simulate,
    state_counts_on_grid,
)
from .master import MasterSolution, exact_master_equation
from .mlfe import MLFEResult, mlfe_ensemble

__all__ = [
    "EventLog",
    "Marginal",
    "empirical_measure",
    "neighborhood_empirical_measure",
    "simulate",
    "state_counts_on_grid",
    "MasterSolution",
    "exact_master_equation",
    "MLFEResult",
    "mlfe_ensemble",
]
