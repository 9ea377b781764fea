"""Interacting particle systems on sparse random graphs.

Exact simulation on finite graphs, and the forward equations for the law of
a root particle and its neighbors on unimodular Galton-Watson trees.
"""

from . import graphs, lfode, models, sim
from .errors import (
    ConfigError,
    CycleError,
    GraphError,
    IntegratorError,
    ModelError,
    SparseIPSError,
    StateSpaceError,
)

__version__ = "0.1.0"
