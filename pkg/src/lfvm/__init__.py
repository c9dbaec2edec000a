"""Quasi-static simulator for AFeFET leakage-free volatile memory."""

from ._jit import backend
from .lgd import AfeBranchState, Equilibrium, LgdParams, equilibria, free_energy, step_quasistatic, trace_pe_loop

__all__ = [
    "AfeBranchState",
    "Equilibrium",
    "LgdParams",
    "backend",
    "equilibria",
    "free_energy",
    "step_quasistatic",
    "trace_pe_loop",
]
__version__ = "0.1.0"
