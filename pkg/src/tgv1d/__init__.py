"""tgv1d: grid-free solver for 1D inverse problems with TGV regularization.

The package reconstructs sparse piecewise-affine functions from a small set
of linear measurements (restricted Fourier coefficients) by a conditional
gradient method that inserts one jump or kink atom per iteration, solves a
small quadratic program over the active atoms, and certifies optimality with
a pair of dual variables.
"""

from tgv1d.atoms import (
    JUMP,
    KINK,
    DerivativeMeasure,
    ExtremalAtom,
    SparseFunction,
    assemble,
    l2_inner,
)
from tgv1d.tgv import TgvParams, tgv_atom, tgv_grid_oracle, tgv_upper
from tgv1d.fourier import MeasurementSetup, TrigPoly, FourierFidelity, synthesize
from tgv1d.duals import DualPair, OptimalityReport, certify_optimality, dual_pair
from tgv1d.solver import RunResult, SolverConfig, run

__all__ = [
    "JUMP",
    "KINK",
    "DerivativeMeasure",
    "ExtremalAtom",
    "SparseFunction",
    "assemble",
    "l2_inner",
    "TgvParams",
    "tgv_atom",
    "tgv_grid_oracle",
    "tgv_upper",
    "MeasurementSetup",
    "TrigPoly",
    "FourierFidelity",
    "synthesize",
    "DualPair",
    "OptimalityReport",
    "certify_optimality",
    "dual_pair",
    "SolverConfig",
    "RunResult",
    "run",
]

__version__ = "0.1.0"
