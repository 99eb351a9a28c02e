"""Multi-material transport toolkit.

Polyhedral material costs and their generated matrix norms, segment and
grid chains, minimum-cost flows on geometric graphs with calibration
certificates, grid flat norms and microstructure studies.
"""
__version__ = "0.1.0"

from .chains import GridChain, Grid2D, PointChain0, PolyChain1, mass_Mh
from .duality import PiecewiseCalibration, Potential, verify_calibration_field, verify_calibration_graph
from .flatnorm import grid_flat_norm, relaxation_study
from .flow import FlowProblem, GeometricGraph, solve_flow
from .norms import GeneratedNorm, PolyhedralNorm, eval_H

__all__ = [
    "FlowProblem", "GeneratedNorm", "GeometricGraph", "Grid2D", "GridChain", "PiecewiseCalibration",
    "PointChain0", "PolyChain1", "PolyhedralNorm", "Potential", "__version__", "eval_H",
    "grid_flat_norm", "mass_Mh", "relaxation_study", "solve_flow", "verify_calibration_field",
    "verify_calibration_graph",
]
