"""Numerical verification of the sharp area bound for minimal submanifolds
of the unit ball passing through a prescribed point."""

from .field import (
    CalibrationField,
    FieldDiagnostics,
    TangentFrame,
    asymptotic_leading,
    deficit,
    diagnostics,
    divergence_trace,
    divergence_trace_fd,
    eval_W,
    random_frame,
)
from .fuzz import fuzz
from .mesh import TriMesh, frame_of_triangle, load_mesh, mesh_area, save_mesh
from .minimize import SolverConfig, SolveResult, catenoid_problem, minimize, perturbed_disk_problem
from .surfaces import CatenoidPiece, FlatDisk, MinimalCone, catenoid_c_max, catenoid_height, unit_ball_volume
from .verify import InvalidInstance, VerificationReport, area_bound, verify

__version__ = "0.1.0"

__all__ = [
    "CalibrationField",
    "CatenoidPiece",
    "FieldDiagnostics",
    "FlatDisk",
    "InvalidInstance",
    "MinimalCone",
    "SolveResult",
    "SolverConfig",
    "TangentFrame",
    "TriMesh",
    "VerificationReport",
    "area_bound",
    "asymptotic_leading",
    "catenoid_c_max",
    "catenoid_height",
    "catenoid_problem",
    "deficit",
    "diagnostics",
    "divergence_trace",
    "divergence_trace_fd",
    "eval_W",
    "frame_of_triangle",
    "fuzz",
    "load_mesh",
    "mesh_area",
    "minimize",
    "perturbed_disk_problem",
    "random_frame",
    "save_mesh",
    "unit_ball_volume",
    "verify",
]
