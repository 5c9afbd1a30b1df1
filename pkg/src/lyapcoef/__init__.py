"""Lyapunov coefficients l1..l4 at Hopf points of smooth vector fields."""
from .analysis import AnalysisReport, analyze, emit_report, emit_sweep, refine_equilibrium, sweep
from .errors import LyapError
from .expr import VectorFieldSpec, differentiate, evaluate, parse
from .hopf import center_manifold, compose_field, lyapunov, transversality
from .linalg import bordered_solve, critical_pair, eigen_all, solve_complex
from .mlforms import HomogeneousModel, apply_form, jacobian, taylor_model
from .problem import ProblemSpec, load_problem

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport", "HomogeneousModel", "LyapError", "ProblemSpec", "VectorFieldSpec",
    "analyze", "apply_form", "bordered_solve", "center_manifold", "compose_field", "critical_pair",
    "differentiate", "eigen_all", "emit_report", "emit_sweep", "evaluate", "jacobian", "load_problem",
    "lyapunov", "parse", "refine_equilibrium", "solve_complex", "sweep", "taylor_model", "transversality",
]
