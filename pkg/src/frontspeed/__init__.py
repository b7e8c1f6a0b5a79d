"""Admissible speeds of monotone traveling fronts for reaction-convection equations with saturating diffusion."""
from .expr import parse, evaluate, differentiate, derivative_at
from .model import ProblemSpec, ReactionClass, ReducedProblem, make_spec, reduce, classify_reaction, HypothesisError
from .integrate import SolverOptions, Status, Trajectory, forward_solution, backward_solution
from .speed import SpeedResult, find_speed, critical_speed_A, unique_speed_BC, admissible_A, mismatch_BC
from .bounds import ConditionReport, build_report
from .burgers import burgers_speed, burgers_profile
from .profile import reconstruct_wave, epsilon_scan

__version__ = "0.1.0"
