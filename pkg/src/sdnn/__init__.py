"""Finite-group invariant neural networks for physics-informed PDE solving."""

__version__ = "0.1.0"

from .exceptions import (ConfigInvalid, DegenerateRegion, GroupError, InvalidDomain, NoLinearRep,
                         NonFinite, SdnnError, SingularPoint, UnsupportedOrder, ZeroNorm)
from .groups import FiniteGroup, PointAction, build_group, block_permutation, check_axioms
from .network import (Architecture, SdnnParams, export_params, import_params, init_params,
                      materialize, param_count, pinn_widths, predict)
from .derivatives import jet_forward, loss_gradient
from .problems import PdeProblem, domain_coverage, make_problem, symmetry_metric
from .sampling import boundary_points, collocation_points, eval_grid, filter_region, latin_hypercube
from .training import LossSpec, TrainReport, evaluate_loss, l2_relative_error, make_loss_spec
from .estimators import PdeSolver, SdnnRegressor

__all__ = [
    "Architecture", "ConfigInvalid", "DegenerateRegion", "FiniteGroup", "GroupError",
    "InvalidDomain", "LossSpec", "NoLinearRep", "NonFinite", "PdeProblem", "PdeSolver",
    "PointAction", "SdnnError", "SdnnParams", "SdnnRegressor", "SingularPoint", "TrainReport",
    "UnsupportedOrder", "ZeroNorm", "block_permutation", "boundary_points", "build_group",
    "check_axioms", "collocation_points", "domain_coverage", "eval_grid", "evaluate_loss",
    "export_params", "filter_region", "import_params", "init_params", "jet_forward",
    "l2_relative_error", "latin_hypercube", "loss_gradient", "make_loss_spec", "make_problem",
    "materialize", "param_count", "pinn_widths", "predict", "symmetry_metric",
]
