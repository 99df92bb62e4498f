"""Outward-flux maximization on metric graphs via a Dirichlet-reduced LP."""

from .assembly import LPProblem, SignSelector, StructurallyInfeasible, assemble, build_objective, \
    edge_sign_rows, flux_caps, sign_selector
from .generators import generate_synthetic
from .io import NetworkFileError, export_results, network_from_dict, parse_network, write_network
from .network import ComponentLabeling, Network, NetworkError, build_conductance, \
    build_incidence, build_laplacian, connected_components, nodal_balance
from .pipeline import InfeasibleProblem, PipelineResult, RunConfig, UnboundedProblem, \
    build_problem, run_pipeline
from .reduction import AffineMaps, BoundarySpec, NotSPD, UnanchoredComponent, \
    build_affine_maps, evaluate_state, partition_nodes
from .solver import CyclingGuardExceeded, EnumerationGuardExceeded, LPSolution, \
    boundedness_report, enumerate_vertices, find_descent_ray, solve_lp
from .verify import DiagnosticsReport, StateSolution, check_feasibility, diagnostics, recover_state

__version__ = "0.1.0"

__all__ = [
    "AffineMaps", "BoundarySpec", "ComponentLabeling", "CyclingGuardExceeded",
    "DiagnosticsReport", "EnumerationGuardExceeded", "InfeasibleProblem", "LPProblem",
    "LPSolution", "Network", "NetworkError", "NetworkFileError", "NotSPD", "PipelineResult",
    "RunConfig", "SignSelector", "StateSolution", "StructurallyInfeasible",
    "UnanchoredComponent", "UnboundedProblem", "assemble", "boundedness_report",
    "build_affine_maps", "build_conductance", "build_incidence", "build_laplacian",
    "build_objective", "build_problem", "check_feasibility", "connected_components",
    "diagnostics", "edge_sign_rows", "enumerate_vertices", "evaluate_state", "export_results",
    "find_descent_ray", "flux_caps", "generate_synthetic", "network_from_dict", "nodal_balance",
    "parse_network", "partition_nodes", "recover_state", "run_pipeline", "sign_selector",
    "solve_lp", "write_network",
]
