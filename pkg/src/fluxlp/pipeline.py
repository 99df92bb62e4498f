"""End-to-end driver: operators -> reduction -> LP -> solve -> recover -> verify."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import assembly, solver
from .network import ComponentLabeling, Network, build_conductance, build_incidence, \
    build_laplacian, connected_components
from .reduction import AffineMaps, BoundarySpec, Partition, build_affine_maps, partition_nodes
from .verify import DiagnosticsReport, StateSolution, diagnostics, recover_state

logger = logging.getLogger(__name__)

GAUGE_AUTO = "auto"
GAUGE_ERROR = "error"


@dataclass(frozen=True)
class RunConfig:
    phi_max: float = 1.0
    eps: float = 0.0
    fixes: dict = field(default_factory=dict)
    bounds: tuple | None = None
    node_bounds: dict = field(default_factory=dict)
    gauge: str = GAUGE_AUTO
    gauge_value: float = 10.0
    tol_feas: float = solver.TOL_FEAS
    tol_opt: float = solver.TOL_OPT

    def __post_init__(self):
        if not self.phi_max > 0:
            raise ValueError("phi_max must be > 0")
        if not self.eps >= 0:
            raise ValueError("eps must be >= 0")
        if self.gauge not in (GAUGE_AUTO, GAUGE_ERROR):
            raise ValueError(f"gauge must be {GAUGE_AUTO!r} or {GAUGE_ERROR!r}")


@dataclass(frozen=True)
class PipelineResult:
    lp_solution: solver.LPSolution
    state: StateSolution | None
    report: DiagnosticsReport | None
    boundedness: solver.BoundednessDiagnosis
    net: Network
    bspec: BoundarySpec
    comps: ComponentLabeling
    partition: Partition
    maps: AffineMaps
    lp: assembly.LPProblem
    selector: assembly.SignSelector
    c_star: np.ndarray
    objective_constant: float
    gauge_fixed: dict

    def __iter__(self):
        return iter((self.lp_solution, self.state, self.report, self.boundedness))

    def summary(self) -> dict:
        sol = self.lp_solution
        out = {
            "status": sol.status,
            "iterations": sol.iterations,
            "n_nodes": self.net.n_nodes,
            "n_edges": self.net.n_edges,
            "n_components": self.comps.K,
            "n_controls": self.partition.n_ctrl,
            "lp_rows": self.lp.m,
            "gauge_fixed": {str(self.net.node_ids[v]): x for v, x in sorted(self.gauge_fixed.items())},
            "boundedness": self.boundedness.as_dict(),
        }
        if sol.optimal:
            out["lp_objective"] = sol.objective
            out["outward_flux"] = self.objective_constant - sol.objective
            out["g_opt"] = {str(self.net.node_ids[v]): float(x)
                            for v, x in zip(self.partition.ctrl, sol.g_opt)}
        if sol.ray is not None:
            out["ray"] = [float(x) for x in sol.ray]
        return out


class PipelineError(RuntimeError):
    def __init__(self, message: str, result: PipelineResult):
        super().__init__(message)
        self.result = result


class InfeasibleProblem(PipelineError):
    pass


class UnboundedProblem(PipelineError):
    @property
    def ray(self):
        return self.result.lp_solution.ray


def gauge_fix(net: Network, bspec: BoundarySpec, comps: ComponentLabeling, value: float) -> dict:
    """One fixed potential for each component that has none.

    Picks the lowest-id boundary node of the component, or its lowest-id
    node when the component has no boundary at all.
    """
    boundary = bspec.inflow | bspec.outflow
    fixed = set(bspec.fixed)
    extra = {}
    for i in range(comps.K):
        members = comps.members(i)
        if fixed.intersection(members.tolist()):
            continue
        candidates = [v for v in members.tolist() if v in boundary]
        extra[candidates[0] if candidates else int(members[0])] = float(value)
    return extra


def _box(config: RunConfig, net: Network, ctrl: np.ndarray):
    n = ctrl.size
    lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
    if config.bounds is not None:
        lo[:], hi[:] = config.bounds
    pos = {int(v): i for i, v in enumerate(ctrl)}
    for v, (a, b) in config.node_bounds.items():
        if int(v) not in pos:
            raise ValueError(f"bounds given for node {net.node_ids[int(v)]!r}, which is not a control")
        lo[pos[int(v)]], hi[pos[int(v)]] = a, b
    return lo, hi


@dataclass(frozen=True)
class Problem:
    """Everything assembled ahead of the LP solve."""

    net: Network
    bspec: BoundarySpec
    comps: ComponentLabeling
    partition: Partition
    maps: AffineMaps
    lp: assembly.LPProblem
    selector: assembly.SignSelector
    c_star: np.ndarray
    objective_constant: float
    q_max: np.ndarray
    gauge_fixed: dict


def build_problem(config: RunConfig, net: Network, bspec: BoundarySpec) -> Problem:
    B = build_incidence(net)
    C = build_conductance(net)
    L = build_laplacian(B, C)
    comps = connected_components(net)

    bspec = bspec.with_fixed(config.fixes)
    gauge_fixed = {}
    if config.gauge == GAUGE_AUTO:
        gauge_fixed = gauge_fix(net, bspec, comps, config.gauge_value)
        bspec = bspec.with_fixed(gauge_fixed)
    part = partition_nodes(net, bspec, comps)
    u_fix = np.array([bspec.fixed[v] for v in part.fix.tolist()], dtype=float)
    maps = build_affine_maps(L, B, C, part, u_fix)

    c_star = assembly.build_objective(maps.K_in, maps.K_out)
    const = assembly.objective_constant(maps.Phi0_in, maps.Phi0_out)
    A_cap, b_cap = assembly.flux_caps(maps.Qg, maps.q0, config.phi_max, net.k)
    S, A_edge, b_edge = assembly.edge_sign_rows(net, bspec, maps.q0, maps.Qg, config.eps)
    lp = assembly.assemble(-c_star, A_cap, b_cap, A_edge, b_edge, _box(config, net, part.ctrl))
    q_max = assembly.cap_limits(config.phi_max, net.k)
    return Problem(net, bspec, comps, part, maps, lp, S, c_star, const, q_max, gauge_fixed)


def check_boundedness(config: RunConfig, prob: Problem) -> solver.BoundednessDiagnosis:
    return solver.boundedness_report(prob.lp, prob.maps.Qg, prob.maps.q0, prob.q_max,
                                     tol_opt=config.tol_opt)


def run_pipeline(config: RunConfig, net: Network, bspec: BoundarySpec) -> PipelineResult:
    prob = build_problem(config, net, bspec)
    bounded = check_boundedness(config, prob)
    lp = prob.lp
    sol = solver.solve_lp(lp, tol_feas=config.tol_feas, tol_opt=config.tol_opt)
    logger.info("LP with %d controls and %d rows: %s after %d iterations",
                lp.n, lp.m, sol.status, sol.iterations)

    state = report = None
    if sol.optimal:
        state = recover_state(prob.maps, sol.g_opt)
        report = diagnostics(prob.net, prob.bspec, prob.comps, state, prob.selector, config.eps)
        if bounded.neutral_ray is not None:
            logger.warning("optimal controls are not unique: the feasible set contains a line")
    result = PipelineResult(sol, state, report, bounded, prob.net, prob.bspec, prob.comps,
                            prob.partition, prob.maps, lp, prob.selector, prob.c_star,
                            prob.objective_constant, prob.gauge_fixed)
    if sol.status == solver.INFEASIBLE:
        raise InfeasibleProblem("the LP is infeasible", result)
    if sol.status == solver.UNBOUNDED:
        raise UnboundedProblem("the LP is unbounded below", result)
    return result
