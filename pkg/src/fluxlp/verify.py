"""State recovery and validation metrics for an optimal control."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import LPProblem, SignSelector
from .network import ComponentLabeling, Network
from .reduction import AffineMaps, BoundarySpec, evaluate_state

UNITS_NOTE = ("potentials and fluxes are unit-free; with k_e in meters and phi_max = 1 "
              "a flux of 1 reads as one person per meter per second")


@dataclass(frozen=True)
class StateSolution:
    g_opt: np.ndarray
    u: np.ndarray
    q: np.ndarray
    Phi: np.ndarray


def recover_state(maps: AffineMaps, g) -> StateSolution:
    u, q, Phi = evaluate_state(maps, g)
    return StateSolution(np.asarray(g, dtype=float).reshape(-1).copy(), u, q, Phi)


@dataclass(frozen=True)
class DiagnosticsReport:
    max_phi_in: float
    min_phi_out: float
    max_edge_sign_violation: float
    edge_sign_violation_raw: float
    global_conservation: float
    max_interior_abs_phi: float
    amount_in: float
    amount_out: float
    in_out_mismatch: float
    max_component_balance: float
    component_balances: np.ndarray
    flux_intensity: np.ndarray
    throughput: np.ndarray

    # (label, attribute) in validation-table order
    ROWS = (
        ("max(Phi_in) (should <= 0)", "max_phi_in"),
        ("min(Phi_out) (should >= 0)", "min_phi_out"),
        ("Max boundary-edge sign violation (should <= 0)", "edge_sign_violation_raw"),
        ("Global conservation sum_v Phi_v (should ~ 0)", "global_conservation"),
        ("max_{v in V_int} |Phi_v|", "max_interior_abs_phi"),
        ("Amount entering at V_in", "amount_in"),
        ("Amount leaving at V_out", "amount_out"),
        ("In-out mismatch (should ~ 0)", "in_out_mismatch"),
        ("max_component |sum_{v in comp} Phi_v|", "max_component_balance"),
    )

    def scalars(self) -> dict:
        return {attr: float(getattr(self, attr)) for attr in (
            "max_phi_in", "min_phi_out", "max_edge_sign_violation", "edge_sign_violation_raw",
            "global_conservation", "max_interior_abs_phi", "amount_in", "amount_out",
            "in_out_mismatch", "max_component_balance")}

    def as_dict(self) -> dict:
        out = {k: (None if np.isnan(v) else v) for k, v in self.scalars().items()}
        out["component_balances"] = [float(x) for x in self.component_balances]
        return out

    def render(self) -> str:
        width = max(len(label) for label, _ in self.ROWS)
        lines = [f"# {UNITS_NOTE}", f"{'Quantity':<{width}}  Value", "-" * (width + 24)]
        for label, attr in self.ROWS:
            lines.append(f"{label:<{width}}  {getattr(self, attr): .6e}")
        return "\n".join(lines)


def _max(a) -> float:
    return float(np.max(a)) if np.size(a) else float("nan")


def _min(a) -> float:
    return float(np.min(a)) if np.size(a) else float("nan")


def diagnostics(net: Network, bspec: BoundarySpec, comps: ComponentLabeling,
                sol: StateSolution, S: SignSelector, eps: float = 0.0) -> DiagnosticsReport:
    Phi, q = sol.Phi, sol.q
    inflow = np.array(sorted(bspec.inflow), dtype=np.int64)
    outflow = np.array(sorted(bspec.outflow), dtype=np.int64)
    # conservation is only enforced where the potential is unknown
    free = np.ones(net.n_nodes, dtype=bool)
    free[inflow] = free[outflow] = False
    free[list(bspec.fixed)] = False

    raw = _max(-S.apply(q) - eps)
    amount_in = float(-Phi[inflow].sum())
    amount_out = float(Phi[outflow].sum())
    balances = np.bincount(comps.label, weights=Phi, minlength=comps.K)
    return DiagnosticsReport(
        max_phi_in=_max(Phi[inflow]),
        min_phi_out=_min(Phi[outflow]),
        max_edge_sign_violation=max(raw, 0.0) if not np.isnan(raw) else 0.0,
        edge_sign_violation_raw=raw,
        global_conservation=float(Phi.sum()),
        max_interior_abs_phi=float(np.abs(Phi[free]).max()) if free.any() else 0.0,
        amount_in=amount_in,
        amount_out=amount_out,
        in_out_mismatch=amount_in - amount_out,
        max_component_balance=float(np.abs(balances).max()) if balances.size else 0.0,
        component_balances=balances,
        flux_intensity=np.abs(q),
        throughput=np.abs(q) * net.area,
    )


def check_feasibility(lp: LPProblem, g) -> float:
    """Largest violation of ``A g <= b`` or of the box bounds (0 when feasible)."""
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.size != lp.n:
        raise ValueError(f"point has {g.size} entries, LP has {lp.n} variables")
    worst = 0.0
    if lp.m:
        worst = max(worst, float((lp.A @ g - lp.b).max()))
    if lp.n:
        worst = max(worst, float((lp.lower - g).max()), float((g - lp.upper).max()))
    return max(worst, 0.0)
