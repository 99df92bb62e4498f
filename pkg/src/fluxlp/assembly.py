"""Objective, no-backflow rows, flux caps and the stacked LP.

The decision variable is the control vector ``g``.  Every constraint is an
affine image of the edge-flux map ``q(g) = q0 + Qg g``:

* no-backflow rows ``S q(g) >= -eps``  ->  ``(-S Qg) g <= S q0 + eps``
* flux caps ``|q(g)| <= phi_max * k``  ->  ``[Qg; -Qg] g <= [qmax - q0; qmax + q0]``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .network import Network
from .reduction import BoundarySpec

CAP_UPPER = "cap+"
CAP_LOWER = "cap-"
EDGE_SIGN = "edge-sign"


class StructurallyInfeasible(ValueError):
    """A constraint row is independent of ``g`` and already violated."""

    def __init__(self, tag: str, row: int, rhs: float):
        self.tag, self.row, self.rhs = tag, int(row), float(rhs)
        super().__init__(f"{tag} row {row} does not depend on the controls and needs 0 <= {rhs:.6g}")


@dataclass(frozen=True)
class SignSelector:
    edges: np.ndarray
    signs: np.ndarray
    origins: tuple
    n_edges: int

    @property
    def m(self) -> int:
        return int(self.edges.size)

    @property
    def S(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.signs.astype(float), (np.arange(self.m), self.edges)),
                             shape=(self.m, self.n_edges))

    def apply(self, q) -> np.ndarray:
        """``S q`` without forming the matrix."""
        q = np.asarray(q, dtype=float)
        return self.signs * q[self.edges]


@dataclass(frozen=True)
class LPProblem:
    """``min cost^T g  s.t.  A g <= b,  lower <= g <= upper``."""

    cost: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    row_tags: tuple

    def __post_init__(self):
        n = self.cost.size
        if self.A.shape != (self.b.size, n):
            raise ValueError(f"A has shape {self.A.shape}, expected ({self.b.size}, {n})")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")
        if len(self.row_tags) != self.b.size:
            raise ValueError("row_tags must label every row")

    @property
    def n(self) -> int:
        return int(self.cost.size)

    @property
    def m(self) -> int:
        return int(self.b.size)

    def rows_tagged(self, *tags) -> np.ndarray:
        return np.array([t in tags for t in self.row_tags], dtype=bool)


def build_objective(K_in, K_out) -> np.ndarray:
    """Gradient ``c*`` of the net outward flux ``J(g) = -sum Phi_in + sum Phi_out``.

    The LP minimizes ``-c*``.
    """
    K_in = np.atleast_2d(np.asarray(K_in, dtype=float))
    K_out = np.atleast_2d(np.asarray(K_out, dtype=float))
    if K_in.shape[1] != K_out.shape[1]:
        raise ValueError(f"K_in has {K_in.shape[1]} columns, K_out has {K_out.shape[1]}")
    return -K_in.sum(axis=0) + K_out.sum(axis=0)


def objective_constant(Phi0_in, Phi0_out) -> float:
    return float(-np.sum(Phi0_in) + np.sum(Phi0_out))


def sign_selector(net: Network, bspec: BoundarySpec) -> SignSelector:
    """One row per (boundary endpoint, incident edge); edge order, tail rule first."""
    edges, signs, origins = [], [], []
    inflow, outflow = bspec.inflow, bspec.outflow
    for e, (t, h) in enumerate(zip(net.tails.tolist(), net.heads.tolist())):
        if t in inflow:
            edges.append(e); signs.append(1); origins.append("in-tail")
        elif t in outflow:
            edges.append(e); signs.append(-1); origins.append("out-tail")
        if h in inflow:
            edges.append(e); signs.append(-1); origins.append("in-head")
        elif h in outflow:
            edges.append(e); signs.append(1); origins.append("out-head")
    return SignSelector(np.array(edges, dtype=np.int64), np.array(signs, dtype=np.int64),
                        tuple(origins), net.n_edges)


def edge_sign_rows(net: Network, bspec: BoundarySpec, q0, Qg, eps: float = 0.0):
    if eps < 0:
        raise ValueError("slack eps must be nonnegative")
    S = sign_selector(net, bspec)
    Qg = np.asarray(Qg, dtype=float).reshape(net.n_edges, -1)
    A_edge = -(S.signs[:, None] * Qg[S.edges, :])
    b_edge = S.apply(q0) + eps
    return S, A_edge, b_edge


def cap_limits(phi_max: float, k) -> np.ndarray:
    return phi_max * np.asarray(k, dtype=float)


def flux_caps(Qg, q0, phi_max: float, k):
    """Rows for ``|q0 + Qg g| <= phi_max * k``; empty when ``phi_max`` is infinite."""
    if not phi_max > 0:
        raise ValueError("phi_max must be positive")
    Qg = np.asarray(Qg, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    if not np.isfinite(phi_max):
        return np.zeros((0, Qg.shape[1])), np.zeros(0)
    q_max = cap_limits(phi_max, k)
    A_cap = np.vstack([Qg, -Qg])
    b_cap = np.concatenate([q_max - q0, q_max + q0])
    _check_structural(A_cap, b_cap, [CAP_UPPER] * Qg.shape[0] + [CAP_LOWER] * Qg.shape[0])
    return A_cap, b_cap


def _check_structural(A, b, tags, rtol: float = 1e-12, ftol: float = 1e-9):
    if A.shape[0] == 0:
        return
    if A.shape[1] == 0:
        zero = np.ones(A.shape[0], dtype=bool)
    else:
        scale = max(1.0, float(np.abs(A).max()))
        zero = np.abs(A).max(axis=1) <= rtol * scale
    bad = np.flatnonzero(zero & (b < -ftol * (1.0 + np.abs(b))))
    if bad.size:
        i = int(bad[0])
        raise StructurallyInfeasible(tags[i], i, b[i])


def _bounds(bounds, n: int):
    if bounds is None:
        return np.full(n, -np.inf), np.full(n, np.inf)
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(-np.inf if lo is None else lo, dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(np.inf if hi is None else hi, dtype=float), (n,)).copy()
    return lo, hi


def assemble(cost, A_cap, b_cap, A_edge, b_edge, bounds=None) -> LPProblem:
    cost = np.asarray(cost, dtype=float).reshape(-1)
    n = cost.size
    A_cap = np.asarray(A_cap, dtype=float).reshape(-1, n)
    A_edge = np.asarray(A_edge, dtype=float).reshape(-1, n)
    b_cap = np.asarray(b_cap, dtype=float).reshape(-1)
    b_edge = np.asarray(b_edge, dtype=float).reshape(-1)
    if A_cap.shape[0] != b_cap.size or A_edge.shape[0] != b_edge.size:
        raise ValueError("row counts of A and b differ")
    half = A_cap.shape[0] // 2
    tags = ((CAP_UPPER,) * half + (CAP_LOWER,) * (A_cap.shape[0] - half)
            + (EDGE_SIGN,) * A_edge.shape[0])
    A = np.vstack([A_cap, A_edge])
    b = np.concatenate([b_cap, b_edge])
    _check_structural(A, b, tags)
    lo, hi = _bounds(bounds, n)
    return LPProblem(cost=cost, A=A, b=b, lower=lo, upper=hi, row_tags=tags)
