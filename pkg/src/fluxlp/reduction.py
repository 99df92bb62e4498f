"""Dirichlet partitioning and elimination of interior unknowns.

Nodes split into fixed nodes (prescribed potential), control nodes (the LP
variables ``g``) and interior nodes (zero nodal balance).  Eliminating the
interior block gives the affine control-to-state maps

    u = u0 + Ug g,    q = q0 + Qg g,    Phi = Phi0 + Pg g.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .network import ComponentLabeling, Network

logger = logging.getLogger(__name__)


class UnanchoredComponent(ValueError):
    """A connected component carries no Dirichlet node; its potential is not unique."""

    def __init__(self, component: int, nodes=()):
        self.component = int(component)
        self.nodes = tuple(int(v) for v in nodes)
        preview = ", ".join(str(v) for v in self.nodes[:5])
        more = ", ..." if len(self.nodes) > 5 else ""
        super().__init__(
            f"component {self.component} (nodes {preview}{more}) has no fixed or controlled node")


class NotSPD(ArithmeticError):
    """Symmetric factorization met a nonpositive pivot."""


@dataclass(frozen=True)
class BoundarySpec:
    inflow: frozenset = frozenset()
    outflow: frozenset = frozenset()
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "inflow", frozenset(int(v) for v in self.inflow))
        object.__setattr__(self, "outflow", frozenset(int(v) for v in self.outflow))
        object.__setattr__(self, "fixed", {int(v): float(x) for v, x in dict(self.fixed).items()})
        both = self.inflow & self.outflow
        if both:
            raise ValueError(f"nodes {sorted(both)} are both inflow and outflow")
        for v, x in self.fixed.items():
            if not np.isfinite(x):
                raise ValueError(f"fixed potential at node {v} is not finite")

    def validate(self, net: Network) -> None:
        for name, nodes in (("inflow", self.inflow), ("outflow", self.outflow),
                            ("fixed", self.fixed.keys())):
            bad = [v for v in nodes if not 0 <= v < net.n_nodes]
            if bad:
                raise ValueError(f"{name} node {bad[0]} is not in the network")

    def with_fixed(self, extra: dict) -> "BoundarySpec":
        fixed = dict(self.fixed)
        fixed.update(extra)
        return BoundarySpec(self.inflow, self.outflow, fixed)

    def roles(self, n_nodes: int) -> list[str]:
        out = []
        for v in range(n_nodes):
            if v in self.fixed:
                out.append("fixed")
            elif v in self.inflow:
                out.append("in")
            elif v in self.outflow:
                out.append("out")
            else:
                out.append("interior")
        return out


def embedding(indices, n: int) -> sp.csr_matrix:
    """``n x len(indices)`` placement matrix with a single 1 per column."""
    idx = np.asarray(indices, dtype=np.int64)
    return sp.csr_matrix((np.ones(idx.size), (idx, np.arange(idx.size))),
                         shape=(n, idx.size))


@dataclass(frozen=True)
class Partition:
    fix: np.ndarray
    ctrl: np.ndarray
    interior: np.ndarray
    E_fix: sp.csr_matrix
    E_ctrl: sp.csr_matrix
    E_int: sp.csr_matrix
    inflow: np.ndarray
    outflow: np.ndarray

    @property
    def n_ctrl(self) -> int:
        return int(self.ctrl.size)


def partition_nodes(net: Network, bspec: BoundarySpec, comps: ComponentLabeling) -> Partition:
    bspec.validate(net)
    n = net.n_nodes
    fix = np.array(sorted(bspec.fixed), dtype=np.int64)
    ctrl = np.array(sorted((bspec.inflow | bspec.outflow) - set(bspec.fixed)), dtype=np.int64)
    dirichlet = np.zeros(n, dtype=bool)
    dirichlet[fix] = True
    dirichlet[ctrl] = True
    interior = np.flatnonzero(~dirichlet)

    anchored = np.zeros(comps.K, dtype=bool)
    anchored[comps.label[dirichlet]] = True
    if not anchored.all():
        i = int(np.flatnonzero(~anchored)[0])
        raise UnanchoredComponent(i, comps.members(i))

    return Partition(
        fix=fix, ctrl=ctrl, interior=interior,
        E_fix=embedding(fix, n), E_ctrl=embedding(ctrl, n), E_int=embedding(interior, n),
        inflow=np.array(sorted(bspec.inflow), dtype=np.int64),
        outflow=np.array(sorted(bspec.outflow), dtype=np.int64),
    )


def spd_solve(L_ii, RHS, pivot_rtol: float = 1e-13) -> np.ndarray:
    """Solve ``L_ii X = RHS`` for symmetric positive definite ``L_ii``.

    Uses a symmetric-mode sparse LU (same row and column ordering, no
    partial pivoting), whose U diagonal holds the LDL^T pivots.  A pivot
    at or below ``pivot_rtol * max|diag|`` raises :class:`NotSPD`.
    """
    RHS = np.asarray(RHS, dtype=float)
    squeeze = RHS.ndim == 1
    if RHS.ndim not in (1, 2):
        raise ValueError("RHS must be a vector or a matrix")
    R = RHS[:, None] if squeeze else RHS
    A = sp.csc_matrix(L_ii, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or R.shape[0] != n:
        raise ValueError(f"shape mismatch: L_ii {A.shape}, RHS {RHS.shape}")
    if n == 0:
        X = np.zeros_like(R)
        return X.reshape(RHS.shape) if squeeze else X

    scale = float(np.abs(A.diagonal()).max()) if A.nnz else 0.0
    if scale <= 0:
        raise NotSPD("interior block has a zero diagonal")
    try:
        lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise NotSPD(str(exc)) from exc

    if np.array_equal(lu.perm_r, lu.perm_c):
        piv = lu.U.diagonal()
        if piv.min() <= pivot_rtol * scale:
            raise NotSPD(f"pivot {piv.min():.3e} <= {pivot_rtol * scale:.3e}")
        X = lu.solve(R)
    else:
        # SuperLU dropped the symmetric ordering; settle it with a dense Cholesky.
        logger.debug("symmetric ordering not honoured, falling back to dense Cholesky")
        try:
            factor = sla.cho_factor(A.toarray(), lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotSPD(str(exc)) from exc
        X = sla.cho_solve(factor, R)

    resid = np.abs(A @ X - R).max() if R.size else 0.0
    bound = 1e-10 * (1.0 + (np.abs(R).max() if R.size else 0.0))
    if resid > bound:
        raise NotSPD(f"residual {resid:.3e} exceeds {bound:.3e}")
    return X.reshape(RHS.shape) if squeeze else X


@dataclass(frozen=True)
class AffineMaps:
    u0: np.ndarray
    Ug: np.ndarray
    q0: np.ndarray
    Qg: np.ndarray
    Phi0: np.ndarray
    Pg: np.ndarray
    K_in: np.ndarray
    K_out: np.ndarray
    Phi0_in: np.ndarray
    Phi0_out: np.ndarray
    ctrl: np.ndarray
    inflow: np.ndarray
    outflow: np.ndarray
    interior: np.ndarray

    @property
    def n_ctrl(self) -> int:
        return int(self.Ug.shape[1])


def build_affine_maps(L, B, C, part: Partition, u_fix) -> AffineMaps:
    L = sp.csr_matrix(L)
    B = sp.csr_matrix(B)
    C = sp.csr_matrix(C)
    n_v = L.shape[0]
    u_fix = np.asarray(u_fix, dtype=float).reshape(-1)
    if L.shape != (n_v, n_v) or B.shape[1] != n_v or C.shape != (B.shape[0], B.shape[0]):
        raise ValueError("operator shapes do not conform")
    if u_fix.size != part.fix.size:
        raise ValueError(f"u_fix has {u_fix.size} entries for {part.fix.size} fixed nodes")

    E_int, E_fix, E_ctrl = part.E_int, part.E_fix, part.E_ctrl
    L_int = E_int.T @ L
    L_ii = (L_int @ E_int).tocsc()
    rhs0 = -(L_int @ E_fix) @ u_fix
    rhs1 = -(L_int @ E_ctrl).toarray()
    X = spd_solve(L_ii, np.column_stack([rhs0, rhs1]))
    A0, A1 = X[:, 0], X[:, 1:]

    u0 = E_int @ A0 + E_fix @ u_fix
    Ug = np.asarray(E_int @ A1 + E_ctrl.toarray())
    CB = C @ B
    q0 = -(CB @ u0)
    Qg = -np.asarray(CB @ Ug)
    Phi0 = B.T @ q0
    Pg = np.asarray(B.T @ Qg)
    return AffineMaps(
        u0=u0, Ug=Ug, q0=q0, Qg=Qg, Phi0=Phi0, Pg=Pg,
        K_in=Pg[part.inflow, :], K_out=Pg[part.outflow, :],
        Phi0_in=Phi0[part.inflow], Phi0_out=Phi0[part.outflow],
        ctrl=part.ctrl, inflow=part.inflow, outflow=part.outflow, interior=part.interior,
    )


def evaluate_state(maps: AffineMaps, g) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.size != maps.n_ctrl:
        raise ValueError(f"control vector has {g.size} entries, expected {maps.n_ctrl}")
    return maps.u0 + maps.Ug @ g, maps.q0 + maps.Qg @ g, maps.Phi0 + maps.Pg @ g
