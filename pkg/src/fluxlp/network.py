"""Oriented metric graphs and their discrete operators.

A :class:`Network` stores edge endpoints, lengths ``L_e``, conductivities
``k_e`` and optional corridor areas ``A_e``.  The operators built here are

* ``B`` -- the edge-by-node incidence (-1 at the tail, +1 at the head),
* ``C`` -- ``diag(k_e / L_e)``,
* ``L`` -- the weighted Laplacian ``B^T C B``.

Sparse matrices are plain ``scipy.sparse.csr_matrix`` objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc


class NetworkError(ValueError):
    """Raised when network data violates a structural invariant."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Network:
    n_nodes: int
    tails: np.ndarray
    heads: np.ndarray
    lengths: np.ndarray
    k: np.ndarray
    area: np.ndarray | None = None
    positions: np.ndarray | None = None
    # external ids, index-aligned with the dense node numbering
    node_ids: tuple = field(default=(), compare=False)

    def __post_init__(self):
        tails = np.asarray(self.tails, dtype=np.int64).reshape(-1)
        heads = np.asarray(self.heads, dtype=np.int64).reshape(-1)
        lengths = np.asarray(self.lengths, dtype=float).reshape(-1)
        k = np.asarray(self.k, dtype=float).reshape(-1)
        n_e = tails.size
        if not (heads.size == lengths.size == k.size == n_e):
            raise NetworkError("edge arrays must have equal length")
        if self.n_nodes < 1:
            raise NetworkError("network needs at least one node")
        if n_e and (tails.min() < 0 or heads.min() < 0
                    or max(tails.max(), heads.max()) >= self.n_nodes):
            raise NetworkError("edge references a node outside 0..n_nodes-1")
        loops = np.flatnonzero(tails == heads)
        if loops.size:
            raise NetworkError(f"edge {int(loops[0])} is a self-loop")
        bad = np.flatnonzero(~(lengths > 0) | ~np.isfinite(lengths))
        if bad.size:
            raise NetworkError(f"edge {int(bad[0])} has nonpositive length {float(lengths[bad[0]])!r}")
        bad = np.flatnonzero(~(k > 0) | ~np.isfinite(k))
        if bad.size:
            raise NetworkError(f"edge {int(bad[0])} has nonpositive width k = {float(k[bad[0]])!r}")

        if self.area is None:
            area = k.copy()
        else:
            area = np.asarray(self.area, dtype=float).reshape(-1)
            if area.size != n_e:
                raise NetworkError("area array must have one entry per edge")
            bad = np.flatnonzero(~(area > 0))
            if bad.size:
                raise NetworkError(f"edge {int(bad[0])} has nonpositive area")

        positions = self.positions
        if positions is not None:
            positions = np.asarray(positions, dtype=float)
            if positions.shape != (self.n_nodes, 2):
                raise NetworkError("positions must have shape (n_nodes, 2)")
            positions = _frozen(positions.copy())

        node_ids = tuple(self.node_ids) if self.node_ids else tuple(range(self.n_nodes))
        if len(node_ids) != self.n_nodes:
            raise NetworkError("node_ids must have one entry per node")

        object.__setattr__(self, "tails", _frozen(tails.copy()))
        object.__setattr__(self, "heads", _frozen(heads.copy()))
        object.__setattr__(self, "lengths", _frozen(lengths.copy()))
        object.__setattr__(self, "k", _frozen(k.copy()))
        object.__setattr__(self, "area", _frozen(area))
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "node_ids", node_ids)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        if self.n_nodes != other.n_nodes:
            return False
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("tails", "heads", "lengths", "k", "area"))

    __hash__ = None

    @property
    def n_edges(self) -> int:
        return int(self.tails.size)

    @property
    def has_positions(self) -> bool:
        return self.positions is not None and bool(np.all(np.isfinite(self.positions)))

    def degree(self) -> np.ndarray:
        """Number of incident edges per node (orientation ignored)."""
        return (np.bincount(self.tails, minlength=self.n_nodes)
                + np.bincount(self.heads, minlength=self.n_nodes))

    def subnetwork(self, nodes) -> tuple["Network", np.ndarray, np.ndarray]:
        """Induced subgraph on ``nodes``.

        Returns the subnetwork together with the global node indices and the
        global edge indices it keeps, in the subnetwork's order.
        """
        nodes = np.asarray(sorted(set(int(v) for v in nodes)), dtype=np.int64)
        local = -np.ones(self.n_nodes, dtype=np.int64)
        local[nodes] = np.arange(nodes.size)
        keep = np.flatnonzero((local[self.tails] >= 0) & (local[self.heads] >= 0))
        sub = Network(
            n_nodes=int(nodes.size),
            tails=local[self.tails[keep]],
            heads=local[self.heads[keep]],
            lengths=self.lengths[keep],
            k=self.k[keep],
            area=self.area[keep],
            positions=None if self.positions is None else self.positions[nodes],
            node_ids=tuple(self.node_ids[i] for i in nodes),
        )
        return sub, nodes, keep


@dataclass(frozen=True)
class ComponentLabeling:
    label: np.ndarray
    K: int

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.label == i)

    def indicator(self, i: int) -> np.ndarray:
        return (self.label == i).astype(float)


def build_incidence(net: Network) -> sp.csr_matrix:
    n_e = net.n_edges
    rows = np.repeat(np.arange(n_e), 2)
    cols = np.column_stack([net.tails, net.heads]).reshape(-1)
    vals = np.tile([-1.0, 1.0], n_e)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_e, net.n_nodes))


def build_conductance(net: Network) -> sp.csr_matrix:
    return sp.diags(net.k / net.lengths, format="csr")


def build_laplacian(B: sp.spmatrix, C: sp.spmatrix) -> sp.csr_matrix:
    """Weighted Laplacian ``B^T C B``, symmetric bit-for-bit."""
    B = sp.csr_matrix(B)
    C = sp.csr_matrix(C)
    n_e, _ = B.shape
    if C.shape != (n_e, n_e):
        raise ValueError(f"conductance shape {C.shape} does not match {n_e} edges")
    L = (B.T @ (C @ B)).tocsr()
    L = (0.5 * (L + L.T)).tocsr()
    L.sum_duplicates()
    L.sort_indices()
    return L


def connected_components(net: Network) -> ComponentLabeling:
    n = net.n_nodes
    adj = sp.csr_matrix(
        (np.ones(net.n_edges), (net.tails, net.heads)), shape=(n, n))
    K, label = _cc(adj, directed=False)
    return ComponentLabeling(label=_frozen(label.astype(np.int64)), K=int(K))


def nodal_balance(B: sp.spmatrix, q: np.ndarray) -> np.ndarray:
    """``Phi = B^T q``: inflow minus outflow at every node."""
    return np.asarray(B.T @ q).reshape(-1)
