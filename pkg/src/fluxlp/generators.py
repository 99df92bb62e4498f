"""Synthetic networks for testing and demonstration.

These are labelled emulations, not real geometries:

* ``grid``   -- rectangular lattice, inflow on the left column, outflow on the right;
* ``radial`` -- concentric rings joined by spokes (a stadium-like bowl), inflow
  gates on the inner ring and outflow gates on the outer ring;
* ``multi_component`` -- several disjoint planar street patches of varying size,
  each with its own inflow and outflow gates on its convex hull.

Edge lengths come from node positions; conductivities (corridor widths) are
drawn uniformly from ``width``.  Edge orientation is random, so both tail and
head sign rules get exercised.  Output is fully determined by ``seed``.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import ConvexHull, Delaunay

from .network import Network
from .reduction import BoundarySpec

KINDS = ("grid", "radial", "multi_component")


def _orient(rng, pairs):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    flip = rng.random(len(pairs)) < 0.5
    pairs[flip] = pairs[flip][:, ::-1]
    return pairs[:, 0], pairs[:, 1]


def _assemble(rng, pos, pairs, width, inflow, outflow):
    tails, heads = _orient(rng, pairs)
    lengths = np.linalg.norm(pos[heads] - pos[tails], axis=1)
    k = rng.uniform(width[0], width[1], size=tails.size)
    net = Network(len(pos), tails, heads, lengths, k, positions=pos)
    return net, BoundarySpec(inflow, outflow)


def grid(rows: int, cols: int, spacing: float = 10.0, width=(1.0, 6.0), seed: int = 0):
    if rows < 2 or cols < 2:
        raise ValueError("grid needs rows >= 2 and cols >= 2")
    rng = np.random.default_rng(seed)
    node = np.arange(rows * cols).reshape(rows, cols)
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    pos = np.column_stack([cc.ravel(), rr.ravel()]).astype(float) * spacing
    pairs = [(node[r, c], node[r, c + 1]) for r in range(rows) for c in range(cols - 1)]
    pairs += [(node[r, c], node[r + 1, c]) for r in range(rows - 1) for c in range(cols)]
    return _assemble(rng, pos, pairs, width, node[:, 0], node[:, -1])


def radial(rings: int, spokes: int, gate_stride: int = 2, inner_radius: float = 40.0,
           ring_gap: float = 8.0, jitter: float = 0.15, width=(2.0, 8.0), seed: int = 0):
    if rings < 2 or spokes < 2:
        raise ValueError("radial needs rings >= 2 and spokes >= 2")
    if gate_stride < 1:
        raise ValueError("gate_stride must be >= 1")
    rng = np.random.default_rng(seed)
    step = 2 * np.pi / spokes
    theta = np.arange(spokes) * step
    pos = []
    for r in range(rings):
        radius = inner_radius + r * ring_gap
        ang = theta + rng.uniform(-jitter, jitter, spokes) * step
        pos.append(np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]))
    pos = np.vstack(pos)
    node = np.arange(rings * spokes).reshape(rings, spokes)
    pairs = []
    for r in range(rings):
        # a two-spoke "ring" would duplicate its single edge
        count = spokes if spokes > 2 else 1
        pairs += [(node[r, s], node[r, (s + 1) % spokes]) for s in range(count)]
    pairs += [(node[r, s], node[r + 1, s]) for r in range(rings - 1) for s in range(spokes)]
    gates = np.arange(0, spokes, gate_stride)
    return _assemble(rng, pos, pairs, width, node[0, gates], node[-1, gates])


def _component_sizes(rng, count, total, smallest):
    weights = rng.lognormal(mean=0.0, sigma=0.8, size=count)
    sizes = np.maximum(smallest, np.floor(weights / weights.sum() * total)).astype(int)
    sizes[np.argmax(sizes)] += max(0, total - sizes.sum())
    return sizes


def multi_component(count: int, total_nodes: int = 600, keep_extra: float = 0.45,
                    spacing: float = 12.0, gate_fraction: float = 0.35,
                    width=(1.0, 10.0), seed: int = 0):
    if count < 1:
        raise ValueError("multi_component needs count >= 1")
    if total_nodes < 6 * count:
        raise ValueError("need at least 6 nodes per component")
    rng = np.random.default_rng(seed)
    sizes = _component_sizes(rng, count, total_nodes, smallest=6)
    pos_all, pairs, inflow, outflow = [], [], [], []
    offset, x0 = 0, 0.0
    for size in sizes:
        side = spacing * np.sqrt(size)
        pts = rng.uniform(0.0, side, size=(size, 2)) + [x0, 0.0]
        x0 += side + 4 * spacing
        tri = Delaunay(pts)
        simplex_edges = np.vstack([tri.simplices[:, [0, 1]], tri.simplices[:, [1, 2]],
                                   tri.simplices[:, [0, 2]]])
        simplex_edges = np.unique(np.sort(simplex_edges, axis=1), axis=0)
        lengths = np.linalg.norm(pts[simplex_edges[:, 0]] - pts[simplex_edges[:, 1]], axis=1)
        dist = coo_matrix((lengths, (simplex_edges[:, 0], simplex_edges[:, 1])), shape=(size, size))
        tree = minimum_spanning_tree(dist).tocoo()
        tree_set = {tuple(sorted(p)) for p in zip(tree.row.tolist(), tree.col.tolist())}
        keep = [tuple(p) for p in simplex_edges.tolist()
                if tuple(p) in tree_set or rng.random() < keep_extra]
        pairs += [(a + offset, b + offset) for a, b in keep]

        hull = ConvexHull(pts).vertices  # counter-clockwise
        n_gates = max(2, int(round(gate_fraction * hull.size)))
        gates = hull[np.linspace(0, hull.size, n_gates, endpoint=False).astype(int)]
        inflow += [int(g) + offset for g in gates[0::2]]
        outflow += [int(g) + offset for g in gates[1::2]]
        pos_all.append(pts)
        offset += size
    return _assemble(rng, np.vstack(pos_all), pairs, width, inflow, outflow)


def generate_synthetic(kind: str, params: dict | None = None, seed: int = 0):
    params = dict(params or {})
    if kind == "grid":
        return grid(seed=seed, **params)
    if kind == "radial":
        return radial(seed=seed, **params)
    if kind == "multi_component":
        return multi_component(seed=seed, **params)
    raise ValueError(f"unknown generator kind {kind!r}; choose from {', '.join(KINDS)}")
