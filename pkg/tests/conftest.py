import numpy as np
import pytest

from fluxlp.network import Network
from fluxlp.reduction import BoundarySpec


def path3():
    """0 -- 1 -- 2 with unit lengths and widths; node 0 fixed at 1, node 2 the control."""
    net = Network(3, [0, 1], [1, 2], [1.0, 1.0], [1.0, 1.0])
    return net, BoundarySpec({0}, {2}, {0: 1.0})


def random_connected(rng, n, extra=0.5, k_range=(0.5, 3.0)):
    """Random spanning tree plus a few chords, random orientation."""
    pairs = {(int(rng.integers(v)), v) for v in range(1, n)}
    for _ in range(int(extra * n)):
        a, b = rng.choice(n, 2, replace=False)
        pairs.add((int(min(a, b)), int(max(a, b))))
    pairs = sorted(pairs)
    tails, heads = [], []
    for a, b in pairs:
        if rng.random() < 0.5:
            a, b = b, a
        tails.append(a)
        heads.append(b)
    m = len(pairs)
    return Network(n, tails, heads, rng.uniform(0.5, 2.0, m), rng.uniform(*k_range, m))


def random_forest(rng, sizes, extra=0.5):
    """Disjoint union of random connected pieces."""
    tails, heads, L, k = [], [], [], []
    off = 0
    for n in sizes:
        piece = random_connected(rng, n, extra)
        tails += (piece.tails + off).tolist()
        heads += (piece.heads + off).tolist()
        L += piece.lengths.tolist()
        k += piece.k.tolist()
        off += n
    return Network(off, tails, heads, L, k)


@pytest.fixture
def path():
    return path3()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def reduce(net, bspec):
    """Operators, partition and affine maps for a fully anchored instance."""
    from fluxlp.network import build_conductance, build_incidence, build_laplacian, \
        connected_components
    from fluxlp.reduction import build_affine_maps, partition_nodes

    B, C = build_incidence(net), build_conductance(net)
    L = build_laplacian(B, C)
    comps = connected_components(net)
    part = partition_nodes(net, bspec, comps)
    u_fix = [bspec.fixed[v] for v in part.fix.tolist()]
    return build_affine_maps(L, B, C, part, u_fix), part, comps


def random_instance(rng, n_lo=4, n_hi=14, pieces=1, n_ctrl_max=None, fix_prob=0.5):
    """Random network with random inflow/outflow/fixed nodes, anchored in every component.

    Returns ``(net, bspec)``.  Inflow and outflow are disjoint; a fixed node
    may coincide with a boundary node.
    """
    from fluxlp.reduction import BoundarySpec

    sizes = [int(rng.integers(n_lo, n_hi + 1)) for _ in range(pieces)]
    net = random_forest(rng, sizes)
    inflow, outflow, fixed = set(), set(), {}
    off = 0
    for size in sizes:
        nodes = rng.permutation(np.arange(off, off + size))
        n_in = int(rng.integers(1, 3))
        n_out = int(rng.integers(1, 3))
        inflow.update(nodes[:n_in].tolist())
        outflow.update(nodes[n_in:n_in + n_out].tolist())
        if rng.random() < fix_prob:
            fixed[int(nodes[rng.integers(size)])] = float(rng.normal(scale=5.0))
        off += size
    if n_ctrl_max is not None:
        ctrl = sorted((inflow | outflow) - set(fixed))
        for v in ctrl[n_ctrl_max:]:
            fixed[v] = float(rng.normal(scale=5.0))
    return net, BoundarySpec(inflow, outflow, fixed)


def dense_dirichlet(net, dirichlet: dict):
    """From-scratch dense solve: returns (u, q, Phi) for prescribed node potentials."""
    n = net.n_nodes
    B = np.zeros((net.n_edges, n))
    B[np.arange(net.n_edges), net.tails] = -1.0
    B[np.arange(net.n_edges), net.heads] = 1.0
    c = net.k / net.lengths
    L = B.T @ (c[:, None] * B)
    known = np.array(sorted(dirichlet), dtype=int)
    free = np.setdiff1d(np.arange(n), known)
    u = np.zeros(n)
    u[known] = [dirichlet[v] for v in known]
    if free.size:
        u[free] = np.linalg.solve(L[np.ix_(free, free)], -L[np.ix_(free, known)] @ u[known])
    q = -c * (B @ u)
    return u, q, B.T @ q


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "REPORT", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.REPORT:
        terminalreporter.write_line(line)
