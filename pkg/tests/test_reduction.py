import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from fluxlp.network import Network, connected_components
from fluxlp.reduction import BoundarySpec, NotSPD, UnanchoredComponent, evaluate_state, \
    partition_nodes, spd_solve

from conftest import dense_dirichlet, random_instance, reduce


def test_path_affine_maps(path):
    net, bspec = path
    maps, part, _ = reduce(net, bspec)
    assert part.ctrl.tolist() == [2]
    assert part.interior.tolist() == [1]
    np.testing.assert_allclose(maps.u0, [1.0, 0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(maps.Ug, [[0.0], [0.5], [1.0]], atol=1e-15)
    np.testing.assert_allclose(maps.q0, [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(maps.Qg, [[-0.5], [-0.5]], atol=1e-15)
    np.testing.assert_allclose(maps.K_in, [[0.5]], atol=1e-15)
    np.testing.assert_allclose(maps.K_out, [[-0.5]], atol=1e-15)
    np.testing.assert_allclose(maps.Phi0_in, [-0.5], atol=1e-15)
    np.testing.assert_allclose(maps.Phi0_out, [0.5], atol=1e-15)


def test_path_symmetric_state(path):
    net, bspec = path
    maps, _, _ = reduce(net, bspec)
    u, q, Phi = evaluate_state(maps, [0.0])
    np.testing.assert_allclose(u, [1.0, 0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(q, [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(Phi, [-0.5, 0.0, 0.5], atol=1e-15)


def test_partition_roles():
    net = Network(5, [0, 1, 2, 3], [1, 2, 3, 4], np.ones(4), np.ones(4))
    bspec = BoundarySpec({0, 1}, {4}, {1: 2.0, 3: 0.0})
    part = partition_nodes(net, bspec, connected_components(net))
    assert part.fix.tolist() == [1, 3]
    assert part.ctrl.tolist() == [0, 4]
    assert part.interior.tolist() == [2]
    assert part.inflow.tolist() == [0, 1]
    dense = (part.E_fix @ part.E_fix.T + part.E_ctrl @ part.E_ctrl.T
             + part.E_int @ part.E_int.T).toarray()
    np.testing.assert_array_equal(dense, np.eye(5))
    assert bspec.roles(5) == ["in", "fixed", "interior", "fixed", "out"]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), pieces=st.integers(1, 3))
def test_forward_solve_matches_dense_oracle(seed, pieces):
    rng = np.random.default_rng(seed)
    net, bspec = random_instance(rng, pieces=pieces)
    maps, part, _ = reduce(net, bspec)
    g = rng.normal(scale=10.0, size=part.n_ctrl)
    u, q, Phi = evaluate_state(maps, g)
    prescribed = dict(bspec.fixed)
    prescribed.update(zip(part.ctrl.tolist(), g.tolist()))
    u_ref, q_ref, Phi_ref = dense_dirichlet(net, prescribed)
    for got, ref in ((u, u_ref), (q, q_ref), (Phi, Phi_ref)):
        np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-9 * (1 + np.abs(ref).max()))
    # conservation wherever the potential is unknown
    scale = 1 + np.abs(q).max()
    assert np.abs(Phi[part.interior]).max(initial=0.0) <= 1e-10 * scale


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_superposition(seed):
    rng = np.random.default_rng(seed)
    net, bspec = random_instance(rng, pieces=2)
    maps, part, _ = reduce(net, bspec)
    g1, g2 = rng.normal(size=(2, part.n_ctrl))
    a, b = rng.normal(size=2)
    u0, q0, P0 = evaluate_state(maps, np.zeros(part.n_ctrl))
    u1, q1, P1 = evaluate_state(maps, g1)
    u2, q2, P2 = evaluate_state(maps, g2)
    u3, q3, P3 = evaluate_state(maps, a * g1 + b * g2)
    for z, x, y, w in ((u0, u1, u2, u3), (q0, q1, q2, q3), (P0, P1, P2, P3)):
        np.testing.assert_allclose(w - z, a * (x - z) + b * (y - z), atol=1e-9)


def test_gauge_invariance_on_all_control_component(rng):
    # component 0 has only controls; component 1 has a fixed node
    net = Network(7, [0, 1, 2, 1, 4, 5], [1, 2, 3, 3, 5, 6],
                  [1.0, 2.0, 1.5, 1.0, 1.0, 1.0], [1.0, 2.0, 3.0, 1.0, 1.0, 2.0])
    bspec = BoundarySpec({0, 4}, {3, 6}, {5: 1.0})
    maps, part, comps = reduce(net, bspec)
    assert part.ctrl.tolist() == [0, 3, 4, 6]
    shift = np.array([5.0, 5.0, 0.0, 0.0])
    np.testing.assert_allclose(maps.Qg @ shift, 0.0, atol=1e-12)
    g = rng.normal(size=4)
    u1, q1, P1 = evaluate_state(maps, g)
    u2, q2, P2 = evaluate_state(maps, g + shift)
    np.testing.assert_allclose(u2 - u1, 5.0 * comps.indicator(0), atol=1e-10)
    np.testing.assert_allclose(q2, q1, atol=1e-10)
    np.testing.assert_allclose(P2, P1, atol=1e-10)


def test_unanchored_component_raises():
    net = Network(5, [0, 1, 3], [1, 2, 4], np.ones(3), np.ones(3))
    bspec = BoundarySpec({0}, {2}, {})
    with pytest.raises(UnanchoredComponent) as info:
        partition_nodes(net, bspec, connected_components(net))
    assert info.value.component == 1
    assert info.value.nodes == (3, 4)


def test_no_controls(path):
    net, _ = path
    bspec = BoundarySpec({0}, {2}, {0: 1.0, 2: 0.0})
    maps, part, _ = reduce(net, bspec)
    assert part.n_ctrl == 0 and maps.Ug.shape == (3, 0) and maps.Qg.shape == (2, 0)
    u, q, _ = evaluate_state(maps, [])
    np.testing.assert_allclose(u, [1.0, 0.5, 0.0])
    np.testing.assert_allclose(q, [0.5, 0.5])


def test_evaluate_state_rejects_wrong_length(path):
    maps, _, _ = reduce(*path)
    with pytest.raises(ValueError):
        evaluate_state(maps, [1.0, 2.0])


def test_spd_solve_examples():
    A = sp.csc_matrix(np.array([[4.0, 1.0], [1.0, 3.0]]))
    np.testing.assert_allclose(spd_solve(A, [1.0, 2.0]), [1 / 11, 7 / 11], atol=1e-15)
    X = spd_solve(A, np.eye(2))
    np.testing.assert_allclose(X, np.linalg.inv(A.toarray()), atol=1e-15)
    assert spd_solve(sp.csc_matrix((0, 0)), np.zeros((0, 3))).shape == (0, 3)


@pytest.mark.parametrize("M", [
    [[1.0, 2.0], [2.0, 1.0]],
    [[1.0, 1.0], [1.0, 1.0]],
    [[-1.0, 0.0], [0.0, 1.0]],
])
def test_spd_solve_rejects_non_spd(M):
    with pytest.raises(NotSPD):
        spd_solve(sp.csc_matrix(np.array(M)), [1.0, 1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 30))
def test_spd_solve_random(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    A = M @ M.T + n * np.eye(n)
    b = rng.normal(size=n)
    np.testing.assert_allclose(spd_solve(sp.csc_matrix(A), b), np.linalg.solve(A, b),
                               rtol=1e-10, atol=1e-12)


def test_boundary_spec_validation():
    with pytest.raises(ValueError):
        BoundarySpec({1}, {1})
    with pytest.raises(ValueError):
        BoundarySpec({0}, {1}, {0: float("inf")})
    with pytest.raises(ValueError):
        BoundarySpec({7}, {1}).validate(Network(2, [0], [1], [1.0], [1.0]))
