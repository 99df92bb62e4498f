import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from fluxlp.assembly import EDGE_SIGN, LPProblem, assemble, build_objective, edge_sign_rows, \
    flux_caps
from fluxlp.network import Network
from fluxlp.reduction import BoundarySpec
from fluxlp.solver import INFEASIBLE, OPTIMAL, UNBOUNDED, CyclingGuardExceeded, \
    EnumerationGuardExceeded, boundedness_report, enumerate_vertices, find_descent_ray, \
    find_neutral_line, solve_lp

from conftest import reduce

INF = np.inf


def lp(cost, A=None, b=None, lower=-INF, upper=INF):
    cost = np.asarray(cost, dtype=float)
    n = cost.size
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(b.size, n)
    lo = np.broadcast_to(np.asarray(lower, dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(upper, dtype=float), (n,)).copy()
    return LPProblem(cost, A, b, lo, hi, (EDGE_SIGN,) * b.size)


def test_textbook_maximization():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18, x, y >= 0
    prob = lp([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], lower=0)
    sol = solve_lp(prob)
    assert sol.status == OPTIMAL
    np.testing.assert_allclose(sol.g_opt, [2, 6], atol=1e-10)
    assert sol.objective == pytest.approx(-36)


def test_free_variables_and_negative_rhs():
    # min x + y  s.t.  x + y >= 1,  x - y <= 3,  y <= 5  (all free)
    prob = lp([1, 1], [[-1, -1], [1, -1], [0, 1]], [-1, 3, 5])
    sol = solve_lp(prob)
    assert sol.status == OPTIMAL and sol.objective == pytest.approx(1.0)


def test_beale_degenerate_example_terminates():
    c = [-0.75, 20, -0.5, 6]
    A = [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]]
    sol = solve_lp(lp(c, A, [0, 0, 1], lower=0))
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-1.25)
    np.testing.assert_allclose(sol.g_opt, [1, 0, 1, 0], atol=1e-10)


def test_infeasible():
    sol = solve_lp(lp([1.0], [[1.0]], [-1.0], lower=0))
    assert sol.status == INFEASIBLE and sol.g_opt is None
    assert solve_lp(lp([1.0, 1.0], [[1, 1], [-1, -1]], [1, -2])).status == INFEASIBLE


def _assert_ray(prob, d):
    assert d is not None
    assert prob.cost @ d < -1e-9
    if prob.m:
        assert np.all(prob.A @ d <= 1e-9)
    assert np.all(d[np.isfinite(prob.lower)] >= -1e-12)
    assert np.all(d[np.isfinite(prob.upper)] <= 1e-12)


def test_unbounded_with_certificate():
    prob = lp([-1, -1], [[1, -1]], [1], lower=0)
    sol = solve_lp(prob)
    assert sol.status == UNBOUNDED and sol.objective == -INF
    _assert_ray(prob, sol.ray)
    _assert_ray(prob, find_descent_ray(prob))


def test_empty_problem():
    sol = solve_lp(lp(np.zeros(0), np.zeros((2, 0)), [1.0, 0.0]))
    assert sol.status == OPTIMAL and sol.g_opt.size == 0
    assert solve_lp(lp(np.zeros(0), np.zeros((1, 0)), [-1.0])).status == INFEASIBLE


def test_iteration_guard():
    prob = lp([-3, -5], [[1, 0], [0, 2], [3, 2]], [4, 12, 18], lower=0)
    with pytest.raises(CyclingGuardExceeded):
        solve_lp(prob, max_iter=1)


def test_deterministic():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(15, 6))
    prob = lp(rng.normal(size=6), A, rng.uniform(0.5, 2.0, 15), lower=-10, upper=10)
    first, second = solve_lp(prob), solve_lp(prob)
    assert first.pivots == second.pivots
    np.testing.assert_array_equal(first.g_opt, second.g_opt)


def _highs(prob):
    bounds = [(None if not np.isfinite(a) else a, None if not np.isfinite(b) else b)
              for a, b in zip(prob.lower, prob.upper)]
    res = linprog(prob.cost, A_ub=prob.A if prob.m else None, b_ub=prob.b if prob.m else None,
                  bounds=bounds, method="highs")
    return {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status), res


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), m=st.integers(0, 14),
       kind=st.sampled_from(["box", "free", "half", "mixed"]))
def test_matches_highs(seed, n, m, kind):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    A[rng.random((m, n)) < 0.25] = 0.0
    x0 = rng.normal(size=n)
    b = A @ x0 + rng.uniform(-0.5, 1.5, m)
    lower, upper = np.full(n, -INF), np.full(n, INF)
    if kind == "box":
        lower, upper = -rng.uniform(1, 5, n), rng.uniform(1, 5, n)
    elif kind == "half":
        lower = np.minimum(x0, 0) - rng.uniform(0, 1, n)
    elif kind == "mixed":
        sel = rng.random(n) < 0.5
        lower[sel] = -3.0
        upper[rng.random(n) < 0.3] = 4.0
    prob = lp(rng.normal(size=n), A, b, lower, upper)
    status, ref = _highs(prob)
    sol = solve_lp(prob)
    assert sol.status == status
    if status == OPTIMAL:
        assert sol.objective == pytest.approx(ref.fun, abs=1e-8 * (1 + abs(ref.fun)))
        assert np.all(prob.A @ sol.g_opt <= prob.b + 1e-8)
        assert np.all(sol.g_opt >= prob.lower) and np.all(sol.g_opt <= prob.upper)
    elif status == UNBOUNDED:
        _assert_ray(prob, sol.ray)


def test_enumerate_unit_box():
    verts = enumerate_vertices(lp([1, 1], lower=0, upper=1))
    assert sorted(map(tuple, np.round(verts, 12))) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def _path_lp(net, bspec, bounds=None):
    maps, _, _ = reduce(net, bspec)
    c = build_objective(maps.K_in, maps.K_out)
    A_cap, b_cap = flux_caps(maps.Qg, maps.q0, 1.0, net.k)
    _, A_e, b_e = edge_sign_rows(net, bspec, maps.q0, maps.Qg)
    return maps, assemble(-c, A_cap, b_cap, A_e, b_e, bounds)


def test_enumerate_path(path):
    _, prob = _path_lp(*path)
    verts = enumerate_vertices(prob)
    assert sorted(float(v[0]) for v in verts) == pytest.approx([-1.0, 1.0])
    sol = solve_lp(prob)
    assert sol.g_opt[0] == pytest.approx(-1.0)


def test_enumerate_infeasible_and_guard():
    assert enumerate_vertices(lp([1.0], [[1.0]], [-1.0], lower=0)) == []
    with pytest.raises(EnumerationGuardExceeded):
        enumerate_vertices(lp(np.ones(13), lower=0, upper=1))
    with pytest.raises(EnumerationGuardExceeded):
        enumerate_vertices(lp([1.0], np.ones((41, 1)), np.ones(41)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), m=st.integers(0, 8))
def test_enumeration_minimum_equals_simplex(seed, n, m):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    b = A @ rng.uniform(-1, 1, n) + rng.uniform(0, 1, m)
    prob = lp(rng.normal(size=n), A, b, -2.0, 2.0)
    verts = enumerate_vertices(prob)
    sol = solve_lp(prob)
    assert sol.optimal and verts
    best = min(prob.cost @ v for v in verts)
    assert sol.objective == pytest.approx(best, abs=1e-8)


def test_descent_ray_examples():
    assert find_descent_ray(lp([1.0], lower=0)) is None
    d = find_descent_ray(lp([-1.0, 0.0], [[1.0, -1.0]], [0.0]))
    _assert_ray(lp([-1.0, 0.0], [[1.0, -1.0]], [0.0]), d)


def test_neutral_line():
    # min x0 with x1 free and absent from every row: a line along x1
    prob = lp([1.0, 0.0], [[-1.0, 0.0]], [0.0])
    d = find_neutral_line(prob)
    np.testing.assert_allclose(d, [0.0, 1.0], atol=1e-12)
    assert find_neutral_line(lp([1.0], [[-1.0]], [0.0])) is None


def test_boundedness_path(path):
    net, bspec = path
    maps, prob = _path_lp(net, bspec)
    rep = boundedness_report(prob, maps.Qg, maps.q0, net.k * 1.0)
    gram_min = np.sqrt(np.linalg.eigvalsh(maps.Qg.T @ maps.Qg).min())
    assert rep.sigma_min == pytest.approx(gram_min) and rep.sigma_min == pytest.approx(np.sqrt(0.5))
    assert rep.verdict == "bounded" and rep.case_ii_rank and not rep.case_i_box
    assert rep.norm_bound == pytest.approx(1.0)
    assert rep.norm_bound_two_sided == pytest.approx(3.0)
    g = solve_lp(prob).g_opt
    assert np.linalg.norm(g) <= rep.norm_bound + 1e-12

    _, boxed = _path_lp(net, bspec, bounds=(-5, 5))
    assert boundedness_report(boxed, maps.Qg, maps.q0, net.k).verdict == "compact"


def test_boundedness_verdicts_on_plain_lps():
    Qg, q0, qm = np.zeros((1, 1)), np.zeros(1), np.ones(1)
    rep = boundedness_report(lp([-1.0]), Qg, q0, qm)
    assert rep.verdict == "descent-ray-found"
    _assert_ray(lp([-1.0]), rep.case_iii_descent_ray)
    assert boundedness_report(lp([1.0], [[-1.0]], [0.0]), Qg, q0, qm).verdict == "bounded-below"


def test_two_components_without_gauge():
    # component {0,1} has only controls; {2,3} is anchored by a fixed inflow node
    net = Network(4, [0, 2], [1, 3], [1.0, 1.0], [1.0, 2.0])
    bspec = BoundarySpec({0, 2}, {1, 3}, {2: 1.0})
    maps, prob = _path_lp(net, bspec)
    shift = np.array([1.0, 1.0, 0.0])
    np.testing.assert_allclose(maps.Qg @ shift, 0.0, atol=1e-14)
    rep = boundedness_report(prob, maps.Qg, maps.q0, net.k)
    assert not rep.case_ii_rank
    assert rep.verdict in ("inconclusive", "descent-ray-found")
    if rep.neutral_ray is not None:
        d = rep.neutral_ray / np.abs(rep.neutral_ray).max()
        np.testing.assert_allclose(np.abs(d), [1.0, 1.0, 0.0], atol=1e-9)
