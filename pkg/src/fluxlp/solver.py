"""Linear programming for the boundary-control problem.

:func:`solve_lp` is a two-phase primal simplex for bounded variables.  Each
row ``a_i g <= b_i`` gets a slack ``s_i >= 0``; phase 1 adds one artificial
column that absorbs every initially violated row and minimizes it away.
The tableau is kept in compact dictionary form (basic rows against the
nonbasic columns), so a pivot costs ``O(rows * n)`` for ``n`` controls, and
it is refactorized from the original data every ``REFACTOR_EVERY`` pivots.
Pricing is Dantzig's rule, switching to Bland's rule after
``5 * (rows + cols)`` iterations.

:func:`enumerate_vertices` is a brute-force oracle for small instances and
:func:`boundedness_report` certifies why an optimum exists (or does not).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .assembly import CAP_LOWER, CAP_UPPER, LPProblem

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

TOL_FEAS = 1e-8
TOL_OPT = 1e-9
PIVOT_TOL = 1e-10
REFACTOR_EVERY = 100
ZERO_ROW_RTOL = 1e-12


class CyclingGuardExceeded(RuntimeError):
    pass


class EnumerationGuardExceeded(ValueError):
    pass


@dataclass(frozen=True)
class LPSolution:
    status: str
    g_opt: np.ndarray | None
    objective: float
    ray: np.ndarray | None
    iterations: int
    pivots: tuple = ()

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Bounded-variable simplex state.

    Columns of ``M`` are ordered as controls, slacks, artificial.  Basic
    values obey ``x_B = h - T x_N``; ``d`` holds reduced costs of the
    nonbasic columns.
    """

    def __init__(self, A, b, lower, upper, tol_feas, tol_opt):
        m, n = A.shape
        self.m, self.n = m, n
        self.tol_feas, self.tol_opt = tol_feas, tol_opt
        self.art = n + m
        self.lb = np.concatenate([lower, np.zeros(m), [0.0]])
        self.ub = np.concatenate([upper, np.full(m, np.inf), [np.inf]])

        x = np.zeros(n + m + 1)
        start = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
        x[:n] = start
        resid = b - A @ start
        w = (resid < 0).astype(float)
        x[n:n + m] = resid
        self.x = x
        self.b = b
        self.M = sp.hstack([sp.csc_matrix(A), sp.identity(m, format="csc"),
                            sp.csc_matrix(-w.reshape(-1, 1))], format="csc")
        self.basis = np.arange(n, n + m)
        self.nonbasic = np.concatenate([np.arange(n), [self.art]])
        self.T = np.hstack([A, -w.reshape(-1, 1)]) if m else np.zeros((0, n + 1))
        self.cost = np.zeros(n + m + 1)
        self.d = np.zeros(n + 1)
        self.iterations = 0
        self.since_refactor = 0
        self.pivots: list[tuple[int, int]] = []

    # -- linear algebra -------------------------------------------------
    def refactor(self):
        if self.m:
            B = self.M[:, self.basis].tocsc()
            lu = splu(B, permc_spec="COLAMD")
            N = self.M[:, self.nonbasic].toarray()
            self.T = lu.solve(N)
            xN = self.x[self.nonbasic]
            self.x[self.basis] = lu.solve(self.b - N @ xN)
        self.price_all()
        self.since_refactor = 0

    def price_all(self):
        self.d = self.cost[self.nonbasic] - self.T.T @ self.cost[self.basis]

    def set_cost(self, cost):
        self.cost = cost
        self.price_all()

    def pivot(self, r: int, k: int):
        T = self.T
        p = T[r, k]
        row = T[r, :] / p
        col = T[:, k].copy()
        T -= np.outer(col, row)
        T[r, :] = row
        T[:, k] = -col / p
        T[r, k] = 1.0 / p
        dk = self.d[k]
        self.d -= dk * row
        self.d[k] = -dk / p
        self.basis[r], self.nonbasic[k] = self.nonbasic[k], self.basis[r]
        self.pivots.append((int(self.basis[r]), int(self.nonbasic[k])))
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    # -- one phase ------------------------------------------------------
    def _entering(self, bland: bool):
        var = self.nonbasic
        xv = self.x[var]
        up = (self.d < -self.tol_opt) & (xv < self.ub[var])
        down = (self.d > self.tol_opt) & (xv > self.lb[var])
        elig = np.flatnonzero(up | down)
        if elig.size == 0:
            return None
        if bland:
            k = int(elig[np.argmin(var[elig])])
        else:
            mag = np.abs(self.d[elig])
            best = np.flatnonzero(mag == mag.max())
            k = int(elig[best[np.argmin(var[elig[best]])]])
        return k, (1.0 if self.d[k] < 0 else -1.0)

    def _ratio(self, alpha, bland: bool):
        xB = self.x[self.basis]
        lbB = self.lb[self.basis]
        ubB = self.ub[self.basis]
        lim = np.full(self.m, np.inf)
        dec = alpha > PIVOT_TOL
        inc = alpha < -PIVOT_TOL
        with np.errstate(invalid="ignore"):
            lim[dec] = (xB[dec] - lbB[dec]) / alpha[dec]
            lim[inc] = (ubB[inc] - xB[inc]) / -alpha[inc]
        lim = np.where(np.isnan(lim), np.inf, np.maximum(lim, 0.0))
        if self.m == 0:
            return np.inf, -1
        t = lim.min()
        if not np.isfinite(t):
            return np.inf, -1
        ties = np.flatnonzero(lim <= t + 1e-12 * (1.0 + t))
        if bland:
            r = int(ties[np.argmin(self.basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(alpha[ties]))])
        return float(lim[r]), r

    def run(self, max_iter: int, bland_after: int):
        """Iterate to optimality. Returns ``None`` or an unbounded direction."""
        while True:
            self.iterations += 1
            if self.iterations > max_iter:
                raise CyclingGuardExceeded(f"no convergence after {max_iter} iterations")
            pick = self._entering(bland=self.iterations > bland_after)
            if pick is None:
                return None
            k, sigma = pick
            j = self.nonbasic[k]
            alpha = sigma * self.T[:, k]
            t_row, r = self._ratio(alpha, bland=self.iterations > bland_after)
            t_flip = self.ub[j] - self.lb[j]
            if not np.isfinite(t_row) and not np.isfinite(t_flip):
                ray = np.zeros(self.x.size)
                ray[j] = sigma
                ray[self.basis] = -alpha
                return ray
            if t_flip <= t_row:
                self.x[j] = self.ub[j] if sigma > 0 else self.lb[j]
                self.x[self.basis] -= t_flip * alpha
                continue
            self.x[j] += sigma * t_row
            self.x[self.basis] -= t_row * alpha
            leaving = self.basis[r]
            self.x[leaving] = self.lb[leaving] if alpha[r] > 0 else self.ub[leaving]
            self.pivot(r, k)

    def drive_out_artificial(self):
        where = np.flatnonzero(self.basis == self.art)
        if where.size:
            r = int(where[0])
            cand = np.flatnonzero((np.abs(self.T[r, :]) > 1e-7) & (self.nonbasic != self.art))
            if cand.size:
                k = int(cand[np.argmax(np.abs(self.T[r, cand]))])
                self.pivot(r, k)
        self.x[self.art] = 0.0
        self.ub[self.art] = 0.0


def _normalize_rows(A, b):
    scale = np.abs(A).max(axis=1) if A.size else np.zeros(A.shape[0])
    scale = np.where(scale > 0, scale, 1.0)
    return A / scale[:, None], b / scale


def solve_lp(lp: LPProblem, tol_feas: float = TOL_FEAS, tol_opt: float = TOL_OPT,
             max_iter: int | None = None) -> LPSolution:
    n = lp.n
    A, b = np.asarray(lp.A, dtype=float), np.asarray(lp.b, dtype=float)
    # rows that are roundoff-level relative to the matrix would blow up under
    # row scaling, so they are treated as constant rows
    if A.size:
        row_max = np.abs(A).max(axis=1)
        zero = row_max <= ZERO_ROW_RTOL * row_max.max()
    else:
        zero = np.ones(A.shape[0], dtype=bool)
    if np.any(zero & (b < -tol_feas)):
        return LPSolution(INFEASIBLE, None, np.nan, None, 0)
    keep = ~zero & np.isfinite(b)
    if np.any(b[~zero] == -np.inf):
        return LPSolution(INFEASIBLE, None, np.nan, None, 0)
    A, b = _normalize_rows(A[keep], b[keep])
    m = b.size
    if n == 0:
        if m and b.min() < -tol_feas:
            return LPSolution(INFEASIBLE, None, np.nan, None, 0)
        return LPSolution(OPTIMAL, np.zeros(0), 0.0, None, 0)

    tab = _Tableau(A, b, lp.lower.astype(float), lp.upper.astype(float), tol_feas, tol_opt)
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    bland_after = 5 * (m + n)

    resid = tab.x[n:n + m]
    if m and resid.min() < 0:
        r = int(np.argmin(resid))
        tab.x[tab.art] = -resid[r]
        tab.x[tab.basis] -= tab.x[tab.art] * tab.T[:, n]
        tab.x[tab.basis[r]] = 0.0
        tab.pivot(r, n)
        phase1 = np.zeros(tab.x.size)
        phase1[tab.art] = 1.0
        tab.set_cost(phase1)
        tab.run(max_iter, bland_after)
        tab.refactor()
        if tab.x[tab.art] > tol_feas:
            return LPSolution(INFEASIBLE, None, np.nan, None, tab.iterations, tuple(tab.pivots))
    tab.drive_out_artificial()

    cost = np.zeros(tab.x.size)
    cost[:n] = lp.cost
    tab.set_cost(cost)
    tab.refactor()
    direction = tab.run(max_iter, bland_after)
    if direction is not None:
        ray = _clean_ray(lp, direction[:n], tol_opt)
        if ray is None:
            ray = find_descent_ray(lp, tol_opt=tol_opt)
        return LPSolution(UNBOUNDED, None, -np.inf, ray, tab.iterations, tuple(tab.pivots))
    tab.refactor()
    # refactorization can expose a reduced cost that drifted past tolerance
    if tab._entering(bland=True) is not None:
        direction = tab.run(max_iter, bland_after)
        if direction is not None:
            ray = _clean_ray(lp, direction[:n], tol_opt)
            if ray is None:
                ray = find_descent_ray(lp, tol_opt=tol_opt)
            return LPSolution(UNBOUNDED, None, -np.inf, ray, tab.iterations, tuple(tab.pivots))
        tab.refactor()
    g = tab.x[:n].copy()
    g = np.clip(g, lp.lower, lp.upper)
    return LPSolution(OPTIMAL, g, float(lp.cost @ g), None, tab.iterations, tuple(tab.pivots))


def _recession_bounds(lp: LPProblem):
    lo_f, hi_f = np.isfinite(lp.lower), np.isfinite(lp.upper)
    lo = np.where(lo_f, 0.0, -1.0)
    hi = np.where(hi_f, 0.0, 1.0)
    return lo, hi


def _clean_ray(lp: LPProblem, d, tol_opt):
    d = np.asarray(d, dtype=float)
    scale = np.abs(d).max() if d.size else 0.0
    if scale == 0:
        return None
    d = d / scale
    d[np.abs(d) < 1e-12] = 0.0
    lo, hi = _recession_bounds(lp)
    d = np.clip(d, lo, hi)
    if lp.m and (lp.A @ d).max() > 1e-9:
        return None
    if lp.cost @ d > -max(tol_opt, 1e-9):
        return None
    return d


def find_descent_ray(lp: LPProblem, tol_opt: float = TOL_OPT):
    """A direction ``d`` in the recession cone with ``cost^T d < 0``, or ``None``."""
    lo, hi = _recession_bounds(lp)
    aux = LPProblem(cost=lp.cost.copy(), A=lp.A.copy(), b=np.zeros(lp.m),
                    lower=lo, upper=hi, row_tags=lp.row_tags)
    sol = solve_lp(aux, tol_opt=tol_opt)
    if sol.status != OPTIMAL or sol.objective >= -tol_opt:
        return None
    d = sol.g_opt.copy()
    d[np.abs(d) < 1e-12] = 0.0
    return d


def find_neutral_line(lp: LPProblem, rtol: float = 1e-9):
    """A unit direction ``d`` with ``A d = 0``, ``cost^T d = 0`` that keeps every bound.

    Such a line in the feasible set means optimal controls are not unique.
    """
    free = np.flatnonzero(~np.isfinite(lp.lower) & ~np.isfinite(lp.upper))
    if free.size == 0:
        return None
    M = np.vstack([lp.A[:, free], lp.cost[free][None, :]])
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    smax = s.max() if s.size else 0.0
    rank = int(np.sum(s > rtol * max(smax, 1.0)))
    if rank >= free.size:
        return None
    d = np.zeros(lp.n)
    v = vt[rank]
    d[free] = v / np.abs(v).max()
    if d[np.argmax(np.abs(d))] < 0:
        d = -d
    return d


def enumerate_vertices(lp: LPProblem, tol_feas: float = TOL_FEAS, chunk: int = 100_000):
    """Every basic feasible point of ``{A g <= b, lower <= g <= upper}``.

    Brute force over all ``n``-subsets of constraints; limited to ``n <= 12``
    and at most 40 rows plus finite bounds.
    """
    n = lp.n
    n_fin = int(np.isfinite(lp.lower).sum() + np.isfinite(lp.upper).sum())
    if n > 12 or lp.m + n_fin > 40:
        raise EnumerationGuardExceeded(
            f"vertex enumeration limited to n <= 12 and 40 constraints (got n={n}, {lp.m + n_fin})")
    rows = [lp.A]
    rhs = [lp.b]
    eye = np.eye(n)
    fu, fl = np.isfinite(lp.upper), np.isfinite(lp.lower)
    rows += [eye[fu], -eye[fl]]
    rhs += [lp.upper[fu], -lp.lower[fl]]
    G = np.vstack(rows) if n else np.zeros((sum(r.shape[0] for r in rows), 0))
    h = np.concatenate(rhs)

    scale = np.abs(G).max(axis=1) if n else np.zeros(h.size)
    nz = scale > ZERO_ROW_RTOL * scale.max(initial=0.0)
    if np.any(~nz & (h < -tol_feas)):
        return []
    G, h = G[nz] / scale[nz, None], h[nz] / scale[nz]
    if n == 0:
        return [np.zeros(0)]

    # a looser parallel copy of a row is never active at a feasible point
    order = np.lexsort((h,) + tuple(np.round(G[:, ::-1].T, 12)))
    keep = []
    for i in order:
        if keep and np.allclose(G[i], G[keep[-1]], rtol=0, atol=1e-12):
            continue
        keep.append(i)
    keep = np.array(sorted(keep))
    G, h = G[keep], h[keep]
    if G.shape[0] < n:
        return []

    found = []
    combos = itertools.combinations(range(G.shape[0]), n)
    while True:
        idx = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if idx.size == 0:
            break
        sys_m = G[idx]
        s = np.linalg.svd(sys_m, compute_uv=False)
        ok = s[:, -1] > 1e-10 * np.maximum(s[:, 0], 1e-300)
        if not ok.any():
            continue
        X = np.linalg.solve(sys_m[ok], h[idx[ok]][..., None])[..., 0]
        feas = (X @ G.T - h).max(axis=1) <= tol_feas * (1.0 + np.abs(X).max(axis=1))
        found.append(X[feas])
    if not found:
        return []
    pts = np.vstack(found)
    if pts.size == 0:
        return []
    pts = pts[np.lexsort(pts.T[::-1])]
    unique = []
    for p in pts:
        if unique and np.any(np.abs(np.asarray(unique) - p).max(axis=1) <= 1e-9):
            continue
        unique.append(p)
    return [np.array(p) for p in unique]


@dataclass(frozen=True)
class BoundednessDiagnosis:
    case_i_box: bool
    case_ii_rank: bool
    sigma_min: float
    sigma_max: float
    norm_bound: float
    norm_bound_two_sided: float
    case_iii_descent_ray: np.ndarray | None
    neutral_ray: np.ndarray | None
    verdict: str

    def as_dict(self) -> dict:
        def vec(v):
            return None if v is None else [float(x) for x in v]
        return {
            "case_i_box": self.case_i_box,
            "case_ii_rank": self.case_ii_rank,
            "sigma_min": float(self.sigma_min),
            "sigma_max": float(self.sigma_max),
            "norm_bound": float(self.norm_bound),
            "norm_bound_two_sided": float(self.norm_bound_two_sided),
            "case_iii_descent_ray": vec(self.case_iii_descent_ray),
            "neutral_ray": vec(self.neutral_ray),
            "verdict": self.verdict,
        }


def singular_values(Qg) -> np.ndarray:
    Qg = np.asarray(Qg, dtype=float)
    if Qg.size == 0:
        return np.zeros(0)
    return np.linalg.svd(Qg, compute_uv=False)


def boundedness_report(lp: LPProblem, Qg, q0, q_max, tol_opt: float = TOL_OPT) -> BoundednessDiagnosis:
    Qg = np.asarray(Qg, dtype=float)
    q0 = np.asarray(q0, dtype=float)
    q_max = np.asarray(q_max, dtype=float)
    case_i = bool(np.all(np.isfinite(lp.lower)) and np.all(np.isfinite(lp.upper)))

    s = singular_values(Qg)
    smax = float(s.max()) if s.size else 0.0
    smin = float(s.min()) if s.size == lp.n and s.size else 0.0
    tags = set(lp.row_tags)
    two_sided = CAP_UPPER in tags and CAP_LOWER in tags and bool(np.all(np.isfinite(q_max)))
    full_rank = lp.n > 0 and smax > 0 and smin > 1e-10 * smax
    case_ii = bool(two_sided and full_rank)
    if full_rank and q_max.size:
        root_m = np.sqrt(Qg.shape[0])
        norm_bound = root_m * np.abs(q_max - q0).max() / smin
        norm_bound_2 = root_m * (q_max + np.abs(q0)).max() / smin
    else:
        norm_bound = norm_bound_2 = np.inf

    ray = neutral = None
    if case_i:
        verdict = "compact"
    elif case_ii:
        verdict = "bounded"
    else:
        ray = find_descent_ray(lp, tol_opt=tol_opt)
        if ray is not None:
            verdict = "descent-ray-found"
        else:
            neutral = find_neutral_line(lp)
            verdict = "inconclusive" if neutral is not None else "bounded-below"
    return BoundednessDiagnosis(case_i, case_ii, smin, smax, float(norm_bound), float(norm_bound_2),
                                ray, neutral, verdict)
