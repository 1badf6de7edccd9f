"""Exact convex subroutines over treeplexes and their products.

Euclidean projection (active-set QP with an affine fast path per active
set), best response (bottom-up dynamic program, with an LP cross-check
variant), the symmetric-equilibrium polytope X* = {x in X :
min_{x' in X} x'^T R x = 0} via its LP-duality lift, and squared distance
to X* via lazy vertex cuts separated by the best-response oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .network import NetworkGame, ProductTreeplex
from .sequence_form import SequenceStrategy, Treeplex, uniform_strategy

# feasibility / dual tolerances of the active-set solver
FEAS_TOL = 1e-11
DUAL_TOL = 1e-11
KKT_TOL = 1e-10

# most recent optimal active sets tried first on the projection fast path
HINT_KEEP = 4


@dataclass(frozen=True)
class QPSolution:
    """Minimizer of a projection QP with its active bound set and the
    worst KKT violation (stationarity, feasibility, dual sign,
    complementarity)."""

    point: np.ndarray
    active_set: tuple[int, ...]
    kkt_residual: float


def _stack_rows(C: np.ndarray, extra: np.ndarray | None) -> np.ndarray:
    if extra is None or len(extra) == 0:
        return C
    return np.vstack([C, extra])


def _eqp_affine(C: np.ndarray, d: np.ndarray, rows: np.ndarray, rhs: np.ndarray):
    """Affine maps (M, c, NU, e, MU, f) for the equality-constrained QP
    min 0.5||z - p||^2 s.t. Cz = d and rows.z = rhs: z = Mp + c,
    equality multipliers nu = NUp + e, working-row multipliers mu = MUp + f."""
    A = _stack_rows(C, rows)
    b = np.concatenate([d, rhs]) if len(rows) else d
    K = np.linalg.pinv(A @ A.T)
    KA = K @ A
    Kb = K @ b
    M = np.eye(A.shape[1]) - A.T @ KA
    c = A.T @ Kb
    m = C.shape[0]
    return M, c, -KA[:m], Kb[:m], -KA[m:], Kb[m:]


class _ActiveSetQP:
    """Primal active-set solver for min 0.5||z - p||^2 over
    {Cz = d, Gz >= h}; bound constraints are rows of G like any other."""

    def __init__(self, C: np.ndarray, d: np.ndarray, G: np.ndarray, h: np.ndarray):
        self.C = C
        self.d = d
        self.G = G
        self.h = h
        self.max_iter = 200 + 10 * (C.shape[1] + len(G))

    def solve(self, p: np.ndarray, z0: np.ndarray, W0: tuple[int, ...] = ()):
        C, d, G, h = self.C, self.d, self.G, self.h
        z = np.asarray(z0, dtype=float).copy()
        W = [i for i in W0 if i < len(G) and (G[i] @ z - h[i]) <= FEAS_TOL]
        for _ in range(self.max_iter):
            rows = G[W] if W else np.zeros((0, C.shape[1]))
            rhs = h[W] if W else np.zeros(0)
            M, c, NU, e, MU, f = _eqp_affine(C, d, rows, rhs)
            zhat = M @ p + c
            slack = G @ zhat - h
            if slack.min() >= -FEAS_TOL:
                z = zhat
                mu = MU @ p + f
                if len(mu) == 0 or mu.min() >= -DUAL_TOL:
                    nu = NU @ p + e
                    return self._finish(p, z, W, nu, mu)
                W.pop(int(np.argmin(mu)))
                continue
            dz = zhat - z
            move = G @ dz
            cur = G @ z - h
            block = -1
            alpha = 1.0
            for i in range(len(G)):
                if i in W or move[i] >= -1e-14:
                    continue
                step = max(cur[i], 0.0) / (-move[i])
                if step < alpha - 1e-15:
                    alpha = step
                    block = i
            if block < 0:
                # numerical corner: treat as feasible enough
                z = zhat
                nu = NU @ p + e
                mu = MU @ p + f
                return self._finish(p, z, W, nu, mu)
            z = z + alpha * dz
            W.append(block)
        raise RuntimeError("active-set QP did not converge within the iteration cap")

    def _finish(self, p, z, W, nu, mu):
        z = z.copy()
        z[(z < 0) & (z >= -10 * FEAS_TOL)] = 0.0
        rows = np.array(W, dtype=int)
        resid = self._kkt_residual(p, z, rows, nu, mu)
        return z, tuple(int(i) for i in W), nu, mu, resid

    def _kkt_residual(self, p, z, rows, nu, mu) -> float:
        C, d, G, h = self.C, self.d, self.G, self.h
        stat = z - p - C.T @ nu
        if len(rows):
            stat -= G[rows].T @ mu
        r = float(np.max(np.abs(stat))) if len(stat) else 0.0
        r = max(r, float(np.max(np.abs(C @ z - d))) if len(d) else 0.0)
        slack = G @ z - h
        r = max(r, float(max(0.0, -slack.min())) if len(slack) else 0.0)
        if len(rows):
            r = max(r, float(max(0.0, -mu.min())))
            r = max(r, float(np.max(np.abs(mu * slack[rows]))))
        return r


def _bound_rows(dim: int) -> tuple[np.ndarray, np.ndarray]:
    return np.eye(dim), np.zeros(dim)


def _treeplex_qp(tp: Treeplex) -> _ActiveSetQP:
    qp = tp._proj_cache.get("qp")
    if qp is None:
        G, h = _bound_rows(tp.dim)
        qp = _ActiveSetQP(tp.C, tp.d, G, h)
        tp._proj_cache["qp"] = qp
    return qp


def _try_cached(tp, p: np.ndarray) -> QPSolution | None:
    """Verified fast path: for each recently optimal active set, apply its
    cached affine solution map and accept iff the candidate passes the
    KKT sign checks (stationarity and complementarity hold by
    construction of the map)."""
    cache = tp._proj_cache
    for W in tp._proj_hint:
        entry = cache.get(W)
        if entry is None:
            continue
        M, c, _, _, MU, f = entry
        x = M @ p + c
        neg = float(x.min())
        if neg < -FEAS_TOL:
            continue
        mu = MU @ p + f
        worst_mu = float(mu.min()) if len(mu) else 0.0
        if worst_mu < -DUAL_TOL:
            continue
        if W:
            x[np.fromiter(W, dtype=int)] = 0.0
        x[x < 0] = 0.0
        resid = float(np.max(np.abs(tp.C @ x - tp.d)))
        resid = max(resid, -min(neg, 0.0), -min(worst_mu, 0.0))
        if resid <= KKT_TOL:
            return QPSolution(point=x, active_set=tuple(sorted(W)), kkt_residual=resid)
    return None


CACHE_KEEP = 64


def _remember(tp, W: tuple[int, ...]) -> None:
    key = frozenset(W)
    cache = tp._proj_cache
    if key not in cache:
        rows = np.eye(tp.dim)[sorted(key)] if key else np.zeros((0, tp.dim))
        cache[key] = _eqp_affine(tp.C, tp.d, rows, np.zeros(len(key)))
        stale = [k for k in cache if isinstance(k, frozenset)][:-CACHE_KEEP]
        for k in stale:
            del cache[k]
    if key in tp._proj_hint:
        tp._proj_hint.remove(key)
    tp._proj_hint.insert(0, key)
    del tp._proj_hint[HINT_KEEP:]


def project(point: np.ndarray, tp: Union[Treeplex, ProductTreeplex]) -> QPSolution:
    """Euclidean projection onto the polytope: unique argmin of
    ||x - point||^2 subject to the treeplex constraints.  Product
    polytopes project blockwise and additionally cache joint solution
    maps keyed by the joint active set."""
    point = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(point)):
        raise ValueError("cannot project a non-finite point")
    hit = _try_cached(tp, point)
    if hit is not None:
        return hit

    if isinstance(tp, ProductTreeplex):
        out = np.empty(tp.dim)
        active: list[int] = []
        resid = 0.0
        for part, off in zip(tp.parts, tp.offsets):
            sol = project(point[off:off + part.dim], part)
            out[off:off + part.dim] = sol.point
            active.extend(off + i for i in sol.active_set)
            resid = max(resid, sol.kkt_residual)
        _remember(tp, tuple(active))
        return QPSolution(point=out, active_set=tuple(active), kkt_residual=resid)

    qp = _treeplex_qp(tp)
    z0 = uniform_strategy(tp)
    z, W, nu, mu, resid = qp.solve(point, z0)
    if resid > KKT_TOL:
        raise RuntimeError(f"projection KKT residual {resid:.3e} above tolerance")
    _remember(tp, W)
    return QPSolution(point=z, active_set=tuple(sorted(W)), kkt_residual=resid)


def _dp_max(tp: Treeplex, g: np.ndarray) -> tuple[float, np.ndarray]:
    """max_{x in tp} g.x by bottom-up recursion over the infoset forest;
    ties broken toward the earliest action of an information set."""
    values: dict[str, float] = {}
    choice: dict[str, str] = {}
    for infoset in reversed(tp.infoset_order):
        best = None
        best_a = None
        for a in tp.infoset_actions[infoset]:
            coord = tp.seq_index[(infoset, a)]
            val = g[coord]
            for child in tp.infosets_by_parent.get(coord, ()):
                val += values[child]
            if best is None or val > best:
                best, best_a = val, a
        values[infoset] = best
        choice[infoset] = best_a

    total = g[tp.root_index]
    x = np.zeros(tp.dim)
    x[tp.root_index] = 1.0
    stack = list(tp.infosets_by_parent.get(tp.root_index, ()))
    for infoset in stack:
        total += values[infoset]
    while stack:
        infoset = stack.pop()
        coord = tp.seq_index[(infoset, choice[infoset])]
        x[coord] = 1.0
        stack.extend(tp.infosets_by_parent.get(coord, ()))
    return float(total), x


def _values_of(x) -> np.ndarray:
    if isinstance(x, SequenceStrategy):
        return x.values
    return np.asarray(x, dtype=float)


def _joint_from_others(net: NetworkGame, agent, x_others) -> np.ndarray:
    if isinstance(x_others, SequenceStrategy):
        return x_others.values
    if isinstance(x_others, np.ndarray):
        return x_others
    if isinstance(x_others, Mapping):
        xj = np.zeros(net.product_treeplex.dim)
        for v, xv in x_others.items():
            xj[net.block(v)] = _values_of(xv)
        missing = [v for v in net.neighbors(agent) if v not in x_others]
        if missing:
            raise ValueError(f"missing neighbor strategies: {missing}")
        return xj
    raise TypeError(f"cannot interpret opponent strategies of type {type(x_others)!r}")


def best_response(net: NetworkGame, agent, x_others,
                  method: str = "dp") -> tuple[SequenceStrategy, float]:
    """argmax over the agent's treeplex of its payoff against fixed
    opponents.  dp: exact bottom-up recursion (deterministic tie-break
    toward the lowest action index).  lp: HiGHS linear program over the
    same polytope; values agree to solver precision."""
    xj = _joint_from_others(net, agent, x_others)
    g = net.gradient(agent, xj)
    tp = net.treeplexes[agent]
    if method == "dp":
        val, x = _dp_max(tp, g)
    elif method == "lp":
        res = linprog(-g, A_eq=tp.C, b_eq=tp.d, bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"best-response LP failed: {res.message}")
        val, x = -float(res.fun), res.x
    else:
        raise ValueError(f"unknown method {method!r}")
    return SequenceStrategy(owner=agent, values=x), val


def min_over_product(net: NetworkGame, cost: np.ndarray) -> tuple[float, np.ndarray]:
    """min_{x in X} cost.x over the product polytope and an attaining
    vertex; separable across agent blocks."""
    total = 0.0
    vertex = np.zeros(net.product_treeplex.dim)
    for a in net.agents:
        blk = net.block(a)
        val, v = _dp_max(net.treeplexes[a], -cost[blk])
        total -= val
        vertex[blk] = v
    return total, vertex


@dataclass(frozen=True, eq=False)
class LiftSystem:
    """Linear system whose (x, lambda) solutions project onto X*: x in X,
    C^T lambda <= Rx, d^T lambda >= 0 (LP duality certificate that
    min_{x' in X} x'^T R x >= 0, hence = 0)."""

    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    n_x: int
    n_lam: int


def _build_lift(net: NetworkGame) -> LiftSystem:
    C = net.product_treeplex.C
    d = net.product_treeplex.d
    m, N = C.shape
    A_eq = sp.hstack([sp.csr_matrix(C), sp.csr_matrix((m, m))], format="csr")
    top = sp.hstack([-net.R, sp.csr_matrix(C.T)], format="csr")
    last = sp.hstack([sp.csr_matrix((1, N)), sp.csr_matrix(-d.reshape(1, -1))], format="csr")
    A_ub = sp.vstack([top, last], format="csr")
    return LiftSystem(A_eq=A_eq, b_eq=d.copy(), A_ub=A_ub,
                      b_ub=np.zeros(N + 1), n_x=N, n_lam=m)


@dataclass(eq=False)
class EquilibriumSet:
    """X* with its lift representation, a feasible anchor point, and the
    lazily grown pool of vertex cuts v^T R x >= 0 used by the distance
    QP.  The pool only ever contains valid inequalities for X*, so it is
    shared across distance queries (warm starts)."""

    net: NetworkGame
    base: ProductTreeplex
    lift_constraints: LiftSystem
    _anchor: np.ndarray | None = None
    pool: list = field(default_factory=list)
    _last: dict = field(default_factory=dict)

    def anchor(self) -> np.ndarray:
        if self._anchor is None:
            self._anchor = solve_symmetric_ne(self.net).values
        return self._anchor


def equilibrium_set(net: NetworkGame) -> EquilibriumSet:
    return EquilibriumSet(net=net, base=net.product_treeplex, lift_constraints=_build_lift(net))


def membership(eq: EquilibriumSet, x, tol: float = 1e-9) -> bool:
    """Lift feasibility test: is there a dual certificate that x is a
    symmetric equilibrium (up to `tol` slack)?"""
    vals = _values_of(x)
    C = eq.base.C
    d = eq.base.d
    rx = eq.net.R @ vals
    A_ub = np.vstack([C.T, -d.reshape(1, -1)])
    b_ub = np.concatenate([rx + tol, [tol]])
    res = linprog(np.zeros(C.shape[0]), A_ub=A_ub, b_ub=b_ub,
                  bounds=(None, None), method="highs")
    return res.status == 0


def solve_symmetric_ne(net: NetworkGame) -> SequenceStrategy:
    """One point of X* by LP feasibility over the lift, polished by an
    exact projection onto the product polytope."""
    lift = _build_lift(net)
    n = lift.n_x + lift.n_lam
    bounds = [(0, None)] * lift.n_x + [(None, None)] * lift.n_lam
    res = linprog(np.zeros(n), A_ub=lift.A_ub, b_ub=lift.b_ub,
                  A_eq=lift.A_eq, b_eq=lift.b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(
            "symmetric equilibrium LP infeasible or failed "
            f"({res.message}); the game may not be zero-sum")
    x = res.x[:lift.n_x]
    polished = project(x, net.product_treeplex).point
    return SequenceStrategy(owner=tuple(net.agents), values=polished)


def _distance_qp(eq: EquilibriumSet, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve min ||z - x||^2 over X cut down by the current pool."""
    base = eq.base
    cuts = np.array(eq.pool) if eq.pool else np.zeros((0, base.dim))
    G = np.vstack([np.eye(base.dim), cuts])
    h = np.zeros(len(G))
    qp = _ActiveSetQP(base.C, base.d, G, h)

    z0 = eq._last.get("z")
    if z0 is None or (len(cuts) and (cuts @ z0).min() < -FEAS_TOL):
        anchor = eq.anchor()
        if z0 is None:
            z0 = anchor.copy()
        else:
            # pull the stale start toward the anchor until every cut holds
            t = 1.0
            for row in cuts:
                qa, qz = float(row @ anchor), float(row @ z0)
                if qz < 0 and qa > qz:
                    t = min(t, qa / (qa - qz))
            z0 = anchor + t * (z0 - anchor)
            if len(cuts) and (cuts @ z0).min() < -FEAS_TOL:
                z0 = anchor.copy()
    W0 = tuple(eq._last.get("W", ()))
    z, W, nu, mu, resid = qp.solve(x, z0, W0)
    eq._last["z"] = z
    eq._last["W"] = W
    return z, resid


def distance_to_ne_set(x, eq: EquilibriumSet) -> tuple[float, np.ndarray]:
    """Squared Euclidean distance from x to X* and the nearest point.

    Outer approximation: project onto X plus a pool of vertex cuts,
    separate with the exact best-response oracle, repeat until the oracle
    certifies membership.  Cuts accumulate in `eq` across calls.
    """
    vals = _values_of(x)
    net = eq.net
    gap_tol = 1e-10 * (1.0 + net.max_abs_payoff)
    for _ in range(500):
        z, resid = _distance_qp(eq, vals)
        if resid > 1e-9:
            raise RuntimeError(f"distance QP residual {resid:.3e} above tolerance")
        s, vertex = min_over_product(net, net.R @ z)
        if s >= -gap_tol:
            return float(np.dot(z - vals, z - vals)), z
        cut = net.R.T @ vertex
        if eq.pool and min(float(np.max(np.abs(c - cut))) for c in eq.pool) <= 1e-14:
            # separation stalls at numerical precision; accept z
            return float(np.dot(z - vals, z - vals)), z
        eq.pool.append(cut)
    raise RuntimeError("distance computation exceeded the cut budget")
