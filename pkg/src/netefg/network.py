"""Network games: agents on a graph, a two-player game per edge.

Assembles per-agent treeplexes (shared coordinates across an agent's
edges), directed bilinear payoff matrices A^uv, and the reduced matrix R
whose (u, v) block is -A^uv for edges and zero elsewhere.  When the
network is zero-sum, R satisfies restricted antisymmetry on the product
polytope (x'Ry + y'Rx = 0), which is what the solver and the equilibrium
machinery rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .efg import (PLAYER1, PLAYER2, GameTree, ValidationReport, Violation,
                  _own_histories, validate_game_tree, validate_perfect_recall)
from .games import NetworkDescription
from .sequence_form import (Treeplex, build_edge_payoff_matrix, compile_treeplex,
                            count_vertices, sample_strategies, uniform_strategy,
                            vertex_strategies)

# pure-profile budget for exhaustive zero-sum verification
EXHAUSTIVE_CAP = 10 ** 6

# relative accuracy of the power-iteration spectral norm estimate
NORM_REL_TOL = 1e-6


class ValidationError(ValueError):
    """Raised when assembly rejects a game; carries the failing report."""

    def __init__(self, message: str, report: ValidationReport):
        super().__init__(f"{message}: {report.describe()}")
        self.report = report


@dataclass(frozen=True, eq=False)
class ProductTreeplex:
    """Blockwise concatenation of per-agent treeplexes: the joint strategy
    space X.  Squared diameter adds up over blocks."""

    agents: tuple
    parts: tuple[Treeplex, ...]
    offsets: tuple[int, ...]
    dim: int
    C: np.ndarray
    d: np.ndarray
    diameter: float
    _proj_cache: dict = field(default_factory=dict, repr=False)
    _proj_hint: list = field(default_factory=list, repr=False)

    def block(self, agent) -> slice:
        i = self.agents.index(agent)
        return slice(self.offsets[i], self.offsets[i] + self.parts[i].dim)

    def split(self, x: np.ndarray) -> dict:
        return {a: x[self.block(a)] for a in self.agents}

    def join(self, blocks: dict) -> np.ndarray:
        return np.concatenate([np.asarray(blocks[a], dtype=float) for a in self.agents])


@dataclass(frozen=True, eq=False)
class NetworkGame:
    """Assembled network game.  Immutable after construction; the two
    private fields cache the spectral-norm estimate and the zero-sum
    report so repeated runs do not recompute them."""

    agents: tuple
    edges: tuple[tuple[object, object, GameTree], ...]
    treeplexes: dict
    edge_matrices: dict
    R: sp.csr_matrix
    product_treeplex: ProductTreeplex
    max_abs_payoff: float
    metadata: dict = field(default_factory=dict)
    _norm_cache: list = field(default_factory=list, repr=False)
    _zero_sum_cache: list = field(default_factory=list, repr=False)
    _dense_cache: list = field(default_factory=list, repr=False)

    def block(self, agent) -> slice:
        return self.product_treeplex.block(agent)

    def neighbors(self, agent) -> tuple:
        return tuple(v for (u, v) in self.edge_matrices if u == agent)

    def gradient(self, agent, x: np.ndarray) -> np.ndarray:
        """Payoff gradient for one agent: sum over incident edges of
        A^uv x_v, with x the joint vector."""
        g = np.zeros(self.treeplexes[agent].dim)
        for v in self.neighbors(agent):
            g += self.edge_matrices[(agent, v)].entries @ x[self.block(v)]
        return g

    def spectral_norm(self) -> float:
        if not self._norm_cache:
            self._norm_cache.append(_power_iteration_norm(self.R))
        return self._norm_cache[0]

    def dense_R(self) -> np.ndarray:
        """Dense copy of R; at these dimensions a BLAS matvec beats the
        sparse one, and the iteration loop calls it every step."""
        if not self._dense_cache:
            self._dense_cache.append(self.R.toarray())
        return self._dense_cache[0]

    def zero_sum_tolerance(self) -> float:
        return 1e-9 * (1.0 + self.max_abs_payoff)


@dataclass(frozen=True)
class ZeroSumReport:
    """Result of a zero-sum check; ok iff max_violation <= tolerance."""

    mode: str
    checked: int
    max_violation: float
    ok: bool
    tolerance: float


def validate_consistency(edges: Sequence[tuple[object, object, GameTree]],
                         agent) -> ValidationReport:
    """Cross-edge analogue of perfect recall: every information set of the
    agent must sit at identical own histories (same length, same
    information sets, same connecting actions) in every edge game where it
    appears, with one action set."""
    incident: list[tuple[object, GameTree, str]] = []
    for u, v, tree in edges:
        if agent == u:
            incident.append(((u, v), tree, PLAYER1))
        elif agent == v:
            incident.append(((u, v), tree, PLAYER2))

    v_out: list[Violation] = []
    seen: dict[str, tuple] = {}
    for edge, tree, role in incident:
        hist = _own_histories(tree, role)
        for infoset, members in tree.infosets(role).items():
            for node in members:
                h = hist[node]
                acts = tree.nodes[node].action_ids()
                if infoset not in seen:
                    seen[infoset] = (edge, node, h, frozenset(acts))
                    continue
                e0, n0, h0, a0 = seen[infoset]
                where = (infoset, (e0, n0), (edge, node))
                if frozenset(acts) != a0:
                    v_out.append(("consistency_actions", "action sets differ across games", where))
                if len(h) != len(h0):
                    v_out.append(("consistency_length", "own-history lengths differ", where))
                    continue
                for (i0, act0), (i1, act1) in zip(h0, h):
                    if i0 != i1:
                        v_out.append(("consistency_infosets",
                                      "own-history information sets differ", where))
                        break
                    if act0 != act1:
                        v_out.append(("consistency_connecting_actions",
                                      "own-history actions differ", where))
                        break
    return ValidationReport.from_violations(v_out)


def _power_iteration_norm(R: sp.csr_matrix) -> float:
    n = R.shape[0]
    if n == 0 or R.nnz == 0:
        return 0.0
    Rt = R.T.tocsr()
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    last = 0.0
    for _ in range(10000):
        w = Rt @ (R @ v)
        sigma2 = float(v @ w)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        sigma = np.sqrt(max(sigma2, 0.0))
        if abs(sigma - last) <= NORM_REL_TOL * max(sigma, 1e-300):
            return sigma
        last = sigma
    return last


def assemble(description: NetworkDescription) -> NetworkGame:
    """Validate every edge game and the cross-edge consistency of every
    agent, then compile treeplexes, the directed payoff matrices, R, and
    the product polytope.  Any failed validation rejects the description
    with the underlying report."""
    agents = tuple(description.agents)
    edges = tuple(description.edges)
    for u, v, tree in edges:
        report = validate_game_tree(tree)
        if not report.ok:
            raise ValidationError(f"edge ({u}, {v}) game tree invalid", report)
        for role in (PLAYER1, PLAYER2):
            report = validate_perfect_recall(tree, role)
            if not report.ok:
                raise ValidationError(f"edge ({u}, {v}) violates perfect recall for {role}", report)

    incident: dict = {a: [] for a in agents}
    for u, v, tree in edges:
        if u not in incident or v not in incident:
            raise ValueError(f"edge ({u}, {v}) references an undeclared agent")
        incident[u].append((tree, PLAYER1))
        incident[v].append((tree, PLAYER2))
    for a in agents:
        report = validate_consistency(edges, a)
        if not report.ok:
            raise ValidationError(f"agent {a} inconsistent across edges", report)

    treeplexes = {a: compile_treeplex(incident[a], agent=a) for a in agents}
    edge_matrices: dict = {}
    for u, v, tree in edges:
        edge_matrices[(u, v)] = build_edge_payoff_matrix(tree, PLAYER1, treeplexes[u], treeplexes[v])
        edge_matrices[(v, u)] = build_edge_payoff_matrix(tree, PLAYER2, treeplexes[v], treeplexes[u])

    blocks = [[None] * len(agents) for _ in agents]
    for i, u in enumerate(agents):
        for j, v in enumerate(agents):
            if (u, v) in edge_matrices:
                blocks[i][j] = -edge_matrices[(u, v)].entries
    dims = [treeplexes[a].dim for a in agents]
    for i in range(len(agents)):
        if all(b is None for b in blocks[i]):
            blocks[i][i] = sp.csr_matrix((dims[i], dims[i]))
    R = sp.bmat(blocks, format="csr")

    offsets = tuple(int(x) for x in np.concatenate([[0], np.cumsum(dims)[:-1]]))
    parts = tuple(treeplexes[a] for a in agents)
    C_rows = sum(p.C.shape[0] for p in parts)
    N = sum(dims)
    C = np.zeros((C_rows, N))
    d = np.zeros(C_rows)
    r = 0
    for p, off in zip(parts, offsets):
        m = p.C.shape[0]
        C[r:r + m, off:off + p.dim] = p.C
        d[r:r + m] = p.d
        r += m
    product = ProductTreeplex(
        agents=agents, parts=parts, offsets=offsets, dim=N, C=C, d=d,
        diameter=float(np.sqrt(sum(p.diameter ** 2 for p in parts))),
    )

    max_pay = max((tree.max_abs_payoff() for _, _, tree in edges), default=0.0)
    return NetworkGame(
        agents=agents, edges=edges, treeplexes=treeplexes,
        edge_matrices=edge_matrices, R=R, product_treeplex=product,
        max_abs_payoff=max_pay, metadata=dict(description.metadata),
    )


def agent_payoffs(net: NetworkGame, x) -> dict:
    """U_u = x_u . sum_v A^uv x_v per agent; the total equals -x'Rx."""
    vals = x.values if hasattr(x, "values") and not isinstance(x, np.ndarray) else np.asarray(x)
    return {a: float(vals[net.block(a)] @ net.gradient(a, vals)) for a in net.agents}


def sample_joint(net: NetworkGame, n: int, rng: np.random.Generator) -> np.ndarray:
    """n random interior points of the product polytope, one per row."""
    out = np.zeros((n, net.product_treeplex.dim))
    for a in net.agents:
        out[:, net.block(a)] = sample_strategies(net.treeplexes[a], n, rng)
    return out


def uniform_joint(net: NetworkGame) -> np.ndarray:
    return np.concatenate([uniform_strategy(net.treeplexes[a]) for a in net.agents])


def check_zero_sum(net: NetworkGame, mode: str = "auto", samples: int = 1000,
                   seed: int = 0, cap: int = EXHAUSTIVE_CAP) -> ZeroSumReport:
    """Verify that every profile's payoffs sum to zero.

    exhaustive: enumerate all pure profiles (per-agent treeplex vertices)
    when their count fits the cap; refuse above it.  sampled: draw random
    interior product points and check the per-agent payoff sum, which is
    multi-affine in the blocks and therefore vanishes everywhere iff it
    vanishes on pure profiles.  auto picks exhaustive under the cap.
    """
    tol = net.zero_sum_tolerance()
    counts = {a: count_vertices(net.treeplexes[a]) for a in net.agents}
    total_profiles = 1
    for c in counts.values():
        total_profiles *= c

    if mode == "auto":
        mode = "exhaustive" if total_profiles <= cap else "sampled"
    if mode == "exhaustive":
        if total_profiles > cap:
            raise ValueError(
                f"{total_profiles} pure profiles exceed the cap {cap}; use sampled mode")
        verts = {a: vertex_strategies(net.treeplexes[a]) for a in net.agents}
        shape = tuple(counts[a] for a in net.agents)
        totals = np.zeros(shape)
        index = {a: i for i, a in enumerate(net.agents)}
        for (u, v), mat in net.edge_matrices.items():
            table = verts[u] @ (mat.entries @ verts[v].T)
            ax_u, ax_v = index[u], index[v]
            # broadcast the (u, v) table over all other profile axes
            shape_e = [1] * len(shape)
            shape_e[ax_u] = counts[u]
            shape_e[ax_v] = counts[v]
            totals += (table if ax_u < ax_v else table.T).reshape(shape_e)
        max_violation = float(np.abs(totals).max()) if totals.size else 0.0
        checked = int(totals.size)
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        X = sample_joint(net, samples, rng)
        sums = np.zeros(samples)
        for (u, v), mat in net.edge_matrices.items():
            Xu = X[:, net.block(u)]
            Xv = X[:, net.block(v)]
            sums += np.einsum("ij,ij->i", Xu @ mat.entries, Xv)
        max_violation = float(np.abs(sums).max()) if samples else 0.0
        checked = samples
    else:
        raise ValueError(f"unknown mode {mode!r}")

    report = ZeroSumReport(mode=mode, checked=checked, max_violation=max_violation,
                           ok=max_violation <= tol, tolerance=tol)
    net._zero_sum_cache.clear()
    net._zero_sum_cache.append(report)
    return report
