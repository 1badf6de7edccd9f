"""Sequence-form compilation: treeplex constraint systems and bilinear
payoff matrices.

A strategy in sequence form assigns each of a player's action sequences
its realization probability.  Coordinates here are one shared root entry
(pinned to 1) plus one variable per (information set, action) pair, so the
state-value equalities of the polytope definition hold by construction;
information sets shared across an agent's edge games map to the same
coordinates, which is exactly the cross-game tying constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .efg import CHANCE, PLAYER1, PLAYER2, TERMINAL, BehavioralPlan, GameTree

# parent realization below this counts as unreached
UNREACHED_TOL = 1e-12

# exact diameter via vertex enumeration up to this dimension
DIAMETER_EXACT_DIM = 16


@dataclass(frozen=True, eq=False)
class Treeplex:
    """Constraint system {x >= 0, Cx = d} over one agent's sequences.

    Row 0 of C pins the root coordinate to 1; every other row is a flow
    constraint (children of an information set sum to the parent
    sequence).  `infoset_parent` maps an information set to the coordinate
    of its parent sequence (0 when the set hangs off the root), and
    `infosets_by_parent` inverts that map for bottom-up recursions.
    `diameter` upper-bounds the largest pairwise Euclidean distance.
    """

    agent: object
    dim: int
    C: np.ndarray
    d: np.ndarray
    seq_index: dict[tuple[str, str], int]
    infoset_parent: dict[str, int]
    infoset_actions: dict[str, tuple[str, ...]]
    infoset_order: tuple[str, ...]
    diameter: float
    root_index: int = 0
    infosets_by_parent: dict[int, tuple[str, ...]] = field(default_factory=dict, repr=False)
    # projection caches, filled lazily; see polytope.project
    _proj_cache: dict = field(default_factory=dict, repr=False)
    _proj_hint: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class SequenceStrategy:
    """One agent's (or the joint, blockwise concatenated) sequence vector."""

    owner: object
    values: np.ndarray


@dataclass(frozen=True)
class PayoffMatrix:
    """Bilinear payoff x_u^T A x_v of one edge game for the row agent;
    chance probabilities are folded into the entries, so nonzeros sit only
    at sequence pairs that jointly reach a terminal."""

    rows: int
    cols: int
    entries: sp.csr_matrix

    def value(self, x_u: np.ndarray, x_v: np.ndarray) -> float:
        return float(x_u @ (self.entries @ x_v))


def _other(role: str) -> str:
    return PLAYER2 if role == PLAYER1 else PLAYER1


def compile_treeplex(games: Sequence[tuple[GameTree, str]], agent: object = None) -> "Treeplex":
    """Build the agent's sequence polytope from its (game, role) pairs.

    Information sets met in several games share coordinates; a set seen
    with different action sets or different parent sequences is a
    structural error (the network consistency check reports it first with
    more detail).
    """
    parent_key: dict[str, tuple[str, str] | None] = {}
    infoset_actions: dict[str, tuple[str, ...]] = {}
    order: list[str] = []
    for tree, role in games:
        stack: list[tuple[int, tuple[str, str] | None]] = [(tree.root, None)]
        while stack:
            i, last = stack.pop()
            node = tree.nodes[i]
            nxt = last
            if node.owner == role:
                infoset = node.infoset
                acts = node.action_ids()
                if infoset not in infoset_actions:
                    infoset_actions[infoset] = acts
                    parent_key[infoset] = last
                    order.append(infoset)
                else:
                    if set(infoset_actions[infoset]) != set(acts):
                        raise ValueError(f"information set {infoset!r} has inconsistent action sets")
                    if parent_key[infoset] != last:
                        raise ValueError(f"information set {infoset!r} has inconsistent parent sequences")
                for a, c in node.actions:
                    stack.append((c, (infoset, a)))
            else:
                for _, c in node.actions:
                    stack.append((c, nxt))

    seq_index: dict[tuple[str, str], int] = {}
    idx = 1
    for infoset in order:
        for a in infoset_actions[infoset]:
            seq_index[(infoset, a)] = idx
            idx += 1
    dim = idx
    infoset_parent = {
        infoset: (0 if parent_key[infoset] is None else seq_index[parent_key[infoset]])
        for infoset in order
    }
    by_parent: dict[int, list[str]] = {}
    for infoset in order:
        by_parent.setdefault(infoset_parent[infoset], []).append(infoset)

    m = 1 + len(order)
    C = np.zeros((m, dim))
    d = np.zeros(m)
    C[0, 0] = 1.0
    d[0] = 1.0
    for r, infoset in enumerate(order, start=1):
        for a in infoset_actions[infoset]:
            C[r, seq_index[(infoset, a)]] = 1.0
        C[r, infoset_parent[infoset]] -= 1.0

    tp = Treeplex(
        agent=agent,
        dim=dim,
        C=C,
        d=d,
        seq_index=seq_index,
        infoset_parent=infoset_parent,
        infoset_actions=infoset_actions,
        infoset_order=tuple(order),
        diameter=float(np.sqrt(dim)),
        infosets_by_parent={k: tuple(v) for k, v in by_parent.items()},
    )
    if dim <= DIAMETER_EXACT_DIM:
        verts = vertex_strategies(tp)
        best = 0.0
        for i in range(len(verts)):
            dist = np.linalg.norm(verts[i + 1:] - verts[i], axis=1)
            if len(dist):
                best = max(best, float(dist.max()))
        tp = replace(tp, diameter=best)
    return tp


def count_vertices(tp: Treeplex) -> int:
    """Number of pure sequence vectors, without materializing them."""

    def count_below(infoset: str) -> int:
        total = 0
        for a in tp.infoset_actions[infoset]:
            coord = tp.seq_index[(infoset, a)]
            prod = 1
            for child in tp.infosets_by_parent.get(coord, ()):
                prod *= count_below(child)
            total += prod
        return total

    out = 1
    for infoset in tp.infosets_by_parent.get(tp.root_index, ()):
        out *= count_below(infoset)
    return out


def vertex_strategies(tp: Treeplex) -> np.ndarray:
    """All pure sequence vectors (the polytope's vertices), one per row."""
    results: list[np.ndarray] = []
    base = np.zeros(tp.dim)
    base[tp.root_index] = 1.0

    def rec(vec: np.ndarray, pending: tuple[str, ...]) -> None:
        if not pending:
            results.append(vec.copy())
            return
        infoset, rest = pending[0], pending[1:]
        for a in tp.infoset_actions[infoset]:
            coord = tp.seq_index[(infoset, a)]
            vec[coord] = 1.0
            rec(vec, rest + tp.infosets_by_parent.get(coord, ()))
            vec[coord] = 0.0

    rec(base, tp.infosets_by_parent.get(tp.root_index, ()))
    return np.array(results)


def behavioral_to_sequence(plan: BehavioralPlan, tp: Treeplex) -> SequenceStrategy:
    """Sequence value = product of the plan's probabilities along the
    agent's own action path (flow conservation holds by telescoping)."""
    vals = np.zeros(tp.dim)
    vals[tp.root_index] = 1.0
    for infoset in tp.infoset_order:
        if infoset not in plan.probs:
            raise ValueError(f"plan misses information set {infoset!r}")
        parent = vals[tp.infoset_parent[infoset]]
        dist = plan.probs[infoset]
        for a in tp.infoset_actions[infoset]:
            vals[tp.seq_index[(infoset, a)]] = parent * dist[a]
    return SequenceStrategy(owner=tp.agent, values=vals)


def sequence_to_behavioral(x: SequenceStrategy | np.ndarray, tp: Treeplex) -> BehavioralPlan:
    """Inverse map: probabilities are child/parent realization ratios,
    normalized; information sets with parent realization below
    UNREACHED_TOL get the uniform distribution (payoff-irrelevant there)."""
    vals = x.values if isinstance(x, SequenceStrategy) else x
    probs: dict[str, dict[str, float]] = {}
    for infoset in tp.infoset_order:
        acts = tp.infoset_actions[infoset]
        parent = vals[tp.infoset_parent[infoset]]
        if parent > UNREACHED_TOL:
            ratios = np.array([vals[tp.seq_index[(infoset, a)]] for a in acts]) / parent
            total = float(ratios.sum())
            if total > 0:
                probs[infoset] = {a: float(r / total) for a, r in zip(acts, ratios)}
                continue
        probs[infoset] = {a: 1.0 / len(acts) for a in acts}
    return BehavioralPlan(probs=probs)


def strategy_residual(tp: Treeplex, values: np.ndarray) -> float:
    """Max constraint violation; feasible means <= 1e-10 with values >= -1e-12."""
    eq = float(np.max(np.abs(tp.C @ values - tp.d)))
    neg = float(max(0.0, -values.min())) if len(values) else 0.0
    return max(eq, neg)


def build_edge_payoff_matrix(game: GameTree, u_role: str, tp_u: Treeplex,
                             tp_v: Treeplex) -> PayoffMatrix:
    """A^uv for the agent playing `u_role` of this edge game: entry
    (s_u, s_v) sums chance-weighted terminal payoffs over terminals whose
    paths realize exactly those two sequences.  Zero-probability chance
    branches are pruned."""
    v_role = _other(u_role)
    pay_idx = 0 if u_role == PLAYER1 else 1
    data: dict[tuple[int, int], float] = {}
    stack: list[tuple[int, float, int, int]] = [(game.root, 1.0, tp_u.root_index, tp_v.root_index)]
    while stack:
        i, prod, cu, cv = stack.pop()
        node = game.nodes[i]
        if node.owner == TERMINAL:
            key = (cu, cv)
            data[key] = data.get(key, 0.0) + prod * node.payoffs[pay_idx]
            continue
        for a, c in node.actions:
            if node.owner == CHANCE:
                p = node.chance_probs[a]
                if p != 0.0:
                    stack.append((c, prod * p, cu, cv))
            elif node.owner == u_role:
                stack.append((c, prod, tp_u.seq_index[(node.infoset, a)], cv))
            else:
                assert node.owner == v_role
                stack.append((c, prod, cu, tp_v.seq_index[(node.infoset, a)]))
    if data:
        keys = sorted(data)
        rows = [k[0] for k in keys]
        cols = [k[1] for k in keys]
        vals = [data[k] for k in keys]
    else:
        rows, cols, vals = [], [], []
    entries = sp.csr_matrix((vals, (rows, cols)), shape=(tp_u.dim, tp_v.dim))
    return PayoffMatrix(rows=tp_u.dim, cols=tp_v.dim, entries=entries)


def sample_strategies(tp: Treeplex, n: int, rng: np.random.Generator) -> np.ndarray:
    """n random interior points of the polytope, one per row: Dirichlet(1)
    behavioral distributions pushed through the product map."""
    vals = np.zeros((n, tp.dim))
    vals[:, tp.root_index] = 1.0
    for infoset in tp.infoset_order:
        acts = tp.infoset_actions[infoset]
        coords = [tp.seq_index[(infoset, a)] for a in acts]
        g = rng.exponential(1.0, size=(n, len(acts)))
        g /= g.sum(axis=1, keepdims=True)
        vals[:, coords] = vals[:, [tp.infoset_parent[infoset]]] * g
    return vals


def uniform_strategy(tp: Treeplex) -> np.ndarray:
    """The uniform behavioral plan in sequence form."""
    vals = np.zeros(tp.dim)
    vals[tp.root_index] = 1.0
    for infoset in tp.infoset_order:
        acts = tp.infoset_actions[infoset]
        parent = vals[tp.infoset_parent[infoset]]
        for a in acts:
            vals[tp.seq_index[(infoset, a)]] = parent / len(acts)
    return vals
