"""Built-in games and network builders.

Fixtures: Kuhn poker and matching pennies as two-player trees, topology
builders that instantiate a template game on every edge of a graph, and a
seeded generator of random network zero-sum games.

Template information-set ids carry a role prefix ("1:" or "2:"): when a
template is placed on an edge, the prefix is stripped and the id is
namespaced by the agent playing that role ("a{agent}:{rest}").  Two roles
whose stripped ids coincide (matching pennies uses "1:pick"/"2:pick")
therefore collapse into one information set per agent, so an agent on
several edges plays every incident game with one behavioral plan.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, Union

import numpy as np

from .efg import CHANCE, PLAYER1, PLAYER2, TERMINAL, GameTree, Node

Topology = Union[str, Sequence[tuple[int, int]]]

# per-agent sequence-variable budget for generated games
GENERATOR_DIM_CAP = 64

KUHN_CARDS = ("J", "Q", "K")
KUHN_RANK = {"J": 0, "Q": 1, "K": 2}


@dataclass(frozen=True)
class NetworkDescription:
    """Agents, edge games, and declared properties of a network game.

    Edges are normalized (u < v) and self-loop free; the lower id plays
    role 1 (player1) of the edge tree.
    """

    agents: tuple[int, ...]
    edges: tuple[tuple[int, int, GameTree], ...]
    metadata: dict


def matching_pennies() -> GameTree:
    """One-shot matching pennies as a tree: player 1 picks, player 2 picks
    without observing (both its nodes share one information set).  Player 1
    wins +1 when the picks match, loses 1 otherwise."""
    nodes = [
        Node.decision(PLAYER1, "1:pick", [("heads", 1), ("tails", 2)]),
        Node.decision(PLAYER2, "2:pick", [("heads", 3), ("tails", 4)]),
        Node.decision(PLAYER2, "2:pick", [("heads", 5), ("tails", 6)]),
        Node.terminal(1.0, -1.0),
        Node.terminal(-1.0, 1.0),
        Node.terminal(-1.0, 1.0),
        Node.terminal(1.0, -1.0),
    ]
    return GameTree(nodes=tuple(nodes), root=0)


def kuhn_poker() -> GameTree:
    """Kuhn poker: three cards J < Q < K, one dealt to each player (6
    equally likely ordered deals), ante 1, bet size 1.  Player 1 checks or
    bets; after a check player 2 checks or bets; facing a bet the player
    folds or calls; check-check and calls go to showdown.  Payoffs are from
    player 1's perspective (+ means player 1 wins the amount)."""
    nodes: list[Node] = []

    def add(node: Node) -> int:
        nodes.append(node)
        return len(nodes) - 1

    deal_children: list[tuple[str, int]] = []
    deal_probs: dict[str, float] = {}
    for c1, c2 in itertools.permutations(KUHN_CARDS, 2):
        s = 1.0 if KUHN_RANK[c1] > KUHN_RANK[c2] else -1.0
        t_cc = add(Node.terminal(s, -s))
        t_cbf = add(Node.terminal(-1.0, 1.0))
        t_cbc = add(Node.terminal(2 * s, -2 * s))
        t_bf = add(Node.terminal(1.0, -1.0))
        t_bc = add(Node.terminal(2 * s, -2 * s))
        p1_cb = add(Node.decision(PLAYER1, f"1:{c1}:cb", [("fold", t_cbf), ("call", t_cbc)]))
        p2_c = add(Node.decision(PLAYER2, f"2:{c2}:c", [("check", t_cc), ("bet", p1_cb)]))
        p2_b = add(Node.decision(PLAYER2, f"2:{c2}:b", [("fold", t_bf), ("call", t_bc)]))
        p1 = add(Node.decision(PLAYER1, f"1:{c1}", [("check", p2_c), ("bet", p2_b)]))
        deal = f"{c1}{c2}"
        deal_children.append((deal, p1))
        deal_probs[deal] = 1.0 / 6.0
    root = add(Node.chance(deal_probs, deal_children))
    return GameTree(nodes=tuple(nodes), root=root)


def _strip_role(infoset: str) -> str:
    if infoset.startswith("1:") or infoset.startswith("2:"):
        return infoset[2:]
    return infoset


def _instantiate(template: GameTree, u: int, v: int) -> GameTree:
    """Place a template on edge (u, v): u plays role 1, v role 2; infoset
    ids are stripped of their role prefix and namespaced per agent."""
    out = []
    for node in template.nodes:
        if node.owner in (PLAYER1, PLAYER2):
            agent = u if node.owner == PLAYER1 else v
            out.append(replace(node, infoset=f"a{agent}:{_strip_role(node.infoset)}"))
        else:
            out.append(node)
    return GameTree(nodes=tuple(out), root=template.root)


def _edge_list(topology: Topology, n: int) -> list[tuple[int, int]]:
    if isinstance(topology, str):
        if topology == "ring":
            raw: Iterable[tuple[int, int]] = ((i, (i + 1) % n) for i in range(n))
        elif topology == "complete":
            raw = itertools.combinations(range(n), 2)
        else:
            raise ValueError(f"unknown topology {topology!r}")
    else:
        raw = topology
    edges: list[tuple[int, int]] = []
    for u, v in raw:
        if u == v:
            raise ValueError(f"self-loop on agent {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) outside agents 0..{n - 1}")
        e = (min(u, v), max(u, v))
        if e not in edges:
            edges.append(e)
    if not edges:
        raise ValueError("topology yields no edges")
    return edges


def _template_is_zero_sum(template: GameTree) -> bool:
    return all(
        abs(template.nodes[i].payoffs[0] + template.nodes[i].payoffs[1]) <= 1e-12
        for i in template.terminals()
    )


def network_of(topology: Topology, n: int, template: GameTree) -> NetworkDescription:
    """Instantiate `template` on every edge of the topology ("ring",
    "complete", or an explicit edge list) over agents 0..n-1."""
    if n < 2:
        raise ValueError("need at least two agents")
    edges = _edge_list(topology, n)
    placed = tuple((u, v, _instantiate(template, u, v)) for u, v in edges)
    name = topology if isinstance(topology, str) else "edges"
    metadata = {
        "name": f"{name}-{n}",
        "zero_sum": _template_is_zero_sum(template),
        "consistent": True,
    }
    return NetworkDescription(agents=tuple(range(n)), edges=placed, metadata=metadata)


def _random_edge_tree(rng: np.random.Generator, u: int, v: int, depth: int,
                      branching: int) -> GameTree:
    """Full alternating-mover tree (player 1 of the edge moves first) with
    perfect information (singleton infosets) and payoffs (p, -p),
    p ~ U[0, 1] per terminal."""
    nodes: list[Node] = []

    def build(level: int, path: str) -> int:
        if level == depth:
            p = float(rng.uniform(0.0, 1.0))
            nodes.append(Node.terminal(p, -p))
            return len(nodes) - 1
        owner = PLAYER1 if level % 2 == 0 else PLAYER2
        agent = u if owner == PLAYER1 else v
        children = []
        for k in range(branching):
            child = build(level + 1, f"{path}.{k}" if path else str(k))
            children.append((f"a{k}", child))
        nodes.append(Node.decision(owner, f"a{agent}:g{u}_{v}:{path or 'r'}", children))
        return len(nodes) - 1

    root = build(0, "")
    return GameTree(nodes=tuple(nodes), root=root)


def _find_cycle(edges: Sequence[tuple[int, int]]) -> list[int]:
    """Some cycle [a0, ..., ak-1] in the undirected graph, or []."""
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    seen: set[int] = set()
    for start in sorted(adj):
        if start in seen:
            continue
        parent: dict[int, int | None] = {start: None}
        stack: list[tuple[int, int | None]] = [(start, None)]
        while stack:
            node, par = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            parent[node] = par
            for nxt in sorted(adj[node], reverse=True):
                if nxt == par:
                    continue
                if nxt in seen:
                    # back edge: walk both endpoints up to their meeting point
                    path = []
                    w = node
                    while w is not None:
                        path.append(w)
                        w = parent[w]
                    if nxt in path:
                        return path[: path.index(nxt) + 1]
                    continue
                stack.append((nxt, node))
    return []


def _shift_payoffs(tree: GameTree, role: str, c: float) -> GameTree:
    out = []
    for node in tree.nodes:
        if node.owner == TERMINAL:
            u1, u2 = node.payoffs
            if role == PLAYER1:
                node = replace(node, payoffs=(u1 + c, u2))
            else:
                node = replace(node, payoffs=(u1, u2 + c))
        out.append(node)
    return GameTree(nodes=tuple(out), root=tree.root)


def random_network_efg(seed: int, n_agents: int = 3, topology: Topology = "ring",
                       depth: int = 3, branching: int = 2,
                       mode: str = "pairwise_zero_sum") -> NetworkDescription:
    """Seeded random network zero-sum game.

    pairwise_zero_sum: each edge tree pays (p, -p) at every terminal, so
    every edge game is itself zero-sum.  cycle_redistributed: additionally
    adds a constant to one side's payoffs on each edge of a graph cycle,
    constants summing to zero, so single edges are no longer zero-sum while
    the network total still vanishes on every profile.
    """
    if mode not in ("pairwise_zero_sum", "cycle_redistributed"):
        raise ValueError(f"unknown mode {mode!r}")
    if depth < 1 or branching < 2:
        raise ValueError("need depth >= 1 and branching >= 2")
    rng = np.random.default_rng(seed)
    edges = _edge_list(topology, n_agents)
    trees = {e: _random_edge_tree(rng, e[0], e[1], depth, branching) for e in edges}

    if mode == "cycle_redistributed":
        cycle = _find_cycle(edges)
        if not cycle:
            raise ValueError("cycle_redistributed needs a cycle in the topology")
        raw = rng.uniform(1.0, 2.0, size=len(cycle))
        consts = raw - raw.mean()
        for i, tail in enumerate(cycle):
            head = cycle[(i + 1) % len(cycle)]
            e = (min(tail, head), max(tail, head))
            role = PLAYER1 if tail == e[0] else PLAYER2
            trees[e] = _shift_payoffs(trees[e], role, float(consts[i]))

    # enforce the per-agent sequence budget
    dims = {a: 1 for a in range(n_agents)}
    for (u, v), tree in trees.items():
        for agent, role in ((u, PLAYER1), (v, PLAYER2)):
            for members in tree.infosets(role).values():
                dims[agent] += len(tree.nodes[members[0]].actions)
    worst = max(dims.values())
    if worst > GENERATOR_DIM_CAP:
        raise ValueError(
            f"per-agent treeplex dimension {worst} exceeds cap {GENERATOR_DIM_CAP}; "
            "reduce depth, branching, or degree")

    metadata = {"name": f"random-{mode}-{seed}", "zero_sum": True, "consistent": True}
    return NetworkDescription(
        agents=tuple(range(n_agents)),
        edges=tuple((u, v, trees[(u, v)]) for u, v in edges),
        metadata=metadata,
    )


def template_by_name(name: str) -> GameTree:
    """CLI fixture lookup: kuhn, matching-pennies."""
    if name == "kuhn":
        return kuhn_poker()
    if name == "matching-pennies":
        return matching_pennies()
    raise ValueError(f"unknown fixture {name!r}")
