"""Two-player extensive form games with chance nodes and information sets.

A game is a finite rooted tree.  Decision nodes belong to one of two
players and are grouped into information sets (nodes the acting player
cannot distinguish, so one mixed action is shared by the whole set).
Chance nodes carry a fixed distribution over their actions; terminal
nodes carry a payoff pair.  This module validates structural
well-formedness and perfect recall, and evaluates expected payoffs of
behavioral plans by exact tree traversal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

PLAYER1 = "player1"
PLAYER2 = "player2"
CHANCE = "chance"
TERMINAL = "terminal"
PLAYERS = (PLAYER1, PLAYER2)
OWNERS = (PLAYER1, PLAYER2, CHANCE, TERMINAL)

# chance distributions must sum to 1 within this
PROB_TOL = 1e-12


@dataclass(frozen=True)
class Node:
    """One tree node.

    owner: one of PLAYER1, PLAYER2, CHANCE, TERMINAL.
    infoset: information-set id; required for decision nodes.
    actions: ordered (action id, child node index) pairs; empty iff terminal.
    chance_probs: action id -> probability; present iff owner is CHANCE.
    payoffs: (u1, u2); present iff owner is TERMINAL.
    """

    owner: str
    infoset: Optional[str] = None
    actions: tuple[tuple[str, int], ...] = ()
    chance_probs: Optional[Mapping[str, float]] = None
    payoffs: Optional[tuple[float, float]] = None

    @staticmethod
    def decision(owner: str, infoset: str, actions: Sequence[tuple[str, int]]) -> "Node":
        return Node(owner=owner, infoset=infoset, actions=tuple(actions))

    @staticmethod
    def chance(probs: Mapping[str, float], children: Sequence[tuple[str, int]]) -> "Node":
        return Node(owner=CHANCE, actions=tuple(children), chance_probs=dict(probs))

    @staticmethod
    def terminal(u1: float, u2: float) -> "Node":
        return Node(owner=TERMINAL, payoffs=(float(u1), float(u2)))

    def action_ids(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.actions)


@dataclass(frozen=True)
class GameTree:
    """Indexed node collection rooted at `root`. Immutable once built."""

    nodes: tuple[Node, ...]
    root: int = 0

    def node(self, i: int) -> Node:
        return self.nodes[i]

    def __len__(self) -> int:
        return len(self.nodes)

    def terminals(self) -> Iterator[int]:
        for i, n in enumerate(self.nodes):
            if n.owner == TERMINAL:
                yield i

    def infosets(self, player: str) -> dict[str, list[int]]:
        """Information-set id -> node indices owned by `player`, in index order."""
        out: dict[str, list[int]] = {}
        for i, n in enumerate(self.nodes):
            if n.owner == player and n.infoset is not None:
                out.setdefault(n.infoset, []).append(i)
        return out

    def max_abs_payoff(self) -> float:
        best = 0.0
        for i in self.terminals():
            u1, u2 = self.nodes[i].payoffs
            best = max(best, abs(u1), abs(u2))
        return best


@dataclass(frozen=True)
class BehavioralPlan:
    """Per-information-set distributions over actions for one player.

    Keying on the information set enforces that every node in a set plays
    the same distribution.  Each distribution should sum to 1 within
    PROB_TOL; `uniform_plan` and `random_plan` construct valid plans.
    """

    probs: Mapping[str, Mapping[str, float]]

    def prob(self, infoset: str, action: str) -> float:
        return self.probs[infoset][action]


Violation = tuple[str, str, tuple]


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a structural check: ok iff no violations."""

    ok: bool
    violations: tuple[Violation, ...] = ()

    @staticmethod
    def from_violations(violations: Sequence[Violation]) -> "ValidationReport":
        vs = tuple(violations)
        return ValidationReport(ok=not vs, violations=vs)

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{rule}: {msg} {where}" for rule, msg, where in self.violations)


def validate_game_tree(tree: GameTree) -> ValidationReport:
    """Check every GameTree invariant; never raises, reports all failures."""
    v: list[Violation] = []
    n = len(tree.nodes)
    if not (0 <= tree.root < n):
        return ValidationReport.from_violations([("bad_root", "root index out of range", (tree.root,))])

    for i, node in enumerate(tree.nodes):
        if node.owner not in OWNERS:
            v.append(("bad_owner", f"unknown owner {node.owner!r}", (i,)))
        names = node.action_ids()
        if len(set(names)) != len(names):
            v.append(("duplicate_action", "repeated action id", (i,)))
        for a, c in node.actions:
            if not (0 <= c < n):
                v.append(("bad_child", f"action {a!r} points outside the tree", (i, c)))

    # tree shape: root in-degree 0, all other nodes in-degree exactly 1,
    # and everything reachable from the root
    indeg = [0] * n
    for node in tree.nodes:
        for _, c in node.actions:
            if 0 <= c < n:
                indeg[c] += 1
    for i in range(n):
        want = 0 if i == tree.root else 1
        if indeg[i] != want:
            v.append(("not_a_tree", f"in-degree {indeg[i]}, expected {want}", (i,)))
    seen = [False] * n
    stack = [tree.root]
    while stack:
        i = stack.pop()
        if seen[i]:
            v.append(("not_a_tree", "node visited twice (cycle)", (i,)))
            continue
        seen[i] = True
        for _, c in tree.nodes[i].actions:
            if 0 <= c < n:
                stack.append(c)
    unreachable = tuple(i for i in range(n) if not seen[i])
    if unreachable:
        v.append(("not_a_tree", "unreachable nodes", unreachable))

    for i, node in enumerate(tree.nodes):
        if node.owner == TERMINAL:
            if node.actions:
                v.append(("terminal_actions", "terminal node has actions", (i,)))
            if node.payoffs is None:
                v.append(("payoffs_missing", "terminal node lacks payoffs", (i,)))
        else:
            if not node.actions:
                v.append(("no_actions", "non-terminal node has no actions", (i,)))
            if node.payoffs is not None:
                v.append(("payoffs_unexpected", "payoffs on a non-terminal node", (i,)))
        if node.owner == CHANCE:
            if node.chance_probs is None:
                v.append(("chance_probs_missing", "chance node lacks probabilities", (i,)))
            else:
                if set(node.chance_probs) != set(node.action_ids()):
                    v.append(("chance_probs_keys", "probability keys differ from actions", (i,)))
                if any(p < 0 for p in node.chance_probs.values()):
                    v.append(("chance_probs_negative", "negative chance probability", (i,)))
                total = sum(node.chance_probs.values())
                if abs(total - 1.0) > PROB_TOL:
                    v.append(("chance_probs_sum", f"probabilities sum to {total!r}", (i,)))
        elif node.chance_probs is not None:
            v.append(("chance_probs_unexpected", "chance_probs on a non-chance node", (i,)))
        if node.owner in PLAYERS and node.infoset is None:
            v.append(("infoset_missing", "decision node lacks an information set", (i,)))

    # information sets: one owner and one action set per id
    groups: dict[str, list[int]] = {}
    for i, node in enumerate(tree.nodes):
        if node.infoset is not None:
            groups.setdefault(node.infoset, []).append(i)
    for infoset, members in groups.items():
        owners = {tree.nodes[i].owner for i in members}
        if len(owners) > 1:
            v.append(("infoset_owner_mismatch", "information set spans owners", (infoset, tuple(members))))
        action_sets = {frozenset(tree.nodes[i].action_ids()) for i in members}
        if len(action_sets) > 1:
            v.append(("infoset_action_mismatch", "information set members disagree on actions", (infoset, tuple(members))))

    return ValidationReport.from_violations(v)


def _own_histories(tree: GameTree, player: str) -> dict[int, tuple[tuple[str, str], ...]]:
    """Node index -> the player's own (infoset, action) pairs above it."""
    out: dict[int, tuple[tuple[str, str], ...]] = {}
    stack: list[tuple[int, tuple[tuple[str, str], ...]]] = [(tree.root, ())]
    while stack:
        i, hist = stack.pop()
        node = tree.nodes[i]
        if node.owner == player:
            out[i] = hist
        for a, c in node.actions:
            child_hist = hist + ((node.infoset, a),) if node.owner == player else hist
            stack.append((c, child_hist))
    return out


def validate_perfect_recall(tree: GameTree, player: str) -> ValidationReport:
    """Def-style perfect recall: nodes sharing an information set must have
    own histories of equal length, with pairwise matching information sets
    and matching connecting actions."""
    v: list[Violation] = []
    hist = _own_histories(tree, player)
    for infoset, members in tree.infosets(player).items():
        ref = hist[members[0]]
        for other in members[1:]:
            h = hist[other]
            if len(h) != len(ref):
                v.append(("perfect_recall_length", "own-history lengths differ",
                          (infoset, members[0], other)))
                continue
            for (i_ref, a_ref), (i_other, a_other) in zip(ref, h):
                if i_ref != i_other:
                    v.append(("perfect_recall_infosets", "own-history information sets differ",
                              (infoset, members[0], other)))
                    break
                if a_ref != a_other:
                    v.append(("perfect_recall_actions", "own-history actions differ",
                              (infoset, members[0], other)))
                    break
    return ValidationReport.from_violations(v)


def expected_payoff(tree: GameTree, plan1: BehavioralPlan, plan2: BehavioralPlan) -> tuple[float, float]:
    """Expected payoffs (U1, U2): sum over terminals of reach probability
    (product of acting-agent probabilities along the path, chance included)
    times the terminal payoff pair."""
    for player, plan in ((PLAYER1, plan1), (PLAYER2, plan2)):
        missing = [I for I in tree.infosets(player) if I not in plan.probs]
        if missing:
            raise ValueError(f"plan for {player} misses information sets {sorted(missing)}")
    plans = {PLAYER1: plan1, PLAYER2: plan2}
    u1 = 0.0
    u2 = 0.0
    stack: list[tuple[int, float]] = [(tree.root, 1.0)]
    while stack:
        i, reach = stack.pop()
        node = tree.nodes[i]
        if node.owner == TERMINAL:
            u1 += reach * node.payoffs[0]
            u2 += reach * node.payoffs[1]
            continue
        for a, c in node.actions:
            if node.owner == CHANCE:
                p = node.chance_probs[a]
            else:
                p = plans[node.owner].prob(node.infoset, a)
            if p != 0.0:
                stack.append((c, reach * p))
    return u1, u2


def uniform_plan(tree: GameTree, player: str) -> BehavioralPlan:
    probs = {}
    for infoset, members in tree.infosets(player).items():
        acts = tree.nodes[members[0]].action_ids()
        probs[infoset] = {a: 1.0 / len(acts) for a in acts}
    return BehavioralPlan(probs=probs)


def random_plan(tree: GameTree, player: str, rng: np.random.Generator) -> BehavioralPlan:
    """Dirichlet(1) draw at every information set; strictly interior."""
    probs = {}
    for infoset, members in tree.infosets(player).items():
        acts = tree.nodes[members[0]].action_ids()
        w = rng.dirichlet(np.ones(len(acts)))
        probs[infoset] = {a: float(p) for a, p in zip(acts, w)}
    return BehavioralPlan(probs=probs)


def pure_plans(tree: GameTree, player: str) -> Iterator[BehavioralPlan]:
    """All deterministic plans: one action choice per information set."""
    infosets = sorted(tree.infosets(player).items())
    choices = [tree.nodes[members[0]].action_ids() for _, members in infosets]
    for combo in itertools.product(*choices):
        probs = {
            infoset: {a: (1.0 if a == pick else 0.0) for a in tree.nodes[members[0]].action_ids()}
            for (infoset, members), pick in zip(infosets, combo)
        }
        yield BehavioralPlan(probs=probs)
