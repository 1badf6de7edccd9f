"""Independent oracles the tests compare the library against.

Everything here is deliberately implemented by a different mechanism
than the library code it checks: path enumeration instead of tree
traversal, exhaustive active-set enumeration instead of the iterative
QP, a max-min linear program instead of the symmetric lift, and a
straight-line transcription of the two-step iteration.  Frozen: changes
here invalidate the comparisons, so edit the library, not the oracles.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from netefg.efg import CHANCE, PLAYER1, PLAYER2, TERMINAL, GameTree


# -- expected payoff by explicit path enumeration ---------------------------

def enumerate_paths(tree: GameTree):
    """All (terminal index, [(node index, action id), ...]) paths."""
    paths = []

    def walk(i: int, prefix):
        node = tree.nodes[i]
        if node.owner == TERMINAL:
            paths.append((i, list(prefix)))
            return
        for action, child in node.actions:
            prefix.append((i, action))
            walk(child, prefix)
            prefix.pop()

    walk(tree.root, [])
    return paths


def payoff_by_paths(tree: GameTree, plan1, plan2) -> tuple[float, float]:
    """Expected payoffs by summing probability products over full paths."""
    u1 = u2 = 0.0
    for terminal, steps in enumerate_paths(tree):
        p = 1.0
        for i, action in steps:
            node = tree.nodes[i]
            if node.owner == CHANCE:
                p *= node.chance_probs[action]
            elif node.owner == PLAYER1:
                p *= plan1.prob(node.infoset, action)
            else:
                p *= plan2.prob(node.infoset, action)
        pay = tree.nodes[terminal].payoffs
        u1 += p * pay[0]
        u2 += p * pay[1]
    return u1, u2


# -- projection by exhaustive active-set enumeration ------------------------

def brute_force_project(C: np.ndarray, d: np.ndarray, p: np.ndarray) -> np.ndarray:
    """argmin ||x - p||^2 over {Cx = d, x >= 0} by trying every subset of
    coordinates as the zero set and keeping the best feasible candidate.
    Each candidate comes from the full KKT linear system solved at once.
    Exponential in dim; only for dim <= ~10.
    """
    dim = C.shape[1]
    m = C.shape[0]
    best = None
    best_obj = np.inf
    for r in range(dim + 1):
        for W in itertools.combinations(range(dim), r):
            rows = np.zeros((len(W), dim))
            for k, i in enumerate(W):
                rows[k, i] = 1.0
            A = np.vstack([C, rows])
            b = np.concatenate([d, np.zeros(len(W))])
            # KKT of the equality-constrained QP: [I A'; A 0][x; y] = [p; b]
            n_c = A.shape[0]
            kkt = np.zeros((dim + n_c, dim + n_c))
            kkt[:dim, :dim] = np.eye(dim)
            kkt[:dim, dim:] = A.T
            kkt[dim:, :dim] = A
            rhs = np.concatenate([p, b])
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            x = sol[:dim]
            if np.max(np.abs(A @ x - b)) > 1e-9 or x.min() < -1e-9:
                continue
            obj = float(np.dot(x - p, x - p))
            if obj < best_obj - 1e-12:
                best_obj = obj
                best = x
    assert best is not None, "no feasible candidate found"
    return np.where(np.abs(best) < 1e-12, 0.0, best)


# -- zero-sum check over pure behavioral profiles ---------------------------

def pure_profile_payoff_sums(description) -> list[float]:
    """Total payoff over agents for every pure profile, computed on the
    raw trees with path enumeration.  Exponential; small fixtures only.
    """
    from netefg.efg import BehavioralPlan

    choices: dict = {}
    for u, v, tree in description.edges:
        for node in tree.nodes:
            if node.owner in (PLAYER1, PLAYER2):
                agent = u if node.owner == PLAYER1 else v
                key = (agent, node.infoset)
                acts = tuple(a for a, _ in node.actions)
                assert choices.setdefault(key, acts) == acts
    keys = sorted(choices, key=repr)
    sums = []
    for combo in itertools.product(*(choices[k] for k in keys)):
        assignment = dict(zip(keys, combo))
        total = 0.0
        for u, v, tree in description.edges:
            plans = {}
            for agent in (u, v):
                probs = {}
                for (a, infoset), acts in choices.items():
                    if a == agent:
                        probs[infoset] = {act: 1.0 if act == assignment[(a, infoset)] else 0.0
                                          for act in acts}
                plans[agent] = BehavioralPlan(probs=probs)
            u1, u2 = payoff_by_paths(tree, plans[u], plans[v])
            total += u1 + u2
        sums.append(total)
    return sums


# -- two-player zero-sum value by max-min sequence LP -----------------------

def two_player_value_lp(tp1, tp2, A: np.ndarray) -> tuple[float, np.ndarray]:
    """Game value max_{x1 in X1} min_{x2 in X2} x1' A x2 and an optimal
    x1, via the standard sequence-form max-min program: the inner min is
    replaced by its dual over realization-constraint multipliers q,

        max d2'q   s.t.  C1 x1 = d1, x1 >= 0, C2' q <= A' x1.
    """
    n1 = tp1.dim
    m2 = tp2.C.shape[0]
    c = np.concatenate([np.zeros(n1), -tp2.d])
    A_ub = np.hstack([-A.T, tp2.C.T])
    b_ub = np.zeros(A_ub.shape[0])
    A_eq = np.hstack([tp1.C, np.zeros((tp1.C.shape[0], m2))])
    b_eq = tp1.d
    bounds = [(0, None)] * n1 + [(None, None)] * m2
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    assert res.status == 0, res.message
    return -float(res.fun), res.x[:n1]


# -- straight-line transcription of the optimistic iteration ----------------

def straight_line_oga(R: np.ndarray, project_fn, x0: np.ndarray, eta: float,
                      steps: int) -> list[np.ndarray]:
    """The two projected steps written out directly: starting from
    xhat = x0 and x_prev = x0,

        x      <- project(xhat - eta R x_prev)
        xhat   <- project(xhat - eta R x)
        x_prev <- x

    Returns [x^1, ..., x^steps].
    """
    xhat = x0.copy()
    x_prev = x0.copy()
    out = []
    for _ in range(steps):
        x = project_fn(xhat - eta * (R @ x_prev))
        xhat = project_fn(xhat - eta * (R @ x))
        x_prev = x
        out.append(x)
    return out


# -- frozen closed-form values ----------------------------------------------

# Kuhn poker, both players uniform at every information set: player 1's
# expected payoff.  Per ordered deal the bet/call lines contribute
# card-dependent showdowns that cancel pairwise, leaving 1/8.
KUHN_UNIFORM_VALUE_P1 = 0.125

# Kuhn poker game value for player 1 (classical).
KUHN_GAME_VALUE_P1 = -1.0 / 18.0

# Matching pennies, both agents pure Heads: deviating to Tails against
# Heads moves the deviator from -1 to +1, so the gap pattern over the two
# agents is {0, 2} and the symmetric gap is 2.
MP_PURE_HEADS_GAPS = {0.0, 2.0}
MP_PURE_HEADS_SYMMETRIC_GAP = 2.0

# Squared distance from the pure-Heads joint profile to the unique
# matching-pennies equilibrium (both uniform): 2 * (0.5^2 + 0.5^2).
MP_PURE_HEADS_DIST2 = 1.0
