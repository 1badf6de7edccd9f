"""Shared fixtures: assembled standard games and a seeded random
treeplex generator for projection tests."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

import netefg as ng
from netefg.efg import PLAYER1, GameTree, Node
from netefg.sequence_form import compile_treeplex


@pytest.fixture(scope="session")
def mp2():
    return ng.assemble(ng.network_of("ring", 2, ng.matching_pennies()))


@pytest.fixture(scope="session")
def mp4():
    return ng.assemble(ng.network_of("ring", 4, ng.matching_pennies()))


@pytest.fixture(scope="session")
def kuhn2():
    return ng.assemble(ng.network_of("ring", 2, ng.kuhn_poker()))


@pytest.fixture(scope="session")
def kuhn5():
    return ng.assemble(ng.network_of("ring", 5, ng.kuhn_poker()))


def random_treeplex(seed: int, max_dim: int = 8):
    """Small random treeplex built from a single-player decision tree with
    varying branching and depth; dimension stays within max_dim."""
    rng = np.random.default_rng(seed)
    counter = itertools.count()
    nodes: list[Node] = []
    dim_used = 1

    def make(depth: int) -> int:
        nonlocal dim_used
        k = int(rng.integers(2, 4))
        if dim_used + k > max_dim or depth >= 3 or rng.random() < 0.3 * depth:
            nodes.append(Node.terminal(0.0, 0.0))
            return len(nodes) - 1
        dim_used += k
        infoset = f"I{next(counter)}"
        children = [(f"a{j}", make(depth + 1)) for j in range(k)]
        nodes.append(Node.decision(PLAYER1, infoset, children))
        return len(nodes) - 1

    root = make(0)
    tree = GameTree(nodes=tuple(nodes), root=root)
    return compile_treeplex([(tree, PLAYER1)], agent="t")
