"""Network assembly: product polytope layout, the interaction matrix R,
payoff accounting, zero-sum verification, cross-edge consistency."""

import numpy as np
import pytest

import netefg as ng
from netefg.efg import PLAYER1, PLAYER2, BehavioralPlan, GameTree, Node
from netefg.games import NetworkDescription
from netefg.network import ValidationError, validate_consistency
from netefg.sequence_form import sequence_to_behavioral

from oracles import payoff_by_paths


def test_layout_and_blocks(mp4, kuhn5):
    assert [mp4.treeplexes[a].dim for a in mp4.agents] == [3, 3, 3, 3]
    assert mp4.product_treeplex.dim == 12
    assert mp4.R.shape == (12, 12)
    # kuhn ring of five: agents 0 and 4 play the same role on both their
    # edges (normalized edges keep the lower id in role 1), so their sets
    # coincide; the middle agents carry both roles
    assert [kuhn5.treeplexes[a].dim for a in kuhn5.agents] == [13, 25, 25, 25, 13]
    covered = []
    for a in kuhn5.agents:
        s = kuhn5.block(a)
        covered.extend(range(s.start, s.stop))
    assert covered == list(range(kuhn5.product_treeplex.dim))


def test_neighbors_follow_edges(mp4):
    assert mp4.neighbors(0) == (1, 3)
    assert mp4.neighbors(2) == (1, 3)


def test_gradient_is_negated_R_block(mp4, kuhn2):
    rng = np.random.default_rng(3)
    for net in (mp4, kuhn2):
        for x in ng.sample_joint(net, 5, rng):
            Rx = net.R @ x
            for a in net.agents:
                np.testing.assert_allclose(net.gradient(a, x), -Rx[net.block(a)],
                                           atol=1e-12)


def test_agent_payoffs_match_per_edge_path_oracle(mp4, kuhn2):
    rng = np.random.default_rng(11)
    for net in (mp4, kuhn2):
        for x in ng.sample_joint(net, 3, rng):
            plans = {a: sequence_to_behavioral(x[net.block(a)], net.treeplexes[a])
                     for a in net.agents}
            want = {a: 0.0 for a in net.agents}
            for u, v, tree in net.edges:
                s1, s2 = payoff_by_paths(tree, plans[u], plans[v])
                want[u] += s1
                want[v] += s2
            got = ng.agent_payoffs(net, x)
            for a in net.agents:
                assert got[a] == pytest.approx(want[a], abs=1e-10)


def test_total_payoff_is_minus_quadratic_form(mp4, kuhn5):
    rng = np.random.default_rng(4)
    for net in (mp4, kuhn5):
        for x in ng.sample_joint(net, 5, rng):
            total = sum(ng.agent_payoffs(net, x).values())
            assert total == pytest.approx(-float(x @ (net.R @ x)), abs=1e-11)


def test_zero_sum_exhaustive_on_small_net(mp4):
    report = ng.check_zero_sum(mp4)
    assert report.mode == "exhaustive"
    assert report.checked == 2 ** 4
    assert report.ok and report.max_violation <= report.tolerance


def test_zero_sum_falls_back_to_sampling(kuhn5):
    report = ng.check_zero_sum(kuhn5)
    assert report.mode == "sampled"
    assert report.checked == 1000
    assert report.ok
    with pytest.raises(ValueError, match="cap"):
        ng.check_zero_sum(kuhn5, mode="exhaustive")


def test_zero_sum_violation_detected():
    nodes = [
        Node.decision(PLAYER1, "1:pick", [("heads", 1), ("tails", 2)]),
        Node.decision(PLAYER2, "2:pick", [("heads", 3), ("tails", 4)]),
        Node.decision(PLAYER2, "2:pick", [("heads", 5), ("tails", 6)]),
        Node.terminal(1.0, 1.0),
        Node.terminal(-1.0, 1.0),
        Node.terminal(-1.0, 1.0),
        Node.terminal(1.0, -1.0),
    ]
    selfish = GameTree(nodes=tuple(nodes), root=0)
    desc = ng.network_of("ring", 2, selfish)
    assert desc.metadata["zero_sum"] is False
    report = ng.check_zero_sum(ng.assemble(desc))
    assert not report.ok
    assert report.max_violation == pytest.approx(2.0)


def test_interaction_matrix_antisymmetric_for_pairwise_edges(mp4, kuhn2):
    for net in (mp4, kuhn2):
        D = net.dense_R()
        assert np.abs(D + D.T).max() <= 1e-12


def test_cycle_redistributed_antisymmetric_only_on_polytope():
    net = ng.assemble(ng.random_network_efg(13, mode="cycle_redistributed"))
    D = net.dense_R()
    assert np.abs(D + D.T).max() > 1e-6
    rng = np.random.default_rng(0)
    X, Y = ng.sample_joint(net, 50, rng), ng.sample_joint(net, 50, rng)
    worst = max(abs(float(x @ (net.R @ y) + y @ (net.R @ x)))
                for x, y in zip(X, Y))
    assert worst <= net.zero_sum_tolerance()


def test_spectral_norm_against_dense(mp2, mp4, kuhn2):
    for net in (mp2, mp4, kuhn2):
        want = np.linalg.norm(net.dense_R(), 2)
        assert abs(net.spectral_norm() - want) <= 1e-6 * max(1.0, want)


def test_uniform_joint_feasible(kuhn5):
    x = ng.uniform_joint(kuhn5)
    tp = kuhn5.product_treeplex
    assert np.max(np.abs(tp.C @ x - tp.d)) <= 1e-12
    assert x.min() >= 0.0


def _mp_like(role1_set, role1_acts, role2_set):
    a, b = role1_acts
    nodes = [
        Node.decision(PLAYER1, role1_set, [(a, 1), (b, 2)]),
        Node.decision(PLAYER2, role2_set, [("heads", 3), ("tails", 4)]),
        Node.decision(PLAYER2, role2_set, [("heads", 5), ("tails", 6)]),
        Node.terminal(1.0, -1.0),
        Node.terminal(-1.0, 1.0),
        Node.terminal(-1.0, 1.0),
        Node.terminal(1.0, -1.0),
    ]
    return GameTree(nodes=tuple(nodes), root=0)


def test_inconsistent_agent_rejected():
    # agent 1 sees set "a1:pick" with actions heads/tails on edge (0, 1)
    # but up/down on edge (1, 2)
    edge01 = _mp_like("a0:pick", ("heads", "tails"), "a1:pick")
    consistent = _mp_like("a1:pick", ("heads", "tails"), "a2:pick")
    ok_desc = NetworkDescription(agents=(0, 1, 2),
                                 edges=((0, 1, edge01), (1, 2, consistent)),
                                 metadata={})
    ng.assemble(ok_desc)  # sanity: the consistent version compiles

    clash = _mp_like("a1:pick", ("up", "down"), "a2:pick")
    clash_desc = NetworkDescription(agents=(0, 1, 2),
                                    edges=((0, 1, edge01), (1, 2, clash)),
                                    metadata={})
    report = validate_consistency(clash_desc.edges, 1)
    assert not report.ok
    assert any(rule == "consistency_actions" for rule, _, _ in report.violations)
    with pytest.raises(ValidationError, match="agent 1 inconsistent"):
        ng.assemble(clash_desc)


def test_history_depth_mismatch_rejected():
    # on one edge the set hangs off the root, on the other it sits one own
    # action deep: the own-history lengths differ
    shallow = GameTree(nodes=(
        Node.decision(PLAYER1, "a1:deep", [("l", 1), ("r", 2)]),
        Node.terminal(0.0, 0.0), Node.terminal(0.0, 0.0)), root=0)
    nested = GameTree(nodes=(
        Node.decision(PLAYER1, "a1:top", [("go", 1), ("stop", 4)]),
        Node.decision(PLAYER1, "a1:deep", [("l", 2), ("r", 3)]),
        Node.terminal(0.0, 0.0), Node.terminal(0.0, 0.0),
        Node.terminal(0.0, 0.0)), root=0)
    desc = NetworkDescription(agents=(1, 2, 3),
                              edges=((1, 2, shallow), (1, 3, nested)),
                              metadata={})
    report = validate_consistency(desc.edges, 1)
    assert any(rule == "consistency_length" for rule, _, _ in report.violations)
    with pytest.raises(ValidationError):
        ng.assemble(desc)


def test_assemble_rejects_undeclared_agent():
    tree = ng.matching_pennies()
    desc = NetworkDescription(agents=(0, 1),
                              edges=((0, 5, tree),), metadata={})
    with pytest.raises(ValueError):
        ng.assemble(desc)


def test_sampled_zero_sum_report_is_cached(mp2):
    report = ng.check_zero_sum(mp2)
    assert mp2._zero_sum_cache[-1] is report
