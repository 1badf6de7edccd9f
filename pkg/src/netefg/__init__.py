"""Network zero-sum extensive form games, sequence-form compilation, and
optimistic gradient dynamics with convergence diagnostics."""

from .efg import (
    BehavioralPlan,
    GameTree,
    Node,
    ValidationReport,
    expected_payoff,
    pure_plans,
    random_plan,
    uniform_plan,
    validate_game_tree,
    validate_perfect_recall,
)
from .sequence_form import (
    PayoffMatrix,
    SequenceStrategy,
    Treeplex,
    behavioral_to_sequence,
    build_edge_payoff_matrix,
    compile_treeplex,
    sequence_to_behavioral,
)
from .network import (
    NetworkGame,
    ProductTreeplex,
    ValidationError,
    ZeroSumReport,
    agent_payoffs,
    assemble,
    check_zero_sum,
    uniform_joint,
    sample_joint,
    validate_consistency,
)
from .polytope import (
    EquilibriumSet,
    QPSolution,
    best_response,
    distance_to_ne_set,
    equilibrium_set,
    membership,
    project,
    solve_symmetric_ne,
)
from .solver import (
    SolverConfig,
    SolverState,
    Trajectory,
    default_step_size,
    initial_state,
    run,
    step,
    step_per_agent,
)
from .diagnostics import (
    DiagnosticsRecord,
    RateFit,
    attach_diagnostics,
    fit_rates,
    lyapunov,
    nash_gap,
    symmetric_gap,
)
from .games import (
    NetworkDescription,
    kuhn_poker,
    matching_pennies,
    network_of,
    random_network_efg,
)
from . import gamefile

__all__ = [name for name in dir() if not name.startswith("_")]
