"""Optimistic gradient ascent over the joint strategy polytope.

Two equivalent update forms: the joint reduced recursion

    x^t      = project(xhat^t - eta R x^{t-1})
    xhat^t+1 = project(xhat^t - eta R x^t)

and the per-agent form where every agent ascends its own payoff gradient
sum_v A^uv x_v over its own treeplex.  The sign flip between ascent and
the reduced form is baked into R once, at assembly.  Initialization uses
xhat^1 = x^0, so the first step leaves the auxiliary iterate in place.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .network import NetworkGame, check_zero_sum, sample_joint, uniform_joint
from .polytope import project

FEAS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Run parameters.  eta None means resolve via default_step_size when
    the run starts; initial is "uniform", "random" (seeded), or an
    explicit joint sequence-form vector."""

    eta: float | None = None
    iterations: int = 1000
    seed: int | None = None
    initial: Union[str, np.ndarray] = "uniform"
    record_every: int = 100
    form: str = "joint"

    def __post_init__(self):
        if self.eta is not None and not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.form not in ("joint", "per_agent"):
            raise ValueError(f"unknown form {self.form!r}")
        if isinstance(self.initial, str) and self.initial not in ("uniform", "random"):
            raise ValueError(f"unknown initial {self.initial!r}")


@dataclass(frozen=True, eq=False)
class SolverState:
    """Iterates after step t: x = x^t, x_hat = xhat^t, x_prev = x^{t-1},
    running_sum = sum of x^1..x^t (so running_sum / t is the time
    average)."""

    t: int
    x: np.ndarray
    x_hat: np.ndarray
    x_prev: np.ndarray
    running_sum: np.ndarray

    def time_average(self) -> np.ndarray:
        if self.t == 0:
            return self.x
        return self.running_sum / self.t


@dataclass(eq=False)
class Trajectory:
    """Recorded states at the configured cadence plus the resolved config;
    diagnostics records are attached afterwards by the diagnostics
    module."""

    config: SolverConfig
    states: tuple[SolverState, ...]
    records: list = field(default_factory=list)

    @property
    def final(self) -> SolverState:
        return self.states[-1]


def default_step_size(net: NetworkGame) -> float:
    """min(1 / (8 ||R||^2), 1); the largest step size for which both the
    time-average and last-iterate guarantees hold."""
    norm = net.spectral_norm()
    if norm == 0.0:
        return 1.0
    return float(min(1.0 / (8.0 * norm * norm), 1.0))


def initial_state(net: NetworkGame, x0: np.ndarray) -> SolverState:
    x0 = np.asarray(x0, dtype=float)
    _require_feasible(net, x0, "initial point")
    return SolverState(t=0, x=x0, x_hat=x0.copy(), x_prev=x0.copy(),
                       running_sum=np.zeros_like(x0))


def _require_feasible(net: NetworkGame, x: np.ndarray, what: str) -> None:
    tp = net.product_treeplex
    if x.shape != (tp.dim,):
        raise ValueError(f"{what} has shape {x.shape}, expected ({tp.dim},)")
    resid = float(np.max(np.abs(tp.C @ x - tp.d)))
    if resid > FEAS_TOL or float(x.min()) < -FEAS_TOL:
        raise ValueError(f"{what} violates treeplex constraints (residual {resid:.3e})")


def step(state: SolverState, net: NetworkGame, eta: float) -> SolverState:
    """One joint update.  Both projections reuse the single matrix-vector
    product R x^t; at t = 0 the auxiliary iterate stays put (xhat^1 =
    x^0)."""
    g = eta * (net.dense_R() @ state.x)
    tp = net.product_treeplex
    if state.t == 0:
        x_hat_next = state.x_hat
    else:
        x_hat_next = project(state.x_hat - g, tp).point
    x_new = project(x_hat_next - g, tp).point
    return SolverState(t=state.t + 1, x=x_new, x_hat=x_hat_next, x_prev=state.x,
                       running_sum=state.running_sum + x_new)


def step_per_agent(state: SolverState, net: NetworkGame, eta: float) -> SolverState:
    """One update in the per-agent form: each block ascends its own
    gradient through its own treeplex projection.  Produces the same
    vectors as step() because R is block-structured and projection onto a
    product splits blockwise."""
    tp = net.product_treeplex
    x_hat_next = np.empty(tp.dim)
    x_new = np.empty(tp.dim)
    for u in net.agents:
        blk = net.block(u)
        tpu = net.treeplexes[u]
        gu = eta * net.gradient(u, state.x)
        if state.t == 0:
            xh = state.x_hat[blk].copy()
        else:
            xh = project(state.x_hat[blk] + gu, tpu).point
        x_hat_next[blk] = xh
        x_new[blk] = project(xh + gu, tpu).point
    return SolverState(t=state.t + 1, x=x_new, x_hat=x_hat_next, x_prev=state.x,
                       running_sum=state.running_sum + x_new)


def _initial_point(net: NetworkGame, config: SolverConfig) -> np.ndarray:
    if isinstance(config.initial, np.ndarray):
        return np.asarray(config.initial, dtype=float)
    if config.initial == "uniform":
        return uniform_joint(net)
    rng = np.random.default_rng(config.seed)
    return sample_joint(net, 1, rng)[0]


def run(net: NetworkGame, config: SolverConfig) -> Trajectory:
    """Execute the configured number of steps, recording every
    record_every-th state and always the final one.

    The zero-sum property is verified first (cached on the game): a
    violation aborts, a merely sampled verification warns and continues.
    Non-finite iterates abort with the offending iteration index.
    """
    eta = config.eta if config.eta is not None else default_step_size(net)
    cfg = replace(config, eta=eta)
    report = net._zero_sum_cache[-1] if net._zero_sum_cache else check_zero_sum(net)
    if not report.ok:
        raise ValueError(
            f"game is not zero-sum (max profile violation {report.max_violation:.3e})")
    if report.mode == "sampled":
        warnings.warn("zero-sum property verified only on sampled profiles",
                      RuntimeWarning, stacklevel=2)

    state = initial_state(net, _initial_point(net, cfg))
    stepper = step if cfg.form == "joint" else step_per_agent
    states = []
    for t in range(1, cfg.iterations + 1):
        state = stepper(state, net, eta)
        if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.x_hat))):
            raise RuntimeError(f"non-finite iterate at iteration {t}; reduce eta")
        if t % cfg.record_every == 0 or t == cfg.iterations:
            states.append(state)
    return Trajectory(config=cfg, states=tuple(states))
