"""Convergence metrics: Nash gaps, the symmetric gap, the Lyapunov pair
(theta, xi), distance to the symmetric equilibrium set, and empirical
rate fits for the two predicted regimes (1/T time-average decay,
geometric last-iterate decay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import NetworkGame, agent_payoffs
from .polytope import EquilibriumSet, best_response, distance_to_ne_set, min_over_product
from .solver import SolverState, Trajectory

# metrics smaller than this are indistinguishable from projection noise
LOG_FLOOR = 1e-12

# fit over the last stretch of records, skipping the transient
FIT_WINDOW_FRACTION = 0.8

MIN_FIT_POINTS = 10


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Metrics at one recorded iteration.  nan marks metrics that were
    not computed at this cadence point (distance QPs are the expensive
    part) or are undefined there (xi at the last record)."""

    t: int
    nash_gap_avg: float
    nash_gap_last: float
    symmetric_gap: float
    dist2_ne: float
    theta: float
    xi: float


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through transformed metric values; kind names
    the transform (loglog: log gap vs log t, semilog: log dist2 vs t)."""

    kind: str
    slope: float
    intercept: float
    r_squared: float
    window: tuple[int, int]


def nash_gap(net: NetworkGame, x) -> tuple[dict, float]:
    """Per-agent best-response improvement against the joint profile x,
    and the maximum over agents.  Nonnegative up to solver tolerance."""
    vals = x.values if hasattr(x, "values") and not isinstance(x, np.ndarray) else np.asarray(x)
    payoffs = agent_payoffs(net, vals)
    gaps = {}
    for u in net.agents:
        _, best_val = best_response(net, u, vals)
        gaps[u] = best_val - payoffs[u]
    return gaps, max(gaps.values())


def symmetric_gap(net: NetworkGame, x) -> float:
    """-min_{x' in X} x'^T R x; zero exactly on the symmetric equilibrium
    set, and equal to the sum of per-agent Nash gaps."""
    vals = x.values if hasattr(x, "values") and not isinstance(x, np.ndarray) else np.asarray(x)
    val, _ = min_over_product(net, net.R @ vals)
    return -val


def lyapunov(net: NetworkGame, eq: EquilibriumSet, state: SolverState,
             next_state: SolverState | None = None) -> tuple[float, float]:
    """theta^t = dist^2(xhat^t, X*) + (1/16)||xhat^t - x^{t-1}||^2 and
    xi^t = ||xhat^{t+1} - x^t||^2 + ||x^t - xhat^t||^2.

    xhat^{t+1} lives in the successor state; without it xi is nan.
    """
    d2, _ = distance_to_ne_set(state.x_hat, eq)
    diff = state.x_hat - state.x_prev
    theta = d2 + float(diff @ diff) / 16.0
    if next_state is None:
        return theta, float("nan")
    if next_state.t != state.t + 1:
        raise ValueError(
            f"xi at t={state.t} needs the state at t={state.t + 1}, got t={next_state.t}")
    a = next_state.x_hat - state.x
    b = state.x - state.x_hat
    return theta, float(a @ a + b @ b)


def attach_diagnostics(trajectory: Trajectory, net: NetworkGame,
                       eq: EquilibriumSet | None = None,
                       dist_every: int = 10) -> list[DiagnosticsRecord]:
    """Fill trajectory.records with one DiagnosticsRecord per recorded
    state.  Gaps are computed at every record; the distance-based metrics
    (dist2_ne, theta, and hence xi's companion) only at every
    dist_every-th record, and only when an equilibrium set is supplied.
    """
    records = []
    states = trajectory.states
    for i, s in enumerate(states):
        avg = s.time_average()
        _, gap_avg = nash_gap(net, avg)
        _, gap_last = nash_gap(net, s.x)
        sym = symmetric_gap(net, s.x)
        dist2 = theta = xi = float("nan")
        if eq is not None and i % dist_every == 0:
            dist2, _ = distance_to_ne_set(s.x, eq)
            succ = states[i + 1] if i + 1 < len(states) and states[i + 1].t == s.t + 1 else None
            theta, xi = lyapunov(net, eq, s, succ)
        records.append(DiagnosticsRecord(
            t=s.t, nash_gap_avg=gap_avg, nash_gap_last=gap_last,
            symmetric_gap=sym, dist2_ne=dist2, theta=theta, xi=xi))
    trajectory.records[:] = records
    return records


def _line_fit(u: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(u, w, 1)
    pred = slope * u + intercept
    ss_res = float(np.sum((w - pred) ** 2))
    ss_tot = float(np.sum((w - np.mean(w)) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-300 else 0.0
    else:
        r2 = max(0.0, 1.0 - ss_res / ss_tot)
    return float(slope), float(intercept), min(r2, 1.0)


def _windowed(records: list, metric: str) -> tuple[np.ndarray, np.ndarray]:
    start = int(math.floor(len(records) * (1.0 - FIT_WINDOW_FRACTION)))
    ts, ys = [], []
    for r in records[start:]:
        y = getattr(r, metric)
        if np.isfinite(y) and y >= LOG_FLOOR and r.t > 0:
            ts.append(r.t)
            ys.append(y)
    return np.array(ts, dtype=float), np.array(ys, dtype=float)


def fit_rates(trajectory: Trajectory) -> tuple[RateFit | None, RateFit | None]:
    """(loglog fit of nash_gap_avg vs t, semilog fit of dist2_ne vs t)
    over the trailing window, dropping points below the floating-point
    floor.  A fit with fewer than 10 usable points is None (insufficient
    data)."""
    if not trajectory.records:
        raise ValueError("trajectory has no diagnostics records; attach them first")
    out = []
    for kind, metric in (("loglog", "nash_gap_avg"), ("semilog", "dist2_ne")):
        ts, ys = _windowed(trajectory.records, metric)
        if len(ts) < MIN_FIT_POINTS:
            out.append(None)
            continue
        u = np.log(ts) if kind == "loglog" else ts
        slope, intercept, r2 = _line_fit(u, np.log(ys))
        out.append(RateFit(kind=kind, slope=slope, intercept=intercept,
                           r_squared=r2, window=(int(ts[0]), int(ts[-1]))))
    return out[0], out[1]
