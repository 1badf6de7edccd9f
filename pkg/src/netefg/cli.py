"""Command-line harness: run experiments, sweep step sizes, verify game
properties, and plot finished runs.

CSV schema (fixed order, header always present):
t, nash_gap_avg, nash_gap_last, symmetric_gap, dist2_ne, theta, xi.
Metrics outside the requested subset are written as empty fields, as are
values undefined at a given row.  A (config, seed) pair maps to
byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import gamefile
from .diagnostics import attach_diagnostics, fit_rates
from .efg import PLAYER1, PLAYER2, validate_game_tree, validate_perfect_recall
from .games import NetworkDescription, template_by_name, network_of
from .network import assemble, check_zero_sum, sample_joint, validate_consistency
from .polytope import equilibrium_set
from .solver import SolverConfig, default_step_size, run

CSV_COLUMNS = ("t", "nash_gap_avg", "nash_gap_last", "symmetric_gap",
               "dist2_ne", "theta", "xi")

METRIC_NAMES = ("nash_gap", "symmetric_gap", "dist2", "lyapunov")

# which metric switch governs which CSV column
COLUMN_METRIC = {
    "nash_gap_avg": "nash_gap",
    "nash_gap_last": "nash_gap",
    "symmetric_gap": "symmetric_gap",
    "dist2_ne": "dist2",
    "theta": "lyapunov",
    "xi": "lyapunov",
}

SWEEP_GRID_EXPONENTS = range(-3, 4)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed command-line experiment parameters."""

    game: str
    topology: str
    nodes: int
    eta: float | None
    iterations: int
    seed: int
    record_every: int
    init: str
    metrics: tuple[str, ...]
    output: str | None
    workers: int

    @staticmethod
    def from_args(args: argparse.Namespace) -> "ExperimentConfig":
        return ExperimentConfig(
            game=args.game, topology=args.topology, nodes=args.nodes,
            eta=getattr(args, "eta_value", None),
            iterations=getattr(args, "iterations", 1),
            seed=getattr(args, "seed", 0),
            record_every=getattr(args, "record_every", 100),
            init=getattr(args, "init", "uniform"),
            metrics=tuple(getattr(args, "metrics_list", METRIC_NAMES)),
            output=getattr(args, "output", None),
            workers=getattr(args, "workers", 1),
        )


def _parse_eta(text: str) -> float | None:
    if text == "auto":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"eta must be 'auto' or a number, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError("eta must be positive")
    return value


def _parse_metrics(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in METRIC_NAMES]
    if bad:
        raise argparse.ArgumentTypeError(
            f"unknown metrics {bad}; valid: {', '.join(METRIC_NAMES)}")
    return names


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_description(config: ExperimentConfig) -> NetworkDescription:
    path = Path(config.game)
    if path.suffix == ".json" or path.exists():
        return gamefile.load(path)
    try:
        template = template_by_name(config.game)
    except ValueError as exc:
        raise SystemExit(f"error: {exc}") from exc
    return network_of(config.topology, config.nodes, template)


def _format(value) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return ""
    return str(float(value))


def _csv_text(records, metrics: tuple[str, ...]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        row = [str(r.t)]
        for col in CSV_COLUMNS[1:]:
            if COLUMN_METRIC[col] in metrics:
                row.append(_format(getattr(r, col)))
            else:
                row.append("")
        writer.writerow(row)
    return buf.getvalue()


def _fit_summary(trajectory) -> str:
    loglog, semilog = fit_rates(trajectory)
    parts = []
    for fit in (loglog, semilog):
        if fit is None:
            parts.append("insufficient data")
        else:
            parts.append(f"{fit.kind} slope={fit.slope:.4f} r2={fit.r_squared:.4f}")
    return "; ".join(parts)


def _execute(config: ExperimentConfig, eta: float | None) -> tuple:
    """Assemble, run, and diagnose once; shared by run and sweep cells."""
    net = assemble(build_description(config))
    solver_config = SolverConfig(
        eta=eta, iterations=config.iterations, seed=config.seed,
        initial=config.init, record_every=config.record_every, form="joint")
    trajectory = run(net, solver_config)
    needs_eq = "dist2" in config.metrics or "lyapunov" in config.metrics
    eq = equilibrium_set(net) if needs_eq else None
    attach_diagnostics(trajectory, net, eq, dist_every=1)
    return net, trajectory


def cmd_run(config: ExperimentConfig) -> int:
    try:
        net, trajectory = _execute(config, config.eta)
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = _csv_text(trajectory.records, config.metrics)
    if config.output:
        Path(config.output).write_text(text)
    else:
        sys.stdout.write(text)
    final = trajectory.records[-1]
    print(f"summary: eta={trajectory.config.eta} t={final.t} "
          f"nash_gap_avg={_format(final.nash_gap_avg) or 'n/a'} "
          f"dist2_ne={_format(final.dist2_ne) or 'n/a'}; {_fit_summary(trajectory)}")
    return 0


def _sweep_cell(config: ExperimentConfig, eta: float) -> dict:
    """One isolated sweep run; rebuilds everything so cells are
    independent under process-level parallelism."""
    row: dict = {"eta": eta, "status": "ok"}
    try:
        net, trajectory = _execute(config, eta)
    except (RuntimeError, ValueError) as exc:
        row["status"] = f"failed: {exc}"
        return row
    final = trajectory.records[-1]
    row.update(final_t=final.t, nash_gap_avg=final.nash_gap_avg,
               symmetric_gap=final.symmetric_gap, dist2_ne=final.dist2_ne)
    loglog, semilog = fit_rates(trajectory)
    if loglog is not None:
        row.update(loglog_slope=loglog.slope, loglog_r2=loglog.r_squared)
    if semilog is not None:
        row.update(semilog_slope=semilog.slope, semilog_r2=semilog.r_squared)
    return row


SWEEP_COLUMNS = ("eta", "status", "final_t", "nash_gap_avg", "symmetric_gap",
                 "dist2_ne", "loglog_slope", "loglog_r2", "semilog_slope",
                 "semilog_r2", "best")


def cmd_sweep(config: ExperimentConfig, eta_grid) -> int:
    if eta_grid is None:
        net = assemble(build_description(config))
        base = default_step_size(net)
        eta_grid = [base * (2.0 ** k) for k in SWEEP_GRID_EXPONENTS]
    if not eta_grid:
        print("error: empty eta grid", file=sys.stderr)
        return 1

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(_sweep_cell, [config] * len(eta_grid), eta_grid))
    else:
        rows = [_sweep_cell(config, eta) for eta in eta_grid]

    best = None
    for row in rows:
        d = row.get("dist2_ne")
        if row["status"] == "ok" and d is not None and np.isfinite(d):
            key = (d, row["eta"])
            if best is None or key < best:
                best = key
    for row in rows:
        row["best"] = "*" if best is not None and row["eta"] == best[1] else ""

    table = [[_format(r.get(c)) if c not in ("status", "best", "final_t")
              else str(r.get(c, "")) for c in SWEEP_COLUMNS] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in table))
              for i, c in enumerate(SWEEP_COLUMNS)]
    print("  ".join(c.ljust(w) for c, w in zip(SWEEP_COLUMNS, widths)))
    for row in table:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))

    if config.output:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for cells in table:
            writer.writerow(cells)
        Path(config.output).write_text(buf.getvalue())
    return 0 if any(r["status"] == "ok" for r in rows) else 1


def cmd_verify(config: ExperimentConfig) -> int:
    try:
        desc = build_description(config)
    except gamefile.GameFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    ok = True

    def report(name: str, passed: bool, detail: str = "") -> None:
        nonlocal ok
        ok = ok and passed
        suffix = f" ({detail})" if detail and not passed else ""
        print(f"{'PASS' if passed else 'FAIL'} {name}{suffix}")

    seen: dict[int, str] = {}
    for u, v, tree in desc.edges:
        if id(tree) in seen:
            continue
        seen[id(tree)] = f"edge ({u},{v})"
        structural = validate_game_tree(tree)
        report(f"game tree on edge ({u},{v})", structural.ok, structural.describe())
        if structural.ok:
            for role in (PLAYER1, PLAYER2):
                rep = validate_perfect_recall(tree, role)
                report(f"perfect recall ({role}) on edge ({u},{v})", rep.ok, rep.describe())
    if not ok:
        print("verification stopped: structural checks failed")
        return 1

    for agent in desc.agents:
        rep = validate_consistency(desc.edges, agent)
        report(f"consistency of agent {agent}", rep.ok, rep.describe())
    if not ok:
        return 1

    net = assemble(desc)
    zs = check_zero_sum(net)
    report(f"zero-sum ({zs.mode}, {zs.checked} profiles, "
           f"max violation {zs.max_violation:.2e})", zs.ok)

    rng = np.random.default_rng(config.seed)
    xs = sample_joint(net, 200, rng)
    ys = sample_joint(net, 200, rng)
    worst = float(np.max(np.abs(np.einsum("ij,ij->i", xs, (net.R @ ys.T).T)
                                + np.einsum("ij,ij->i", ys, (net.R @ xs.T).T))))
    report(f"restricted antisymmetry (200 pairs, max |x'Ry + y'Rx| {worst:.2e})",
           worst <= net.zero_sum_tolerance())
    return 0 if ok else 1


def cmd_plot(args: argparse.Namespace) -> int:
    from . import plotting
    source = Path(args.input)
    if not source.exists():
        print(f"error: no such file {source}", file=sys.stderr)
        return 1
    target = Path(args.output) if args.output else source.with_suffix(".png")
    try:
        plotting.render_run(source, target)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {target}")
    return 0


def _add_game_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--game", default="matching-pennies",
                   help="fixture name (matching-pennies, kuhn) or game file path")
    p.add_argument("--topology", default="ring", choices=("ring", "complete"))
    p.add_argument("--nodes", type=_positive, default=2, help="number of agents")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", dest="eta_value", type=_parse_eta, default=None,
                   help="step size, or 'auto' for the guarantee-compliant default")
    p.add_argument("--iterations", type=_positive, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record-every", dest="record_every", type=_positive, default=100)
    p.add_argument("--init", choices=("uniform", "random"), default="uniform")
    p.add_argument("--metrics", dest="metrics_list", type=_parse_metrics,
                   default=METRIC_NAMES,
                   help="comma-separated subset of " + ",".join(METRIC_NAMES))
    p.add_argument("--output", default=None, help="CSV path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netefg",
        description="Optimistic gradient dynamics on network zero-sum "
                    "extensive form games")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment, emit metrics CSV")
    _add_game_flags(p_run)
    _add_run_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="run a step-size grid")
    _add_game_flags(p_sweep)
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--etas", default=None,
                         help="comma-separated grid (default: 7 log-spaced "
                              "points around the auto step size)")
    p_sweep.add_argument("--workers", type=_positive, default=1)

    p_verify = sub.add_parser("verify", help="check game properties")
    _add_game_flags(p_verify)
    p_verify.add_argument("--seed", type=int, default=0)

    p_plot = sub.add_parser("plot", help="render figures from a run CSV")
    p_plot.add_argument("--input", required=True, help="CSV written by run")
    p_plot.add_argument("--output", default=None,
                        help="PNG path (default: CSV path with .png)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "plot":
        return cmd_plot(args)
    config = ExperimentConfig.from_args(args)
    if args.command == "run":
        return cmd_run(config)
    if args.command == "verify":
        return cmd_verify(config)
    grid = None
    if args.etas is not None:
        try:
            grid = [float(s) for s in args.etas.split(",") if s.strip()]
        except ValueError:
            print(f"error: bad eta grid {args.etas!r}", file=sys.stderr)
            return 1
    return cmd_sweep(config, grid)


if __name__ == "__main__":
    sys.exit(main())
