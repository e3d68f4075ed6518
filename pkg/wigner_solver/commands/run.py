import argparse
from pathlib import Path
from typing import Any, Dict

from wigner_solver.services.run_ledger import RunLedger
from wigner_solver.services.simulation import run_simulation
from wigner_solver.utils.config_loader import resolve_config


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    """--config/--preset/--override/--out, shared by every experiment subcommand."""
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--preset", help="name of a shipped preset (see presets/)")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted-key override, e.g. grid.dx=0.01 (repeatable)",
    )
    parser.add_argument("--out", help="output directory")


def register(subparsers) -> None:
    run = subparsers.add_parser("run", help="evolve one configured experiment")
    add_config_arguments(run)
    run.add_argument("--dump-operators", action="store_true", help="also write A, M_0..M_3 and M_V")
    run.set_defaults(handler=handle_run)

    history = subparsers.add_parser("history", help="list recent runs from the ledger")
    history.add_argument("--limit", type=int, default=20, help="number of entries")
    history.add_argument("--command", dest="filter_command", help="only this subcommand")
    history.set_defaults(handler=handle_history, record=False)


def handle_run(args) -> Dict[str, Any]:
    """
    Run one simulation and print its summary.

    Returns:
        Ledger fields for this invocation
    """
    config = resolve_config(args.config, args.preset, args.override)
    summary = run_simulation(config, out_dir=args.out, dump_operators=args.dump_operators)

    out_dir = str(Path(summary.files[0]).parent) if summary.files else ""
    print(f"✅ {summary.name}: {summary.n_steps} steps, dt={summary.dt:.6g}, courant={summary.courant:.4f}")
    print(f"📁 Output: {out_dir} ({len(summary.files)} files)")
    print(f"⚖️  Mass drift: {summary.mass_drift:.3e}")
    if summary.final_delta is not None:
        print(f"🎯 Final delta: {summary.final_delta:.3e} (max |dW| {summary.max_abs_error:.3e})")
    print(f"⏱️  Wall clock: {summary.wall_clock_s:.2f} s")
    return {
        "manifest_hash": summary.manifest_hash,
        "output_dir": out_dir,
        "n_steps": summary.n_steps,
        "final_delta": summary.final_delta,
    }


def handle_history(args) -> Dict[str, Any]:
    records = RunLedger().history(limit=args.limit, command=args.filter_command)
    if not records:
        print("No runs recorded yet.")
    for record in records:
        started = record.started_at.strftime("%Y-%m-%d %H:%M:%S") if record.started_at else "-"
        delta = f"{record.final_delta:.3e}" if record.final_delta is not None else "-"
        print(
            f"#{record.id:<5} {started}  {record.command:<9} {record.status:<16} "
            f"{record.wall_clock_s:8.2f}s  delta={delta}  {record.preset or ''} {record.output_dir}"
        )
    return {}

