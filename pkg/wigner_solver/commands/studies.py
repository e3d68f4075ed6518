import math
from typing import Any, Dict

from wigner_solver.commands.run import add_config_arguments
from wigner_solver.services.studies import run_convergence_study, run_eigen_report, run_stability_study
from wigner_solver.utils.config_loader import manifest_hash, resolve_config


def register(subparsers) -> None:
    converge = subparsers.add_parser("converge", help="Delta against dx for several basis sizes")
    add_config_arguments(converge)
    converge.set_defaults(handler=handle_converge)

    stability = subparsers.add_parser("stability", help="amplification factors of the forcing propagators")
    add_config_arguments(stability)
    stability.set_defaults(handler=handle_stability)

    eigen = subparsers.add_parser("eigen", help="eigenvector convergence against the eigen basis size")
    add_config_arguments(eigen)
    eigen.set_defaults(handler=handle_eigen)


def handle_converge(args) -> Dict[str, Any]:
    config = resolve_config(args.config, args.preset, args.override)
    rows, slopes = run_convergence_study(config, out_dir=args.out)
    for row in rows:
        print(f"   N={row.n_basis:<4} dx={row.dx:<10.6g} delta={row.delta:.3e}")
    for n_basis, slope in slopes.items():
        print(f"📈 N={n_basis}: fitted order {slope:.3f}")
    finest = min(rows, key=lambda r: (r.dx, -r.n_basis))
    return {"manifest_hash": manifest_hash(config), "output_dir": args.out or "", "final_delta": finest.delta}


def handle_stability(args) -> Dict[str, Any]:
    config = resolve_config(args.config, args.preset, args.override)
    rows = run_stability_study(config, out_dir=args.out)
    for row in rows:
        flag = "⚠️ " if row.max_g > 1.0 + 1e-12 else "✅"
        print(f"{flag} {row.method.value:<7} max g = {row.max_g:.12g} at x = {row.x_at_max:.4g} (dx={row.dx:.4g}, dt={row.dt:.4g})")
    return {"manifest_hash": manifest_hash(config), "output_dir": args.out or ""}


def handle_eigen(args) -> Dict[str, Any]:
    config = resolve_config(args.config, args.preset, args.override)
    rows = run_eigen_report(config, out_dir=args.out)
    for row in rows:
        ground = math.log10(row.diff_ground) if row.diff_ground > 0 else float("-inf")
        excited = math.log10(row.diff_excited) if row.diff_excited > 0 else float("-inf")
        print(f"   N_b={row.n_b:<4} log10 diff: ground {ground:7.2f}  excited {excited:7.2f}")
    last = rows[-1]
    print(f"🔬 E0 = {last.e0:.6f}, E1 = {last.e1:.6f} (N_b={last.n_b})")
    return {"manifest_hash": manifest_hash(config), "output_dir": args.out or ""}
