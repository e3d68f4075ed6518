"""Parameter studies: Delta convergence, forcing amplification factors, eigenvector convergence."""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from wigner_solver.config import get_settings
from wigner_solver.errors import ConfigError
from wigner_solver.models.schemas import (
    AmplificationRow,
    BasisSpec,
    ConvergenceConfig,
    ConvergenceRow,
    EigenReportConfig,
    EigenReportRow,
    ForcingMethod,
    GridConfig,
    RunConfig,
    StabilityConfig,
)
from wigner_solver.services import potential as pot
from wigner_solver.services.dynamics import GridSpec, evolve
from wigner_solver.services.operators import (
    advection_operator,
    amplification_factor,
    asymmetric_propagator,
    cayley_rotation,
    pseudo_diff_matrices,
)
from wigner_solver.services.simulation import final_delta, prepare
from wigner_solver.services.states import eigen_convergence, solve_eigenstates
from wigner_solver.utils.config_loader import manifest_hash, write_manifest
from wigner_solver.utils.csv_writer import CsvWriter

logger = logging.getLogger(__name__)


def _study_dir(config: RunConfig, out_dir: Optional[str], suffix: str) -> Path:
    return Path(out_dir or config.output_dir or Path(get_settings().output_dir) / f"{config.name}_{suffix}")


def _writer(config: RunConfig, out: Path) -> CsvWriter:
    write_manifest(config, out)
    return CsvWriter(out, manifest_hash(config))


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------

def fit_slope(dx_values, deltas) -> float:
    """Least-squares slope of log(Delta) against log(dx)."""
    if len(dx_values) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(dx_values), np.log(deltas), 1)
    return float(slope)


def run_convergence_study(config: RunConfig, out_dir: Optional[str] = None) -> Tuple[List[ConvergenceRow], Dict[int, float]]:
    """
    Delta at t_end for every (N, dx) pair and the fitted order per N.

    Returns:
        Tuple of (rows, slope per basis size)
    """
    study = config.convergence or ConvergenceConfig()
    out = _study_dir(config, out_dir, "convergence")
    writer = _writer(config, out)
    rows: List[ConvergenceRow] = []
    for n_basis in study.n_values:
        for dx in study.dx_values:
            grid = GridConfig(x_min=config.grid.x_min, x_max=config.grid.x_max, dx=dx)
            point = config.model_copy(update={"n_basis": n_basis, "grid": grid, "snapshot_times": []})
            experiment = prepare(point)
            if not experiment.has_oracle:
                raise ConfigError("the convergence study needs a configuration with an exact solution", key="potential")
            final = evolve(experiment.initial, experiment.ops, experiment.plan, experiment.t_end)
            delta = final_delta(experiment, final)
            logger.info("N=%d dx=%.6g: delta=%.3e", n_basis, dx, delta)
            rows.append(ConvergenceRow(n_basis=n_basis, dx=dx, delta=delta))
    slopes = {}
    for n_basis in study.n_values:
        subset = [r for r in rows if r.n_basis == n_basis]
        slopes[n_basis] = fit_slope([r.dx for r in subset], [r.delta for r in subset])
        logger.info("N=%d: fitted order %.3f", n_basis, slopes[n_basis])
    writer.write("convergence.csv", ("n_basis", "dx", "delta"), ((r.n_basis, r.dx, r.delta) for r in rows))
    writer.write("convergence_slopes.csv", ("n_basis", "slope"), sorted(slopes.items()))
    return rows, slopes


# ---------------------------------------------------------------------------
# Stability
# ---------------------------------------------------------------------------

def _method_grid(config: RunConfig, study: StabilityConfig, method: ForcingMethod) -> GridSpec:
    resolution = study.resolution.get(method)
    if resolution is None:
        return GridSpec.from_config(config.grid)
    grid = GridConfig(x_min=config.grid.x_min, x_max=config.grid.x_max, dx=1.0 / resolution)
    return GridSpec.from_config(grid)


def _cfl_dt(spec: BasisSpec, grid: GridSpec, config: RunConfig) -> float:
    courant = config.time.courant if config.time.courant is not None else get_settings().default_courant
    speed = advection_operator(spec.n_basis).max_speed
    return courant * grid.dx / speed if speed else grid.dx


def amplification_profile(spec: BasisSpec, potential, grid: GridSpec, dt: float, method: ForcingMethod) -> np.ndarray:
    """g(x_j) for one forcing method."""
    m_matrices = pseudo_diff_matrices(spec, potential, grid.nodes)
    return np.array([amplification_factor(method, m, dt) for m in m_matrices])


def asymmetric_demo(n_basis: int, grid: GridSpec, dt: float, steps: int) -> np.ndarray:
    """
    Forcing-only evolution of the ground state in both Hermite bases.

    Returns rows (step, t, norm_asymmetric, norm_symmetric) with the field
    norm sqrt(sum_j |a(x_j)|^2 dx).
    """
    x = grid.nodes
    start = np.zeros((n_basis, x.size))
    start[0] = math.pi ** -0.75 * np.exp(-x * x)
    asym = np.stack([asymmetric_propagator(n_basis, xj, dt) for xj in x])
    spec = BasisSpec(n_basis=n_basis)
    sym = cayley_rotation(pseudo_diff_matrices(spec, pot.harmonic(), x), dt)
    a_asym = start.copy()
    a_sym = start.copy()
    rows = np.empty((steps + 1, 4))

    def norm(a: np.ndarray) -> float:
        return math.sqrt(float(np.sum(a * a)) * grid.dx)

    rows[0] = (0, 0.0, norm(a_asym), norm(a_sym))
    for step in range(1, steps + 1):
        a_asym = np.einsum("jkl,lj->kj", asym, a_asym)
        a_sym = np.einsum("jkl,lj->kj", sym, a_sym)
        rows[step] = (step, step * dt, norm(a_asym), norm(a_sym))
    return rows


def run_stability_study(config: RunConfig, out_dir: Optional[str] = None) -> List[AmplificationRow]:
    """
    Amplification factor g(x) of each requested forcing method on the
    configured potential, plus the asymmetric-basis demonstration.
    """
    study = config.stability or StabilityConfig()
    out = _study_dir(config, out_dir, "stability")
    writer = _writer(config, out)
    spec = config.basis_spec
    potential = pot.from_config(config.potential)
    rows = []
    for method in study.methods:
        grid = _method_grid(config, study, method)
        dt = study.dt or _cfl_dt(spec, grid, config)
        g = amplification_profile(spec, potential, grid, dt, method)
        peak = int(np.argmax(g))
        rows.append(AmplificationRow(method=method, dx=grid.dx, dt=dt, max_g=float(g[peak]), x_at_max=float(grid.nodes[peak])))
        writer.write(f"amplification_{method.value}.csv", ("x", "g"), zip(grid.nodes, g))
        logger.info("%s: max g = %.12g at x = %.4g (dt=%.4g)", method.value, g[peak], grid.nodes[peak], dt)
    writer.write(
        "amplification_summary.csv",
        ("method", "dx", "dt", "max_g", "x_at_max"),
        ((r.method.value, r.dx, r.dt, r.max_g, r.x_at_max) for r in rows),
    )
    if study.asymmetric_demo:
        grid = GridSpec.from_config(config.grid)
        dt = study.dt or _cfl_dt(BasisSpec(n_basis=study.demo_basis), grid, config)
        demo = asymmetric_demo(study.demo_basis, grid, dt, study.demo_steps)
        writer.write(
            "asymmetric_demo.csv",
            ("step", "t", "norm_asymmetric", "norm_symmetric"),
            ((int(r[0]), r[1], r[2], r[3]) for r in demo),
        )
        logger.info("asymmetric basis: norm grew by %.3g over %d steps", demo[-1, 2] / demo[0, 2], study.demo_steps)
    return rows


# ---------------------------------------------------------------------------
# Eigenvector convergence
# ---------------------------------------------------------------------------

def eigen_report(c: float, K: float, report: EigenReportConfig) -> List[EigenReportRow]:
    """|c_{N_b+2} - c_{N_b}| for the two lowest states over the N_b range."""
    rows = []
    for n_b in range(report.nb_min, report.nb_max + 1, report.step):
        small = solve_eigenstates(c, K, n_b, 2)
        diff = eigen_convergence(c, K, n_b, 2)
        rows.append(EigenReportRow(
            n_b=n_b,
            e0=float(small.energies[0]),
            e1=float(small.energies[1]),
            diff_ground=float(diff[0]),
            diff_excited=float(diff[1]),
        ))
    return rows


def _log10(value: float) -> float:
    return math.log10(value) if value > 0.0 else float("-inf")


def run_eigen_report(config: RunConfig, out_dir: Optional[str] = None) -> List[EigenReportRow]:
    """Eigen-convergence table for the configured c x^2 + K x^4 potential."""
    report = config.eigen_report or EigenReportConfig()
    c, K = pot.quadratic_quartic(pot.from_config(config.potential))
    out = _study_dir(config, out_dir, "eigen")
    writer = _writer(config, out)
    rows = eigen_report(c, K, report)
    writer.write(
        "eigen_convergence.csv",
        ("n_b", "log10_diff_ground", "log10_diff_excited", "diff_ground", "diff_excited", "e0", "e1"),
        ((r.n_b, _log10(r.diff_ground), _log10(r.diff_excited), r.diff_ground, r.diff_excited, r.e0, r.e1) for r in rows),
    )
    last = rows[-1]
    logger.info("N_b=%d: E0=%.6f E1=%.6f", last.n_b, last.e0, last.e1)
    return rows
