"""
One configured experiment: build the operators, evolve the initial state
and write the manifest, time series, snapshots and error fields.
"""

import logging
import math
import time
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import yaml

from wigner_solver.config import get_settings
from wigner_solver.errors import ConfigError, OutputError
from wigner_solver.models.schemas import EigenSource, MomentReport, PolynomialPotential, RunConfig, RunSummary
from wigner_solver.services import potential as pot
from wigner_solver.services.dynamics import CoefficientField, GridSpec, OperatorSet, StepPlan, build_operator_set, evolve
from wigner_solver.services.observables import density, error_field, mass, moments, reconstruct
from wigner_solver.services.operators import advection_operator, moment_matrix, pseudo_diff_matrix
from wigner_solver.services.states import WaveState, initial_coefficients, state_from_config, wave_density, wigner_transform_grid
from wigner_solver.utils.config_loader import manifest_hash, write_manifest
from wigner_solver.utils.csv_writer import CsvWriter

logger = logging.getLogger(__name__)

DEFAULT_OBSERVATIONS = 500
DUMPED_MOMENT_MATRICES = 4


@dataclass
class Experiment:
    """Everything assembled from a RunConfig before the first step."""
    config: RunConfig
    potential: PolynomialPotential
    grid: GridSpec
    plan: StepPlan
    ops: OperatorSet
    state: WaveState
    initial: CoefficientField
    has_oracle: bool

    @property
    def t_end(self) -> float:
        return self.config.time.t_end

    def exact_w(self, t: float) -> np.ndarray:
        """Exact W(t) on the x grid in both x and v."""
        x = self.grid.nodes
        return wigner_transform_grid(self.state, t, x, x, self.config.epsilon)


def _has_oracle(config: RunConfig, potential: PolynomialPotential) -> bool:
    """The state evolves exactly when its energies belong to the simulated Hamiltonian."""
    if config.epsilon != 1.0 or config.b_strength != 1.0:
        return False
    if config.initial_state.source == EigenSource.NUMERICAL:
        return True
    try:
        return pot.quadratic_quartic(potential) == (0.5, 0.0)
    except ConfigError:
        return False


def prepare(config: RunConfig) -> Experiment:
    """Assemble potential, grid, step plan, operators and the initial field."""
    settings = get_settings()
    potential = pot.from_config(config.potential)
    grid = GridSpec.from_config(config.grid)
    spec = config.basis_spec
    advection = advection_operator(spec.n_basis)
    plan = StepPlan.from_speed(
        advection.max_speed,
        grid.dx,
        config.time.t_end,
        scheme=config.scheme,
        splitting=config.splitting,
        courant=config.time.courant if config.time.courant is not None else settings.default_courant,
        dt=config.time.dt,
    )
    ops = build_operator_set(spec, potential, grid, plan.dt, config.forcing_method)
    state = state_from_config(config)
    initial = initial_coefficients(state, spec, grid)
    logger.info(
        "prepared '%s': N=%d nx=%d dx=%.6g dt=%.6g steps=%d courant=%.4f",
        config.name, spec.n_basis, grid.nx, grid.dx, plan.dt, plan.n_steps, plan.courant,
    )
    return Experiment(
        config=config,
        potential=potential,
        grid=grid,
        plan=plan,
        ops=ops,
        state=state,
        initial=initial,
        has_oracle=_has_oracle(config, potential),
    )


def final_error_field(experiment: Experiment, final: CoefficientField) -> np.ndarray:
    """W - W_exact at t_end on the x grid in both x and v."""
    if not experiment.has_oracle:
        raise ConfigError("no exact solution is available for this configuration", key="initial_state")
    snapshot = reconstruct(final, experiment.grid.nodes, experiment.t_end)
    return error_field(snapshot, experiment.exact_w(experiment.t_end))


def final_delta(experiment: Experiment, final: CoefficientField) -> float:
    """Delta between the evolved field and the exact W at t_end."""
    diff = final_error_field(experiment, final)
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass
class _Recorder:
    """Observer collecting time series and writing snapshots as the run goes."""
    experiment: Experiment
    writer: CsvWriter
    snapshot_steps: Dict[int, List[float]]
    reports: List[MomentReport] = dataclass_field(default_factory=list)
    density_rows: list = dataclass_field(default_factory=list)
    deltas: Dict[float, float] = dataclass_field(default_factory=dict)
    max_abs_error: Optional[float] = None

    def __call__(self, t: float, field: CoefficientField) -> None:
        exp = self.experiment
        self.reports.append(moments(field, exp.ops, t))
        rho = density(field, exp.ops.integrals)
        x = exp.grid.nodes
        if exp.has_oracle:
            rho_psi = wave_density(exp.state, x, t)
            self.density_rows.extend(zip([t] * x.size, x, rho, rho_psi))
        else:
            self.density_rows.extend(zip([t] * x.size, x, rho))
        step = int(round(t / exp.plan.dt)) if exp.plan.n_steps else 0
        for requested in self.snapshot_steps.get(step, ()):
            self._snapshot(requested, t, field)

    def _snapshot(self, requested: float, t: float, field: CoefficientField) -> None:
        exp = self.experiment
        label = f"{requested:.4f}"
        snapshot = reconstruct(field, exp.grid.nodes, t)
        self.writer.write_grid(f"snapshot_t{label}.csv", snapshot.x_grid, snapshot.v_grid, snapshot.w)
        if exp.has_oracle:
            diff = error_field(snapshot, exp.exact_w(t))
            self.writer.write_grid(f"error_t{label}.csv", snapshot.x_grid, snapshot.v_grid, diff, column="dW")
            self.deltas[requested] = float(np.sqrt(np.mean(diff * diff)))
            logger.info("t=%.4f: delta=%.3e max|dW|=%.3e", t, self.deltas[requested], float(np.max(np.abs(diff))))


def _observation_every(config: RunConfig, plan: StepPlan) -> int:
    if config.time.observe_interval is not None:
        return max(1, int(round(config.time.observe_interval / plan.dt)))
    return max(1, plan.n_steps // DEFAULT_OBSERVATIONS)


def dump_operator_matrices(experiment: Experiment, writer: CsvWriter) -> None:
    """A, M_0..M_3 and M_V at the grid centre as row,col,value tables."""
    n = experiment.ops.spec.n_basis
    writer.write_matrix("operators/A.csv", experiment.ops.advection.a_matrix)
    for k in range(DUMPED_MOMENT_MATRICES):
        writer.write_matrix(f"operators/M_{k}.csv", moment_matrix(k, n))
    centre = 0.5 * (experiment.grid.x_min + experiment.grid.x_max)
    writer.write_matrix("operators/M_V.csv", pseudo_diff_matrix(experiment.ops.spec, experiment.potential, centre))


def run_simulation(config: RunConfig, out_dir: Optional[str] = None, dump_operators: bool = False) -> RunSummary:
    """
    Run one experiment and write its results.

    Args:
        config: Validated run configuration
        out_dir: Output directory; defaults to config.output_dir or <settings.output_dir>/<name>
        dump_operators: Also write the operator matrices under operators/

    Returns:
        RunSummary with step count, mass drift, Delta values and written files
    """
    started = time.perf_counter()
    settings = get_settings()
    out = Path(out_dir or config.output_dir or Path(settings.output_dir) / config.name)
    digest = manifest_hash(config)
    manifest = write_manifest(config, out)
    writer = CsvWriter(out, digest)

    experiment = prepare(config)
    if dump_operators:
        dump_operator_matrices(experiment, writer)

    plan = experiment.plan
    snapshot_steps: Dict[int, List[float]] = {}
    for t in config.snapshot_times:
        step = int(round(t / plan.dt)) if plan.n_steps else 0
        if step in snapshot_steps:
            logger.warning(
                "snapshot times %s and %.6g both fall on step %d (t=%.6g)",
                ", ".join(f"{s:.6g}" for s in snapshot_steps[step]), t, step, step * plan.dt,
            )
        snapshot_steps.setdefault(step, []).append(t)
    recorder = _Recorder(experiment=experiment, writer=writer, snapshot_steps=snapshot_steps)

    final = evolve(
        experiment.initial,
        experiment.ops,
        plan,
        config.time.t_end,
        observers=[recorder],
        every=_observation_every(config, plan),
        nan_check_every=settings.nan_check_every,
        extra_steps=snapshot_steps.keys(),
    )

    writer.write(
        "moments.csv",
        ("t", "mean_x", "mean_v", "dx", "dv", "dxdv", "cov", "mass"),
        (
            (r.time, r.mean_x, r.mean_v, math.sqrt(r.var_x), math.sqrt(r.var_v), r.uncertainty, r.normalized_cov, r.mass)
            for r in recorder.reports
        ),
    )
    header = ("t", "x", "rho", "rho_psi") if experiment.has_oracle else ("t", "x", "rho")
    writer.write("density.csv", header, recorder.density_rows)

    delta = None
    max_abs_error = None
    if experiment.has_oracle:
        diff = final_error_field(experiment, final)
        delta = float(np.sqrt(np.mean(diff * diff)))
        max_abs_error = float(np.max(np.abs(diff)))
        recorder.deltas.setdefault(config.time.t_end, delta)
        writer.write("delta.csv", ("t", "delta"), sorted(recorder.deltas.items()))

    m0 = mass(experiment.initial, experiment.ops.integrals)
    m1 = mass(final, experiment.ops.integrals)
    wall_clock = time.perf_counter() - started
    summary = RunSummary(
        name=config.name,
        success=True,
        n_steps=plan.n_steps,
        dt=plan.dt,
        courant=plan.courant,
        mass_drift=abs(m1 - m0) / abs(m0) if m0 else abs(m1 - m0),
        final_delta=delta,
        max_abs_error=max_abs_error,
        deltas=recorder.deltas,
        wall_clock_s=wall_clock,
        manifest_hash=digest,
        files=[str(manifest)] + writer.written,
    )
    _write_summary(summary, out)
    logger.info("run '%s' finished in %.2f s", config.name, wall_clock)
    return summary


def _write_summary(summary: RunSummary, out: Path) -> None:
    path = out / "summary.yaml"
    try:
        path.write_text(yaml.safe_dump(summary.model_dump(mode="json"), sort_keys=False), encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    summary.files.append(str(path))
