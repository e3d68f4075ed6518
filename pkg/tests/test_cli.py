import logging
import math

import numpy as np
import pytest

from wigner_solver.main import main
from wigner_solver.services.run_ledger import RunLedger
from wigner_solver.services.simulation import prepare, run_simulation
from wigner_solver.services.states import solve_eigenstates
from wigner_solver.utils.config_loader import resolve_config

from tests.helpers import read_table


def _column(path, name):
    return np.array([float(row[name]) for row in read_table(path)])


def _first_line(path):
    with open(path, encoding="utf-8") as handle:
        return handle.readline().rstrip("\n")


def test_free_run_writes_results(out_dir, capsys):
    code = main(["run", "--preset", "free", "--out", str(out_dir), "--override", "time.t_end=0.2"])
    assert code == 0
    for name in ("manifest.yaml", "moments.csv", "density.csv", "summary.yaml"):
        assert (out_dir / name).is_file()
    assert not (out_dir / "delta.csv").exists()

    digest = _first_line(out_dir / "manifest.yaml")
    assert digest.startswith("# manifest-hash: ")
    assert _first_line(out_dir / "moments.csv") == digest
    assert _first_line(out_dir / "density.csv") == digest

    mass = _column(out_dir / "moments.csv", "mass")
    assert np.max(np.abs(mass - mass[0])) <= 1e-12 * abs(mass[0])
    assert "Mass drift" in capsys.readouterr().out


def test_free_ground_state_spreads(out_dir):
    assert main(["run", "--preset", "free", "--out", str(out_dir), "--override", "time.t_end=0.5"]) == 0
    spread = _column(out_dir / "moments.csv", "dx")
    assert spread[-1] > spread[0]
    np.testing.assert_allclose(_column(out_dir / "moments.csv", "mean_x"), 0.0, atol=1e-9)


def test_runs_are_byte_identical(tmp_path):
    args = ["run", "--preset", "free", "--override", "time.t_end=0.1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("moments.csv", "density.csv", "manifest.yaml"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_snapshot_times_sharing_a_step_all_get_written(out_dir, caplog):
    args = [
        "run", "--preset", "free", "--out", str(out_dir),
        "--override", "time.t_end=0.2", "--override", "snapshot_times=[0.1999, 0.2]",
    ]
    with caplog.at_level(logging.WARNING, logger="wigner_solver.services.simulation"):
        assert main(args) == 0
    assert (out_dir / "snapshot_t0.1999.csv").is_file()
    assert (out_dir / "snapshot_t0.2000.csv").is_file()
    assert "both fall on step" in caplog.text


def test_final_delta_and_max_error_come_from_the_same_field(out_dir):
    overrides = ["time.t_end=0.1", "grid.dx=0.05", "snapshot_times=[0.1]"]
    summary = run_simulation(resolve_config(preset="harmonic", overrides=overrides), out_dir=str(out_dir))
    error = np.abs(_column(out_dir / "error_t0.1000.csv", "dW"))
    assert summary.final_delta == pytest.approx(math.sqrt(np.mean(error**2)), rel=1e-9)
    assert summary.max_abs_error == pytest.approx(error.max(), rel=1e-9)
    assert summary.deltas[0.1] == pytest.approx(summary.final_delta, rel=1e-9)


def test_dump_operators(out_dir):
    args = ["run", "--preset", "free", "--out", str(out_dir), "--override", "time.t_end=0.05", "--dump-operators"]
    assert main(args) == 0
    rows = read_table(out_dir / "operators" / "A.csv")
    assert len(rows) == 16 * 16
    entry = next(r for r in rows if r["row"] == "0" and r["col"] == "1")
    assert float(entry["value"]) == pytest.approx(math.sqrt(0.5))
    assert (out_dir / "operators" / "M_V.csv").is_file()


def test_bad_override_exits_with_config_code(out_dir, capsys):
    assert main(["run", "--preset", "free", "--out", str(out_dir), "--override", "grid.nxx=3"]) == 2
    assert "grid.nxx" in capsys.readouterr().err


def test_unknown_preset_exits_with_config_code(out_dir):
    assert main(["run", "--preset", "nope", "--out", str(out_dir)]) == 2


def test_cfl_violation_exits_with_numerical_code(out_dir):
    args = ["run", "--preset", "free", "--out", str(out_dir), "--override", "time.dt=0.5", "--override", "time.courant=null"]
    assert main(args) == 3


def test_history_lists_recorded_runs(out_dir, capsys):
    assert main(["run", "--preset", "free", "--out", str(out_dir), "--override", "time.t_end=0.05"]) == 0
    assert main(["run", "--preset", "free", "--out", str(out_dir), "--override", "grid.nxx=3"]) == 2
    records = RunLedger().history()
    assert [r.status for r in records] == ["config_error", "ok"]
    assert records[1].preset == "free"
    assert records[1].n_steps > 0
    capsys.readouterr()

    assert main(["history", "--limit", "5"]) == 0
    out = capsys.readouterr().out
    assert "config_error" in out
    assert len(RunLedger().history()) == 2


def test_history_on_empty_ledger(capsys):
    assert main(["history"]) == 0
    assert "No runs recorded yet." in capsys.readouterr().out


def test_stability_study(out_dir):
    assert main(["stability", "--preset", "stability", "--out", str(out_dir)]) == 0
    summary = {row["method"]: row for row in read_table(out_dir / "amplification_summary.csv")}
    assert float(summary["euler"]["max_g"]) > 1.0
    assert abs(float(summary["euler"]["x_at_max"])) > 3.0
    assert float(summary["euler"]["dx"]) == pytest.approx(0.01)
    assert float(summary["rk4"]["dx"]) == pytest.approx(0.02)
    np.testing.assert_allclose(_column(out_dir / "amplification_cayley.csv", "g"), 1.0, atol=1e-12)

    demo = out_dir / "asymmetric_demo.csv"
    asym = _column(demo, "norm_asymmetric")
    sym = _column(demo, "norm_symmetric")
    assert asym.size == 1001
    assert asym[-1] >= 10.0 * asym[0]
    assert np.all(np.diff(asym) >= -1e-12 * asym[:-1])
    np.testing.assert_allclose(sym / sym[0], 1.0, atol=1e-6)


def test_eigen_report(out_dir, capsys):
    args = ["eigen", "--preset", "anharmonic", "--out", str(out_dir), "--override", "eigen_report.nb_max=40"]
    assert main(args) == 0
    rows = read_table(out_dir / "eigen_convergence.csv")
    assert [int(r["n_b"]) for r in rows] == list(range(4, 41, 2))
    diffs = np.array([float(r["diff_ground"]) for r in rows])
    assert diffs[-1] < 1e-3 * diffs[0]
    assert float(rows[-1]["e0"]) == pytest.approx(0.696175820, rel=1e-5)
    assert float(rows[-1]["e1"]) == pytest.approx(2.324406352, rel=1e-5)
    assert "E0" in capsys.readouterr().out


def test_convergence_needs_an_exact_solution(out_dir):
    args = ["converge", "--preset", "free", "--out", str(out_dir), "--override", "convergence.n_values=[4]"]
    assert main(args) == 2


@pytest.mark.slow
def test_harmonic_cat_state_error_and_period(out_dir):
    assert main(["run", "--preset", "harmonic", "--out", str(out_dir)]) == 0
    final = read_table(out_dir / "delta.csv")[-1]
    error = np.abs(_column(out_dir / "error_t6.2832.csv", "dW"))
    assert 1e-5 <= error.max() <= 1e-3

    experiment = prepare(resolve_config(preset="harmonic"))
    half_period = _column(out_dir / "snapshot_t3.1416.csv", "W").reshape(experiment.grid.nx, -1)
    moved = np.sqrt(np.mean((half_period - experiment.exact_w(0.0)) ** 2))
    assert moved >= 10.0 * float(final["delta"])

    mass = _column(out_dir / "moments.csv", "mass")
    assert abs(mass[-1] - mass[0]) <= 1e-3 * abs(mass[0])


@pytest.mark.slow
def test_second_order_convergence(out_dir):
    assert main(["converge", "--preset", "convergence", "--out", str(out_dir)]) == 0
    slopes = {int(r["n_basis"]): float(r["slope"]) for r in read_table(out_dir / "convergence_slopes.csv")}
    assert slopes[32] == pytest.approx(2.0, abs=0.3)
    finest = next(r for r in read_table(out_dir / "convergence.csv") if r["n_basis"] == "32" and float(r["dx"]) == 0.01)
    assert 1e-6 <= float(finest["delta"]) <= 9e-6


@pytest.mark.slow
def test_double_well_tunneling(out_dir):
    result = solve_eigenstates(-0.4, 0.05, 86, 2)
    assert result.energies[0] == pytest.approx(-0.310, abs=1e-3)
    assert result.energies[1] == pytest.approx(-0.173, abs=1e-3)
    period = 2.0 * math.pi / (result.energies[1] - result.energies[0])
    assert period == pytest.approx(45.9, rel=0.02)

    assert main(["run", "--preset", "double_well", "--out", str(out_dir)]) == 0
    uncertainty = _column(out_dir / "moments.csv", "dxdv")
    cov = _column(out_dir / "moments.csv", "cov")
    assert uncertainty.min() >= 0.5 - 1e-3
    assert np.max(np.abs(cov)) <= 1.0

    # <x> oscillates with E_1 - E_0, so the spreads repeat every half tunneling period
    t = _column(out_dir / "moments.csv", "t")
    half = 0.5 * period
    candidates = np.linspace(0.6 * half, 1.4 * half, 321)
    assert _best_period(t, uncertainty, candidates) == pytest.approx(half, rel=0.02)


def _best_period(t, y, candidates):
    """Candidate period whose two-harmonic least-squares fit leaves the smallest residual."""
    residuals = []
    for p in candidates:
        phase = 2.0 * math.pi * t / p
        basis = np.column_stack([np.ones_like(t), np.cos(phase), np.sin(phase), np.cos(2 * phase), np.sin(2 * phase)])
        _, res, _, _ = np.linalg.lstsq(basis, y, rcond=None)
        residuals.append(float(res[0]) if res.size else 0.0)
    return candidates[int(np.argmin(residuals))]
