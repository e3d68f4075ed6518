import math

import pytest
import yaml

from wigner_solver.errors import ConfigError
from wigner_solver.models.schemas import EigenSource, ForcingMethod, PotentialKind, StreamScheme
from wigner_solver.utils.config_loader import (
    apply_overrides,
    available_presets,
    dump_config,
    load_config,
    manifest_hash,
    resolve_config,
    validate_config,
    write_manifest,
)


def _write(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_presets_all_validate():
    names = available_presets()
    assert {"harmonic", "anharmonic", "double_well", "convergence", "stability", "free"} <= set(names)
    for name in names:
        resolve_config(preset=name)


def test_harmonic_preset_values():
    config = resolve_config(preset="harmonic")
    assert config.potential.kind == PotentialKind.HARMONIC
    assert config.n_basis == 16
    assert config.grid.resolved_nx == 350
    assert config.time.t_end == pytest.approx(2.0 * math.pi)
    assert config.scheme == StreamScheme.LAX_WENDROFF
    assert config.forcing_method == ForcingMethod.CAYLEY
    assert config.initial_state.source == EigenSource.HARMONIC
    weights = [w for _, w in config.initial_state.components]
    assert weights == pytest.approx([1.0 / math.sqrt(2.0)] * 2)


def test_missing_potential_names_the_key(tmp_path):
    path = _write(tmp_path, "name: broken\nn_basis: 8\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.key == "potential"


def test_unknown_key_reports_its_line(tmp_path):
    path = _write(tmp_path, "name: typo\npotential:\n  kind: harmonic\ngrid:\n  dx: 0.1\n  nxx: 12\n")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.key == "grid.nxx"
    assert info.value.line == 6
    assert info.value.exit_code == 2


def test_invalid_yaml_is_a_config_error(tmp_path):
    path = _write(tmp_path, "potential: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_overrides_apply_before_validation():
    config = resolve_config(preset="harmonic", overrides=["grid.dx=0.05", "n_basis=8", "time.courant=0.5"])
    assert config.grid.dx == 0.05
    assert config.n_basis == 8
    assert config.time.courant == 0.5


def test_override_creates_missing_sections():
    data = apply_overrides({}, ["potential.kind=free", "stability.resolution.euler=100"])
    assert data == {"potential": {"kind": "free"}, "stability": {"resolution": {"euler": 100}}}


def test_override_without_equals_is_rejected():
    with pytest.raises(ConfigError):
        apply_overrides({}, ["n_basis"])


def test_config_and_preset_are_exclusive(tmp_path):
    with pytest.raises(ConfigError):
        resolve_config(str(_write(tmp_path, "potential:\n  kind: free\n")), "harmonic")
    with pytest.raises(ConfigError):
        resolve_config()
    with pytest.raises(ConfigError):
        resolve_config(preset="no_such_preset")


def test_non_unitary_forcing_needs_opt_in():
    base = {"potential": {"kind": "harmonic"}, "forcing_method": "euler"}
    with pytest.raises(ConfigError):
        validate_config(base)
    assert validate_config({**base, "allow_unsafe_forcing": True}).forcing_method == ForcingMethod.EULER


def test_snapshot_outside_run_is_rejected():
    with pytest.raises(ConfigError):
        validate_config({"potential": {"kind": "harmonic"}, "time": {"t_end": 1.0}, "snapshot_times": [2.0]})


def test_grid_needs_exactly_one_resolution():
    with pytest.raises(ConfigError):
        validate_config({"potential": {"kind": "free"}, "grid": {"dx": 0.1, "nx": 20}})
    with pytest.raises(ConfigError):
        validate_config({"potential": {"kind": "free"}, "grid": {"x_min": 1.0, "x_max": -1.0, "dx": 0.1}})


def test_numerical_source_bounded_by_eigen_basis():
    data = {
        "potential": {"kind": "anharmonic", "c": 0.5, "K": 0.5},
        "n_eigen_basis": 4,
        "initial_state": {"components": [[4, 1.0]], "source": "numerical"},
    }
    with pytest.raises(ConfigError):
        validate_config(data)


def test_duplicate_components_are_rejected():
    with pytest.raises(ConfigError):
        validate_config({"potential": {"kind": "harmonic"}, "initial_state": {"components": [[0, 1.0], [0, 2.0]]}})


def test_raw_potential_terms():
    config = validate_config({"potential": {"kind": "raw", "terms": [[2, 0.5], [4, 0.1]]}})
    assert config.potential.terms == [(2, 0.5), (4, 0.1)]
    with pytest.raises(ConfigError):
        validate_config({"potential": {"kind": "raw", "terms": [[12, 1.0]]}})


def test_manifest_round_trip(tmp_path):
    config = resolve_config(preset="double_well")
    path = write_manifest(config, tmp_path / "m")
    first_line = path.read_text(encoding="utf-8").splitlines()[0]
    assert first_line == f"# manifest-hash: {manifest_hash(config)}"
    reloaded = load_config(path)
    assert reloaded.model_dump() == config.model_dump()
    assert manifest_hash(reloaded) == manifest_hash(config)


def test_manifest_hash_tracks_content():
    config = resolve_config(preset="harmonic")
    same = resolve_config(preset="harmonic")
    changed = resolve_config(preset="harmonic", overrides=["n_basis=18"])
    assert manifest_hash(config) == manifest_hash(same)
    assert manifest_hash(config) != manifest_hash(changed)
    assert len(manifest_hash(config)) == 64


def test_dump_config_is_plain_yaml():
    config = resolve_config(preset="stability")
    data = yaml.safe_load(dump_config(config))
    assert data["stability"]["resolution"] == {"euler": 100.0, "rk4": 50.0}
    assert data["potential"]["kind"] == "anharmonic"
