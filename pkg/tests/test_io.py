import numpy as np
import pytest

from esp_ewald.data.io import (
    dump_grid,
    dump_kernel,
    load_grid,
    read_key_values,
    read_particles,
    read_result,
    write_key_values,
    write_particles,
    write_result,
)
from esp_ewald.data.systems import GeneratorSpec, ParticleSystem, SystemKind, generate_system
from esp_ewald.errors import GridError, SystemFormatError
from esp_ewald.ewald.solver import EnergyForces
from esp_ewald.gridder.grid import GridData, Space
from esp_ewald.kernels.window import build_window


# ---------------------------------------------------------------------------
# Particle files
# ---------------------------------------------------------------------------


def test_particle_file_round_trip(tmp_path, random_system):
    path = write_particles(random_system, tmp_path / "system.xyz")
    loaded = read_particles(path)
    np.testing.assert_array_equal(loaded.positions, random_system.positions)
    np.testing.assert_array_equal(loaded.charges, random_system.charges)
    np.testing.assert_array_equal(loaded.box, random_system.box)


def test_particle_file_keeps_every_bit(tmp_path):
    rng = np.random.default_rng(11)
    positions = rng.uniform(0.0, 1.0, size=(200, 3)) * 10.0 ** rng.integers(-3, 3, size=(200, 1))
    positions[0] = [0.1 + 0.2, 1.0 / 3.0, 2.0 ** -40]
    charges = np.tile([0.41, -0.41], 100) * (1.0 + 1e-15)
    system = ParticleSystem(positions, charges, 1000.0)
    loaded = read_particles(write_particles(system, tmp_path / "bits.xyz"))
    np.testing.assert_array_equal(loaded.positions, system.positions)
    np.testing.assert_array_equal(loaded.charges, system.charges)


def test_particle_file_layout(tmp_path):
    path = tmp_path / "pair.xyz"
    path.write_text("2\nbox 4 5 6\n1.0 0.5 0.5 0.5\n-1.0 1.5 2.5 3.5\n")
    system = read_particles(path)
    assert system.n == 2
    np.testing.assert_array_equal(system.box, [4.0, 5.0, 6.0])
    np.testing.assert_array_equal(system.positions[1], [1.5, 2.5, 3.5])
    assert system.net_charge == 0.0


def test_particle_file_positions_are_folded(tmp_path):
    path = tmp_path / "outside.xyz"
    path.write_text("2\nbox 10 10 10\n1 11 -1 5\n-1 0 0 0\n")
    np.testing.assert_allclose(read_particles(path).positions[0], [1.0, 9.0, 5.0])


@pytest.mark.parametrize(
    "text",
    [
        "two\nbox 1 1 1\n1 0 0 0\n-1 0.5 0.5 0.5\n",
        "2\nsize 1 1 1\n1 0 0 0\n-1 0.5 0.5 0.5\n",
        "2\nbox 1 x 1\n1 0 0 0\n-1 0.5 0.5 0.5\n",
        "3\nbox 1 1 1\n1 0 0 0\n-1 0.5 0.5 0.5\n",
        "2\nbox 1 1 1\n1 0 0 0\n-1 0.5 0.5\n",
        "2\nbox 1 1 1\n1 0 0 0\n-1 a b c\n",
    ],
)
def test_malformed_particle_file(tmp_path, text):
    path = tmp_path / "bad.xyz"
    path.write_text(text)
    with pytest.raises(SystemFormatError):
        read_particles(path)


def test_missing_particle_file(tmp_path):
    with pytest.raises(OSError):
        read_particles(tmp_path / "missing.xyz")


# ---------------------------------------------------------------------------
# Result sets
# ---------------------------------------------------------------------------


def test_result_set_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    result = EnergyForces(rng.standard_normal(4), rng.standard_normal((4, 3)), -1.25, stats={"E_A": 2e-5})
    write_result(tmp_path / "run", result, {"family": "pswf", "gate": True, "c1": None}, {"fft": 0.5})
    data = read_result(tmp_path / "run")
    np.testing.assert_array_equal(data["potentials"], result.potentials)
    np.testing.assert_array_equal(data["forces"], result.forces)
    assert data["summary"]["energy"] == -1.25
    assert data["summary"]["n"] == 4
    assert data["summary"]["family"] == "pswf"
    assert data["summary"]["gate"] is True
    assert data["summary"]["c1"] is None
    assert data["timings"] == {"fft": 0.5}


def test_key_value_file_skips_comments(tmp_path):
    path = tmp_path / "values.txt"
    path.write_text("# header\n\neps=0.0001\nP=6\n")
    assert read_key_values(path) == {"eps": 1e-4, "P": 6}
    write_key_values({"n_f": "40 40 40"}, path)
    assert read_key_values(path) == {"n_f": "40 40 40"}


# ---------------------------------------------------------------------------
# Grid and kernel dumps
# ---------------------------------------------------------------------------


def test_grid_dump_round_trip(tmp_path):
    values = np.random.default_rng(4).standard_normal((4, 6, 8))
    path = dump_grid(GridData(values), tmp_path / "grid.bin")
    assert path.stat().st_size == 24 + 8 * values.size
    loaded = load_grid(path)
    assert loaded.space is Space.REAL
    np.testing.assert_array_equal(loaded.values, values)


def test_grid_dump_rejects_fourier_data(tmp_path):
    with pytest.raises(GridError):
        dump_grid(GridData(np.zeros((4, 4, 4), dtype=complex), Space.FOURIER), tmp_path / "grid.bin")


def test_truncated_grid_file(tmp_path):
    path = dump_grid(GridData(np.ones((4, 4, 4))), tmp_path / "grid.bin")
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(GridError):
        load_grid(path)
    path.write_bytes(raw[:10])
    with pytest.raises(GridError):
        load_grid(path)


def test_kernel_dump(tmp_path):
    window = build_window("pswf", 5, 0.5, c1=11.0)
    path = dump_kernel(window, tmp_path / "kernels" / "window.txt")
    assert path.read_text().startswith("# window family=pswf P=5")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind, n", [("random", 64), ("rocksalt", 64), ("water-like-lattice", 30)])
def test_generated_systems_are_neutral(kind, n):
    system = generate_system(GeneratorSpec(kind, n, seed=2))
    assert system.n == n
    assert system.is_neutral()
    assert np.all((system.positions >= 0.0) & (system.positions < system.box))


def test_generators_are_reproducible():
    spec = GeneratorSpec("water", 24, seed=5)
    first = generate_system(spec)
    second = generate_system(GeneratorSpec("water", 24, seed=5))
    np.testing.assert_array_equal(first.positions, second.positions)
    other = generate_system(GeneratorSpec("water", 24, seed=6))
    assert not np.array_equal(first.positions, other.positions)


def test_rocksalt_geometry():
    system = generate_system(GeneratorSpec("rocksalt", 64, spacing=1.5))
    np.testing.assert_allclose(system.box, 6.0)
    assert set(np.unique(system.charges)) == {-1.0, 1.0}


def test_water_box_from_requested_length():
    system = generate_system(GeneratorSpec("water", 30, box=6.0))
    np.testing.assert_allclose(system.box, 6.0)
    oxygen = system.positions[0::3]
    hydrogen = system.positions[1::3]
    bond = np.linalg.norm(hydrogen - oxygen, axis=1)
    np.testing.assert_allclose(bond, 0.3226 * 2.0, rtol=1e-12)


@pytest.mark.parametrize("kind, n", [("random", 7), ("rocksalt", 10), ("water-like-lattice", 2), ("random", 0)])
def test_generator_rejects_particle_count(kind, n):
    with pytest.raises(SystemFormatError):
        generate_system(GeneratorSpec(kind, n))


def test_water_lattice_keeps_whole_molecules(caplog):
    with caplog.at_level("WARNING"):
        system = generate_system(GeneratorSpec("water-like-lattice", 50, seed=1))
    assert system.n == 48
    assert system.is_neutral()
    assert "whole molecules" in caplog.text


def test_water_kind_alias():
    assert GeneratorSpec("water", 30).kind is SystemKind.WATER
    assert GeneratorSpec("water", 30).to_dict()["kind"] == "water-like-lattice"


def test_unknown_generator_kind():
    with pytest.raises(SystemFormatError):
        GeneratorSpec("crystal", 8)
    assert GeneratorSpec("rocksalt", 8).kind is SystemKind.ROCKSALT


def test_system_rejects_mismatched_arrays():
    with pytest.raises(SystemFormatError):
        ParticleSystem(np.zeros((3, 3)), np.zeros(2), 1.0)
    with pytest.raises(SystemFormatError):
        ParticleSystem(np.zeros((2, 3)), np.zeros(2), (1.0, 0.0, 1.0))
