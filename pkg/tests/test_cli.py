import logging

import pandas as pd
import pytest

from esp_ewald.cli.commands import RunConfig, bandlimit_comparison
from esp_ewald.cli.report import grid_ratio
from esp_ewald.config.settings import MADELUNG_ROCKSALT, OPTIMAL_PARAMETERS
from esp_ewald.data.io import read_key_values, read_result, write_particles
from esp_ewald.data.systems import GeneratorSpec, generate_system
from esp_ewald.ewald.plan import build_plan
from esp_ewald.main import EXIT_IO, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, build_parser, main


@pytest.fixture(autouse=True)
def restore_logging():
    """main() reconfigures the root logger; put it back after each test."""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def test_table(tmp_path):
    assert main(["table", "--out", str(tmp_path)]) == EXIT_OK
    table = pd.read_csv(tmp_path / "table" / "parameters.csv")
    assert list(table["P_esp"]) == [5, 5, 6, 7, 8]
    bandlimit = read_key_values(tmp_path / "table" / "bandlimit.txt")
    assert bandlimit["volume_ratio"] > 1.0


def test_bandlimit_comparison_volume_ratio():
    comparison = bandlimit_comparison(1e-4)
    assert comparison["omega_gaussian"] > comparison["omega_pswf"]
    assert comparison["volume_ratio"] == pytest.approx(
        (comparison["omega_gaussian"] / comparison["omega_pswf"]) ** 3
    )


def test_eval_rocksalt_madelung(tmp_path):
    code = main([
        "eval", "--generate", "rocksalt", "--n", "8", "--rc", "0.9", "--eps", "1e-5",
        "--out", str(tmp_path), "--dump-kernels", "--dump-grid",
    ])
    assert code == EXIT_OK
    out = tmp_path / "eval"
    summary = read_result(out)["summary"]
    assert summary["madelung"] == pytest.approx(MADELUNG_ROCKSALT, abs=1e-4)
    assert summary["family"] == "pswf"
    assert (out / "split_kernel.txt").exists()
    assert (out / "window_kernel.txt").exists()
    assert (out / "charge_grid.bin").exists()


def test_eval_from_particle_file(tmp_path):
    system = generate_system(GeneratorSpec("random", 20, box=6.0, seed=8))
    path = write_particles(system, tmp_path / "system.xyz")
    code = main([
        "eval", "--input", str(path), "--rc", "1.5", "--eps", "1e-3", "--force-method", "ik",
        "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    data = read_result(tmp_path / "eval")
    assert data["potentials"].shape == (20,)
    assert data["summary"]["force_method"] == "ik"


def test_check_passes_with_gated_plan(tmp_path, capsys):
    code = main([
        "check", "--generate", "random", "--n", "20", "--box", "6", "--rc", "1.5", "--eps", "1e-3",
        "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    assert "CHECK PASS" in capsys.readouterr().out
    report = read_key_values(tmp_path / "check" / "report.txt")
    assert report["verdict"] == "PASS"
    assert report["delta"] <= 1e-3
    assert (tmp_path / "check" / "reference" / "forces.txt").exists()


def test_check_fails_on_under_resolved_grid(tmp_path):
    code = main([
        "check", "--generate", "random", "--n", "20", "--box", "6", "--rc", "1.5", "--eps", "1e-3",
        "--nf", "6", "--no-gate", "--out", str(tmp_path),
    ])
    assert code == EXIT_NUMERICAL
    assert read_key_values(tmp_path / "check" / "report.txt")["verdict"] == "FAIL"


def test_gated_plan_refuses_small_override(tmp_path):
    code = main([
        "eval", "--generate", "random", "--n", "20", "--box", "6", "--rc", "1.5", "--eps", "1e-3",
        "--nf", "6", "--out", str(tmp_path),
    ])
    assert code == EXIT_NUMERICAL


def test_missing_system_is_a_usage_error(tmp_path):
    assert main(["eval", "--out", str(tmp_path)]) == EXIT_USAGE


def test_bad_generator_count_is_a_system_error(tmp_path):
    assert main(["eval", "--generate", "rocksalt", "--n", "10", "--out", str(tmp_path)]) == EXIT_IO


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as excinfo:
        main(["simulate"])
    assert excinfo.value.code == EXIT_USAGE


def test_missing_input_file(tmp_path):
    assert main(["eval", "--input", str(tmp_path / "missing.xyz"), "--out", str(tmp_path)]) == EXIT_IO


def test_parser_collects_overrides():
    args = build_parser().parse_args(["bench", "--generate", "water", "--n", "30", "-P", "7", "--c1", "11", "--repeats", "2"])
    assert args.order == 7
    assert args.c1 == 11.0
    assert args.repeats == 2


def test_run_config_needs_exactly_one_source(tmp_path):
    both = RunConfig(command="eval", input_path=tmp_path / "x", generator=GeneratorSpec("random", 4))
    assert both.validate()
    neither = RunConfig(command="eval")
    assert neither.validate()
    assert RunConfig(command="eval", generator=GeneratorSpec("random", 4)).validate() == []


@pytest.mark.slow
def test_bench_writes_report(tmp_path):
    code = main([
        "bench", "--generate", "random", "--n", "40", "--box", "6", "--rc", "1.5", "--eps", "1e-3",
        "--repeats", "2", "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    report = read_key_values(tmp_path / "bench" / "bench.txt")
    assert report["R"] > 1.0
    assert report["R_measured"] is not None
    timings = pd.read_csv(tmp_path / "bench" / "timings.csv")
    assert set(timings["family"]) == {"pswf", "gaussian"}


def test_same_family_grid_ratio_is_one():
    first = build_plan(10.0, "pswf", 1e-3, 2.0)
    second = build_plan(10.0, "pswf", 1e-3, 2.0)
    assert grid_ratio(first.grid.n, second.grid.n) == 1.0
    assert grid_ratio((40, 40, 40), (20, 20, 20)) == 8.0


@pytest.mark.slow
@pytest.mark.parametrize("eps", [1e-4, 1e-5])
def test_bench_ratio_near_published_default(tmp_path, eps):
    code = main([
        "bench", "--generate", "random", "--n", "512", "--box", "10", "--rc", "1", "--eps", str(eps),
        "--repeats", "1", "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    report = read_key_values(tmp_path / "bench" / "bench.txt")
    published = OPTIMAL_PARAMETERS[eps][3]
    assert 0.75 * published <= report["R_measured"] <= 1.25 * published
    assert report["R"] > 1.0


@pytest.mark.slow
def test_bench_large_water_lattice_favours_prolate_grid(tmp_path):
    code = main([
        "bench", "--generate", "water-like-lattice", "--n", "50000", "--rc", "1", "--eps", "1e-4",
        "--repeats", "3", "--out", str(tmp_path),
    ])
    assert code == EXIT_OK
    report = read_key_values(tmp_path / "bench" / "bench.txt")
    assert report["n"] == 49998
    assert report["R"] >= 3.0
    assert report["R_measured"] is None
    assert report["pswf_time_fft_mean"] < report["gaussian_time_fft_mean"]
