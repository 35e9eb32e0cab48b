"""Command implementations: eval, check, bench and table."""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import pandas as pd

from esp_ewald.cli.report import BenchReport, CheckReport, FamilyBench, timing_summary
from esp_ewald.config.settings import MADELUNG_ROCKSALT, OPTIMAL_PARAMETERS, Settings, settings
from esp_ewald.data.io import dump_grid, dump_kernel, read_particles, write_key_values, write_result
from esp_ewald.data.systems import GeneratorSpec, ParticleSystem, SystemKind, generate_system
from esp_ewald.errors import ParameterError
from esp_ewald.ewald.parameters import ParameterOverrides, kernel_table, next_smooth_even, raw_grid_size
from esp_ewald.ewald.plan import EwaldPlan, ForceMethod, build_plan
from esp_ewald.ewald.solver import EnergyForces, evaluate
from esp_ewald.gridder.spreading import spread
from esp_ewald.kernels.split import SplitFamily, bandlimit_frequency, build_split
from esp_ewald.reference.direct import ReferenceResult, direct_ewald
from esp_ewald.reference.metrics import madelung_from_energy, relative_force_error

logger = logging.getLogger(__name__)

# Reference tolerance used for certification
ORACLE_TOL = 1e-9

# Largest system for which bench runs the measured-error inflation policy
MEASURED_LIMIT = 1000

# Inflation steps allowed by the measured-error policy
MAX_MEASURED_STEPS = 40


@dataclass
class RunConfig:
    """Resolved options of one CLI command."""

    command: str
    input_path: Optional[Path] = None
    generator: Optional[GeneratorSpec] = None
    family: str = "pswf"
    eps: float = 1e-4
    r_c: float = 1.0
    overrides: ParameterOverrides = field(default_factory=ParameterOverrides)
    force_method: str = "ad"
    gaussian_order: int = 5
    out_dir: Path = Path("results")
    threads: int = 1
    deterministic: bool = False
    gate: bool = True
    repeats: int = 5
    dump_kernels: bool = False
    dump_grid: bool = False

    @classmethod
    def from_settings(cls, command: str, config: Optional[Settings] = None, **kwargs) -> "RunConfig":
        """Start from environment defaults, then apply explicit options."""
        config = config or settings
        values = {
            "family": config.family,
            "eps": config.eps,
            "r_c": config.r_c,
            "force_method": config.force_method,
            "gaussian_order": config.gaussian_order,
            "out_dir": Path(config.out_dir),
            "threads": config.threads,
            "deterministic": config.deterministic,
            "repeats": config.bench_repeats,
        }
        values.update({key: value for key, value in kwargs.items() if value is not None})
        return cls(command=command, **values)

    def validate(self) -> list[str]:
        """Return a list of option errors."""
        errors = []
        if (self.input_path is None) == (self.generator is None):
            errors.append("Give exactly one of an input file or a generator")
        if self.family not in {f.value for f in SplitFamily}:
            errors.append(f"Unknown family {self.family!r}")
        if self.force_method not in {m.value for m in ForceMethod}:
            errors.append(f"Unknown force method {self.force_method!r}")
        if self.threads < 1:
            errors.append("Thread count must be at least 1")
        if self.repeats < 1:
            errors.append("Repeat count must be at least 1")
        return errors

    def to_dict(self) -> dict:
        entries = {
            "command": self.command,
            "input": str(self.input_path) if self.input_path else None,
            "family": self.family,
            "eps": self.eps,
            "r_c": self.r_c,
            "force_method": self.force_method,
            "threads": self.threads,
            "deterministic": self.deterministic,
            "gate": self.gate,
        }
        if self.generator is not None:
            entries.update({f"generator_{k}": v for k, v in self.generator.to_dict().items()})
        return entries


def load_system(config: RunConfig) -> ParticleSystem:
    if config.input_path is not None:
        return read_particles(config.input_path)
    return generate_system(config.generator)


def plan_for(config: RunConfig, system: ParticleSystem, family: Optional[str] = None, **changes) -> EwaldPlan:
    """Build the plan a config asks for, optionally for another family."""
    overrides = changes.pop("overrides", config.overrides)
    return build_plan(
        system.box,
        family or config.family,
        config.eps,
        config.r_c,
        overrides=overrides,
        force_method=config.force_method,
        gate=changes.pop("gate", config.gate),
        gaussian_order=config.gaussian_order,
    )


def _rocksalt_spacing(system: ParticleSystem) -> float:
    side = round(system.n ** (1.0 / 3.0))
    return float(system.box[0]) / side


def cmd_eval(config: RunConfig) -> EnergyForces:
    """
    Evaluate a system and write potentials, forces and the plan echo.

    Returns:
        EnergyForces of the run
    """
    system = load_system(config)
    plan = plan_for(config, system)
    result = evaluate(plan, system, threads=config.threads, deterministic=config.deterministic)

    summary = {**config.to_dict(), **plan.to_dict()}
    if config.generator is not None and config.generator.kind is SystemKind.ROCKSALT:
        summary["madelung"] = madelung_from_energy(result.energy, system.n, _rocksalt_spacing(system))
        summary["madelung_reference"] = MADELUNG_ROCKSALT

    out = Path(config.out_dir) / "eval"
    write_result(out, result, summary, result.timings)
    if config.dump_kernels:
        dump_kernel(plan.split, out / "split_kernel.txt")
        dump_kernel(plan.window, out / "window_kernel.txt")
    if config.dump_grid:
        dump_grid(spread(system, plan.window, plan.grid, deterministic=True), out / "charge_grid.bin")
    logger.info(f"Energy {result.energy:.12g} for N={system.n}")
    return result


def certify(plan: EwaldPlan, system: ParticleSystem, reference: ReferenceResult, config: RunConfig):
    result = evaluate(plan, system, threads=config.threads, deterministic=config.deterministic)
    delta = relative_force_error(result.forces, reference.forces)
    return result, delta


def cmd_check(config: RunConfig) -> CheckReport:
    """
    Certify a plan against the direct Ewald reference.

    Returns:
        CheckReport with Delta and a PASS/FAIL verdict against eps
    """
    system = load_system(config)
    plan = plan_for(config, system)
    reference = direct_ewald(system, tol=ORACLE_TOL)
    result, delta = certify(plan, system, reference, config)

    report = CheckReport(
        family=plan.family.value,
        eps=config.eps,
        delta=delta,
        passed=delta <= config.eps,
        energy=result.energy,
        reference_energy=reference.energy,
        plan=plan.to_dict(),
    )
    out = Path(config.out_dir) / "check"
    write_result(out / "esp", result, plan.to_dict(), result.timings)
    write_result(out / "reference", reference)
    write_key_values({**config.to_dict(), **report.to_dict()}, out / "report.txt")
    logger.info(f"Check {report.verdict}: delta={delta:.3e}, eps={config.eps:g}")
    return report


def _repeat_timings(plan: EwaldPlan, system: ParticleSystem, config: RunConfig) -> pd.DataFrame:
    runs = []
    for _ in range(config.repeats):
        runs.append(evaluate(plan, system, threads=config.threads, deterministic=config.deterministic).timings)
    return timing_summary(runs)


def measured_grid(
    config: RunConfig,
    system: ParticleSystem,
    family: str,
    reference: ReferenceResult,
) -> tuple[tuple[int, int, int], float]:
    """
    Smallest grid whose measured Delta meets eps, starting from the formula size.

    Returns:
        Tuple of (n_f, Delta at n_f)
    """
    split = build_split(family, config.eps, config.r_c)
    n = tuple(next_smooth_even(v) for v in raw_grid_size(family, split.shape, system.box, config.r_c))
    for _ in range(MAX_MEASURED_STEPS):
        overrides = replace(config.overrides, n_f=n)
        plan = plan_for(config, system, family, overrides=overrides, gate=False)
        _, delta = certify(plan, system, reference, config)
        logger.debug(f"Measured policy {family}: n_f={n}, delta={delta:.3e}")
        if delta <= config.eps:
            return n, delta
        n = tuple(next_smooth_even(v + 1) for v in n)
    raise ParameterError(f"Measured error of {family} never reached eps={config.eps} within {MAX_MEASURED_STEPS} steps")


def cmd_bench(config: RunConfig) -> BenchReport:
    """
    Compare the prolate plan with the Gaussian default plan at equal eps and r_c.

    Both plans are inflated until their potential and force aliasing
    estimates meet eps. Systems up to MEASURED_LIMIT particles also run the
    measured-error policy, which grows each grid until Delta against the
    reference meets eps.
    """
    system = load_system(config)
    config = replace(config, overrides=replace(config.overrides, n_f=None))
    reference = direct_ewald(system, tol=ORACLE_TOL) if system.n <= MEASURED_LIMIT else None

    benches = {}
    for family in (SplitFamily.PSWF.value, SplitFamily.GAUSSIAN.value):
        plan = plan_for(config, system, family)
        timings = _repeat_timings(plan, system, config)
        measured, delta = (None, None)
        if reference is not None:
            measured, delta = measured_grid(config, system, family, reference)
        benches[family] = FamilyBench(
            family=family,
            P=plan.P,
            raw_n_f=plan.parameters.raw_n_f,
            gated_n_f=plan.parameters.n_f,
            measured_n_f=measured,
            timings=timings,
            delta=delta,
        )

    report = BenchReport(
        eps=config.eps,
        r_c=config.r_c,
        n=system.n,
        pswf=benches["pswf"],
        gaussian=benches["gaussian"],
        repeats=config.repeats,
    )
    out = Path(config.out_dir) / "bench"
    write_key_values({**config.to_dict(), **report.to_dict()}, out / "bench.txt")
    report.timings_frame().to_csv(out / "timings.csv", index=False)
    logger.info(f"Bench eps={config.eps:g}: R={report.ratio:.2f}")
    return report


def bandlimit_comparison(eps: float, r_c: float = 1.0) -> dict:
    """Frequencies where the two splitting transforms fall to eps, and the implied grid volume ratio."""
    pswf = bandlimit_frequency(build_split(SplitFamily.PSWF, eps, r_c))
    gaussian = bandlimit_frequency(build_split(SplitFamily.GAUSSIAN, eps, r_c))
    return {
        "eps": eps,
        "omega_pswf": pswf,
        "omega_gaussian": gaussian,
        "volume_ratio": (gaussian / pswf) ** 3,
    }


def cmd_table(config: RunConfig) -> pd.DataFrame:
    """Write the shape and order table and the bandlimit comparison."""
    table = pd.DataFrame(kernel_table(sorted(OPTIMAL_PARAMETERS, reverse=True)))
    table["R_published"] = [OPTIMAL_PARAMETERS[eps][3] for eps in table["eps"]]
    comparison = bandlimit_comparison(config.eps, config.r_c)

    out = Path(config.out_dir) / "table"
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "parameters.csv", index=False, float_format="%.6g")
    write_key_values(comparison, out / "bandlimit.txt")
    logger.info(
        f"Bandlimit at eps={config.eps:g}: PSWF {comparison['omega_pswf']:.3f}, "
        f"Gaussian {comparison['omega_gaussian']:.3f}, volume ratio {comparison['volume_ratio']:.2f}"
    )
    return table
