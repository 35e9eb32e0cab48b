"""Benchmark and certification reports."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def grid_ratio(numerator, denominator) -> float:
    """Ratio of total Fourier modes N_f between two grid sizes."""
    return float(np.prod(numerator)) / float(np.prod(denominator))


def timing_summary(runs: list[dict]) -> pd.DataFrame:
    """
    Aggregate per-stage timings of repeated evaluations.

    Args:
        runs: One timings dict per repetition

    Returns:
        DataFrame indexed by stage with mean, min and std columns
    """
    frame = pd.DataFrame(runs)
    summary = frame.agg(["mean", "min", "std"]).T
    summary.index.name = "stage"
    return summary.fillna(0.0)


@dataclass
class CheckReport:
    """Accuracy certification of one plan against the reference sum."""

    family: str
    eps: float
    delta: float
    passed: bool
    energy: float
    reference_energy: float
    plan: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        entries = {
            "verdict": self.verdict,
            "delta": self.delta,
            "eps": self.eps,
            "energy": self.energy,
            "reference_energy": self.reference_energy,
        }
        entries.update({f"plan_{key}": value for key, value in self.plan.items()})
        return entries


@dataclass
class FamilyBench:
    """Benchmark outcome for one family."""

    family: str
    P: int
    raw_n_f: tuple[int, int, int]
    gated_n_f: tuple[int, int, int]
    measured_n_f: Optional[tuple[int, int, int]]
    timings: pd.DataFrame
    delta: Optional[float] = None

    @property
    def total_modes(self) -> int:
        return int(np.prod(self.gated_n_f))

    def to_dict(self) -> dict:
        prefix = self.family
        entries = {
            f"{prefix}_P": self.P,
            f"{prefix}_raw_n_f": " ".join(map(str, self.raw_n_f)),
            f"{prefix}_n_f": " ".join(map(str, self.gated_n_f)),
            f"{prefix}_N_f": self.total_modes,
            f"{prefix}_measured_n_f": " ".join(map(str, self.measured_n_f)) if self.measured_n_f else None,
            f"{prefix}_delta": self.delta,
        }
        for stage, row in self.timings.iterrows():
            entries[f"{prefix}_time_{stage}_mean"] = float(row["mean"])
            entries[f"{prefix}_time_{stage}_min"] = float(row["min"])
        return entries


@dataclass
class BenchReport:
    """Grid reduction and timings of the prolate method against the Gaussian baseline."""

    eps: float
    r_c: float
    n: int
    pswf: FamilyBench
    gaussian: FamilyBench
    repeats: int

    @property
    def ratio(self) -> float:
        """R = N_f(Gaussian default) / N_f(PSWF) under the aliasing gate."""
        return grid_ratio(self.gaussian.gated_n_f, self.pswf.gated_n_f)

    @property
    def measured_ratio(self) -> Optional[float]:
        """R under the measured-error inflation policy, when it ran."""
        if self.pswf.measured_n_f is None or self.gaussian.measured_n_f is None:
            return None
        return grid_ratio(self.gaussian.measured_n_f, self.pswf.measured_n_f)

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        entries = {
            "eps": self.eps,
            "r_c": self.r_c,
            "n": self.n,
            "repeats": self.repeats,
            "R": self.ratio,
            "R_measured": self.measured_ratio,
        }
        entries.update(self.pswf.to_dict())
        entries.update(self.gaussian.to_dict())
        return entries

    def timings_frame(self) -> pd.DataFrame:
        """Both families' stage timings in one long table."""
        frames = []
        for bench in (self.pswf, self.gaussian):
            frame = bench.timings.reset_index()
            frame.insert(0, "family", bench.family)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def format(self) -> str:
        lines = [
            "=" * 60,
            f"BENCH eps={self.eps:g}, r_c={self.r_c}, N={self.n}",
            "=" * 60,
            f"  PSWF:     P={self.pswf.P}, n_f={self.pswf.gated_n_f} (raw {self.pswf.raw_n_f})",
            f"  Gaussian: P={self.gaussian.P}, n_f={self.gaussian.gated_n_f} (raw {self.gaussian.raw_n_f})",
            f"  R = {self.ratio:.2f}",
        ]
        if self.measured_ratio is not None:
            lines.append(f"  R (measured-error policy) = {self.measured_ratio:.2f}")
        for bench in (self.pswf, self.gaussian):
            if "fft" in bench.timings.index:
                lines.append(f"  {bench.family} fft stage: mean {bench.timings.loc['fft', 'mean'] * 1e3:.2f} ms")
        return "\n".join(lines)
