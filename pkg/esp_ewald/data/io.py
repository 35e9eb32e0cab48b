"""File formats: particle files, result sets, binary grid dumps and kernel dumps."""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from esp_ewald.data.systems import ParticleSystem
from esp_ewald.errors import GridError, SystemFormatError
from esp_ewald.gridder.grid import GridData, Space

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

POTENTIALS_FILE = "potentials.txt"
FORCES_FILE = "forces.txt"
SUMMARY_FILE = "summary.txt"
TIMINGS_FILE = "timings.txt"


# ---------------------------------------------------------------------------
# Particle files: "N", "box Lx Ly Lz", then one "q x y z" line per particle
# ---------------------------------------------------------------------------


def read_particles(path: PathLike) -> ParticleSystem:
    """
    Read an extended-XYZ-style particle file.

    Raises:
        SystemFormatError: malformed header or particle lines
        OSError: unreadable file
    """
    path = Path(path)
    with path.open() as handle:
        header = handle.readline().split()
        box_line = handle.readline().split()
    try:
        count = int(header[0])
    except (IndexError, ValueError) as e:
        raise SystemFormatError(f"{path}: first line must hold the particle count") from e
    if len(box_line) != 4 or box_line[0].lower() != "box":
        raise SystemFormatError(f"{path}: second line must read 'box Lx Ly Lz'")
    try:
        box = [float(v) for v in box_line[1:]]
    except ValueError as e:
        raise SystemFormatError(f"{path}: invalid box lengths {box_line[1:]}") from e

    try:
        table = pd.read_csv(
            path, sep=r"\s+", skiprows=2, header=None, names=["q", "x", "y", "z"],
            comment="#", dtype=float, float_precision="round_trip",
        )
    except pd.errors.EmptyDataError:
        table = pd.DataFrame(columns=["q", "x", "y", "z"], dtype=float)
    except ValueError as e:
        raise SystemFormatError(f"{path}: malformed particle line ({e})") from e

    if len(table) != count or table.isna().any().any():
        raise SystemFormatError(f"{path}: expected {count} complete particle lines, found {len(table)}")
    logger.debug(f"Read {count} particles from {path}")
    return ParticleSystem(table[["x", "y", "z"]].to_numpy(), table["q"].to_numpy(), box)


def write_particles(system: ParticleSystem, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = pd.DataFrame({
        "q": system.charges,
        "x": system.positions[:, 0],
        "y": system.positions[:, 1],
        "z": system.positions[:, 2],
    })
    with path.open("w") as handle:
        handle.write(f"{system.n}\n")
        handle.write("box " + " ".join(f"{v:.17g}" for v in system.box) + "\n")
        table.to_csv(handle, sep=" ", header=False, index=False, float_format="%.17g")
    return path


# ---------------------------------------------------------------------------
# Result sets
# ---------------------------------------------------------------------------


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return {"none": None, "true": True, "false": False}.get(text, text)


def write_key_values(values: dict, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{key}={_format_value(value)}\n" for key, value in values.items()))
    return path


def read_key_values(path: PathLike) -> dict:
    values = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        key, _, text = line.partition("=")
        values[key.strip()] = _parse_value(text.strip())
    return values


def write_result(
    directory: PathLike,
    result,
    summary: Optional[dict] = None,
    timings: Optional[dict] = None,
) -> Path:
    """
    Write potentials, forces, a key=value summary and timings.

    Args:
        directory: Output directory (created if missing)
        result: Object with potentials, forces and energy (EnergyForces or ReferenceResult)
        summary: Extra key=value entries, such as the plan echo
        timings: Stage timings; written to a separate file

    Returns:
        The output directory
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    np.savetxt(directory / POTENTIALS_FILE, np.asarray(result.potentials), fmt="%.17e")
    np.savetxt(directory / FORCES_FILE, np.asarray(result.forces).reshape(-1, 3), fmt="%.17e")

    entries = dict(result.to_dict())
    entries.update(summary or {})
    write_key_values(entries, directory / SUMMARY_FILE)
    if timings:
        write_key_values(timings, directory / TIMINGS_FILE)
    logger.info(f"Results written to {directory}")
    return directory


def read_result(directory: PathLike) -> dict:
    directory = Path(directory)
    data = {
        "potentials": np.atleast_1d(np.loadtxt(directory / POTENTIALS_FILE)),
        "forces": np.loadtxt(directory / FORCES_FILE).reshape(-1, 3),
        "summary": read_key_values(directory / SUMMARY_FILE),
        "timings": {},
    }
    if (directory / TIMINGS_FILE).exists():
        data["timings"] = read_key_values(directory / TIMINGS_FILE)
    return data


# ---------------------------------------------------------------------------
# Binary grid dumps: 3 little-endian int64 dims, then float64 values row-major
# ---------------------------------------------------------------------------


def dump_grid(g: GridData, path: PathLike) -> Path:
    """Write real-space grid values to the raw binary format."""
    if g.space is not Space.REAL or g.values.ndim != 3:
        raise GridError("Only three-dimensional real-space grids can be dumped")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        handle.write(np.asarray(g.values.shape, dtype="<i8").tobytes())
        handle.write(np.ascontiguousarray(np.real(g.values), dtype="<f8").tobytes())
    return path


def load_grid(path: PathLike) -> GridData:
    raw = Path(path).read_bytes()
    if len(raw) < 24:
        raise GridError(f"{path}: truncated grid header")
    shape = tuple(int(v) for v in np.frombuffer(raw[:24], dtype="<i8"))
    values = np.frombuffer(raw[24:], dtype="<f8")
    if values.size != int(np.prod(shape)):
        raise GridError(f"{path}: expected {int(np.prod(shape))} values for shape {shape}, found {values.size}")
    return GridData(values.reshape(shape).astype(float), Space.REAL)


def dump_kernel(kernel, path: PathLike) -> Path:
    """Write a split or window kernel's coefficient table as text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(kernel.to_text())
    return path
