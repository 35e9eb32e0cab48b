"""Error metrics and lattice-constant helpers."""

import math

import numpy as np

from esp_ewald.errors import ParameterError


def relative_force_error(test, reference) -> float:
    """
    Relative RMS force error sqrt(sum |F_test - F_ref|^2 / sum |F_ref|^2).

    Args:
        test: (N, 3) forces under test
        reference: (N, 3) reference forces

    Returns:
        Delta

    Raises:
        ParameterError: shape mismatch or zero reference norm
    """
    test = np.asarray(test, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if test.shape != reference.shape:
        raise ParameterError(f"Force arrays differ in shape: {test.shape} vs {reference.shape}")
    norm = float(np.sum(reference * reference))
    if norm == 0.0:
        raise ParameterError("Reference forces have zero norm")
    return math.sqrt(float(np.sum((test - reference) ** 2)) / norm)


def madelung_from_energy(energy: float, n: int, spacing: float = 1.0) -> float:
    """Madelung constant from the energy of n ions at nearest-neighbour spacing."""
    return -4.0 * math.pi * spacing * energy / (n / 2)
