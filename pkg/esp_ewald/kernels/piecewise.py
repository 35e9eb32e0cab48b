"""Piecewise Chebyshev approximants used for fast kernel evaluation."""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev

# Polynomial degree per subinterval
DEFAULT_DEGREE = 16


@dataclass(frozen=True, eq=False)
class PiecewiseChebyshev:
    """Piecewise polynomial on uniform subintervals of [lower, upper].

    coeffs[i] holds the Chebyshev coefficients of subinterval i, mapped to
    [-1, 1]. Outside [lower, upper] the approximant returns `fill`.
    """

    lower: float
    upper: float
    coeffs: np.ndarray
    fill: float = 0.0

    @property
    def pieces(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.pieces

    @property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.pieces + 1)

    @classmethod
    def fit(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        lower: float,
        upper: float,
        pieces: int,
        degree: int = DEFAULT_DEGREE,
        fill: float = 0.0,
    ) -> "PiecewiseChebyshev":
        """Interpolate func at Chebyshev points of each subinterval."""
        width = (upper - lower) / pieces
        rows = []
        for i in range(pieces):
            left = lower + i * width

            def local(t, left=left):
                return func(left + 0.5 * width * (np.asarray(t) + 1.0))

            rows.append(chebyshev.chebinterpolate(local, degree))
        return cls(float(lower), float(upper), np.array(rows), float(fill))

    def _locate(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        inside = (x >= self.lower) & (x <= self.upper)
        scaled = (np.where(inside, x, self.lower) - self.lower) / self.width
        index = np.minimum(np.floor(scaled).astype(np.int64), self.pieces - 1)
        t = 2.0 * (scaled - index) - 1.0
        return inside, index, t

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside, index, t = self._locate(x.ravel())
        values = chebyshev.chebval(t, self.coeffs[index].T, tensor=False)
        values = np.where(inside, values, self.fill)
        if x.ndim == 0:
            return float(values[0])
        return values.reshape(x.shape)

    def derivative(self) -> "PiecewiseChebyshev":
        """Piecewise derivative (fill 0 outside the domain)."""
        scale = 2.0 / self.width
        rows = [np.append(chebyshev.chebder(row) * scale, 0.0) for row in self.coeffs]
        return PiecewiseChebyshev(self.lower, self.upper, np.array(rows), 0.0)

    def to_text(self) -> str:
        """One line per subinterval: left and right breakpoints, then coefficients."""
        edges = self.breakpoints
        lines = []
        for i, row in enumerate(self.coeffs):
            fields = [f"{edges[i]:.17g}", f"{edges[i + 1]:.17g}"]
            fields.extend(f"{value:.17e}" for value in row)
            lines.append(" ".join(fields))
        return "\n".join(lines) + "\n"
