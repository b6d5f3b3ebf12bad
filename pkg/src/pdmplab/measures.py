"""Finitely supported nonnegative measures on the state space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["EmpiricalMeasure"]

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Atoms ``support[i]`` carrying nonnegative ``weights[i]``.

    ``support`` has shape ``(n,)`` for a one-dimensional state space and
    ``(n, d)`` otherwise.  Instances are treated as immutable.
    """

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1:
            raise ValueError("weights must be one-dimensional")
        if support.shape[0] != weights.shape[0]:
            raise ValueError(
                f"support has {support.shape[0]} atoms but {weights.shape[0]} weights"
            )
        if weights.size and weights.min() < -_MASS_TOL:
            raise ValueError(f"negative weight {weights.min()}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", np.maximum(weights, 0.0))

    @classmethod
    def from_samples(cls, points: np.ndarray) -> "EmpiricalMeasure":
        """Equal-weight probability measure on the given sample points."""
        points = np.asarray(points, dtype=float)
        n = points.shape[0]
        if n == 0:
            raise ValueError("cannot build a probability measure from zero samples")
        return cls(points, np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, x: float | np.ndarray) -> "EmpiricalMeasure":
        """Unit point mass at ``x``."""
        arr = np.asarray(x, dtype=float)
        support = arr.reshape(1) if arr.ndim == 0 else arr.reshape(1, -1)
        if support.shape == (1, 1):
            support = support.reshape(1)
        return cls(support, np.ones(1))

    @property
    def n_atoms(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return 1 if self.support.ndim == 1 else self.support.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: float = _MASS_TOL) -> bool:
        return abs(self.total_mass - 1.0) <= tol

    def mean(self) -> float | np.ndarray:
        m = np.tensordot(self.weights, self.support, axes=(0, 0)) / self.total_mass
        return float(m) if self.dim == 1 else m

    def second_moment(self) -> float:
        sq = self.support**2 if self.dim == 1 else np.sum(self.support**2, axis=1)
        return float(np.dot(self.weights, sq) / self.total_mass)

    def scaled(self, factor: float) -> "EmpiricalMeasure":
        return EmpiricalMeasure(self.support, self.weights * factor)
