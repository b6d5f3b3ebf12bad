"""Deterministic one-dimensional backend: kernels discretized on a grid.

The chain transition kernel and the exponential-time flow operator are
reduced to row-stochastic matrices by quadrature over jump times (Gauss-
Laguerre, whose weight is exactly the exponential holding-time density after
rescaling) and marks (composite trapezoid), depositing every image point onto
its two neighboring grid nodes.  Linear binning preserves the first moment of
each deposited atom exactly, which the moment-based acceptance checks rely
on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.laguerre import laggauss

from .measures import EmpiricalMeasure
from .model import ModelError, ModelSpec, check_contractivity, theta_quadrature

__all__ = [
    "Grid1D",
    "KernelMatrix",
    "PowerIterationResult",
    "build_chain_kernel",
    "build_flow_kernel",
    "power_iterate",
    "iterate_kernel",
    "invariant_vector",
]

DEFAULT_ESCAPE_TOL = 1e-3
_ROW_SUM_TOL = 1e-10


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing nodes spanning ``[0, x_max]`` with linear binning."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ValueError("need at least two grid nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, x_max: float, m: int) -> "Grid1D":
        if x_max <= 0 or m < 2:
            raise ValueError("need x_max > 0 and m >= 2")
        return cls(np.linspace(0.0, x_max, m))

    @property
    def m(self) -> int:
        return len(self.nodes)

    def deposit(self, points: np.ndarray, weights: np.ndarray):
        """Linear-bin weighted points onto the nodes.

        Returns ``(node_weights, escaped_mass)``; points outside the grid
        span are dropped and accounted in ``escaped_mass``.
        """
        nodes = self.nodes
        points = np.ravel(points)
        weights = np.ravel(weights)
        inside = (points >= nodes[0]) & (points <= nodes[-1])
        escaped = float(weights[~inside].sum())
        p, w = points[inside], weights[inside]
        idx = np.clip(np.searchsorted(nodes, p, side="right") - 1, 0, self.m - 2)
        frac = (p - nodes[idx]) / (nodes[idx + 1] - nodes[idx])
        out = np.bincount(idx, weights=w * (1.0 - frac), minlength=self.m)
        out += np.bincount(idx + 1, weights=w * frac, minlength=self.m)
        return out, escaped


@dataclass(frozen=True)
class KernelMatrix:
    """Row-stochastic transition matrix on a grid, with its build diagnostics.

    ``defect`` is the largest pre-normalization deviation of a row sum from
    one (quadrature error plus any escaped mass).
    """

    grid: Grid1D
    entries: np.ndarray
    defect: float

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (self.grid.m, self.grid.m):
            raise ValueError("matrix shape must match the grid")
        if entries.min() < 0:
            raise ValueError("kernel entries must be nonnegative")
        row_sums = entries.sum(axis=1)
        if np.max(np.abs(row_sums - 1.0)) > _ROW_SUM_TOL:
            raise ValueError("rows must sum to one after normalization")
        object.__setattr__(self, "entries", entries)


def _normalize_rows(raw: np.ndarray, escaped: float, escape_tol: float) -> tuple[np.ndarray, float]:
    row_sums = raw.sum(axis=1)
    defect = float(max(np.max(np.abs(row_sums - 1.0)), escaped))
    if defect > escape_tol:
        raise ModelError(
            f"kernel mass defect {defect:.3e} exceeds {escape_tol:.0e}; "
            "increase x_max or the quadrature budgets"
        )
    return raw / row_sums[:, None], defect


def build_chain_kernel(spec: ModelSpec, lam: float, grid: Grid1D,
                       t_nodes: int = 64, theta_nodes: int = 64,
                       escape_tol: float = DEFAULT_ESCAPE_TOL,
                       row_chunk: int = 128) -> KernelMatrix:
    """Discretize the post-jump chain transition kernel on the grid.

    For each node the double integral over holding time and mark is
    approximated with Gauss-Laguerre nodes in time and composite trapezoid
    nodes in the mark, every image point being deposited by linear binning.
    Rows are renormalized to one; the largest pre-normalization defect is
    kept on the result.
    """
    if spec.dim != 1:
        raise ModelError("the grid backend supports one-dimensional states only")
    if not check_contractivity(spec, lam):
        raise ModelError(f"jump rate {lam} is outside the contractive window")
    u, uw = laggauss(t_nodes)
    th, tw = theta_quadrature(spec.jumps, theta_nodes)
    times = u / lam
    m = grid.m
    raw = np.empty((m, m))
    escaped_max = 0.0
    for start in range(0, m, row_chunk):
        xs = grid.nodes[start:start + row_chunk]
        drift = spec.flow.evaluate(times[None, :], xs[:, None])          # (r, t)
        images = spec.jumps.apply(th[None, None, :], drift[:, :, None])  # (r, t, th)
        dens = spec.jumps.density(drift[:, :, None], th[None, None, :])
        if dens.min() < 0:
            raise ModelError("negative mark density while building the kernel")
        weights = uw[None, :, None] * (dens * tw[None, None, :])
        for i in range(len(xs)):
            row, esc = grid.deposit(images[i], weights[i])
            raw[start + i] = row
            escaped_max = max(escaped_max, esc)
    entries, defect = _normalize_rows(raw, escaped_max, escape_tol)
    return KernelMatrix(grid, entries, defect)


def build_flow_kernel(spec: ModelSpec, lam: float, grid: Grid1D,
                      t_nodes: int = 64,
                      escape_tol: float = DEFAULT_ESCAPE_TOL) -> KernelMatrix:
    """Discretize the exponential-time flow operator on the grid.

    Same construction as the chain kernel without the mark integral: each
    node flows for每 Gauss-Laguerre time and is deposited with the matching
    weight.
    """
    if spec.dim != 1:
        raise ModelError("the grid backend supports one-dimensional states only")
    if lam <= 0:
        raise ModelError("jump rate must be positive")
    u, uw = laggauss(t_nodes)
    times = u / lam
    m = grid.m
    raw = np.empty((m, m))
    escaped_max = 0.0
    images = spec.flow.evaluate(times[None, :], grid.nodes[:, None])
    for i in range(m):
        row, esc = grid.deposit(images[i], uw)
        raw[i] = row
        escaped_max = max(escaped_max, esc)
    entries, defect = _normalize_rows(raw, escaped_max, escape_tol)
    return KernelMatrix(grid, entries, defect)


@dataclass(frozen=True)
class PowerIterationResult:
    vector: np.ndarray
    iterations: int
    residual: float


def power_iterate(kernel: KernelMatrix, tol: float = 1e-12,
                  max_iter: int = 20000) -> PowerIterationResult:
    """Invariant probability vector by plain left iteration from uniform.

    Stops when the L1 residual ``|mu K - mu|`` drops to ``tol``; raises
    RuntimeError carrying the last residual when ``max_iter`` is exhausted.
    """
    p = kernel.entries
    mu = np.full(kernel.grid.m, 1.0 / kernel.grid.m)
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = mu @ p
        residual = float(np.abs(nxt - mu).sum())
        mu = nxt
        if residual <= tol:
            return PowerIterationResult(mu / mu.sum(), it, residual)
    raise RuntimeError(
        f"power iteration did not reach tol={tol} in {max_iter} iterations "
        f"(last residual {residual:.3e})"
    )


def iterate_kernel(mu: np.ndarray, kernel: KernelMatrix, n: int) -> np.ndarray:
    """Trajectory ``mu K, mu K^2, ..., mu K^n`` as an (n, m) array."""
    if n < 1:
        raise ValueError("need at least one step")
    mu = np.asarray(mu, dtype=float)
    out = np.empty((n, kernel.grid.m))
    cur = mu
    for i in range(n):
        cur = cur @ kernel.entries
        out[i] = cur
    return out


def invariant_vector(spec: ModelSpec, lam: float, grid: Grid1D,
                     t_nodes: int = 64, theta_nodes: int = 64,
                     tol: float = 1e-12) -> tuple[np.ndarray, KernelMatrix]:
    """Convenience: build the chain kernel and return its invariant vector."""
    kernel = build_chain_kernel(spec, lam, grid, t_nodes, theta_nodes)
    res = power_iterate(kernel, tol=tol)
    return res.vector, kernel


def measure_from_vector(grid: Grid1D, vector: np.ndarray) -> EmpiricalMeasure:
    """Wrap a probability vector on the grid as an empirical measure."""
    return EmpiricalMeasure(grid.nodes, np.asarray(vector, dtype=float))
