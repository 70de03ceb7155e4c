"""Time grids, seeded Brownian increments and classical stochastic integrals.

Scalar paths are plain arrays of shape ``(paths, steps + 1)`` holding the
value at every grid node; column ``k`` may only depend on increments
``dW[:, :k]``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

# paths per RNG block; block b is keyed by (seed, b) so path i never
# depends on how many paths were requested
BLOCK = 1024


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.steps + 1) * self.dt
        t[-1] = self.horizon
        return t

    def index(self, t: float, atol: float = 1e-12) -> int:
        """Grid index of time ``t``; raises if ``t`` is not a node."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.steps or abs(k * self.dt - t) > atol * max(1.0, self.horizon):
            raise ValueError(f"time {t} is not aligned to the grid (dt={self.dt})")
        return k


def _block_normals(seed: int, block: int, steps: int, dim: int) -> np.ndarray:
    bitgen = np.random.Philox(key=(int(seed) & (2**64 - 1)) | (block << 64))
    return np.random.Generator(bitgen).standard_normal((BLOCK, steps, dim))


@dataclass(frozen=True, eq=False)
class BrownianBundle:
    """``paths`` independent ``dim``-dimensional Brownian paths on ``grid``.

    ``dW`` has shape ``(paths, steps, dim)``; increment ``dW[i, k]`` covers
    ``[t_k, t_{k+1}]``.
    """

    grid: TimeGrid
    dW: np.ndarray
    seed: int

    @property
    def paths(self) -> int:
        return self.dW.shape[0]

    @property
    def dim(self) -> int:
        return self.dW.shape[2]

    def increments(self, component: int = 0) -> np.ndarray:
        return self.dW[:, :, component]

    def W(self, component: int = 0) -> np.ndarray:
        """Brownian values at every node, shape ``(paths, steps + 1)``."""
        out = np.zeros((self.paths, self.grid.steps + 1))
        np.cumsum(self.dW[:, :, component], axis=1, out=out[:, 1:])
        return out

    def subset(self, paths: slice) -> "BrownianBundle":
        return BrownianBundle(self.grid, self.dW[paths], self.seed)

    def with_increment(self, path: int, step: int, value: float, component: int = 0) -> "BrownianBundle":
        """Copy with a single increment replaced (used for adaptedness audits)."""
        dW = self.dW.copy()
        dW[path, step, component] = value
        return BrownianBundle(self.grid, dW, self.seed)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "step", "dim", "dW"])
            for i in range(self.paths):
                for k in range(self.grid.steps):
                    for d in range(self.dim):
                        w.writerow([i, k, d, repr(float(self.dW[i, k, d]))])


def generate_brownian(grid: TimeGrid, paths: int, dim: int = 1, seed: int = 0) -> BrownianBundle:
    """Seeded Brownian increments with variance ``dt`` per component.

    Paths are produced in blocks of :data:`BLOCK` from a Philox stream keyed
    by ``(seed, block)``, so path ``i`` is bit-identical for any ``paths``
    count that includes it.
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    n_blocks = -(-paths // BLOCK)
    dW = np.empty((paths, grid.steps, dim))
    scale = np.sqrt(grid.dt)
    for b in range(n_blocks):
        lo = b * BLOCK
        hi = min(lo + BLOCK, paths)
        dW[lo:hi] = _block_normals(seed, b, grid.steps, dim)[: hi - lo] * scale
    return BrownianBundle(grid, dW, seed)


def ito_integral(phi: np.ndarray, dW: np.ndarray, cumulative: bool = False) -> np.ndarray:
    """Left-point sum ``sum_k phi(t_k) dW_k`` per path.

    ``phi`` holds node values ``(paths, steps + 1)`` (the last column is
    ignored) or step values ``(paths, steps)``.  With ``cumulative=True``
    the integral over ``[0, t_k]`` is returned for every node.
    """
    phi = np.asarray(phi, dtype=float)
    steps = dW.shape[-1]
    if phi.shape[-1] == steps + 1:
        phi = phi[..., :-1]
    elif phi.shape[-1] != steps:
        raise ValueError(f"integrand has {phi.shape[-1]} columns for {steps} steps")
    return _accumulate(phi * dW, cumulative)


def lebesgue_integral(psi: np.ndarray, grid: TimeGrid, cumulative: bool = False) -> np.ndarray:
    """Left-point Riemann sum ``sum_k psi(t_k) dt`` per path."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape[-1] == grid.steps + 1:
        psi = psi[..., :-1]
    elif psi.shape[-1] != grid.steps:
        raise ValueError(f"integrand has {psi.shape[-1]} columns for {grid.steps} steps")
    return _accumulate(psi * grid.dt, cumulative)


def _accumulate(terms: np.ndarray, cumulative: bool) -> np.ndarray:
    if not cumulative:
        return terms.sum(axis=-1)
    out = np.zeros(terms.shape[:-1] + (terms.shape[-1] + 1,))
    np.cumsum(terms, axis=-1, out=out[..., 1:])
    return out


def mc_band(samples: np.ndarray, axis: int = -1) -> np.ndarray:
    """Standard error of the sample mean, ``std / sqrt(n)``."""
    samples = np.asarray(samples)
    n = samples.shape[axis]
    return samples.std(axis=axis, ddof=1) / np.sqrt(n)
