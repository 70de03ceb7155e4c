"""Set-valued processes and finite families of adapted selections.

A selection family stands in for the (infinite) set of square-integrable
adapted selections of a set-valued process.  Members are generated on
demand, one ``(paths, steps + 1)`` array at a time, so large Monte Carlo
runs can stream over the family instead of materialising it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional

import numpy as np

from .convex import (
    Box,
    ConvexSet,
    Interval,
    StructureError,
    SupportSet,
    hukuhara_diff,
    minkowski_sum,
    scalar_mul,
    set_norm,
)
from .stochastic import BrownianBundle, TimeGrid, ito_integral, lebesgue_integral

RECIPES = ("extreme", "support", "mix")

# rule(t, W) -> ConvexSet broadcastable to (paths, steps + 1)
Rule = Callable[[np.ndarray, np.ndarray], ConvexSet]


class SetValuedProcess:
    """A rule mapping ``(t_k, W_{t_k})`` to a convex set.

    ``rule`` receives the node times with shape ``(1, steps + 1)`` and the
    Brownian values with shape ``(paths, steps + 1)`` and returns an
    :class:`Interval` or :class:`Box` whose batch shape broadcasts to
    ``(paths, steps + 1)``.  Constant processes may also be support sets.
    """

    def __init__(self, rule: Rule, kind: str = "state", const: Optional[ConvexSet] = None, name: str = ""):
        if kind not in ("constant", "deterministic", "state"):
            raise ValueError(f"unknown process kind {kind!r}")
        self.rule = rule
        self.kind = kind
        self.const = const
        self.name = name or kind

    @classmethod
    def constant(cls, s: ConvexSet) -> "SetValuedProcess":
        return cls(lambda t, W: s, "constant", const=s, name=repr(s))

    @classmethod
    def deterministic(cls, fn: Callable[[np.ndarray], ConvexSet], name: str = "") -> "SetValuedProcess":
        return cls(lambda t, W: fn(t), "deterministic", name=name)

    @classmethod
    def state(cls, fn: Rule, name: str = "") -> "SetValuedProcess":
        return cls(fn, "state", name=name)

    def evaluate(self, bundle: BrownianBundle, W: Optional[np.ndarray] = None) -> ConvexSet:
        """The set at every (path, node), batch shape ``(paths, steps + 1)``."""
        if self.kind == "constant" and isinstance(self.const, SupportSet):
            return self.const
        if W is None:
            W = bundle.W(0)
        t = bundle.grid.nodes[None, :]
        s = self.rule(t, W)
        shape = W.shape
        if isinstance(s, Interval):
            lo = np.broadcast_to(np.asarray(s.lo, dtype=float), shape)
            hi = np.broadcast_to(np.asarray(s.hi, dtype=float), shape)
            return Interval(lo, hi)
        if isinstance(s, Box):
            full = shape + (s.dim,)
            return Box(np.broadcast_to(s.lo, full), np.broadcast_to(s.hi, full))
        raise StructureError("state-dependent support sets are not supported")

    def bound(self, bundle: BrownianBundle) -> np.ndarray:
        """Pathwise bound ``||F(t_k)||`` on the grid."""
        return set_norm(self.evaluate(bundle))

    def is_singleton(self, bundle: BrownianBundle) -> bool:
        if self.kind == "constant":
            return self.const.is_singleton()
        return self.evaluate(bundle).is_singleton()

    def __add__(self, other: "SetValuedProcess") -> "SetValuedProcess":
        if self.kind == other.kind == "constant":
            return SetValuedProcess.constant(minkowski_sum(self.const, other.const))
        return SetValuedProcess.state(lambda t, W: minkowski_sum(self.rule(t, W), other.rule(t, W)),
                                      name=f"({self.name})+({other.name})")

    def scaled(self, alpha: float) -> "SetValuedProcess":
        if self.kind == "constant":
            return SetValuedProcess.constant(scalar_mul(alpha, self.const))
        return SetValuedProcess.state(lambda t, W: scalar_mul(alpha, self.rule(t, W)), name=f"{alpha}*({self.name})")

    def __repr__(self):
        return f"SetValuedProcess({self.name})"


def hukuhara_process(f1: SetValuedProcess, f2: SetValuedProcess, bundle: BrownianBundle,
                     tol: float = 1e-9) -> SetValuedProcess:
    """Nodewise ``F1 ⊖ F2``; raises if the difference fails anywhere."""
    res = hukuhara_diff(f1.evaluate(bundle), f2.evaluate(bundle), tol)
    if not bool(res):
        raise ValueError("nodewise Hukuhara difference does not exist")
    if f1.kind == f2.kind == "constant":
        return SetValuedProcess.constant(hukuhara_diff(f1.const, f2.const, tol).value())
    return SetValuedProcess.state(lambda t, W: hukuhara_diff(f1.rule(t, W), f2.rule(t, W), tol).set,
                                  name=f"({f1.name})-h({f2.name})")


# ---------------------------------------------------------------------------
# Adapted mixing weights
# ---------------------------------------------------------------------------


def _mixing_weight(seed: int, j: int, t: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Adapted weight in [0, 1] for mixture member ``j``.

    Depends on ``(t_k, W_{t_k})`` only; three shapes are cycled: a smooth
    logistic in W, a switching indicator (decomposable-style mixing) and a
    random constant.
    """
    rng = np.random.Generator(np.random.Philox(key=(int(seed) & (2**64 - 1)) | ((j + 1) << 64)))
    a, b, c = rng.normal(0.0, 3.0), rng.normal(), rng.normal()
    kind = j % 3
    if kind == 0:
        return 1.0 / (1.0 + np.exp(-(a * W + b * t + c)))
    if kind == 1:
        return (W > 0.5 * c).astype(float) * np.ones_like(t)
    return np.full(np.broadcast_shapes(W.shape, t.shape), rng.uniform())


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


class AdaptedSelectionFamily:
    """``size`` adapted selections of ``process`` on the bundle's grid.

    The family's leading members are the extreme points (interval endpoints,
    box corners) or, for the ``support`` recipe, support points in the given
    directions; the rest are adapted convex mixtures of two of them.
    Member ``j`` is a pure function of ``(process, bundle, seed, j)``, so a
    larger family always contains a smaller one with the same seed.
    """

    def __init__(self, process: SetValuedProcess, bundle: BrownianBundle, size: int,
                 recipe: str = "mix", seed: int = 0, directions: Optional[np.ndarray] = None):
        if recipe not in RECIPES:
            raise ValueError(f"unknown recipe {recipe!r}; expected one of {RECIPES}")
        self.process = process
        self.bundle = bundle
        self.size = int(size)
        self.recipe = recipe
        self.seed = int(seed)
        self._W = bundle.W(0)
        self._set = process.evaluate(bundle, self._W)
        self._base = self._base_points(directions)
        if self.size < self.minimum_size:
            raise ValueError(f"recipe {recipe!r} needs at least {self.minimum_size} selections, got {self.size}")

    def _base_points(self, directions):
        s = self._set
        if isinstance(s, Interval):
            return [("lo",), ("hi",)]
        if isinstance(s, Box):
            n = s.dim
            if self.recipe == "support":
                d = np.asarray(directions if directions is not None else np.vstack([np.eye(n), -np.eye(n)]))
                return [("corner", tuple(bool(x) for x in row >= 0)) for row in d]
            return [("corner", tuple(bool((v >> i) & 1) for i in range(n))) for v in range(2**n)]
        # constant support set: support points on its own grid
        idx = range(s.grid.size)
        return [("point", s.support_point(j)) for j in idx]

    @property
    def minimum_size(self) -> int:
        return len(self._base)

    @property
    def grid(self) -> TimeGrid:
        return self.bundle.grid

    @property
    def set_path(self) -> ConvexSet:
        return self._set

    def _base_value(self, spec) -> np.ndarray:
        s = self._set
        if spec[0] == "lo":
            return np.asarray(s.lo)
        if spec[0] == "hi":
            return np.asarray(s.hi)
        if spec[0] == "corner":
            return np.where(np.array(spec[1]), s.hi, s.lo)
        shape = self._W.shape + (len(spec[1]),)
        return np.broadcast_to(spec[1], shape)

    def member(self, j: int) -> np.ndarray:
        """Values of selection ``j`` at every (path, node)."""
        if not 0 <= j < self.size:
            raise IndexError(j)
        nb = len(self._base)
        if j < nb:
            return np.array(self._base_value(self._base[j]), dtype=float)
        rng = np.random.Generator(np.random.Philox(key=(self.seed & (2**64 - 1)) | ((j + 1) << 64) | (1 << 127)))
        a, b = rng.choice(nb, size=2, replace=False) if nb > 1 else (0, 0)
        lam = _mixing_weight(self.seed, j, self.grid.nodes[None, :], self._W)
        pa, pb = self._base_value(self._base[a]), self._base_value(self._base[b])
        if pa.ndim == lam.ndim + 1:
            lam = lam[..., None]
        # written as an update of pb so equal endpoints reproduce it exactly
        return pb + lam * (pa - pb)

    def distinct_size(self) -> int:
        """1 when every member coincides (singleton-valued process)."""
        return 1 if self._set.is_singleton() else self.size

    def __iter__(self) -> Iterator[np.ndarray]:
        for j in range(self.size):
            yield self.member(j)

    def values(self) -> np.ndarray:
        """All members stacked, shape ``(size, paths, steps + 1[, n])``."""
        return np.stack([self.member(j) for j in range(self.size)])

    def membership(self, tol: float = 1e-12) -> float:
        """Fraction of (selection, path, node) values inside the set."""
        s = self._set
        total, inside = 0, 0
        for v in self:
            if isinstance(s, SupportSet):
                ok = np.all(v @ s.grid.directions.T <= s.h + tol, axis=-1)
            else:
                ok = s.contains(v, tol)
            inside += int(np.count_nonzero(ok))
            total += ok.size
        return inside / total

    def write_audit(self, path: str | Path, tol: float = 1e-12) -> None:
        """CSV ``selection,step,path,value,member?`` (interval processes)."""
        s = self._set
        if not isinstance(s, Interval):
            raise StructureError("audit CSV is defined for interval-valued processes")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["selection", "step", "path", "value", "member?"])
            for j, v in enumerate(self):
                ok = s.contains(v, tol)
                for k in range(v.shape[1]):
                    for i in range(v.shape[0]):
                        w.writerow([j, k, i, repr(float(v[i, k])), int(ok[i, k])])


def build_selections(process: SetValuedProcess, bundle: BrownianBundle, size: int,
                     recipe: str = "mix", seed: int = 0, directions=None) -> AdaptedSelectionFamily:
    return AdaptedSelectionFamily(process, bundle, size, recipe, seed, directions)


def window_mask(grid: TimeGrid, window: Optional[tuple] = None) -> np.ndarray:
    """Indicator of ``(s, t]`` on the steps: step ``k`` covers ``[t_k, t_{k+1})``.

    Left-point sums weight step ``k`` by the integrand at ``t_k``, so the
    window ``[s, t]`` keeps steps ``k_s .. k_t - 1``.
    """
    mask = np.zeros(grid.steps)
    if window is None:
        mask[:] = 1.0
        return mask
    s, t = window
    ks, kt = grid.index(s), grid.index(t)
    if ks > kt:
        raise ValueError("window start after window end")
    mask[ks:kt] = 1.0
    return mask


def selection_integral(values: np.ndarray, bundle: BrownianBundle, kind: str,
                       window: Optional[tuple] = None, cumulative: bool = False) -> np.ndarray:
    """Integral of one selection (``dt`` or ``dW``) restricted to ``window``."""
    steps = bundle.grid.steps
    phi = values[:, :steps] * window_mask(bundle.grid, window)
    if kind == "dt":
        return lebesgue_integral(phi, bundle.grid, cumulative)
    if kind == "dW":
        return ito_integral(phi, bundle.increments(0), cumulative)
    raise ValueError(f"kind must be 'dt' or 'dW', got {kind!r}")


def selection_integrals(family: AdaptedSelectionFamily, kind: str, window: Optional[tuple] = None,
                        cumulative: bool = False) -> np.ndarray:
    """Integrals of every member, shape ``(size, paths)`` or ``(size, paths, steps + 1)``."""
    if not isinstance(family.set_path, Interval):
        raise StructureError("selection integrals are implemented for scalar (interval) processes")
    return np.stack([selection_integral(v, family.bundle, kind, window, cumulative) for v in family])
