"""Set-valued ``dt`` and ``dW`` integrals built from selection families.

Per path, an integral is represented by the interval hull of the integrals
of the family's members.  Two hull modes are available:

``members``
    hull over whole members, ``[min_j I_j, max_j I_j]``.
``stepwise``
    hull over members chosen independently on every step (the family made
    closed under pasting in time), ``sum_k [min_j a_jk, max_j a_jk]`` where
    ``a_jk`` is member ``j``'s contribution on step ``k``.  This hull is
    additive over disjoint windows, so window splitting holds exactly.

Expectations of sets are hulls of per-selection sample means.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .convex import Interval, hausdorff_distance, hukuhara_diff, minkowski_sum
from .selections import (
    AdaptedSelectionFamily,
    SetValuedProcess,
    build_selections,
    selection_integral,
    window_mask,
)
from .stochastic import BrownianBundle, ito_integral, lebesgue_integral, mc_band

HULL_TOL = 1e-8


def default_size(process: SetValuedProcess, kind: str) -> int:
    """Selections needed by default: endpoints suffice for deterministic dt."""
    if kind == "dt" and process.kind in ("constant", "deterministic"):
        return 2
    return 32


@dataclass
class SetIntegralResult:
    """Per-path hull of selection integrals plus provenance."""

    set: Interval
    values: Optional[np.ndarray]
    size: int
    recipe: str
    seed: int
    mode: str = "members"


def _contributions(v: np.ndarray, bundle: BrownianBundle, kind: str, mask: np.ndarray) -> np.ndarray:
    steps = bundle.grid.steps
    phi = v[:, :steps] * mask
    if kind == "dt":
        return phi * bundle.grid.dt
    if kind == "dW":
        return phi * bundle.increments(0)
    raise ValueError(f"kind must be 'dt' or 'dW', got {kind!r}")


def set_integral(process: SetValuedProcess, bundle: BrownianBundle, window: Optional[tuple] = None,
                 kind: str = "dt", size: Optional[int] = None, recipe: str = "mix", seed: int = 0,
                 mode: str = "members", cumulative: bool = False,
                 family: Optional[AdaptedSelectionFamily] = None) -> SetIntegralResult:
    """Set-valued integral of ``process`` over ``window`` (default ``[0, T]``).

    The window ``[s, t]`` must sit on grid nodes and is applied as the
    indicator ``1_(s,t]``.  With ``cumulative=True`` the returned set has
    shape ``(paths, steps + 1)`` holding the integral up to every node
    (of the windowed integrand), and ``values`` is omitted.
    """
    if family is None:
        size = default_size(process, kind) if size is None else size
        family = build_selections(process, bundle, size, recipe, seed)
    mask = window_mask(bundle.grid, window)
    if mode == "members":
        lo = hi = None
        vals = []
        for v in family:
            r = selection_integral(v, bundle, kind, window, cumulative)
            if not cumulative:
                vals.append(r)
            lo = r if lo is None else np.minimum(lo, r)
            hi = r if hi is None else np.maximum(hi, r)
        values = None if cumulative else np.stack(vals)
    elif mode == "stepwise":
        clo = chi = None
        for v in family:
            c = _contributions(v, bundle, kind, mask)
            clo = c if clo is None else np.minimum(clo, c)
            chi = c if chi is None else np.maximum(chi, c)
        lo = _sum(clo, cumulative)
        hi = _sum(chi, cumulative)
        values = None
    else:
        raise ValueError(f"unknown hull mode {mode!r}")
    return SetIntegralResult(Interval(lo, hi), values, family.size, family.recipe, family.seed, mode)


def _sum(c: np.ndarray, cumulative: bool) -> np.ndarray:
    if not cumulative:
        return c.sum(axis=-1)
    out = np.zeros(c.shape[:-1] + (c.shape[-1] + 1,))
    np.cumsum(c, axis=-1, out=out[..., 1:])
    return out


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    """Two set-valued sides compared per (path, node) in Hausdorff distance."""

    check: str
    lhs: Interval
    rhs: Interval
    tol: float
    distance: np.ndarray = field(init=False)

    def __post_init__(self):
        self.distance = np.asarray(hausdorff_distance(self.lhs, self.rhs))

    @property
    def max_distance(self) -> float:
        return float(self.distance.max()) if self.distance.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_distance <= self.tol

    def rows(self):
        lo_l, hi_l = np.atleast_2d(self.lhs.lo), np.atleast_2d(self.lhs.hi)
        lo_r, hi_r = np.atleast_2d(self.rhs.lo), np.atleast_2d(self.rhs.hi)
        d = np.atleast_2d(self.distance)
        if lo_l.shape[0] == 1 and np.ndim(self.lhs.lo) == 1:
            # per-path vector: one node
            lo_l, hi_l, lo_r, hi_r, d = (x.T for x in (lo_l, hi_l, lo_r, hi_r, d))
        for node in range(lo_l.shape[1]):
            for path in range(lo_l.shape[0]):
                yield [self.check, node, path, repr(float(lo_l[path, node])), repr(float(hi_l[path, node])),
                       repr(float(lo_r[path, node])), repr(float(hi_r[path, node])), repr(float(d[path, node]))]


REPORT_HEADER = ["check", "node", "path", "lhs_lo", "lhs_hi", "rhs_lo", "rhs_hi", "hausdorff"]


def write_reports(path: str | Path, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for rep in reports:
            w.writerows(rep.rows())


def verify_splitting(process: SetValuedProcess, bundle: BrownianBundle, t: float, kind: str = "dt",
                     size: Optional[int] = None, recipe: str = "mix", seed: int = 0, mode: str = "members",
                     tol: float = HULL_TOL) -> tuple[ComparisonReport, ComparisonReport]:
    """``∫_0^T = ∫_0^t + ∫_t^T`` and ``∫_t^T = ∫_0^T ⊖ ∫_0^t`` per path."""
    T = bundle.grid.horizon
    size = default_size(process, kind) if size is None else size
    fam = build_selections(process, bundle, size, recipe, seed)
    full = set_integral(process, bundle, None, kind, mode=mode, family=fam).set
    left = set_integral(process, bundle, (0.0, t), kind, mode=mode, family=fam).set
    right = set_integral(process, bundle, (t, T), kind, mode=mode, family=fam).set
    split = ComparisonReport(f"split@{t:g}", full, minkowski_sum(left, right), tol)
    diff = hukuhara_diff(full, left, tol)
    # where the difference fails, the erosion placeholder makes the distance large
    return split, ComparisonReport(f"split-diff@{t:g}", right, diff.set, tol)


@dataclass
class AdditivityReport:
    sum_clause: ComparisonReport
    diff_clause: Optional[ComparisonReport]

    @property
    def passed(self) -> bool:
        return self.sum_clause.passed and (self.diff_clause is None or self.diff_clause.passed)


def verify_additivity(f1: SetValuedProcess, f2: SetValuedProcess, bundle: BrownianBundle, kind: str = "dt",
                      size: int = 2, recipe: str = "extreme", seed: int = 0, mode: str = "members",
                      with_difference: bool = False, tol: float = HULL_TOL) -> AdditivityReport:
    """Integral of a sum vs. sum of integrals, at every grid node and path.

    With ``with_difference`` the Hukuhara clause
    ``∫(F1 ⊖ F2) = ∫F1 ⊖ ∫F2`` is checked as well; the nodewise difference
    ``F1 ⊖ F2`` must exist.
    """
    def cum(p):
        return set_integral(p, bundle, None, kind, size, recipe, seed, mode, cumulative=True).set

    i1, i2 = cum(f1), cum(f2)
    sum_clause = ComparisonReport(f"additivity-{kind}", cum(f1 + f2), minkowski_sum(i1, i2), tol)
    diff_clause = None
    if with_difference:
        from .selections import hukuhara_process

        d = hukuhara_process(f1, f2, bundle)
        res = hukuhara_diff(i1, i2, tol)
        if not bool(res):
            raise ValueError("difference of the integrals does not exist")
        diff_clause = ComparisonReport(f"additivity-diff-{kind}", cum(d), res.set, tol)
    return AdditivityReport(sum_clause, diff_clause)


@dataclass
class IsometryReport:
    """Set-valued isometry: hull of ``E[(∫φ dW)^2]`` vs hull of ``E[∫φ^2 dt]``."""

    lhs: Interval
    rhs: Interval
    mean_hull: Interval
    band: float
    mean_band: float
    per_selection: np.ndarray  # columns: E[I^2], E[∫φ^2], E[I]

    @property
    def distance(self) -> float:
        return float(hausdorff_distance(self.lhs, self.rhs))

    @property
    def mean_distance(self) -> float:
        return float(max(abs(self.mean_hull.lo), abs(self.mean_hull.hi)))

    def tolerance(self, floor: float = 0.02, k: float = 5.0) -> float:
        return max(floor, k * self.band)

    def passed(self, floor: float = 0.02, k: float = 5.0) -> bool:
        return self.distance <= self.tolerance(floor, k) and self.mean_distance <= k * self.mean_band

    def rows(self, node: int):
        """Two ``REPORT_HEADER`` rows at the terminal ``node``; the mean hull is compared with ``{0}``."""
        yield ["isometry", node, "mean", repr(float(self.lhs.lo)), repr(float(self.lhs.hi)),
               repr(float(self.rhs.lo)), repr(float(self.rhs.hi)), repr(self.distance)]
        yield ["isometry-mean", node, "mean", repr(float(self.mean_hull.lo)), repr(float(self.mean_hull.hi)),
               "0.0", "0.0", repr(self.mean_distance)]


def setvalued_isometry_check(f: SetValuedProcess, bundle: BrownianBundle, size: int = 16,
                             recipe: str = "mix", seed: int = 0) -> IsometryReport:
    fam = build_selections(f, bundle, size, recipe, seed)
    dW = bundle.increments(0)
    stats, bands, mbands = [], [], []
    for v in fam:
        I = ito_integral(v, dW)
        Q = lebesgue_integral(v * v, bundle.grid)
        I2 = I * I
        stats.append((I2.mean(), Q.mean(), I.mean()))
        bands.append(float(mc_band(I2 - Q)))
        mbands.append(float(mc_band(I)))
    s = np.array(stats)
    return IsometryReport(
        lhs=Interval(s[:, 0].min(), s[:, 0].max()),
        rhs=Interval(s[:, 1].min(), s[:, 1].max()),
        mean_hull=Interval(s[:, 2].min(), s[:, 2].max()),
        band=max(bands),
        mean_band=max(mbands),
        per_selection=s,
    )


@dataclass
class EqualityVerdict:
    integral_distance: float
    process_distance: float
    eps_int: float
    eps_proc: float

    @property
    def verdict(self) -> str:
        if self.integral_distance > self.eps_int:
            return "distinguishable"
        return "pass" if self.process_distance <= self.eps_proc else "fail"


def integral_equality_diagnostic(x: SetValuedProcess, y: SetValuedProcess, bundle: BrownianBundle,
                                 size: int = 2, recipe: str = "extreme", seeds: tuple = (0, 0),
                                 eps_int: float = HULL_TOL, mode: str = "stepwise") -> EqualityVerdict:
    """Equal ``dW`` integrals must come from equal integrands.

    Integral distance: ``max_k sqrt(E h^2(∫_0^{t_k} X dW, ∫_0^{t_k} Y dW))``.
    Process distance: ``sqrt(E (1/T) ∫ h^2(X_t, Y_t) dt)``.  By the isometry a
    constant gap ``c`` gives ``c*sqrt(T)`` and ``c`` respectively, so the
    process tolerance is ``2 * eps_int / sqrt(T)``.
    """
    T = bundle.grid.horizon
    ix = set_integral(x, bundle, None, "dW", size, recipe, seeds[0], mode, cumulative=True).set
    iy = set_integral(y, bundle, None, "dW", size, recipe, seeds[1], mode, cumulative=True).set
    d_int = np.sqrt((np.asarray(hausdorff_distance(ix, iy)) ** 2).mean(axis=0)).max()
    hxy = np.asarray(hausdorff_distance(x.evaluate(bundle), y.evaluate(bundle)))
    d_proc = np.sqrt(lebesgue_integral(hxy**2, bundle.grid).mean() / T)
    return EqualityVerdict(float(d_int), float(d_proc), eps_int, 2.0 * eps_int / np.sqrt(T))
