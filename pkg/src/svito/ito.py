"""Set-valued Itô processes, the transformation formula and the square inclusion.

A set-valued Itô process ``X_t = x0 + ∫ f dW + ∫ g ds`` is realised per path
as the hull of single-valued Euler paths ``x^{d1 d2}``, one per pair of
selections ``(f^{d1}, g^{d2})``.  Both sides of the transformation identity
are evaluated over the same pairs, so a discrepancy measures the formula
and not the sampling.  State and Brownian motion are one-dimensional.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .convex import Interval, hausdorff_distance, hukuhara_diff, minkowski_sum, square_image
from .integrals import HULL_TOL
from .selections import AdaptedSelectionFamily, SetValuedProcess, build_selections
from .stochastic import BrownianBundle

Fn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TransformSpec:
    """A smooth map ``φ(t, x)`` with its partial derivatives.

    ``curvature`` bounds ``½ sup|φ_xx|`` and ``cross`` bounds ``sup|φ_tx|``;
    together they scale the discretisation allowance of the verifier.  A
    spec without them is accepted but reported as uncalibrated.
    ``closure_compatible`` is the user's declaration that φ maps bounded
    sets to bounded sets continuously (checked on samples only).
    """

    name: str
    phi: Fn
    phi_t: Fn
    phi_x: Fn
    phi_xx: Fn
    curvature: Optional[float] = None
    cross: Optional[float] = None
    closure_compatible: bool = True

    @property
    def calibrated(self) -> bool:
        return self.curvature is not None and self.cross is not None

    def check_partials(self, ts=None, xs=None, rel: float = 1e-6) -> float:
        """Worst relative error of the declared partials against central differences."""
        ts = np.linspace(0.0, 1.0, 7) if ts is None else np.asarray(ts, float)
        xs = np.linspace(-2.0, 2.0, 9) if xs is None else np.asarray(xs, float)
        t, x = np.meshgrid(ts, xs, indexing="ij")
        h1, h2 = 1e-6, 1e-4
        fd_t = (self.phi(t + h1, x) - self.phi(t - h1, x)) / (2 * h1)
        fd_x = (self.phi(t, x + h1) - self.phi(t, x - h1)) / (2 * h1)
        fd_xx = (self.phi(t, x + h2) - 2 * self.phi(t, x) + self.phi(t, x - h2)) / h2**2
        worst = 0.0
        for fd, exact in ((fd_t, self.phi_t(t, x)), (fd_x, self.phi_x(t, x)), (fd_xx, self.phi_xx(t, x))):
            exact = np.broadcast_to(exact, fd.shape)
            err = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
            worst = max(worst, float(err.max()))
        return worst


def _zeros(t, x):
    return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(x)))


def _ones(t, x):
    return np.ones(np.broadcast_shapes(np.shape(t), np.shape(x)))


IDENTITY = TransformSpec("identity", lambda t, x: x + 0 * t, _zeros, _ones, _zeros, 0.0, 0.0)
SQUARE = TransformSpec("square", lambda t, x: x * x + 0 * t, _zeros, lambda t, x: 2 * x + 0 * t,
                       lambda t, x: 2 * _ones(t, x), 1.0, 0.0)
TIME_LINEAR = TransformSpec("time-linear", lambda t, x: t * x, lambda t, x: x + 0 * t,
                            lambda t, x: t + 0 * x, _zeros, 0.0, 1.0)


def translation(c: float) -> TransformSpec:
    return TransformSpec(f"shift{c:g}", lambda t, x: x + c + 0 * t, _zeros, _ones, _zeros, 0.0, 0.0)


TRANSFORMS = {"identity": IDENTITY, "square": SQUARE, "time-linear": TIME_LINEAR}


def get_transform(name: str) -> TransformSpec:
    if name.startswith("shift"):
        return translation(float(name[5:] or 0.0))
    try:
        return TRANSFORMS[name]
    except KeyError:
        raise ValueError(f"unknown transform {name!r}; known: {sorted(TRANSFORMS)} or shift<c>") from None


# ---------------------------------------------------------------------------
# Processes
# ---------------------------------------------------------------------------


@dataclass
class SetItoProcess:
    """``X_t = x0 + ∫ f dW + ∫ g ds`` with interval-valued ``f`` and ``g``."""

    x0: float
    f: SetValuedProcess
    g: SetValuedProcess


@dataclass
class SetPath:
    """Per-path, per-node interval hull plus (optionally) the member paths."""

    hull: Interval
    members: Optional[np.ndarray] = None  # (pairs, paths, steps + 1)
    pairs: list = field(default_factory=list)


@dataclass
class PairedFamilies:
    f: AdaptedSelectionFamily
    g: AdaptedSelectionFamily

    def pairs(self) -> list[tuple[int, int]]:
        return list(product(range(self.f.distinct_size()), range(self.g.distinct_size())))


def paired_families(proc: SetItoProcess, bundle: BrownianBundle, size: int, recipe: str = "mix",
                    seed: int = 0) -> PairedFamilies:
    # g's family gets its own stream so f and g mixtures are not coupled
    return PairedFamilies(build_selections(proc.f, bundle, size, recipe, seed),
                          build_selections(proc.g, bundle, size, recipe, seed + 1))


def euler_path(x0: float, fv: np.ndarray, gv: np.ndarray, bundle: BrownianBundle) -> np.ndarray:
    """``x_{k+1} = x_k + f_k ΔW_k + g_k Δt`` at every node."""
    steps = bundle.grid.steps
    inc = fv[:, :steps] * bundle.increments(0) + gv[:, :steps] * bundle.grid.dt
    x = np.empty((inc.shape[0], steps + 1))
    x[:, 0] = x0
    np.cumsum(inc, axis=1, out=x[:, 1:])
    x[:, 1:] += x0
    return x


def _hull_update(lo, hi, v):
    if lo is None:
        return v.copy(), v.copy()
    np.minimum(lo, v, out=lo)
    np.maximum(hi, v, out=hi)
    return lo, hi


def simulate_set_ito(proc: SetItoProcess, bundle: BrownianBundle, size: int, recipe: str = "mix",
                     seed: int = 0, keep_members: bool = True) -> SetPath:
    """Hull over selection pairs of the single-valued Euler paths."""
    fam = paired_families(proc, bundle, size, recipe, seed)
    lo = hi = None
    members = []
    pairs = fam.pairs()
    for d1, d2 in pairs:
        x = euler_path(proc.x0, fam.f.member(d1), fam.g.member(d2), bundle)
        lo, hi = _hull_update(lo, hi, x)
        if keep_members:
            members.append(x)
    return SetPath(Interval(lo, hi), np.stack(members) if keep_members else None, pairs)


def ito_lhs(phi: TransformSpec, X: SetPath, bundle: BrownianBundle) -> SetPath:
    """Image ``φ(t, X_t)`` as the hull of φ along the stored member paths."""
    if X.members is None:
        raise ValueError("the image needs the member paths; simulate with keep_members=True")
    t = bundle.grid.nodes[None, :]
    vals = np.stack([phi.phi(t, x) for x in X.members])
    return SetPath(Interval(vals.min(axis=0), vals.max(axis=0)), vals, X.pairs)


def classical_rhs(phi: TransformSpec, x0: float, x: np.ndarray, fv: np.ndarray, gv: np.ndarray,
                  bundle: BrownianBundle) -> np.ndarray:
    """Classical Itô expansion of ``φ(t, x_t)`` along one Euler path, left points."""
    grid = bundle.grid
    steps = grid.steps
    t = grid.nodes[None, :steps]
    xs, f, g = x[:, :steps], fv[:, :steps], gv[:, :steps]
    px = phi.phi_x(t, xs)
    drift = phi.phi_t(t, xs) + px * g + 0.5 * phi.phi_xx(t, xs) * f * f
    inc = px * f * bundle.increments(0) + drift * grid.dt
    out = np.empty((x.shape[0], steps + 1))
    out[:, 0] = phi.phi(0.0, np.asarray(x0, float))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    out[:, 1:] += out[:, :1]
    return out


def ito_rhs(phi: TransformSpec, proc: SetItoProcess, bundle: BrownianBundle, size: int,
            recipe: str = "mix", seed: int = 0, keep_members: bool = True) -> SetPath:
    """Hull over the same selection pairs of the classical Itô right-hand side."""
    fam = paired_families(proc, bundle, size, recipe, seed)
    lo = hi = None
    members = []
    pairs = fam.pairs()
    for d1, d2 in pairs:
        fv, gv = fam.f.member(d1), fam.g.member(d2)
        x = euler_path(proc.x0, fv, gv, bundle)
        r = classical_rhs(phi, proc.x0, x, fv, gv, bundle)
        lo, hi = _hull_update(lo, hi, r)
        if keep_members:
            members.append(r)
    return SetPath(Interval(lo, hi), np.stack(members) if keep_members else None, pairs)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

# fitted on singleton runs of φ = x²: RMS error ≈ √2·σ²·sqrt(T·Δt); the
# leading factor 4 is the frozen safety margin
THRESHOLD_A = 4.0 * np.sqrt(2.0)
THRESHOLD_B = 10.0


@dataclass
class ItoReport:
    """Per-node LHS/RHS Hausdorff statistics across paths."""

    phi: str
    max_hausdorff: np.ndarray  # (steps + 1,) worst path
    rms_hausdorff: np.ndarray  # (steps + 1,) root-mean-square over paths
    threshold: float
    calibrated: bool
    lhs: Optional[Interval] = None
    rhs: Optional[Interval] = None

    @property
    def distance(self) -> float:
        """Gate statistic: worst node of the path-RMS distance."""
        return float(self.rms_hausdorff.max())

    @property
    def max_distance(self) -> float:
        return float(self.max_hausdorff.max())

    @property
    def passed(self) -> bool:
        return self.distance <= self.threshold

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node", "max_hausdorff", "rms_hausdorff", "threshold", "pass"])
            for k, (m, r) in enumerate(zip(self.max_hausdorff, self.rms_hausdorff)):
                w.writerow([k, repr(float(m)), repr(float(r)), repr(self.threshold), int(r <= self.threshold)])


def ito_threshold(phi: TransformSpec, proc: SetItoProcess, bundle: BrownianBundle,
                  eps_hull: float = HULL_TOL) -> float:
    """``a·sqrt(TΔt)·κ·‖f‖² + a·TΔt·τ·(‖f‖ + ‖g‖) + b·ε_hull``.

    ``κ`` and ``τ`` are the transform's curvature and cross-derivative bounds.
    Uncalibrated transforms get ``κ = τ = 1``.
    """
    T, dt = bundle.grid.horizon, bundle.grid.dt
    nf = float(np.max(proc.f.bound(bundle)))
    ng = float(np.max(proc.g.bound(bundle)))
    kappa = 1.0 if phi.curvature is None else phi.curvature
    tau = 1.0 if phi.cross is None else phi.cross
    return (THRESHOLD_A * np.sqrt(T * dt) * kappa * nf**2
            + THRESHOLD_A * T * dt * tau * (nf + ng) + THRESHOLD_B * eps_hull)


def verify_ito_formula(phi: TransformSpec, proc: SetItoProcess, bundle: BrownianBundle, size: int,
                       recipe: str = "mix", seed: int = 0, eps_hull: float = HULL_TOL,
                       keep_sets: bool = False) -> ItoReport:
    """Compare ``φ(t, X_t)`` with the set-valued Itô right-hand side.

    Streams over selection pairs keeping only running hulls, so memory is
    ``O(paths·steps)`` whatever the family size.
    """
    fam = paired_families(proc, bundle, size, recipe, seed)
    t = bundle.grid.nodes[None, :]
    llo = lhi = rlo = rhi = None
    for d1, d2 in fam.pairs():
        fv, gv = fam.f.member(d1), fam.g.member(d2)
        x = euler_path(proc.x0, fv, gv, bundle)
        llo, lhi = _hull_update(llo, lhi, phi.phi(t, x))
        rlo, rhi = _hull_update(rlo, rhi, classical_rhs(phi, proc.x0, x, fv, gv, bundle))
    lhs, rhs = Interval(llo, lhi), Interval(rlo, rhi)
    h = np.asarray(hausdorff_distance(lhs, rhs))
    return ItoReport(
        phi=phi.name,
        max_hausdorff=h.max(axis=0),
        rms_hausdorff=np.sqrt((h * h).mean(axis=0)),
        threshold=ito_threshold(phi, proc, bundle, eps_hull),
        calibrated=phi.calibrated,
        lhs=lhs if keep_sets else None,
        rhs=rhs if keep_sets else None,
    )


def closure_spot_check(phi: TransformSpec, X: SetPath, bundle: BrownianBundle, samples: int = 9) -> float:
    """Largest gap between φ of the hull and the hull of φ on member paths.

    The image of the hull is sampled at ``samples`` points per (path, node);
    for monotone or convex φ on intervals the gap is the part of the image
    missed by the members, which shrinks as the family grows.
    """
    t = bundle.grid.nodes[None, :]
    lam = np.linspace(0.0, 1.0, samples)
    pts = X.hull.lo[None] + lam[:, None, None] * (X.hull.hi - X.hull.lo)[None]
    img = phi.phi(t[None], pts)
    members = ito_lhs(phi, X, bundle).hull
    return float(np.asarray(hausdorff_distance(Interval(img.min(axis=0), img.max(axis=0)), members)).max())


# ---------------------------------------------------------------------------
# Square inclusion for backward-form processes
# ---------------------------------------------------------------------------

Driver = Callable[[np.ndarray, np.ndarray], np.ndarray]


def zero_driver(t, z):
    return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(z)))


@dataclass
class InclusionReport:
    """``X_t² + ∫_t^T Z² ds ⊆ x_T² + 2∫_t^T X f ds − 2∫_t^T X Z dW`` per node.

    ``excess`` is the directed excess of the LHS over the RHS per (path,
    node); ``gap`` the Hausdorff distance between the two sides, reported
    because inclusion need not be tight.
    """

    lhs: Interval
    rhs: Interval
    excess: np.ndarray
    gap: np.ndarray
    eps: float
    structural_ok: bool = True

    def path_ok(self, eps: Optional[float] = None) -> np.ndarray:
        eps = self.eps if eps is None else eps
        return np.all(self.excess <= eps, axis=1)

    def pass_fraction(self, eps: Optional[float] = None) -> float:
        return float(self.path_ok(eps).mean())

    def passed(self, fraction: float = 0.999, eps: Optional[float] = None) -> bool:
        return self.structural_ok and self.pass_fraction(eps) >= fraction


def _backward_sum(terms: np.ndarray) -> np.ndarray:
    """``out[:, k] = Σ_{j ≥ k} terms[:, j]`` at every node (zero at the last)."""
    out = np.zeros(terms.shape[:-1] + (terms.shape[-1] + 1,))
    out[..., :-1] = np.cumsum(terms[..., ::-1], axis=-1)[..., ::-1]
    return out


def verify_square_inclusion(x_T: SetValuedProcess, Z: SetValuedProcess, bundle: BrownianBundle,
                            driver: Driver = zero_driver, size: int = 16, recipe: str = "mix",
                            seed: int = 0, eps_k: float = 5.0, tol: float = HULL_TOL) -> InclusionReport:
    """Check the squared-process inclusion for ``X_t = x_T + ∫_t^T f ds ⊖ ∫_t^T Z dW``.

    ``x_T`` is read at the final node.  ``driver(t, z)`` acts on single-valued
    ``Z`` selections.  The set ``X_t`` is built with the Hukuhara difference
    of the two integral hulls; if that difference fails anywhere the report
    is flagged structurally invalid.  ``ε`` is ``eps_k`` times the largest
    per-node standard deviation over paths of the matched-selection residual.
    """
    grid = bundle.grid
    steps, dt = grid.steps, grid.dt
    t = grid.nodes[None, :steps]
    dW = bundle.increments(0)
    fx = build_selections(x_T, bundle, size, recipe, seed)
    fz = build_selections(Z, bundle, size, recipe, seed + 1)
    nx, nz = fx.distinct_size(), fz.distinct_size()

    # set-level X_t from the backward form
    ilo = ihi = flo = fhi = qlo = qhi = None
    zsel = []
    for d in range(nz):
        z = fz.member(d)[:, :steps]
        fz_d = driver(t, z)
        zsel.append((z, fz_d))
        ilo, ihi = _hull_update(ilo, ihi, _backward_sum(z * dW))
        flo, fhi = _hull_update(flo, fhi, _backward_sum(fz_d * dt))
        qlo, qhi = _hull_update(qlo, qhi, _backward_sum(z * z * dt))
    xT = fx.set_path[:, -1:]
    res = hukuhara_diff(Interval(xT.lo + flo, xT.hi + fhi), Interval(ilo, ihi), tol)
    X = res.set
    lhs = minkowski_sum(square_image(X), Interval(qlo, qhi))

    rlo = rhi = None
    band = 0.0
    for e in range(nx):
        xe = fx.member(e)[:, -1:]
        for z, fz_d in zsel:
            x = xe + _backward_sum(fz_d * dt) - _backward_sum(z * dW)
            xs = x[:, :steps]
            r = xe * xe + _backward_sum(2 * xs * fz_d * dt) - _backward_sum(2 * xs * z * dW)
            l = x * x + _backward_sum(z * z * dt)
            band = max(band, float((l - r).std(axis=0, ddof=1).max()))
            rlo, rhi = _hull_update(rlo, rhi, r)
    rhs = Interval(rlo, rhi)
    excess = np.maximum(0.0, np.maximum(rhs.lo - lhs.lo, lhs.hi - rhs.hi))
    gap = np.asarray(hausdorff_distance(lhs, rhs))
    # exact problems have zero spread; keep a hull-tolerance floor
    return InclusionReport(lhs, rhs, excess, gap, max(eps_k * band, 10 * tol), bool(res))
