"""Picard iteration for interval-valued backward stochastic differential equations.

Solves ``Y_t = ξ + ∫_t^T f(s, Y_s, Z_s) ds ⊖ ∫_t^T Z_s dW_s`` on a time grid
with one-dimensional Brownian motion.  Conditional expectations are least
squares regressions on Hermite polynomials of ``W_t / sqrt(t)``; sets are
regressed through their midpoint and radius so the result is always a valid
interval.  ``Z`` is recovered from the martingale increments as
``E[ΔM ΔW | F_k] / Δt``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermevander

from .convex import Interval, hausdorff_distance, hukuhara_diff, scalar_mul, set_norm
from .integrals import HULL_TOL
from .stochastic import BrownianBundle, mc_band

EXISTENCE_TOL = 10 * HULL_TOL


class ExistenceError(RuntimeError):
    """A Hukuhara difference between successive iterates failed numerically."""


class DriverAuditError(ValueError):
    """The driver broke the difference-preservation or Lipschitz assumption."""


# ---------------------------------------------------------------------------
# Problem data
# ---------------------------------------------------------------------------

_TERMINAL_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": lambda w: np.zeros_like(w),
    "identity": lambda w: w,
    "square": lambda w: w * w,
    "sin": np.sin,
}


@dataclass(frozen=True)
class TerminalCondition:
    """``ξ = {scale * g(W_T)} + [alpha, beta]`` with a named ``g``."""

    g: str = "zero"
    alpha: float = 0.0
    beta: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.g not in _TERMINAL_FUNCS:
            raise ValueError(f"unknown terminal function {self.g!r}; known: {sorted(_TERMINAL_FUNCS)}")
        if self.alpha > self.beta:
            raise ValueError("terminal interval needs alpha <= beta")

    def __call__(self, W_T: np.ndarray) -> Interval:
        c = self.scale * _TERMINAL_FUNCS[self.g](np.asarray(W_T, float))
        return Interval(c + self.alpha, c + self.beta)


class Driver:
    """Base class: ``f(t, Y, Z)`` acting on per-path intervals."""

    lipschitz: float = 0.0
    arity: str = "none"
    name: str = "driver"

    def __call__(self, t: float, Y: Interval, Z: Interval) -> Interval:
        raise NotImplementedError

    def params(self) -> dict:
        return {}


class ZeroDriver(Driver):
    name = "zero"

    def __call__(self, t, Y, Z):
        z = np.zeros(np.shape(Y.lo))
        return Interval(z, z)


@dataclass
class ConstantDriver(Driver):
    """``f ≡ [c1, c2]``."""

    c1: float = 0.0
    c2: float = 0.0
    name = "constant"

    def __call__(self, t, Y, Z):
        shape = np.shape(Y.lo)
        return Interval(np.full(shape, float(self.c1)), np.full(shape, float(self.c2)))

    def params(self):
        return {"c1": self.c1, "c2": self.c2}


@dataclass
class LinearDriver(Driver):
    """``f = a·Y + b·Z + [c1, c2]``, Lipschitz constant ``max(|a|, |b|)``.

    With ``a = 0`` the driver depends on ``Z`` only.
    """

    a: float = 0.0
    b: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    name = "linear"

    def __post_init__(self):
        if self.c1 > self.c2:
            raise ValueError("linear driver needs c1 <= c2")

    @property
    def lipschitz(self) -> float:  # type: ignore[override]
        return max(abs(self.a), abs(self.b))

    @property
    def arity(self) -> str:  # type: ignore[override]
        if self.a == 0.0:
            return "Z" if self.b != 0.0 else "none"
        return "YZ"

    def __call__(self, t, Y, Z):
        aY = scalar_mul(self.a, Y)
        bZ = scalar_mul(self.b, Z)
        return Interval(aY.lo + bZ.lo + self.c1, aY.hi + bZ.hi + self.c2)

    def params(self):
        return {"a": self.a, "b": self.b, "c1": self.c1, "c2": self.c2}


DRIVERS = {"zero": ZeroDriver, "constant": ConstantDriver, "linear": LinearDriver}


def make_driver(name: str, **params) -> Driver:
    try:
        cls = DRIVERS[name]
    except KeyError:
        raise ValueError(f"unknown driver {name!r}; known: {sorted(DRIVERS)}") from None
    return cls(**params)


def audit_driver(driver: Driver, samples: int = 512, seed: int = 0, tol: float = EXISTENCE_TOL) -> float:
    """Spot-check the driver assumptions on random interval pairs.

    Pairs ``(Y1, Y2)`` and ``(Z1, Z2)`` are drawn with existing differences;
    the outputs must have an existing difference and satisfy
    ``‖f1 ⊖ f2‖ ≤ c (‖Y1 ⊖ Y2‖ + ‖Z1 ⊖ Z2‖)``.  Returns the worst observed
    ratio of the two sides; raises :class:`DriverAuditError` on a violation.
    """
    rng = np.random.default_rng(seed)
    Y2 = Interval.from_mid_rad(rng.normal(size=samples), rng.uniform(0, 1, samples))
    Z2 = Interval.from_mid_rad(rng.normal(size=samples), rng.uniform(0, 1, samples))
    dY = Interval.from_mid_rad(rng.normal(size=samples), rng.uniform(0, 1, samples))
    dZ = Interval.from_mid_rad(rng.normal(size=samples), rng.uniform(0, 1, samples))
    Y1, Z1 = Y2 + dY, Z2 + dZ
    t = float(rng.uniform())
    out = hukuhara_diff(driver(t, Y1, Z1), driver(t, Y2, Z2), tol)
    if not bool(out):
        raise DriverAuditError(f"driver {driver.name!r} does not preserve Hukuhara differences")
    lhs = np.asarray(set_norm(out.set))
    rhs = driver.lipschitz * (np.asarray(set_norm(dY)) + np.asarray(set_norm(dZ)))
    if np.any(lhs > rhs + tol):
        raise DriverAuditError(f"driver {driver.name!r} exceeds its declared Lipschitz constant")
    return float(np.max(lhs / np.maximum(rhs, 1e-300)))


@dataclass
class SVBSDEProblem:
    """Terminal condition, driver and horizon of an interval-valued BSDE."""

    xi: Callable[[np.ndarray], Interval]
    driver: Driver
    horizon: float = 1.0

    @property
    def lipschitz(self) -> float:
        return self.driver.lipschitz

    @property
    def arity(self) -> str:
        return self.driver.arity


# ---------------------------------------------------------------------------
# Filtration and conditional expectation
# ---------------------------------------------------------------------------


class DiscreteFiltration:
    """Regression features ``He_j(W_{t_k} / sqrt(t_k))``, ``j ≤ degree``, per node.

    The intercept is never penalised, so set-valued inputs that do not vary
    across paths are reproduced exactly.  At ``t_0 = 0`` only the intercept
    is used.  Nodes whose normal matrix is ill-conditioned get a larger
    ridge and are recorded in :attr:`flags`.
    """

    def __init__(self, bundle: BrownianBundle, degree: int = 3, ridge: float = 1e-8, cond_limit: float = 1e10):
        if degree < 0:
            raise ValueError("degree must be >= 0")
        self.bundle = bundle
        self.degree = int(degree)
        self.ridge = float(ridge)
        self.cond_limit = cond_limit
        self.flags: list[str] = []
        self._W = bundle.W(0)
        self._solvers: dict[int, np.ndarray] = {}
        self._features: dict[int, np.ndarray] = {}

    @property
    def paths(self) -> int:
        return self._W.shape[0]

    def features(self, k: int) -> np.ndarray:
        """Basis at node ``k``; only uses ``W_{t_k}``, hence adapted."""
        if k not in self._features:
            t = self.bundle.grid.nodes[k]
            if k == 0 or self.degree == 0:
                self._features[k] = np.ones((self.paths, 1))
            else:
                self._features[k] = hermevander(self._W[:, k] / math.sqrt(t), self.degree)
        return self._features[k]

    def _solver(self, k: int) -> np.ndarray:
        if k not in self._solvers:
            phi = self.features(k)
            G = phi.T @ phi / self.paths
            pen = np.eye(G.shape[0]) * self.ridge
            pen[0, 0] = 0.0
            if np.linalg.cond(G + pen) > self.cond_limit:
                pen = np.eye(G.shape[0]) * max(self.ridge, 1e-6)
                pen[0, 0] = 0.0
                self.flags.append(f"node {k}: rank-deficient basis, ridge raised to {pen[1, 1]:g}")
            self._solvers[k] = np.linalg.inv(G + pen)
        return self._solvers[k]

    def _increment_solver(self, k: int) -> np.ndarray:
        key = -1 - k
        if key not in self._solvers:
            D = self.increment_design(k)
            G = D.T @ D / self.paths
            pen = np.eye(G.shape[0]) * self.ridge
            pen[0, 0] = 0.0
            self._solvers[key] = np.linalg.inv(G + pen)
        return self._solvers[key]

    def increment_design(self, k: int) -> np.ndarray:
        """``[φ(W_k), φ(W_k) ΔW_k / sqrt(Δt)]`` for the increment over step ``k``."""
        phi = self.features(k)
        dw = self.bundle.increments(0)[:, k] / math.sqrt(self.bundle.grid.dt)
        return np.hstack([phi, phi * dw[:, None]])

    def increment_slope(self, k: int, y: np.ndarray) -> np.ndarray:
        """``Z_k`` with ``y ≈ a(W_k) + Z_k(W_k) ΔW_k`` in the least-squares sense.

        Equals ``E[y ΔW_k | F_k] / Δt`` for an exact projection, but the
        joint fit does not carry the sampling noise of ``ΔW_k²``.
        """
        D = self.increment_design(k)
        beta = self._increment_solver(k) @ (D.T @ y) / self.paths
        d = D.shape[1] // 2
        return self.features(k) @ beta[d:] / math.sqrt(self.bundle.grid.dt)

    def project(self, k: int, y: np.ndarray) -> np.ndarray:
        """``E[y | F_k]`` for one or more targets of shape ``(paths[, r])``."""
        phi = self.features(k)
        beta = self._solver(k) @ (phi.T @ y) / self.paths
        return phi @ beta


def conditional_expectation_set(A: Interval, filt: DiscreteFiltration, k: int) -> Interval:
    """Per-path interval ``E[A | F_k]`` via midpoint and radius regression."""
    y = np.stack([np.broadcast_to(A.mid, (filt.paths,)), np.broadcast_to(A.rad, (filt.paths,))], axis=1)
    p = filt.project(k, y)
    return Interval.from_mid_rad(p[:, 0], np.maximum(p[:, 1], 0.0))


@dataclass
class RepresentationResult:
    Z: Interval  # (paths, steps)
    martingale_defect: float  # worst node RMS of E[M_{k+1}|F_k] - M_k (Hausdorff)


def martingale_representation_extract(M: Interval, bundle: BrownianBundle, filt: DiscreteFiltration,
                                      tol: Optional[float] = None) -> RepresentationResult:
    """``Z_k = E[ΔM_k ΔW_k | F_k] / Δt`` computed for midpoint and radius.

    The conditional covariance is estimated by regressing ``ΔM_k`` on the
    basis and on the basis times ``ΔW_k`` jointly.

    When ``tol`` is given the martingale property of ``M`` is audited first
    and a :class:`ValueError` is raised if it fails by more than ``tol``.
    """
    steps, dt = bundle.grid.steps, bundle.grid.dt
    dW = bundle.increments(0)
    defect = 0.0
    if tol is not None:
        for k in range(steps):
            ce = conditional_expectation_set(M[:, k + 1], filt, k)
            h = np.asarray(hausdorff_distance(ce, M[:, k]))
            defect = max(defect, float(np.sqrt((h * h).mean())))
        if defect > tol:
            raise ValueError(f"input is not a set martingale: defect {defect:.3g} > {tol:.3g}")
    dmid = np.diff(np.asarray(M.mid), axis=1)
    drad = np.diff(np.asarray(M.rad), axis=1)
    return RepresentationResult(_z_from_increments(dmid, drad, dW, dt, filt), defect)


def _z_from_increments(dmid, drad, dW, dt, filt) -> Interval:
    steps = dW.shape[1]
    # time-major copies keep the per-node slices contiguous
    tm = np.ascontiguousarray(np.stack([dmid, drad]).transpose(2, 1, 0))
    zm = np.empty((steps, dW.shape[0]))
    zr = np.empty_like(zm)
    for k in range(steps):
        p = filt.increment_slope(k, tm[k])
        zm[k], zr[k] = p[:, 0], p[:, 1]
    # the radius increment may regress to either sign; the set is its hull
    return Interval.from_mid_rad(zm.T, np.abs(zr.T))


# ---------------------------------------------------------------------------
# Picard iteration
# ---------------------------------------------------------------------------


def _backward_cumsum(terms: np.ndarray) -> np.ndarray:
    out = np.zeros(terms.shape[:-1] + (terms.shape[-1] + 1,))
    out[..., :-1] = np.cumsum(terms[..., ::-1], axis=-1)[..., ::-1]
    return out


def terminal_value(problem: SVBSDEProblem, bundle: BrownianBundle) -> Interval:
    xi = problem.xi(bundle.W(0)[:, -1])
    shape = (bundle.paths,)
    return Interval(np.broadcast_to(np.asarray(xi.lo, float), shape).copy(),
                    np.broadcast_to(np.asarray(xi.hi, float), shape).copy())


def driver_path(problem: SVBSDEProblem, bundle: BrownianBundle, Y: Interval, Z: Interval) -> Interval:
    """Driver evaluated at steps ``0..N-1`` on the given iterates."""
    steps = bundle.grid.steps
    t = bundle.grid.nodes[None, :steps]
    return problem.driver(t, Y[:, :steps], Z)


def picard_step(prev: tuple[Interval, Interval], problem: SVBSDEProblem, bundle: BrownianBundle,
                filt: DiscreteFiltration, scheme: str = "one-step") -> tuple[Interval, Interval]:
    """One sweep ``X_k = E[ξ + Σ_{j≥k} f_j Δt | F_k]`` plus the matching ``Z``.

    ``one-step`` evaluates the conditional expectation through the tower
    property, ``X_k = E[X_{k+1} + f_k Δt | F_k]``, which has far smaller
    regression variance near ``t = 0``.  ``multi-step`` regresses the whole
    future sum at every node.  Both target the same quantity.
    """
    if scheme not in ("one-step", "multi-step"):
        raise ValueError(f"unknown scheme {scheme!r}")
    Yp, Zp = prev
    grid = bundle.grid
    steps, dt = grid.steps, grid.dt
    xi = terminal_value(problem, bundle)
    f = driver_path(problem, bundle, Yp, Zp)
    fm = np.broadcast_to(np.asarray(f.mid) * dt, (bundle.paths, steps))
    fr = np.broadcast_to(np.asarray(f.rad) * dt, (bundle.paths, steps))
    fmT, frT = np.ascontiguousarray(fm.T), np.ascontiguousarray(fr.T)
    xm = np.empty((steps + 1, bundle.paths))
    xr = np.empty_like(xm)
    xm[steps], xr[steps] = xi.mid, xi.rad
    if scheme == "multi-step":
        Smid = np.ascontiguousarray((xi.mid[:, None] + _backward_cumsum(fm)).T)
        Srad = np.ascontiguousarray((xi.rad[:, None] + _backward_cumsum(fr)).T)
    target = np.empty((bundle.paths, 2))
    for k in range(steps - 1, -1, -1):
        if scheme == "multi-step":
            target[:, 0], target[:, 1] = Smid[k], Srad[k]
        else:
            target[:, 0], target[:, 1] = xm[k + 1] + fmT[k], xr[k + 1] + frT[k]
        p = filt.project(k, target)
        xm[k], xr[k] = p[:, 0], np.maximum(p[:, 1], 0.0)
    xm, xr = xm.T, xr.T
    # martingale increments of E[ξ + Σ f Δt | F_k] = X_k + Σ_{j<k} f_j Δt
    dmid = np.diff(xm, axis=1) + fm
    drad = np.diff(xr, axis=1) + fr
    Z = _z_from_increments(dmid, drad, bundle.increments(0), dt, filt)
    return Interval.from_mid_rad(xm, xr), Z


def _sq_norm_integral(A: Interval, B: Interval, dt: float, steps: int, tol: float) -> tuple[float, float, bool]:
    """``(Ê Σ_{k<N} ‖A ⊖ B‖² Δt, sup-node RMS of ‖A ⊖ B‖, exists)``."""
    res = hukuhara_diff(A, B, tol)
    n = np.asarray(set_norm(res.set)) if bool(res) else np.asarray(hausdorff_distance(A, B))
    n2 = n * n
    return float(n2[:, :steps].sum(axis=1).mean() * dt), float(np.sqrt(n2.mean(axis=0)).max()), bool(res)


def envelope_41(p: int, cbar: float, c: float, T: float) -> float:
    """Bound on ``u_{p+1}(0)``: ``2^{-p} c̄ e^{2c²T}``."""
    return 2.0**-p * cbar * math.exp(2 * c * c * T)


def envelope_42(p: int, c1: float, c2: float, c: float, T: float) -> float:
    """Bound on ``u_{p+1}(0)``: ``T(c1+c2)/2^{p-1} Σ_{k=1}^p (e^{4c²T})^k / k!``."""
    q = math.exp(4 * c * c * T)
    return T * (c1 + c2) / 2.0 ** (p - 1) * sum(q**k / math.factorial(k) for k in range(1, p + 1))


@dataclass
class PicardReport:
    """Iteration history, envelopes and diagnostics of one solve.

    ``u[i]``/``v[i]`` belong to iterate ``p = i + 1``.  Ratios are ``nan``
    where the previous distance is below the noise floor.
    """

    u: list[float]
    v: list[float]
    sup_u: list[float]
    sup_v: list[float]
    Y: Interval
    Z: Interval
    verdict: str
    lipschitz: float
    horizon: float
    arity: str
    residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    telescoping: Optional[float] = None
    martingale_defect: Optional[float] = None
    flags: list[str] = field(default_factory=list)
    iterates: Optional[list] = None
    ratio_floor: float = 1e-24

    @property
    def iterations(self) -> int:
        return len(self.u)

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    def _ratios(self, xs):
        out = [math.nan]
        for a, b in zip(xs[:-1], xs[1:]):
            out.append(b / a if a > self.ratio_floor else math.nan)
        return out

    @property
    def ratio_u(self) -> list[float]:
        return self._ratios(self.u)

    @property
    def ratio_v(self) -> list[float]:
        return self._ratios(self.v)

    @property
    def cbar(self) -> float:
        return self.v[0] if self.v else 0.0

    def envelope(self, which: Optional[str] = None) -> list[float]:
        """Envelope per iterate ``p + 1`` (``nan`` for the first iterate)."""
        which = which or ("42" if self.arity == "YZ" else "41")
        c, T = self.lipschitz, self.horizon
        out = [math.nan]
        for q in range(2, self.iterations + 1):
            p = q - 1
            if which == "41":
                out.append(envelope_41(p, self.cbar, c, T))
            else:
                out.append(envelope_42(p, self.v[0], self.u[0], c, T))
        return out

    @property
    def max_residual(self) -> float:
        return float(self.residual.max()) if self.residual.size else 0.0

    def write_csv(self, path: str | Path) -> None:
        env = self.envelope()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "u_p", "v_p", "ratio_u", "ratio_v", "envelope"])
            for i, row in enumerate(zip(self.u, self.v, self.ratio_u, self.ratio_v, env)):
                w.writerow([i + 1] + [repr(float(x)) for x in row])

    def write_solution(self, path: str | Path, paths: Optional[int] = None) -> None:
        """``node,path,y_lo,y_hi,z_lo,z_hi``; ``z`` is ``nan`` at the last node."""
        M, N1 = self.Y.lo.shape
        m = M if paths is None else min(M, paths)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node", "path", "y_lo", "y_hi", "z_lo", "z_hi"])
            for k in range(N1):
                for i in range(m):
                    zl = self.Z.lo[i, k] if k < N1 - 1 else math.nan
                    zh = self.Z.hi[i, k] if k < N1 - 1 else math.nan
                    w.writerow([k, i, repr(float(self.Y.lo[i, k])), repr(float(self.Y.hi[i, k])),
                                repr(float(zl)), repr(float(zh))])


def zero_start(bundle: BrownianBundle) -> tuple[Interval, Interval]:
    M, N = bundle.paths, bundle.grid.steps
    return Interval(np.zeros((M, N + 1)), np.zeros((M, N + 1))), Interval(np.zeros((M, N)), np.zeros((M, N)))


def fixed_point_residual(problem: SVBSDEProblem, bundle: BrownianBundle, Y: Interval, Z: Interval) -> np.ndarray:
    """Per-node RMS over paths of ``h(Y_k + Σ_{j≥k} Z_j ΔW_j, ξ + Σ_{j≥k} f_j Δt)``.

    The stochastic integral is the hull of the endpoint-selection integrals.
    """
    dt = bundle.grid.dt
    dW = bundle.increments(0)
    xi = terminal_value(problem, bundle)
    f = driver_path(problem, bundle, Y, Z)
    flo = np.broadcast_to(np.asarray(f.lo) * dt, dW.shape)
    fhi = np.broadcast_to(np.asarray(f.hi) * dt, dW.shape)
    rhs = Interval(xi.lo[:, None] + _backward_cumsum(flo), xi.hi[:, None] + _backward_cumsum(fhi))
    a, b = _backward_cumsum(Z.lo * dW), _backward_cumsum(Z.hi * dW)
    lhs = Interval(Y.lo + np.minimum(a, b), Y.hi + np.maximum(a, b))
    h = np.asarray(hausdorff_distance(lhs, rhs))
    return np.sqrt((h * h).mean(axis=0))


def martingale_check(Z: Interval, bundle: BrownianBundle, filt: DiscreteFiltration) -> float:
    """RMS gap between ``E[∫_0^T z dW | F_s]`` and ``∫_0^s z dW`` at ``s = T/2``.

    Evaluated for both endpoint selections of ``Z``.
    """
    dW = bundle.increments(0)
    s = bundle.grid.steps // 2
    worst = 0.0
    for z in (Z.lo, Z.hi):
        full = (z * dW).sum(axis=1)
        part = (z[:, :s] * dW[:, :s]).sum(axis=1)
        gap = filt.project(s, full) - part
        worst = max(worst, float(np.sqrt((gap * gap).mean())))
    return worst


def telescoping_check(Ys: Sequence[Interval], dt: float, tol: float = EXISTENCE_TOL) -> float:
    """Largest violation of ``‖X^q ⊖ X^p‖ ≤ Σ_r ‖X^{r+1} ⊖ X^r‖`` (L² in time, mean over paths)."""
    def norm(a, b):
        res = hukuhara_diff(a, b, tol)
        if not bool(res):
            return math.inf
        n = np.asarray(set_norm(res.set))
        return math.sqrt(float((n * n).sum(axis=1).mean() * dt))

    steps = [norm(Ys[r + 1], Ys[r]) for r in range(len(Ys) - 1)]
    worst = -math.inf
    for p in range(len(Ys)):
        for q in range(p + 1, len(Ys)):
            worst = max(worst, norm(Ys[q], Ys[p]) - sum(steps[p:q]))
    return worst if worst > -math.inf else 0.0


def solve_svbsde(problem: SVBSDEProblem, bundle: BrownianBundle, filt: Optional[DiscreteFiltration] = None,
                 max_iter: int = 30, tol: float = 1e-6, init: Optional[tuple[Interval, Interval]] = None,
                 existence_tol: float = EXISTENCE_TOL, keep_iterates: bool = False,
                 audit: bool = True, scheme: str = "one-step") -> PicardReport:
    """Picard iteration from ``X⁰ = Z⁰ = {0}`` (or ``init``).

    Stops once ``max(u_p, v_p) ≤ tol²`` and the worst-node RMS distance
    between successive iterates is at most ``tol``.  Verdicts:
    ``converged``, ``max-iter`` and ``existence-failure`` (a difference of
    successive iterates does not exist; refine the grid, e.g. double N).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    filt = filt or DiscreteFiltration(bundle)
    flags: list[str] = []
    if audit:
        audit_driver(problem.driver)
    dt, steps = bundle.grid.dt, bundle.grid.steps
    Y, Z = init if init is not None else zero_start(bundle)
    iterates = [(Y, Z)] if keep_iterates else None
    us, vs, su, sv = [], [], [], []
    verdict = "max-iter"
    for _ in range(max_iter):
        Yn, Zn = picard_step((Y, Z), problem, bundle, filt, scheme)
        u, sup_u, ok_y = _sq_norm_integral(Yn, Y, dt, steps, existence_tol)
        v, sup_v, ok_z = _sq_norm_integral(Zn, Z, dt, steps, existence_tol)
        us.append(u)
        vs.append(v)
        su.append(sup_u)
        sv.append(sup_v)
        Y, Z = Yn, Zn
        if keep_iterates:
            iterates.append((Y, Z))
        if not (ok_y and ok_z):
            which = "Y" if not ok_y else "Z"
            flags.append(f"iterate {len(us)}: {which} difference does not exist; try doubling the steps")
            verdict = "existence-failure"
            break
        if max(u, v) <= tol * tol and max(sup_u, sup_v) <= tol:
            verdict = "converged"
            break
    flags.extend(filt.flags)
    report = PicardReport(us, vs, su, sv, Y, Z, verdict, problem.lipschitz, bundle.grid.horizon,
                          problem.arity, flags=flags, iterates=iterates)
    report.residual = fixed_point_residual(problem, bundle, Y, Z)
    report.martingale_defect = martingale_check(Z, bundle, filt)
    if keep_iterates and len(iterates) > 1:
        report.telescoping = telescoping_check([it[0] for it in iterates[1:]], dt, existence_tol)
    return report


# ---------------------------------------------------------------------------
# Uniqueness and the classical oracle
# ---------------------------------------------------------------------------


@dataclass
class UniquenessReport:
    y_distance: np.ndarray  # pairwise sup-node RMS distance, (n, n)
    z_distance: np.ndarray
    verdicts: list[str]
    bound: float

    @property
    def conclusive(self) -> bool:
        return all(v == "converged" for v in self.verdicts)

    @property
    def max_distance(self) -> float:
        return float(max(self.y_distance.max(), self.z_distance.max()))

    @property
    def verdict(self) -> str:
        if not self.conclusive:
            return "inconclusive"
        return "pass" if self.max_distance <= self.bound else "fail"


def _sup_node_rms(A: Interval, B: Interval) -> float:
    h = np.asarray(hausdorff_distance(A, B))
    return float(np.sqrt((h * h).mean(axis=0)).max())


def constant_start(bundle: BrownianBundle, y: float = 0.0, z: float = 0.0) -> tuple[Interval, Interval]:
    Y0, Z0 = zero_start(bundle)
    return Interval(Y0.lo + y, Y0.hi + y), Interval(Z0.lo + z, Z0.hi + z)


def brownian_start(bundle: BrownianBundle) -> tuple[Interval, Interval]:
    """Nonzero singleton start ``X⁰ = {W_t}``, ``Z⁰ = {1}``."""
    W = bundle.W(0)
    Z0 = np.ones((bundle.paths, bundle.grid.steps))
    return Interval(W, W.copy()), Interval(Z0, Z0.copy())


def uniqueness_probe(problem: SVBSDEProblem, bundle: BrownianBundle, filt: Optional[DiscreteFiltration] = None,
                     inits: Sequence[tuple[Interval, Interval]] = (), max_iter: int = 40, tol: float = 1e-6,
                     factor: float = 2.0) -> UniquenessReport:
    """Solve from several starts and compare the limits pairwise."""
    if len(inits) < 2:
        raise ValueError("uniqueness probe needs at least two initialisations")
    filt = filt or DiscreteFiltration(bundle)
    reps = [solve_svbsde(problem, bundle, filt, max_iter, tol, init=i) for i in inits]
    n = len(reps)
    dy, dz = np.zeros((n, n)), np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dy[i, j] = dy[j, i] = _sup_node_rms(reps[i].Y, reps[j].Y)
            dz[i, j] = dz[j, i] = _sup_node_rms(reps[i].Z, reps[j].Z)
    return UniquenessReport(dy, dz, [r.verdict for r in reps], factor * tol)


def scalar_bsde_backward_euler(g: Callable[[np.ndarray], np.ndarray],
                               f: Callable[[float, np.ndarray, np.ndarray], np.ndarray],
                               W: np.ndarray, dt: float, degree: int = 3,
                               picard: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Classical scalar BSDE by one-step implicit backward Euler and LSMC.

    ``y_k = E[y_{k+1} | F_k] + f(t_k, y_k, z_k) Δt`` with
    ``z_k = E[y_{k+1} ΔW_k | F_k] / Δt``; the implicit equation in ``y_k``
    is solved by a few fixed-point sweeps.  Regression uses plain monomials
    of ``W_{t_k}`` solved with ``numpy.linalg.lstsq``.  Returns ``(y, z)``
    of shapes ``(paths, steps + 1)`` and ``(paths, steps)``.
    """
    M, N1 = W.shape
    steps = N1 - 1
    y = np.empty((M, N1))
    z = np.empty((M, steps))
    y[:, -1] = g(W[:, -1])
    for k in range(steps - 1, -1, -1):
        X = np.vander(W[:, k], degree + 1) if k > 0 else np.ones((M, 1))
        dW = W[:, k + 1] - W[:, k]

        def ce(target):
            coef, *_ = np.linalg.lstsq(X, target, rcond=None)
            return X @ coef

        z[:, k] = ce(y[:, k + 1] * dW) / dt
        ey = ce(y[:, k + 1])
        yk = ey.copy()
        for _ in range(picard):
            yk = ey + f(k * dt, yk, z[:, k]) * dt
        y[:, k] = yk
    return y, z


def mc_interval_band(values: np.ndarray) -> float:
    """Standard error of a per-path sample mean."""
    return float(mc_band(np.asarray(values, float)))
