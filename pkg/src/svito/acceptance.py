"""The canned acceptance suite.

Every criterion returns a :class:`CriterionResult` holding its verdict, the
measured quantities as ``(key, value)`` rows and its wall-clock runtime.
``scale="full"`` uses the published problem sizes; ``scale="quick"`` shrinks
them for smoke runs and determinism checks (verdicts at quick scale are
informative only).
"""

from __future__ import annotations

import csv
import filecmp
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import bsde as B
from .convex import Interval, hausdorff_distance
from .integrals import REPORT_HEADER, set_integral, setvalued_isometry_check
from .ito import SQUARE, SetItoProcess, verify_ito_formula, verify_square_inclusion
from .properties import algebra_suite, erosion_certificate, write_properties
from .selections import SetValuedProcess
from .stochastic import TimeGrid, generate_brownian, ito_integral, lebesgue_integral, mc_band

SCALES = ("full", "quick")


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    rows: list[tuple[str, float]] = field(default_factory=list)
    runtime: float = 0.0
    limit: Optional[float] = None
    status: str = ""

    @property
    def within_time(self) -> bool:
        return self.limit is None or self.runtime <= self.limit

    @property
    def verdict(self) -> str:
        if self.status:
            return self.status
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        head = ", ".join(f"{k}={_fmt(v)}" for k, v in self.rows[:6])
        lim = f" <= {self.limit:g}s" if self.limit is not None else ""
        timing = f"runtime {self.runtime:.1f}s{lim}" + ("" if self.within_time else " EXCEEDED")
        return f"[{self.verdict}] criterion {self.number:2d} {self.name}: {head} ({timing})"


def _fmt(v) -> str:
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _const(a: float, b: float) -> SetValuedProcess:
    return SetValuedProcess.constant(Interval(a, b))


def _sup_node_rms(a: Interval, b: Interval) -> float:
    h = np.asarray(hausdorff_distance(a, b))
    return float(np.sqrt((h * h).mean(axis=0)).max())


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def c01_algebra(seed: int, scale: str, out: Optional[Path] = None) -> CriterionResult:
    n_int, n_box = (100_000, 10_000) if scale == "full" else (5_000, 1_000)
    res = algebra_suite(n_int, n_box, seed)
    if out is not None:
        write_properties(out / "c01_algebra.csv", res)
    worst = max(r.max_error for r in res)
    rows = [("max_error", worst), ("tolerance", 1e-12), ("interval_trials", n_int), ("box_trials", n_box),
            ("properties", len(res)), ("failing", sum(not r.passed for r in res))]
    return CriterionResult(1, "hukuhara-algebra", all(r.passed for r in res), rows, limit=10.0)


def c02_erosion(seed: int, scale: str, out=None) -> CriterionResult:
    pairs = 10_000 if scale == "full" else 1_000
    cert = erosion_certificate(pairs, seed)
    rows = [("agreement", cert.agreement), ("pairs", cert.pairs), ("exists", cert.exists_count)]
    return CriterionResult(2, "erosion-certificate", cert.passed, rows, limit=30.0)


def c03_classical_isometry(seed: int, scale: str, out=None) -> CriterionResult:
    M, N = (100_000, 256) if scale == "full" else (4_000, 64)
    b = generate_brownian(TimeGrid(1.0, N), M, seed=seed)
    W = b.W(0)
    t = b.grid.nodes[None, :]
    integrands = {"constant": np.ones((1, N + 1)), "time": t, "sin(W)": np.sin(W)}
    ok = True
    rows = []
    for name, phi in integrands.items():
        phi = np.broadcast_to(phi, W.shape)
        I = ito_integral(phi, b.increments(0))
        Q = lebesgue_integral(phi * phi, b.grid)
        gap = abs(float((I * I - Q).mean()))
        band = float(mc_band(I * I - Q))
        mean = abs(float(I.mean()))
        mband = float(mc_band(I))
        ok &= gap <= 5 * band and mean <= 5 * mband
        rows += [(f"{name}.gap", gap), (f"{name}.5band", 5 * band), (f"{name}.mean", mean), (f"{name}.5mband", 5 * mband)]
    return CriterionResult(3, "classical-isometry", bool(ok), rows, limit=60.0)


def c04_set_isometry(seed: int, scale: str, out=None) -> CriterionResult:
    M, N = (100_000, 64) if scale == "full" else (4_000, 32)
    b = generate_brownian(TimeGrid(1.0, N), M, seed=seed)
    ok = True
    rows, reports = [], []
    for (a, c), expected in (((0.0, 1.0), Interval(0.0, 1.0)), ((1.0, 2.0), Interval(1.0, 4.0))):
        rep = setvalued_isometry_check(_const(a, c), b, size=16, seed=seed)
        reports.append(rep)
        tol = rep.tolerance()
        d_exp = max(float(hausdorff_distance(rep.lhs, expected)), float(hausdorff_distance(rep.rhs, expected)))
        ok &= rep.passed() and d_exp <= tol
        tag = f"[{a:g},{c:g}]"
        rows += [(f"{tag}.distance", rep.distance), (f"{tag}.tolerance", tol), (f"{tag}.to_expected", d_exp),
                 (f"{tag}.mean", rep.mean_distance), (f"{tag}.5mband", 5 * rep.mean_band),
                 (f"{tag}.lhs_lo", float(rep.lhs.lo)), (f"{tag}.lhs_hi", float(rep.lhs.hi))]
    if out is not None:
        with open(out / "c04_isometry.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_HEADER)
            for rep in reports:
                w.writerows(rep.rows(N))
    return CriterionResult(4, "set-isometry", bool(ok), rows, limit=120.0)


def c05_ito_formula(seed: int, scale: str, out=None) -> CriterionResult:
    full = scale == "full"
    rows = []
    # (a) singletons against an independent classical computation
    M, N, sigma, x0 = (10_000, 256, 0.8, 0.5) if full else (2_000, 64, 0.8, 0.5)
    b = generate_brownian(TimeGrid(1.0, N), M, seed=seed)
    rep = verify_ito_formula(SQUARE, SetItoProcess(x0, _const(sigma, sigma), _const(0.0, 0.0)), b, 8,
                             seed=seed, keep_sets=True)
    h_set = np.asarray(hausdorff_distance(rep.lhs, rep.rhs))
    W = b.W(0)
    x = x0 + sigma * W
    stoch = np.zeros_like(W)
    stoch[:, 1:] = np.cumsum(2 * sigma * x[:, :-1] * b.increments(0), axis=1)
    rhs = x0 * x0 + stoch + sigma**2 * b.grid.nodes[None, :]
    d_oracle = np.abs(x * x - rhs)
    gap = abs(float(h_set[:, -1].mean() - d_oracle[:, -1].mean()))
    band = float(mc_band(d_oracle[:, -1]))
    ok_a = gap <= 5 * band
    rows += [("a.gap", gap), ("a.5band", 5 * band), ("a.max_path_diff", float(np.abs(h_set - d_oracle).max()))]

    # (b) interval diffusion, K = 8 against a K = 64 oracle hull
    Mb, Nb = (2_000, 1024) if full else (500, 128)
    f = _const(0.5, 1.0)
    proc = SetItoProcess(0.0, f, _const(0.0, 0.0))
    bb = generate_brownian(TimeGrid(1.0, Nb), Mb, seed=seed + 1)
    r8 = verify_ito_formula(SQUARE, proc, bb, 8, seed=seed, keep_sets=True)
    r64 = verify_ito_formula(SQUARE, proc, bb, 64, seed=seed, keep_sets=True)
    # the oracle is the K = 64 distance; raw hulls of different family sizes are reported, not gated
    oracle_gap = abs(r8.distance - r64.distance)
    if out is not None:
        r8.write_csv(out / "c05_ito_K8.csv")
        r64.write_csv(out / "c05_ito_K64.csv")
    ok_b = r8.passed and r64.passed and oracle_gap <= r8.threshold
    rows += [("b.distance", r8.distance), ("b.threshold", r8.threshold), ("b.K64_distance", r64.distance),
             ("b.oracle_gap", oracle_gap), ("b.lhs_K8_vs_K64", _sup_node_rms(r8.lhs, r64.lhs))]

    # (c) refinement trend over three grid levels and three seeds
    levels = (64, 256, 1024) if full else (16, 64, 256)
    Mt = 2_000 if full else 300
    ok_c = True
    for s in range(3):
        ds = []
        for n in levels:
            bt = generate_brownian(TimeGrid(1.0, n), Mt, seed=seed + 10 + s)
            ds.append(verify_ito_formula(SQUARE, proc, bt, 8, seed=seed + s).distance)
        ok_c &= all(x > y for x, y in zip(ds, ds[1:]))
        rows += [(f"c.seed{s}.N{n}", d) for n, d in zip(levels, ds)]
    rows += [("a.pass", int(ok_a)), ("b.pass", int(ok_b)), ("c.pass", int(ok_c))]
    rows.insert(0, ("parts_passed", int(ok_a) + int(ok_b) + int(ok_c)))
    return CriterionResult(5, "set-ito-formula", bool(ok_a and ok_b and ok_c), rows, limit=300.0)


def c06_square_inclusion(seed: int, scale: str, out=None) -> CriterionResult:
    M, N = (10_000, 256) if scale == "full" else (1_000, 64)
    b = generate_brownian(TimeGrid(1.0, N), M, seed=seed)
    problems = {
        "zero": (_const(0.0, 1.0), _const(0.0, 0.0)),
        "singleton": (_const(0.7, 0.7), _const(0.5, 0.5)),
        "unit-Z": (_const(0.0, 1.0), _const(1.0, 1.0)),
    }
    ok = True
    rows = []
    for name, (xT, Z) in problems.items():
        rep = verify_square_inclusion(xT, Z, b, seed=seed)
        frac = rep.pass_fraction()
        ok &= rep.passed(0.999)
        rows += [(f"{name}.fraction", frac), (f"{name}.eps", rep.eps), (f"{name}.max_excess", float(rep.excess.max())),
                 (f"{name}.max_gap", float(rep.gap.max())), (f"{name}.structural", int(rep.structural_ok))]
    rows.sort(key=lambda r: not r[0].endswith("fraction"))
    return CriterionResult(6, "square-inclusion", bool(ok), rows, limit=120.0)


def c07_bsde_closed_forms(seed: int, scale: str, out=None) -> CriterionResult:
    M, N = (20_000, 256) if scale == "full" else (2_000, 32)
    b = generate_brownian(TimeGrid(1.0, N), M, seed=seed)
    filt = B.DiscreteFiltration(b, degree=3)
    W = b.W(0)
    rep = B.solve_svbsde(B.SVBSDEProblem(B.TerminalCondition("identity", 0.0, 1.0), B.ZeroDriver()), b, filt)
    ey = _sup_node_rms(rep.Y, Interval(W, W + 1.0))
    ez = _sup_node_rms(rep.Z, Interval(np.ones_like(rep.Z.lo), np.ones_like(rep.Z.lo)))
    alpha, beta, c1, c2 = 0.5, 1.5, -0.2, 0.3
    rep2 = B.solve_svbsde(B.SVBSDEProblem(B.TerminalCondition("zero", alpha, beta), B.ConstantDriver(c1, c2)), b, filt)
    tau = 1.0 - b.grid.nodes[None, :]
    ed = float(max(np.abs(rep2.Y.lo - (alpha + c1 * tau)).max(), np.abs(rep2.Y.hi - (beta + c2 * tau)).max()))
    if out is not None:
        rep.write_csv(out / "c07_picard.csv")
        rep.write_solution(out / "c07_solution.csv", paths=16)
    ok = rep.converged and rep.iterations <= 2 and ey <= 0.05 and ez <= 0.05 and rep2.converged and ed <= 1e-3
    rows = [("Y_error", ey), ("Z_error", ez), ("deterministic_error", ed), ("iterations", rep.iterations),
            ("deterministic_iterations", rep2.iterations)]
    return CriterionResult(7, "bsde-closed-forms", bool(ok), rows, limit=180.0)


def _contraction_problems():
    xi = B.TerminalCondition("sin", 0.0, 1.0)
    return {
        "Z-only": B.SVBSDEProblem(xi, B.LinearDriver(0.0, 0.25, 0.0, 0.1)),
        "YZ": B.SVBSDEProblem(xi, B.LinearDriver(0.25, 0.25, 0.0, 0.1)),
    }


def c08_contraction(seed: int, scale: str, out=None) -> CriterionResult:
    M, N = (10_000, 128) if scale == "full" else (1_000, 32)
    ok = True
    worst_ratio, worst_env = 0.0, 0.0
    rows = []
    for s in range(3):
        b = generate_brownian(TimeGrid(1.0, N), M, seed=seed + s)
        filt = B.DiscreteFiltration(b)
        for name, prob in _contraction_problems().items():
            rep = B.solve_svbsde(prob, b, filt)
            if out is not None:
                rep.write_csv(out / f"c08_picard_seed{s}_{name}.csv")
            ratios = [r for r in (rep.ratio_u[2:] + rep.ratio_v[2:]) if not math.isnan(r)]
            r_max = max(ratios, default=0.0)
            which = "41" if prob.arity == "Z" else "42"
            env = rep.envelope(which)
            env_ratio = max((u / e for u, e in zip(rep.u[1:], env[1:]) if e > 0), default=0.0)
            ok &= rep.converged and r_max <= 0.75 and env_ratio <= 4.0
            worst_ratio = max(worst_ratio, r_max)
            worst_env = max(worst_env, env_ratio)
            rows += [(f"seed{s}.{name}.max_ratio", r_max), (f"seed{s}.{name}.u_over_envelope", env_ratio),
                     (f"seed{s}.{name}.iterations", rep.iterations)]
    rows = [("max_ratio", worst_ratio), ("max_u_over_envelope", worst_env)] + rows
    return CriterionResult(8, "picard-contraction", bool(ok), rows, limit=300.0)


def c09_uniqueness(seed: int, scale: str, out=None) -> CriterionResult:
    M, N = (10_000, 128) if scale == "full" else (1_000, 32)
    b = generate_brownian(TimeGrid(1.0, N), M, seed=seed)
    prob = _contraction_problems()["YZ"]
    inits = [B.zero_start(b), B.constant_start(b, 1.0), B.brownian_start(b)]
    rep = B.uniqueness_probe(prob, b, inits=inits, tol=1e-6)
    rows = [("max_distance", rep.max_distance), ("bound", rep.bound), ("conclusive", int(rep.conclusive))]
    status = "INCONCLUSIVE" if not rep.conclusive else ""
    return CriterionResult(9, "uniqueness-probe", rep.verdict == "pass", rows, limit=300.0, status=status)


def c10_singleton(seed: int, scale: str, out=None) -> CriterionResult:
    M, N = (10_000, 128) if scale == "full" else (1_000, 32)
    b = generate_brownian(TimeGrid(1.0, N), M, seed=seed)
    W = b.W(0)
    rows = []
    # integrals: singleton state process {sin W_t}
    proc = SetValuedProcess.state(lambda t, w: Interval(np.sin(w), np.sin(w)))
    e_dt = float(np.abs(np.asarray(set_integral(proc, b, kind="dt", size=2).set.lo)
                        - lebesgue_integral(np.sin(W), b.grid)).max())
    I = set_integral(proc, b, kind="dW", size=2).set
    classical = ito_integral(np.sin(W), b.increments(0))
    e_dw = float(max(np.abs(I.lo - classical).max(), np.abs(I.hi - classical).max()))
    # Itô pipeline
    rep = verify_ito_formula(SQUARE, SetItoProcess(0.3, _const(0.6, 0.6), _const(0.1, 0.1)), b, 4, keep_sets=True)
    x = 0.3 + 0.6 * W + 0.1 * b.grid.nodes[None, :]
    e_ito = float(max(np.abs(rep.lhs.lo - x * x).max(), np.abs(rep.lhs.hi - x * x).max(),
                      np.asarray(rep.rhs.hi - rep.rhs.lo).max()))
    # BSDE against the standalone backward Euler scheme
    a_, b_, c_ = 0.25, 0.25, 0.1
    prob = B.SVBSDEProblem(B.TerminalCondition("sin", 0.0, 0.0), B.LinearDriver(a_, b_, c_, c_))
    sol = B.solve_svbsde(prob, b)
    width = float(np.asarray(sol.Y.hi - sol.Y.lo).max())
    y, z = B.scalar_bsde_backward_euler(np.sin, lambda t, yy, zz: a_ * yy + b_ * zz + c_, W, b.grid.dt)
    band = float(mc_band(np.sin(W[:, -1])))
    e_y0 = abs(float(sol.Y.lo[0, 0]) - float(y[0, 0]))
    mid = N // 2
    e_ymid = abs(float(sol.Y.lo[:, mid].mean()) - float(y[:, mid].mean()))
    e_z = float(np.sqrt(((sol.Z.lo - z) ** 2).mean()))
    ok = max(e_dt, e_dw, e_ito, width) <= 1e-12 and e_y0 <= 5 * band and e_ymid <= 5 * band
    rows += [("max_deterministic_error", max(e_dt, e_dw, e_ito, width)), ("bsde_Y0_gap", e_y0),
             ("bsde_Ymid_gap", e_ymid), ("5band", 5 * band), ("dt_integral", e_dt), ("dW_integral", e_dw),
             ("ito", e_ito), ("bsde_width", width), ("bsde_Z_rms_gap", e_z)]
    return CriterionResult(10, "singleton-degeneration", bool(ok), rows)


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: c01_algebra, 2: c02_erosion, 3: c03_classical_isometry, 4: c04_set_isometry, 5: c05_ito_formula,
    6: c06_square_inclusion, 7: c07_bsde_closed_forms, 8: c08_contraction, 9: c09_uniqueness, 10: c10_singleton,
}


def run_criterion(number: int, seed: int = 7, scale: str = "full", out: Optional[Path] = None) -> CriterionResult:
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    if number == 11:
        return c11_determinism(seed, scale)
    t0 = time.perf_counter()
    res = CRITERIA[number](seed + 1000 * number, scale, out)
    res.runtime = time.perf_counter() - t0
    return res


def write_results(out: Path, results: list[CriterionResult]) -> None:
    """``summary.csv`` and ``details.csv``; runtimes are deliberately left out."""
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "name", "verdict"])
        for r in results:
            w.writerow([r.number, r.name, r.verdict])
    with open(out / "details.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "key", "value"])
        for r in results:
            for k, v in r.rows:
                w.writerow([r.number, k, repr(float(v)) if isinstance(v, float) else v])


def run_suite(out: Path, seed: int = 7, scale: str = "full", only=None, echo=print) -> list[CriterionResult]:
    """Run the selected criteria, write CSVs under ``out`` and echo one line each."""
    out.mkdir(parents=True, exist_ok=True)
    numbers = sorted(only) if only else list(range(1, 12))
    results = []
    for n in numbers:
        res = run_criterion(n, seed, scale, out)
        if echo:
            echo(res.line())
        results.append(res)
    write_results(out, results)
    return results


def _trees_identical(a: Path, b: Path) -> tuple[bool, int]:
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    if files_a != files_b:
        return False, len(files_a)
    same = all(filecmp.cmp(a / f, b / f, shallow=False) for f in files_a)
    return same, len(files_a)


def c11_determinism(seed: int, scale: str = "full") -> CriterionResult:
    """Run criteria 1-10 twice at ``scale`` and compare the output trees byte by byte."""
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        a, c = Path(tmp, "a"), Path(tmp, "b")
        run_suite(a, seed, scale, range(1, 11), echo=None)
        run_suite(c, seed, scale, range(1, 11), echo=None)
        same, n = _trees_identical(a, c)
    res = CriterionResult(11, "determinism", same, [("identical", int(same)), ("files", n)])
    res.runtime = time.perf_counter() - t0
    return res


def threads_from_env() -> Optional[int]:
    v = os.environ.get("SVITO_THREADS")
    return int(v) if v else None
