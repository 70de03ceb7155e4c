"""Randomised checks of the Hukuhara/Minkowski algebra.

Triples are built so that every difference an identity mentions exists:
``A = B + C`` with random ``C`` guarantees ``A ⊖ B``.  Each identity is
evaluated on the whole batch at once and reported as its worst Hausdorff
error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .convex import (
    Box,
    Interval,
    hausdorff_distance,
    hukuhara_diff,
    is_translation,
    minkowski_sum,
    scalar_mul,
    set_norm,
)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    trials: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


class _Carrier:
    """Batched random sets of one kind (intervals, or boxes of one dimension)."""

    def __init__(self, rng: np.random.Generator, n: int, dim: int):
        self.rng, self.n, self.dim = rng, n, dim

    def _shape(self):
        return (self.n,) if self.dim == 0 else (self.n, self.dim)

    def random(self, scale: float = 1.0):
        c = self.rng.uniform(-scale, scale, self._shape())
        r = self.rng.uniform(0.0, scale, self._shape())
        return self.make(c - r, c + r)

    def point(self):
        c = self.rng.uniform(-1.0, 1.0, self._shape())
        return self.make(c, c.copy())

    def zero(self):
        z = np.zeros(self._shape())
        return self.make(z, z.copy())

    def make(self, lo, hi):
        return Interval(lo, hi) if self.dim == 0 else Box(lo, hi)


def _h(a, b) -> float:
    return float(np.max(hausdorff_distance(a, b)))


def _diff(a, b):
    res = hukuhara_diff(a, b, 1e-9)
    if not bool(res):
        raise AssertionError("constructed difference does not exist")
    return res.set


def _identities(car: _Carrier) -> dict[str, float]:
    """Worst error of every identity on one batch."""
    A, C, B1, C1, B2, D = (car.random() for _ in range(6))
    S = minkowski_sum
    out: dict[str, float] = {}
    # i: A ⊖ A = {0}, A ⊖ {0} = A
    out["L2.1(i) A-A=0"] = _h(_diff(A, A), car.zero())
    out["L2.1(i) A-0=A"] = _h(_diff(A, car.zero()), A)
    # ii: (A1+B1) ⊖ (A2+B2) = (A1⊖A2) + (B1⊖B2)
    A2, B2_ = car.random(), car.random()
    A1, Bb1 = S(A2, C), S(B2_, C1)
    out["L2.1(ii) sum-diff"] = _h(_diff(S(A1, Bb1), S(A2, B2_)), S(_diff(A1, A2), _diff(Bb1, B2_)))
    # iii: (A1+B1) ⊖ B2 = A1 + (B1⊖B2) = (A1⊖B2) + B1, with B1 = B2 + C1, A1 = B2 + C
    A1, Bb1 = S(B2, C), S(B2, C1)
    lhs = _diff(S(A1, Bb1), B2)
    out["L2.1(iii) left"] = _h(lhs, S(A1, _diff(Bb1, B2)))
    out["L2.1(iii) right"] = _h(lhs, S(_diff(A1, B2), Bb1))
    # iv: A1 + (B1⊖B2) = (A1⊖B2) + B1
    out["L2.1(iv) exchange"] = _h(S(A1, _diff(Bb1, B2)), S(_diff(A1, B2), Bb1))
    # v: A = B + (A ⊖ B)
    Av = S(B1, C)
    out["L2.1(v) reconstitute"] = _h(S(B1, _diff(Av, B1)), Av)
    # Lemma 2.2 (i): A⊖C exists ⇒ (A+B)⊖C exists; (ii) A⊖B = (A⊖C) + (C⊖B)
    Cc = car.random()
    Ai = S(Cc, C1)
    res = hukuhara_diff(S(Ai, D), Cc, 1e-9)
    out["L2.2(i) existence"] = 0.0 if bool(res) else float("inf")
    Bm = car.random()
    Cm = S(Bm, C1)
    Am = S(Cm, C)
    out["L2.2(ii) chain"] = _h(_diff(Am, Bm), S(_diff(Am, Cm), _diff(Cm, Bm)))
    # cancellation: A + C = B + C ⇒ A = B
    X, Y = car.random(), car.random()
    out["cancellation"] = _h(_diff(S(X, Y), Y), X)
    # Lemma 2.4: norm axioms and ‖A⊖B‖ = h(A, B)
    n_sum = np.asarray(set_norm(S(X, Y))) - np.asarray(set_norm(X)) - np.asarray(set_norm(Y))
    out["L2.4(i) triangle"] = float(max(np.max(n_sum), 0.0))
    lam = car.rng.uniform(-3.0, 3.0, car.n)
    n_scale = np.asarray(set_norm(scalar_mul(lam, X))) - np.abs(lam) * np.asarray(set_norm(X))
    out["L2.4(i) homogeneity"] = float(np.max(np.abs(n_scale)))
    out["L2.4(ii) norm=h"] = float(np.max(np.abs(np.asarray(set_norm(_diff(Av, B1))) - hausdorff_distance(Av, B1))))
    # iii: both differences exist iff one set is a translate of the other
    P = car.point()
    T1 = S(X, P)
    t_err = 0.0 if is_translation(T1, X) is not None else float("inf")
    wider = S(X, car.random())
    both = bool(hukuhara_diff(wider, X, 1e-9)) and bool(hukuhara_diff(X, wider, 1e-9))
    trans = is_translation(wider, X) is not None
    if both != trans:
        t_err = float("inf")
    if t_err == 0.0:
        t_err = _h(_diff(T1, X), P)
    out["L2.4(iii) translation"] = t_err
    return out


def algebra_suite(interval_trials: int = 100_000, box_trials: int = 10_000, seed: int = 0,
                  tol: float = 1e-12, max_dim: int = 4) -> list[PropertyResult]:
    """All identities on ``interval_trials`` interval and ``box_trials`` box triples.

    Box trials are split evenly over dimensions ``2..max_dim`` (dimension 1
    boxes are covered by the interval batch).
    """
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    counts: dict[str, int] = {}

    def absorb(prefix: str, car: _Carrier):
        for k, v in _identities(car).items():
            key = f"{prefix} {k}"
            worst[key] = max(worst.get(key, 0.0), v)
            counts[key] = counts.get(key, 0) + car.n

    if interval_trials:
        absorb("interval", _Carrier(rng, interval_trials, 0))
    dims = list(range(2, max_dim + 1))
    for i, d in enumerate(dims):
        n = box_trials // len(dims) + (1 if i < box_trials % len(dims) else 0)
        if n:
            absorb("box", _Carrier(rng, n, d))
    return [PropertyResult(k, counts[k], worst[k], tol) for k in worst]


def write_properties(path: str | Path, results: list[PropertyResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["property", "trials", "max_error", "tolerance", "pass"])
        for r in results:
            w.writerow([r.name, r.trials, repr(r.max_error), repr(r.tolerance), int(r.passed)])


# ---------------------------------------------------------------------------
# Erosion oracle
# ---------------------------------------------------------------------------


def _lattice_pairs(rng: np.random.Generator, n: int, dim: int, step: float, half: int):
    """Endpoints on the lattice ``step * Z`` inside ``[-half*step, half*step]``."""
    def draw():
        a = rng.integers(-half, half + 1, (n, dim))
        b = rng.integers(-half, half + 1, (n, dim))
        return np.minimum(a, b) * step, np.maximum(a, b) * step

    return draw(), draw()


def brute_force_erosion_nonempty(A_lo, A_hi, B_lo, B_hi, step: float, half: int) -> np.ndarray:
    """Whether some lattice ``x`` has ``x + B ⊆ A``, by exhaustive enumeration.

    Candidates ``x`` run over the lattice on ``[-2R, 2R]^d``; ``x + B ⊆ A`` is
    checked on every lattice point of ``B``.  With lattice endpoints the
    erosion, when nonempty, always contains a lattice point, so the search
    is exact.
    """
    n, dim = A_lo.shape
    ticks = np.arange(-2 * half, 2 * half + 1) * step
    cands = np.stack(np.meshgrid(*([ticks] * dim), indexing="ij"), -1).reshape(-1, dim)
    found = np.zeros(n, dtype=bool)
    offs = np.arange(0, 2 * half + 1) * step
    bgrid = np.stack(np.meshgrid(*([offs] * dim), indexing="ij"), -1).reshape(-1, dim)
    eps = 1e-9
    for i in range(n):
        width = B_hi[i] - B_lo[i]
        pts = B_lo[i] + bgrid[np.all(bgrid <= width + eps, axis=1)]  # lattice points of B
        # x + p in A for every p: need x >= A_lo - min(p), x <= A_hi - max(p) pointwise over pts
        shifted = cands[:, None, :] + pts[None, :, :]
        inside = np.all((shifted >= A_lo[i] - eps) & (shifted <= A_hi[i] + eps), axis=(1, 2))
        found[i] = bool(inside.any())
    return found


@dataclass(frozen=True)
class ErosionCertificate:
    pairs: int
    agreements: int
    exists_count: int

    @property
    def agreement(self) -> float:
        return self.agreements / self.pairs if self.pairs else 1.0

    @property
    def passed(self) -> bool:
        return self.agreements == self.pairs


def erosion_certificate(pairs: int = 10_000, seed: int = 0, step: float = 0.25, half: int = 4) -> ErosionCertificate:
    """Agreement of Hukuhara existence with the brute-force erosion oracle.

    Half the pairs are intervals, half 2-D boxes.
    """
    rng = np.random.default_rng(seed)
    n1 = pairs // 2
    agree = exists = 0
    for dim, n in ((1, n1), (2, pairs - n1)):
        (alo, ahi), (blo, bhi) = _lattice_pairs(rng, n, dim, step, half)
        oracle = brute_force_erosion_nonempty(alo, ahi, blo, bhi, step, half)
        if dim == 1:
            verdict = np.asarray(hukuhara_diff(Interval(alo[:, 0], ahi[:, 0]), Interval(blo[:, 0], bhi[:, 0])).exists)
        else:
            verdict = np.asarray(hukuhara_diff(Box(alo, ahi), Box(blo, bhi)).exists)
        agree += int(np.count_nonzero(verdict == oracle))
        exists += int(np.count_nonzero(verdict))
    return ErosionCertificate(pairs, agree, exists)

