"""Compact convex sets and their Minkowski/Hukuhara algebra.

Three carriers are supported:

* :class:`Interval` -- a closed interval ``[lo, hi]`` of the real line.
* :class:`Box` -- an axis-aligned box, ``lo``/``hi`` carry the coordinates
  on their last axis.
* :class:`SupportSet` -- a polytope given by support values on a fixed
  direction grid shared by every set it interacts with.

``Interval`` and ``Box`` accept array-valued endpoints: leading axes act as
batch axes (one set per path, per time node, ...) and every operation is
applied elementwise over them.  Per-path set-valued processes are therefore
plain ``Interval`` objects whose endpoints have shape ``(paths, nodes)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

DEFAULT_TOL = 1e-9


class StructureError(ValueError):
    """Operands have different carriers, dimensions or direction grids."""


class UnsupportedOperation(ValueError):
    """The carrier cannot represent the requested result."""


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# Interval
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Interval:
    """Closed interval ``[lo, hi]``; endpoints may be arrays of equal shape."""

    lo: ArrayLike
    hi: ArrayLike

    def __post_init__(self):
        lo, hi = np.broadcast_arrays(_arr(self.lo), _arr(self.hi))
        if np.any(lo > hi):
            raise ValueError("interval endpoints must satisfy lo <= hi")
        object.__setattr__(self, "lo", lo if lo.ndim else float(lo))
        object.__setattr__(self, "hi", hi if hi.ndim else float(hi))

    @classmethod
    def point(cls, c: ArrayLike) -> "Interval":
        return cls(c, c)

    @classmethod
    def zero(cls) -> "Interval":
        return cls(0.0, 0.0)

    @classmethod
    def hull(cls, points: ArrayLike, axis: int = 0) -> "Interval":
        """Smallest interval containing ``points`` along ``axis``."""
        p = _arr(points)
        return cls(p.min(axis=axis), p.max(axis=axis))

    @classmethod
    def from_mid_rad(cls, mid: ArrayLike, rad: ArrayLike) -> "Interval":
        mid, rad = _arr(mid), _arr(rad)
        return cls(mid - rad, mid + rad)

    @property
    def dim(self) -> int:
        return 1

    @property
    def shape(self) -> tuple:
        return np.shape(self.lo)

    @property
    def width(self) -> ArrayLike:
        return _arr(self.hi) - _arr(self.lo)

    @property
    def mid(self) -> ArrayLike:
        return 0.5 * (_arr(self.lo) + _arr(self.hi))

    @property
    def rad(self) -> ArrayLike:
        return 0.5 * self.width

    def is_singleton(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.width <= tol))

    def contains(self, x: ArrayLike, tol: float = 0.0):
        x = _arr(x)
        return (x >= _arr(self.lo) - tol) & (x <= _arr(self.hi) + tol)

    def __getitem__(self, idx) -> "Interval":
        return Interval(_arr(self.lo)[idx], _arr(self.hi)[idx])

    def __add__(self, other):
        return minkowski_sum(self, other)

    def __rmul__(self, alpha):
        return scalar_mul(alpha, self)

    def __repr__(self):
        if np.ndim(self.lo) == 0:
            return f"Interval([{self.lo!r}, {self.hi!r}])"
        return f"Interval(shape={self.shape})"


# ---------------------------------------------------------------------------
# Box
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box; the last axis of ``lo``/``hi`` indexes coordinates."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = np.broadcast_arrays(_arr(self.lo), _arr(self.hi))
        if lo.ndim == 0:
            raise ValueError("Box needs at least one coordinate axis")
        if np.any(lo > hi):
            raise ValueError("box bounds must satisfy lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, c) -> "Box":
        c = _arr(c)
        return cls(c, c)

    @classmethod
    def zero(cls, n: int) -> "Box":
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def hull(cls, points, axis: int = 0) -> "Box":
        """Bounding box of ``points``; ``axis`` indexes the points."""
        p = _arr(points)
        return cls(p.min(axis=axis), p.max(axis=axis))

    @property
    def dim(self) -> int:
        return self.lo.shape[-1]

    @property
    def shape(self) -> tuple:
        return self.lo.shape[:-1]

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def is_singleton(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.width <= tol))

    def contains(self, x, tol: float = 0.0):
        x = _arr(x)
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=-1)

    def vertices(self) -> np.ndarray:
        """All ``2**n`` corners, shape ``(2**n, *batch, n)``."""
        n = self.dim
        signs = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
        return np.where(signs.reshape((2**n,) + (1,) * len(self.shape) + (n,)), self.hi, self.lo)

    def __getitem__(self, idx) -> "Box":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Box(self.lo[idx + (Ellipsis,)], self.hi[idx + (Ellipsis,)])

    def __add__(self, other):
        return minkowski_sum(self, other)

    def __rmul__(self, alpha):
        return scalar_mul(alpha, self)

    def __repr__(self):
        if self.lo.ndim == 1:
            parts = "x".join(f"[{a!r},{b!r}]" for a, b in zip(self.lo.tolist(), self.hi.tolist()))
            return f"Box({parts})"
        return f"Box(shape={self.shape}, dim={self.dim})"


# ---------------------------------------------------------------------------
# Support-sampled polytopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirectionGrid:
    """Ordered set of unit directions shared by interacting support sets."""

    directions: np.ndarray
    _neg_index: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        d = _arr(self.directions)
        if d.ndim != 2 or len(d) == 0:
            raise ValueError("directions must be a non-empty (m, n) array")
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)
        # index of -d_j in the grid, or -1
        match = np.abs(d @ (-d).T - 1.0) < 1e-12
        neg = np.where(match.any(axis=1), match.argmax(axis=1), -1)
        object.__setattr__(self, "_neg_index", neg)

    @classmethod
    def circle(cls, m: int) -> "DirectionGrid":
        """``m`` equally spaced directions in the plane (symmetric when m is even)."""
        theta = 2 * np.pi * np.arange(m) / m
        return cls(np.column_stack([np.cos(theta), np.sin(theta)]))

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def size(self) -> int:
        return self.directions.shape[0]

    @property
    def symmetric(self) -> bool:
        return bool(np.all(self._neg_index >= 0))

    def negation_index(self) -> np.ndarray:
        return self._neg_index


@dataclass(frozen=True, eq=False)
class SupportSet:
    """Polytope ``{x : <x, d_j> <= h_j}`` on a shared direction grid.

    ``h`` may carry leading batch axes; the last axis indexes directions.
    """

    grid: DirectionGrid
    h: np.ndarray

    def __post_init__(self):
        h = _arr(self.h)
        if h.shape[-1:] != (self.grid.size,):
            raise ValueError("support vector length must match the direction grid")
        object.__setattr__(self, "h", h)

    @classmethod
    def from_points(cls, grid: DirectionGrid, points) -> "SupportSet":
        """Support values of the convex hull of ``points`` (shape ``(k, n)``)."""
        p = _arr(points)
        return cls(grid, (p @ grid.directions.T).max(axis=0))

    @classmethod
    def from_box(cls, grid: DirectionGrid, box: Box) -> "SupportSet":
        return cls.from_points(grid, box.vertices())

    @classmethod
    def zero(cls, grid: DirectionGrid) -> "SupportSet":
        return cls(grid, np.zeros(grid.size))

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def shape(self) -> tuple:
        return self.h.shape[:-1]

    def is_singleton(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.width() <= tol))

    def width(self) -> np.ndarray:
        """Width along every direction that has its negative on the grid."""
        neg = self.grid.negation_index()
        ok = neg >= 0
        w = self.h[..., ok] + self.h[..., neg[ok]]
        return w

    def support_point(self, j: int) -> np.ndarray:
        """A point of the polytope maximising ``<x, d_j>`` (unbatched only)."""
        if self.h.ndim != 1:
            raise UnsupportedOperation("support_point works on unbatched sets")
        return _lp_argmax(self.grid.directions, self.h, self.grid.directions[j])

    def tighten(self) -> "SupportSet":
        """Replace each support value by the polytope's true support value."""
        if self.h.ndim != 1:
            return SupportSet(self.grid, np.stack([SupportSet(self.grid, row).tighten().h for row in self.h.reshape(-1, self.grid.size)]).reshape(self.h.shape))
        d = self.grid.directions
        out = np.empty_like(self.h)
        for j in range(len(d)):
            x = _lp_argmax(d, self.h, d[j])
            if x is None:
                raise UnsupportedOperation("support values describe an empty polytope")
            out[j] = x @ d[j]
        return SupportSet(self.grid, out)

    def __add__(self, other):
        return minkowski_sum(self, other)

    def __rmul__(self, alpha):
        return scalar_mul(alpha, self)

    def __repr__(self):
        return f"SupportSet(m={self.grid.size}, shape={self.shape})"


def _lp_argmax(d: np.ndarray, h: np.ndarray, c: np.ndarray) -> Optional[np.ndarray]:
    from scipy.optimize import linprog

    res = linprog(-c, A_ub=d, b_ub=h, bounds=[(None, None)] * d.shape[1], method="highs")
    if res.status == 2:
        return None
    if res.status != 0:
        raise UnsupportedOperation(f"support LP failed: {res.message}")
    return res.x


ConvexSet = Union[Interval, Box, SupportSet]


def _check_compatible(a: ConvexSet, b: ConvexSet) -> None:
    if type(a) is not type(b):
        raise StructureError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if isinstance(a, Box) and a.dim != b.dim:
        raise StructureError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if isinstance(a, SupportSet) and a.grid is not b.grid:
        if a.grid.size != b.grid.size or not np.array_equal(a.grid.directions, b.grid.directions):
            raise StructureError("support sets live on different direction grids")


# ---------------------------------------------------------------------------
# Algebra
# ---------------------------------------------------------------------------


def minkowski_sum(a: ConvexSet, b: ConvexSet) -> ConvexSet:
    """``A + B = {a + b}``; endpoint or support-value addition."""
    _check_compatible(a, b)
    if isinstance(a, Interval):
        return Interval(_arr(a.lo) + _arr(b.lo), _arr(a.hi) + _arr(b.hi))
    if isinstance(a, Box):
        return Box(a.lo + b.lo, a.hi + b.hi)
    return SupportSet(a.grid, a.h + b.h)


def scalar_mul(alpha: ArrayLike, a: ConvexSet) -> ConvexSet:
    """``alpha * A``; negative factors reflect the set.

    For interval and box carriers ``alpha`` may be an array broadcasting
    against the batch shape.
    """
    if isinstance(a, Interval):
        al = _arr(alpha)
        x, y = al * _arr(a.lo), al * _arr(a.hi)
        return Interval(np.minimum(x, y), np.maximum(x, y))
    if isinstance(a, Box):
        al = _arr(alpha)[..., None]
        x, y = al * a.lo, al * a.hi
        return Box(np.minimum(x, y), np.maximum(x, y))
    alpha = float(alpha)
    if alpha >= 0:
        return SupportSet(a.grid, alpha * a.h)
    if not a.grid.symmetric:
        raise UnsupportedOperation("negative scaling needs a symmetric direction grid")
    return SupportSet(a.grid, -alpha * a.h[..., a.grid.negation_index()])


def square_image(a: Interval) -> Interval:
    """``{x**2 : x in A}`` -- the image set, not the squared endpoints."""
    lo, hi = _arr(a.lo), _arr(a.hi)
    lo2, hi2 = lo * lo, hi * hi
    straddle = (lo <= 0) & (hi >= 0)
    return Interval(np.where(straddle, 0.0, np.minimum(lo2, hi2)), np.maximum(lo2, hi2))


def hausdorff_distance(a: ConvexSet, b: ConvexSet) -> ArrayLike:
    """Euclidean Hausdorff distance (grid-relative for support sets)."""
    _check_compatible(a, b)
    if isinstance(a, Interval):
        return np.maximum(np.abs(_arr(a.lo) - _arr(b.lo)), np.abs(_arr(a.hi) - _arr(b.hi)))
    if isinstance(a, Box):
        # sup over unit u of |s_A(u) - s_B(u)|, split by sign pattern
        up = a.hi - b.hi
        dn = a.lo - b.lo
        g1 = np.maximum(np.maximum(up, -dn), 0.0)
        g2 = np.maximum(np.maximum(-up, dn), 0.0)
        return np.maximum(np.sqrt((g1**2).sum(-1)), np.sqrt((g2**2).sum(-1)))
    return np.abs(a.h - b.h).max(axis=-1)


def set_norm(a: ConvexSet) -> ArrayLike:
    """``||A|| = sup_{x in A} |x| = h(A, {0})``."""
    if isinstance(a, Interval):
        return np.maximum(np.abs(_arr(a.lo)), np.abs(_arr(a.hi)))
    if isinstance(a, Box):
        return np.sqrt((np.maximum(np.abs(a.lo), np.abs(a.hi)) ** 2).sum(-1))
    return np.maximum(a.h, 0.0).max(axis=-1)


def zero_like(a: ConvexSet) -> ConvexSet:
    if isinstance(a, Interval):
        return Interval.zero()
    if isinstance(a, Box):
        return Box.zero(a.dim)
    return SupportSet.zero(a.grid)


# ---------------------------------------------------------------------------
# Hukuhara difference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HukuharaResult:
    """Outcome of ``A ⊖ B``.

    ``exists`` is a bool (or bool array for batched operands).  Where the
    difference exists, ``set`` holds it and ``residual = h(B + C, A)``.
    Where it does not, ``witness`` holds an extreme point of ``A`` that no
    translate of ``B`` inside ``A`` can reach and ``deficit`` the amount by
    which ``B`` is too wide.
    """

    exists: Union[bool, np.ndarray]
    set: Optional[ConvexSet]
    residual: ArrayLike
    witness: Optional[np.ndarray] = None
    deficit: ArrayLike = 0.0

    def __bool__(self) -> bool:
        return bool(np.all(self.exists))

    def value(self) -> ConvexSet:
        """The difference; raises if it fails to exist anywhere in the batch."""
        if not bool(self):
            raise ValueError("Hukuhara difference does not exist")
        return self.set


def hukuhara_diff(a: ConvexSet, b: ConvexSet, tol: float = DEFAULT_TOL) -> HukuharaResult:
    """Compute ``A ⊖ B``, the unique ``C`` with ``A = B + C``, if it exists.

    The candidate is the erosion ``{x : x + B ⊆ A}``; it is accepted when
    ``B + C`` reconstitutes ``A`` within ``tol`` in Hausdorff distance.
    """
    _check_compatible(a, b)
    if isinstance(a, Interval):
        wa, wb = a.width, b.width
        deficit = np.maximum(wb - wa, 0.0)
        exists = deficit <= tol
        lo = _arr(a.lo) - _arr(b.lo)
        hi = _arr(a.hi) - _arr(b.hi)
        # clamp so that the erosion stays a (possibly degenerate) interval
        mid = 0.5 * (lo + hi)
        c = Interval(np.minimum(lo, mid), np.maximum(hi, mid))
        residual = hausdorff_distance(minkowski_sum(b, c), a)
        exists = exists & (residual <= tol)
        return HukuharaResult(_scalarize(exists), c, _scalarize(residual), _arr(a.lo), _scalarize(deficit))
    if isinstance(a, Box):
        deficit_c = np.maximum(b.width - a.width, 0.0)
        lo, hi = a.lo - b.lo, a.hi - b.hi
        mid = 0.5 * (lo + hi)
        c = Box(np.minimum(lo, mid), np.maximum(hi, mid))
        residual = hausdorff_distance(minkowski_sum(b, c), a)
        deficit = deficit_c.max(-1)
        exists = (deficit <= tol) & (residual <= tol)
        return HukuharaResult(_scalarize(exists), c, _scalarize(residual), a.lo.copy(), _scalarize(deficit))
    return _hukuhara_support(a, b, tol)


def _hukuhara_support(a: SupportSet, b: SupportSet, tol: float) -> HukuharaResult:
    if a.h.ndim != 1:
        parts = [_hukuhara_support(SupportSet(a.grid, ha), SupportSet(b.grid, hb), tol)
                 for ha, hb in zip(a.h.reshape(-1, a.grid.size), b.h.reshape(-1, b.grid.size))]
        shape = a.h.shape[:-1]
        exists = np.array([p.exists for p in parts]).reshape(shape)
        resid = np.array([p.residual for p in parts]).reshape(shape)
        hs = np.stack([p.set.h if p.set is not None else np.full(a.grid.size, np.nan) for p in parts])
        return HukuharaResult(exists, SupportSet(a.grid, hs.reshape(a.h.shape)), resid)
    candidate = SupportSet(a.grid, a.h - b.h)
    try:
        c = candidate.tighten()
    except UnsupportedOperation:
        # empty erosion: no translate of B fits inside A at all
        return HukuharaResult(False, None, np.inf, a.support_point(0), np.inf)
    residual = float(hausdorff_distance(minkowski_sum(b, c), a))
    exists = residual <= tol
    witness = None
    if not exists:
        j = int(np.argmax(np.abs(b.h + c.h - a.h)))
        witness = a.support_point(j)
    return HukuharaResult(exists, c, residual, witness, residual if not exists else 0.0)


def _scalarize(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def is_translation(a: ConvexSet, b: ConvexSet, tol: float = DEFAULT_TOL) -> Optional[np.ndarray]:
    """Return ``c`` with ``A = B + {c}`` if both ``A ⊖ B`` and ``B ⊖ A`` exist."""
    ab = hukuhara_diff(a, b, tol)
    ba = hukuhara_diff(b, a, tol)
    if not (bool(ab) and bool(ba)):
        return None
    c = ab.set
    if isinstance(c, Interval):
        return np.asarray(c.mid)
    if isinstance(c, Box):
        return 0.5 * (c.lo + c.hi)
    return c.support_point(0) if c.h.ndim == 1 else None


def erosion_contains(a: Interval, b: Interval, x: float, tol: float = 0.0) -> bool:
    """Whether the translate ``x + B`` lies inside ``A``."""
    return (x + b.lo >= a.lo - tol) and (x + b.hi <= a.hi + tol)


# ---------------------------------------------------------------------------
# Literals
# ---------------------------------------------------------------------------

_NUM = r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*"
_PAIR = re.compile(r"\[" + _NUM + "," + _NUM + r"\]")


def parse_set(text: str) -> Union[Interval, Box]:
    """Parse ``[lo,hi]`` as an interval or ``[a,b]x[c,d]x...`` as a box."""
    pieces = text.strip().split("x")
    pairs = []
    for piece in pieces:
        m = _PAIR.fullmatch(piece.strip())
        if not m:
            raise ValueError(f"malformed set literal: {text!r}")
        pairs.append((float(m.group(1)), float(m.group(2))))
    if len(pairs) == 1:
        return Interval(*pairs[0])
    lo, hi = zip(*pairs)
    return Box(np.array(lo), np.array(hi))


def format_set(a: Union[Interval, Box]) -> str:
    """Inverse of :func:`parse_set` using shortest round-trip float text."""
    if isinstance(a, Interval):
        return f"[{float(a.lo)!r},{float(a.hi)!r}]"
    return "x".join(f"[{float(lo)!r},{float(hi)!r}]" for lo, hi in zip(a.lo, a.hi))
