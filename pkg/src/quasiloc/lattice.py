"""
Geometry of the lattice Z^d: boxes, L-rectangles, strips and boundaries.

All regions expose the same small surface (``d``, ``size``, ``sites()``,
``contains()``) so that the operator module can restrict a Hamiltonian to a
box, to a difference of two boxes, or to an arbitrary finite site set.

Sites are always ordered lexicographically; this ordering fixes the matrix
indexing used everywhere else in the package.  Distances on the lattice are
graph (l1) distances.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Box",
    "BoxDifference",
    "SiteSet",
    "LRectangle",
    "Strip",
    "Boundary",
    "boundary",
    "inner_points_at_distance",
    "are_disjoint",
    "enumerate_rectangles",
    "strips",
    "centered_box",
    "as_region",
    "lattice_distance",
]


def lattice_distance(x, y) -> int:
    """Graph distance ``||x - y||_1`` between two lattice sites."""
    return int(np.abs(np.asarray(x) - np.asarray(y)).sum())


def _lexsort_rows(pts: np.ndarray) -> np.ndarray:
    if len(pts) == 0:
        return pts
    order = np.lexsort(pts.T[::-1])
    return pts[order]


@dataclass(frozen=True)
class Box:
    """Product of ``d`` inclusive integer intervals ``[a_i, b_i]``."""

    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self):
        ivs = tuple((int(a), int(b)) for a, b in self.intervals)
        if not ivs:
            raise ValueError("a box needs at least one interval")
        for a, b in ivs:
            if a > b:
                raise ValueError(f"empty interval [{a}, {b}]")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def from_corner(cls, corner: Sequence[int], sides: Sequence[int]) -> "Box":
        """Box with lower corner ``corner`` and ``sides[i]`` sites along axis i."""
        return cls(tuple((int(c), int(c) + int(n) - 1) for c, n in zip(corner, sides)))

    @property
    def d(self) -> int:
        return len(self.intervals)

    @property
    def lower(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals])

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(b - a + 1 for a, b in self.intervals)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def sites(self) -> np.ndarray:
        axes = [np.arange(a, b + 1) for a, b in self.intervals]
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts))
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)

    def contains_box(self, other: "Box") -> bool:
        return bool(np.all(other.lower >= self.lower) and np.all(other.upper <= self.upper))

    def intersect(self, other: "Box") -> "Box | None":
        lo = np.maximum(self.lower, other.lower)
        hi = np.minimum(self.upper, other.upper)
        if np.any(lo > hi):
            return None
        return Box(tuple(zip(lo.tolist(), hi.tolist())))

    def index_of(self, pts) -> np.ndarray:
        """Row index of each site in ``sites()`` (lexicographic)."""
        pts = np.atleast_2d(np.asarray(pts)) - self.lower
        return np.ravel_multi_index(tuple(pts.T), self.shape)

    def to_list(self) -> list[list[int]]:
        return [list(iv) for iv in self.intervals]

    def __str__(self):
        return "x".join(f"[{a},{b}]" for a, b in self.intervals)


@dataclass(frozen=True)
class BoxDifference:
    """The set ``outer \\ inner`` of two boxes (an element of the family of box differences)."""

    outer: Box
    inner: Box

    @property
    def d(self) -> int:
        return self.outer.d

    def sites(self) -> np.ndarray:
        pts = self.outer.sites()
        return pts[~self.inner.contains(pts)]

    @property
    def size(self) -> int:
        common = self.outer.intersect(self.inner)
        return self.outer.size - (common.size if common is not None else 0)

    def contains(self, pts) -> np.ndarray:
        return self.outer.contains(pts) & ~self.inner.contains(pts)

    def __str__(self):
        return f"{self.outer}\\{self.inner}"


class SiteSet:
    """An arbitrary finite set of lattice sites."""

    def __init__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=int))
        pts = np.unique(pts, axis=0) if len(pts) else pts
        self._pts = _lexsort_rows(pts)
        self._lookup = {tuple(p) for p in self._pts.tolist()}

    @property
    def d(self) -> int:
        return self._pts.shape[1]

    @property
    def size(self) -> int:
        return len(self._pts)

    def sites(self) -> np.ndarray:
        return self._pts.copy()

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts))
        return np.array([tuple(p) in self._lookup for p in pts.tolist()], dtype=bool)


def as_region(s):
    """Coerce a Box, BoxDifference, SiteSet or array of sites to a region."""
    if isinstance(s, (Box, BoxDifference, SiteSet)):
        return s
    return SiteSet(s)


@dataclass(frozen=True)
class LRectangle:
    """An L-rectangle: ``d - 1`` sides of ``2L + 1`` sites and one short side of ``L + 1``."""

    box: Box
    L: int
    short_axis: int

    def __post_init__(self):
        shape = self.box.shape
        if not 0 <= self.short_axis < self.box.d:
            raise ValueError(f"short_axis {self.short_axis} out of range")
        for i, n in enumerate(shape):
            want = self.L + 1 if i == self.short_axis else 2 * self.L + 1
            if n != want:
                raise ValueError(
                    f"box {self.box} is not an {self.L}-rectangle with short axis {self.short_axis}"
                )

    @classmethod
    def at(cls, corner: Sequence[int], L: int, short_axis: int = 0) -> "LRectangle":
        d = len(corner)
        sides = [2 * L + 1] * d
        sides[short_axis] = L + 1
        return cls(Box.from_corner(corner, sides), L, short_axis)

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def size(self) -> int:
        return self.box.size

    def sites(self) -> np.ndarray:
        return self.box.sites()

    def contains(self, pts) -> np.ndarray:
        return self.box.contains(pts)

    def __str__(self):
        return f"{self.L}-rect{self.box}"


@dataclass(frozen=True)
class Strip:
    """A sub-box of ``parent`` agreeing with it on every axis except ``axis``."""

    parent: Box
    box: Box
    axis: int
    width: int

    def __post_init__(self):
        if not self.parent.contains_box(self.box):
            raise ValueError("strip must lie inside its parent box")
        for i, (piv, biv) in enumerate(zip(self.parent.intervals, self.box.intervals)):
            if i == self.axis:
                if biv[1] - biv[0] + 1 != self.width:
                    raise ValueError("strip width does not match its box")
            elif piv != biv:
                raise ValueError("strip must span the parent on every other axis")


@dataclass(frozen=True)
class Boundary:
    """Ordered boundary pairs ``(u, u')`` with ``u`` inside and ``u'`` outside."""

    pairs: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def inner(self) -> list[tuple[int, ...]]:
        """Projection onto the first coordinate (the inner boundary), sorted."""
        return sorted({u for u, _ in self.pairs})

    @property
    def outer(self) -> list[tuple[int, ...]]:
        return sorted({v for _, v in self.pairs})


def _neighbour_offsets(d: int) -> np.ndarray:
    eye = np.eye(d, dtype=int)
    return np.concatenate([-eye, eye])


def boundary(s, ambient: Box | None = None) -> Boundary:
    """Boundary pairs of a region.

    Parameters
    ----------
    s : Box, BoxDifference, SiteSet or array of sites
        The region.
    ambient : Box, optional
        When given, only pairs whose outer site lies in ``ambient`` are kept.

    Returns
    -------
    Boundary
        Pairs sorted lexicographically in ``u`` and then in ``u'``.
    """
    region = as_region(s)
    pts = region.sites()
    if len(pts) == 0:
        raise ValueError("empty region")
    pairs = []
    for off in _neighbour_offsets(region.d):
        nb = pts + off
        keep = ~region.contains(nb)
        if ambient is not None:
            keep &= ambient.contains(nb)
        for u, v in zip(pts[keep].tolist(), nb[keep].tolist()):
            pairs.append((tuple(u), tuple(v)))
    pairs.sort()
    return Boundary(tuple(pairs))


def inner_points_at_distance(r, dist_min: int) -> np.ndarray:
    """Sites of a box at graph distance at least ``dist_min`` from its inner boundary."""
    if dist_min < 0:
        raise ValueError("dist_min must be nonnegative")
    box = r.box if isinstance(r, LRectangle) else r
    pts = box.sites()
    # l1 distance to the face {x_i = a_i} is x_i - a_i, and the nearest face wins
    depth = np.minimum(pts - box.lower, box.upper - pts).min(axis=1)
    return pts[depth >= dist_min]


def are_disjoint(a: Box, b: Box) -> bool:
    """True iff the two boxes share no site."""
    a = a.box if isinstance(a, LRectangle) else a
    b = b.box if isinstance(b, LRectangle) else b
    return bool(np.any(a.lower > b.upper) or np.any(b.lower > a.upper))


def enumerate_rectangles(window: Box, L: int, stride: int = 1) -> list[LRectangle]:
    """All L-rectangles inside ``window`` with lower corner on the stride sublattice.

    The sublattice is anchored at the window's lower corner.  Rectangles are
    listed by short axis first, then by lexicographic corner.  An empty list
    (with a ``RuntimeWarning``) is returned when nothing fits.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if L < 1:
        raise ValueError("L must be >= 1")
    d = window.d
    out = []
    for axis in range(d):
        sides = np.full(d, 2 * L + 1)
        sides[axis] = L + 1
        ranges = []
        for i in range(d):
            a, b = window.intervals[i]
            ranges.append(range(a, b - int(sides[i]) + 2, stride))
        for corner in itertools.product(*ranges):
            out.append(LRectangle(Box.from_corner(corner, sides), L, axis))
        if d == 1:
            break  # every axis is the short one; avoid duplicates
    if not out:
        warnings.warn(f"window {window} holds no {L}-rectangle", RuntimeWarning, stacklevel=2)
    return out


def strips(parent: Box, width: int, stride: int = 1, axes: Iterable[int] | None = None) -> Iterator[Strip]:
    """Strips of ``width`` sites in ``parent``, sliding along each axis."""
    for axis in range(parent.d) if axes is None else axes:
        a, b = parent.intervals[axis]
        if b - a + 1 < width:
            continue
        for lo in range(a, b - width + 2, stride):
            ivs = list(parent.intervals)
            ivs[axis] = (lo, lo + width - 1)
            yield Strip(parent, Box(tuple(ivs)), axis, width)


def centered_box(radius: int, d: int) -> Box:
    """The box ``[-radius, radius]^d``."""
    return Box(tuple((-radius, radius) for _ in range(d)))
