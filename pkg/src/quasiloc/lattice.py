"""Finite truncations of Z and Z^2: sites, regions, cones and fattenings.

Sites are integer tuples.  Regions are immutable, deduplicated and kept in
lexicographic order; that order fixes the tensor leg order everywhere else in
the package.  Distances are Euclidean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DomainError, TruncationError

Site = tuple

# closed-cone tie-break tolerance on the angular test
_ANGLE_EPS = 1e-12


def as_site(x) -> tuple:
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    return tuple(int(c) for c in x)


@dataclass(frozen=True)
class Region:
    """A finite, sorted, duplicate-free set of lattice sites."""

    sites: tuple = ()
    _set: frozenset = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        canon = tuple(sorted({as_site(s) for s in self.sites}))
        dims = {len(s) for s in canon}
        if len(dims) > 1:
            raise DomainError(f"mixed site dimensions {sorted(dims)}")
        object.__setattr__(self, "sites", canon)
        object.__setattr__(self, "_set", frozenset(canon))

    @classmethod
    def of(cls, sites: Iterable) -> "Region":
        return cls(tuple(sites))

    @classmethod
    def chain(cls, start: int, stop: int) -> "Region":
        """Sites ``start, ..., stop - 1`` of Z."""
        return cls(tuple((i,) for i in range(start, stop)))

    @classmethod
    def rectangle(cls, width: int, height: int, origin=(0, 0)) -> "Region":
        ox, oy = origin
        return cls(tuple((ox + i, oy + j) for i in range(width) for j in range(height)))

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site) -> bool:
        return as_site(site) in self._set

    def __bool__(self) -> bool:
        return bool(self.sites)

    def __or__(self, other: "Region") -> "Region":
        return Region(self.sites + tuple(other))

    def __and__(self, other: "Region") -> "Region":
        return Region(tuple(s for s in self.sites if s in other._set))

    def __sub__(self, other: "Region") -> "Region":
        return Region(tuple(s for s in self.sites if s not in other._set))

    def __le__(self, other: "Region") -> bool:
        return self._set <= other._set

    def __lt__(self, other: "Region") -> bool:
        return self._set < other._set

    def issubset(self, other: "Region") -> bool:
        return self._set <= other._set

    def isdisjoint(self, other: "Region") -> bool:
        return self._set.isdisjoint(other._set)

    def index(self, site) -> int:
        return self.sites.index(as_site(site))

    def positions(self, sub: Iterable) -> list[int]:
        """Tensor-leg positions of ``sub`` inside this region."""
        lookup = {s: i for i, s in enumerate(self.sites)}
        try:
            return [lookup[as_site(s)] for s in sub]
        except KeyError as exc:
            raise DomainError(f"site {exc.args[0]} not in region") from None

    @property
    def dimension(self) -> int:
        return len(self.sites[0]) if self.sites else 0

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array(self.sites, dtype=float).reshape(len(self.sites), -1)

    @property
    def diameter(self) -> float:
        if len(self.sites) < 2:
            return 0.0
        c = self.coords
        diff = c[:, None, :] - c[None, :, :]
        return float(np.sqrt((diff**2).sum(-1).max()))

    def to_json(self) -> list:
        return [list(s) for s in self.sites]

    @classmethod
    def from_json(cls, data: Sequence) -> "Region":
        return cls(tuple(tuple(s) for s in data))


@dataclass(frozen=True)
class Cone:
    """Closed cone in R^2 with real apex, axis direction and half-angle."""

    apex: tuple = (0.0, 0.0)
    axis_angle: float = 0.0
    half_angle: float = math.pi / 4

    def __post_init__(self):
        object.__setattr__(self, "apex", (float(self.apex[0]), float(self.apex[1])))
        if not 0.0 < self.half_angle <= math.pi:
            raise DomainError(f"cone half-angle must lie in (0, pi], got {self.half_angle}")

    @property
    def axis(self) -> np.ndarray:
        return np.array([math.cos(self.axis_angle), math.sin(self.axis_angle)])

    def boundary_directions(self) -> tuple[np.ndarray, np.ndarray]:
        a, h = self.axis_angle, self.half_angle
        return (np.array([math.cos(a + h), math.sin(a + h)]),
                np.array([math.cos(a - h), math.sin(a - h)]))

    def contains(self, points) -> np.ndarray:
        """Vectorised closed membership test for an ``(n, 2)`` array of points."""
        p = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.apex)
        norm = np.hypot(p[:, 0], p[:, 1])
        if self.half_angle >= math.pi:
            return np.ones(len(p), dtype=bool)
        cosang = (p @ self.axis) / np.where(norm > 0, norm, 1.0)
        inside = cosang >= math.cos(self.half_angle) - _ANGLE_EPS
        return inside | (norm == 0.0)

    def _ray_distance(self, p: np.ndarray) -> np.ndarray:
        out = np.full(len(p), np.inf)
        for e in self.boundary_directions():
            lam = np.clip(p @ e, 0.0, None)
            foot = lam[:, None] * e
            out = np.minimum(out, np.hypot(*(p - foot).T))
        return out

    def distance(self, points) -> np.ndarray:
        """Euclidean distance from each point to the closed cone."""
        p = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.apex)
        d = self._ray_distance(p)
        return np.where(self.contains(p + np.asarray(self.apex)), 0.0, d)

    def distance_to_complement(self, points) -> np.ndarray:
        """Distance from each point to the closure of the complement."""
        p = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.apex)
        if self.half_angle >= math.pi:
            return np.full(len(p), np.inf)
        d = self._ray_distance(p)
        return np.where(self.contains(p + np.asarray(self.apex)), d, 0.0)

    def to_json(self) -> dict:
        return {"apex": list(self.apex), "axis_angle": self.axis_angle,
                "half_angle": self.half_angle}

    @classmethod
    def from_json(cls, data: dict) -> "Cone":
        return cls(tuple(data["apex"]), float(data["axis_angle"]), float(data["half_angle"]))


@dataclass(frozen=True)
class LatticeConfig:
    """The box ``[-R, R]^dimension`` used as a finite stand-in for Z^dimension."""

    dimension: int = 2
    truncation_radius: int = 32

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise DomainError("only dimensions 1 and 2 are supported")
        if self.truncation_radius < 1:
            raise DomainError("truncation_radius must be >= 1")

    def in_box(self, coords) -> bool:
        return bool(np.all(np.abs(np.asarray(coords)) <= self.truncation_radius))

    def box(self) -> Region:
        r = range(-self.truncation_radius, self.truncation_radius + 1)
        if self.dimension == 1:
            return Region(tuple((i,) for i in r))
        return Region(tuple((i, j) for i in r for j in r))

    def _check(self, lo, hi, what):
        if np.any(np.asarray(lo) < -self.truncation_radius) or np.any(
                np.asarray(hi) > self.truncation_radius):
            raise TruncationError(
                f"{what} leaves the truncation box of radius {self.truncation_radius}")


def ball_offsets(n: float, dimension: int) -> np.ndarray:
    """Integer offsets ``y`` with ``|y| <= n``, lexicographically sorted."""
    r = int(math.floor(n + 1e-12))
    axis = np.arange(-r, r + 1)
    if dimension == 1:
        return axis[:, None]
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    keep = (pts**2).sum(1) <= n * n + 1e-9
    return pts[keep]


def ball(lattice: LatticeConfig, x, n: float) -> Region:
    if n < 0:
        raise DomainError("ball radius must be non-negative")
    x = np.asarray(as_site(x))
    if len(x) != lattice.dimension:
        raise DomainError("site dimension does not match lattice")
    lattice._check(x, x, "site")
    r = int(math.floor(n + 1e-12))
    lattice._check(x - r, x + r, f"ball of radius {n}")
    return Region(tuple(map(tuple, ball_offsets(n, lattice.dimension) + x)))


def fatten(lattice: LatticeConfig, X: Region, m: int) -> Region:
    """``X(m) = {y : d(y, X) <= m}`` inside the truncation box."""
    if not X:
        raise DomainError("cannot fatten an empty region")
    if m < 0:
        raise DomainError("fattening radius must be non-negative")
    c = np.array(X.sites)
    lattice._check(c.min(0) - m, c.max(0) + m, f"fattening by {m}")
    off = ball_offsets(m, lattice.dimension)
    pts = (c[:, None, :] + off[None, :, :]).reshape(-1, c.shape[1])
    return Region(tuple(map(tuple, np.unique(pts, axis=0))))


def fatten_within(X: Region, m: float, universe: Region) -> Region:
    """``X(m)`` intersected with ``universe``; no truncation box involved."""
    if not X or not universe:
        return Region()
    d = _pair_distances(universe.coords, X.coords).min(axis=1)
    return Region(tuple(s for s, dist in zip(universe.sites, d) if dist <= m + 1e-9))


def _pair_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff**2).sum(-1))


def distance(x, y) -> float:
    return float(math.dist(as_site(x), as_site(y)))


def set_distance(X: Region, Y: Region) -> float:
    """Minimum Euclidean distance between two non-empty regions."""
    if not X or not Y:
        raise DomainError("set_distance needs two non-empty regions")
    if not X.isdisjoint(Y):
        return 0.0
    return float(_pair_distances(X.coords, Y.coords).min())


def cone_region(lattice: LatticeConfig, cone: Cone, radius: float) -> Region:
    """Lattice sites of the closed cone within ``radius`` of its apex."""
    if cone.half_angle <= 0:
        raise DomainError("degenerate cone")
    if lattice.dimension != 2:
        raise DomainError("cones live in two dimensions")
    if radius > lattice.truncation_radius:
        raise TruncationError("cone radius exceeds the truncation radius")
    ax, ay = cone.apex
    lo_x, hi_x = math.ceil(ax - radius - 1e-12), math.floor(ax + radius + 1e-12)
    lo_y, hi_y = math.ceil(ay - radius - 1e-12), math.floor(ay + radius + 1e-12)
    lattice._check((lo_x, lo_y), (hi_x, hi_y), f"cone of radius {radius}")
    gx, gy = np.meshgrid(np.arange(lo_x, hi_x + 1), np.arange(lo_y, hi_y + 1), indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    near = np.hypot(pts[:, 0] - ax, pts[:, 1] - ay) <= radius + 1e-9
    pts = pts[near]
    pts = pts[cone.contains(pts)]
    return Region(tuple(map(tuple, pts)))


def ball_size(n: float, dimension: int = 2) -> int:
    """``|b_0(n)|`` counted exactly with integer square roots."""
    r = int(math.floor(n + 1e-12))
    if dimension == 1:
        return 2 * r + 1
    n2 = int(math.floor(n * n + 1e-9))
    return sum(2 * math.isqrt(n2 - x * x) + 1 for x in range(-r, r + 1))


def regularity_constant(n_max: int, dimension: int = 2) -> float:
    """Smallest kappa with ``|b_x(n)| <= kappa n^dimension`` for ``1 <= n <= n_max``."""
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    return max(ball_size(n, dimension) / n**dimension for n in range(1, n_max + 1))
