"""Lattice geometry, scalar fields and metric-ball queries.

Cells are indexed by integer sites ``(i0, i1, i2, i3)``; the centre of cell
``i`` sits at ``i * h``. A cell belongs to a ball iff its centre does, so every
ball sum is a finite sum of cell values times ``h**4``.

Two geometries are supported: ``"torus"`` (periodic, displacements reduced to
the nearest image) and ``"box"`` (a clipped box; balls are intersected with
the domain and may be arbitrarily large).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import BallTooLarge, ShapeError

GEOMETRIES = ("torus", "box")
# membership slack on (r/h)**2; keeps j*h/2 radii exact under float rounding
_KEY_EPS = 1e-9


@dataclass(frozen=True)
class Lattice:
    dims: tuple
    spacing: float = 1.0
    geometry: str = "torus"

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", float(self.spacing))
        if len(dims) != 4:
            raise ShapeError(f"expected 4 axes, got {len(dims)}")
        if min(dims) < 4:
            raise ShapeError(f"every axis needs at least 4 cells, got {dims}")
        if not self.spacing > 0:
            raise ShapeError("spacing must be positive")
        if self.geometry not in GEOMETRIES:
            raise ShapeError(f"unknown geometry {self.geometry!r}")

    @classmethod
    def cubic(cls, n, spacing=1.0, geometry="torus"):
        return cls((n, n, n, n), spacing, geometry)

    @property
    def periodic(self):
        return self.geometry == "torus"

    @property
    def h(self):
        return self.spacing

    @property
    def lengths(self):
        return tuple(n * self.spacing for n in self.dims)

    @property
    def n_sites(self):
        return int(np.prod(self.dims))

    @property
    def cell_volume(self):
        return self.spacing**4

    @property
    def max_radius(self):
        """Largest admissible ball radius (``inf`` on a clipped box)."""
        if self.periodic:
            return min(self.lengths) / 2
        return math.inf

    @property
    def max_key(self):
        if self.periodic:
            return self.radius_key(self.max_radius)
        return sum((n - 1) ** 2 for n in self.dims)

    def with_geometry(self, geometry):
        return Lattice(self.dims, self.spacing, geometry)

    def radius_key(self, r):
        """Integer bound on ``|d|**2`` for cells of the ball of radius ``r``."""
        if r < 0:
            raise ValueError("negative radius")
        if self.periodic and r > self.max_radius * (1 + 1e-12):
            raise BallTooLarge(f"radius {r} exceeds torus bound {self.max_radius}")
        if math.isinf(r):
            return self.max_key
        k = int(math.floor((r / self.spacing) ** 2 + _KEY_EPS))
        return min(k, self.max_key) if not self.periodic else k

    def axis_range(self, axis):
        n = self.dims[axis]
        if self.periodic:
            return -(n // 2), (n + 1) // 2 - 1
        return -(n - 1), n - 1

    @lru_cache(maxsize=256)
    def offsets(self, k):
        """Integer offsets of the ball with key ``k``, sorted by (|d|^2, lex)."""
        m = math.isqrt(k)
        axes = []
        for ax in range(4):
            lo, hi = self.axis_range(ax)
            axes.append(np.arange(max(lo, -m), min(hi, m) + 1))
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
        d2 = np.einsum("ij,ij->i", grid, grid)
        grid, d2 = grid[d2 <= k], d2[d2 <= k]
        order = np.lexsort(tuple(grid[:, a] for a in (3, 2, 1, 0)) + (d2,))
        out = grid[order]
        out.setflags(write=False)
        return out

    @lru_cache(maxsize=256)
    def triples(self, k):
        """Line decomposition of the ball: (d0, d1, d2) plus half-width along axis 3."""
        m = math.isqrt(k)
        axes = []
        for ax in range(3):
            lo, hi = self.axis_range(ax)
            axes.append(np.arange(max(lo, -m), min(hi, m) + 1))
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        q = np.einsum("ij,ij->i", grid, grid)
        keep = q <= k
        grid = np.ascontiguousarray(grid[keep], dtype=np.int64)
        half = np.array([math.isqrt(int(k - v)) for v in q[keep]], dtype=np.int64)
        grid.setflags(write=False)
        half.setflags(write=False)
        return grid, half

    def sites(self):
        return np.indices(self.dims).reshape(4, -1).T

    def wrap(self, site):
        site = np.asarray(site)
        if self.periodic:
            return site % np.array(self.dims)
        return site

    def in_domain(self, site):
        site = np.asarray(site)
        return bool(np.all(site >= 0) and np.all(site < np.array(self.dims)))

    def displacement(self, a, b):
        """Reduced displacement ``b - a`` in length units (broadcasts)."""
        d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if self.periodic:
            L = np.array(self.lengths)
            d = d - L * np.round(d / L)
        return d

    def distance(self, a, b):
        d = self.displacement(a, b)
        return np.sqrt(np.sum(d * d, axis=-1))

    def site_point(self, site):
        return np.asarray(site, dtype=float) * self.spacing

    def cell_points(self):
        return np.indices(self.dims, dtype=float).transpose(1, 2, 3, 4, 0) * self.spacing


def is_site(center):
    arr = np.asarray(center)
    return arr.dtype.kind in "iu"


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center)
        if c.dtype.kind in "iu":
            object.__setattr__(self, "center", tuple(int(v) for v in c))
        else:
            object.__setattr__(self, "center", tuple(float(v) for v in c))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius < 0:
            raise ValueError("negative radius")

    @property
    def is_site(self):
        return all(isinstance(v, int) for v in self.center)

    def point(self, lattice):
        return np.asarray(self.center, dtype=float) * (lattice.spacing if self.is_site else 1.0)


def ball_mask(lattice, center, radius, strict=False):
    """Cells whose centres lie in the ball (``d < r`` when ``strict``)."""
    if is_site(center):
        p = lattice.site_point(center)
    else:
        p = np.asarray(center, dtype=float)
    if lattice.periodic and radius > lattice.max_radius * (1 + 1e-12):
        raise BallTooLarge(f"radius {radius} exceeds torus bound {lattice.max_radius}")
    d = lattice.displacement(p, lattice.cell_points())
    d2 = np.sum(d * d, axis=-1) / lattice.spacing**2
    r2 = (radius / lattice.spacing) ** 2
    if strict:
        return d2 < r2 - _KEY_EPS
    return d2 <= r2 + _KEY_EPS


class ScalarField:
    """Real density on lattice cells; immutable, with cached ball queries."""

    def __init__(self, lattice, values):
        arr = np.array(values, dtype=np.float64)
        if arr.size != lattice.n_sites:
            raise ShapeError(f"{arr.size} values for {lattice.n_sites} cells")
        arr = np.ascontiguousarray(arr.reshape(lattice.dims))
        arr.setflags(write=False)
        self.lattice = lattice
        self.values = arr
        self._mass = {}
        self._sup = {}

    @classmethod
    def constant(cls, lattice, c):
        return cls(lattice, np.full(lattice.dims, float(c)))

    def integral(self):
        return float(np.sum(self.values)) * self.lattice.cell_volume

    def map(self, fn):
        return ScalarField(self.lattice, fn(self.values))

    def __add__(self, other):
        if other.lattice != self.lattice:
            raise ShapeError("lattice mismatch")
        return ScalarField(self.lattice, self.values + other.values)

    def shifted(self, shift):
        """Translate by an integer lattice vector (torus only)."""
        return ScalarField(self.lattice, np.roll(self.values, tuple(shift), axis=(0, 1, 2, 3)))

    def mass_field(self, k):
        """Ball masses at every site for key ``k``."""
        if k not in self._mass:
            lat = self.lattice
            triples, half = lat.triples(k)
            win = kernels.line_windows(self.values, math.isqrt(k), lat.periodic, kernels.SUM)
            out = kernels.ball_reduce(win, triples, half, lat.periodic, kernels.SUM)
            out *= lat.cell_volume
            out.setflags(write=False)
            self._mass[k] = out
        return self._mass[k]

    def sup_field(self, k):
        """``max_{y in B(x)} mass(B(y))`` at every site for key ``k``."""
        if k not in self._sup:
            lat = self.lattice
            triples, half = lat.triples(k)
            win = kernels.line_windows(self.mass_field(k), math.isqrt(k), lat.periodic, kernels.MAX)
            out = kernels.ball_reduce(win, triples, half, lat.periodic, kernels.MAX)
            out.setflags(write=False)
            self._sup[k] = out
        return self._sup[k]


def _continuum_mass(f, point, radius):
    mask = ball_mask(f.lattice, point, radius)
    return float(np.sum(f.values[mask])) * f.lattice.cell_volume


def ball_mass(f, b):
    """Mass of ``f`` over the cells of ball ``b``."""
    lat = f.lattice
    if b.is_site:
        k = lat.radius_key(b.radius)
        site = tuple(lat.wrap(b.center))
        if not lat.in_domain(site):
            raise ValueError(f"site {b.center} outside the box")
        return float(f.mass_field(k)[site])
    return _continuum_mass(f, b.center, b.radius)


def sup_ball_mass(f, x, r):
    """``sup`` over cell centres ``y`` in ``B_r(x)`` (plus ``x``) of the mass of ``B_r(y)``."""
    lat = f.lattice
    k = lat.radius_key(r)
    if is_site(x):
        site = tuple(lat.wrap(x))
        return float(f.sup_field(k)[site])
    mask = ball_mask(lat, x, r)
    best = _continuum_mass(f, x, r)
    if mask.any():
        best = max(best, float(np.max(f.mass_field(k)[mask])))
    return best


def vitali_cover(lattice, sites, radius_fn):
    """Greedy largest-first selection with pairwise disjoint fifth-radius balls.

    ``sites`` are integer sites or continuum points; ``radius_fn`` is a callable
    or a sequence of radii. The selected full-radius balls cover every input.
    """
    sites = list(sites)
    if not sites:
        return []
    if callable(radius_fn):
        radii = np.array([float(radius_fn(s)) for s in sites])
    else:
        radii = np.asarray(radius_fn, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radius_fn must be positive")
    pts = np.array([lattice.site_point(s) if is_site(s) else np.asarray(s, float) for s in sites])
    keys = np.array(sites, dtype=float).reshape(len(sites), -1)
    order = np.lexsort(tuple(keys[:, a] for a in range(keys.shape[1] - 1, -1, -1)) + (-radii,))
    chosen = []
    chosen_pts = np.empty((0, 4))
    chosen_r = np.empty(0)
    for i in order:
        if chosen:
            d = lattice.distance(pts[i], chosen_pts)
            if np.any(d <= (radii[i] + chosen_r) / 5):
                continue
        chosen.append(i)
        chosen_pts = np.vstack([chosen_pts, pts[i]])
        chosen_r = np.append(chosen_r, radii[i])
    return [Ball(sites[i], radii[i]) for i in chosen]
