"""Integrability radius fields, Lorentz weak norms and the interpolation audits.

All radius fields take values on the grid ``j * h / 2`` (``j >= 1``), the
sub-resolution floor ``h / 4`` when even the smallest grid radius fails, or
``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AuditUndefined
from .lattice import ScalarField


@dataclass(frozen=True, eq=False)
class RadiusField:
    lattice: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).reshape(self.lattice.dims)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def reciprocal(self):
        with np.errstate(divide="ignore"):
            return ScalarField(self.lattice, np.where(np.isinf(self.values), 0.0, 1.0 / self.values))

    def finite_mask(self):
        return np.isfinite(self.values)

    def min(self):
        return float(np.min(self.values))


def radius_grid(lattice):
    """Search radii ``j * h / 2`` up to the torus bound (or past the box diameter)."""
    half = lattice.spacing / 2
    if lattice.periodic:
        J = int(math.floor(lattice.max_radius / half + 1e-9))
    else:
        J = int(math.ceil(math.sqrt(lattice.max_key))) * 2 + 1
    return np.arange(1, J + 1) * half


def floor_radius(lattice):
    return lattice.spacing / 4


def _passes(values, threshold, strict):
    return values < threshold if strict else values <= threshold


def monotone_radius_field(f, threshold, strict=False):
    """Largest grid radius with ``sup_ball_mass(f, x, r)`` below ``threshold``, per site.

    The predicate is monotone in ``r``, so each site stops at its first failure;
    the scan ends as soon as every site has failed.
    """
    lat = f.lattice
    if _passes(f.integral(), threshold, strict):
        return RadiusField(lat, np.full(lat.dims, np.inf))
    s = np.full(lat.dims, floor_radius(lat))
    alive = np.ones(lat.dims, dtype=bool)
    key = None
    ok = None
    for r in radius_grid(lat):
        k = lat.radius_key(r)
        if k != key:
            key = k
            ok = _passes(f.sup_field(k), threshold, strict)
        alive &= ok
        if not alive.any():
            break
        s[alive] = r
    return RadiusField(lat, s)


def scaled_radius_field(f, threshold, cap):
    """Largest grid radius ``r <= cap`` with ``r**-2 * sup_ball_mass(f, x, r) <= threshold``.

    The predicate is not monotone, so every grid radius up to the cap is tested.
    Sites passing at the largest admissible radius with an infinite cap get ``inf``.
    """
    lat = f.lattice
    cap = np.asarray(cap, dtype=float) * np.ones(lat.dims)
    grid = radius_grid(lat)
    s = np.full(lat.dims, floor_radius(lat))
    found = np.zeros(lat.dims, dtype=bool)
    last_ok = np.zeros(lat.dims, dtype=bool)
    total = f.integral()
    key = None
    sup = None
    for i, r in enumerate(grid):
        if not np.any(r <= cap):
            break
        if total <= threshold * r * r:
            # every ball holds at most the total, so all larger radii pass as well
            rest = grid[i:]
            below = rest[None, :] <= cap.reshape(-1, 1)
            top = np.where(below.any(axis=1), rest[np.maximum(below.sum(axis=1) - 1, 0)], -np.inf)
            top = top.reshape(lat.dims)
            s = np.maximum(s, np.where(top > 0, top, s))
            last_ok = cap >= grid[-1]
            break
        k = lat.radius_key(r)
        if k != key:
            key = k
            sup = f.sup_field(k)
        ok = (sup <= threshold * r * r) & (r <= cap)
        s[ok] = r
        found |= ok
        last_ok = ok
    if np.isinf(cap).any():
        s[np.isinf(cap) & last_ok] = np.inf
    return RadiusField(lat, np.minimum(s, cap))


def integrability_radius(u, x, threshold=1.0):
    """Integrability radius at one site, by bisection over the search grid."""
    f = u.map(lambda v: np.abs(v) ** 4)
    lat = f.lattice
    if f.integral() <= threshold:
        return math.inf
    site = tuple(lat.wrap(x))
    grid = radius_grid(lat)

    def ok(j):
        return f.sup_field(lat.radius_key(grid[j]))[site] <= threshold

    if not ok(0):
        return floor_radius(lat)
    lo, hi = 0, len(grid) - 1
    if ok(hi):
        return float(grid[hi])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(grid[lo])


def radius_field(u, threshold=1.0):
    return monotone_radius_field(u.map(lambda v: np.abs(v) ** 4), threshold)


def lorentz_weak_norm(f, p):
    """``sup_a a * |{|f| > a}|**(1/p)`` via the decreasing rearrangement."""
    if p < 1:
        raise ValueError("p must be >= 1")
    vals = np.sort(np.abs(np.ravel(f.values)))[::-1]
    if vals.size == 0 or vals[0] == 0:
        return 0.0
    k = np.arange(1, vals.size + 1)
    with np.errstate(invalid="ignore"):
        terms = vals * (k * f.lattice.cell_volume) ** (1.0 / p)
    terms = np.where(vals == 0, 0.0, terms)
    return float(np.max(terms))


def lp_norm(f, p):
    return float(np.sum(np.abs(f.values) ** p) * f.lattice.cell_volume) ** (1.0 / p)


def curly_norm(u, threshold=1.0, s=None):
    if s is None:
        s = radius_field(u, threshold)
    return lorentz_weak_norm(s.reciprocal(), 4)


def _neighbour_pairs(values, periodic):
    for ax in range(values.ndim):
        if periodic:
            yield values, np.roll(values, -1, axis=ax)
        else:
            lo = [slice(None)] * values.ndim
            hi = [slice(None)] * values.ndim
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            yield values[tuple(lo)], values[tuple(hi)]


def lipschitz_defect(s):
    """``max(|s(x) - s(y)| - d(x, y), 0)`` over adjacent cells with finite radii."""
    h = s.lattice.spacing
    worst = 0.0
    for a, b in _neighbour_pairs(s.values, s.lattice.periodic):
        both = np.isfinite(a) & np.isfinite(b)
        if both.any():
            worst = max(worst, float(np.max(np.abs(a[both] - b[both]))) - h)
    return max(worst, 0.0)


@dataclass
class InterpolationAudit:
    eps: float
    lhs: float
    rhs: float
    ratio: float
    curly_over_l4: float


def interpolation_audit(u, eps, threshold=1.0):
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    c = curly_norm(u, threshold)
    if c == 0:
        raise AuditUndefined("curly norm vanishes; the interpolation ratio is undefined")
    lhs = float(np.sum(np.abs(u.values) ** (4 - eps)) * u.lattice.cell_volume)
    rhs = c**4
    return InterpolationAudit(eps, lhs, rhs, lhs / rhs, c / lp_norm(u, 4))


def comparability_audit(u, threshold=1.0, max_pairs=400_000, seed=0, s=None):
    """Worst excess of ``s(x)/s(y)`` beyond ``[1/4 - slack, 4 + slack]`` for intersecting balls.

    ``slack = 2h / min(s)``. All pairs are scanned when there are at most
    ``max_pairs`` of them; otherwise a seeded sample is used.
    """
    if s is None:
        s = radius_field(u, threshold)
    lat = s.lattice
    fin = np.flatnonzero(np.isfinite(s.values.ravel()))
    if fin.size == 0:
        raise AuditUndefined("radius field has no finite entries")
    vals = s.values.ravel()[fin]
    pts = lat.sites()[fin] * lat.spacing
    slack = 2 * lat.spacing / float(vals.min())
    n = fin.size
    if n * n <= max_pairs:
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
    else:
        rng = np.random.default_rng(seed)
        ii = rng.integers(0, n, max_pairs)
        jj = rng.integers(0, n, max_pairs)
    worst = 0.0
    for start in range(0, ii.size, 200_000):
        a = ii[start:start + 200_000]
        b = jj[start:start + 200_000]
        d = lat.distance(pts[a], pts[b])
        meet = d <= vals[a] + vals[b]
        ratio = vals[a][meet] / vals[b][meet]
        if ratio.size:
            worst = max(worst, float(np.max(ratio - (4 + slack))), float(np.max((0.25 - slack) - ratio)))
    return max(worst, 0.0)


@dataclass
class NormReport:
    l4: float
    lorentz_weak: float
    curly: float
    interpolation_ratio: dict = field(default_factory=dict)
    curly_over_l4: float = math.nan
    lipschitz_defect: float = 0.0

    def as_dict(self):
        return {
            "l4": self.l4,
            "lorentz_weak": self.lorentz_weak,
            "curly": self.curly,
            "interpolation_ratio": {str(k): v for k, v in self.interpolation_ratio.items()},
            "curly_over_l4": self.curly_over_l4,
            "lipschitz_defect": self.lipschitz_defect,
        }


def norm_report(u, eps=(0.5,), threshold=1.0):
    s = radius_field(u, threshold)
    c = lorentz_weak_norm(s.reciprocal(), 4)
    l4 = lp_norm(u, 4)
    ratios = {}
    if c > 0:
        for e in eps:
            lhs = float(np.sum(np.abs(u.values) ** (4 - e)) * u.lattice.cell_volume)
            ratios[e] = lhs / c**4
    return NormReport(
        l4=l4,
        lorentz_weak=lorentz_weak_norm(u, 4),
        curly=c,
        interpolation_ratio=ratios,
        curly_over_l4=c / l4 if l4 > 0 else 0.0,
        lipschitz_defect=lipschitz_defect(s),
    )
