"""Scale fields, singular sets, the radius lower-bound audit and frame degrees.

Radius fields share the search grid of :mod:`gaugelab.radius`. The sphere
degree triangulates the boundary of a lattice 4-box: each boundary 3-face is
cut into unit cubes and each unit cube into the six Kuhn tetrahedra of the
global axis order, so neighbouring faces induce the same triangulation on
their common 2-faces.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateShell, Inapplicable
from .lattice import Ball, ScalarField, ball_mask, ball_mass
from .radius import RadiusField, monotone_radius_field, scaled_radius_field


@dataclass(frozen=True)
class ScaleConfig:
    eps0: float = 0.1
    eta: float = 0.1
    theta1: float = 0.01
    s_min: float | None = None  # default: the sub-resolution floor h/4

    def __post_init__(self):
        if not (self.eps0 > 0 and self.eta > 0 and 0 < self.theta1 < 1):
            raise ValueError("eps0 and eta must be positive, theta1 in (0, 1)")
        if self.s_min is not None and self.s_min <= 0:
            raise ValueError("s_min must be positive")

    def cutoff(self, lattice):
        return lattice.spacing / 4 if self.s_min is None else self.s_min

    def as_dict(self):
        return {"eps0": self.eps0, "eta": self.eta, "theta1": self.theta1, "s_min": self.s_min}


def curvature_radius_field(e, eps0):
    """Largest grid radius with ``sup_ball_mass(e, x, r) < eps0``; ``inf`` if the total is below."""
    return monotone_radius_field(e, eps0, strict=True)


def _zero_curvature(lattice):
    return ScalarField(lattice, np.zeros(lattice.dims))


def a0_radius_field(A, e, eps0):
    """Integrability radius of ``|A|`` (fourth-power mass <= 1), capped by the curvature radius."""
    e = _zero_curvature(A.lattice) if e is None else e
    cap = curvature_radius_field(e, eps0).values
    s = monotone_radius_field(A.magnitude().map(lambda v: v**4), 1.0)
    return RadiusField(A.lattice, np.minimum(s.values, cap))


def regularity_radius_field(A, e, cfg):
    """Largest grid radius up to the curvature radius with ``r**-2 * sup L2-mass of |A| <= theta1 * eta``."""
    e = _zero_curvature(A.lattice) if e is None else e
    cap = curvature_radius_field(e, cfg.eps0).values
    return scaled_radius_field(A.magnitude().map(lambda v: v**2), cfg.theta1 * cfg.eta, cap)


def singular_set(A, cfg, e=None):
    """Sites whose capped integrability radius of ``|A|`` is at most the cutoff, lexicographic."""
    s = a0_radius_field(A, e, cfg.eps0)
    sites = np.argwhere(s.values <= cfg.cutoff(A.lattice) * (1 + 1e-12))
    return [tuple(int(v) for v in row) for row in sites]


@dataclass
class LowerBoundAudit:
    min_radius: float
    rho: float
    ratio: float


def radius_lower_bound_audit(A, e, cfg, center, rho):
    """``min`` of the regularity radius over ``B_rho(center)`` and its ratio to ``rho``.

    Requires curvature mass in ``B_{2 rho}`` below ``eps0`` and no singular site there.
    """
    lat = A.lattice
    e = _zero_curvature(lat) if e is None else e
    if ball_mass(e, Ball(center, 2 * rho)) >= cfg.eps0:
        raise Inapplicable("curvature mass in the doubled ball reaches eps0")
    big = ball_mask(lat, center, 2 * rho)
    sing = singular_set(A, cfg, e)
    if any(big[s] for s in sing):
        raise Inapplicable("the doubled ball contains a singular site")
    r = regularity_radius_field(A, e, cfg)
    inner = ball_mask(lat, center, rho)
    m = float(np.min(r.values[inner]))
    return LowerBoundAudit(m, rho, m / rho)


# --- sphere degree ------------------------------------------------------------


@dataclass(frozen=True)
class SphereShell:
    """Boundary of the lattice box ``[lo, hi]`` (site indices, inclusive)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != 4 or len(hi) != 4 or any(b - a < 1 for a, b in zip(lo, hi)):
            raise DegenerateShell(f"box [{lo}, {hi}] has an empty side")

    @classmethod
    def around(cls, center, radius):
        """Largest box of sites inside ``|x - center|_inf <= radius`` (index units)."""
        c = np.asarray(center, dtype=float)
        lo = np.ceil(c - radius - 1e-9).astype(int)
        hi = np.floor(c + radius + 1e-9).astype(int)
        return cls(tuple(lo), tuple(hi))

    def encloses(self, point):
        p = np.asarray(point, dtype=float)
        return bool(np.all(p > np.array(self.lo)) and np.all(p < np.array(self.hi)))

    def tetrahedra(self):
        """Vertices ``(T, 4, 4)`` (integer sites) and orientation signs ``(T,)``."""
        lo, hi = np.array(self.lo), np.array(self.hi)
        verts, signs = [], []
        for axis in range(4):
            free = [a for a in range(4) if a != axis]
            for side, normal in ((lo[axis], -1.0), (hi[axis], 1.0)):
                ranges = [range(lo[a], hi[a]) for a in free]
                corners = np.array(list(itertools.product(*ranges)), dtype=int)
                base = np.zeros((len(corners), 4), dtype=int)
                base[:, free] = corners
                base[:, axis] = side
                n = np.zeros(4)
                n[axis] = normal
                for perm in itertools.permutations(free):
                    path = [base]
                    cur = base.copy()
                    for a in perm:
                        cur = cur.copy()
                        cur[:, a] += 1
                        path.append(cur)
                    tet = np.stack(path, axis=1)
                    edges = (tet[:, 1:] - tet[:, :1]).astype(float)
                    mat = np.concatenate([np.broadcast_to(n, (len(tet), 1, 4)), edges], axis=1)
                    verts.append(tet)
                    signs.append(np.sign(np.linalg.det(mat)))
        return np.concatenate(verts), np.concatenate(signs)

    def vertices(self):
        lo, hi = np.array(self.lo), np.array(self.hi)
        grid = np.stack(np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij"), -1)
        grid = grid.reshape(-1, 4)
        on = np.any((grid == lo) | (grid == hi), axis=1)
        return grid[on]

    def euler_characteristic(self):
        """``V - E + F - T`` of the triangulation (0 for a 3-sphere)."""
        tets, _ = self.tetrahedra()
        faces, edges = set(), set()
        for t in map(lambda r: [tuple(v) for v in r], tets):
            for f in itertools.combinations(sorted(t), 3):
                faces.add(f)
            for e in itertools.combinations(sorted(t), 2):
                edges.add(e)
        return len(self.vertices()) - len(edges) + len(faces) - len(tets)


def _frame_values(frame, sites):
    lat = frame.lattice
    idx = lat.wrap(sites)
    if not lat.periodic and (np.any(idx < 0) or np.any(idx >= np.array(lat.dims))):
        raise DegenerateShell("shell leaves the clipped box")
    q = frame.values[tuple(idx[..., a] for a in range(4))]
    n = np.linalg.norm(q, axis=-1)
    if np.any(n == 0):
        raise DegenerateShell("frame vanishes at a shell vertex")
    return q / n[..., None]


def _count(qs, signs, target, tol):
    """Signed count of cones over image simplices containing ``target``; None if degenerate."""
    det = np.linalg.det(qs)
    # flat image simplices span a null set of directions and never hold a generic target
    keep = np.abs(det) > 1e-13
    qs, det, signs = qs[keep], det[keep], signs[keep]
    if len(qs) == 0:
        return 0
    lam = np.linalg.solve(np.transpose(qs, (0, 2, 1)), np.broadcast_to(target, (len(qs), 4))[..., None])[..., 0]
    lam = lam / np.max(np.abs(lam), axis=1, keepdims=True)
    inside = np.all(lam > tol, axis=1)
    near = np.all(lam > -tol, axis=1) & ~inside
    if near.any():
        return None
    return int(np.sum(np.sign(det[inside]) * signs[inside]))


def sphere_degree(frame, shell, seed=0, n_targets=1, tol=1e-9, max_draws=64):
    """Simplicial degree of the normalized frame on the shell.

    Targets are drawn uniformly on S^3 from ``seed``; a target lying on a cone
    boundary is redrawn. With ``n_targets > 1`` all counts must agree.
    """
    tets, signs = shell.tetrahedra()
    qs = _frame_values(frame, tets)
    rng = np.random.default_rng(seed)
    degrees = []
    draws = 0
    while len(degrees) < n_targets:
        if draws >= max_draws:
            raise DegenerateShell("no regular target value found")
        draws += 1
        t = rng.standard_normal(4)
        t /= np.linalg.norm(t)
        d = _count(qs, signs, t, tol)
        if d is not None:
            degrees.append(d)
    if len(set(degrees)) != 1:
        raise DegenerateShell(f"target-dependent counts {sorted(set(degrees))}")
    return degrees[0]


def degree_report(frame, shell, seed=0, n_targets=20):
    d = sphere_degree(frame, shell, seed, n_targets)
    return {"lo": list(shell.lo), "hi": list(shell.hi), "degree": d, "target_count": n_targets}
