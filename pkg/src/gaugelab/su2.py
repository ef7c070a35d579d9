"""SU(2) as unit quaternions, lattice gauge fields and frames.

Quaternions are stored as ``(..., 4)`` arrays in the order ``(w, x, y, z)``.
The Lie algebra is identified with imaginary quaternions, stored as ``(..., 3)``
vectors; the bracket is ``[a, b] = 2 a x b`` and ``exp(a) = (cos|a|, sin|a| a/|a|)``.

Link arrays have shape ``dims + (4, 4)``: site, direction, quaternion component.
Frame arrays have shape ``dims + (4,)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchCut, ShapeError, SingularCenter
from .lattice import Lattice, ScalarField

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
_CONJ = np.array([1.0, -1.0, -1.0, -1.0])


def qmul(a, b):
    """Hamilton product, broadcasting over leading axes."""
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def qconj(a):
    return np.asarray(a) * _CONJ


qinv = qconj


def qnorm(a):
    a = np.asarray(a)
    return np.sqrt(np.einsum("...i,...i", a, a))


def qnormalize(a):
    return np.asarray(a) / qnorm(a)[..., None]


def qdot(a, b):
    return np.einsum("...i,...i", a, b)


def qexp(v):
    """Exponential of an imaginary quaternion given as a 3-vector."""
    v = np.asarray(v, dtype=float)
    n = np.sqrt(np.einsum("...i,...i", v, v))
    safe = np.where(n > 0, n, 1.0)
    # sin(n)/n, with the limit 1 at the origin
    sinc = np.where(n > 0, np.sin(n) / safe, 1.0)
    out = np.empty(v.shape[:-1] + (4,))
    out[..., 0] = np.cos(n)
    out[..., 1:] = v * sinc[..., None]
    return out


def qlog(q):
    """Principal logarithm as a 3-vector with norm in [0, pi).

    Raises ``BranchCut`` for the antipode ``-1``, where the axis is undefined.
    """
    q = np.asarray(q, dtype=float)
    vec = q[..., 1:]
    vn = np.sqrt(np.einsum("...i,...i", vec, vec))
    if np.any((vn == 0) & (q[..., 0] < 0)):
        raise BranchCut("logarithm of -1 has no principal value")
    angle = np.arctan2(vn, q[..., 0])
    scale = np.where(vn > 0, angle / np.where(vn > 0, vn, 1.0), 1.0)
    return vec * scale[..., None]


def bracket(a, b):
    return 2.0 * np.cross(a, b)


def random_unit(rng, shape):
    """Haar-uniform unit quaternions."""
    q = rng.standard_normal(tuple(shape) + (4,))
    return qnormalize(q)


def _readonly(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GaugeField:
    lattice: Lattice
    links: np.ndarray

    def __post_init__(self):
        shape = self.lattice.dims + (4, 4)
        links = np.asarray(self.links, dtype=np.float64)
        if links.size != int(np.prod(shape)):
            raise ShapeError(f"link array of size {links.size} does not fit {shape}")
        object.__setattr__(self, "links", _readonly(links.reshape(shape)))

    def unit_defect(self):
        return float(np.max(np.abs(qnorm(self.links) - 1.0)))

    def link(self, x, mu):
        return self.links[tuple(self.lattice.wrap(x))][mu]


@dataclass(frozen=True, eq=False)
class FrameField:
    lattice: Lattice
    values: np.ndarray

    def __post_init__(self):
        shape = self.lattice.dims + (4,)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.size != int(np.prod(shape)):
            raise ShapeError(f"frame array of size {vals.size} does not fit {shape}")
        object.__setattr__(self, "values", _readonly(vals.reshape(shape)))

    def unit_defect(self):
        return float(np.max(np.abs(qnorm(self.values) - 1.0)))

    def inverse(self):
        return FrameField(self.lattice, qconj(self.values))

    def conjugated(self):
        """Pointwise quaternion conjugation (an orientation-reversing map of S^3)."""
        return FrameField(self.lattice, qconj(self.values))

    def left_multiply(self, q):
        return FrameField(self.lattice, qmul(np.broadcast_to(q, self.values.shape), self.values))


def identity_links(lattice):
    return GaugeField(lattice, np.broadcast_to(IDENTITY, lattice.dims + (4, 4)).copy())


def identity_frame(lattice):
    return FrameField(lattice, np.broadcast_to(IDENTITY, lattice.dims + (4,)).copy())


def shift(arr, mu, step=1):
    """``out[x] = arr[x + step * e_mu]`` with periodic wrap."""
    return np.roll(arr, -step, axis=mu)


def _check(U, g):
    if U.lattice != g.lattice:
        raise ShapeError("gauge field and frame live on different lattices")


def gauge_transform(U, g):
    """``U_mu(x) -> g(x) U_mu(x) g(x + mu)^-1``."""
    _check(U, g)
    out = np.empty_like(U.links)
    for mu in range(4):
        out[..., mu, :] = qmul(qmul(g.values, U.links[..., mu, :]), qconj(shift(g.values, mu)))
    return GaugeField(U.lattice, qnormalize(out))


def plaquette_field(U, mu, nu):
    """``U_mu(x) U_nu(x+mu) U_mu(x+nu)^-1 U_nu(x)^-1`` at every site."""
    if mu == nu:
        raise ValueError("plaquette needs two distinct directions")
    L = U.links
    a = L[..., mu, :]
    b = shift(L[..., nu, :], mu)
    c = shift(L[..., mu, :], nu)
    d = L[..., nu, :]
    return qmul(qmul(a, b), qmul(qconj(c), qconj(d)))


def plaquette(U, x, mu, nu):
    return plaquette_field(U, mu, nu)[tuple(U.lattice.wrap(x))]


def link_mask(lattice):
    """Links ``x -> x + mu`` that stay inside the domain (all of them on a torus)."""
    mask = np.ones(lattice.dims + (4,), dtype=bool)
    if not lattice.periodic:
        for mu in range(4):
            idx = [slice(None)] * 4 + [mu]
            idx[mu] = -1
            mask[tuple(idx)] = False
    return mask


def plaquette_mask(lattice, mu, nu):
    """Plaquettes based at ``x`` in plane ``(mu, nu)`` that stay inside the domain."""
    lm = link_mask(lattice)
    return lm[..., mu] & lm[..., nu]


def curvature_density(U):
    """Plaquette energy density: sum over planes of ``(4/h^4)(1 - w(P))``.

    On a clipped box plaquettes leaving the domain are dropped.
    """
    h4 = U.lattice.spacing**4
    e = np.zeros(U.lattice.dims)
    for mu in range(4):
        for nu in range(mu + 1, 4):
            term = (4.0 / h4) * (1.0 - plaquette_field(U, mu, nu)[..., 0])
            if not U.lattice.periodic:
                term = np.where(plaquette_mask(U.lattice, mu, nu), term, 0.0)
            e += term
    return ScalarField(U.lattice, e)


def total_curvature(U):
    return curvature_density(U).integral()


# --- generators ------------------------------------------------------------


def random_links(lattice, seed, beta=1.0):
    """Links ``exp(beta * n)`` with ``n`` standard normal in the algebra.

    ``beta = 0`` yields identity links; large ``beta`` approaches Haar noise.
    """
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(lattice.dims + (4, 3))
    return GaugeField(lattice, qexp(beta * a))


def random_frame(lattice, seed):
    rng = np.random.default_rng(seed)
    return FrameField(lattice, random_unit(rng, lattice.dims))


def abelian_wave(lattice, amplitudes=(1.0, 0.5, 0.25, 0.125), axis=2):
    """Abelian field ``A_mu = a_mu sin(2 pi x_{mu+1} / L_{mu+1})`` along one algebra axis.

    Links are ``exp(h A_mu)`` sampled at the link's base site.
    """
    h = lattice.spacing
    x = lattice.cell_points()
    a = np.zeros(lattice.dims + (4, 3))
    for mu in range(4):
        nu = (mu + 1) % 4
        k = 2 * np.pi / lattice.lengths[nu]
        a[..., mu, axis] = amplitudes[mu] * np.sin(k * x[..., nu])
    return GaugeField(lattice, qexp(h * a))


def abelian_wave_total_curvature(lattice, amplitudes=(1.0, 0.5, 0.25, 0.125)):
    """Continuum total curvature of ``abelian_wave`` on the same torus."""
    vol = float(np.prod(lattice.lengths))
    total = 0.0
    for mu in range(4):
        k = 2 * np.pi / lattice.lengths[(mu + 1) % 4]
        total += (amplitudes[mu] * k) ** 2
    return total * vol


def hedgehog_frame(lattice, center):
    """Frame ``q(x) = (x - x0)/|x - x0|`` read as a unit quaternion.

    ``center`` is a point in length units; the nearest-image displacement is used.
    """
    center = np.asarray(center, dtype=float)
    d = lattice.displacement(center, lattice.cell_points())
    n = np.sqrt(np.sum(d * d, axis=-1))
    if np.min(n) < 1e-12 * lattice.spacing:
        raise SingularCenter(f"hedgehog centre {tuple(center)} sits on a cell centre")
    return FrameField(lattice, d / n[..., None])


def default_hedgehog_center(lattice):
    """Centre of the cell block near the middle of the lattice (never a cell centre)."""
    return tuple((n // 2 - 0.5) * lattice.spacing for n in lattice.dims)
