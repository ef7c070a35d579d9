"""Coulomb gauge fixing by checkerboard overrelaxation, and its variational audits.

The gauge-fixing functional of a frame ``g`` is

    F[g] = sum_{x, mu} 2 (1 - w(V_mu(x))) h**2,   V = g(x) U_mu(x) g(x + mu)^-1,

i.e. the lattice Dirichlet energy of the frame. With the sine projection
``A = vec(V) / h`` the derivative of ``F`` along ``g(x) -> exp(t xi) g(x)`` is
``2 h**3 <xi, div A(x)>``, so the mean squared divergence ``theta`` and the
squared gradient norm are related by ``|grad F|**2 = 4 h**6 V theta`` with
``V`` the number of sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ShapeError
from .lattice import Ball, ScalarField, ball_mass, sup_ball_mass
from .su2 import (
    FrameField,
    curvature_density,
    gauge_transform,
    identity_frame,
    link_mask,
    plaquette_field,
    qexp,
    qlog,
    qmul,
    qconj,
    random_frame,
    shift,
)

SIN = "sin"
LOG = "log"


@dataclass(frozen=True, eq=False)
class ConnectionField:
    lattice: object
    values: np.ndarray  # dims + (4, 3), units 1/length
    convention: str = SIN

    def magnitude(self):
        """Per-site ``|A|`` with each link's ``|A_mu|**2`` split evenly between its ends.

        The integral of ``|A|**2`` equals the plain link sum; the split keeps the
        field symmetric under reflections of the lattice. Links leaving a clipped
        box are dropped.
        """
        sq = np.sum(self.values**2, axis=-1) * link_mask(self.lattice)
        tot = np.zeros(self.lattice.dims)
        for mu in range(4):
            tot += 0.5 * (sq[..., mu] + np.roll(sq[..., mu], 1, axis=mu))
        return ScalarField(self.lattice, np.sqrt(tot))


def connection_form(U, convention=SIN):
    """Connection form of a link field: ``vec(U)/h`` or ``log(U)/h``."""
    h = U.lattice.spacing
    if convention == SIN:
        vals = U.links[..., 1:] / h
    elif convention == LOG:
        vals = qlog(U.links) / h
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return ConnectionField(U.lattice, vals, convention)


def divergence(A):
    """Backward divergence ``sum_mu A_mu(x) - A_mu(x - mu)``, shape dims + (3,)."""
    div = np.zeros(A.lattice.dims + (3,))
    for mu in range(4):
        a = A.values[..., mu, :]
        div += a - np.roll(a, 1, axis=mu)
    return div


def coulomb_residual(A):
    """``(theta, div)`` with ``theta`` the mean of ``|div A|**2`` over sites."""
    div = divergence(A)
    return float(np.mean(np.sum(div * div, axis=-1))), div


def frame_energy_density(U, g):
    """``|nabla_A g|**2`` per site: ``sum_mu 2 (1 - w(V_mu)) / h**2`` over links in the domain."""
    V = gauge_transform(U, g)
    h2 = U.lattice.spacing**2
    per_link = 2.0 * (1.0 - V.links[..., 0]) * link_mask(U.lattice)
    return ScalarField(U.lattice, np.sum(per_link, axis=-1) / h2)


def functional(U, g):
    if U.lattice != g.lattice:
        raise ShapeError("gauge field and frame live on different lattices")
    return frame_energy_density(U, g).integral()


@dataclass
class FixReport:
    trace: list
    residual: float
    sweeps: int
    omega: float
    converged: bool
    tol: float
    max_local_increase: float = 0.0
    seed: object = None

    def as_dict(self):
        return {
            "trace": list(self.trace),
            "residual": self.residual,
            "sweeps": self.sweeps,
            "omega": self.omega,
            "converged": self.converged,
            "tol": self.tol,
            "max_local_increase": self.max_local_increase,
            "seed": self.seed,
        }


def coulomb_fix(U, omega=1.7, tol=1e-12, max_sweeps=10000, seed=None, start=None):
    """Minimize the gauge-fixing functional over frames.

    Each sweep updates even sites then odd sites with the overrelaxed local
    optimum. The start is the identity frame, a seeded random frame when
    ``seed`` is given, or ``start``. Stops once ``theta <= tol``.
    """
    lat = U.lattice
    if not lat.periodic:
        raise ShapeError("gauge fixing is defined on the periodic torus only")
    if any(n % 2 for n in lat.dims):
        raise ShapeError("checkerboard sweeps need even extents on every axis")
    if not 1.0 <= omega < 2.0:
        raise ValueError("omega must lie in [1, 2)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if start is not None:
        g = start
    elif seed is not None:
        g = random_frame(lat, seed)
    else:
        g = identity_frame(lat)
    links = np.ascontiguousarray(U.links)
    frame = np.array(g.values, dtype=np.float64, order="C")
    h2 = lat.spacing**2

    def state():
        cur = FrameField(lat, frame)
        V = gauge_transform(U, cur)
        theta, _ = coulomb_residual(connection_form(V, SIN))
        return float(np.sum(2.0 * (1.0 - V.links[..., 0]))) * h2, theta

    f, theta = state()
    trace = [f]
    worst = -math.inf
    sweeps = 0
    while theta > tol and sweeps < max_sweeps:
        d0 = kernels.relax_sweep(links, frame, 0, omega, h2)
        d1 = kernels.relax_sweep(links, frame, 1, omega, h2)
        worst = max(worst, d0, d1)
        sweeps += 1
        f, theta = state()
        trace.append(f)
    report = FixReport(
        trace=trace,
        residual=theta,
        sweeps=sweeps,
        omega=omega,
        converged=theta <= tol,
        tol=tol,
        max_local_increase=max(worst, 0.0) if sweeps else 0.0,
        seed=seed,
    )
    return FrameField(lat, frame), report


def trace_monotone(trace, slack=1e-12):
    """Largest step increase of a functional trace (``<= slack`` means monotone)."""
    t = np.asarray(trace, dtype=float)
    if t.size < 2:
        return 0.0
    return float(np.max(np.diff(t)))


def gradient(U, g):
    """Gradient of the functional w.r.t. left algebra rotations at each site."""
    h = U.lattice.spacing
    _, div = coulomb_residual(connection_form(gauge_transform(U, g), SIN))
    return 2.0 * h**3 * div


# --- variations -------------------------------------------------------------


def random_algebra_field(lattice, seed, normalize=True):
    """Gaussian algebra field, scaled so that ``sum |xi|**2 h**4 = 1``."""
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(lattice.dims + (3,))
    if normalize:
        xi /= math.sqrt(float(np.sum(xi * xi)) * lattice.cell_volume)
    return xi


def _delta_functional(V, xi, t):
    """``F(exp(t xi) g) - F(g)`` from per-link increments, avoiding cancellation.

    ``w(a V b) - w(V) = w((a - 1) V b) + w(V (b - 1))`` with ``a - 1`` formed
    from ``cos(s) - 1 = -2 sin(s/2)**2``.
    """
    tx = t * np.asarray(xi, dtype=float)
    n = np.sqrt(np.sum(tx * tx, axis=-1))
    am1 = np.empty(tx.shape[:-1] + (4,))
    am1[..., 0] = -2.0 * np.sin(n / 2) ** 2
    safe = np.where(n > 0, n, 1.0)
    am1[..., 1:] = tx * np.where(n > 0, np.sin(n) / safe, 1.0)[..., None]
    a = am1.copy()
    a[..., 0] += 1.0
    total = 0.0
    for mu in range(4):
        v = V.links[..., mu, :]
        bm1 = qconj(shift(am1, mu))
        b = qconj(shift(a, mu))
        dw = qmul(qmul(am1, v), b)[..., 0] + qmul(v, bm1)[..., 0]
        total += float(np.sum(dw))
    return -2.0 * V.lattice.spacing**2 * total


@dataclass
class FirstVariation:
    fd_derivative: float
    pairing: float

    @property
    def mismatch(self):
        return abs(self.fd_derivative - self.pairing)


def dxi(xi, lattice):
    """Forward differences ``(xi(x + mu) - xi(x)) / h``, shape dims + (4, 3)."""
    out = np.empty(lattice.dims + (4, 3))
    for mu in range(4):
        out[..., mu, :] = (shift(xi, mu) - xi) / lattice.spacing
    return out


def first_variation(U, g, xi, t=1e-4):
    """Richardson-extrapolated centred difference of ``F(exp(t xi) g)`` and the exact pairing.

    The pairing is ``-2 sum <d xi, A> h**4`` with ``A`` the sine projection of
    the transformed field; the minus sign comes from the link convention
    ``g(x) U g(x + mu)^-1`` (the variation rotates the tail of each link).
    """
    V = gauge_transform(U, g)
    d = lambda s: (_delta_functional(V, xi, s) - _delta_functional(V, xi, -s)) / (2 * s)
    fd = (4.0 * d(t / 2) - d(t)) / 3.0
    A = connection_form(V, SIN).values
    pairing = -2.0 * float(np.sum(dxi(xi, U.lattice) * A)) * U.lattice.cell_volume
    return FirstVariation(fd, pairing)


def second_variation(U, g, xi, t=1e-3):
    """Richardson-extrapolated centred second difference of ``F(exp(t xi) g)``."""
    V = gauge_transform(U, g)
    d2 = lambda s: (_delta_functional(V, xi, s) + _delta_functional(V, xi, -s)) / (s * s)
    return (4.0 * d2(t / 2) - d2(t)) / 3.0


def flat_second_variation(xi, lattice):
    """``2 sum |d xi|**2 h**4``, the exact quadratic form at identity links and frame."""
    return 2.0 * float(np.sum(dxi(xi, lattice) ** 2)) * lattice.cell_volume


# --- monotonicity and stationarity -----------------------------------------


@dataclass
class EnergyProfile:
    radii: list
    zeta: list
    eps_hat: float
    margins: list = field(default_factory=list)
    slack: list = field(default_factory=list)
    worst_violation: float = 0.0

    @property
    def passes(self):
        return all(m >= -s for m, s in zip(self.margins, self.slack))

    def as_dict(self):
        return {
            "radii": list(self.radii),
            "zeta": list(self.zeta),
            "eps_hat": self.eps_hat,
            "margins": list(self.margins),
            "slack": list(self.slack),
            "worst_violation": self.worst_violation,
            "passes": self.passes,
        }


def scaled_energy_profile(U, g, x0, radii, slack_factor=10.0):
    """``zeta(rho) = rho**-2 * int_{B_rho(x0)} |nabla_A g|**2`` and the square-root audit.

    For consecutive radii the margin is
    ``sqrt(zeta2) - sqrt(zeta1) + |log(rho1/rho2)| sqrt(eps_hat)``, which should be
    ``>= -slack_factor * h / rho1``; ``eps_hat`` is the largest sup ball
    curvature over the probed balls.
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    lat = U.lattice
    dens = frame_energy_density(U, g)
    curv = curvature_density(U)
    zeta = [ball_mass(dens, Ball(x0, r)) / r**2 for r in radii]
    eps_hat = max(sup_ball_mass(curv, x0, r) for r in radii)
    margins, slack = [], []
    for (r1, z1), (r2, z2) in zip(zip(radii, zeta), zip(radii[1:], zeta[1:])):
        # rounding can leave 1 - w a hair below zero
        z1, z2, eh = max(z1, 0.0), max(z2, 0.0), max(eps_hat, 0.0)
        margins.append(math.sqrt(z2) - math.sqrt(z1) + abs(math.log(r1 / r2)) * math.sqrt(eh))
        slack.append(slack_factor * lat.spacing / r1)
    worst = max([0.0] + [-m for m in margins])
    return EnergyProfile(radii, zeta, eps_hat, margins, slack, worst)


def _jacobian(X, lattice):
    """Forward differences ``dX[..., j, k] = (X^k(x + j) - X^k(x)) / h``."""
    out = np.empty(lattice.dims + (4, 4))
    for j in range(4):
        out[..., j, :] = (shift(X, j) - X) / lattice.spacing
    return out


def field_norm(X, lattice):
    """``(sum |dX|**2 h**4)**(1/2)``, the normalization for stationarity residuals."""
    return math.sqrt(float(np.sum(_jacobian(X, lattice) ** 2)) * lattice.cell_volume)


def stationarity_residual(U, g, X, normalize=True):
    """Discrete stationarity functional for the vector field ``X`` (dims + (4,)).

    ``sum (|D|**2 delta_jk - 2 <D_j, D_k>) dX_jk h**4 + 2 sum <F_ia, A_a> X^i h**4``
    with ``D_mu = (V_mu - 1)/h`` the forward covariant differences of the frame,
    ``dX`` forward differences, ``F`` the plaquette field strength of the
    transformed links ``V`` and ``A`` their sine projection. Divided by
    ``field_norm(X)`` when ``normalize``. Not an exact lattice identity: the
    value decays as ``h**2`` for stationary frames.
    """
    lat = U.lattice
    h = lat.spacing
    X = np.asarray(X, dtype=float).reshape(lat.dims + (4,))
    V = gauge_transform(U, g)
    D = V.links.copy()
    D[..., 0] -= 1.0
    D /= h
    gram = np.einsum("...ja,...ka->...jk", D, D)
    energy = np.trace(gram, axis1=-2, axis2=-1)
    stress = energy[..., None, None] * np.eye(4) - 2.0 * gram
    term1 = float(np.sum(stress * _jacobian(X, lat)))
    A = V.links[..., 1:] / h
    term2 = 0.0
    for i in range(4):
        for a in range(4):
            if i == a:
                continue
            F = plaquette_field(V, i, a)[..., 1:] / h**2
            term2 += float(np.sum(np.sum(F * A[..., a, :], axis=-1) * X[..., i]))
    total = (term1 + 2.0 * term2) * lat.cell_volume
    if normalize:
        n = field_norm(X, lat)
        return total / n if n > 0 else 0.0
    return total


def inner_variation_fd(U, frame_fn, X, t=1e-4, normalize=True):
    """Centred difference of ``-F(frame_fn(x + t X(x)))`` with Richardson extrapolation.

    ``frame_fn`` maps points (length units, shape (..., 4)) to unit quaternions;
    for a stationary frame this matches ``stationarity_residual``.
    """
    lat = U.lattice
    pts = lat.cell_points()
    X = np.asarray(X, dtype=float).reshape(lat.dims + (4,))

    def energy(s):
        return functional(U, FrameField(lat, frame_fn(pts + s * X)))

    d = lambda s: (energy(s) - energy(-s)) / (2 * s)
    val = -(4.0 * d(t / 2) - d(t)) / 3.0
    if normalize:
        n = field_norm(X, lat)
        return val / n if n > 0 else 0.0
    return val


def hedgehog_frame_function(lattice, center):
    """Hedgehog frame as a function of continuum points (length units)."""
    center = np.asarray(center, dtype=float)

    def fn(points):
        d = lattice.displacement(center, points)
        return d / np.sqrt(np.sum(d * d, axis=-1))[..., None]

    return fn


def radial_field(lattice, center, inner, outer):
    """Radial field ``phi(r) (x - c)`` vanishing for ``r < inner`` and ``r > outer``.

    ``phi`` is a smooth bump (a squared sine in ``r``) supported on ``[inner, outer]``.
    """
    d = lattice.displacement(np.asarray(center, float), lattice.cell_points())
    r = np.sqrt(np.sum(d * d, axis=-1))
    s = np.clip((r - inner) / (outer - inner), 0.0, 1.0)
    phi = np.sin(np.pi * s) ** 2
    return d * phi[..., None]


