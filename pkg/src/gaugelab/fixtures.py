"""Named, seeded fixtures. Regenerating ``(name, seed, lattice)`` is bit-identical.

Gauge fixtures return ``(links, frame)``; ``frame`` is ``None`` unless the
fixture carries one (``hedgehog``). ``two_spike`` and ``dyadic_multiscale``
are abelian fields whose curvature concentrates in localized bumps of a
prescribed mass.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .lattice import Lattice
from .su2 import (
    GaugeField,
    abelian_wave,
    default_hedgehog_center,
    gauge_transform,
    curvature_density,
    hedgehog_frame,
    identity_links,
    qexp,
    random_frame,
    random_links,
)

NAMES = ("flat", "pure_gauge", "abelian_wave", "hedgehog", "random", "smooth_random",
         "two_spike", "dyadic_multiscale")


def _bump_algebra(lattice, center, width, amplitude):
    """``A_0 = -a d_1 psi``, ``A_1 = a d_0 psi`` for a Gaussian ``psi``; curvature ``F_01 = a (d_0^2 + d_1^2) psi``."""
    d = lattice.displacement(np.asarray(center, float), lattice.cell_points())
    a = np.zeros(lattice.dims + (4, 3))
    # derivatives sampled at link midpoints keep the lattice curl close to the continuum one
    h = lattice.spacing
    for mu, (sign, nu) in ((0, (-1.0, 1)), (1, (1.0, 0))):
        dm = d.copy()
        dm[..., mu] += h / 2
        r2m = np.sum(dm * dm, axis=-1)
        psim = width**2 * np.exp(-r2m / (2 * width**2))
        a[..., mu, 2] = sign * amplitude * (-dm[..., nu] / width**2) * psim
    return a


def _links(lattice, algebra):
    return GaugeField(lattice, qexp(lattice.spacing * algebra))


def bump_amplitude(lattice, center, width, mass):
    """Amplitude giving a single bump the curvature mass ``mass``."""

    def excess(a):
        return curvature_density(_links(lattice, _bump_algebra(lattice, center, width, a))).integral() - mass

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise ValueError("bump mass out of reach")
    return brentq(excess, 0.0, hi, xtol=1e-13, rtol=1e-13)


def bumps(lattice, centers, widths, masses):
    a = np.zeros(lattice.dims + (4, 3))
    for c, w, m in zip(centers, widths, masses):
        a += _bump_algebra(lattice, c, w, bump_amplitude(lattice, c, w, m))
    return _links(lattice, a)


def two_spike_layout(lattice):
    """Two bumps on axis 0, symmetric about the middle cell: centres, widths, masses."""
    h = lattice.spacing
    mid = np.array([n // 2 for n in lattice.dims], float) * h
    off = np.array([3.0 * h, 0, 0, 0])
    return [mid - off, mid + off], [0.8 * h, 0.8 * h], [2.0, 2.0]


def dyadic_layout(lattice):
    """Bumps of widths ``5 h`` and ``0.625 h``, scales ``r`` and ``gamma**3 r`` for ``r = 5 h``."""
    h = lattice.spacing
    mid = np.array([n // 2 for n in lattice.dims], float) * h
    off = np.array([2.0 * h, 0, 0, 0])
    return [mid - off, mid + off], [5.0 * h, 0.625 * h], [2.0, 1.4]


def make(name, lattice, seed=0, beta=1.0, center=None):
    """``(links, frame)`` for the named fixture."""
    if name == "flat":
        return identity_links(lattice), None
    if name == "pure_gauge":
        return gauge_transform(identity_links(lattice), random_frame(lattice, seed)), None
    if name == "abelian_wave":
        return abelian_wave(lattice), None
    if name == "hedgehog":
        c = default_hedgehog_center(lattice) if center is None else center
        return identity_links(lattice), hedgehog_frame(lattice, c)
    if name == "random":
        return random_links(lattice, seed, beta), None
    if name == "smooth_random":
        return smooth_random(lattice, seed), None
    if name == "two_spike":
        return bumps(lattice, *two_spike_layout(lattice)), None
    if name == "dyadic_multiscale":
        return bumps(lattice, *dyadic_layout(lattice)), None
    raise ValueError(f"unknown fixture {name!r}; expected one of {', '.join(NAMES)}")


def smooth_random(lattice, seed, modes=3, amplitude=0.6):
    """Random superposition of the lowest Fourier modes in every algebra component."""
    rng = np.random.default_rng(seed)
    x = lattice.cell_points()
    a = np.zeros(lattice.dims + (4, 3))
    L = np.array(lattice.lengths)
    for mu in range(4):
        for c in range(3):
            for _ in range(modes):
                k = rng.integers(-1, 2, size=4) * 2 * np.pi / L
                phase = rng.uniform(0, 2 * np.pi)
                a[..., mu, c] += amplitude / modes * rng.standard_normal() * np.cos(x @ k + phase)
    return _links(lattice, a)


def default_lattice(name, n=None):
    """Lattice used when only the fixture name is given."""
    if name in ("two_spike", "dyadic_multiscale"):
        return Lattice.cubic(n or 12, 1.0, "torus")
    if name == "hedgehog":
        m = n or 16
        return Lattice.cubic(m, 1.0 / m, "torus")
    m = n or 8
    return Lattice.cubic(m, 1.0 / m, "torus")
