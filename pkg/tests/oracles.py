"""Independent brute-force references used by the tests.

Nothing here calls the package's kernels or quaternion helpers: balls are
enumerated cell by cell, SU(2) elements are 2x2 complex matrices, and the
weak norm is read off the distribution function.
"""

import itertools
import math

import numpy as np

# Hamilton units i, j, k as -i sigma_{x,y,z}
_SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


def to_matrix(q):
    q = np.asarray(q, dtype=float)
    m = q[..., 0, None, None] * np.eye(2)
    for a in range(3):
        m = m - 1j * q[..., a + 1, None, None] * _SIGMA[a]
    return m


def cell_distances(dims, h, periodic, site):
    """Distances from ``site`` to every cell centre, computed coordinate by coordinate."""
    grids = np.indices(dims).astype(float)
    d2 = np.zeros(dims)
    for a in range(4):
        diff = np.abs(grids[a] - site[a])
        if periodic:
            diff = np.minimum(diff, dims[a] - diff)
        d2 += diff**2
    return np.sqrt(d2) * h


def brute_ball_mass(values, dims, h, periodic, site, r):
    d = cell_distances(dims, h, periodic, site)
    return float(np.sum(values[d <= r * (1 + 1e-12)])) * h**4


def brute_mass_field(values, dims, h, periodic, r):
    out = np.zeros(dims)
    for s in itertools.product(*[range(n) for n in dims]):
        out[s] = brute_ball_mass(values, dims, h, periodic, s, r)
    return out


def brute_sup_field(values, dims, h, periodic, r):
    mass = brute_mass_field(values, dims, h, periodic, r)
    out = np.zeros(dims)
    for s in itertools.product(*[range(n) for n in dims]):
        d = cell_distances(dims, h, periodic, s)
        out[s] = float(np.max(mass[d <= r * (1 + 1e-12)]))
    return out


def brute_radius_field(u, dims, h, periodic, threshold=1.0):
    """Largest ``j h / 2`` with every ball of that radius near ``x`` holding ``int |u|^4 <= threshold``."""
    f = np.abs(u) ** 4
    if float(np.sum(f)) * h**4 <= threshold:
        return np.full(dims, np.inf)
    L = min(dims) * h
    grid = [j * h / 2 for j in range(1, int(math.floor(L / 2 / (h / 2) + 1e-9)) + 1)] if periodic else None
    out = np.full(dims, h / 4)
    sups = [brute_sup_field(f, dims, h, periodic, r) for r in grid]
    for s in itertools.product(*[range(n) for n in dims]):
        for r, sup in zip(grid, sups):
            if sup[s] <= threshold:
                out[s] = r
            else:
                break
    return out


def weak_norm(values, cell_volume, p):
    """``sup_a a * |{|f| > a}|^(1/p)`` with the supremum approached from below each value."""
    v = np.abs(np.ravel(values))
    best = 0.0
    for a in np.unique(v):
        if a == 0:
            continue
        # the level set {|f| > a - 0} contains every cell with |f| >= a
        count = int(np.sum(v >= a))
        best = max(best, a * (count * cell_volume) ** (1.0 / p))
    return best


def plaquette_trace(links, x, mu, nu, dims):
    """``(1/2) Re tr`` of the plaquette at ``x`` built from matrices."""
    def at(site, d):
        s = tuple(int(v) % n for v, n in zip(site, dims))
        return to_matrix(links[s + (d,)])

    x = np.array(x)
    emu = np.eye(4, dtype=int)[mu]
    enu = np.eye(4, dtype=int)[nu]
    P = at(x, mu) @ at(x + emu, nu) @ at(x + enu, mu).conj().T @ at(x, nu).conj().T
    return 0.5 * float(np.real(np.trace(P)))


def brute_curvature(links, dims, h):
    out = np.zeros(dims)
    for s in itertools.product(*[range(n) for n in dims]):
        tot = 0.0
        for mu in range(4):
            for nu in range(mu + 1, 4):
                tot += 4.0 / h**4 * (1.0 - plaquette_trace(links, s, mu, nu, dims))
        out[s] = tot
    return out


def hedgehog_energy_constant():
    """``|nabla (x/|x|)|^2 = 3/|x|^2`` in four dimensions, so ``rho^-2 int_{B_rho} = 3 |S^3| / 2 = 3 pi^2``."""
    return 3 * math.pi**2
