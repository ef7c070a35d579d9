import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaugelab import fixtures
from gaugelab.coulomb import connection_form, coulomb_fix
from gaugelab.errors import AuditUndefined
from gaugelab.lattice import Lattice, ScalarField
from gaugelab.radius import (
    comparability_audit,
    curly_norm,
    integrability_radius,
    interpolation_audit,
    lipschitz_defect,
    lorentz_weak_norm,
    lp_norm,
    norm_report,
    radius_field,
    radius_grid,
    scaled_radius_field,
)
from gaugelab.su2 import gauge_transform

import oracles


@pytest.fixture(scope="module")
def smooth_u():
    lat = Lattice.cubic(8, 1 / 8)
    U, _ = fixtures.make("smooth_random", lat)
    g, _ = coulomb_fix(U)
    # scaled so the radius field is finite and non-constant
    return connection_form(gauge_transform(U, g)).magnitude().map(lambda v: 3 * v)


@pytest.mark.parametrize("n", [8, 16])
def test_constant_field_radius(n):
    lat = Lattice.cubic(n, 1 / n)
    s = radius_field(ScalarField.constant(lat, 2.0))
    want = (8 * math.pi**2) ** -0.25
    assert np.all(s.values == s.values.flat[0])
    assert abs(s.values.flat[0] - want) <= 2 * lat.spacing
    assert s.values.flat[0] <= want


def test_small_total_mass_gives_infinite_radius():
    lat = Lattice.cubic(4, 1 / 8)
    s = radius_field(ScalarField.constant(lat, 1.0))
    assert np.all(np.isinf(s.values))
    assert curly_norm(ScalarField.constant(lat, 1.0)) == 0.0


def test_constant_ten_curly_norm():
    # every ball of radius h/2 holds one cell of mass 10^4 h^4 > 1 at h = 1/8, so s = h/4
    lat = Lattice.cubic(8, 1 / 8)
    u = ScalarField.constant(lat, 10.0)
    s = radius_field(u)
    assert np.all(s.values == lat.spacing / 4)
    assert curly_norm(u) == pytest.approx(32.0, rel=1e-12)


def test_radius_field_matches_brute_force_bitwise(smooth_u):
    s = radius_field(smooth_u)
    lat = smooth_u.lattice
    want = oracles.brute_radius_field(smooth_u.values, lat.dims, lat.spacing, True)
    assert np.array_equal(s.values, want)
    assert len(np.unique(s.values)) > 1
    recip = np.where(np.isinf(want), 0.0, 1.0 / want)
    assert curly_norm(smooth_u) == oracles.weak_norm(recip, lat.cell_volume, 4)


def test_bisection_agrees_with_scan(smooth_u):
    s = radius_field(smooth_u)
    for site in [(0, 0, 0, 0), (3, 1, 4, 1), (7, 7, 2, 5)]:
        assert integrability_radius(smooth_u, site) == s.values[site]


@given(st.integers(0, 10_000), st.floats(1.0, 4.0))
def test_lorentz_norm_matches_distribution_oracle(seed, p):
    lat = Lattice.cubic(4, 0.5)
    rng = np.random.default_rng(seed)
    # repeated values exercise the tie handling
    vals = rng.integers(0, 6, size=lat.dims).astype(float) * rng.random()
    f = ScalarField(lat, vals)
    assert lorentz_weak_norm(f, p) == pytest.approx(oracles.weak_norm(vals, lat.cell_volume, p), rel=1e-13)


@given(st.integers(0, 10_000))
def test_weak_norm_bounded_by_strong_norm(seed):
    lat = Lattice.cubic(4, 0.5)
    f = ScalarField(lat, np.random.default_rng(seed).random(lat.dims))
    assert lorentz_weak_norm(f, 4) <= lp_norm(f, 4) * (1 + 1e-12)


@given(st.integers(0, 10_000), st.floats(0.5, 8.0))
def test_radius_is_lipschitz(seed, scale):
    lat = Lattice.cubic(6, 1 / 6)
    u = ScalarField(lat, scale * np.random.default_rng(seed).random(lat.dims))
    s = radius_field(u)
    assert lipschitz_defect(s) <= 2 * lat.spacing
    assert set(np.unique(s.values[np.isfinite(s.values)])) <= set(radius_grid(lat)) | {lat.spacing / 4}


@given(st.integers(0, 10_000))
def test_radius_decreases_when_field_grows(seed):
    lat = Lattice.cubic(6, 1 / 6)
    u = ScalarField(lat, 4 * np.random.default_rng(seed).random(lat.dims))
    a = radius_field(u).values
    b = radius_field(u.map(lambda v: 1.5 * v)).values
    assert np.all(b <= a)


def test_norm_report_and_interpolation(smooth_u):
    rep = norm_report(smooth_u)
    assert rep.curly_over_l4 <= 6.5
    assert rep.lipschitz_defect <= 2 * smooth_u.lattice.spacing
    audit = interpolation_audit(smooth_u, 0.5)
    assert audit.ratio == pytest.approx(rep.interpolation_ratio[0.5])
    with pytest.raises(ValueError):
        interpolation_audit(smooth_u, 1.5)
    with pytest.raises(AuditUndefined):
        interpolation_audit(ScalarField.constant(smooth_u.lattice, 0.1), 0.5)


def test_comparability(smooth_u):
    assert comparability_audit(smooth_u) >= 0.0
    with pytest.raises(AuditUndefined):
        comparability_audit(ScalarField.constant(smooth_u.lattice, 0.1))


@given(st.integers(0, 10_000), st.floats(0.05, 3.0), st.sampled_from(["torus", "box"]), st.booleans())
def test_scaled_radius_matches_exhaustive_scan(seed, thr, geometry, finite_cap):
    lat = Lattice.cubic(4, 0.5, geometry)
    rng = np.random.default_rng(seed)
    f = ScalarField(lat, rng.random(lat.dims) * (rng.random(lat.dims) < 0.3))
    cap = rng.choice([0.5, 1.0, 2.5], size=lat.dims) if finite_cap else np.inf
    got = scaled_radius_field(f, thr, cap).values
    grid = radius_grid(lat)
    sups = [oracles.brute_sup_field(f.values, lat.dims, 0.5, lat.periodic, r) for r in grid]
    want = np.full(lat.dims, 0.125)
    capv = np.broadcast_to(cap, lat.dims)
    for site in np.ndindex(*lat.dims):
        ok = [sup[site] <= thr * r * r and r <= capv[site] for r, sup in zip(grid, sups)]
        for r, o in zip(grid, ok):
            if o:
                want[site] = r
        if np.isinf(capv[site]) and ok[-1]:
            want[site] = np.inf
    np.testing.assert_array_equal(got, np.minimum(want, capv))
