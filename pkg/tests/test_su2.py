import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaugelab.errors import BranchCut, FormatError, ShapeError, SingularCenter
from gaugelab.io import decode, encode, read_field, write_field
from gaugelab.lattice import Lattice, ScalarField
from gaugelab.su2 import (
    GaugeField,
    abelian_wave,
    abelian_wave_total_curvature,
    bracket,
    curvature_density,
    gauge_transform,
    hedgehog_frame,
    identity_links,
    qconj,
    qexp,
    qlog,
    qmul,
    qnorm,
    random_frame,
    random_links,
    random_unit,
    total_curvature,
)

import oracles

unit = st.integers(0, 2**32 - 1).map(lambda s: random_unit(np.random.default_rng(s), ()))
small_vec = st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3).map(np.array)


@given(unit, unit)
def test_product_matches_matrices(a, b):
    np.testing.assert_allclose(oracles.to_matrix(qmul(a, b)), oracles.to_matrix(a) @ oracles.to_matrix(b), atol=1e-13)


@given(unit, unit, unit)
def test_product_is_associative_and_norm_preserving(a, b, c):
    np.testing.assert_allclose(qmul(qmul(a, b), c), qmul(a, qmul(b, c)), atol=1e-14)
    assert qnorm(qmul(a, b)) == pytest.approx(1.0, abs=1e-14)


@given(unit)
def test_conjugate_is_inverse(a):
    np.testing.assert_allclose(qmul(a, qconj(a)), [1, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(oracles.to_matrix(qconj(a)), oracles.to_matrix(a).conj().T, atol=1e-15)


@given(small_vec)
def test_exp_log_round_trip(v):
    n = np.linalg.norm(v)
    if n >= np.pi - 1e-6:
        return
    np.testing.assert_allclose(qlog(qexp(v)), v, atol=1e-12)


def test_log_of_antipode_raises():
    with pytest.raises(BranchCut):
        qlog(np.array([-1.0, 0, 0, 0]))


@given(small_vec, small_vec)
def test_bracket_matches_commutator(a, b):
    qa = np.concatenate([[0.0], a])
    qb = np.concatenate([[0.0], b])
    comm = qmul(qa, qb) - qmul(qb, qa)
    np.testing.assert_allclose(comm[1:], bracket(a, b), atol=1e-12)
    assert abs(comm[0]) < 1e-12


def test_curvature_matches_matrix_oracle():
    lat = Lattice.cubic(4, 0.5)
    U = random_links(lat, 3, beta=0.4)
    want = oracles.brute_curvature(U.links, lat.dims, 0.5)
    np.testing.assert_allclose(curvature_density(U).values, want, rtol=1e-11, atol=1e-11)


def test_identity_links_are_flat():
    lat = Lattice.cubic(4)
    assert total_curvature(identity_links(lat)) == 0.0
    g = random_frame(lat, 1)
    # pure gauge: curvature vanishes up to rounding
    assert np.max(np.abs(curvature_density(gauge_transform(identity_links(lat), g)).values)) < 1e-13


@given(st.integers(0, 10_000))
def test_gauge_invariance(seed):
    lat = Lattice.cubic(4)
    U = random_links(lat, seed)
    g = random_frame(lat, seed + 1)
    a = curvature_density(U).values
    b = curvature_density(gauge_transform(U, g)).values
    assert np.max(np.abs(a - b)) < 1e-12


def test_abelian_wave_approaches_continuum_curvature():
    errs = []
    for n in (8, 16):
        lat = Lattice.cubic(n, 1.0 / n)
        errs.append(abs(total_curvature(abelian_wave(lat)) / abelian_wave_total_curvature(lat) - 1))
    assert errs[1] < errs[0] / 3


def test_hedgehog_rejects_cell_centre():
    lat = Lattice.cubic(4)
    with pytest.raises(SingularCenter):
        hedgehog_frame(lat, (1.0, 1.0, 1.0, 1.0))
    f = hedgehog_frame(lat, (1.5, 1.5, 1.5, 1.5))
    assert np.max(np.abs(qnorm(f.values) - 1)) < 1e-15


def test_shape_checks():
    lat = Lattice.cubic(4)
    with pytest.raises(ShapeError):
        GaugeField(lat, np.zeros((4, 4, 4, 4, 4)))
    with pytest.raises(ShapeError):
        gauge_transform(identity_links(lat), random_frame(Lattice.cubic(6), 0))


@pytest.mark.parametrize("kind", ["links", "frame", "scalar"])
def test_grf1_round_trip(tmp_path, kind):
    lat = Lattice((4, 6, 4, 5), 0.25, "box")
    field = {
        "links": random_links(lat, 0),
        "frame": random_frame(lat, 0),
        "scalar": ScalarField(lat, np.random.default_rng(0).random(lat.dims)),
    }[kind]
    path = tmp_path / "f.grf"
    write_field(path, field)
    back = read_field(path, kind)
    assert back.lattice == lat
    vals = {"links": lambda f: f.links}.get(kind, lambda f: f.values)
    assert np.array_equal(vals(back), vals(field))
    assert encode(back) == encode(field)


def test_grf1_errors():
    blob = encode(random_frame(Lattice.cubic(4), 0))
    with pytest.raises(FormatError):
        decode(b"no header")
    with pytest.raises(FormatError):
        decode(b"{not json\n")
    with pytest.raises(FormatError):
        decode(blob.replace(b"GRF1", b"GRF9"))
    with pytest.raises(ShapeError):
        decode(blob[:-8])
    with pytest.raises(FormatError):
        decode(blob.replace(b'"frame"', b'"spinor"'))
