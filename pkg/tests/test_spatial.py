import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from precipmerge.spatial import (
    EARTH_RADIUS_KM,
    GeoPoint,
    GridSpec,
    bilinear_regrid,
    haversine_distance,
    haversine_km,
    nearest_k,
    nearest_k_bruteforce,
)


def test_geopoint_normalizes_longitude():
    assert GeoPoint(10.0, 190.0).lon == -170.0
    assert GeoPoint(10.0, -180.0).lon == -180.0
    assert GeoPoint(10.0, 180.0).lon == -180.0
    with pytest.raises(ValueError):
        GeoPoint(91.0, 0.0)


def test_haversine_known_values():
    # Antipodal points: half the Earth's circumference.
    half = math.pi * EARTH_RADIUS_KM
    assert haversine_km(0.0, 0.0, 0.0, 180.0) == pytest.approx(half, rel=1e-12)
    # One degree of latitude along a meridian.
    one_deg = math.pi * EARTH_RADIUS_KM / 180.0
    assert haversine_km(0.0, 0.0, 1.0, 0.0) == pytest.approx(one_deg, rel=1e-12)
    assert haversine_km(45.0, 7.0, 45.0, 7.0) == 0.0


@given(
    lat1=st.floats(-90, 90),
    lon1=st.floats(-360, 360),
    lat2=st.floats(-90, 90),
    lon2=st.floats(-360, 360),
)
@settings(max_examples=200, deadline=None)
def test_haversine_symmetric_and_bounded(lat1, lon1, lat2, lon2):
    d1 = float(haversine_km(lat1, lon1, lat2, lon2))
    d2 = float(haversine_km(lat2, lon2, lat1, lon1))
    assert d1 == d2
    assert 0.0 <= d1 <= math.pi * EARTH_RADIUS_KM + 1e-9


def test_gridspec_centers_and_indexing():
    g = GridSpec(lat0=10.0, lon0=20.0, dlat=0.5, dlon=0.25, nlat=4, nlon=8)
    assert g.ncells == 32
    assert g.shape() == (4, 8)
    np.testing.assert_allclose(g.lat_centers(), [10.0, 10.5, 11.0, 11.5])
    assert g.flat_index(2, 3) == 19
    c = g.cell_center(19)
    assert (c.lat, c.lon) == (11.0, 20.75)


def test_gridspec_rejects_bad_spacing():
    with pytest.raises(ValueError):
        GridSpec(0.0, 0.0, -1.0, 1.0, 2, 2)
    with pytest.raises(ValueError):
        GridSpec(89.0, 0.0, 1.0, 1.0, 5, 2)


def test_nearest_k_matches_bruteforce_randomized(rng):
    for _ in range(300):
        nlat = int(rng.integers(1, 12))
        nlon = int(rng.integers(1, 12))
        g = GridSpec(
            lat0=float(rng.uniform(-60, 60)),
            lon0=float(rng.uniform(-180, 180)),
            dlat=float(rng.uniform(0.05, 1.5)),
            dlon=float(rng.uniform(0.05, 1.5)),
            nlat=nlat,
            nlon=nlon,
        )
        p = GeoPoint(float(rng.uniform(-75, 75)), float(rng.uniform(-200, 200)))
        k = int(rng.integers(1, g.ncells + 1))
        a = nearest_k(p, g, k)
        b = nearest_k_bruteforce(p, g, k)
        assert a.entries == b.entries


def test_nearest_k_wide_grid_and_antimeridian():
    # Grids spanning most of the globe and queries across the antimeridian
    # exercise the longitude wrap in the column ordering.
    g = GridSpec(lat0=0.0, lon0=-179.0, dlat=1.0, dlon=10.0, nlat=3, nlon=36)
    p = GeoPoint(0.5, 179.5)
    assert nearest_k(p, g, 6).entries == nearest_k_bruteforce(p, g, 6).entries


def test_nearest_k_far_query_beyond_grid_edge():
    # A query on the opposite side of the globe wraps past the grid edge;
    # the closest column is then the one with the largest column index.
    g = GridSpec(lat0=11.93, lon0=-95.23, dlat=0.09, dlon=1.37, nlat=8, nlon=9)
    p = GeoPoint(-12.89, 89.39)
    assert nearest_k(p, g, 40).entries == nearest_k_bruteforce(p, g, 40).entries


def test_nearest_k_distances_nondecreasing(rng):
    g = GridSpec(lat0=35.0, lon0=20.0, dlat=0.25, dlon=0.25, nlat=20, nlon=20)
    for _ in range(50):
        p = GeoPoint(float(rng.uniform(30, 45)), float(rng.uniform(15, 30)))
        ns = nearest_k(p, g, 4)
        d = ns.distances_km
        assert all(d[i] <= d[i + 1] for i in range(len(d) - 1))
        assert len(set(ns.indices)) == 4


def test_nearest_k_exact_center_hit():
    g = GridSpec(lat0=40.0, lon0=10.0, dlat=1.0, dlon=1.0, nlat=5, nlon=5)
    ns = nearest_k(GeoPoint(42.0, 12.0), g, 1)
    assert ns.indices == (g.flat_index(2, 2),)
    assert ns.distances_km == (0.0,)


def test_nearest_k_rejects_bad_k():
    g = GridSpec(0.0, 0.0, 1.0, 1.0, 2, 2)
    with pytest.raises(ValueError):
        nearest_k(GeoPoint(0, 0), g, 0)
    with pytest.raises(ValueError):
        nearest_k(GeoPoint(0, 0), g, 5)


def _affine_field(spec: GridSpec, a, b, c):
    lat = spec.lat_centers()[:, None]
    lon = spec.lon_centers()[None, :]
    return a * lat + b * lon + c


def test_bilinear_reproduces_affine_fields():
    src = GridSpec(lat0=35.0, lon0=20.0, dlat=0.5, dlon=0.5, nlat=11, nlon=11)
    dst = GridSpec(lat0=35.1, lon0=20.2, dlat=0.37, dlon=0.41, nlat=12, nlon=11)
    f = _affine_field(src, 2.0, -3.0, 7.0)
    got = bilinear_regrid(f, src, dst)
    want = _affine_field(dst, 2.0, -3.0, 7.0)
    inside = np.isfinite(got)
    assert inside.all()
    np.testing.assert_allclose(got, want, rtol=0.0, atol=1e-12 * np.abs(want).max())


def test_bilinear_identity_is_bit_exact(rng):
    g = GridSpec(lat0=0.0, lon0=0.0, dlat=0.3, dlon=0.7, nlat=9, nlon=7)
    f = rng.normal(size=g.shape())
    out = bilinear_regrid(f, g, g)
    assert np.array_equal(out, f)


def test_bilinear_outside_span_is_nan():
    src = GridSpec(lat0=10.0, lon0=10.0, dlat=1.0, dlon=1.0, nlat=3, nlon=3)
    dst = GridSpec(lat0=8.0, lon0=8.0, dlat=1.0, dlon=1.0, nlat=7, nlon=7)
    out = bilinear_regrid(np.ones(src.shape()), src, dst)
    # Rows/cols beyond the source-centre span are undefined.
    assert np.isnan(out[0]).all() and np.isnan(out[:, 0]).all()
    assert np.isfinite(out[2:5, 2:5]).all()


def test_bilinear_nan_poisons_interpolated_cells():
    src = GridSpec(lat0=0.0, lon0=0.0, dlat=1.0, dlon=1.0, nlat=3, nlon=3)
    f = np.arange(9.0).reshape(3, 3)
    f[1, 1] = np.nan
    dst = GridSpec(lat0=0.5, lon0=0.5, dlat=1.0, dlon=1.0, nlat=2, nlon=2)
    out = bilinear_regrid(f, src, dst)
    # Every destination centre straddles the NaN source cell.
    assert np.isnan(out).all()


def test_bilinear_exact_hits_ignore_nan_corners():
    src = GridSpec(lat0=0.0, lon0=0.0, dlat=1.0, dlon=1.0, nlat=3, nlon=3)
    f = np.arange(9.0).reshape(3, 3)
    f[0, 0] = np.nan
    out = bilinear_regrid(f, src, src)
    assert np.isnan(out[0, 0])
    assert np.array_equal(out[1:], f[1:])


def test_bilinear_shape_mismatch():
    src = GridSpec(0.0, 0.0, 1.0, 1.0, 3, 3)
    with pytest.raises(ValueError):
        bilinear_regrid(np.ones((2, 3)), src, src)


def test_haversine_distance_wrapper():
    a = GeoPoint(10.0, 20.0)
    b = GeoPoint(-5.0, 120.0)
    assert haversine_distance(a, b) == float(haversine_km(10.0, 20.0, -5.0, 120.0))
