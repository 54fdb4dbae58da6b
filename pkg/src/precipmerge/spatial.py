"""Geodesic distances, nearest-neighbour queries and bilinear regridding
on regular latitude/longitude grids.

Grid cells are addressed by a flat row-major index ``i * nlon + j`` where
``i`` counts latitude rows and ``j`` longitude columns. All distances are
great-circle (haversine) kilometres on a sphere of mean Earth radius.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_KM = 6371.0088  # IUGG mean Earth radius


def _normalize_lon(lon: float) -> float:
    """Map a longitude in degrees onto [-180, 180)."""
    lon = math.fmod(lon + 180.0, 360.0)
    if lon < 0.0:
        lon += 360.0
    return lon - 180.0


@dataclass(frozen=True)
class GeoPoint:
    """A point on the sphere; ``lon`` is normalized to [-180, 180)."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        object.__setattr__(self, "lon", _normalize_lon(float(self.lon)))
        object.__setattr__(self, "lat", float(self.lat))


@dataclass(frozen=True)
class GridSpec:
    """Regular lat/lon grid; (lat0, lon0) is the centre of cell (0, 0)."""

    lat0: float
    lon0: float
    dlat: float
    dlon: float
    nlat: int
    nlon: int

    def __post_init__(self):
        if self.dlat <= 0.0 or self.dlon <= 0.0:
            raise ValueError("grid spacing must be positive")
        if self.nlat < 1 or self.nlon < 1:
            raise ValueError("grid dimensions must be at least 1")
        last_lat = self.lat0 + (self.nlat - 1) * self.dlat
        if not (-90.0 <= self.lat0 <= 90.0 and -90.0 <= last_lat <= 90.0):
            raise ValueError("grid latitude rows leave [-90, 90]")

    @property
    def ncells(self) -> int:
        return self.nlat * self.nlon

    def lat_centers(self) -> np.ndarray:
        return self.lat0 + np.arange(self.nlat, dtype=np.float64) * self.dlat

    def lon_centers(self) -> np.ndarray:
        return self.lon0 + np.arange(self.nlon, dtype=np.float64) * self.dlon

    def flat_index(self, i: int, j: int) -> int:
        return i * self.nlon + j

    def cell_center(self, flat: int) -> GeoPoint:
        i, j = divmod(int(flat), self.nlon)
        return GeoPoint(self.lat0 + i * self.dlat, self.lon0 + j * self.dlon)

    def shape(self) -> tuple[int, int]:
        return (self.nlat, self.nlon)


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km; accepts scalars or numpy arrays.

    ``sin^2(dlon / 2)`` is periodic, so longitudes need no normalization.
    """
    p1 = np.deg2rad(np.asarray(lat1, dtype=np.float64))
    l1 = np.deg2rad(np.asarray(lon1, dtype=np.float64))
    p2 = np.deg2rad(np.asarray(lat2, dtype=np.float64))
    l2 = np.deg2rad(np.asarray(lon2, dtype=np.float64))
    a = np.sin((p2 - p1) / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin((l2 - l1) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(a)))


def _haversine_scalar(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Scalar haversine via libm; both nearest-neighbour implementations
    share it so their reported distances agree bit for bit (numpy ufuncs
    may round the last ulp differently between array shapes)."""
    p1 = math.radians(lat1)
    l1 = math.radians(lon1)
    p2 = math.radians(lat2)
    l2 = math.radians(lon2)
    a = (
        math.sin((p2 - p1) / 2.0) ** 2
        + math.cos(p1) * math.cos(p2) * math.sin((l2 - l1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    return _haversine_scalar(a.lat, a.lon, b.lat, b.lon)


@dataclass(frozen=True)
class NeighborSet:
    """The k nearest grid cells to a query point.

    ``entries`` is a tuple of ``(flat_index, distance_km)`` pairs sorted by
    ascending distance, ties broken by ascending flat index.
    """

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        dists = [d for _, d in self.entries]
        if any(b < a for a, b in zip(dists, dists[1:])):
            raise ValueError("neighbor distances must be non-decreasing")

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.entries)

    @property
    def distances_km(self) -> tuple[float, ...]:
        return tuple(d for _, d in self.entries)


def nearest_k_bruteforce(p: GeoPoint, grid: GridSpec, k: int) -> NeighborSet:
    """Scan every cell; reference implementation for nearest_k."""
    if k > grid.ncells:
        raise ValueError(f"k={k} exceeds grid size {grid.ncells}")
    lats = np.repeat(grid.lat_centers(), grid.nlon)
    lons = np.tile(grid.lon_centers(), grid.nlat)
    d = np.array(
        [_haversine_scalar(p.lat, p.lon, float(a), float(b)) for a, b in zip(lats, lons)]
    )
    order = np.lexsort((np.arange(grid.ncells), d))[:k]
    return NeighborSet(tuple((int(i), float(d[i])) for i in order))


def _lon_delta(lon: float, ref: float) -> float:
    """Signed longitude difference lon - ref wrapped to [-180, 180)."""
    return _normalize_lon(lon - ref)


def nearest_k(p: GeoPoint, grid: GridSpec, k: int) -> NeighborSet:
    """The k grid-cell centres nearest to ``p``.

    Within a latitude row the distance grows with the wrapped absolute
    longitude offset, so columns are visited in that order and each row
    stops at the first column strictly worse than the current k-th best.
    Rows expand outward from the closest one and a row whose meridional
    offset alone exceeds the k-th best distance ends the sweep in that
    direction. The result is identical to :func:`nearest_k_bruteforce`.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k > grid.ncells:
        raise ValueError(f"k={k} exceeds grid size {grid.ncells}")

    lat_c = grid.lat_centers()
    lon_c = grid.lon_centers()
    nlat = grid.nlat
    i0 = min(nlat - 1, max(0, round((p.lat - grid.lat0) / grid.dlat)))
    lon_off = np.abs([_lon_delta(lon, p.lon) for lon in lon_c])
    col_order = np.lexsort((np.arange(grid.nlon), lon_off))

    # Max-heap of the k best (distance, flat) seen so far, stored negated.
    heap: list[tuple[float, int]] = []

    def worst() -> tuple[float, int]:
        d, f = heap[0]
        return (-d, -f)

    def offer(i: int, j: int) -> float:
        d = _haversine_scalar(p.lat, p.lon, float(lat_c[i]), float(lon_c[j]))
        cand = (d, grid.flat_index(i, j))
        if len(heap) < k:
            heapq.heappush(heap, (-cand[0], -cand[1]))
        elif cand < worst():
            heapq.heapreplace(heap, (-cand[0], -cand[1]))
        return d

    def scan_row(i: int) -> None:
        for j in col_order:
            d = offer(i, int(j))
            if len(heap) == k and d > worst()[0]:
                break

    deg2km = math.pi * EARTH_RADIUS_KM / 180.0
    for step in (1, -1):
        i = i0 if step == 1 else i0 - 1
        while 0 <= i < nlat:
            if len(heap) == k:
                row_bound = abs(p.lat - lat_c[i]) * deg2km
                if row_bound > worst()[0]:
                    break
            scan_row(i)
            i += step

    out = sorted((-d, -f) for d, f in heap)
    return NeighborSet(tuple((f, d) for d, f in out))


def bilinear_regrid(field: np.ndarray, source: GridSpec, target: GridSpec) -> np.ndarray:
    """Resample ``field`` (shape source.nlat x source.nlon, NaN = missing)
    onto the cell centres of ``target``.

    Standard bilinear interpolation inside each source cell. Target centres
    outside the span of source centres come back NaN, and NaN in any of the
    four enclosing source values poisons the output cell. Target centres
    that coincide exactly with a source centre reproduce the source value
    bit for bit.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.shape != source.shape():
        raise ValueError(f"field shape {field.shape} does not match grid {source.shape()}")

    s_lat = source.lat_centers()
    s_lon = source.lon_centers()
    t_lat = target.lat_centers()
    t_lon = target.lon_centers()

    def axis_coords(tc: np.ndarray, origin: float, step: float, n: int):
        t = (tc - origin) / step
        lo = np.floor(t)
        lo = np.clip(lo, 0, max(n - 2, 0)).astype(np.intp)
        frac = t - lo
        hi = np.minimum(lo + 1, n - 1)
        return lo, hi, frac

    i_lo, i_hi, u = axis_coords(t_lat, source.lat0, source.dlat, source.nlat)
    j_lo, j_hi, v = axis_coords(t_lon, source.lon0, source.dlon, source.nlon)

    inside_lat = (t_lat >= s_lat[0]) & (t_lat <= s_lat[-1])
    inside_lon = (t_lon >= s_lon[0]) & (t_lon <= s_lon[-1])

    u2 = u[:, None]
    v2 = v[None, :]
    out = (
        (1.0 - u2) * (1.0 - v2) * field[np.ix_(i_lo, j_lo)]
        + (1.0 - u2) * v2 * field[np.ix_(i_lo, j_hi)]
        + u2 * (1.0 - v2) * field[np.ix_(i_hi, j_lo)]
        + u2 * v2 * field[np.ix_(i_hi, j_hi)]
    )

    # Exact centre hits bypass the weighted sum so that a NaN in an
    # unused corner cannot poison them and values round-trip bit-exactly.
    ei = np.searchsorted(s_lat, t_lat)
    ei_ok = (ei < source.nlat) & (s_lat[np.minimum(ei, source.nlat - 1)] == t_lat)
    ej = np.searchsorted(s_lon, t_lon)
    ej_ok = (ej < source.nlon) & (s_lon[np.minimum(ej, source.nlon - 1)] == t_lon)
    if ei_ok.any() and ej_ok.any():
        rows = np.nonzero(ei_ok)[0]
        cols = np.nonzero(ej_ok)[0]
        out[np.ix_(rows, cols)] = field[np.ix_(ei[rows], ej[cols])]

    out[~inside_lat, :] = np.nan
    out[:, ~inside_lon] = np.nan
    return out
