"""Deterministic synthetic benchmark generator.

A latent daily precipitation field over a fixed study region is built
from spatial Gaussian bumps whose amplitudes follow an AR(1) day-to-day
process, rectified at a wetness threshold and modulated by a smooth
terrain field (orographic coupling). Whole days go dry with the
zero-inflation probability. Two pseudo-products observe the field at
their own grid-cell centers through monotone power distortions with
multiplicative lognormal noise plus additive drizzle false alarms;
gauges observe the field at station coordinates with their own
(smaller) multiplicative noise.

Every draw comes from one seeded generator in a fixed order, so a spec
generates byte-identical files on every run.
"""

from __future__ import annotations

import datetime
import json
import os
from dataclasses import dataclass

import numpy as np

from precipmerge.ingest.ghcnd import format_dly_lines, format_station_line
from precipmerge.ingest.gridseries import GridSeries, write_grid_series
from precipmerge.ingest.samples import StationRecord
from precipmerge.spatial import GeoPoint, GridSpec

# Fixed study region (degrees): lat on the first axis, lon on the second.
REGION = (35.0, 40.0, 20.0, 25.0)

_N_FIELD_BUMPS = 30
_N_TERRAIN_BUMPS = 12
_PERSISTENCE = 0.6
_WET_THRESHOLD = 0.35
_BASE_OFFSET = 1.6  # shifts the rectifier so most stations are wet on wet days
_MM_SCALE = 5.0
_LATENT_EXP = 1.2
_REF_MM = 8.0


@dataclass(frozen=True)
class ProductSpec:
    """How a pseudo-product observes the latent field: value = bias *
    ref * (latent/ref)^(1 + nonlinearity*distortion) * exp(noise*eps)
    + drizzle * |eps'|.

    The half-normal drizzle term keeps dry cells from reporting exact
    zeros. Without it every retrieval shares the gauges' dry support and
    separating no-rain from light rain is trivially easy for any model."""

    bias: float = 1.0
    noise: float = 0.3
    distortion: float = 1.0
    drizzle: float = 0.0

    def __post_init__(self):
        if self.bias <= 0:
            raise ValueError("bias must be positive")
        if self.noise < 0 or self.distortion < 0 or self.drizzle < 0:
            raise ValueError("noise, distortion and drizzle must not be negative")


@dataclass(frozen=True)
class SynthSpec:
    stations: int = 100
    days: int = 365
    start_date: datetime.date = datetime.date(2014, 1, 1)
    seed: int = 9
    grid_a: tuple = (20, 20)  # (nlat, nlon)
    grid_b: tuple = (20, 20)
    nonlinearity: float = 0.8
    zero_inflation: float = 0.25
    product_a: ProductSpec = ProductSpec(bias=1.15, noise=0.7, distortion=1.0, drizzle=0.5)
    product_b: ProductSpec = ProductSpec(bias=0.95, noise=0.35, distortion=0.3, drizzle=0.12)
    gauge_noise: float = 0.08
    orography: float = 0.6

    def __post_init__(self):
        if self.stations < 1 or self.days < 1:
            raise ValueError("stations and days must be positive")
        for dims in (self.grid_a, self.grid_b):
            if len(dims) != 2 or dims[0] < 2 or dims[1] < 2:
                raise ValueError("grid dims must be (nlat, nlon) with both >= 2")
        if not 0.0 <= self.zero_inflation <= 1.0:
            raise ValueError("zero_inflation must be in [0, 1]")
        if self.gauge_noise < 0 or self.nonlinearity < 0 or self.orography < 0:
            raise ValueError("noise/nonlinearity/orography must not be negative")

    def grid_spec_a(self) -> GridSpec:
        return _cover_region(self.grid_a, shift=0.0)

    def grid_spec_b(self) -> GridSpec:
        # Quarter-cell registration shift keeps product-B cell centers
        # (and therefore neighbor distances) distinct from product A's.
        return _cover_region(self.grid_b, shift=0.25)

    def dates(self) -> list[datetime.date]:
        return [self.start_date + datetime.timedelta(days=i) for i in range(self.days)]


def _cover_region(dims, shift: float) -> GridSpec:
    lat_lo, lat_hi, lon_lo, lon_hi = REGION
    nlat, nlon = int(dims[0]), int(dims[1])
    dlat = (lat_hi - lat_lo) / nlat
    dlon = (lon_hi - lon_lo) / nlon
    return GridSpec(
        lat0=lat_lo + dlat * (0.5 + shift),
        lon0=lon_lo + dlon * (0.5 + shift),
        dlat=dlat,
        dlon=dlon,
        nlat=nlat,
        nlon=nlon,
    )


def _bump_basis(lat, lon, centers, sigmas, scales) -> np.ndarray:
    """(points, bumps) Gaussian responses in degree space."""
    d2 = (lat[:, None] - centers[None, :, 0]) ** 2 + (lon[:, None] - centers[None, :, 1]) ** 2
    return scales[None, :] * np.exp(-0.5 * d2 / sigmas[None, :] ** 2)


def _grid_points(spec: GridSpec):
    lat = np.repeat(spec.lat_centers(), spec.nlon)
    lon = np.tile(spec.lon_centers(), spec.nlat)
    return lat, lon


@dataclass
class SynthData:
    """In-memory synthetic dataset before file emission."""

    spec: SynthSpec
    station_ids: list
    station_points: list
    elevations: np.ndarray
    gauge_mm: np.ndarray  # (days, stations)
    product_a: GridSeries
    product_b: GridSeries


def generate(spec: SynthSpec) -> SynthData:
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    lat_lo, lat_hi, lon_lo, lon_hi = REGION

    k = _N_FIELD_BUMPS
    bump_centers = np.column_stack(
        [rng.uniform(lat_lo - 0.5, lat_hi + 0.5, k), rng.uniform(lon_lo - 0.5, lon_hi + 0.5, k)]
    )
    bump_sigmas = rng.uniform(0.5, 1.3, k)
    bump_scales = rng.uniform(0.5, 1.5, k)

    m = _N_TERRAIN_BUMPS
    terr_centers = np.column_stack(
        [rng.uniform(lat_lo - 0.5, lat_hi + 0.5, m), rng.uniform(lon_lo - 0.5, lon_hi + 0.5, m)]
    )
    terr_sigmas = rng.uniform(0.8, 1.8, m)
    terr_scales = rng.uniform(0.3, 1.0, m)

    margin = 0.4
    st_lat = rng.uniform(lat_lo + margin, lat_hi - margin, spec.stations)
    st_lon = rng.uniform(lon_lo + margin, lon_hi - margin, spec.stations)
    elev_noise = rng.normal(0.0, 25.0, spec.stations)

    amps = np.empty((spec.days, k))
    innov = rng.normal(size=(spec.days, k))
    amps[0] = innov[0]
    rho = _PERSISTENCE
    for t in range(1, spec.days):
        amps[t] = rho * amps[t - 1] + np.sqrt(1.0 - rho * rho) * innov[t]

    dry_day = rng.random(spec.days) < spec.zero_inflation

    grid_a = spec.grid_spec_a()
    grid_b = spec.grid_spec_b()
    lat_a, lon_a = _grid_points(grid_a)
    lat_b, lon_b = _grid_points(grid_b)

    noise_a = rng.normal(size=(spec.days, grid_a.ncells))
    noise_b = rng.normal(size=(spec.days, grid_b.ncells))
    noise_g = rng.normal(size=(spec.days, spec.stations))
    # Drizzle false alarms share a daily amplitude, so bad-retrieval days
    # raise every cell at once and cannot be filtered out cell by cell.
    alarm_a = np.abs(rng.normal(size=(spec.days, 1))) * np.abs(
        rng.normal(size=(spec.days, grid_a.ncells))
    )
    alarm_b = np.abs(rng.normal(size=(spec.days, 1))) * np.abs(
        rng.normal(size=(spec.days, grid_b.ncells))
    )

    def latent_at(lat, lon) -> np.ndarray:
        basis = _bump_basis(lat, lon, bump_centers, bump_sigmas, bump_scales)
        terrain = _bump_basis(lat, lon, terr_centers, terr_sigmas, terr_scales).sum(axis=1)
        base = amps @ basis.T + (_BASE_OFFSET - _WET_THRESHOLD)
        wet = np.maximum(base, 0.0) ** _LATENT_EXP * _MM_SCALE
        orog = 1.0 + spec.orography * (terrain - terrain.mean())
        field = wet * np.maximum(orog, 0.1)[None, :]
        field[dry_day] = 0.0
        return field, terrain

    latent_a, _ = latent_at(lat_a, lon_a)
    latent_b, _ = latent_at(lat_b, lon_b)
    latent_g, terrain_g = latent_at(st_lat, st_lon)

    def observe(latent, product: ProductSpec, eps, alarm) -> np.ndarray:
        e = 1.0 + spec.nonlinearity * product.distortion
        shape = product.bias * _REF_MM * (latent / _REF_MM) ** e
        return shape * np.exp(product.noise * eps) + product.drizzle * alarm

    obs_a = observe(latent_a, spec.product_a, noise_a, alarm_a)
    obs_b = observe(latent_b, spec.product_b, noise_b, alarm_b)
    gauge = latent_g * np.exp(spec.gauge_noise * noise_g)

    t_lo, t_hi = terrain_g.min(), terrain_g.max()
    t_span = t_hi - t_lo if t_hi > t_lo else 1.0
    elevations = np.maximum(150.0 + 2200.0 * (terrain_g - t_lo) / t_span + elev_noise, 1.0)

    dates = spec.dates()
    series_a = GridSeries(spec=grid_a, product_tag="PERSIANN")
    series_b = GridSeries(spec=grid_b, product_tag="IMERG")
    for i, date in enumerate(dates):
        series_a.add_field(date, obs_a[i])
        series_b.add_field(date, obs_b[i])

    ids = [f"SY{i:09d}" for i in range(spec.stations)]
    points = [GeoPoint(float(st_lat[i]), float(st_lon[i])) for i in range(spec.stations)]
    return SynthData(
        spec=spec,
        station_ids=ids,
        station_points=points,
        elevations=elevations,
        gauge_mm=gauge,
        product_a=series_a,
        product_b=series_b,
    )


def to_station_records(data: SynthData) -> dict:
    """Station records equivalent to writing the files and reading them
    back: gauge values quantized to tenths of a millimetre, elevations to
    0.1 m, so both paths feed the pipeline identical numbers."""
    dates = data.spec.dates()
    records = {}
    for s, sid in enumerate(data.station_ids):
        series = {
            dates[t]: (int(round(float(data.gauge_mm[t, s]) * 10.0)) / 10.0, True)
            for t in range(data.spec.days)
        }
        records[sid] = StationRecord(
            id=sid,
            location=data.station_points[s],
            elevation=float(f"{float(data.elevations[s]):.1f}"),
            series=series,
        )
    return records


def write_files(data: SynthData, out_dir) -> dict:
    """Emit .dly gauges, the station inventory, both grid-series files, a
    ready-to-run config, and a small manifest. Returns path map."""
    os.makedirs(out_dir, exist_ok=True)
    spec = data.spec
    dates = spec.dates()

    paths = {
        "gauges": os.path.join(out_dir, "gauges.dly"),
        "stations": os.path.join(out_dir, "stations.txt"),
        "product_a": os.path.join(out_dir, "product_a.grid"),
        "product_b": os.path.join(out_dir, "product_b.grid"),
        "config": os.path.join(out_dir, "run_config.yaml"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }

    with open(paths["gauges"], "w", encoding="ascii") as fh:
        for s, sid in enumerate(data.station_ids):
            series = {
                dates[t]: (float(data.gauge_mm[t, s]), True) for t in range(spec.days)
            }
            for line in format_dly_lines(sid, series):
                fh.write(line + "\n")

    with open(paths["stations"], "w", encoding="ascii") as fh:
        for s, sid in enumerate(data.station_ids):
            fh.write(
                format_station_line(sid, data.station_points[s], round(float(data.elevations[s]), 1))
                + "\n"
            )

    write_grid_series(data.product_a, paths["product_a"])
    write_grid_series(data.product_b, paths["product_b"])

    window_end = spec.start_date + datetime.timedelta(days=spec.days - 1)
    config_text = (
        "# Generated benchmark configuration; paths are relative to this file.\n"
        "inputs:\n"
        "  gauges: gauges.dly\n"
        "  stations: stations.txt\n"
        "  product_a: product_a.grid\n"
        "  product_b: product_b.grid\n"
        "window:\n"
        f"  start: {spec.start_date.isoformat()}\n"
        f"  end: {window_end.isoformat()}\n"
        "# Product B keeps its native registration: resampling it onto product\n"
        "# A's grid would duplicate the distance columns and make the full\n"
        "# 17-predictor design matrix rank-deficient.\n"
        "imerg_regrid: native\n"
        "cv:\n"
        "  seed: 1\n"
        "output_dir: results\n"
    )
    with open(paths["config"], "w", encoding="ascii") as fh:
        fh.write(config_text)

    manifest = {
        "seed": spec.seed,
        "stations": spec.stations,
        "days": spec.days,
        "start_date": spec.start_date.isoformat(),
        "end_date": window_end.isoformat(),
        "expected_samples": spec.stations * spec.days,
        "grid_a": list(spec.grid_a),
        "grid_b": list(spec.grid_b),
    }
    with open(paths["manifest"], "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths
