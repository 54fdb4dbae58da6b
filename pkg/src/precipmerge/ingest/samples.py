"""Regression-sample assembly.

One sample per (station, day): the gauge total as predictand plus 17
predictors in a fixed canonical column order: the four nearest grid-cell
values of each product (nearest first), the four great-circle distances
to those cells, and the station elevation. Neighbor cells and distances
are found once per station and reused for every day.
"""

from __future__ import annotations

import csv
import datetime
import json
import struct
from dataclasses import dataclass

import numpy as np

from precipmerge.errors import DataError, ParseError
from precipmerge.ingest.gridseries import GridSeries
from precipmerge.spatial import GeoPoint, GridSpec, bilinear_regrid, nearest_k

PREDICTOR_NAMES = (
    "PERSIANN value 1",
    "PERSIANN value 2",
    "PERSIANN value 3",
    "PERSIANN value 4",
    "IMERG value 1",
    "IMERG value 2",
    "IMERG value 3",
    "IMERG value 4",
    "PERSIANN distance 1",
    "PERSIANN distance 2",
    "PERSIANN distance 3",
    "PERSIANN distance 4",
    "IMERG distance 1",
    "IMERG distance 2",
    "IMERG distance 3",
    "IMERG distance 4",
    "Station elevation",
)

_COL = {name: i for i, name in enumerate(PREDICTOR_NAMES)}


@dataclass(frozen=True)
class PredictorSet:
    tag: str
    members: tuple[str, ...]

    def __post_init__(self):
        unknown = [m for m in self.members if m not in _COL]
        if unknown:
            raise ValueError(f"unknown predictors: {unknown}")

    @property
    def column_indices(self) -> np.ndarray:
        return np.asarray([_COL[m] for m in self.members], dtype=np.intp)


def _members(prefixes) -> tuple[str, ...]:
    return tuple(n for n in PREDICTOR_NAMES if n.startswith(prefixes))


SET1 = PredictorSet("set1", _members(("PERSIANN value", "PERSIANN distance", "Station")))
SET2 = PredictorSet("set2", _members(("IMERG value", "IMERG distance", "Station")))
SET3 = PredictorSet("set3", PREDICTOR_NAMES)
PREDICTOR_SETS = {s.tag: s for s in (SET1, SET2, SET3)}


@dataclass(frozen=True)
class StationRecord:
    id: str
    location: GeoPoint
    elevation: float
    series: dict  # date -> (precip_mm, quality_ok)


@dataclass(frozen=True)
class RegressionSample:
    station_id: str
    date: datetime.date
    y: float
    persiann_vals: tuple
    imerg_vals: tuple
    persiann_dists: tuple
    imerg_dists: tuple
    elevation: float

    def __post_init__(self):
        for dists in (self.persiann_dists, self.imerg_dists):
            if any(b < a for a, b in zip(dists, dists[1:])):
                raise ValueError("neighbor distances must be non-decreasing")
        if not np.all(np.isfinite(self.to_vector())) or not np.isfinite(self.y):
            raise ValueError("sample has missing constituents")

    def to_vector(self) -> np.ndarray:
        return np.asarray(
            self.persiann_vals
            + self.imerg_vals
            + self.persiann_dists
            + self.imerg_dists
            + (self.elevation,),
            dtype=np.float64,
        )


@dataclass
class SampleTable:
    station_ids: np.ndarray  # <U11
    dates: np.ndarray  # datetime64[D]
    y: np.ndarray  # float64, mm
    predictors: np.ndarray  # (n, 17) float64, PREDICTOR_NAMES column order

    @property
    def n_samples(self) -> int:
        return len(self.y)

    def column(self, name: str) -> np.ndarray:
        return self.predictors[:, _COL[name]]

    def row(self, i: int) -> RegressionSample:
        p = self.predictors[i]
        return RegressionSample(
            station_id=str(self.station_ids[i]),
            date=self.dates[i].astype("datetime64[D]").item(),
            y=float(self.y[i]),
            persiann_vals=tuple(p[0:4]),
            imerg_vals=tuple(p[4:8]),
            persiann_dists=tuple(p[8:12]),
            imerg_dists=tuple(p[12:16]),
            elevation=float(p[16]),
        )


def build_station_records(daily, inventory) -> list[StationRecord]:
    """Join parsed daily series with the inventory; stations must appear
    in both (inventory parsing already removed unknown elevations)."""
    out = []
    for sid in sorted(set(daily) & set(inventory)):
        point, elev = inventory[sid]
        out.append(StationRecord(id=sid, location=point, elevation=elev, series=daily[sid]))
    return out


def select_predictors(sample, pset: PredictorSet) -> np.ndarray:
    """Ordered feature vector for one sample (a :class:`RegressionSample`
    or a canonical 17-vector)."""
    vec = sample.to_vector() if isinstance(sample, RegressionSample) else np.asarray(sample, dtype=np.float64)
    if vec.shape != (len(PREDICTOR_NAMES),):
        raise ValueError(f"expected a {len(PREDICTOR_NAMES)}-entry sample vector")
    return vec[pset.column_indices]


def predictor_matrix(table: SampleTable, pset: PredictorSet) -> np.ndarray:
    return np.ascontiguousarray(table.predictors[:, pset.column_indices])


def assemble_samples(
    stations,
    persiann: GridSeries,
    imerg_raw: GridSeries,
    window,
    *,
    imerg_target: GridSpec | None = None,
    day_offset: int = 0,
) -> SampleTable:
    """Build the sample table for ``window`` (inclusive date pair).

    The second product is first resampled onto ``imerg_target`` (the first
    product's grid when not given) with bilinear weights, and the four
    nearest cells of each grid are found once per station. A station-day
    becomes a sample only when the gauge value passed quality control and
    all eight neighboring cell values exist that day; ``day_offset`` shifts
    the grid date looked up for a gauge date by that many days.
    """
    stations = list(stations)
    if not stations:
        raise DataError("no stations to assemble samples from")
    start, end = window
    if start > end:
        raise DataError(f"empty study window {start}..{end}")
    target = imerg_target if imerg_target is not None else persiann.spec
    if imerg_raw.spec == target:
        imerg_fields = imerg_raw.fields
    else:
        shape = imerg_raw.spec.shape()
        imerg_fields = {
            date: bilinear_regrid(vals.reshape(shape), imerg_raw.spec, target).reshape(-1)
            for date, vals in imerg_raw.fields.items()
        }

    offset = datetime.timedelta(days=day_offset)
    ids, dates, ys, rows = [], [], [], []
    for st in sorted(stations, key=lambda s: s.id):
        near_p = nearest_k(st.location, persiann.spec, 4)
        near_i = nearest_k(st.location, target, 4)
        idx_p = np.asarray(near_p.indices, dtype=np.intp)
        idx_i = np.asarray(near_i.indices, dtype=np.intp)
        dist_block = tuple(near_p.distances_km) + tuple(near_i.distances_km)
        for date in sorted(st.series):
            if not start <= date <= end:
                continue
            precip, ok = st.series[date]
            if not ok:
                continue
            grid_date = date + offset
            pf = persiann.fields.get(grid_date)
            mf = imerg_fields.get(grid_date)
            if pf is None or mf is None:
                continue
            vals_p = pf[idx_p]
            vals_i = mf[idx_i]
            if np.isnan(vals_p).any() or np.isnan(vals_i).any():
                continue
            ids.append(st.id)
            dates.append(date)
            ys.append(precip)
            rows.append(tuple(vals_p) + tuple(vals_i) + dist_block + (st.elevation,))
    n = len(ys)
    return SampleTable(
        station_ids=np.asarray(ids, dtype="<U11"),
        dates=np.asarray(dates, dtype="datetime64[D]"),
        y=np.asarray(ys, dtype=np.float64),
        predictors=np.asarray(rows, dtype=np.float64).reshape(n, len(PREDICTOR_NAMES)),
    )


_CACHE_MAGIC = b"PMST"
_CACHE_VERSION = 1


def sample_table_bytes(table: SampleTable) -> bytes:
    """Columnar little-endian cache: magic, version u16, u32 JSON header
    length, JSON header, then ids (11 ASCII bytes each), dates (i64 days
    since 1970-01-01), the predictand column, and each predictor column in
    canonical order, all float64."""
    n = table.n_samples
    header = json.dumps(
        {"rows": n, "id_width": 11, "columns": ["gauge_mm", *PREDICTOR_NAMES]},
        sort_keys=True,
    ).encode()
    parts = [
        _CACHE_MAGIC,
        struct.pack("<H", _CACHE_VERSION),
        struct.pack("<I", len(header)),
        header,
    ]
    ids = np.asarray(table.station_ids, dtype="<U11")
    parts.append(ids.astype("S11").tobytes())
    parts.append(table.dates.astype("datetime64[D]").astype("<i8").tobytes())
    parts.append(np.ascontiguousarray(table.y, dtype="<f8").tobytes())
    for c in range(len(PREDICTOR_NAMES)):
        parts.append(np.ascontiguousarray(table.predictors[:, c], dtype="<f8").tobytes())
    return b"".join(parts)


def save_sample_table(table: SampleTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(sample_table_bytes(table))


def load_sample_table(path) -> SampleTable:
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 10 or buf[:4] != _CACHE_MAGIC:
        raise ParseError("not a sample cache (bad magic)", path=path)
    (version,) = struct.unpack("<H", buf[4:6])
    if version != _CACHE_VERSION:
        raise ParseError(f"unsupported sample cache version {version}", path=path)
    (hlen,) = struct.unpack("<I", buf[6:10])
    off = 10
    try:
        header = json.loads(buf[off : off + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad cache header: {exc}", path=path) from None
    off += hlen
    n = header["rows"]
    width = header["id_width"]
    expect = width * n + 8 * n + 8 * n * (1 + len(PREDICTOR_NAMES))
    if len(buf) - off != expect:
        raise ParseError(
            f"cache payload is {len(buf) - off} bytes, expected {expect}", path=path
        )
    ids = np.frombuffer(buf, dtype=f"S{width}", count=n, offset=off).astype("<U11")
    off += width * n

    def column(dtype):
        nonlocal off
        arr = np.frombuffer(buf, dtype=dtype, count=n, offset=off).copy()
        off += 8 * n
        return arr

    dates = column("<i8").astype("datetime64[D]")
    y = column("<f8")
    cols = [column("<f8") for _ in PREDICTOR_NAMES]
    predictors = np.column_stack(cols) if n else np.empty((0, len(PREDICTOR_NAMES)))
    return SampleTable(station_ids=ids, dates=dates, y=y, predictors=predictors)


def write_sample_csv(table: SampleTable, path) -> None:
    """CSV mirror of the cache with the canonical predictor names as the
    header row."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "date", "gauge_mm", *PREDICTOR_NAMES])
        for i in range(table.n_samples):
            writer.writerow(
                [
                    str(table.station_ids[i]),
                    str(table.dates[i]),
                    repr(float(table.y[i])),
                    *(repr(float(v)) for v in table.predictors[i]),
                ]
            )
