import datetime

import numpy as np
import pytest

from precipmerge.errors import ParseError
from precipmerge.ingest import (
    GridSeries,
    PREDICTOR_NAMES,
    SampleTable,
    StationRecord,
    assemble_samples,
    build_station_records,
    format_dly_lines,
    format_station_line,
    load_sample_table,
    parse_ghcnd_dly,
    parse_ghcnd_stations,
    read_grid_series,
    save_sample_table,
    write_grid_series,
    write_sample_csv,
)
from precipmerge.spatial import GeoPoint, GridSpec

D = datetime.date


# ------------------------------------------------------------- daily ----


def _dly_line(sid="ST00000001X", year=2014, month=1, slots=None):
    """Build one fixed-width PRCP line; slots maps day -> (tenths, qflag)."""
    slots = slots or {}
    parts = [f"{sid}{year:04d}{month:02d}PRCP"]
    for day in range(1, 32):
        if day in slots:
            tenths, q = slots[day]
            parts.append(f"{tenths:5d} {q} ")
        else:
            parts.append(f"{-9999:5d}   ")
    line = "".join(parts)
    assert len(line) == 269
    return line


def test_parse_dly_values_and_flags():
    line = _dly_line(slots={1: (0, " "), 2: (125, " "), 3: (40, "X")})
    out = parse_ghcnd_dly([line])
    series = out["ST00000001X"]
    assert series[D(2014, 1, 1)] == (0.0, True)
    assert series[D(2014, 1, 2)] == (12.5, True)
    assert series[D(2014, 1, 3)] == (4.0, False)
    assert D(2014, 1, 4) not in series


def test_parse_dly_skips_other_elements():
    line = _dly_line(slots={1: (55, " ")}).replace("PRCP", "TMAX")
    assert parse_ghcnd_dly([line]) == {}


def test_parse_dly_rejects_wrong_length():
    with pytest.raises(ParseError) as err:
        parse_ghcnd_dly(["short line"], path="g.dly")
    assert "g.dly:1" in str(err.value)


def test_parse_dly_rejects_value_on_nonexistent_day():
    line = _dly_line(month=2, slots={30: (10, " ")})
    with pytest.raises(ParseError, match="nonexistent day"):
        parse_ghcnd_dly([line])


def test_parse_dly_rejects_negative_value():
    line = _dly_line(slots={5: (-3, " ")})
    with pytest.raises(ParseError, match="negative precipitation"):
        parse_ghcnd_dly([line])


def test_parse_dly_rejects_duplicate_month():
    line = _dly_line(slots={1: (10, " ")})
    with pytest.raises(ParseError, match="duplicate value"):
        parse_ghcnd_dly([line, line])


def test_parse_dly_rejects_garbled_value_field():
    line = _dly_line(slots={1: (10, " ")})
    bad = line[:21] + "abcde" + line[26:]
    with pytest.raises(ParseError, match="non-numeric value"):
        parse_ghcnd_dly([bad])


def test_dly_round_trip():
    series = {
        D(2014, 1, 1): (0.0, True),
        D(2014, 1, 17): (12.5, True),
        D(2014, 2, 28): (3.3, False),
        D(2014, 12, 31): (150.0, True),
    }
    lines = format_dly_lines("ST00000001X", series)
    assert all(len(line) == 269 for line in lines)
    back = parse_ghcnd_dly(lines)
    assert back == {"ST00000001X": series}


def test_format_dly_rejects_bad_station_id():
    with pytest.raises(ValueError):
        format_dly_lines("short", {D(2014, 1, 1): (1.0, True)})


def test_format_dly_rejects_out_of_range_value():
    with pytest.raises(ValueError, match="outside format range"):
        format_dly_lines("ST00000001X", {D(2014, 1, 1): (-1.0, True)})


# --------------------------------------------------------- inventory ----


def test_station_line_round_trip():
    p = GeoPoint(37.3456, -120.9871)
    line = format_station_line("ST00000001X", p, 1234.5)
    assert len(line) == 37
    out = parse_ghcnd_stations([line])
    point, elev = out["ST00000001X"]
    assert (point.lat, point.lon, elev) == (37.3456, -120.9871, 1234.5)


def test_inventory_unknown_elevation_excluded():
    keep = format_station_line("ST00000001X", GeoPoint(10.0, 20.0), 55.0)
    drop = format_station_line("ST00000002X", GeoPoint(11.0, 21.0), -999.9)
    out = parse_ghcnd_stations([keep, drop])
    assert set(out) == {"ST00000001X"}


def test_inventory_rejects_short_line():
    with pytest.raises(ParseError, match="shorter than 37"):
        parse_ghcnd_stations(["ST00000001X  37.0"])


def test_inventory_rejects_duplicate_id():
    line = format_station_line("ST00000001X", GeoPoint(10.0, 20.0), 55.0)
    with pytest.raises(ParseError, match="duplicate station id"):
        parse_ghcnd_stations([line, line])


def test_inventory_rejects_malformed_coordinates():
    line = "ST00000001X   abc.0   20.0000   55.0"
    line = line + " " * (37 - len(line))
    with pytest.raises(ParseError, match="malformed coordinates"):
        parse_ghcnd_stations([line])


def test_inventory_rejects_out_of_range_latitude():
    line = format_station_line("ST00000001X", GeoPoint(89.0, 20.0), 55.0).replace(
        " 89.0000", " 95.0000"
    )
    with pytest.raises(ParseError, match="latitude"):
        parse_ghcnd_stations([line])


# -------------------------------------------------------- grid series ----


def _small_series(tag="PERSIANN"):
    spec = GridSpec(lat0=35.0, lon0=20.0, dlat=0.5, dlon=0.5, nlat=2, nlon=3)
    s = GridSeries(spec=spec, product_tag=tag)
    s.add_field(D(2014, 1, 1), np.array([0.0, 1.25, 2.5, 3.75, 5.0, 6.25]))
    vals = np.array([1.1, np.nan, 0.0, 7.5, 0.3, 0.0])
    s.fields[D(2014, 1, 2)] = vals  # add_field refuses NaN-bearing negatives only
    return s


def test_grid_series_round_trip(tmp_path):
    s = _small_series()
    path = tmp_path / "a.grid"
    write_grid_series(s, path)
    back = read_grid_series(path, product_tag="PERSIANN")
    assert back.spec == s.spec
    assert back.product_tag == "PERSIANN"
    assert back.dates == s.dates
    for date in s.dates:
        np.testing.assert_array_equal(back.fields[date], s.fields[date])


def test_grid_series_product_mismatch(tmp_path):
    path = tmp_path / "a.grid"
    write_grid_series(_small_series(tag="OTHER"), path)
    with pytest.raises(ParseError, match="does not match expected"):
        read_grid_series(path, product_tag="PERSIANN")
    # Without an expectation the tag passes through.
    assert read_grid_series(path).product_tag == "OTHER"


def test_grid_series_rejects_negative(tmp_path):
    path = tmp_path / "a.grid"
    write_grid_series(_small_series(), path)
    text = path.read_text().replace("1.25", "-1.25")
    path.write_text(text)
    with pytest.raises(ParseError, match="negative precipitation"):
        read_grid_series(path)


def test_grid_series_rejects_nan_spelling(tmp_path):
    path = tmp_path / "a.grid"
    write_grid_series(_small_series(), path)
    path.write_text(path.read_text().replace("1.25", "nan"))
    with pytest.raises(ParseError, match="spell missing values as NA"):
        read_grid_series(path)


def test_grid_series_rejects_short_row(tmp_path):
    path = tmp_path / "a.grid"
    write_grid_series(_small_series(), path)
    lines = path.read_text().splitlines()
    lines[3] = "1.0 2.0"  # first data row of the first date block
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="row has 2 values"):
        read_grid_series(path)


def test_grid_series_rejects_truncated_block(tmp_path):
    path = tmp_path / "a.grid"
    write_grid_series(_small_series(), path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ParseError, match="rows"):
        read_grid_series(path)


def test_grid_series_rejects_missing_product_header(tmp_path):
    path = tmp_path / "a.grid"
    path.write_text("lat0=0.0 dlat=1.0 nlat=1 lon0=0.0 dlon=1.0 nlon=1\n")
    with pytest.raises(ParseError, match="missing product="):
        read_grid_series(path)


def test_grid_series_rejects_incomplete_grid_header(tmp_path):
    path = tmp_path / "a.grid"
    path.write_text("product=X\nlat0=0.0 dlat=1.0 nlat=1 lon0=0.0 dlon=1.0\n")
    with pytest.raises(ParseError, match="missing nlon"):
        read_grid_series(path)


def test_add_field_validations():
    s = _small_series()
    with pytest.raises(ValueError, match="cells"):
        s.add_field(D(2014, 3, 1), np.zeros(5))
    with pytest.raises(ValueError, match="negative"):
        s.add_field(D(2014, 3, 1), np.array([0, 0, 0, 0, 0, -1.0]))
    with pytest.raises(ValueError, match="duplicate"):
        s.add_field(D(2014, 1, 1), np.zeros(6))


# -------------------------------------------------------- sample table ----


def _toy_table(n=5):
    rng = np.random.default_rng(0)
    return SampleTable(
        station_ids=np.array([f"ST{i:09d}" for i in range(n)], dtype="<U11"),
        dates=np.array([D(2014, 1, 1 + i) for i in range(n)], dtype="datetime64[D]"),
        y=rng.uniform(0, 10, n),
        predictors=rng.uniform(0, 10, (n, len(PREDICTOR_NAMES))),
    )


def test_sample_cache_round_trip(tmp_path):
    table = _toy_table()
    path = tmp_path / "s.pmst"
    save_sample_table(table, path)
    back = load_sample_table(path)
    np.testing.assert_array_equal(back.station_ids, table.station_ids)
    np.testing.assert_array_equal(back.dates, table.dates)
    np.testing.assert_array_equal(back.y, table.y)
    np.testing.assert_array_equal(back.predictors, table.predictors)


def test_sample_cache_bad_magic(tmp_path):
    path = tmp_path / "s.pmst"
    path.write_bytes(b"????junk")
    with pytest.raises(ParseError, match="bad magic"):
        load_sample_table(path)


def test_sample_cache_truncated(tmp_path):
    table = _toy_table()
    path = tmp_path / "s.pmst"
    save_sample_table(table, path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ParseError, match="payload"):
        load_sample_table(path)


def test_sample_csv_header(tmp_path):
    path = tmp_path / "s.csv"
    write_sample_csv(_toy_table(2), path)
    header = path.read_text().splitlines()[0]
    assert header.split(",") == ["station_id", "date", "gauge_mm", *PREDICTOR_NAMES]


# ----------------------------------------------------------- assembly ----


def _assembly_inputs(days=3, nlat=4, nlon=4):
    spec = GridSpec(lat0=35.0, lon0=20.0, dlat=0.5, dlon=0.5, nlat=nlat, nlon=nlon)
    a = GridSeries(spec=spec, product_tag="PERSIANN")
    b = GridSeries(spec=spec, product_tag="IMERG")
    rng = np.random.default_rng(3)
    dates = [D(2014, 1, 1 + i) for i in range(days)]
    for date in dates:
        a.add_field(date, rng.uniform(0, 5, spec.ncells))
        b.add_field(date, rng.uniform(0, 5, spec.ncells))
    stations = [
        StationRecord(
            id=f"ST{i:09d}",
            location=GeoPoint(35.4 + 0.3 * i, 20.4 + 0.2 * i),
            elevation=100.0 + i,
            series={d: (float(i + j), True) for j, d in enumerate(dates)},
        )
        for i in range(3)
    ]
    return stations, a, b, dates


def test_assemble_counting_and_order():
    stations, a, b, dates = _assembly_inputs()
    table = assemble_samples(stations, a, b, (dates[0], dates[-1]))
    assert table.n_samples == len(stations) * len(dates)
    # Canonical order: stations sorted by id, dates sorted inside.
    ids = list(table.station_ids)
    assert ids == sorted(ids)
    first = table.row(0)
    assert first.station_id == "ST000000000"
    # Row layout: 4 product-A values, 4 product-B values, 8 distances, elevation.
    assert first.to_vector().shape == (17,)
    assert table.predictors[0, 16] == 100.0


def test_assemble_drops_flagged_and_missing():
    stations, a, b, dates = _assembly_inputs()
    # Quality-flagged gauge day.
    stations[0].series[dates[0]] = (1.0, False)
    # Grid field missing for one date on product B.
    del b.fields[dates[1]]
    table = assemble_samples(stations, a, b, (dates[0], dates[-1]))
    # Flagged: 1 sample; missing field removes that date for every station.
    assert table.n_samples == 3 * 3 - 1 - 3


def test_assemble_drops_nan_neighbor():
    stations, a, b, dates = _assembly_inputs()
    # Poison the value of the cell nearest to station 0 on one date.
    from precipmerge.spatial import nearest_k

    idx = nearest_k(stations[0].location, a.spec, 1).indices[0]
    a.fields[dates[2]][idx] = np.nan
    table = assemble_samples(stations, a, b, (dates[0], dates[-1]))
    kept = set(zip(table.station_ids, table.dates.astype(object)))
    assert ("ST000000000", dates[2]) not in kept
    assert ("ST000000000", dates[0]) in kept and ("ST000000000", dates[1]) in kept
    # Other stations sharing that grid cell lose the day as well; nobody
    # else is affected.
    assert table.n_samples == 9 - sum(
        idx in nearest_k(s.location, a.spec, 4).indices for s in stations
    )


def test_assemble_window_filters():
    stations, a, b, dates = _assembly_inputs()
    table = assemble_samples(stations, a, b, (dates[1], dates[1]))
    assert table.n_samples == 3
    assert set(table.dates.astype("datetime64[D]").astype(object)) == {dates[1]}


def test_assemble_day_offset():
    stations, a, b, dates = _assembly_inputs()
    # With offset 1 the last gauge day has no next-day grid field.
    table = assemble_samples(stations, a, b, (dates[0], dates[-1]), day_offset=1)
    assert table.n_samples == 3 * (len(dates) - 1)


def test_assemble_regrids_product_b():
    stations, a, b, dates = _assembly_inputs()
    shifted = GridSpec(lat0=35.1, lon0=20.1, dlat=0.5, dlon=0.5, nlat=4, nlon=4)
    b2 = GridSeries(spec=shifted, product_tag="IMERG")
    for date in dates:
        b2.add_field(date, b.fields[date])
    # Regridding onto product A's grid makes the two distance blocks equal.
    table = assemble_samples(stations, a, b2, (dates[0], dates[-1]))
    np.testing.assert_array_equal(table.predictors[:, 8:12], table.predictors[:, 12:16])


def test_build_station_records_intersects():
    daily = {"A" * 11: {D(2014, 1, 1): (1.0, True)}, "B" * 11: {}}
    inventory = {"A" * 11: (GeoPoint(1, 2), 5.0), "C" * 11: (GeoPoint(2, 3), 6.0)}
    records = build_station_records(daily, inventory)
    assert [r.id for r in records] == ["A" * 11]
    assert records[0].elevation == 5.0
