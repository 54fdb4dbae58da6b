"""Fixed-width gauge archive readers and writers.

Daily file layout (269-character lines): columns 1-11 station id, 12-15
year, 16-17 month, 18-21 element code, then 31 day groups of value (5
chars, integer tenths of mm, -9999 missing) + mflag + qflag + sflag (1
char each). Inventory layout: columns 1-11 id, 13-20 latitude, 22-30
longitude, 32-37 elevation in meters with -999.9 meaning unknown.

Only PRCP element rows are read. A non-blank quality flag marks the
observation as failing quality control; the value is kept but flagged.
Stations with unknown elevation are excluded entirely.
"""

from __future__ import annotations

import calendar
import datetime

from precipmerge.errors import ParseError
from precipmerge.spatial import GeoPoint

_DLY_LINE_LEN = 269
_DAY_BASE = 21
_MISSING = -9999


def parse_ghcnd_dly(lines, path=None):
    """Parse daily PRCP series.

    Returns a dict ``station_id -> {date: (precip_mm, quality_ok)}``.
    Non-PRCP rows are skipped; missing day slots are omitted.
    """
    out: dict[str, dict[datetime.date, tuple[float, bool]]] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        if len(line) != _DLY_LINE_LEN:
            raise ParseError(
                f"expected {_DLY_LINE_LEN}-character line, got {len(line)}",
                path=path,
                line_no=line_no,
            )
        if line[17:21] != "PRCP":
            continue
        sid = line[0:11]
        try:
            year = int(line[11:15])
            month = int(line[15:17])
        except ValueError:
            raise ParseError("non-numeric year/month", path=path, line_no=line_no) from None
        if not 1 <= month <= 12:
            raise ParseError(f"month {month} out of range", path=path, line_no=line_no)
        days_in_month = calendar.monthrange(year, month)[1]
        series = out.setdefault(sid, {})
        for day in range(31):
            base = _DAY_BASE + 8 * day
            text = line[base : base + 5]
            try:
                value = int(text)
            except ValueError:
                raise ParseError(
                    f"non-numeric value field {text!r} for day {day + 1}",
                    path=path,
                    line_no=line_no,
                ) from None
            if value == _MISSING:
                continue
            if day + 1 > days_in_month:
                raise ParseError(
                    f"value on nonexistent day {year}-{month:02d}-{day + 1:02d}",
                    path=path,
                    line_no=line_no,
                )
            if value < 0:
                raise ParseError(
                    f"negative precipitation {value}", path=path, line_no=line_no
                )
            date = datetime.date(year, month, day + 1)
            if date in series:
                raise ParseError(f"duplicate value for {date}", path=path, line_no=line_no)
            qflag = line[base + 6]
            series[date] = (value / 10.0, qflag == " ")
    return out


def parse_ghcnd_stations(lines, path=None):
    """Parse the station inventory into ``id -> (GeoPoint, elevation_m)``.

    Stations with the -999.9 elevation sentinel are left out.
    """
    out: dict[str, tuple[GeoPoint, float]] = {}
    seen: set[str] = set()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line:
            continue
        if len(line) < 37:
            raise ParseError(
                f"inventory line shorter than 37 characters ({len(line)})",
                path=path,
                line_no=line_no,
            )
        sid = line[0:11]
        if sid in seen:
            raise ParseError(f"duplicate station id {sid!r}", path=path, line_no=line_no)
        seen.add(sid)
        try:
            lat = float(line[12:20])
            lon = float(line[21:30])
            elev = float(line[31:37])
        except ValueError:
            raise ParseError("malformed coordinates", path=path, line_no=line_no) from None
        if elev == -999.9:
            continue
        try:
            point = GeoPoint(lat, lon)
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line_no=line_no) from None
        out[sid] = (point, elev)
    return out


def format_dly_lines(station_id: str, series) -> list[str]:
    """Render a daily series back into fixed-width PRCP lines.

    ``series`` maps dates to ``(precip_mm, quality_ok)``; values are
    rounded to tenths of mm (the format's resolution). Failed quality
    control is written as qflag ``Q``.
    """
    if len(station_id) != 11:
        raise ValueError("station id must be exactly 11 characters")
    months = sorted({(d.year, d.month) for d in series})
    lines = []
    for year, month in months:
        slots = []
        for day in range(1, 32):
            try:
                date = datetime.date(year, month, day)
            except ValueError:
                date = None
            entry = series.get(date) if date is not None else None
            if entry is None:
                slots.append(f"{_MISSING:5d}   ")
            else:
                mm, ok = entry
                tenths = int(round(mm * 10.0))
                if not 0 <= tenths <= 99999:
                    raise ValueError(f"precipitation {mm} mm outside format range")
                qflag = " " if ok else "Q"
                slots.append(f"{tenths:5d} {qflag} ")
        lines.append(f"{station_id}{year:04d}{month:02d}PRCP" + "".join(slots))
    return lines


def format_station_line(station_id: str, point: GeoPoint, elevation_m: float) -> str:
    if len(station_id) != 11:
        raise ValueError("station id must be exactly 11 characters")
    return f"{station_id} {point.lat:8.4f} {point.lon:9.4f} {elevation_m:6.1f}"
