"""Plain-text container for daily gridded precipitation.

Layout::

    product=<tag>
    lat0=<f> dlat=<f> nlat=<i> lon0=<f> dlon=<f> nlon=<i>
    date=YYYY-MM-DD
    <nlon values>        (x nlat lines, row i holds latitude index i)
    date=YYYY-MM-DD
    ...

Values are decimal numbers (mm, non-negative) or ``NA`` for missing.
Rows map to the flat cell order ``i * nlon + j``.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass, field

import numpy as np

from precipmerge.errors import ParseError
from precipmerge.spatial import GridSpec


@dataclass
class GridSeries:
    spec: GridSpec
    product_tag: str
    fields: dict[datetime.date, np.ndarray] = field(default_factory=dict)

    def add_field(self, date: datetime.date, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.float64).reshape(-1)
        if values.size != self.spec.ncells:
            raise ValueError(
                f"field has {values.size} cells, grid needs {self.spec.ncells}"
            )
        with np.errstate(invalid="ignore"):
            if np.any(values < 0.0):
                raise ValueError("negative precipitation in grid field")
        if date in self.fields:
            raise ValueError(f"duplicate field for {date}")
        self.fields[date] = values

    @property
    def dates(self) -> list[datetime.date]:
        return sorted(self.fields)


def _parse_header_pairs(line: str, line_no: int, path) -> dict[str, str]:
    pairs = {}
    for token in line.split():
        if "=" not in token:
            raise ParseError(f"expected key=value, got {token!r}", path=path, line_no=line_no)
        key, _, val = token.partition("=")
        pairs[key] = val
    return pairs


def read_grid_series(path, product_tag: str | None = None) -> GridSeries:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    it = iter(enumerate(lines, start=1))

    def next_content():
        for line_no, line in it:
            if line.strip():
                return line_no, line
        return None, None

    line_no, line = next_content()
    if line is None or not line.startswith("product="):
        raise ParseError("missing product= header", path=path, line_no=line_no or 1)
    tag = line.partition("=")[2].strip()
    if product_tag is not None and tag != product_tag:
        raise ParseError(
            f"product tag {tag!r} does not match expected {product_tag!r}",
            path=path,
            line_no=line_no,
        )

    line_no, line = next_content()
    if line is None:
        raise ParseError("missing grid header", path=path, line_no=len(lines))
    pairs = _parse_header_pairs(line, line_no, path)
    try:
        spec = GridSpec(
            lat0=float(pairs["lat0"]),
            lon0=float(pairs["lon0"]),
            dlat=float(pairs["dlat"]),
            dlon=float(pairs["dlon"]),
            nlat=int(pairs["nlat"]),
            nlon=int(pairs["nlon"]),
        )
    except KeyError as exc:
        raise ParseError(f"grid header missing {exc.args[0]}", path=path, line_no=line_no) from None
    except ValueError as exc:
        raise ParseError(str(exc), path=path, line_no=line_no) from None

    series = GridSeries(spec=spec, product_tag=tag)
    while True:
        line_no, line = next_content()
        if line is None:
            break
        if not line.startswith("date="):
            raise ParseError(f"expected date= block, got {line!r}", path=path, line_no=line_no)
        try:
            date = datetime.date.fromisoformat(line.partition("=")[2].strip())
        except ValueError:
            raise ParseError("bad date", path=path, line_no=line_no) from None
        if date in series.fields:
            raise ParseError(f"duplicate date block {date}", path=path, line_no=line_no)
        values = np.empty(spec.ncells, dtype=np.float64)
        for i in range(spec.nlat):
            row_no, row = next_content()
            if row is None or row.startswith("date="):
                raise ParseError(
                    f"date block {date} has {i} of {spec.nlat} rows",
                    path=path,
                    line_no=row_no or line_no,
                )
            cells = row.split()
            if len(cells) != spec.nlon:
                raise ParseError(
                    f"row has {len(cells)} values, grid needs {spec.nlon}",
                    path=path,
                    line_no=row_no,
                )
            for j, cell in enumerate(cells):
                if cell == "NA":
                    values[i * spec.nlon + j] = math.nan
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"bad value {cell!r}", path=path, line_no=row_no) from None
                if math.isnan(v):
                    raise ParseError("spell missing values as NA", path=path, line_no=row_no)
                if v < 0.0:
                    raise ParseError(f"negative precipitation {cell}", path=path, line_no=row_no)
                values[i * spec.nlon + j] = v
        series.fields[date] = values
    return series


def _format_value(v: float) -> str:
    return "NA" if math.isnan(v) else repr(float(v))


def write_grid_series(series: GridSeries, path) -> None:
    spec = series.spec
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"product={series.product_tag}\n")
        fh.write(
            f"lat0={spec.lat0!r} dlat={spec.dlat!r} nlat={spec.nlat} "
            f"lon0={spec.lon0!r} dlon={spec.dlon!r} nlon={spec.nlon}\n"
        )
        for date in series.dates:
            fh.write(f"date={date.isoformat()}\n")
            grid = series.fields[date].reshape(spec.nlat, spec.nlon)
            for i in range(spec.nlat):
                fh.write(" ".join(_format_value(v) for v in grid[i]) + "\n")
