"""Input parsing and regression-sample assembly."""

from precipmerge.ingest.ghcnd import (
    format_dly_lines,
    format_station_line,
    parse_ghcnd_dly,
    parse_ghcnd_stations,
)
from precipmerge.ingest.gridseries import GridSeries, read_grid_series, write_grid_series
from precipmerge.ingest.samples import (
    PREDICTOR_NAMES,
    PREDICTOR_SETS,
    SET1,
    SET2,
    SET3,
    PredictorSet,
    RegressionSample,
    SampleTable,
    StationRecord,
    assemble_samples,
    build_station_records,
    load_sample_table,
    predictor_matrix,
    sample_table_bytes,
    save_sample_table,
    select_predictors,
    write_sample_csv,
)

__all__ = [
    "GridSeries",
    "PREDICTOR_NAMES",
    "PREDICTOR_SETS",
    "PredictorSet",
    "RegressionSample",
    "SET1",
    "SET2",
    "SET3",
    "SampleTable",
    "StationRecord",
    "assemble_samples",
    "build_station_records",
    "format_dly_lines",
    "format_station_line",
    "load_sample_table",
    "parse_ghcnd_dly",
    "parse_ghcnd_stations",
    "predictor_matrix",
    "read_grid_series",
    "sample_table_bytes",
    "save_sample_table",
    "select_predictors",
    "write_grid_series",
    "write_sample_csv",
]
