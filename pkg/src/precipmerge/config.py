"""Run configuration: a single YAML file, schema-checked, with documented
defaults for every key.

Top-level keys::

    inputs:          gauges / stations / product_a / product_b file paths
    synth:           synthetic-data spec (alternative to inputs)
    window:          start / end dates (default 2014-01-01 .. 2015-12-31)
    neighbors:       grid cells per product per station (4; fixed by the
                     17-predictor sample schema)
    day_offset:      days added to a gauge date when looking up grid
                     fields (default 0)
    imerg_regrid:    "persiann" (resample product B onto product A's
                     grid), "native" (keep B's own grid), or an explicit
                     grid {lat0, lon0, dlat, dlon, nlat, nlon}
    predictor_sets:  subset of [set1, set2, set3]
    algorithms:      subset of [linear, forest, gbm, xgb]
    cv:              seed (default 0), folds (default 2), split_unit
                     ("station" or "sample", default "station")
    reference_mode:  "same-set", "set1", or "both" (default "both")
    output_dir:      where artifacts go (default "out")
    hyperparams:     forest / gbm / xgb sections; defaults are 500 trees
                     or rounds with the conventional settings of each
                     algorithm family

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import datetime
import os
from dataclasses import dataclass, field

import yaml

from precipmerge.errors import ConfigError
from precipmerge.evaluate import ALGORITHMS
from precipmerge.ingest.samples import PREDICTOR_SETS
from precipmerge.learners import ForestParams, GBMParams, XGBParams
from precipmerge.spatial import GridSpec
from precipmerge.synth import ProductSpec, SynthSpec

_DEFAULT_WINDOW = (datetime.date(2014, 1, 1), datetime.date(2015, 12, 31))


@dataclass(frozen=True)
class InputPaths:
    gauges: str
    stations: str
    product_a: str
    product_b: str


@dataclass
class RunConfig:
    inputs: InputPaths | None = None
    synth: SynthSpec | None = None
    window: tuple = _DEFAULT_WINDOW
    neighbors: int = 4
    day_offset: int = 0
    imerg_regrid: object = "persiann"  # "persiann" | "native" | GridSpec
    predictor_sets: tuple = ("set1", "set2", "set3")
    algorithms: tuple = ALGORITHMS
    cv_seed: int = 0
    n_folds: int = 2
    split_unit: str = "station"
    reference_mode: str = "both"
    output_dir: str = "out"
    forest: ForestParams = field(default_factory=ForestParams)
    gbm: GBMParams = field(default_factory=GBMParams)
    xgb: XGBParams = field(default_factory=XGBParams)


def _require_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping")
    return value


def _reject_unknown(d: dict, allowed, where: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key {unknown[0]!r} in {where} (allowed: {', '.join(sorted(allowed))})"
        )


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    return value


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    return float(value)


def _as_date(value, where: str) -> datetime.date:
    if isinstance(value, datetime.date) and not isinstance(value, datetime.datetime):
        return value
    if isinstance(value, str):
        try:
            return datetime.date.fromisoformat(value)
        except ValueError:
            pass
    raise ConfigError(f"{where} must be a YYYY-MM-DD date, got {value!r}")


def _as_choice(value, choices, where: str) -> str:
    if value not in choices:
        raise ConfigError(f"{where} must be one of {sorted(choices)}, got {value!r}")
    return value


def _as_str_list(value, choices, where: str) -> tuple:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where} must be a non-empty list")
    out = []
    for item in value:
        out.append(_as_choice(item, choices, where))
    if len(set(out)) != len(out):
        raise ConfigError(f"{where} has duplicate entries")
    return tuple(out)


def _parse_inputs(section, base_dir: str) -> InputPaths:
    d = _require_mapping(section, "inputs")
    keys = ("gauges", "stations", "product_a", "product_b")
    _reject_unknown(d, keys, "inputs")
    missing = [k for k in keys if k not in d]
    if missing:
        raise ConfigError(f"inputs is missing {missing[0]!r}")
    resolved = {}
    for k in keys:
        if not isinstance(d[k], str):
            raise ConfigError(f"inputs.{k} must be a path string")
        resolved[k] = os.path.join(base_dir, d[k])
    return InputPaths(**resolved)


def _parse_grid(section, where: str) -> GridSpec:
    d = _require_mapping(section, where)
    keys = ("lat0", "lon0", "dlat", "dlon", "nlat", "nlon")
    _reject_unknown(d, keys, where)
    missing = [k for k in keys if k not in d]
    if missing:
        raise ConfigError(f"{where} is missing {missing[0]!r}")
    try:
        return GridSpec(
            lat0=_as_float(d["lat0"], f"{where}.lat0"),
            lon0=_as_float(d["lon0"], f"{where}.lon0"),
            dlat=_as_float(d["dlat"], f"{where}.dlat"),
            dlon=_as_float(d["dlon"], f"{where}.dlon"),
            nlat=_as_int(d["nlat"], f"{where}.nlat"),
            nlon=_as_int(d["nlon"], f"{where}.nlon"),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_dims(value, where: str) -> tuple:
    if isinstance(value, dict):
        _reject_unknown(value, ("nlat", "nlon"), where)
        if "nlat" not in value or "nlon" not in value:
            raise ConfigError(f"{where} needs nlat and nlon")
        return (_as_int(value["nlat"], f"{where}.nlat"), _as_int(value["nlon"], f"{where}.nlon"))
    if isinstance(value, list) and len(value) == 2:
        return (_as_int(value[0], f"{where}[0]"), _as_int(value[1], f"{where}[1]"))
    raise ConfigError(f"{where} must be {{nlat, nlon}} or a [nlat, nlon] pair")


def _parse_product(section, where: str, default: ProductSpec) -> ProductSpec:
    d = _require_mapping(section, where)
    keys = ("bias", "noise", "distortion", "drizzle")
    _reject_unknown(d, keys, where)
    kwargs = {}
    for k in keys:
        if k in d:
            kwargs[k] = _as_float(d[k], f"{where}.{k}")
        else:
            kwargs[k] = getattr(default, k)
    try:
        return ProductSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_synth_spec(section, where: str = "synth") -> SynthSpec:
    d = _require_mapping(section, where)
    keys = (
        "stations",
        "days",
        "start_date",
        "seed",
        "grid_a",
        "grid_b",
        "nonlinearity",
        "zero_inflation",
        "product_a",
        "product_b",
        "gauge_noise",
        "orography",
    )
    _reject_unknown(d, keys, where)
    base = SynthSpec()
    kwargs = {}
    if "stations" in d:
        kwargs["stations"] = _as_int(d["stations"], f"{where}.stations")
    if "days" in d:
        kwargs["days"] = _as_int(d["days"], f"{where}.days")
    if "start_date" in d:
        kwargs["start_date"] = _as_date(d["start_date"], f"{where}.start_date")
    if "seed" in d:
        kwargs["seed"] = _as_int(d["seed"], f"{where}.seed")
    if "grid_a" in d:
        kwargs["grid_a"] = _parse_dims(d["grid_a"], f"{where}.grid_a")
    if "grid_b" in d:
        kwargs["grid_b"] = _parse_dims(d["grid_b"], f"{where}.grid_b")
    for k in ("nonlinearity", "zero_inflation", "gauge_noise", "orography"):
        if k in d:
            kwargs[k] = _as_float(d[k], f"{where}.{k}")
    if "product_a" in d:
        kwargs["product_a"] = _parse_product(d["product_a"], f"{where}.product_a", base.product_a)
    if "product_b" in d:
        kwargs["product_b"] = _parse_product(d["product_b"], f"{where}.product_b", base.product_b)
    try:
        return SynthSpec(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _parse_hyperparams(section) -> tuple:
    d = _require_mapping(section, "hyperparams")
    _reject_unknown(d, ("forest", "gbm", "xgb"), "hyperparams")

    def build(cls, sub, where, key_map=None):
        sd = _require_mapping(sub, where)
        fields = {f for f in cls.__dataclass_fields__}
        allowed = set(fields) | set(key_map or {})
        _reject_unknown(sd, allowed, where)
        kwargs = {}
        for k, v in sd.items():
            name = (key_map or {}).get(k, k)
            if v is None and name in ("mtry", "max_depth"):
                kwargs[name] = None
            elif name in ("n_trees", "n_rounds", "depth", "max_depth", "mtry", "min_node", "min_obs_node"):
                kwargs[name] = _as_int(v, f"{where}.{k}")
            elif name == "bootstrap":
                if not isinstance(v, bool):
                    raise ConfigError(f"{where}.{k} must be true or false")
                kwargs[name] = v
            else:
                kwargs[name] = _as_float(v, f"{where}.{k}")
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    forest = build(ForestParams, d.get("forest"), "hyperparams.forest")
    gbm = build(GBMParams, d.get("gbm"), "hyperparams.gbm")
    xgb = build(XGBParams, d.get("xgb"), "hyperparams.xgb", key_map={"lambda": "lam"})
    return forest, gbm, xgb


def parse_config(doc, base_dir: str = ".") -> RunConfig:
    d = _require_mapping(doc, "configuration")
    top_keys = (
        "inputs",
        "synth",
        "window",
        "neighbors",
        "day_offset",
        "imerg_regrid",
        "predictor_sets",
        "algorithms",
        "cv",
        "reference_mode",
        "output_dir",
        "hyperparams",
    )
    _reject_unknown(d, top_keys, "configuration")

    cfg = RunConfig()
    if "inputs" in d and "synth" in d:
        raise ConfigError("give either inputs or synth, not both")
    if "inputs" in d:
        cfg.inputs = _parse_inputs(d["inputs"], base_dir)
    if "synth" in d:
        cfg.synth = parse_synth_spec(d["synth"])

    if "window" in d:
        w = _require_mapping(d["window"], "window")
        _reject_unknown(w, ("start", "end"), "window")
        start = _as_date(w["start"], "window.start") if "start" in w else _DEFAULT_WINDOW[0]
        end = _as_date(w["end"], "window.end") if "end" in w else _DEFAULT_WINDOW[1]
        if start > end:
            raise ConfigError(f"window.start {start} is after window.end {end}")
        cfg.window = (start, end)

    if "neighbors" in d:
        k = _as_int(d["neighbors"], "neighbors")
        if k != 4:
            raise ConfigError(
                "neighbors must be 4: the sample schema names exactly four "
                "values and four distances per product"
            )
        cfg.neighbors = k
    if "day_offset" in d:
        cfg.day_offset = _as_int(d["day_offset"], "day_offset")

    if "imerg_regrid" in d:
        v = d["imerg_regrid"]
        if isinstance(v, str):
            cfg.imerg_regrid = _as_choice(v, ("persiann", "native"), "imerg_regrid")
        else:
            cfg.imerg_regrid = _parse_grid(v, "imerg_regrid")

    if "predictor_sets" in d:
        cfg.predictor_sets = _as_str_list(d["predictor_sets"], set(PREDICTOR_SETS), "predictor_sets")
    if "algorithms" in d:
        cfg.algorithms = _as_str_list(d["algorithms"], set(ALGORITHMS), "algorithms")

    if "cv" in d:
        cv = _require_mapping(d["cv"], "cv")
        _reject_unknown(cv, ("seed", "folds", "split_unit"), "cv")
        if "seed" in cv:
            cfg.cv_seed = _as_int(cv["seed"], "cv.seed")
        if "folds" in cv:
            cfg.n_folds = _as_int(cv["folds"], "cv.folds")
            if cfg.n_folds < 2:
                raise ConfigError("cv.folds must be at least 2")
        if "split_unit" in cv:
            cfg.split_unit = _as_choice(cv["split_unit"], ("station", "sample"), "cv.split_unit")

    if "reference_mode" in d:
        cfg.reference_mode = _as_choice(
            d["reference_mode"], ("same-set", "set1", "both"), "reference_mode"
        )
    if "output_dir" in d:
        if not isinstance(d["output_dir"], str) or not d["output_dir"]:
            raise ConfigError("output_dir must be a non-empty path string")
        cfg.output_dir = os.path.join(base_dir, d["output_dir"])

    if "hyperparams" in d:
        cfg.forest, cfg.gbm, cfg.xgb = _parse_hyperparams(d["hyperparams"])
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))
