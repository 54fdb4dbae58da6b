"""Model persistence.

Layout of a model file (all integers little-endian):

    bytes 0..3   magic ``PMMF``
    bytes 4..5   format version, u16 (currently 1)
    bytes 6..9   header length in bytes, u32
    header       UTF-8 JSON: model kind, hyperparameters, array counts
    payload      raw little-endian arrays in the order the header implies

Linear payload: intercept f64, then coefficients f64[n_features].
Ensemble payload: per tree a u32 node count followed by the node arrays
feature i32, threshold f64, left i32, right i32, value f64, gain f64;
after the last tree, the training MSE path f64 (boosting kinds only).
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from precipmerge.errors import ParseError
from precipmerge.learners.boosting import GBMModel, XGBModel
from precipmerge.learners.forest import ForestModel, ForestParams
from precipmerge.learners.linear import LinearModel
from precipmerge.learners.tree import RegressionTree

_MAGIC = b"PMMF"
_VERSION = 1
_I4 = np.dtype("<i4")
_F8 = np.dtype("<f8")


def _tree_bytes(tree: RegressionTree) -> bytes:
    parts = [struct.pack("<I", tree.n_nodes)]
    parts.append(np.ascontiguousarray(tree.feature, dtype=_I4).tobytes())
    parts.append(np.ascontiguousarray(tree.threshold, dtype=_F8).tobytes())
    parts.append(np.ascontiguousarray(tree.left, dtype=_I4).tobytes())
    parts.append(np.ascontiguousarray(tree.right, dtype=_I4).tobytes())
    parts.append(np.ascontiguousarray(tree.value, dtype=_F8).tobytes())
    parts.append(np.ascontiguousarray(tree.gain, dtype=_F8).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes, offset: int, path):
        self.buf = buf
        self.off = offset
        self.path = path

    def take(self, count: int) -> bytes:
        if self.off + count > len(self.buf):
            raise ParseError("model file truncated", path=self.path)
        out = self.buf[self.off : self.off + count]
        self.off += count
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def array(self, dtype: np.dtype, count: int) -> np.ndarray:
        raw = self.take(dtype.itemsize * count)
        return np.frombuffer(raw, dtype=dtype).astype(dtype.newbyteorder("=")).copy()

    def tree(self) -> RegressionTree:
        n = self.u32()
        return RegressionTree(
            feature=self.array(_I4, n),
            threshold=self.array(_F8, n),
            left=self.array(_I4, n),
            right=self.array(_I4, n),
            value=self.array(_F8, n),
            gain=self.array(_F8, n),
        )


def _header_for(model) -> dict:
    if isinstance(model, LinearModel):
        return {"kind": "linear", "n_features": model.n_features}
    if isinstance(model, ForestModel):
        return {
            "kind": "forest",
            "n_features": model.n_features,
            "n_trees": len(model.trees),
            "seed": model.seed,
            "params": dataclasses.asdict(model.params),
        }
    if isinstance(model, GBMModel):
        return {
            "kind": "gbm",
            "n_features": model.n_features,
            "n_trees": len(model.trees),
            "seed": model.seed,
            "init_value": model.init_value,
            "shrinkage": model.shrinkage,
        }
    if isinstance(model, XGBModel):
        return {
            "kind": "xgb",
            "n_features": model.n_features,
            "n_trees": len(model.trees),
            "base_score": model.base_score,
            "eta": model.eta,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def save_model(model, path) -> None:
    header = json.dumps(_header_for(model), sort_keys=True).encode()
    parts = [_MAGIC, struct.pack("<H", _VERSION), struct.pack("<I", len(header)), header]
    if isinstance(model, LinearModel):
        parts.append(struct.pack("<d", model.intercept))
        parts.append(np.ascontiguousarray(model.coef, dtype=_F8).tobytes())
    else:
        parts.extend(_tree_bytes(t) for t in model.trees)
        if isinstance(model, (GBMModel, XGBModel)):
            parts.append(np.ascontiguousarray(model.train_mse, dtype=_F8).tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def load_model(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 10 or buf[:4] != _MAGIC:
        raise ParseError("not a model file (bad magic)", path=path)
    (version,) = struct.unpack("<H", buf[4:6])
    if version != _VERSION:
        raise ParseError(f"unsupported model format version {version}", path=path)
    (hlen,) = struct.unpack("<I", buf[6:10])
    rd = _Reader(buf, 10, path)
    try:
        head = json.loads(rd.take(hlen).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad model header: {exc}", path=path) from None
    kind = head.get("kind")
    if kind == "linear":
        intercept = struct.unpack("<d", rd.take(8))[0]
        coef = rd.array(_F8, head["n_features"])
        return LinearModel(intercept=intercept, coef=coef)
    if kind == "forest":
        trees = [rd.tree() for _ in range(head["n_trees"])]
        return ForestModel(
            trees=trees,
            params=ForestParams(**head["params"]),
            n_features=head["n_features"],
            seed=head["seed"],
        )
    if kind == "gbm":
        trees = [rd.tree() for _ in range(head["n_trees"])]
        mse = rd.array(_F8, head["n_trees"] + 1)
        return GBMModel(
            init_value=head["init_value"],
            shrinkage=head["shrinkage"],
            trees=trees,
            n_features=head["n_features"],
            seed=head["seed"],
            train_mse=mse,
        )
    if kind == "xgb":
        trees = [rd.tree() for _ in range(head["n_trees"])]
        mse = rd.array(_F8, head["n_trees"] + 1)
        return XGBModel(
            base_score=head["base_score"],
            eta=head["eta"],
            trees=trees,
            n_features=head["n_features"],
            train_mse=mse,
        )
    raise ParseError(f"unknown model kind {kind!r}", path=path)


def _dump_tree(tree: RegressionTree, out: list[str], feature_names) -> None:
    def name(f):
        return feature_names[f] if feature_names is not None else f"x{f}"

    for i in range(tree.n_nodes):
        if tree.feature[i] < 0:
            out.append(f"    node {i}: leaf value {tree.value[i]!r}")
        else:
            out.append(
                f"    node {i}: {name(tree.feature[i])} <= {tree.threshold[i]!r}"
                f" gain {tree.gain[i]:.6g} -> ({tree.left[i]}, {tree.right[i]})"
            )


def dump_model_text(model, feature_names=None, max_trees: int | None = 3) -> str:
    """Readable summary; full node listing for the first ``max_trees``."""
    out = []
    if isinstance(model, LinearModel):
        out.append(f"linear: {model.n_features} features")
        out.append(f"  intercept {model.intercept!r}")
        for j, c in enumerate(model.coef):
            label = feature_names[j] if feature_names is not None else f"x{j}"
            out.append(f"  {label} {c!r}")
        return "\n".join(out) + "\n"
    head = _header_for(model)
    kind = head.pop("kind")
    out.append(f"{kind}: " + ", ".join(f"{k}={v}" for k, v in sorted(head.items())))
    shown = len(model.trees) if max_trees is None else min(max_trees, len(model.trees))
    for t in range(shown):
        tree = model.trees[t]
        out.append(f"  tree {t}: {tree.n_nodes} nodes, {tree.n_leaves} leaves")
        _dump_tree(tree, out, feature_names)
    if shown < len(model.trees):
        out.append(f"  ... {len(model.trees) - shown} more trees")
    return "\n".join(out) + "\n"
