"""``model.json`` manifest + ``weights.f64le`` flat tensor dump."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import RUNNING_ORDER, TENSOR_ORDER, ModelParams

FORMAT = "rislstm-model"
VERSION = 1


def save_model(params: ModelParams, directory, extra: dict | None = None) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "d_in": params.d_in,
        "hidden": params.hidden,
        "dense": list(params.dense),
        "n_out": params.n_out,
        "head": params.head,
        "bn_momentum": params.bn_momentum,
        "bn_ready": params.bn_ready,
        "tensors": [{"name": k, "shape": list(params.tensors[k].shape)} for k in TENSOR_ORDER],
        # python floats serialize with repr, so these survive the JSON round trip exactly
        "running": {k: params.running[k].tolist() for k in RUNNING_ORDER},
        "input_mean": None if params.input_mean is None else params.input_mean.tolist(),
        "input_std": None if params.input_std is None else params.input_std.tolist(),
        "extra": extra or {},
    }
    (directory / "model.json").write_text(json.dumps(manifest, indent=1))
    flat = np.concatenate([params.tensors[k].ravel() for k in TENSOR_ORDER]).astype("<f8")
    (directory / "weights.f64le").write_bytes(flat.tobytes())


def load_model(directory) -> tuple[ModelParams, dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "model.json").read_text())
    if manifest.get("format") != FORMAT:
        raise ValueError(f"{directory}: not a model manifest")
    if manifest.get("version") != VERSION:
        raise ValueError(f"{directory}: unsupported model version {manifest.get('version')}")
    names = [e["name"] for e in manifest["tensors"]]
    if tuple(names) != TENSOR_ORDER:
        raise ValueError(f"{directory}: unexpected tensor order {names}")
    raw = np.frombuffer((directory / "weights.f64le").read_bytes(), dtype="<f8")
    expected = sum(int(np.prod(e["shape"])) for e in manifest["tensors"])
    if raw.size != expected:
        raise ValueError(f"{directory}: weights hold {raw.size} values, manifest expects {expected}")
    tensors, pos = {}, 0
    for e in manifest["tensors"]:
        size = int(np.prod(e["shape"]))
        tensors[e["name"]] = raw[pos : pos + size].reshape(e["shape"]).astype(float)
        pos += size

    def arr(v):
        return None if v is None else np.array(v, dtype=float)

    params = ModelParams(
        d_in=manifest["d_in"],
        hidden=manifest["hidden"],
        dense=tuple(manifest["dense"]),
        n_out=manifest["n_out"],
        head=manifest["head"],
        tensors=tensors,
        running={k: arr(manifest["running"][k]) for k in RUNNING_ORDER},
        bn_momentum=manifest["bn_momentum"],
        bn_ready=manifest["bn_ready"],
        input_mean=arr(manifest["input_mean"]),
        input_std=arr(manifest["input_std"]),
    )
    return params, manifest["extra"]
