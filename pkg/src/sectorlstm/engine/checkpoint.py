"""Versioned model checkpoint files.

A checkpoint is a zip archive holding ``meta.json`` (format tag, version,
model config, scaler, seed and the shape of every tensor) and one ``.npy``
member per parameter tensor, stored as little-endian float64. Archive
members carry a fixed timestamp, so identical models give identical bytes.
"""

from __future__ import annotations

import io
import json
import zipfile
import zlib
from pathlib import Path

import numpy as np

from ..dataset import ScalerParams
from ..errors import CheckpointError
from .model import ModelConfig, ModelParams, expected_shapes

FORMAT = "sectorlstm-checkpoint"
VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _member(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    return info


def checkpoint_bytes(params: ModelParams, scaler: ScalerParams) -> bytes:
    tensors = params.tensors()
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "config": params.config.to_dict(),
        "scaler": scaler.to_dict(),
        "seed": params.config.seed,
        "tensors": {k: list(v.shape) for k, v in tensors.items()},
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        zf.writestr(_member("meta.json"), json.dumps(meta, sort_keys=True, indent=1))
        for name, arr in tensors.items():
            npy = io.BytesIO()
            np.lib.format.write_array(npy, np.ascontiguousarray(arr, dtype="<f8"), allow_pickle=False)
            zf.writestr(_member(f"{name}.npy"), npy.getvalue())
    return buf.getvalue()


def save_checkpoint(path: str | Path, params: ModelParams, scaler: ScalerParams) -> Path:
    path = Path(path)
    path.write_bytes(checkpoint_bytes(params, scaler))
    return path


def load_checkpoint(path: str | Path) -> tuple[ModelParams, ScalerParams]:
    """Read a checkpoint, rejecting unknown versions and inconsistent shapes."""
    try:
        zf = zipfile.ZipFile(Path(path))
    except (OSError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"{path}: not a checkpoint archive: {exc}") from exc
    with zf:
        try:
            meta = json.loads(zf.read("meta.json"))
        except (KeyError, ValueError, zipfile.BadZipFile, zlib.error) as exc:
            raise CheckpointError(f"{path}: missing or unreadable meta.json") from exc
        if meta.get("format") != FORMAT or meta.get("version") != VERSION:
            raise CheckpointError(f"{path}: unsupported format {meta.get('format')!r} v{meta.get('version')}")
        try:
            config = ModelConfig.from_dict(meta["config"])
            scaler = ScalerParams.from_dict(meta["scaler"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"{path}: invalid config or scaler: {exc}") from exc
        expected = expected_shapes(config)
        declared = {k: tuple(v) for k, v in meta.get("tensors", {}).items()}
        if declared != expected:
            raise CheckpointError(f"{path}: declared tensor shapes do not match config")
        if len(scaler.features) != config.feature_count:
            raise CheckpointError(f"{path}: scaler has {len(scaler.features)} features, config {config.feature_count}")
        tensors = {}
        for name, shape in expected.items():
            try:
                arr = np.lib.format.read_array(io.BytesIO(zf.read(f"{name}.npy")), allow_pickle=False)
            except (KeyError, ValueError, zipfile.BadZipFile, zlib.error) as exc:
                raise CheckpointError(f"{path}: tensor {name} missing or unreadable") from exc
            if arr.shape != shape or arr.dtype != np.dtype("<f8"):
                raise CheckpointError(f"{path}: tensor {name} has shape {arr.shape} dtype {arr.dtype}, expected {shape} <f8")
            if not np.all(np.isfinite(arr)):
                raise CheckpointError(f"{path}: tensor {name} holds non-finite values")
            tensors[name] = arr
    return ModelParams.from_tensors(config, tensors), scaler
